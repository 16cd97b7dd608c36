//! Monetary risk measures on discrete distributions.
//!
//! Sign convention: a position is a capital amount (positive is good) and a
//! risk value is the cash that has to be added to make it acceptable, so
//! `r(eta + m) = r(eta) - m` and `r(eta) <= 0` means acceptable.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{RandomVariable, RandomVector, ScenarioSpace};

/// Risk values at or below this are treated as acceptable.
pub const ACCEPTABILITY_TOLERANCE: f64 = 1e-9;

/// Slack used when comparing cumulative weights against a level.
const LEVEL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskMeasure {
    /// `-inf{x : P(eta <= x) >= alpha}`.
    ValueAtRisk { alpha: f64 },
    /// Tail average of the lower `alpha` fraction, splitting atoms exactly.
    ExpectedShortfall { alpha: f64 },
    /// `theta^{-1} log E[exp(-theta eta)]`.
    Entropic { theta: f64 },
    NegExpectation,
}

impl RiskMeasure {
    pub fn value_at_risk(alpha: f64) -> Result<Self> {
        let m = Self::ValueAtRisk { alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn expected_shortfall(alpha: f64) -> Result<Self> {
        let m = Self::ExpectedShortfall { alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn entropic(theta: f64) -> Result<Self> {
        let m = Self::Entropic { theta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::ValueAtRisk { alpha } | Self::ExpectedShortfall { alpha } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "probability level {alpha} must lie in (0, 1)"
                    )));
                }
            }
            Self::Entropic { theta } => {
                if !(theta > 0.0 && theta.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "risk aversion {theta} must be positive and finite"
                    )));
                }
            }
            Self::NegExpectation => {}
        }
        Ok(())
    }

    /// Convex, positively homogeneous and subadditive.
    pub fn is_coherent(&self) -> bool {
        matches!(self, Self::ExpectedShortfall { .. } | Self::NegExpectation)
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, Self::ValueAtRisk { .. })
    }

    pub fn is_positively_homogeneous(&self) -> bool {
        !matches!(self, Self::Entropic { .. })
    }

    /// Representable by linear constraints (through auxiliary variables).
    pub fn is_lp_representable(&self) -> bool {
        self.is_coherent()
    }

    pub fn evaluate(&self, eta: &RandomVariable) -> f64 {
        self.evaluate_values(eta.values(), eta.space())
    }

    /// Evaluates on raw per-scenario values of the given space.
    pub fn evaluate_values(&self, values: &[f64], space: &ScenarioSpace) -> f64 {
        debug_assert_eq!(values.len(), space.len());
        match *self {
            Self::ValueAtRisk { alpha } => {
                if space.is_equiprobable() {
                    var_equiprobable(values, alpha)
                } else {
                    var_weighted(values, space.probabilities(), alpha)
                }
            }
            Self::ExpectedShortfall { alpha } => {
                if space.is_equiprobable() {
                    es_equiprobable(values, alpha)
                } else {
                    es_weighted(values, space.probabilities(), alpha)
                }
            }
            Self::Entropic { theta } => entropic(values, space.probabilities(), theta),
            Self::NegExpectation => -values
                .iter()
                .zip(space.probabilities())
                .map(|(v, p)| v * p)
                .sum::<f64>(),
        }
    }
}

fn var_equiprobable(values: &[f64], alpha: f64) -> f64 {
    let n = values.len();
    // smallest k with k/n >= alpha
    let k = ((alpha * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let mut buf = values.to_vec();
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    -*kth
}

fn sorted_pairs(values: &[f64], probabilities: &[f64]) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(probabilities.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

fn var_weighted(values: &[f64], probabilities: &[f64], alpha: f64) -> f64 {
    let pairs = sorted_pairs(values, probabilities);
    let mut cumulative = 0.0;
    for (v, p) in &pairs {
        cumulative += p;
        if cumulative >= alpha - LEVEL_TOLERANCE {
            return -v;
        }
    }
    -pairs[pairs.len() - 1].0
}

fn es_equiprobable(values: &[f64], alpha: f64) -> f64 {
    let n = values.len();
    let scaled = alpha * n as f64;
    let full = ((scaled + 1e-9).floor() as usize).min(n);
    let frac = (scaled - full as f64).max(0.0);
    let mut buf = values.to_vec();
    let mut tail = 0.0;
    if full < n {
        let (lower, kth, _) = buf.select_nth_unstable_by(full, f64::total_cmp);
        tail += lower.iter().sum::<f64>();
        tail += frac * *kth;
    } else {
        tail += buf.iter().sum::<f64>();
    }
    -tail / (n as f64 * alpha)
}

fn es_weighted(values: &[f64], probabilities: &[f64], alpha: f64) -> f64 {
    let pairs = sorted_pairs(values, probabilities);
    let mut remaining = alpha;
    let mut tail = 0.0;
    for (v, p) in &pairs {
        if remaining <= 0.0 {
            break;
        }
        let take = p.min(remaining);
        tail += take * v;
        remaining -= take;
    }
    -tail / alpha
}

fn entropic(values: &[f64], probabilities: &[f64], theta: f64) -> f64 {
    let shift = values
        .iter()
        .map(|v| -theta * v)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values
        .iter()
        .zip(probabilities)
        .map(|(v, p)| p * (-theta * v - shift).exp())
        .sum();
    (shift + sum.ln()) / theta
}

/// One univariate measure per agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorRisk {
    components: Vec<RiskMeasure>,
}

impl VectorRisk {
    pub fn new(components: Vec<RiskMeasure>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "a vector risk measure needs at least one component".into(),
            ));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Self { components })
    }

    pub fn uniform(measure: RiskMeasure, d: usize) -> Result<Self> {
        Self::new(vec![measure; d])
    }

    pub fn components(&self) -> &[RiskMeasure] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> RiskMeasure {
        self.components[i]
    }

    /// The common component when all agents use the same measure.
    pub fn identical(&self) -> Option<RiskMeasure> {
        let first = self.components[0];
        self.components.iter().all(|&c| c == first).then_some(first)
    }

    pub fn all_coherent(&self) -> bool {
        self.components.iter().all(RiskMeasure::is_coherent)
    }

    pub fn all_lp_representable(&self) -> bool {
        self.components.iter().all(RiskMeasure::is_lp_representable)
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: d,
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, c: &RandomVector) -> Result<Vec<f64>> {
        self.check_dim(c.dim())?;
        Ok(self
            .components
            .iter()
            .enumerate()
            .map(|(i, m)| m.evaluate_values(&c.column_values(i), c.space()))
            .collect())
    }

    pub fn is_acceptable(&self, c: &RandomVector) -> Result<bool> {
        Ok(self
            .evaluate(c)?
            .iter()
            .all(|&r| r <= ACCEPTABILITY_TOLERANCE))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(values: Vec<f64>, probabilities: Vec<f64>) -> RandomVariable {
        RandomVariable::new(ScenarioSpace::new(probabilities).unwrap(), values).unwrap()
    }

    fn equiprobable(values: Vec<f64>) -> RandomVariable {
        let n = values.len();
        RandomVariable::new(ScenarioSpace::uniform(n).unwrap(), values).unwrap()
    }

    #[test]
    fn constants_map_to_their_negation() {
        let eta = equiprobable(vec![5.0; 7]);
        for m in [
            RiskMeasure::value_at_risk(0.3).unwrap(),
            RiskMeasure::expected_shortfall(0.01).unwrap(),
            RiskMeasure::entropic(2.0).unwrap(),
            RiskMeasure::NegExpectation,
        ] {
            assert!((m.evaluate(&eta) + 5.0).abs() < 1e-12, "{m:?}");
        }
    }

    #[test]
    fn var_ignores_small_loss_event() {
        let eta = var(vec![-1.0, 0.0], vec![0.075, 0.925]);
        assert_eq!(RiskMeasure::value_at_risk(0.1).unwrap().evaluate(&eta), 0.0);
    }

    #[test]
    fn es_splits_tail_atoms() {
        let eta = var(vec![-10.0, -2.0, 0.0], vec![0.005, 0.005, 0.99]);
        let es = RiskMeasure::expected_shortfall(0.01).unwrap().evaluate(&eta);
        let oracle = (0.005 * 10.0 + 0.005 * 2.0) / 0.01;
        assert!((es - oracle).abs() < 1e-12);
        assert!((es - 6.0).abs() < 1e-12);
    }

    #[test]
    fn var_scan_on_integer_grid() {
        let eta = equiprobable((1..=100).map(f64::from).collect());
        let alpha = 0.05;
        // brute force: smallest support point with cumulative mass >= alpha
        let mut oracle = f64::NAN;
        for x in 1..=100 {
            if x as f64 / 100.0 >= alpha {
                oracle = -(x as f64);
                break;
            }
        }
        assert_eq!(RiskMeasure::value_at_risk(alpha).unwrap().evaluate(&eta), oracle);
        assert_eq!(oracle, -5.0);
    }

    #[test]
    fn equiprobable_and_weighted_paths_agree() {
        let values: Vec<f64> = (0..37).map(|k| ((k * 17) % 37) as f64 - 11.5).collect();
        let uniform = equiprobable(values.clone());
        // same weights, but built so the equiprobable flag is off
        let mut probabilities = vec![1.0 / 37.0; 37];
        probabilities[0] += 1e-13;
        probabilities[1] -= 1e-13;
        let weighted = var(values, probabilities);
        assert!(!weighted.space().is_equiprobable());
        for alpha in [0.01, 0.05, 0.1, 0.27, 0.5, 0.9] {
            for m in [
                RiskMeasure::value_at_risk(alpha).unwrap(),
                RiskMeasure::expected_shortfall(alpha).unwrap(),
            ] {
                let a = m.evaluate(&uniform);
                let b = m.evaluate(&weighted);
                assert!((a - b).abs() < 1e-9, "{m:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn entropic_is_stable_for_large_losses() {
        let eta = equiprobable(vec![-800.0, 0.0]);
        let r = RiskMeasure::entropic(1.0).unwrap().evaluate(&eta);
        assert!((r - (800.0 - 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(RiskMeasure::value_at_risk(0.0).is_err());
        assert!(RiskMeasure::expected_shortfall(1.0).is_err());
        assert!(RiskMeasure::entropic(-1.0).is_err());
        assert!(VectorRisk::new(vec![]).is_err());
    }

    #[test]
    fn vector_evaluation_is_componentwise() {
        let space = ScenarioSpace::uniform(3).unwrap();
        let c = RandomVector::from_rows(space, &vec![vec![1.0, 2.0]; 3]).unwrap();
        let spec = VectorRisk::uniform(RiskMeasure::expected_shortfall(0.2).unwrap(), 2).unwrap();
        assert_eq!(spec.evaluate(&c).unwrap(), vec![-1.0, -2.0]);
        assert!(spec.is_acceptable(&c).unwrap());
        let bad = RandomVector::from_rows(
            ScenarioSpace::uniform(3).unwrap(),
            &vec![vec![1.0, -1.0]; 3],
        )
        .unwrap();
        assert!(!spec.is_acceptable(&bad).unwrap());
        assert!(spec.evaluate(&c.shift(&[0.0, 0.0]).unwrap()).is_ok());
        let three = VectorRisk::uniform(RiskMeasure::NegExpectation, 3).unwrap();
        assert!(matches!(three.evaluate(&c), Err(Error::DimensionMismatch { .. })));
    }
}
