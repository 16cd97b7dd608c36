//! Acceptability of the attainable set `X(C)`: does some selection `ξ ∈ X(C)`
//! have all components acceptable?
//!
//! Two routes are available. For expected shortfall / negative expectation
//! and a polyhedral family the question is a linear program and the answer is
//! conclusive. Otherwise a handful of canonical candidate selections is
//! tested; success is conclusive, failure only means no witness was found.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::program::{self, Objective};
use crate::risk::{RiskMeasure, VectorRisk, ACCEPTABILITY_TOLERANCE};
use crate::scenario::RandomVector;
use crate::transfer_sets::{ode, FamilyKind, TransferFamily};

/// Largest scenario count sent to the linear-programming route by default.
pub const DEFAULT_MAX_LP_SCENARIOS: usize = 250;

/// Verdict tolerance on the optimal max-excess of the linear program.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-7;

/// A random vector lying in `X(C)`, with a per-scenario membership audit.
#[derive(Debug, Clone)]
pub struct Selection {
    pub values: RandomVector,
    pub certificate: Vec<bool>,
}

impl Selection {
    /// Audits `values(ω) - C(ω) ∈ I(C(ω))` scenario by scenario.
    pub fn audited(c: &RandomVector, family: &TransferFamily, values: RandomVector) -> Result<Self> {
        if values.dim() != c.dim() || values.scenarios() != c.scenarios() {
            return Err(Error::DimensionMismatch {
                expected: c.values().len(),
                found: values.values().len(),
            });
        }
        let mut certificate = Vec::with_capacity(c.scenarios());
        for (row, xi) in c.rows().zip(values.rows()) {
            let y: Vec<f64> = xi.iter().zip(row).map(|(a, b)| a - b).collect();
            certificate.push(family.contains(row, &y)?);
        }
        Ok(Self { values, certificate })
    }

    pub fn is_admissible(&self) -> bool {
        self.certificate.iter().all(|&ok| ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Decided by a closed-form characterisation.
    ClosedForm,
    LinearProgram,
    /// Decided by testing candidate selections.
    Candidates,
}

#[derive(Debug, Clone)]
pub struct Acceptability {
    pub feasible: bool,
    /// False when the candidate route failed to find a witness: the set may
    /// still be acceptable.
    pub conclusive: bool,
    pub method: Method,
    pub witness: Option<Selection>,
    /// Component risks of the witness (or of the best candidate tried).
    pub risks: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_lp_scenarios: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_lp_scenarios: DEFAULT_MAX_LP_SCENARIOS }
    }
}

/// Every agent receives `D / d`. Only admissible without transfer limits.
pub fn proportional_selection(c: &RandomVector, family: &TransferFamily) -> Result<Selection> {
    if !allows_equal_split(family) {
        return Err(Error::FamilyMismatch(format!(
            "equal splitting of the aggregate needs unconstrained transfers, not {}",
            family.name()
        )));
    }
    family.check_dim(c.dim())?;
    let d = c.dim();
    let values = c.map_rows(|_, row| {
        let share = row.iter().sum::<f64>() / d as f64;
        vec![share; d]
    })?;
    Selection::audited(c, family, values)
}

pub(crate) fn allows_equal_split(family: &TransferFamily) -> bool {
    match family.kind {
        FamilyKind::Unconstrained => true,
        FamilyKind::ProportionalCost { pi } => pi == 1.0,
        FamilyKind::FixedCost { cost } => cost == 0.0,
        _ => false,
    }
}

/// The Pareto point of `X(y)` whose coordinate gap `x_1 - x_2` is closest to
/// `offset` (the diagonal when `offset = 0`). `y` is the scenario capital.
pub fn nearest_line_point(family: &TransferFamily, y: [f64; 2], offset: f64) -> [f64; 2] {
    if let Some((lo, hi)) = family.signed_transfer_bounds(&y) {
        let t = (0.5 * (y[0] - y[1] - offset)).clamp(lo, hi);
        return [y[0] - t, y[1] + t];
    }
    let gap = y[0] - y[1] - offset;
    match family.kind {
        FamilyKind::ProportionalCost { pi } => {
            if pi == 0.0 || gap == 0.0 {
                y
            } else if gap > 0.0 {
                let g = gap / (1.0 + pi);
                [y[0] - g, y[1] + pi * g]
            } else {
                let g = -gap / (1.0 + pi);
                [y[0] + pi * g, y[1] - g]
            }
        }
        FamilyKind::FixedCost { cost } => {
            let total = y[0] + y[1] - cost;
            let x1 = 0.5 * (total + offset);
            let pareto = x1 < y[0] - cost || x1 > y[0];
            if pareto && gap != 0.0 {
                [x1, total - x1]
            } else {
                y
            }
        }
        FamilyKind::Fungibility { thresholds, exponent } => {
            let e = family.effective_capital(&y);
            let shift = [y[0] - e[0], y[1] - e[1]];
            let target = offset - shift[0] + shift[1];
            let g0 = e[0] - e[1];
            let base = if g0 < target && e[1] > 0.0 {
                // agent 2 gives; the gap shrinks as its holding s grows
                let start = e[1];
                let s = ode::solve_decreasing(start, target, |s| {
                    e[0] + ode::gain(start, s, thresholds[1], exponent) - s
                });
                [e[0] + ode::gain(start, s, thresholds[1], exponent), s]
            } else if g0 > target && e[0] > 0.0 {
                let start = e[0];
                let s = ode::solve_decreasing(start, -target, |s| {
                    e[1] + ode::gain(start, s, thresholds[0], exponent) - s
                });
                [s, e[1] + ode::gain(start, s, thresholds[0], exponent)]
            } else {
                [e[0], e[1]]
            };
            [base[0] + shift[0], base[1] + shift[1]]
        }
        _ => unreachable!("families with signed bounds handled above"),
    }
}

/// Columns of the scenario-wise nearest-to-line selection of `X(C + x)`.
pub(crate) fn nearest_line_columns(
    c: &RandomVector,
    family: &TransferFamily,
    x: [f64; 2],
    offset: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = c.scenarios();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for row in c.rows() {
        let p = nearest_line_point(family, [row[0] + x[0], row[1] + x[1]], offset);
        a.push(p[0]);
        b.push(p[1]);
    }
    (a, b)
}

/// Scenario-wise point of the Pareto boundary of `X(C + x)` closest to the
/// diagonal. The returned selection is audited against `C + x`.
pub fn nearest_diagonal_selection(c: &RandomVector, family: &TransferFamily, x: [f64; 2]) -> Result<Selection> {
    if c.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            operation: "nearest-diagonal selection",
            required: "two agents",
            found: c.dim(),
        });
    }
    family.check_dim(2)?;
    let shifted = c.shift(&x)?;
    let values = shifted.map_rows(|_, row| nearest_line_point(family, [row[0], row[1]], 0.0).to_vec())?;
    Selection::audited(&shifted, family, values)
}

/// Is `X(C)` acceptable?
pub fn acceptable_exists(c: &RandomVector, family: &TransferFamily, spec: &VectorRisk) -> Result<Acceptability> {
    acceptable_with_thresholds(c, family, spec, &vec![0.0; c.dim()], SolverOptions::default())
}

/// Is `a` in the selection risk set, i.e. is `X(C) + a` acceptable?
pub fn selection_risk_membership(
    c: &RandomVector,
    family: &TransferFamily,
    spec: &VectorRisk,
    a: &[f64],
) -> Result<bool> {
    Ok(acceptable_with_thresholds(c, family, spec, a, SolverOptions::default())?.feasible)
}

/// Is there `ξ ∈ X(C)` with `r(ξ) <= 0` and `r(ξ) <= r(C)`?
pub fn absolute_acceptability(c: &RandomVector, family: &TransferFamily, spec: &VectorRisk) -> Result<Acceptability> {
    let own = spec.evaluate(c)?;
    let caps: Vec<f64> = own.iter().map(|&r| r.min(0.0)).collect();
    acceptable_with_thresholds(c, family, spec, &caps, SolverOptions::default())
}

/// Whether the linear-programming route applies.
pub fn exact_path_available(c: &RandomVector, family: &TransferFamily, spec: &VectorRisk, opts: &SolverOptions) -> bool {
    spec.all_lp_representable() && family.is_polyhedral() && c.scenarios() <= opts.max_lp_scenarios
}

/// Looks for `ξ ∈ X(C)` with `r_i(ξ_i) <= a_i` for every agent.
pub fn acceptable_with_thresholds(
    c: &RandomVector,
    family: &TransferFamily,
    spec: &VectorRisk,
    a: &[f64],
    opts: SolverOptions,
) -> Result<Acceptability> {
    spec.check_dim(c.dim())?;
    family.check_dim(c.dim())?;
    if a.len() != c.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), found: a.len() });
    }
    let d = c.dim();
    let within = |risks: &[f64]| risks.iter().zip(a).all(|(r, t)| *r <= t + ACCEPTABILITY_TOLERANCE);

    // stand-alone positions: conclusive when no transfers are possible
    let own = spec.evaluate(c)?;
    if within(&own) {
        return Ok(Acceptability {
            feasible: true,
            conclusive: true,
            method: Method::ClosedForm,
            witness: Some(Selection::audited(c, family, c.clone())?),
            risks: own,
        });
    }
    if family.kind == FamilyKind::Granular {
        return Ok(Acceptability {
            feasible: false,
            conclusive: true,
            method: Method::ClosedForm,
            witness: None,
            risks: own,
        });
    }

    // free redistribution with identical convex components
    if allows_equal_split(family) {
        if let Some(m) = spec.identical().filter(RiskMeasure::is_convex) {
            let mean_a = a.iter().sum::<f64>() / d as f64;
            let values = c.map_rows(|_, row| {
                let share = row.iter().sum::<f64>() / d as f64;
                // r_i(share + k) = r(share) - k, so k_i = mean_a - a_i levels the excess
                a.iter().map(|ai| share + mean_a - ai).collect()
            })?;
            let witness = Selection::audited(c, family, values)?;
            let risks = spec.evaluate(&witness.values)?;
            let share = c.aggregate().scale(1.0 / d as f64)?;
            let feasible = m.evaluate(&share) <= mean_a + ACCEPTABILITY_TOLERANCE;
            return Ok(Acceptability {
                feasible,
                conclusive: true,
                method: Method::ClosedForm,
                witness: feasible.then_some(witness),
                risks,
            });
        }
    }

    if exact_path_available(c, family, spec, &opts) {
        let encoding = program::encoding_for(c, family)?;
        let outcome = program::solve(c, spec.components(), &encoding, Objective::MinMaxExcess(a))?
            .ok_or_else(|| Error::Solver("selection program reported infeasible".into()))?;
        let feasible = outcome.value <= FEASIBILITY_TOLERANCE;
        let witness = Selection::audited(c, family, outcome.xi)?;
        return Ok(Acceptability {
            feasible,
            conclusive: true,
            method: Method::LinearProgram,
            witness: feasible.then_some(witness),
            risks: outcome.risks,
        });
    }

    candidate_search(c, family, spec, a)
}

fn candidate_search(c: &RandomVector, family: &TransferFamily, spec: &VectorRisk, a: &[f64]) -> Result<Acceptability> {
    let excess = |risks: &[f64]| {
        risks
            .iter()
            .zip(a)
            .map(|(r, t)| r - t)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut best: Option<(f64, RandomVector, Vec<f64>)> = None;
    let mut consider = |values: RandomVector| -> Result<bool> {
        let risks = spec.evaluate(&values)?;
        let e = excess(&risks);
        let ok = e <= ACCEPTABILITY_TOLERANCE;
        if best.as_ref().is_none_or(|(b, _, _)| e < *b) {
            best = Some((e, values, risks));
        }
        Ok(ok)
    };

    let mut found = consider(c.clone())?;
    if !found && allows_equal_split(family) {
        found = consider(proportional_selection(c, family)?.values)?;
    }
    if !found && c.dim() == 2 {
        let spread = c.rows().map(|r| (r[0] - r[1]).abs()).sum::<f64>() / c.scenarios() as f64;
        let spread = spread.max(1e-6);
        let offsets = std::iter::once(0.0).chain((1..=10).flat_map(|k| {
            let o = 2.0 * spread * k as f64 / 10.0;
            [o, -o]
        }));
        for offset in offsets {
            let values = c.map_rows(|_, row| nearest_line_point(family, [row[0], row[1]], offset).to_vec())?;
            if consider(values)? {
                found = true;
                break;
            }
        }
    }
    let (_, values, risks) = best.expect("at least one candidate evaluated");
    let witness = if found { Some(Selection::audited(c, family, values)?) } else { None };
    Ok(Acceptability {
        feasible: found,
        conclusive: found,
        method: Method::Candidates,
        witness,
        risks,
    })
}

/// Prices `p` with `Σ p = 0` and `r(ξ + p) <= r(C)` for a selection `ξ`
/// minimising `Σ r_i(ξ_i)` over `X(C)`.
#[derive(Debug, Clone)]
pub struct RationalityPrices {
    pub prices: Vec<f64>,
    pub selection: Selection,
    pub selection_risks: Vec<f64>,
    pub capital_risks: Vec<f64>,
}

pub fn rationality_prices(c: &RandomVector, family: &TransferFamily, spec: &VectorRisk) -> Result<RationalityPrices> {
    spec.check_dim(c.dim())?;
    let opts = SolverOptions::default();
    if !exact_path_available(c, family, spec, &opts) {
        return Err(Error::OptimalSelectionUnavailable(format!(
            "needs linear risk measures, a polyhedral family and at most {} scenarios",
            opts.max_lp_scenarios
        )));
    }
    let encoding = program::encoding_for(c, family)?;
    let outcome = program::solve(c, spec.components(), &encoding, Objective::MinSum)?
        .ok_or_else(|| Error::Solver("selection program reported infeasible".into()))?;
    let capital_risks = spec.evaluate(c)?;
    let d = c.dim() as f64;
    let reference: f64 = outcome.risks.iter().sum();
    let own_total: f64 = capital_risks.iter().sum();
    // a lies below r(C) and sums to the optimal total; p = r(ξ) - a
    let cut = ((own_total - reference) / d).max(0.0);
    let target: Vec<f64> = capital_risks.iter().map(|r| r - cut).collect();
    let mut prices: Vec<f64> = outcome.risks.iter().zip(&target).map(|(r, t)| r - t).collect();
    let drift = prices.iter().sum::<f64>() / d;
    prices.iter_mut().for_each(|p| *p -= drift);
    let selection = Selection::audited(c, family, outcome.xi)?;
    Ok(RationalityPrices {
        prices,
        selection,
        selection_risks: outcome.risks,
        capital_risks,
    })
}
