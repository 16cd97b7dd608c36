//! A parent holding the limited-liability claim on a subsidiary.
//!
//! The subsidiary's capital after participations is `-S^-`, the parent's is
//! `S^+`. The parent may pass an amount `η ∈ [0, a]` financed by a credit
//! line to the subsidiary; the positions become `-(S + η)^-` and
//! `(S + η)^+ - η`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::program::{self, Encoding, Objective};
use crate::risk::RiskMeasure;
use crate::scenario::{RandomVariable, RandomVector};

#[derive(Debug, Clone)]
pub struct HierarchyInstance {
    /// Subsidiary capital before participations.
    pub subsidiary: RandomVariable,
    /// Credit line; `f64::INFINITY` for an unlimited line.
    pub credit_line: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HierarchyOutcome {
    pub transfer: Vec<f64>,
    pub value: f64,
}

impl HierarchyInstance {
    pub fn new(subsidiary: RandomVariable, credit_line: f64) -> Result<Self> {
        if credit_line.is_nan() || credit_line < 0.0 {
            return Err(Error::InvalidParameter(format!("credit line must be nonnegative, got {credit_line}")));
        }
        Ok(Self { subsidiary, credit_line })
    }

    /// Columns `(-S^-, S^+)`.
    pub fn capital_vector(&self) -> RandomVector {
        let rows: Vec<f64> = self
            .subsidiary
            .values()
            .iter()
            .flat_map(|&s| [-(-s).max(0.0), s.max(0.0)])
            .collect();
        RandomVector::from_flat(self.subsidiary.space().clone(), 2, rows).expect("finite values")
    }

    /// `r(S^+) + r(-S^-)`.
    pub fn granular_total(&self, measure: RiskMeasure) -> f64 {
        let c = self.capital_vector();
        c.columns().iter().map(|col| measure.evaluate(col)).sum()
    }

    /// `r(-(S + η)^-) + r((S + η)^+ - η)`.
    pub fn transfer_total(&self, measure: RiskMeasure, eta: &[f64]) -> Result<f64> {
        let s = self.subsidiary.values();
        if eta.len() != s.len() {
            return Err(Error::DimensionMismatch { expected: s.len(), found: eta.len() });
        }
        if let Some((w, &e)) = eta
            .iter()
            .enumerate()
            .find(|(_, &e)| !(e >= -1e-12 && e <= self.credit_line + 1e-12))
        {
            return Err(Error::InvalidParameter(format!(
                "transfer {e} in scenario {w} outside [0, {}]",
                self.credit_line
            )));
        }
        let space = self.subsidiary.space();
        let sub: Vec<f64> = s.iter().zip(eta).map(|(s, e)| -(-(s + e)).max(0.0)).collect();
        let parent: Vec<f64> = s.iter().zip(eta).map(|(s, e)| (s + e).max(0.0) - e).collect();
        Ok(measure.evaluate_values(&sub, space) + measure.evaluate_values(&parent, space))
    }

    /// Best transfer within the credit line. Candidates are the clipped
    /// transfers `min(S^-, b)` for caps `b` in `[0, a]`; the entropic measure
    /// is solved exactly and a linear measure through the linear program,
    /// each taken when it does better. With
    /// an unlimited line and a coherent measure `S^-` is optimal and its
    /// value is `r(S)`.
    pub fn optimal_transfer(&self, measure: RiskMeasure) -> Result<HierarchyOutcome> {
        let neg: Vec<f64> = self.subsidiary.values().iter().map(|s| (-s).max(0.0)).collect();
        if self.credit_line.is_infinite() && measure.is_coherent() {
            return Ok(HierarchyOutcome { value: self.transfer_total(measure, &neg)?, transfer: neg });
        }
        let top = neg.iter().fold(0.0f64, |a, &b| a.max(b)).min(self.credit_line);
        const CAPS: usize = 32;
        let mut best: Option<HierarchyOutcome> = None;
        for k in (0..=CAPS).rev() {
            let cap = top * k as f64 / CAPS as f64;
            let eta: Vec<f64> = neg.iter().map(|v| v.min(cap)).collect();
            let value = self.transfer_total(measure, &eta)?;
            if best.as_ref().is_none_or(|b| value < b.value - 1e-12) {
                best = Some(HierarchyOutcome { transfer: eta, value });
            }
        }
        let mut best = best.expect("at least one cap tried");
        if let RiskMeasure::Entropic { theta } = measure {
            let eta = self.entropic_transfer(theta);
            let value = self.transfer_total(measure, &eta)?;
            if value < best.value - 1e-12 {
                best = HierarchyOutcome { transfer: eta, value };
            }
        }
        if !measure.is_lp_representable() {
            return Ok(best);
        }
        let clipped: Vec<f64> = neg.iter().map(|v| v.min(self.credit_line)).collect();
        // agent 2 (parent) hands t to agent 1 (subsidiary): signed transfer -t
        let c = self.capital_vector();
        let lo: Vec<f64> = clipped.iter().map(|v| -v).collect();
        let hi = vec![0.0; lo.len()];
        let encoding = Encoding::Signed { lo, hi };
        if let Some(out) = program::solve(&c, &[measure, measure], &encoding, Objective::MinSum)? {
            let eta: Vec<f64> = out
                .xi
                .rows()
                .zip(c.rows())
                .zip(&clipped)
                .map(|((xi, c), cap)| (xi[0] - c[0]).clamp(0.0, *cap))
                .collect();
            let value = self.transfer_total(measure, &eta)?;
            if value < best.value - 1e-12 {
                best = HierarchyOutcome { transfer: eta, value };
            }
        }
        Ok(best)
    }
}

impl HierarchyInstance {
    /// Exact optimum for the entropic measure. Only losses are worth
    /// covering, so `η_w ∈ [0, min(S_w^-, a)]` and the objective
    /// `log A(η) + log B(η)` is convex. Stationarity gives
    /// `η_w = clamp((S_w^- - t) / 2)` with `θ t = log A - log B`; every root
    /// of `log A - log B - θ t` along this curve has negative slope, so the
    /// root is unique and bisection finds it.
    fn entropic_transfer(&self, theta: f64) -> Vec<f64> {
        let s = self.subsidiary.values();
        let p = self.subsidiary.space().probabilities();
        let neg: Vec<f64> = s.iter().map(|v| (-v).max(0.0)).collect();
        let cap: Vec<f64> = neg.iter().map(|v| v.min(self.credit_line)).collect();
        let at = |t: f64| -> Vec<f64> { neg.iter().zip(&cap).map(|(m, c)| ((m - t) / 2.0).clamp(0.0, *c)).collect() };
        // log-sum-exp with a common shift for stability
        let gap = |t: f64| -> f64 {
            let eta = at(t);
            let a: Vec<f64> = s.iter().zip(&eta).map(|(v, e)| -theta * (v + e).min(0.0)).collect();
            let b: Vec<f64> = s.iter().zip(&eta).map(|(v, e)| -theta * (v.max(0.0) - e)).collect();
            let lse = |x: &[f64]| {
                let m = x.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                m + x.iter().zip(p).map(|(v, q)| q * (v - m).exp()).sum::<f64>().ln()
            };
            lse(&a) - lse(&b) - theta * t
        };
        let reach = neg.iter().chain(s.iter()).fold(1.0f64, |a, v| a.max(v.abs()));
        let (mut lo, mut hi) = (-4.0 * reach - 1.0, 4.0 * reach + 1.0);
        while gap(lo) < 0.0 {
            lo *= 2.0;
        }
        while gap(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if gap(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi))
    }
}
