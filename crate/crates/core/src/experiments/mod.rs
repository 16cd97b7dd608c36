//! Constructed examples and diversification studies: value-at-risk
//! arbitrage, value-at-risk aggregation, merging and splitting groups, and
//! the two-agent region studies.
//!
//! Every relation in a report is evaluated from freshly computed numbers.

mod figures;
pub mod samplers;

pub use figures::{figure_experiment, FigureKind, FigureReport, FIGURE_ES_LEVEL};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group_risk::{total_risk, total_risk_from, unconstrained_total_risk, TotalRiskOptions};
use crate::risk::{RiskMeasure, VectorRisk, ACCEPTABILITY_TOLERANCE};
use crate::scenario::{RandomVariable, RandomVector, ScenarioSpace};
use crate::transfer_sets::{FamilyKind, TransferFamily};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
    pub quantities: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    fn new(name: &str) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    fn param(&mut self, key: &str, v: f64) {
        self.parameters.insert(key.into(), v);
    }

    fn value(&mut self, key: &str, v: f64) {
        self.quantities.insert(key.into(), v);
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.into(), passed, detail });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Partition into `d` equally likely events; agent `i` loses `(d - 1) n`
/// on its own event and gains `n` elsewhere, so the transfers sum to zero
/// in every scenario while each component has value at risk `-n` once
/// `d > 1 / α`.
pub fn risk_arbitrage_sequence(d: usize, alpha: f64, n: f64) -> Result<(Option<RandomVector>, ExperimentReport)> {
    let var = RiskMeasure::value_at_risk(alpha)?;
    let mut report = ExperimentReport::new("risk-arbitrage");
    report.param("d", d as f64);
    report.param("alpha", alpha);
    report.param("n", n);
    if d < 2 {
        return Err(Error::InvalidParameter("need at least two agents".into()));
    }
    if (d as f64) * alpha <= 1.0 {
        report.notes.push(format!(
            "no construction: each event has probability 1/{d} >= {alpha}, so the loss is always inside the quantile"
        ));
        report.check(
            "impossibility regime detected",
            true,
            format!("d alpha = {} <= 1", d as f64 * alpha),
        );
        return Ok((None, report));
    }
    let space = ScenarioSpace::uniform(d)?;
    let mut values = Vec::with_capacity(d * d);
    for w in 0..d {
        for i in 0..d {
            values.push(if i == w { -((d - 1) as f64) * n } else { n });
        }
    }
    let eta = RandomVector::from_flat(space, d, values)?;
    let risks: Vec<f64> = eta.columns().iter().map(|c| var.evaluate(c)).collect();
    let total: f64 = risks.iter().sum();
    let balance = eta.aggregate().values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (i, r) in risks.iter().enumerate() {
        report.value(&format!("var_{}", i + 1), *r);
    }
    report.value("total", total);
    report.check("transfers balance", balance <= 1e-9 * n.abs().max(1.0), format!("max |Σ η| = {balance}"));
    report.check(
        "each component equals -n",
        risks.iter().all(|r| (r + n).abs() <= 1e-12 * n.abs().max(1.0)),
        format!("{risks:?}"),
    );
    report.check("total equals -d n", (total + d as f64 * n).abs() <= 1e-9 * n.abs().max(1.0), format!("{total}"));
    Ok((Some(eta), report))
}

/// Componentwise value-at-risk acceptance versus acceptance of the sum.
pub fn var_aggregation_bounds(d: usize, alpha: f64, beta: f64, seed: u64, trials: usize) -> Result<ExperimentReport> {
    RiskMeasure::value_at_risk(alpha)?;
    RiskMeasure::value_at_risk(beta)?;
    if d < 2 {
        return Err(Error::InvalidParameter("need at least two agents".into()));
    }
    let mut report = ExperimentReport::new("var-aggregation");
    report.param("d", d as f64);
    report.param("alpha", alpha);
    report.param("beta", beta);
    let df = d as f64;

    // (i) random acceptable components, sum tested at level d alpha
    if df * alpha < 1.0 {
        let var = RiskMeasure::value_at_risk(alpha)?;
        let var_d = RiskMeasure::value_at_risk(df * alpha)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut held = 0;
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..trials {
            let n = rng.gen_range(5..60);
            let space = ScenarioSpace::uniform(n)?;
            let mut cols = Vec::with_capacity(d);
            for _ in 0..d {
                let raw = RandomVariable::new(space.clone(), (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect())?;
                // shift so the component sits exactly at the acceptance boundary
                let shifted = raw.add_constant(var.evaluate(&raw))?;
                cols.push(shifted);
            }
            let c = RandomVector::from_columns(&cols)?;
            let comp_ok = cols.iter().all(|col| var.evaluate(col) <= ACCEPTABILITY_TOLERANCE);
            let r = var_d.evaluate(&c.aggregate());
            worst = worst.max(r);
            if comp_ok && r <= ACCEPTABILITY_TOLERANCE {
                held += 1;
            }
        }
        report.value("trials", trials as f64);
        report.value("trials_holding", held as f64);
        report.value("worst_sum_var", worst);
        report.check(
            "sum acceptable at level d alpha",
            held == trials,
            format!("{held}/{trials} instances, worst VaR {worst}"),
        );
    } else {
        report.notes.push(format!("d alpha = {} >= 1: the aggregate bound is vacuous", df * alpha));
    }

    // (ii) disjoint loss events
    if beta < df * alpha {
        let tilde = alpha - (df * alpha - beta) / (2.0 * df);
        report.value("alpha_tilde", tilde);
        if df * tilde >= 1.0 {
            report.notes.push("loss events do not fit into the probability space".into());
        } else {
            let mut probs = vec![tilde; d];
            probs.push(1.0 - df * tilde);
            let space = ScenarioSpace::new(probs)?;
            let cols: Vec<RandomVariable> = (0..d)
                .map(|i| RandomVariable::new(space.clone(), (0..=d).map(|w| if w == i { -1.0 } else { 0.0 }).collect()))
                .collect::<Result<_>>()?;
            let c = RandomVector::from_columns(&cols)?;
            let var = RiskMeasure::value_at_risk(alpha)?;
            let var_b = RiskMeasure::value_at_risk(beta)?;
            let comp: Vec<f64> = cols.iter().map(|col| var.evaluate(col)).collect();
            let aggregate = c.aggregate();
            let sum_risk = var_b.evaluate(&aggregate);
            let p_loss: f64 = aggregate
                .values()
                .iter()
                .zip(space.probabilities())
                .filter(|(v, _)| **v < -0.5)
                .map(|(_, p)| p)
                .sum();
            report.value("p_sum_below_half", p_loss);
            report.value("sum_var_beta", sum_risk);
            report.check(
                "components acceptable",
                comp.iter().all(|r| *r <= ACCEPTABILITY_TOLERANCE),
                format!("{comp:?}"),
            );
            report.check("loss probability exceeds beta", p_loss > beta, format!("{p_loss} vs {beta}"));
            report.check("aggregate rejected", sum_risk > ACCEPTABILITY_TOLERANCE, format!("VaR_beta(D) = {sum_risk}"));
        }
    } else {
        report.notes.push(format!(
            "beta >= d alpha: boundary case, the construction degenerates (alpha_tilde = {})",
            alpha - (df * alpha - beta) / (2.0 * df)
        ));
    }
    Ok(report)
}

/// Two agents, value at risk with `α > 1/2`: `ζ = ±n` on two equally likely
/// scenarios gives `VaR(ζ) + VaR(-ζ) = -2n`, so the sum is unbounded below.
/// Reports the sum for each level without asserting anything.
pub fn var_two_agent_probe(alphas: &[f64], scales: &[f64]) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("var-two-agent-probe");
    let space = ScenarioSpace::uniform(2)?;
    for &alpha in alphas {
        let var = RiskMeasure::value_at_risk(alpha)?;
        for &n in scales {
            let zeta = RandomVariable::new(space.clone(), vec![n, -n])?;
            let sum = var.evaluate(&zeta) + var.evaluate(&zeta.scale(-1.0)?);
            report.value(&format!("alpha={alpha},n={n}"), sum);
        }
        let first = scales.first().copied().unwrap_or(1.0);
        let last = scales.last().copied().unwrap_or(1.0);
        let s0 = var.evaluate(&RandomVariable::new(space.clone(), vec![first, -first])?) * 2.0;
        let s1 = var.evaluate(&RandomVariable::new(space.clone(), vec![last, -last])?) * 2.0;
        report.notes.push(format!(
            "alpha {alpha}: sum moves from {s0} to {s1} as the scale grows{}",
            if s1 < s0 { " (decreasing without bound)" } else { "" }
        ));
    }
    Ok(report)
}

/// How the merged group may move capital.
#[derive(Debug, Clone)]
pub enum MergedTransfers {
    /// Only transfers inside the original groups.
    BlockDiagonal,
    Family(TransferFamily),
}

/// The merged family must contain the product of the part families.
fn admits_blocks(merged: &TransferFamily, parts: [&TransferFamily; 2]) -> bool {
    if merged.margin.is_some() {
        return false;
    }
    parts.iter().all(|p| {
        p.kind == FamilyKind::Granular
            || merged.kind == FamilyKind::Unconstrained
            || (merged.kind == p.kind && p.margin.is_none() && matches!(p.kind, FamilyKind::NoBankruptcy))
    })
}

fn join(a: &RandomVector, b: &RandomVector) -> Result<RandomVector> {
    if !a.space().same_as(b.space()) {
        return Err(Error::SpaceMismatch);
    }
    let mut cols = a.columns();
    cols.extend(b.columns());
    RandomVector::from_columns(&cols)
}

/// Merging two groups does not increase the total risk.
pub fn merge_groups(
    first: (&RandomVector, &TransferFamily, &VectorRisk),
    second: (&RandomVector, &TransferFamily, &VectorRisk),
    merged: &MergedTransfers,
) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("merge-groups");
    let t1 = total_risk(first.0, first.1, first.2)?;
    let t2 = total_risk(second.0, second.1, second.2)?;
    let parts = t1.value + t2.value;
    report.value("first_total", t1.value);
    report.value("second_total", t2.value);
    let merged_total = match merged {
        MergedTransfers::BlockDiagonal => parts,
        MergedTransfers::Family(family) => {
            if !admits_blocks(family, [first.1, second.1]) {
                return Err(Error::Precondition(format!(
                    "the {} family does not contain the transfers of both parts",
                    family.name()
                )));
            }
            let c = join(first.0, second.0)?;
            let mut comps = first.2.components().to_vec();
            comps.extend_from_slice(second.2.components());
            let spec = VectorRisk::new(comps)?;
            let opts = TotalRiskOptions::default();
            match total_risk(&c, family, &spec) {
                Ok(t) if c.dim() <= 2 || t.value <= parts => t.value,
                _ => {
                    let mut start = t1.allocation.clone().unwrap_or_default();
                    start.extend(t2.allocation.clone().unwrap_or_default());
                    total_risk_from(&c, family, &spec, &opts, &start)?.value
                }
            }
        }
    };
    report.value("merged_total", merged_total);
    report.check(
        "merged total at most the sum of parts",
        merged_total <= parts + 1e-7,
        format!("{merged_total} <= {parts}"),
    );
    Ok(report)
}

/// Splitting one agent into two: the family total lies between the
/// unconstrained total `r(C̃)` and the granular total.
pub fn split_agent(
    whole: &RandomVariable,
    split: [&RandomVariable; 2],
    family: &TransferFamily,
    measure: RiskMeasure,
) -> Result<ExperimentReport> {
    let c = RandomVector::from_columns(&[split[0].clone(), split[1].clone()])?;
    if !c.space().same_as(whole.space()) {
        return Err(Error::SpaceMismatch);
    }
    let mismatch = c
        .aggregate()
        .values()
        .iter()
        .zip(whole.values())
        .fold(0.0f64, |a, (s, w)| a.max((s - w).abs()));
    if mismatch > 1e-9 {
        return Err(Error::Precondition(format!("split does not add up: max deviation {mismatch}")));
    }
    let spec = VectorRisk::uniform(measure, 2)?;
    let granular = total_risk(&c, &TransferFamily::granular(), &spec)?.value;
    let own = total_risk(&c, family, &spec)?;
    let unconstrained = unconstrained_total_risk(&c, &spec)?;
    let mut report = ExperimentReport::new("split-agent");
    report.value("granular_total", granular);
    report.value("family_total", own.value);
    report.value("unconstrained_total", unconstrained);
    report.value("whole_risk", measure.evaluate(whole));
    report.check("family at most granular", own.value <= granular + 1e-9, format!("{} <= {granular}", own.value));
    report.check(
        "family at least unconstrained",
        own.value >= unconstrained - 1e-7,
        format!("{} >= {unconstrained}", own.value),
    );
    Ok(report)
}
