//! Linear programs over selections of a polyhedral attainable set.
//!
//! Each agent's expected shortfall is written with one free level `s_i` and
//! one excess variable per scenario, `u ≥ -ξ_i - s_i`, `u ≥ 0`, so that
//! `ES_α(ξ_i) = min s_i + α^{-1} Σ_ω p_ω u_ω`. Negative expectation is linear
//! in `ξ` directly.

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpStatus, RowKind};
use crate::risk::RiskMeasure;
use crate::scenario::RandomVector;
use crate::transfer_sets::{FamilyKind, TransferFamily};

/// How the selection `ξ(ω)` is parametrised.
#[derive(Debug, Clone)]
pub(crate) enum Encoding {
    /// Two agents: `ξ = C + (-t, t)` with `t ∈ [lo_ω, hi_ω]`.
    Signed { lo: Vec<f64>, hi: Vec<f64> },
    /// `ξ = C + y` with `y` constrained per scenario.
    General(GeneralKind),
}

#[derive(Debug, Clone)]
pub(crate) enum GeneralKind {
    /// `y = 0` (nothing to gain from discarding capital).
    Nil,
    /// `Σ y <= 0`.
    Budget,
    /// `Σ y <= 0`, `y_i >= -bound_{ω,i}` (row-major bounds).
    Bounded(Vec<f64>),
    /// `y_1 + π y_2 <= 0`, `π y_1 + y_2 <= 0`.
    Proportional(f64),
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Objective<'a> {
    /// Minimise `max_i (r_i(ξ_i) - a_i)`.
    MinMaxExcess(&'a [f64]),
    /// Minimise `Σ_i r_i(ξ_i)`.
    MinSum,
}

#[derive(Debug, Clone)]
pub(crate) struct ProgramOutcome {
    pub xi: RandomVector,
    /// Objective recomputed from `xi` with the exact risk evaluators.
    pub value: f64,
    pub risks: Vec<f64>,
}

/// Picks the cheapest encoding of `X(C)` for the family.
pub(crate) fn encoding_for(c: &RandomVector, family: &TransferFamily) -> Result<Encoding> {
    family.check_dim(c.dim())?;
    if !family.is_polyhedral() {
        return Err(Error::FamilyMismatch(format!(
            "the {} family has no linear description",
            family.name()
        )));
    }
    if c.dim() == 2 {
        let mut lo = Vec::with_capacity(c.scenarios());
        let mut hi = Vec::with_capacity(c.scenarios());
        let mut signed = true;
        for row in c.rows() {
            match family.signed_transfer_bounds(row) {
                Some((l, h)) => {
                    lo.push(l);
                    hi.push(h);
                }
                None => {
                    signed = false;
                    break;
                }
            }
        }
        if signed {
            return Ok(Encoding::Signed { lo, hi });
        }
    }
    Ok(Encoding::General(match family.kind {
        FamilyKind::Granular => GeneralKind::Nil,
        FamilyKind::Unconstrained => GeneralKind::Budget,
        FamilyKind::NoBankruptcy => GeneralKind::Bounded(
            c.rows()
                .flat_map(|row| family.effective_capital(row).into_iter().map(|v| v.max(0.0)))
                .collect(),
        ),
        FamilyKind::ProportionalCost { pi } => GeneralKind::Proportional(pi),
        _ => unreachable!("non-polyhedral families rejected above"),
    }))
}

/// Linear expression `constant + Σ coeff * var`.
#[derive(Debug, Clone, Default)]
struct Affine {
    constant: f64,
    terms: Vec<(usize, f64)>,
}

pub(crate) fn solve(
    c: &RandomVector,
    measures: &[RiskMeasure],
    encoding: &Encoding,
    objective: Objective<'_>,
) -> Result<Option<ProgramOutcome>> {
    let n = c.scenarios();
    let d = c.dim();
    if measures.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: measures.len() });
    }
    if let Some(m) = measures.iter().find(|m| !m.is_lp_representable()) {
        return Err(Error::IncompatibleMeasure(format!(
            "{m:?} has no linear representation"
        )));
    }
    let probs = c.space().probabilities();
    let mut lp = LinearProgram::new();

    // selection variables: xi[ω][i] as an affine expression
    let mut xi: Vec<Vec<Affine>> = Vec::with_capacity(n);
    let mut transfer_vars: Vec<Vec<usize>> = Vec::with_capacity(n);
    match encoding {
        Encoding::Signed { lo, hi } => {
            for (w, row) in c.rows().enumerate() {
                let t = lp.add_variable(lo[w], hi[w], 0.0);
                transfer_vars.push(vec![t]);
                xi.push(vec![
                    Affine { constant: row[0], terms: vec![(t, -1.0)] },
                    Affine { constant: row[1], terms: vec![(t, 1.0)] },
                ]);
            }
        }
        Encoding::General(kind) => {
            for (w, row) in c.rows().enumerate() {
                let mut vars = Vec::with_capacity(d);
                for i in 0..d {
                    let (lower, upper) = match kind {
                        GeneralKind::Nil => (0.0, 0.0),
                        GeneralKind::Bounded(b) => (-b[w * d + i], f64::INFINITY),
                        _ => (f64::NEG_INFINITY, f64::INFINITY),
                    };
                    vars.push(lp.add_variable(lower, upper, 0.0));
                }
                match kind {
                    GeneralKind::Nil => {}
                    GeneralKind::Budget | GeneralKind::Bounded(_) => {
                        lp.add_row(vars.iter().map(|&v| (v, 1.0)).collect(), RowKind::Le, 0.0);
                    }
                    GeneralKind::Proportional(pi) => {
                        lp.add_row(vec![(vars[0], 1.0), (vars[1], *pi)], RowKind::Le, 0.0);
                        lp.add_row(vec![(vars[0], *pi), (vars[1], 1.0)], RowKind::Le, 0.0);
                    }
                }
                xi.push(
                    (0..d)
                        .map(|i| Affine { constant: row[i], terms: vec![(vars[i], 1.0)] })
                        .collect(),
                );
                transfer_vars.push(vars);
            }
        }
    }

    // risk expressions
    let mut risk_expr: Vec<Affine> = Vec::with_capacity(d);
    for (i, m) in measures.iter().enumerate() {
        match *m {
            RiskMeasure::ExpectedShortfall { alpha } => {
                let s = lp.add_variable(f64::NEG_INFINITY, f64::INFINITY, 0.0);
                let mut expr = Affine { constant: 0.0, terms: vec![(s, 1.0)] };
                for w in 0..n {
                    let u = lp.add_variable(0.0, f64::INFINITY, 0.0);
                    // u + ξ + s >= 0
                    let x = &xi[w][i];
                    let mut coeffs = vec![(u, 1.0), (s, 1.0)];
                    coeffs.extend(x.terms.iter().copied());
                    lp.add_row(coeffs, RowKind::Ge, -x.constant);
                    expr.terms.push((u, probs[w] / alpha));
                }
                risk_expr.push(expr);
            }
            RiskMeasure::NegExpectation => {
                let mut expr = Affine::default();
                for w in 0..n {
                    let x = &xi[w][i];
                    expr.constant -= probs[w] * x.constant;
                    expr.terms.extend(x.terms.iter().map(|&(v, a)| (v, -probs[w] * a)));
                }
                risk_expr.push(expr);
            }
            _ => unreachable!("checked above"),
        }
    }

    match objective {
        Objective::MinMaxExcess(a) => {
            if a.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: a.len() });
            }
            let z = lp.add_variable(f64::NEG_INFINITY, f64::INFINITY, 1.0);
            for (i, expr) in risk_expr.iter().enumerate() {
                let mut coeffs = expr.terms.clone();
                coeffs.push((z, -1.0));
                lp.add_row(coeffs, RowKind::Le, a[i] - expr.constant);
            }
        }
        Objective::MinSum => {
            let mut cost = vec![0.0; lp.num_vars()];
            for expr in &risk_expr {
                for &(v, a) in &expr.terms {
                    cost[v] += a;
                }
            }
            for (v, &cv) in cost.iter().enumerate() {
                if cv != 0.0 {
                    lp.set_cost(v, cv);
                }
            }
        }
    }

    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Ok(None),
        LpStatus::Unbounded => {
            return Err(Error::Solver("risk program is unbounded".into()));
        }
    }

    // rebuild ξ from the transfer variables, clipped to their bounds
    let mut values = Vec::with_capacity(n * d);
    for (w, row) in c.rows().enumerate() {
        match encoding {
            Encoding::Signed { lo, hi } => {
                let t = sol.x[transfer_vars[w][0]].clamp(lo[w], hi[w]);
                values.extend([row[0] - t, row[1] + t]);
            }
            Encoding::General(kind) => {
                let mut y: Vec<f64> = transfer_vars[w].iter().map(|&v| sol.x[v]).collect();
                match kind {
                    GeneralKind::Nil => y.iter_mut().for_each(|v| *v = 0.0),
                    GeneralKind::Bounded(b) => {
                        for (i, v) in y.iter_mut().enumerate() {
                            *v = v.max(-b[w * d + i]);
                        }
                    }
                    _ => {}
                }
                // remove any positive rounding from the budget
                let total: f64 = y.iter().sum();
                if total > 0.0 {
                    if let Some(k) = (0..d).max_by(|&a, &b| y[a].total_cmp(&y[b])) {
                        y[k] -= total;
                    }
                }
                if let GeneralKind::Proportional(pi) = kind {
                    let excess = (y[0] + pi * y[1]).max(pi * y[0] + y[1]);
                    if excess > 0.0 {
                        y[0] -= excess;
                        y[1] -= excess;
                    }
                }
                values.extend(row.iter().zip(&y).map(|(c, y)| c + y));
            }
        }
    }
    let xi = RandomVector::from_flat(c.space().clone(), d, values)?;
    let risks: Vec<f64> = measures
        .iter()
        .enumerate()
        .map(|(i, m)| m.evaluate_values(&xi.column_values(i), xi.space()))
        .collect();
    let value = match objective {
        Objective::MinMaxExcess(a) => risks
            .iter()
            .zip(a)
            .map(|(r, a)| r - a)
            .fold(f64::NEG_INFINITY, f64::max),
        Objective::MinSum => risks.iter().sum(),
    };
    Ok(Some(ProgramOutcome { xi, value, risks }))
}
