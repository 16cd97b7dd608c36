//! Group risk: the capital injections `x` that make `X(C + x)` acceptable,
//! and the total risk `inf { Σ x_i : X(C + x) acceptable }`.
//!
//! Closed forms cover the granular and unconstrained families. For two
//! agents and the remaining families the total is bracketed by an outer
//! bound from support functions and an inner bound from the
//! nearest-to-diagonal selection; small linear instances are solved exactly.

mod bounds;
mod region;

pub use bounds::{outer_directions, HalfPlane, InnerBound, OuterBound};
pub use region::{default_box, granular_region, region, RegionApprox, RegionOptions};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::program::{self, Objective};
use crate::risk::{RiskMeasure, VectorRisk};
use crate::scenario::RandomVector;
use crate::selection::{
    allows_equal_split, nearest_diagonal_selection, proportional_selection, Selection, FEASIBILITY_TOLERANCE,
};
use crate::transfer_sets::{FamilyKind, TransferFamily};
use bounds::{line_interval, lowest_level, require_two};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TotalStatus {
    Exact,
    /// `value` is attained by a certified allocation; the true total may be
    /// lower (down to `lower_bound` when known).
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TotalMethod {
    Granular,
    ClosedForm,
    /// One program minimising `Σ r_i(ξ_i)` over `X(C)`.
    LinearProgram,
    /// Bisection on the level `Σ x_i` with a linear program per probe.
    LevelSearch,
    /// Inner and outer bounds along the antidiagonals.
    Bounds,
    /// Coordinate search over allocations, more than two agents.
    PatternSearch,
}

#[derive(Debug, Clone)]
pub struct TotalRisk {
    pub value: f64,
    pub status: TotalStatus,
    pub method: TotalMethod,
    pub lower_bound: Option<f64>,
    pub allocation: Option<Vec<f64>>,
    /// An acceptable selection of `X(C + allocation)`.
    pub witness: Option<Selection>,
}

#[derive(Debug, Clone, Copy)]
pub struct TotalRiskOptions {
    /// Width of the final level bracket.
    pub tolerance: f64,
    /// Scenario limit for a single linear program.
    pub max_lp_scenarios: usize,
    /// Scenario limit for searches that solve many programs.
    pub max_search_scenarios: usize,
    pub use_three_dirs: bool,
    pub dir_count: usize,
}

impl Default for TotalRiskOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_lp_scenarios: crate::selection::DEFAULT_MAX_LP_SCENARIOS,
            max_search_scenarios: 32,
            use_three_dirs: true,
            dir_count: 64,
        }
    }
}

/// `r(D)` for coherent and `d r(D / d)` for convex identical components.
pub fn unconstrained_total_risk(c: &RandomVector, spec: &VectorRisk) -> Result<f64> {
    spec.check_dim(c.dim())?;
    let m = spec.identical().ok_or_else(|| {
        Error::IncompatibleMeasure("the closed form needs identical components".into())
    })?;
    let d = c.dim() as f64;
    let aggregate = c.aggregate();
    if m.is_coherent() {
        Ok(m.evaluate(&aggregate))
    } else if m.is_convex() {
        Ok(d * m.evaluate(&aggregate.scale(1.0 / d)?))
    } else {
        Err(Error::IncompatibleMeasure(
            "value at risk is not convex; the aggregate does not determine the total".into(),
        ))
    }
}

pub fn total_risk(c: &RandomVector, family: &TransferFamily, spec: &VectorRisk) -> Result<TotalRisk> {
    total_risk_with(c, family, spec, &TotalRiskOptions::default())
}

pub fn total_risk_with(
    c: &RandomVector,
    family: &TransferFamily,
    spec: &VectorRisk,
    opts: &TotalRiskOptions,
) -> Result<TotalRisk> {
    let d = c.dim();
    spec.check_dim(d)?;
    family.check_dim(d)?;

    if family.kind == FamilyKind::Granular {
        let r = spec.evaluate(c)?;
        let shifted = c.shift(&r)?;
        return Ok(TotalRisk {
            value: r.iter().sum(),
            status: TotalStatus::Exact,
            method: TotalMethod::Granular,
            lower_bound: None,
            allocation: Some(r),
            witness: Some(Selection::audited(&shifted, family, shifted.clone())?),
        });
    }

    if allows_equal_split(family) {
        if let Ok(value) = unconstrained_total_risk(c, spec) {
            let allocation = vec![value / d as f64; d];
            let shifted = c.shift(&allocation)?;
            return Ok(TotalRisk {
                value,
                status: TotalStatus::Exact,
                method: TotalMethod::ClosedForm,
                lower_bound: None,
                allocation: Some(allocation),
                witness: Some(proportional_selection(&shifted, family)?),
            });
        }
    }

    let linear = spec.all_lp_representable() && family.is_polyhedral();
    if linear && !family.depends_on_capital() && c.scenarios() <= opts.max_lp_scenarios {
        return min_sum_total(c, family, spec);
    }

    if d != 2 {
        if linear && c.scenarios() <= opts.max_search_scenarios {
            return pattern_search_total(c, family, spec, opts, None);
        }
        return Err(Error::UnsupportedDimension {
            operation: "total risk",
            required: "two agents or a small linear instance",
            found: d,
        });
    }
    bounded_total(c, family, spec, opts)
}

/// Capital-independent families: `X(C + x) = X(C) + x`, so the total is
/// `min Σ r_i(ξ_i)` over `ξ ∈ X(C)`.
fn min_sum_total(c: &RandomVector, family: &TransferFamily, spec: &VectorRisk) -> Result<TotalRisk> {
    let encoding = program::encoding_for(c, family)?;
    let outcome = program::solve(c, spec.components(), &encoding, Objective::MinSum)?
        .ok_or_else(|| Error::Solver("selection program reported infeasible".into()))?;
    let allocation = outcome.risks.clone();
    let shifted = c.shift(&allocation)?;
    let values = outcome.xi.shift(&allocation)?;
    Ok(TotalRisk {
        value: outcome.value,
        status: TotalStatus::Exact,
        method: TotalMethod::LinearProgram,
        lower_bound: None,
        allocation: Some(allocation),
        witness: Some(Selection::audited(&shifted, family, values)?),
    })
}

/// Lower bound valid for every family: all attainable sets lie inside the
/// unconstrained one.
fn unconstrained_lower_bound(c: &RandomVector, spec: &VectorRisk, opts: &TotalRiskOptions) -> Option<f64> {
    if let Some(m) = spec.identical() {
        if m.is_convex() {
            let d = c.dim() as f64;
            let share = c.aggregate().scale(1.0 / d).ok()?;
            return Some(d * m.evaluate(&share));
        }
    }
    if spec.all_lp_representable() && c.scenarios() <= opts.max_lp_scenarios {
        let family = TransferFamily::unconstrained();
        let encoding = program::encoding_for(c, &family).ok()?;
        let outcome = program::solve(c, spec.components(), &encoding, Objective::MinSum).ok()??;
        return Some(outcome.value);
    }
    None
}

/// Half-width of the `x_1` search window on a level line.
fn search_width(corner: [f64; 2], c: &RandomVector, level: f64) -> f64 {
    let scale = c.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    4.0 * (corner[0].abs() + corner[1].abs() + level.abs() + scale + 1.0)
}

fn bounded_total(
    c: &RandomVector,
    family: &TransferFamily,
    spec: &VectorRisk,
    opts: &TotalRiskOptions,
) -> Result<TotalRisk> {
    require_two(c, "total risk")?;
    let tol = opts.tolerance;
    let inner = InnerBound::new(c, family, spec)?;
    let corner = inner.granular_corner;
    let granular_total = corner[0] + corner[1];
    let bracket_for = |level: f64| {
        let w = search_width(corner, c, level);
        (corner[0] - w, corner[0] + w)
    };
    let x_tol = tol * 1e-2;

    let outer = OuterBound::new(c, family, spec, opts.use_three_dirs, opts.dir_count).ok();
    let floor = unconstrained_lower_bound(c, spec, opts);
    let outer_total = match &outer {
        Some(outer) => {
            let start = floor.unwrap_or(granular_total - search_width(corner, c, granular_total));
            let feasible = |level: f64| {
                line_interval(&outer.line_constraints(level), bracket_for(level), outer.monotone(), x_tol)
                    .map(|(a, b)| 0.5 * (a + b))
            };
            lowest_level(start.min(granular_total), granular_total, tol, feasible).map(|(l, _)| l)
        }
        None => None,
    };
    let lower = match (outer_total, floor) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };

    // inner: the nearest-diagonal selection, falling back on no transfer
    let start = lower.unwrap_or(granular_total - search_width(corner, c, granular_total));
    let feasible = |level: f64| {
        if level >= granular_total {
            return Some(corner[0] + 0.5 * (level - granular_total));
        }
        line_interval(&inner.line_constraints(level), bracket_for(level), inner.monotone(), x_tol)
            .map(|(a, b)| 0.5 * (a + b))
    };
    let (mut value, mut x1) =
        lowest_level(start.min(granular_total), granular_total, tol, feasible).expect("the granular corner is acceptable");
    let mut allocation = [x1, value - x1];
    if !inner.contains(allocation) {
        // the bisection ended on the granular fallback
        value = granular_total;
        x1 = corner[0];
        allocation = [x1, corner[1]];
    }
    let mut method = TotalMethod::Bounds;
    let mut witness = nearest_diagonal_selection(c, family, allocation)?;
    if !inner.selection_accepts(allocation) {
        let shifted = c.shift(&allocation)?;
        witness = Selection::audited(&shifted, family, shifted.clone())?;
    }

    let linear = spec.all_lp_representable() && family.is_polyhedral();
    let mut status = match lower {
        Some(l) if value - l <= tol => TotalStatus::Exact,
        _ => TotalStatus::UpperBound,
    };
    if status == TotalStatus::UpperBound && linear && c.scenarios() <= opts.max_search_scenarios {
        if let Some(l) = lower {
            let search = LevelSearch { c, family, spec, outer: outer.as_ref(), bracket_for: &bracket_for };
            if let Some((level, x, xi)) = search.run(l, value, tol)? {
                value = level;
                allocation = x;
                let shifted = c.shift(&allocation)?;
                witness = Selection::audited(&shifted, family, xi)?;
            }
            method = TotalMethod::LevelSearch;
            status = TotalStatus::Exact;
        }
    }
    Ok(TotalRisk {
        value,
        status,
        method,
        lower_bound: lower,
        allocation: Some(allocation.to_vec()),
        witness: Some(witness),
    })
}

/// Exact level bisection for small polyhedral instances: a level is feasible
/// when some allocation on it admits an acceptable selection.
struct LevelSearch<'a, F: Fn(f64) -> (f64, f64)> {
    c: &'a RandomVector,
    family: &'a TransferFamily,
    spec: &'a VectorRisk,
    outer: Option<&'a OuterBound>,
    bracket_for: &'a F,
}

impl<F: Fn(f64) -> (f64, f64)> LevelSearch<'_, F> {
    /// Optimal max-excess over `X(C + x)` with its selection.
    fn excess(&self, x: [f64; 2]) -> Result<(f64, Option<RandomVector>)> {
        let shifted = self.c.shift(&x)?;
        let encoding = program::encoding_for(&shifted, self.family)?;
        match program::solve(&shifted, self.spec.components(), &encoding, Objective::MinMaxExcess(&[0.0, 0.0]))? {
            Some(out) => Ok((out.value, Some(out.xi))),
            None => Ok((f64::INFINITY, None)),
        }
    }

    /// Minimises the excess along the level line; returns a feasible point
    /// as soon as one is found.
    fn probe(&self, level: f64) -> Result<Option<([f64; 2], RandomVector)>> {
        let (mut lo, mut hi) = (self.bracket_for)(level);
        if let Some(outer) = self.outer {
            match line_interval(&outer.line_constraints(level), (lo, hi), outer.monotone(), 1e-9) {
                Some((a, b)) => {
                    lo = a;
                    hi = b;
                }
                None => return Ok(None),
            }
        }
        let point = |x1: f64| [x1, level - x1];
        const SCAN: usize = 17;
        let mut samples = Vec::with_capacity(SCAN);
        for k in 0..SCAN {
            let x1 = lo + (hi - lo) * k as f64 / (SCAN - 1) as f64;
            let (v, xi) = self.excess(point(x1))?;
            if v <= FEASIBILITY_TOLERANCE {
                return Ok(xi.map(|xi| (point(x1), xi)));
            }
            samples.push((x1, v));
        }
        let best = (0..SCAN)
            .min_by(|&a, &b| samples[a].1.total_cmp(&samples[b].1))
            .expect("samples taken");
        let mut a = samples[best.saturating_sub(1)].0;
        let mut b = samples[(best + 1).min(SCAN - 1)].0;
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut x = b - ratio * (b - a);
        let mut y = a + ratio * (b - a);
        let (mut fx, mut xi_x) = self.excess(point(x))?;
        let (mut fy, mut xi_y) = self.excess(point(y))?;
        for _ in 0..60 {
            if fx <= FEASIBILITY_TOLERANCE {
                return Ok(xi_x.map(|xi| (point(x), xi)));
            }
            if fy <= FEASIBILITY_TOLERANCE {
                return Ok(xi_y.map(|xi| (point(y), xi)));
            }
            if b - a <= 1e-10 {
                break;
            }
            if fx <= fy {
                b = y;
                y = x;
                fy = fx;
                xi_y = xi_x;
                x = b - ratio * (b - a);
                (fx, xi_x) = self.excess(point(x))?;
            } else {
                a = x;
                x = y;
                fx = fy;
                xi_x = xi_y;
                y = a + ratio * (b - a);
                (fy, xi_y) = self.excess(point(y))?;
            }
        }
        Ok(None)
    }

    fn run(&self, lower: f64, upper: f64, tol: f64) -> Result<Option<(f64, [f64; 2], RandomVector)>> {
        let mut best = None;
        let (mut a, mut b) = (lower, upper);
        if let Some((x, xi)) = self.probe(lower)? {
            return Ok(Some((lower, x, xi)));
        }
        for _ in 0..100 {
            if b - a <= tol {
                break;
            }
            let mid = 0.5 * (a + b);
            match self.probe(mid)? {
                Some((x, xi)) => {
                    best = Some((mid, x, xi));
                    b = mid;
                }
                None => a = mid,
            }
        }
        Ok(best)
    }
}

/// More than two agents with a capital-dependent family: greedy coordinate
/// moves from the granular allocation, each checked by a linear program.
fn pattern_search_total(
    c: &RandomVector,
    family: &TransferFamily,
    spec: &VectorRisk,
    opts: &TotalRiskOptions,
    start: Option<&[f64]>,
) -> Result<TotalRisk> {
    let d = c.dim();
    let accepts = |x: &[f64]| -> Result<Option<RandomVector>> {
        let shifted = c.shift(x)?;
        let encoding = program::encoding_for(&shifted, family)?;
        let zeros = vec![0.0; d];
        Ok(program::solve(&shifted, spec.components(), &encoding, Objective::MinMaxExcess(&zeros))?
            .filter(|out| out.value <= FEASIBILITY_TOLERANCE)
            .map(|out| out.xi))
    };
    let mut x = spec.evaluate(c)?;
    let mut xi = c.shift(&x)?;
    if let Some(start) = start {
        if start.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: start.len() });
        }
        if let Some(sel) = accepts(start)? {
            x = start.to_vec();
            xi = sel;
        }
    }
    let lower = unconstrained_lower_bound(c, spec, opts);
    let mut step = match lower {
        Some(l) => (x.iter().sum::<f64>() - l) / d as f64,
        None => 1.0,
    }
    .max(opts.tolerance);
    while step > opts.tolerance {
        let mut improved = false;
        for i in 0..d {
            // take capital from agent i, optionally handing half of it to j
            for j in std::iter::once(None).chain((0..d).filter(|&j| j != i).map(Some)) {
                let mut trial = x.clone();
                trial[i] -= step;
                if let Some(j) = j {
                    trial[i] -= step;
                    trial[j] += step;
                }
                if let Some(sel) = accepts(&trial)? {
                    x = trial;
                    xi = sel;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let value: f64 = x.iter().sum();
    let status = match lower {
        Some(l) if value - l <= opts.tolerance => TotalStatus::Exact,
        _ => TotalStatus::UpperBound,
    };
    let shifted = c.shift(&x)?;
    Ok(TotalRisk {
        value,
        status,
        method: TotalMethod::PatternSearch,
        lower_bound: lower,
        allocation: Some(x),
        witness: Some(Selection::audited(&shifted, family, xi)?),
    })
}

/// Search for the total of a small polyhedral instance starting from a known
/// acceptable allocation (for instance the allocations of merged subgroups).
/// The result is never above `Σ start` when `start` is acceptable.
pub fn total_risk_from(
    c: &RandomVector,
    family: &TransferFamily,
    spec: &VectorRisk,
    opts: &TotalRiskOptions,
    start: &[f64],
) -> Result<TotalRisk> {
    spec.check_dim(c.dim())?;
    family.check_dim(c.dim())?;
    if !(spec.all_lp_representable() && family.is_polyhedral() && c.scenarios() <= opts.max_search_scenarios) {
        return Err(Error::OptimalSelectionUnavailable(format!(
            "the allocation search needs linear risk measures, a polyhedral family and at most {} scenarios",
            opts.max_search_scenarios
        )));
    }
    pattern_search_total(c, family, spec, opts, Some(start))
}

/// Outcome of comparing a family's total with the unconstrained one.
#[derive(Debug, Clone)]
pub struct NoChangeReport {
    pub family_total: f64,
    pub unconstrained_total: f64,
    /// The totals agree within the tolerance.
    pub applicable: bool,
    /// `η = ξ - C - x` for the witness `ξ` of `X(C + x)`.
    pub transfer: Option<RandomVector>,
    /// `|Σ r(C_i + η_i) - r(Σ C_i)|`.
    pub residual: Option<f64>,
    pub passed: bool,
}

pub fn no_change_diagnostic(
    c: &RandomVector,
    family: &TransferFamily,
    spec: &VectorRisk,
    tolerance: f64,
) -> Result<NoChangeReport> {
    let measure = spec.identical().filter(RiskMeasure::is_coherent).ok_or_else(|| {
        Error::IncompatibleMeasure("the comparison needs identical coherent components".into())
    })?;
    let own = total_risk(c, family, spec)?;
    let unconstrained_total = unconstrained_total_risk(c, spec)?;
    let mut report = NoChangeReport {
        family_total: own.value,
        unconstrained_total,
        applicable: (own.value - unconstrained_total).abs() <= tolerance,
        transfer: None,
        residual: None,
        passed: false,
    };
    if !report.applicable {
        return Ok(report);
    }
    if let (Some(x), Some(w)) = (&own.allocation, &own.witness) {
        let eta = w.values.sub(&c.shift(x)?)?;
        let moved = c.add(&eta)?;
        let sum: f64 = moved.columns().iter().map(|col| measure.evaluate(col)).sum();
        let residual = (sum - measure.evaluate(&c.aggregate())).abs();
        report.passed = residual <= tolerance && w.is_admissible();
        report.residual = Some(residual);
        report.transfer = Some(eta);
    }
    Ok(report)
}
