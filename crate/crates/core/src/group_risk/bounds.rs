//! Outer and inner approximations of the group risk region for two agents.
//!
//! Outer: if some selection of `X(C + x)` is acceptable under an identical
//! coherent `r`, then `r(h_{X(C+x)}(u)) <= 0` for every direction `u >= 0`.
//! Inner: `x` is certified when the nearest-to-diagonal selection of
//! `X(C + x)`, or the position without transfers, is acceptable.
//!
//! Along a line `x_1 + x_2 = c` every constraint used here is monotone in
//! `x_1`: it either improves (agent 1 gains) or worsens (agent 2 loses) as
//! capital moves from agent 2 to agent 1. Feasibility on the line therefore
//! reduces to comparing thresholds found by bisection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::risk::{RiskMeasure, VectorRisk, ACCEPTABILITY_TOLERANCE};
use crate::scenario::RandomVector;
use crate::selection::nearest_line_point;
use crate::transfer_sets::{FamilyKind, TransferFamily};

/// `<x, u> >= offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfPlane {
    pub u: [f64; 2],
    pub offset: f64,
}

impl HalfPlane {
    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.u[0] * x[0] + self.u[1] * x[1] >= self.offset - ACCEPTABILITY_TOLERANCE
    }
}

/// Directions for the outer bound. The three axis-and-diagonal directions
/// suffice for families whose Pareto boundary lies on `{Σ x = Σ C}`;
/// everything else gets `count` directions spread over the quarter circle.
pub fn outer_directions(family: &TransferFamily, use_three: bool, count: usize) -> Vec<[f64; 2]> {
    let three_valid = matches!(
        family.kind,
        FamilyKind::Granular | FamilyKind::Unconstrained | FamilyKind::NoBankruptcy
    );
    if use_three && three_valid {
        return vec![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
    }
    let count = count.max(2);
    let mut dirs: Vec<[f64; 2]> = (0..count)
        .map(|k| {
            let theta = std::f64::consts::FRAC_PI_2 * k as f64 / (count - 1) as f64;
            if k == 0 {
                [1.0, 0.0]
            } else if k == count - 1 {
                [0.0, 1.0]
            } else {
                [theta.cos(), theta.sin()]
            }
        })
        .collect();
    if !dirs.iter().any(|u| (u[0] - u[1]).abs() <= 1e-12) {
        dirs.push([1.0, 1.0]);
    }
    dirs
}

/// The outer approximation: half-planes where the support function moves
/// rigidly with `x`, plus directions that have to be evaluated pointwise.
#[derive(Debug, Clone)]
pub struct OuterBound {
    c: RandomVector,
    family: TransferFamily,
    measure: RiskMeasure,
    pub halfplanes: Vec<HalfPlane>,
    /// Directions whose constraint `r(h_{X(C+x)}(u)) <= 0` is not a
    /// half-plane in `x` (capital-dependent families off the diagonal).
    pub curve_directions: Vec<[f64; 2]>,
}

impl OuterBound {
    pub fn new(
        c: &RandomVector,
        family: &TransferFamily,
        spec: &VectorRisk,
        use_three: bool,
        dir_count: usize,
    ) -> Result<Self> {
        require_two(c, "outer bound")?;
        family.check_dim(2)?;
        spec.check_dim(2)?;
        let measure = spec
            .identical()
            .filter(RiskMeasure::is_coherent)
            .ok_or_else(|| {
                Error::IncompatibleMeasure(
                    "the support-function bound needs identical coherent components".into(),
                )
            })?;
        let mut bound = Self {
            c: c.clone(),
            family: family.clone(),
            measure,
            halfplanes: vec![],
            curve_directions: vec![],
        };
        for u in outer_directions(family, use_three, dir_count) {
            let h0 = family.support_function(c.row(0), &u)?;
            if h0.is_infinite() {
                continue;
            }
            let rigid = !family.depends_on_capital() || (u[0] - u[1]).abs() <= 1e-12;
            if rigid {
                let offset = bound.curve_value(u, [0.0, 0.0]);
                bound.halfplanes.push(HalfPlane { u, offset });
            } else {
                bound.curve_directions.push(u);
            }
        }
        Ok(bound)
    }

    /// `r(h_{X(C+x)}(u))`.
    pub fn curve_value(&self, u: [f64; 2], x: [f64; 2]) -> f64 {
        let h: Vec<f64> = self
            .c
            .rows()
            .map(|row| {
                self.family
                    .support_function(&[row[0] + x[0], row[1] + x[1]], &u)
                    .expect("dimensions checked at construction")
            })
            .collect();
        self.measure.evaluate_values(&h, self.c.space())
    }

    pub fn curve_satisfied(&self, u: [f64; 2], x: [f64; 2]) -> bool {
        self.curve_value(u, x) <= ACCEPTABILITY_TOLERANCE
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.halfplanes.iter().all(|h| h.contains(x))
            && self.curve_directions.iter().all(|&u| self.curve_satisfied(u, x))
    }

    /// Whether each constraint is monotone along lines and columns.
    pub(crate) fn monotone(&self) -> bool {
        !matches!(self.family.kind, FamilyKind::Fungibility { .. })
    }

    /// Line constraints on `x_1 + x_2 = c`.
    pub(crate) fn line_constraints(&self, c: f64) -> Vec<LineConstraint<'_>> {
        let mut out: Vec<LineConstraint<'_>> = Vec::new();
        for h in &self.halfplanes {
            let hp = *h;
            out.push(LineConstraint {
                side: side_of(hp.u),
                ok: Box::new(move |x1| hp.contains([x1, c - x1])),
            });
        }
        for &u in &self.curve_directions {
            out.push(LineConstraint {
                side: side_of(u),
                ok: Box::new(move |x1| self.curve_satisfied(u, [x1, c - x1])),
            });
        }
        out
    }
}

fn side_of(u: [f64; 2]) -> Side {
    if (u[0] - u[1]).abs() <= 1e-12 {
        Side::Neutral
    } else if u[0] > u[1] {
        Side::Helped
    } else {
        Side::Hurt
    }
}

pub(crate) fn require_two(c: &RandomVector, operation: &'static str) -> Result<()> {
    if c.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            operation,
            required: "two agents",
            found: c.dim(),
        });
    }
    Ok(())
}

/// Certification through the nearest-to-diagonal selection or no transfer.
#[derive(Debug, Clone)]
pub struct InnerBound {
    c: RandomVector,
    family: TransferFamily,
    measures: [RiskMeasure; 2],
    /// Stand-alone risks: `x >= r(C)` needs no transfer.
    pub granular_corner: [f64; 2],
}

impl InnerBound {
    pub fn new(c: &RandomVector, family: &TransferFamily, spec: &VectorRisk) -> Result<Self> {
        require_two(c, "inner bound")?;
        family.check_dim(2)?;
        spec.check_dim(2)?;
        let r = spec.evaluate(c)?;
        Ok(Self {
            c: c.clone(),
            family: family.clone(),
            measures: [spec.component(0), spec.component(1)],
            granular_corner: [r[0], r[1]],
        })
    }

    pub fn granular_accepts(&self, x: [f64; 2]) -> bool {
        (0..2).all(|i| self.granular_corner[i] - x[i] <= ACCEPTABILITY_TOLERANCE)
    }

    /// Risk of agent `i` under the nearest-to-diagonal selection of `X(C + x)`.
    pub fn selection_risk(&self, i: usize, x: [f64; 2]) -> f64 {
        let col: Vec<f64> = self
            .c
            .rows()
            .map(|row| nearest_line_point(&self.family, [row[0] + x[0], row[1] + x[1]], 0.0)[i])
            .collect();
        self.measures[i].evaluate_values(&col, self.c.space())
    }

    pub fn selection_accepts(&self, x: [f64; 2]) -> bool {
        let (a, b) = crate::selection::nearest_line_columns(&self.c, &self.family, x, 0.0);
        self.measures[0].evaluate_values(&a, self.c.space()) <= ACCEPTABILITY_TOLERANCE
            && self.measures[1].evaluate_values(&b, self.c.space()) <= ACCEPTABILITY_TOLERANCE
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.granular_accepts(x) || self.selection_accepts(x)
    }

    /// The selection components move monotonically with `x` for these
    /// families; fixed costs and the fungibility curve are searched densely.
    pub(crate) fn monotone(&self) -> bool {
        match self.family.kind {
            FamilyKind::FixedCost { cost } => cost == 0.0,
            FamilyKind::Fungibility { .. } => false,
            _ => true,
        }
    }

    pub(crate) fn line_constraints(&self, c: f64) -> Vec<LineConstraint<'_>> {
        vec![
            LineConstraint {
                side: Side::Helped,
                ok: Box::new(move |x1| self.selection_risk(0, [x1, c - x1]) <= ACCEPTABILITY_TOLERANCE),
            },
            LineConstraint {
                side: Side::Hurt,
                ok: Box::new(move |x1| self.selection_risk(1, [x1, c - x1]) <= ACCEPTABILITY_TOLERANCE),
            },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    /// Satisfied for all `x_1` above a threshold.
    Helped,
    /// Satisfied for all `x_1` below a threshold.
    Hurt,
    /// Constant along the line.
    Neutral,
}

pub(crate) struct LineConstraint<'a> {
    pub side: Side,
    pub ok: Box<dyn Fn(f64) -> bool + Sync + 'a>,
}

/// Interval of feasible `x_1` on one line, or `None`.
pub(crate) fn line_interval(
    constraints: &[LineConstraint<'_>],
    bracket: (f64, f64),
    monotone: bool,
    tol: f64,
) -> Option<(f64, f64)> {
    let (lo, hi) = bracket;
    if !monotone {
        const SCAN: usize = 801;
        let mut first = None;
        let mut last = None;
        for k in 0..SCAN {
            let x1 = lo + (hi - lo) * k as f64 / (SCAN - 1) as f64;
            if constraints.iter().all(|c| (c.ok)(x1)) {
                first.get_or_insert(x1);
                last = Some(x1);
            }
        }
        return first.zip(last);
    }
    let mid = 0.5 * (lo + hi);
    let mut left = lo;
    let mut right = hi;
    for c in constraints {
        match c.side {
            Side::Neutral => {
                if !(c.ok)(mid) {
                    return None;
                }
            }
            Side::Helped => {
                if !(c.ok)(hi) {
                    return None;
                }
                if !(c.ok)(left) {
                    left = bisect(left, hi, tol, |x| (c.ok)(x));
                }
            }
            Side::Hurt => {
                if !(c.ok)(lo) {
                    return None;
                }
                if !(c.ok)(right) {
                    right = bisect(lo, right, tol, |x| !(c.ok)(x));
                    // `bisect` returns the first failing point; step back
                    right -= tol;
                }
            }
        }
        if left > right {
            return None;
        }
    }
    Some((left, right))
}

/// Smallest `x` in `[lo, hi]` with `pred(x)` (to within `tol`), assuming
/// `pred` is false then true and `pred(hi)` holds.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, tol: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Lowest level `c` in `[lo, hi]` whose line is feasible, assuming
/// feasibility is monotone in `c` and holds at `hi`. Returns the level and a
/// feasible `x_1` on it.
pub(crate) fn lowest_level(
    lo: f64,
    hi: f64,
    tol: f64,
    feasible: impl Fn(f64) -> Option<f64>,
) -> Option<(f64, f64)> {
    let mut best = (hi, feasible(hi)?);
    if let Some(x1) = feasible(lo) {
        return Some((lo, x1));
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        match feasible(mid) {
            Some(x1) => {
                b = mid;
                best = (mid, x1);
            }
            None => a = mid,
        }
    }
    Some(best)
}
