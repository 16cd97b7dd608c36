//! Families of admissible intragroup transfers.
//!
//! A family maps the capital vector `C(ω)` of one scenario to the set `I(C)`
//! of transfer vectors the agents may execute; the attainable positions are
//! `X(C) = C + I(C)`. Every set here is lower closed, contains the negative
//! orthant and lies in `{Σ y_i <= 0}`.
//!
//! A safety margin keeps donors above a buffer by evaluating the family at an
//! effective capital `C'` (`C - a` or `C - λ C^+`) while the positions still
//! start at `C`: `X(C) = C + I(C')`.

pub mod ode;

use serde::Serialize;

use crate::error::{Error, Result};

/// Slack for membership and sign tests.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// No transfers: `I(C)` is the negative orthant.
    Granular,
    /// Anything with a non-positive total.
    Unconstrained,
    /// Transfers may not push a solvent donor below zero:
    /// `Σ y <= 0`, `y_i >= -C_i^+`.
    NoBankruptcy,
    /// Two agents; a donor giving `g` delivers `π g`.
    ProportionalCost { pi: f64 },
    /// Two agents; any transfer burns a fixed amount `cost`.
    FixedCost { cost: f64 },
    /// Two agents; frictions grow as the donor's capital falls below its
    /// threshold (see [`ode`]).
    Fungibility { thresholds: [f64; 2], exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", content = "values", rename_all = "snake_case")]
pub enum Margin {
    /// Evaluate the family at `C - a`.
    Fixed(Vec<f64>),
    /// Evaluate the family at `C - λ C^+`.
    Proportional(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferFamily {
    pub kind: FamilyKind,
    pub margin: Option<Margin>,
}

/// Pareto boundary of `X(C)` for one two-agent scenario. Each piece is a
/// polyline with `x_1` increasing and `x_2` strictly decreasing; pieces are
/// ordered left to right. Unbounded boundaries are truncated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierCurve {
    pub pieces: Vec<Vec<[f64; 2]>>,
    pub truncated: bool,
}

impl FrontierCurve {
    pub fn points(&self) -> impl Iterator<Item = &[f64; 2]> {
        self.pieces.iter().flatten()
    }

    pub fn max_dot(&self, u: [f64; 2]) -> f64 {
        self.points()
            .map(|p| u[0] * p[0] + u[1] * p[1])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Within each piece, strictly decreasing in the coordinatewise order.
    pub fn is_pareto_ordered(&self) -> bool {
        self.pieces.iter().all(|piece| {
            piece
                .windows(2)
                .all(|w| w[1][0] > w[0][0] && w[1][1] < w[0][1])
        })
    }
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

impl TransferFamily {
    pub fn new(kind: FamilyKind, margin: Option<Margin>) -> Result<Self> {
        let family = Self { kind, margin };
        family.validate()?;
        Ok(family)
    }

    pub fn granular() -> Self {
        Self { kind: FamilyKind::Granular, margin: None }
    }

    pub fn unconstrained() -> Self {
        Self { kind: FamilyKind::Unconstrained, margin: None }
    }

    pub fn no_bankruptcy() -> Self {
        Self { kind: FamilyKind::NoBankruptcy, margin: None }
    }

    pub fn with_margin(mut self, margin: Margin) -> Result<Self> {
        self.margin = Some(margin);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            FamilyKind::ProportionalCost { pi } => {
                if !(0.0..=1.0).contains(pi) {
                    return Err(Error::InvalidParameter(format!(
                        "transfer efficiency {pi} must lie in [0, 1]"
                    )));
                }
            }
            FamilyKind::FixedCost { cost } => {
                if !(*cost >= 0.0 && cost.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "fixed transfer cost {cost} must be finite and non-negative"
                    )));
                }
            }
            FamilyKind::Fungibility { thresholds, exponent } => {
                if thresholds.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
                    return Err(Error::InvalidParameter(
                        "fungibility thresholds must be positive and finite".into(),
                    ));
                }
                if !(*exponent >= 1.0 && exponent.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "fungibility exponent {exponent} must be at least 1"
                    )));
                }
            }
            _ => {}
        }
        match &self.margin {
            Some(Margin::Fixed(a)) => {
                if a.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                    return Err(Error::InvalidParameter(
                        "fixed margins must be finite and non-negative".into(),
                    ));
                }
            }
            Some(Margin::Proportional(l)) => {
                if l.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::InvalidParameter(
                        "proportional margins must lie in [0, 1]".into(),
                    ));
                }
            }
            None => {}
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::Granular => "granular",
            FamilyKind::Unconstrained => "unconstrained",
            FamilyKind::NoBankruptcy => "ntb",
            FamilyKind::ProportionalCost { .. } => "proportional-cost",
            FamilyKind::FixedCost { .. } => "fixed-cost",
            FamilyKind::Fungibility { .. } => "fungibility",
        }
    }

    /// Checks that the family (and its margin) is defined for `d` agents.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        let two_only = matches!(
            self.kind,
            FamilyKind::ProportionalCost { .. } | FamilyKind::FixedCost { .. } | FamilyKind::Fungibility { .. }
        );
        if two_only && d != 2 {
            return Err(Error::UnsupportedDimension {
                operation: "this transfer family",
                required: "two agents",
                found: d,
            });
        }
        if d == 0 {
            return Err(Error::InvalidParameter("no agents".into()));
        }
        if let Some(Margin::Fixed(v) | Margin::Proportional(v)) = &self.margin {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.len() });
            }
        }
        Ok(())
    }

    /// Whether `I(C)` actually depends on `C`. When it does not, shifting the
    /// capital translates `X(C)` rigidly.
    pub fn depends_on_capital(&self) -> bool {
        matches!(self.kind, FamilyKind::NoBankruptcy | FamilyKind::Fungibility { .. })
    }

    /// Finitely many linear inequalities per scenario.
    pub fn is_polyhedral(&self) -> bool {
        matches!(
            self.kind,
            FamilyKind::Granular
                | FamilyKind::Unconstrained
                | FamilyKind::NoBankruptcy
                | FamilyKind::ProportionalCost { .. }
        )
    }

    pub fn is_convex(&self) -> bool {
        match self.kind {
            FamilyKind::FixedCost { cost } => cost == 0.0,
            _ => true,
        }
    }

    /// Whether `z ∈ I(C + y)` implies `z + y ∈ I(C)` for all `y ∈ I(C)`.
    /// Capital-independent families are closed under addition; the
    /// no-bankruptcy family keeps the property under a fixed margin but loses
    /// it under a proportional one. Unknown for the fungibility curve.
    pub fn satisfies_iteration_property(&self) -> bool {
        match self.kind {
            FamilyKind::NoBankruptcy => !matches!(self.margin, Some(Margin::Proportional(_))),
            FamilyKind::Fungibility { .. } => false,
            _ => true,
        }
    }

    /// The capital at which the underlying family is evaluated.
    pub fn effective_capital(&self, row: &[f64]) -> Vec<f64> {
        match &self.margin {
            None => row.to_vec(),
            Some(Margin::Fixed(a)) => row.iter().zip(a).map(|(c, a)| c - a).collect(),
            Some(Margin::Proportional(l)) => row.iter().zip(l).map(|(c, l)| c - l * pos(*c)).collect(),
        }
    }

    /// Bounds `[lo, hi]` on the amount `t` agent 1 hands to agent 2 when the
    /// two-agent Pareto boundary is `C + (-t, t)`. `None` for families whose
    /// boundary is not of this form.
    pub fn signed_transfer_bounds(&self, row: &[f64]) -> Option<(f64, f64)> {
        if row.len() != 2 {
            return None;
        }
        match self.kind {
            FamilyKind::Granular => Some((0.0, 0.0)),
            FamilyKind::Unconstrained => Some((f64::NEG_INFINITY, f64::INFINITY)),
            FamilyKind::ProportionalCost { pi: 1.0 } => Some((f64::NEG_INFINITY, f64::INFINITY)),
            FamilyKind::FixedCost { cost: 0.0 } => Some((f64::NEG_INFINITY, f64::INFINITY)),
            FamilyKind::NoBankruptcy => {
                let e = self.effective_capital(row);
                Some((-pos(e[1]), pos(e[0])))
            }
            _ => None,
        }
    }

    fn check_row(&self, row: &[f64], other: usize) -> Result<()> {
        self.check_dim(row.len())?;
        if other != row.len() {
            return Err(Error::DimensionMismatch { expected: row.len(), found: other });
        }
        Ok(())
    }

    /// `y ∈ I(C')` for the scenario capital `row`.
    pub fn contains(&self, row: &[f64], y: &[f64]) -> Result<bool> {
        self.check_row(row, y.len())?;
        let tol = MEMBERSHIP_TOLERANCE;
        let e = self.effective_capital(row);
        let total: f64 = y.iter().sum();
        Ok(match &self.kind {
            FamilyKind::Granular => y.iter().all(|&v| v <= tol),
            FamilyKind::Unconstrained => total <= tol,
            FamilyKind::NoBankruptcy => {
                y.iter().zip(&e).map(|(&v, &c)| v.max(-pos(c))).sum::<f64>() <= tol
            }
            FamilyKind::ProportionalCost { pi } => {
                y[0] + pi * y[1] <= tol && pi * y[0] + y[1] <= tol
            }
            FamilyKind::FixedCost { cost } => y.iter().all(|&v| v <= tol) || total <= -cost + tol,
            FamilyKind::Fungibility { thresholds, exponent } => {
                fungibility_contains(&e, [e[0] + y[0], e[1] + y[1]], *thresholds, *exponent)
            }
        })
    }

    /// `sup { <u, x> : x ∈ X(C) }` for the scenario capital `row`;
    /// `f64::INFINITY` when the set is unbounded in direction `u`.
    pub fn support_function(&self, row: &[f64], u: &[f64]) -> Result<f64> {
        self.check_row(row, u.len())?;
        if let Some(&bad) = u.iter().find(|&&v| v < 0.0 || v.is_nan()) {
            return Err(Error::NegativeDirection(bad));
        }
        let base: f64 = row.iter().zip(u).map(|(c, u)| c * u).sum();
        Ok(base + self.transfer_support(row, u))
    }

    /// `sup { <u, y> : y ∈ I(C') }` for `u >= 0`.
    fn transfer_support(&self, row: &[f64], u: &[f64]) -> f64 {
        let tol = MEMBERSHIP_TOLERANCE * (1.0 + u.iter().fold(0.0f64, |a, &b| a.max(b)));
        let all_equal = u.iter().all(|&v| (v - u[0]).abs() <= tol);
        match &self.kind {
            FamilyKind::Granular => 0.0,
            FamilyKind::Unconstrained => {
                if all_equal {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FamilyKind::NoBankruptcy => {
                let e = self.effective_capital(row);
                let (k, &top) = u
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .expect("non-empty direction");
                e.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(j, &c)| (top - u[j]) * pos(c))
                    .sum()
            }
            FamilyKind::ProportionalCost { pi } => {
                if u[0] >= pi * u[1] - tol && u[1] >= pi * u[0] - tol {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FamilyKind::FixedCost { .. } => {
                if all_equal {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FamilyKind::Fungibility { thresholds, exponent } => {
                let e = self.effective_capital(row);
                fungibility_transfer_support(&e, [u[0], u[1]], *thresholds, *exponent)
            }
        }
    }

    /// Polyline sampling of the Pareto boundary of `X(C)`, two agents only.
    /// Polyhedral vertices are kept exactly; `resolution` controls the number
    /// of samples per piece (RK4 steps per branch for the fungibility curve).
    pub fn frontier(&self, row: &[f64], resolution: usize) -> Result<FrontierCurve> {
        if row.len() != 2 {
            return Err(Error::UnsupportedDimension {
                operation: "frontier",
                required: "two agents",
                found: row.len(),
            });
        }
        self.check_dim(2)?;
        if resolution == 0 {
            return Err(Error::InvalidParameter("frontier resolution must be positive".into()));
        }
        let c = [row[0], row[1]];
        let e = self.effective_capital(row);
        let span = 1.0f64.max(c[0].abs() + c[1].abs());
        let along = |t: f64| [c[0] - t, c[1] + t];
        let (pieces, truncated) = match &self.kind {
            FamilyKind::Granular => (vec![vec![c]], false),
            FamilyKind::Unconstrained => (vec![densify(&[along(span), along(-span)], resolution)], true),
            FamilyKind::NoBankruptcy => {
                let (lo, hi) = (-pos(e[1]), pos(e[0]));
                let mut vertices = vec![along(hi)];
                if hi > 0.0 && lo < 0.0 {
                    vertices.push(c);
                }
                if lo < hi {
                    vertices.push(along(lo));
                }
                (vec![densify(&vertices, resolution)], false)
            }
            FamilyKind::ProportionalCost { pi } => {
                if *pi == 0.0 {
                    (vec![vec![c]], false)
                } else {
                    let left = [c[0] - span, c[1] + pi * span];
                    let right = [c[0] + pi * span, c[1] - span];
                    (vec![densify(&[left, c, right], resolution)], true)
                }
            }
            FamilyKind::FixedCost { cost } => {
                let a = *cost;
                if a == 0.0 {
                    (vec![densify(&[along(span), along(-span)], resolution)], true)
                } else {
                    let left = densify(&[[c[0] - a - span, c[1] + span], [c[0] - a, c[1]]], resolution);
                    let right = densify(&[[c[0], c[1] - a], [c[0] + span, c[1] - a - span]], resolution);
                    (vec![left, vec![c], right], true)
                }
            }
            FamilyKind::Fungibility { thresholds, exponent } => {
                let shift = [c[0] - e[0], c[1] - e[1]];
                let mut piece = Vec::new();
                // agent 1 gives: donor coordinate is x_1
                let left = ode::integrate_branch(e[0], e[1], thresholds[0], *exponent, resolution);
                for &(s, x2) in left.iter().rev() {
                    piece.push([s + shift[0], x2 + shift[1]]);
                }
                piece.pop();
                // agent 2 gives: donor coordinate is x_2
                let right = ode::integrate_branch(e[1], e[0], thresholds[1], *exponent, resolution);
                for &(s, x1) in &right {
                    piece.push([x1 + shift[0], s + shift[1]]);
                }
                piece.dedup_by(|b, a| b[0] <= a[0] || b[1] >= a[1]);
                (vec![piece], false)
            }
        };
        Ok(FrontierCurve { pieces, truncated })
    }

    /// Whether `z ∈ I(C + y)` implies `z + y ∈ I(C)` at this triple.
    pub fn iteration_check(&self, row: &[f64], y: &[f64], z: &[f64]) -> Result<bool> {
        let shifted: Vec<f64> = row.iter().zip(y).map(|(c, y)| c + y).collect();
        if !self.contains(&shifted, z)? {
            return Ok(true);
        }
        let combined: Vec<f64> = z.iter().zip(y).map(|(z, y)| z + y).collect();
        self.contains(row, &combined)
    }
}

/// Searches a coarse two-agent grid for `(C, y, z)` with `y ∈ I(C)`,
/// `z ∈ I(C + y)` but `z + y ∉ I(C)`.
pub fn find_iteration_violation(family: &TransferFamily, grid: &[f64]) -> Result<Option<[[f64; 2]; 3]>> {
    for &c1 in grid {
        for &c2 in grid {
            let c = [c1, c2];
            for &y1 in grid {
                for &y2 in grid {
                    let y = [y1, y2];
                    if !family.contains(&c, &y)? {
                        continue;
                    }
                    for &z1 in grid {
                        for &z2 in grid {
                            let z = [z1, z2];
                            if !family.iteration_check(&c, &y, &z)? {
                                return Ok(Some([c, y, z]));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Evenly subdivides a vertex chain so it carries about `resolution` points.
fn densify(vertices: &[[f64; 2]], resolution: usize) -> Vec<[f64; 2]> {
    if vertices.len() < 2 {
        return vertices.to_vec();
    }
    let segments = vertices.len() - 1;
    let per = (resolution / segments).max(1);
    let mut out = Vec::with_capacity(segments * per + 1);
    for w in vertices.windows(2) {
        for k in 0..per {
            let t = k as f64 / per as f64;
            out.push([w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])]);
        }
    }
    out.push(vertices[segments]);
    out
}

/// Rightmost `x_1` reachable from `e` (agent 2 gives everything it can).
fn fungibility_right_end(e: &[f64], cbar: [f64; 2], p: f64) -> f64 {
    e[0] + ode::gain(pos(e[1]), 0.0, cbar[1], p)
}

/// Upper boundary height of the attainable set at abscissa `x1`, in base
/// coordinates; `None` to the right of the reachable range.
pub(crate) fn fungibility_height(e: &[f64], x1: f64, cbar: [f64; 2], p: f64) -> Option<f64> {
    let right_end = fungibility_right_end(e, cbar, p);
    if x1 > right_end + MEMBERSHIP_TOLERANCE {
        return None;
    }
    if x1 <= e[0] {
        if e[0] <= 0.0 {
            return Some(e[1]);
        }
        // agent 1 donor holding s = max(x1, 0)
        let s = x1.max(0.0);
        return Some(e[1] + ode::gain(e[0], s, cbar[0], p));
    }
    let start = pos(e[1]);
    let target = x1 - e[0];
    let s = ode::solve_decreasing(start, target, |s| ode::gain(start, s, cbar[1], p));
    Some(s)
}

fn fungibility_contains(e: &[f64], point: [f64; 2], cbar: [f64; 2], p: f64) -> bool {
    match fungibility_height(e, point[0], cbar, p) {
        Some(h) => point[1] <= h + MEMBERSHIP_TOLERANCE,
        None => false,
    }
}

fn fungibility_transfer_support(e: &[f64], u: [f64; 2], cbar: [f64; 2], p: f64) -> f64 {
    let mut best = 0.0f64;
    if e[1] > 0.0 {
        // agent 2 gives down to s; agent 1 gains
        let s = ode::best_donor_level(e[1], u[1], u[0], cbar[1], p);
        best = best.max(u[0] * ode::gain(e[1], s, cbar[1], p) + u[1] * (s - e[1]));
    }
    if e[0] > 0.0 {
        let s = ode::best_donor_level(e[0], u[0], u[1], cbar[0], p);
        best = best.max(u[1] * ode::gain(e[0], s, cbar[0], p) + u[0] * (s - e[0]));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ptc(pi: f64) -> TransferFamily {
        TransferFamily::new(FamilyKind::ProportionalCost { pi }, None).unwrap()
    }

    fn ode_family(p: f64) -> TransferFamily {
        TransferFamily::new(FamilyKind::Fungibility { thresholds: [1.0, 1.0], exponent: p }, None).unwrap()
    }

    #[test]
    fn granular_membership() {
        let g = TransferFamily::granular();
        assert!(g.contains(&[0.0, 0.0], &[-1.0, -1.0]).unwrap());
        assert!(!g.contains(&[0.0, 0.0], &[0.1, -5.0]).unwrap());
    }

    #[test]
    fn no_bankruptcy_membership() {
        let f = TransferFamily::no_bankruptcy();
        let c = [3.0, -2.0];
        assert!(f.contains(&c, &[-3.0, 3.0]).unwrap());
        assert!(!f.contains(&c, &[-3.5, 3.5]).unwrap());
        assert!(!f.contains(&c, &[1.0, -1.0]).unwrap());
    }

    #[test]
    fn proportional_cost_membership() {
        let f = ptc(0.5);
        assert!(f.contains(&[0.0, 0.0], &[-2.0, 1.0]).unwrap());
        assert!(!f.contains(&[0.0, 0.0], &[-1.0, 1.5]).unwrap());
    }

    #[test]
    fn two_agent_families_reject_other_dimensions() {
        for f in [ptc(0.5), ode_family(1.0)] {
            assert!(matches!(
                f.contains(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]),
                Err(Error::UnsupportedDimension { .. })
            ));
        }
        assert!(matches!(
            TransferFamily::no_bankruptcy().frontier(&[1.0, 2.0, 3.0], 8),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn support_function_examples() {
        let f = TransferFamily::no_bankruptcy();
        assert_eq!(f.support_function(&[3.0, 2.0], &[1.0, 0.0]).unwrap(), 5.0);
        assert_eq!(f.support_function(&[3.0, -2.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(f.support_function(&[3.0, 2.0], &[1.0, 1.0]).unwrap(), 5.0);
        let u = TransferFamily::unconstrained();
        assert_eq!(u.support_function(&[3.0, 2.0], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert_eq!(u.support_function(&[3.0, 2.0], &[1.0, 1.0]).unwrap(), 5.0);
        assert!(matches!(
            f.support_function(&[3.0, 2.0], &[-1.0, 0.0]),
            Err(Error::NegativeDirection(_))
        ));
        for fam in [
            TransferFamily::granular(),
            ptc(0.3),
            TransferFamily::new(FamilyKind::FixedCost { cost: 1.0 }, None).unwrap(),
            ode_family(2.0),
        ] {
            let h = fam.support_function(&[1.5, -0.5], &[1.0, 1.0]).unwrap();
            assert!((h - 1.0).abs() < 1e-12, "{}: {h}", fam.name());
        }
    }

    #[test]
    fn no_bankruptcy_frontier_vertices() {
        let f = TransferFamily::no_bankruptcy();
        let curve = f.frontier(&[3.0, 2.0], 10).unwrap();
        let pts: Vec<_> = curve.points().copied().collect();
        assert_eq!(pts.first(), Some(&[0.0, 5.0]));
        assert_eq!(pts.last(), Some(&[5.0, 0.0]));
        assert!(pts.contains(&[3.0, 2.0]));
        assert!(curve.is_pareto_ordered());
        for p in &pts {
            assert!((p[0] + p[1] - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn granular_frontier_is_a_point() {
        let curve = TransferFamily::granular().frontier(&[1.0, 1.0], 16).unwrap();
        assert_eq!(curve.pieces, vec![vec![[1.0, 1.0]]]);
    }

    #[test]
    fn fungibility_frontier_matches_separable_solution() {
        let f = ode_family(1.0);
        let curve = f.frontier(&[0.0, 1.0], 1024).unwrap();
        assert!(curve.is_pareto_ordered());
        for p in curve.points() {
            let closed = 1.0 - 2.0 * (p[0] - 0.0);
            assert!((p[1] * p[1] - closed).abs() < 1e-6);
        }
        let h = fungibility_height(&[0.0, 1.0], 0.375, [1.0, 1.0], 1.0).unwrap();
        assert!((h - 0.5).abs() < 1e-9);
    }

    #[test]
    fn fungibility_support_matches_polyline() {
        let f = TransferFamily::new(FamilyKind::Fungibility { thresholds: [0.8, 1.3], exponent: 2.0 }, None).unwrap();
        for row in [[0.5, 2.0], [1.7, 0.2], [-0.3, 1.1], [2.0, 2.0]] {
            let curve = f.frontier(&row, 1024).unwrap();
            for k in 0..=16 {
                let th = std::f64::consts::FRAC_PI_2 * k as f64 / 16.0;
                let u = [th.cos(), th.sin()];
                let h = f.support_function(&row, &u).unwrap();
                assert!((h - curve.max_dot(u)).abs() < 1e-5, "{row:?} {u:?}");
            }
        }
    }

    #[test]
    fn fixed_cost_frontier_has_three_pieces() {
        let f = TransferFamily::new(FamilyKind::FixedCost { cost: 1.0 }, None).unwrap();
        let curve = f.frontier(&[2.0, 2.0], 8).unwrap();
        assert_eq!(curve.pieces.len(), 3);
        assert!(curve.is_pareto_ordered());
        assert_eq!(curve.pieces[1], vec![[2.0, 2.0]]);
    }

    #[test]
    fn margins_shift_the_family_argument() {
        let f = TransferFamily::no_bankruptcy().with_margin(Margin::Fixed(vec![0.5, 0.5])).unwrap();
        // agent 1 may only give down to its buffer
        assert!(f.contains(&[3.0, 1.0], &[-2.5, 2.5]).unwrap());
        assert!(!f.contains(&[3.0, 1.0], &[-2.6, 2.6]).unwrap());
        let curve = f.frontier(&[3.0, 1.0], 4).unwrap();
        let pts: Vec<_> = curve.points().copied().collect();
        assert_eq!(pts.first(), Some(&[0.5, 3.5]));
        assert_eq!(pts.last(), Some(&[3.5, 0.5]));
        let p = TransferFamily::no_bankruptcy()
            .with_margin(Margin::Proportional(vec![0.2, 0.2]))
            .unwrap();
        assert_eq!(p.signed_transfer_bounds(&[1.0, 2.0]), Some((-1.6, 0.8)));
    }

    #[test]
    fn iteration_property_examples() {
        let grid = [-1.0, -0.5, 0.0, 0.5, 1.0];
        for f in [
            TransferFamily::granular(),
            TransferFamily::unconstrained(),
            TransferFamily::no_bankruptcy(),
            TransferFamily::new(FamilyKind::FixedCost { cost: 0.5 }, None).unwrap(),
        ] {
            assert_eq!(find_iteration_violation(&f, &grid).unwrap(), None, "{}", f.name());
        }
        let p = TransferFamily::no_bankruptcy()
            .with_margin(Margin::Proportional(vec![0.5, 0.5]))
            .unwrap();
        let fine: Vec<f64> = (-4..=4).map(|k| k as f64 * 0.25).collect();
        let [c, y, z] = find_iteration_violation(&p, &fine).unwrap().expect("violation");
        assert!(p.contains(&c, &y).unwrap());
        assert!(!p.iteration_check(&c, &y, &z).unwrap());
    }
}
