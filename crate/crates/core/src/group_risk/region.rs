//! Grid approximation of the two-agent group risk region.

use rayon::prelude::*;
use serde::Serialize;

use super::bounds::{require_two, HalfPlane, InnerBound, OuterBound};
use super::{total_risk_with, TotalRisk, TotalRiskOptions};
use crate::error::{Error, Result};
use crate::risk::VectorRisk;
use crate::scenario::RandomVector;
use crate::selection::{acceptable_with_thresholds, exact_path_available, SolverOptions};
use crate::transfer_sets::{FamilyKind, TransferFamily};

#[derive(Debug, Clone, Copy)]
pub struct RegionOptions {
    /// Grid points per axis.
    pub resolution: usize,
    pub use_three_dirs: bool,
    pub dir_count: usize,
    /// `[lower-left, upper-right]`; derived from the risks of `C` when unset.
    pub bbox: Option<[[f64; 2]; 2]>,
    /// Cells left undecided by the bounds are settled by a linear program
    /// when the instance has at most this many scenarios.
    pub max_cell_lp_scenarios: usize,
    pub total: TotalRiskOptions,
}

impl Default for RegionOptions {
    fn default() -> Self {
        Self {
            resolution: 201,
            use_three_dirs: true,
            dir_count: 64,
            bbox: None,
            max_cell_lp_scenarios: 32,
            total: TotalRiskOptions::default(),
        }
    }
}

/// Acceptance grids over a box. Cell `(i, j)` is the point
/// `(xs[i], ys[j])`; grids are stored row by row with `x_2` ascending.
#[derive(Debug, Clone, Serialize)]
pub struct RegionApprox {
    pub bbox: [[f64; 2]; 2],
    pub resolution: usize,
    /// Certified acceptable: inner bound or a conclusive program.
    pub grid: Vec<bool>,
    pub inner_grid: Vec<bool>,
    /// `None` when no outer bound applies (non-coherent components).
    pub outer_grid: Option<Vec<bool>>,
    pub outer_halfplanes: Vec<HalfPlane>,
    pub outer_curve_directions: Vec<[f64; 2]>,
    /// Lowest certified point of each column that has one.
    pub inner_points: Vec<[f64; 2]>,
    /// Cells decided by a linear program.
    pub solver_cells: usize,
    /// `min Σ x_i` over certified cells.
    pub grid_total: Option<f64>,
    #[serde(skip)]
    pub total_risk: TotalRisk,
}

impl RegionApprox {
    pub fn xs(&self) -> Vec<f64> {
        axis(self.bbox[0][0], self.bbox[1][0], self.resolution)
    }

    pub fn ys(&self) -> Vec<f64> {
        axis(self.bbox[0][1], self.bbox[1][1], self.resolution)
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        let at = |k: usize, lo: f64, hi: f64| lo + (hi - lo) * k as f64 / (self.resolution - 1) as f64;
        [
            at(i, self.bbox[0][0], self.bbox[1][0]),
            at(j, self.bbox[0][1], self.bbox[1][1]),
        ]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.resolution + i
    }

    pub fn accepts(&self, i: usize, j: usize) -> bool {
        self.grid[self.index(i, j)]
    }

    /// Accepted cells stay accepted when either coordinate increases.
    pub fn is_upper_set(&self) -> bool {
        is_upper_set(&self.grid, self.resolution)
    }

    /// Cells accepted by the outer bound but not certified.
    pub fn gap_cells(&self) -> usize {
        match &self.outer_grid {
            Some(outer) => outer.iter().zip(&self.grid).filter(|(o, g)| **o && !**g).count(),
            None => 0,
        }
    }
}

pub(crate) fn is_upper_set(grid: &[bool], res: usize) -> bool {
    for j in 0..res {
        for i in 0..res {
            if grid[j * res + i] {
                if i + 1 < res && !grid[j * res + i + 1] {
                    return false;
                }
                if j + 1 < res && !grid[(j + 1) * res + i] {
                    return false;
                }
            }
        }
    }
    true
}

fn axis(lo: f64, hi: f64, res: usize) -> Vec<f64> {
    (0..res).map(|k| lo + (hi - lo) * k as f64 / (res - 1) as f64).collect()
}

/// The square below the granular corner `r(C)` reaching down to the lowest
/// relevant total, padded by 20% on every side.
pub fn default_box(corner: [f64; 2], lowest_total: f64) -> [[f64; 2]; 2] {
    let mut width = corner[0] + corner[1] - lowest_total;
    if !(width > 1e-9) {
        width = 0.1 * (corner[0].abs() + corner[1].abs()).max(1.0);
    }
    let pad = 0.2 * width;
    [
        [corner[0] - width - pad, corner[1] - width - pad],
        [corner[0] + pad, corner[1] + pad],
    ]
}

/// The granular region `r(C) + R^2_+` on a grid.
pub fn granular_region(c: &RandomVector, spec: &VectorRisk, opts: &RegionOptions) -> Result<RegionApprox> {
    region(c, &TransferFamily::granular(), spec, opts)
}

pub fn region(
    c: &RandomVector,
    family: &TransferFamily,
    spec: &VectorRisk,
    opts: &RegionOptions,
) -> Result<RegionApprox> {
    require_two(c, "region")?;
    if opts.resolution < 2 {
        return Err(Error::InvalidParameter("grid resolution must be at least 2".into()));
    }
    let res = opts.resolution;
    let total_opts = TotalRiskOptions {
        use_three_dirs: opts.use_three_dirs,
        dir_count: opts.dir_count,
        ..opts.total
    };
    let total = total_risk_with(c, family, spec, &total_opts)?;
    let inner = InnerBound::new(c, family, spec)?;
    let outer = OuterBound::new(c, family, spec, opts.use_three_dirs, opts.dir_count).ok();
    let bbox = opts.bbox.unwrap_or_else(|| {
        let lowest = total.lower_bound.unwrap_or(total.value).min(total.value);
        default_box(inner.granular_corner, lowest)
    });
    let xs = axis(bbox[0][0], bbox[1][0], res);
    let ys = axis(bbox[0][1], bbox[1][1], res);

    let exact = exact_path_available(c, family, spec, &SolverOptions { max_lp_scenarios: opts.max_cell_lp_scenarios })
        && family.kind != FamilyKind::Granular;
    let upper_closed = family.satisfies_iteration_property();
    let solver = SolverOptions { max_lp_scenarios: opts.max_cell_lp_scenarios };
    let lp_accepts = |x: [f64; 2]| -> Result<bool> {
        let shifted = c.shift(&x)?;
        Ok(acceptable_with_thresholds(&shifted, family, spec, &[0.0, 0.0], solver)?.feasible)
    };

    // columns are independent; each returns (inner, outer, certified, lp count)
    let columns: Vec<Result<(Vec<bool>, Option<Vec<bool>>, Vec<bool>, usize)>> = xs
        .par_iter()
        .map(|&x1| {
            let inner_col = column_membership(&ys, inner.monotone(), |x2| inner.contains([x1, x2]));
            let outer_col = outer
                .as_ref()
                .map(|o| column_membership(&ys, o.monotone(), |x2| o.contains([x1, x2])));
            let mut certified = inner_col.clone();
            let mut solved = 0;
            if exact {
                let undecided: Vec<usize> = (0..res)
                    .filter(|&j| !certified[j] && outer_col.as_ref().is_none_or(|o| o[j]))
                    .collect();
                if upper_closed && !undecided.is_empty() {
                    // undecided cells form a contiguous run below the inner
                    // boundary; find its acceptance threshold by bisection
                    let (mut lo, mut hi) = (0usize, undecided.len());
                    while lo < hi {
                        let mid = (lo + hi) / 2;
                        solved += 1;
                        if lp_accepts([x1, ys[undecided[mid]]])? {
                            hi = mid;
                        } else {
                            lo = mid + 1;
                        }
                    }
                    for &j in &undecided[lo..] {
                        certified[j] = true;
                    }
                } else {
                    for &j in &undecided {
                        solved += 1;
                        certified[j] = lp_accepts([x1, ys[j]])?;
                    }
                }
            }
            Ok((inner_col, outer_col, certified, solved))
        })
        .collect();

    let mut grid = vec![false; res * res];
    let mut inner_grid = vec![false; res * res];
    let mut outer_grid = outer.as_ref().map(|_| vec![false; res * res]);
    let mut solver_cells = 0;
    let mut inner_points = Vec::new();
    let mut grid_total: Option<f64> = None;
    for (i, col) in columns.into_iter().enumerate() {
        let (inner_col, outer_col, certified, solved) = col?;
        solver_cells += solved;
        for j in 0..res {
            let k = j * res + i;
            inner_grid[k] = inner_col[j];
            grid[k] = certified[j];
            if let (Some(g), Some(o)) = (outer_grid.as_mut(), outer_col.as_ref()) {
                g[k] = o[j];
            }
        }
        if let Some(j) = (0..res).find(|&j| inner_col[j]) {
            inner_points.push([xs[i], ys[j]]);
        }
        if let Some(j) = (0..res).find(|&j| certified[j]) {
            let s = xs[i] + ys[j];
            grid_total = Some(grid_total.map_or(s, |t: f64| t.min(s)));
        }
    }

    Ok(RegionApprox {
        bbox,
        resolution: res,
        grid,
        inner_grid,
        outer_grid,
        outer_halfplanes: outer.as_ref().map(|o| o.halfplanes.clone()).unwrap_or_default(),
        outer_curve_directions: outer.as_ref().map(|o| o.curve_directions.clone()).unwrap_or_default(),
        inner_points,
        solver_cells,
        grid_total,
        total_risk: total,
    })
}

/// Membership of one grid column. Monotone predicates are located by
/// bisection on the row index; others are evaluated cell by cell.
fn column_membership(ys: &[f64], monotone: bool, pred: impl Fn(f64) -> bool) -> Vec<bool> {
    let n = ys.len();
    if !monotone {
        return ys.iter().map(|&y| pred(y)).collect();
    }
    if !pred(ys[n - 1]) {
        return vec![false; n];
    }
    let (mut lo, mut hi) = (0usize, n - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pred(ys[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    (0..n).map(|j| j >= lo).collect()
}
