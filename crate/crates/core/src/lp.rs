//! Dense two-phase simplex with bounded variables.
//!
//! Problems here are small (a few hundred rows), so a full tableau is simpler
//! and fast enough. Variables are standardised to `0 <= x <= U` (with `U`
//! possibly infinite); a nonbasic variable sitting at its upper bound is
//! handled by substituting `x = U - x'` in place, so every nonbasic column is
//! at zero in the tableau's own orientation.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const OPTIMALITY_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    kind: RowKind,
    rhs: f64,
}

/// `minimize c'x` subject to linear rows and per-variable bounds.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

/// How an original variable is expressed through standardised columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = offset + sign * col`
    Single { col: usize, sign: f64, offset: f64 },
    /// `x = pos - neg`
    Split { pos: usize, neg: usize },
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_variable(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        debug_assert!(lower <= upper, "empty bound interval [{lower}, {upper}]");
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.push(cost);
        self.cost.len() - 1
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.cost[var] = cost;
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, kind: RowKind, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.cost.len()));
        self.rows.push(Row { coeffs, kind, rhs });
    }

    pub fn solve(&self) -> Result<LpSolution> {
        for j in 0..self.num_vars() {
            if self.lower[j] > self.upper[j] || self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Ok(self.infeasible());
            }
        }

        // standardise variables
        let mut maps = Vec::with_capacity(self.num_vars());
        let mut col_upper = Vec::new();
        let mut col_cost = Vec::new();
        for j in 0..self.num_vars() {
            let (l, u, c) = (self.lower[j], self.upper[j], self.cost[j]);
            if l.is_finite() {
                maps.push(VarMap::Single { col: col_upper.len(), sign: 1.0, offset: l });
                col_upper.push(u - l);
                col_cost.push(c);
            } else if u.is_finite() {
                maps.push(VarMap::Single { col: col_upper.len(), sign: -1.0, offset: u });
                col_upper.push(f64::INFINITY);
                col_cost.push(-c);
            } else {
                let pos = col_upper.len();
                maps.push(VarMap::Split { pos, neg: pos + 1 });
                col_upper.extend([f64::INFINITY, f64::INFINITY]);
                col_cost.extend([c, -c]);
            }
        }
        let structural = col_upper.len();
        let m = self.rows.len();

        // rows over standardised columns, as dense vectors
        let mut dense_rows: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for row in &self.rows {
            let mut dense = vec![0.0; structural];
            let mut b = row.rhs;
            for &(j, a) in &row.coeffs {
                match maps[j] {
                    VarMap::Single { col, sign, offset } => {
                        dense[col] += a * sign;
                        b -= a * offset;
                    }
                    VarMap::Split { pos, neg } => {
                        dense[pos] += a;
                        dense[neg] -= a;
                    }
                }
            }
            dense_rows.push(dense);
            rhs.push(b);
        }

        // slack and artificial columns
        let slack_count = self.rows.iter().filter(|r| r.kind != RowKind::Eq).count();
        let mut slack_of_row = vec![None; m];
        let mut next = structural;
        for (i, row) in self.rows.iter().enumerate() {
            if row.kind != RowKind::Eq {
                slack_of_row[i] = Some(next);
                next += 1;
            }
        }
        debug_assert_eq!(next, structural + slack_count);
        let mut needs_artificial = vec![false; m];
        let mut row_sign = vec![1.0; m];
        for i in 0..m {
            let slack_coef = match self.rows[i].kind {
                RowKind::Le => 1.0,
                RowKind::Ge => -1.0,
                RowKind::Eq => 0.0,
            };
            let sign = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
            row_sign[i] = sign;
            needs_artificial[i] = slack_coef * sign <= 0.0;
        }
        let artificial_count = needs_artificial.iter().filter(|&&a| a).count();
        let total = structural + slack_count + artificial_count;

        let mut tab = Tableau::new(m, total);
        let mut upper = col_upper.clone();
        upper.extend(std::iter::repeat_n(f64::INFINITY, slack_count + artificial_count));
        let mut is_artificial = vec![false; total];
        let mut art = structural + slack_count;
        for i in 0..m {
            let sign = row_sign[i];
            for (j, &a) in dense_rows[i].iter().enumerate() {
                tab.set(i, j, sign * a);
            }
            if let Some(s) = slack_of_row[i] {
                let coef = if self.rows[i].kind == RowKind::Le { 1.0 } else { -1.0 };
                tab.set(i, s, sign * coef);
            }
            tab.set_rhs(i, sign * rhs[i]);
            if needs_artificial[i] {
                tab.set(i, art, 1.0);
                is_artificial[art] = true;
                tab.basis[i] = art;
                art += 1;
            } else {
                tab.basis[i] = slack_of_row[i].expect("row without artificial has a slack");
            }
        }
        tab.upper = upper;
        tab.allowed = vec![true; total];

        // phase one
        if artificial_count > 0 {
            let mut phase_cost = vec![0.0; total];
            for (j, &a) in is_artificial.iter().enumerate() {
                if a {
                    phase_cost[j] = 1.0;
                }
            }
            tab.load_objective(&phase_cost);
            match tab.optimize()? {
                Outcome::Optimal => {}
                Outcome::Unbounded => {
                    return Err(Error::Solver("phase one reported unbounded".into()))
                }
            }
            let infeasibility: f64 = (0..m)
                .filter(|&i| is_artificial[tab.basis[i]])
                .map(|i| tab.value_in_row(i))
                .sum();
            let scale = 1.0 + rhs.iter().fold(0.0f64, |acc, b| acc.max(b.abs()));
            if infeasibility > 1e-7 * scale {
                return Ok(self.infeasible());
            }
            for j in 0..total {
                if is_artificial[j] {
                    tab.allowed[j] = false;
                    tab.upper[j] = 0.0;
                }
            }
            tab.drive_out(&is_artificial);
        }

        // phase two
        let mut phase_cost = vec![0.0; total];
        phase_cost[..structural].copy_from_slice(&col_cost);
        tab.load_objective(&phase_cost);
        match tab.optimize()? {
            Outcome::Optimal => {}
            Outcome::Unbounded => {
                return Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    x: vec![],
                    objective: f64::NEG_INFINITY,
                })
            }
        }

        let cols = tab.column_values();
        let x: Vec<f64> = maps
            .iter()
            .map(|map| match *map {
                VarMap::Single { col, sign, offset } => offset + sign * cols[col],
                VarMap::Split { pos, neg } => cols[pos] - cols[neg],
            })
            .collect();
        self.check_residuals(&x)?;
        let objective = x.iter().zip(&self.cost).map(|(a, c)| a * c).sum();
        Ok(LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
        })
    }

    fn infeasible(&self) -> LpSolution {
        LpSolution {
            status: LpStatus::Infeasible,
            x: vec![],
            objective: f64::INFINITY,
        }
    }

    fn check_residuals(&self, x: &[f64]) -> Result<()> {
        const TOL: f64 = 1e-6;
        for (j, &v) in x.iter().enumerate() {
            let slack = TOL * (1.0 + v.abs());
            if v < self.lower[j] - slack || v > self.upper[j] + slack {
                return Err(Error::Solver(format!(
                    "variable {j} = {v} violates bounds [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            let mut lhs = 0.0;
            let mut magnitude = row.rhs.abs();
            for &(j, a) in &row.coeffs {
                lhs += a * x[j];
                magnitude = magnitude.max((a * x[j]).abs());
            }
            let slack = TOL * (1.0 + magnitude);
            let ok = match row.kind {
                RowKind::Le => lhs <= row.rhs + slack,
                RowKind::Ge => lhs >= row.rhs - slack,
                RowKind::Eq => (lhs - row.rhs).abs() <= slack,
            };
            if !ok {
                return Err(Error::Solver(format!(
                    "row {i} residual too large: lhs {lhs}, rhs {}",
                    row.rhs
                )));
            }
        }
        Ok(())
    }
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    m: usize,
    n: usize,
    /// `(m + 1) x (n + 1)`, row `m` holds reduced costs, column `n` the rhs.
    data: Vec<f64>,
    basis: Vec<usize>,
    upper: Vec<f64>,
    flipped: Vec<bool>,
    allowed: Vec<bool>,
    cost: Vec<f64>,
}

impl Tableau {
    fn new(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            data: vec![0.0; (m + 1) * (n + 1)],
            basis: vec![usize::MAX; m],
            upper: vec![],
            flipped: vec![false; n],
            allowed: vec![],
            cost: vec![0.0; n],
        }
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        r * (self.n + 1) + c
    }

    fn set(&mut self, r: usize, c: usize, v: f64) {
        let i = self.idx(r, c);
        self.data[i] = v;
    }

    fn get(&self, r: usize, c: usize) -> f64 {
        self.data[self.idx(r, c)]
    }

    fn set_rhs(&mut self, r: usize, v: f64) {
        let n = self.n;
        self.set(r, n, v);
    }

    fn value_in_row(&self, r: usize) -> f64 {
        self.get(r, self.n)
    }

    fn is_basic(&self) -> Vec<bool> {
        let mut basic = vec![false; self.n];
        for &b in &self.basis {
            basic[b] = true;
        }
        basic
    }

    /// Rebuilds the reduced-cost row for a new cost vector (original
    /// orientation; flips are applied here).
    fn load_objective(&mut self, cost: &[f64]) {
        self.cost = cost.to_vec();
        let n = self.n;
        let m = self.m;
        for j in 0..=n {
            let v = if j < n {
                if self.flipped[j] {
                    -cost[j]
                } else {
                    cost[j]
                }
            } else {
                0.0
            };
            self.set(m, j, v);
        }
        for r in 0..m {
            let b = self.basis[r];
            let cb = if self.flipped[b] { -cost[b] } else { cost[b] };
            if cb == 0.0 {
                continue;
            }
            let (head, tail) = self.data.split_at_mut(m * (n + 1));
            let row = &head[r * (n + 1)..(r + 1) * (n + 1)];
            for (o, &a) in tail.iter_mut().zip(row) {
                *o -= cb * a;
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.n + 1;
        let p = self.get(r, j);
        {
            let row = &mut self.data[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[j] = 1.0;
        }
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for k in 0..=self.m {
            if k == r {
                continue;
            }
            let f = self.data[k * w + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[k * w..(k + 1) * w];
            for (v, &a) in row.iter_mut().zip(&pivot_row) {
                *v -= f * a;
            }
            row[j] = 0.0;
        }
        self.basis[r] = j;
    }

    /// Substitutes `x_j = U_j - x_j'` for a nonbasic column.
    fn flip(&mut self, j: usize) {
        let u = self.upper[j];
        debug_assert!(u.is_finite());
        let w = self.n + 1;
        for k in 0..=self.m {
            let a = self.data[k * w + j];
            self.data[k * w + self.n] -= a * u;
            self.data[k * w + j] = -a;
        }
        self.flipped[j] = !self.flipped[j];
    }

    fn optimize(&mut self) -> Result<Outcome> {
        let max_iter = 50 * (self.m + self.n) + 1000;
        let mut degenerate = 0usize;
        let mut bland = false;
        for _ in 0..max_iter {
            let basic = self.is_basic();
            let entering = {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..self.n {
                    if basic[j] || !self.allowed[j] || self.upper[j] == 0.0 {
                        continue;
                    }
                    let d = self.get(self.m, j);
                    if d < -OPTIMALITY_TOL {
                        if bland {
                            best = Some((j, d));
                            break;
                        }
                        if best.is_none_or(|(_, bd)| d < bd) {
                            best = Some((j, d));
                        }
                    }
                }
                best
            };
            let Some((j, _)) = entering else {
                return Ok(Outcome::Optimal);
            };

            let mut theta = self.upper[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_mag = 0.0;
            for r in 0..self.m {
                let a = self.get(r, j);
                let beta = self.value_in_row(r).max(0.0);
                let b = self.basis[r];
                let (candidate, to_upper) = if a > PIVOT_TOL {
                    (beta / a, false)
                } else if a < -PIVOT_TOL && self.upper[b].is_finite() {
                    (((beta - self.upper[b]) / a).max(0.0), true)
                } else {
                    continue;
                };
                let better = match leave {
                    None => candidate < theta,
                    Some((lr, _)) => {
                        if candidate < theta - 1e-12 {
                            true
                        } else if candidate <= theta + 1e-12 {
                            if bland {
                                b < self.basis[lr]
                            } else {
                                a.abs() > leave_mag
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    theta = candidate;
                    leave = Some((r, to_upper));
                    leave_mag = a.abs();
                }
            }

            match leave {
                None if theta.is_infinite() => return Ok(Outcome::Unbounded),
                None => self.flip(j),
                Some((r, to_upper)) => {
                    let leaving = self.basis[r];
                    self.pivot(r, j);
                    if to_upper {
                        self.flip(leaving);
                    }
                }
            }
            if theta < 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
        }
        Err(Error::Solver("iteration limit reached".into()))
    }

    /// Pivots basic artificials out where a structural replacement exists.
    fn drive_out(&mut self, is_artificial: &[bool]) {
        for r in 0..self.m {
            if !is_artificial[self.basis[r]] {
                continue;
            }
            let basic = self.is_basic();
            let replacement = (0..self.n)
                .filter(|&j| !basic[j] && !is_artificial[j])
                .max_by(|&a, &b| self.get(r, a).abs().total_cmp(&self.get(r, b).abs()));
            if let Some(j) = replacement {
                if self.get(r, j).abs() > 1e-7 {
                    self.pivot(r, j);
                }
            }
        }
    }

    /// Values of every column in the original (unflipped) orientation.
    fn column_values(&self) -> Vec<f64> {
        let mut vals = vec![0.0; self.n];
        for r in 0..self.m {
            vals[self.basis[r]] = self.value_in_row(r);
        }
        for j in 0..self.n {
            if self.flipped[j] {
                vals[j] = self.upper[j] - vals[j];
            }
            vals[j] = vals[j].max(0.0);
            if self.upper[j].is_finite() {
                vals[j] = vals[j].min(self.upper[j]);
            }
        }
        vals
    }
}
