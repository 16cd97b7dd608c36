//! Finite probability spaces and the random capital vectors living on them.
//!
//! Every downstream computation works scenario by scenario, so the types here
//! are thin, immutable wrappers around flat `f64` buffers. A [`ScenarioSpace`]
//! is reference counted; cloning a [`RandomVector`] never copies weights.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Weights may deviate from a unit sum by at most this much.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpace {
    inner: Arc<SpaceInner>,
}

#[derive(Debug, PartialEq)]
struct SpaceInner {
    probabilities: Vec<f64>,
    equiprobable: bool,
}

impl ScenarioSpace {
    /// Validates the weights without renormalising them.
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::EmptyScenarioSet);
        }
        for (index, &value) in probabilities.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidWeight { index, value });
            }
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::WeightSum { sum });
        }
        let first = probabilities[0];
        let equiprobable = probabilities.iter().all(|&p| p == first);
        Ok(Self {
            inner: Arc::new(SpaceInner {
                probabilities,
                equiprobable,
            }),
        })
    }

    /// `n` scenarios of weight `1/n` each.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyScenarioSet);
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.inner.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.inner.probabilities
    }

    pub fn probability(&self, scenario: usize) -> f64 {
        self.inner.probabilities[scenario]
    }

    pub fn is_equiprobable(&self) -> bool {
        self.inner.equiprobable
    }

    pub fn same_as(&self, other: &ScenarioSpace) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner == other.inner
    }
}

/// One currency amount per scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVariable {
    space: ScenarioSpace,
    values: Vec<f64>,
}

impl RandomVariable {
    pub fn new(space: ScenarioSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                found: values.len(),
            });
        }
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, col: 0 });
        }
        Ok(Self { space, values })
    }

    pub fn constant(space: ScenarioSpace, value: f64) -> Result<Self> {
        let n = space.len();
        Self::new(space, vec![value; n])
    }

    pub fn space(&self) -> &ScenarioSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.space.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn add_constant(&self, m: f64) -> Result<Self> {
        self.map(|v| v + m)
    }

    pub fn scale(&self, t: f64) -> Result<Self> {
        self.map(|v| t * v)
    }

    pub fn zip_with(&self, other: &RandomVariable, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.space.same_as(&other.space) {
            return Err(Error::SpaceMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.space.clone(), values)
    }

    pub fn positive_part(&self) -> Result<Self> {
        self.map(|v| v.max(0.0))
    }

    /// `S^- = max(-S, 0)`.
    pub fn negative_part(&self) -> Result<Self> {
        self.map(|v| (-v).max(0.0))
    }

    pub fn expectation(&self) -> f64 {
        self.space
            .probabilities()
            .iter()
            .zip(&self.values)
            .map(|(p, v)| p * v)
            .sum()
    }
}

/// Terminal capitals of `d` agents over `n` scenarios, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVector {
    space: ScenarioSpace,
    dim: usize,
    values: Vec<f64>,
}

impl RandomVector {
    pub fn from_rows(space: ScenarioSpace, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(space, dim, values)
    }

    pub fn from_flat(space: ScenarioSpace, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "a random vector needs at least one agent".into(),
            ));
        }
        if values.len() != space.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: space.len() * dim,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { space, dim, values })
    }

    pub fn from_columns(columns: &[RandomVariable]) -> Result<Self> {
        let first = columns.first().ok_or_else(|| {
            Error::InvalidParameter("a random vector needs at least one agent".into())
        })?;
        let space = first.space().clone();
        if columns.iter().any(|c| !c.space().same_as(&space)) {
            return Err(Error::SpaceMismatch);
        }
        let dim = columns.len();
        let n = space.len();
        let mut values = vec![0.0; n * dim];
        for (j, column) in columns.iter().enumerate() {
            for (i, &v) in column.values().iter().enumerate() {
                values[i * dim + j] = v;
            }
        }
        Self::from_flat(space, dim, values)
    }

    pub fn space(&self) -> &ScenarioSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scenarios(&self) -> usize {
        self.space.len()
    }

    pub fn row(&self, scenario: usize) -> &[f64] {
        &self.values[scenario * self.dim..(scenario + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, scenario: usize, agent: usize) -> f64 {
        self.values[scenario * self.dim + agent]
    }

    pub fn column_values(&self, agent: usize) -> Vec<f64> {
        self.rows().map(|r| r[agent]).collect()
    }

    pub fn column(&self, agent: usize) -> RandomVariable {
        RandomVariable {
            space: self.space.clone(),
            values: self.column_values(agent),
        }
    }

    pub fn columns(&self) -> Vec<RandomVariable> {
        (0..self.dim).map(|j| self.column(j)).collect()
    }

    /// The consolidated position: per-scenario sum over agents.
    pub fn aggregate(&self) -> RandomVariable {
        RandomVariable {
            space: self.space.clone(),
            values: self.rows().map(|r| r.iter().sum()).collect(),
        }
    }

    /// Adds the deterministic vector `x` to every scenario.
    pub fn shift(&self, x: &[f64]) -> Result<Self> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let values = self
            .values
            .chunks_exact(self.dim)
            .flat_map(|r| r.iter().zip(x).map(|(a, b)| a + b))
            .collect();
        Self::from_flat(self.space.clone(), self.dim, values)
    }

    pub fn add(&self, other: &RandomVector) -> Result<Self> {
        if !self.space.same_as(&other.space) {
            return Err(Error::SpaceMismatch);
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_flat(self.space.clone(), self.dim, values)
    }

    pub fn sub(&self, other: &RandomVector) -> Result<Self> {
        self.add(&other.scale(-1.0)?)
    }

    pub fn scale(&self, t: f64) -> Result<Self> {
        Self::from_flat(
            self.space.clone(),
            self.dim,
            self.values.iter().map(|v| t * v).collect(),
        )
    }

    /// Rebuilds the vector from per-scenario rows produced by `f`.
    pub fn map_rows(&self, mut f: impl FnMut(usize, &[f64]) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(self.values.len());
        for (i, row) in self.rows().enumerate() {
            let mapped = f(i, row);
            if mapped.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: mapped.len(),
                });
            }
            values.extend(mapped);
        }
        Self::from_flat(self.space.clone(), self.dim, values)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }
}

/// Plain-data view used by exporters.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioTable {
    pub probabilities: Vec<f64>,
    pub capitals: Vec<Vec<f64>>,
}

impl From<&RandomVector> for ScenarioTable {
    fn from(c: &RandomVector) -> Self {
        Self {
            probabilities: c.space().probabilities().to_vec(),
            capitals: c.to_rows(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> RandomVector {
        let space = ScenarioSpace::uniform(2).unwrap();
        RandomVector::from_rows(space, &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap()
    }

    #[test]
    fn aggregate_sums_rows() {
        assert_eq!(two_by_two().aggregate().values(), &[3.0, 7.0]);
        let space = ScenarioSpace::uniform(1).unwrap();
        let zero = RandomVector::from_rows(space, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(zero.aggregate().values(), &[0.0]);
    }

    #[test]
    fn aggregate_matches_brute_force_on_uniform_grid() {
        // two agents on a 0..5 grid, paired by a fixed stride
        let n = 200;
        let space = ScenarioSpace::uniform(n).unwrap();
        let grid: Vec<f64> = (0..n).map(|k| 5.0 * (k as f64 + 0.5) / n as f64).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|k| vec![grid[k], grid[(k * 37) % n]]).collect();
        let c = RandomVector::from_rows(space, &rows).unwrap();
        let d = c.aggregate();
        for (k, row) in rows.iter().enumerate() {
            let mut total = 0.0;
            for v in row {
                total += v;
            }
            assert_eq!(d.values()[k], total);
        }
    }

    #[test]
    fn shift_and_unshift() {
        let space = ScenarioSpace::uniform(1).unwrap();
        let c = RandomVector::from_rows(space, &[vec![1.0, 2.0]]).unwrap();
        let shifted = c.shift(&[1.0, -1.0]).unwrap();
        assert_eq!(shifted.row(0), &[2.0, 1.0]);
        assert_eq!(shifted.shift(&[-1.0, 1.0]).unwrap(), c);
        assert!(matches!(
            c.shift(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn weights_are_validated_not_renormalised() {
        assert!(matches!(
            ScenarioSpace::new(vec![0.4, 0.4]),
            Err(Error::WeightSum { .. })
        ));
        assert!(matches!(
            ScenarioSpace::new(vec![1.0, 0.0]),
            Err(Error::InvalidWeight { index: 1, .. })
        ));
        assert!(matches!(ScenarioSpace::new(vec![]), Err(Error::EmptyScenarioSet)));
        assert!(ScenarioSpace::new(vec![0.075, 0.075, 0.85]).is_ok());
    }

    #[test]
    fn non_finite_entries_are_located() {
        let space = ScenarioSpace::uniform(2).unwrap();
        let err = RandomVector::from_rows(space, &[vec![1.0, 2.0], vec![3.0, f64::NAN]]).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 1, col: 1 });
    }

    #[test]
    fn columns_round_trip() {
        let c = two_by_two();
        let rebuilt = RandomVector::from_columns(&c.columns()).unwrap();
        assert_eq!(rebuilt, c);
    }
}
