//! Deterministic scenario generators. Each marginal is the inverse CDF
//! applied to the stratified points `(k + 1/2) / n`, and the strata of
//! different coordinates are paired through seeded permutations, so every
//! tail of width `1/n` holds exactly one scenario.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::scenario::{RandomVector, ScenarioSpace};

/// `dims` columns of stratified uniforms on `(0, 1)`; column 0 keeps its
/// natural order, the others are independently shuffled.
pub fn stratified_uniforms(n: usize, dims: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::EmptyScenarioSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
    let mut cols = Vec::with_capacity(dims);
    for j in 0..dims {
        let mut col = base.clone();
        if j > 0 {
            col.shuffle(&mut rng);
        }
        cols.push(col);
    }
    Ok(cols)
}

fn standard_normal_quantile(u: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("valid parameters").inverse_cdf(u)
}

fn assemble(cols: [Vec<f64>; 2]) -> Result<RandomVector> {
    let n = cols[0].len();
    let values = (0..n).flat_map(|k| [cols[0][k], cols[1][k]]).collect();
    RandomVector::from_flat(ScenarioSpace::uniform(n)?, 2, values)
}

/// Independent uniforms on `[0, width]`.
pub fn uniform_pair(n: usize, width: f64, seed: u64) -> Result<RandomVector> {
    let u = stratified_uniforms(n, 2, seed)?;
    assemble([
        u[0].iter().map(|v| width * v).collect(),
        u[1].iter().map(|v| width * v).collect(),
    ])
}

/// `C_1` standard normal, `-C_2` exponential with mean one, independent.
pub fn normal_exponential(n: usize, seed: u64) -> Result<RandomVector> {
    let u = stratified_uniforms(n, 2, seed)?;
    assemble([
        u[0].iter().map(|&v| standard_normal_quantile(v)).collect(),
        u[1].iter().map(|&v| (1.0 - v).ln()).collect(),
    ])
}

/// Centred normal pair with the given covariance, through the Cholesky
/// factor of the covariance.
pub fn bivariate_normal(n: usize, cov: [[f64; 2]; 2], seed: u64) -> Result<RandomVector> {
    let (a, b, c) = (cov[0][0], cov[0][1], cov[1][1]);
    if !(a > 0.0) || (b - cov[1][0]).abs() > 1e-12 || a * c - b * b <= 0.0 {
        return Err(Error::InvalidParameter("covariance must be symmetric positive definite".into()));
    }
    let l11 = a.sqrt();
    let l21 = b / l11;
    let l22 = (c - l21 * l21).sqrt();
    let u = stratified_uniforms(n, 2, seed)?;
    let z1: Vec<f64> = u[0].iter().map(|&v| standard_normal_quantile(v)).collect();
    let z2: Vec<f64> = u[1].iter().map(|&v| standard_normal_quantile(v)).collect();
    assemble([
        z1.iter().map(|z| l11 * z).collect(),
        z1.iter().zip(&z2).map(|(x, y)| l21 * x + l22 * y).collect(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strata_are_permutations_of_the_grid() {
        let u = stratified_uniforms(100, 3, 5).unwrap();
        for col in &u {
            let mut s = col.clone();
            s.sort_by(f64::total_cmp);
            for (k, v) in s.iter().enumerate() {
                assert!((v - (k as f64 + 0.5) / 100.0).abs() < 1e-15);
            }
        }
        assert_ne!(u[1], u[2]);
        assert_eq!(u, stratified_uniforms(100, 3, 5).unwrap());
    }

    #[test]
    fn bivariate_moments() {
        let c = bivariate_normal(20_000, [[1.0, -0.5], [-0.5, 3.0]], 1).unwrap();
        let n = c.scenarios() as f64;
        let (mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0);
        for row in c.rows() {
            s11 += row[0] * row[0];
            s12 += row[0] * row[1];
            s22 += row[1] * row[1];
        }
        assert!((s11 / n - 1.0).abs() < 0.01);
        assert!((s22 / n - 3.0).abs() < 0.1);
        assert!((s12 / n + 0.5).abs() < 0.1);
    }

    #[test]
    fn exponential_column_is_nonpositive() {
        let c = normal_exponential(1000, 3).unwrap();
        assert!(c.column_values(1).iter().all(|&v| v < 0.0));
        let mean: f64 = c.column_values(1).iter().sum::<f64>() / 1000.0;
        assert!((mean + 1.0).abs() < 0.01);
    }
}
