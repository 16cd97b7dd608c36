//! Independent oracles and instance builders shared by the integration
//! tests and the acceptance harness.
#![allow(dead_code)]

use grouprisk_core::{RandomVariable, RandomVector, ScenarioSpace};
use rand::Rng;

/// Expected shortfall as `min_z { z + E[(-X - z)^+] / α }`; the minimum is
/// attained at a support point of `-X`.
pub fn es_oracle(values: &[f64], probs: &[f64], alpha: f64) -> f64 {
    values
        .iter()
        .map(|&x| {
            let z = -x;
            let tail: f64 = values.iter().zip(probs).map(|(v, p)| p * (-v - z).max(0.0)).sum();
            z + tail / alpha
        })
        .fold(f64::INFINITY, f64::min)
}

/// Value at risk as `-inf { x : P(X <= x) >= α }`, scanned over the support.
pub fn var_oracle(values: &[f64], probs: &[f64], alpha: f64) -> f64 {
    let mut best = f64::INFINITY;
    for &x in values {
        let p: f64 = values.iter().zip(probs).filter(|(v, _)| **v <= x).map(|(_, p)| p).sum();
        if p >= alpha - 1e-12 {
            best = best.min(x);
        }
    }
    -best
}

pub fn entropic_oracle(values: &[f64], probs: &[f64], theta: f64) -> f64 {
    let e: f64 = values.iter().zip(probs).map(|(v, p)| p * (-theta * v).exp()).sum();
    e.ln() / theta
}

pub fn uniform_vector(rows: &[Vec<f64>]) -> RandomVector {
    let space = ScenarioSpace::uniform(rows.len()).unwrap();
    RandomVector::from_rows(space, rows).unwrap()
}

pub fn variable(values: Vec<f64>) -> RandomVariable {
    let space = ScenarioSpace::uniform(values.len()).unwrap();
    RandomVariable::new(space, values).unwrap()
}

/// Random probability weights that sum to one.
pub fn random_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|w| w / s).collect()
}

/// `n × d` capital on the lattice `step · ℤ` within `[-range, range]`.
pub fn lattice_rows<R: Rng>(rng: &mut R, n: usize, d: usize, range: f64, step: f64) -> Vec<Vec<f64>> {
    let k = (range / step).round() as i64;
    (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-k..=k) as f64 * step).collect())
        .collect()
}

pub fn continuous_rows<R: Rng>(rng: &mut R, n: usize, d: usize, range: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-range..range)).collect()).collect()
}

/// Brute force over the signed no-bankruptcy transfer `t_k ∈ [-C_2^+, C_1^+]`
/// per scenario on a grid of width `step`: is there a choice with both
/// expected shortfalls at most `slack`?
pub fn brute_force_ntb_es(rows: &[Vec<f64>], alpha: f64, step: f64, slack: f64) -> bool {
    let n = rows.len();
    let probs = vec![1.0 / n as f64; n];
    let grids: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let (lo, hi) = (-r[1].max(0.0), r[0].max(0.0));
            let k = ((hi - lo) / step).round() as usize;
            (0..=k).map(|j| (lo + j as f64 * step).min(hi)).collect()
        })
        .collect();
    let mut idx = vec![0usize; n];
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    loop {
        for k in 0..n {
            let t = grids[k][idx[k]];
            a[k] = rows[k][0] - t;
            b[k] = rows[k][1] + t;
        }
        if es_oracle(&a, &probs, alpha) <= slack && es_oracle(&b, &probs, alpha) <= slack {
            return true;
        }
        let mut k = 0;
        loop {
            if k == n {
                return false;
            }
            idx[k] += 1;
            if idx[k] < grids[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
