mod common;

use common::{brute_force_ntb_es, lattice_rows, uniform_vector};
use grouprisk_core::selection::{
    absolute_acceptability, acceptable_exists, nearest_diagonal_selection, proportional_selection,
    rationality_prices, selection_risk_membership, Method, Selection,
};
use grouprisk_core::{FamilyKind, RandomVector, RiskMeasure, ScenarioSpace, TransferFamily, VectorRisk};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn es(alpha: f64) -> VectorRisk {
    VectorRisk::uniform(RiskMeasure::expected_shortfall(alpha).unwrap(), 2).unwrap()
}

#[test]
fn micro_instances_agree_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let spec = es(0.5);
    let f = TransferFamily::no_bankruptcy();
    let (mut yes, mut no) = (0, 0);
    for (n, range, count) in [(1, 1.0, 20), (2, 1.0, 30), (3, 0.5, 30), (4, 0.3, 4)] {
        for _ in 0..count {
            let rows = lattice_rows(&mut rng, n, 2, range, 0.1);
            let c = uniform_vector(&rows);
            let exact = acceptable_exists(&c, &f, &spec).unwrap();
            assert!(exact.conclusive);
            // grid points are selections; the nearest grid point moves each
            // expected shortfall by at most half a step
            if brute_force_ntb_es(&rows, 0.5, 1e-2, 0.0) {
                assert!(exact.feasible, "{rows:?}");
            }
            if exact.feasible {
                assert!(brute_force_ntb_es(&rows, 0.5, 1e-2, 5e-3 + 1e-9), "{rows:?}");
                yes += 1;
            } else {
                no += 1;
            }
        }
    }
    assert!(yes > 5 && no > 5, "{yes} feasible, {no} infeasible");
}

#[test]
fn witnesses_pass_the_audit_and_survive_projection_to_the_frontier() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    let spec = es(0.2);
    let f = TransferFamily::no_bankruptcy();
    let mut seen = 0;
    for _ in 0..40 {
        let rows = common::continuous_rows(&mut rng, 15, 2, 2.0);
        let c = uniform_vector(&rows).shift(&[0.8, 0.8]).unwrap();
        let r = acceptable_exists(&c, &f, &spec).unwrap();
        let Some(w) = r.witness else { continue };
        assert!(r.feasible);
        assert!(w.is_admissible());
        assert!(spec.is_acceptable(&w.values).unwrap());
        // push every scenario up to the boundary C + (-t, t)
        let projected = w
            .values
            .map_rows(|k, xi| {
                let row = c.row(k);
                let (lo, hi) = f.signed_transfer_bounds(row).unwrap();
                let t = (row[0] - xi[0]).clamp(lo, hi).max(xi[1] - row[1]);
                vec![row[0] - t, row[1] + t]
            })
            .unwrap();
        for k in 0..c.scenarios() {
            assert!(projected.row(k)[0] >= w.values.row(k)[0] - 1e-12);
            assert!(projected.row(k)[1] >= w.values.row(k)[1] - 1e-12);
        }
        let audited = Selection::audited(&c, &f, projected).unwrap();
        assert!(audited.is_admissible());
        assert!(spec.is_acceptable(&audited.values).unwrap());
        seen += 1;
    }
    assert!(seen > 5);
}

#[test]
fn membership_is_upward_closed() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let spec = es(0.25);
    let f = TransferFamily::no_bankruptcy();
    let rows = common::continuous_rows(&mut rng, 20, 2, 2.0);
    let c = uniform_vector(&rows);
    let own = spec.evaluate(&c).unwrap();
    assert!(selection_risk_membership(&c, &f, &spec, &own).unwrap());
    assert!(!selection_risk_membership(&c, &TransferFamily::granular(), &spec, &[own[0] - 0.1, own[1]]).unwrap());
    for _ in 0..60 {
        let a = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        if selection_risk_membership(&c, &f, &spec, &a).unwrap() {
            let b = [a[0] + rng.gen_range(0.0..1.0), a[1] + rng.gen_range(0.0..1.0)];
            assert!(selection_risk_membership(&c, &f, &spec, &b).unwrap());
        }
    }
}

#[test]
fn proportional_and_nearest_diagonal_cases() {
    let c = uniform_vector(&[vec![2.0, 4.0]]);
    let p = proportional_selection(&c, &TransferFamily::unconstrained()).unwrap();
    assert_eq!(p.values.row(0), &[3.0, 3.0]);
    assert!(proportional_selection(&c, &TransferFamily::no_bankruptcy()).is_err());
    let c = uniform_vector(&[vec![3.0, 1.0], vec![-3.0, 1.0], vec![-1.0, -2.0], vec![1.0, -3.0]]);
    let s = nearest_diagonal_selection(&c, &TransferFamily::no_bankruptcy(), [0.0, 0.0]).unwrap();
    assert_eq!(s.values.to_rows(), vec![vec![2.0, 2.0], vec![-2.0, 0.0], vec![-1.0, -2.0], vec![0.0, -2.0]]);
    assert!(s.is_admissible());
}

#[test]
fn absolute_acceptability_of_a_hedged_pair() {
    // C1 normal with positive mean, C2 = min(E C1 - C1, 0)
    let n = 400;
    let normal = Normal::new(3.0, 1.0).unwrap();
    let c1: Vec<f64> = (0..n).map(|k| normal.inverse_cdf((k as f64 + 0.5) / n as f64)).collect();
    let mean = c1.iter().sum::<f64>() / n as f64;
    let rows: Vec<Vec<f64>> = c1.iter().map(|v| vec![*v, (mean - v).min(0.0)]).collect();
    let c = RandomVector::from_rows(ScenarioSpace::uniform(n).unwrap(), &rows).unwrap();
    let spec = es(0.01);
    let own = spec.evaluate(&c).unwrap();
    assert!(own[0] < 0.0 && own[1] > 0.0);
    assert!(!spec.is_acceptable(&c).unwrap());
    for f in [TransferFamily::unconstrained(), TransferFamily::no_bankruptcy()] {
        let r = absolute_acceptability(&c, &f, &spec).unwrap();
        assert!(r.feasible && r.conclusive, "{f:?}");
        let w = r.witness.unwrap();
        let after = spec.evaluate(&w.values).unwrap();
        assert!(after[0] <= own[0] + 1e-7 && after[1] <= 1e-7, "{after:?}");
    }
    // the explicit transfer η = C2 from agent 1 to agent 2
    let eta: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0] + r[1], 0.0]).collect();
    let moved = RandomVector::from_rows(ScenarioSpace::uniform(n).unwrap(), &eta).unwrap();
    let after = spec.evaluate(&moved).unwrap();
    assert!((after[0] - own[0]).abs() <= 1e-12 && after[1] == 0.0);
}

#[test]
fn acceptable_capital_is_absolutely_acceptable() {
    let c = uniform_vector(&[vec![1.0, 2.0], vec![0.5, 0.1], vec![3.0, 0.0]]);
    for f in [TransferFamily::granular(), TransferFamily::no_bankruptcy()] {
        let r = absolute_acceptability(&c, &f, &es(0.3)).unwrap();
        assert!(r.feasible);
    }
}

#[test]
fn rationality_prices_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(54);
    let families = [
        TransferFamily::no_bankruptcy(),
        TransferFamily::new(FamilyKind::ProportionalCost { pi: 0.7 }, None).unwrap(),
        TransferFamily::granular(),
    ];
    for _ in 0..15 {
        let n = rng.gen_range(3..40);
        let c = uniform_vector(&common::continuous_rows(&mut rng, n, 2, 2.0));
        let spec = es(rng.gen_range(0.05..0.6));
        for f in &families {
            let p = rationality_prices(&c, f, &spec).unwrap();
            assert!(p.prices.iter().sum::<f64>().abs() <= 1e-12);
            assert!(p.selection.is_admissible());
            let after = spec.evaluate(&p.selection.values.shift(&p.prices).unwrap()).unwrap();
            for (a, b) in after.iter().zip(&p.capital_risks) {
                assert!(*a <= b + 1e-7, "{f:?}: {after:?} vs {:?}", p.capital_risks);
            }
        }
    }
    let var = VectorRisk::uniform(RiskMeasure::value_at_risk(0.1).unwrap(), 2).unwrap();
    let c = uniform_vector(&[vec![1.0, -1.0], vec![-1.0, 1.0]]);
    assert!(rationality_prices(&c, &TransferFamily::no_bankruptcy(), &var).is_err());
}

#[test]
fn heuristic_route_is_flagged() {
    let var = VectorRisk::uniform(RiskMeasure::value_at_risk(0.1).unwrap(), 2).unwrap();
    let c = uniform_vector(&[vec![-5.0, -5.0], vec![-1.0, -2.0]]);
    let r = acceptable_exists(&c, &TransferFamily::no_bankruptcy(), &var).unwrap();
    assert!(!r.feasible);
    assert_eq!(r.method, Method::Candidates);
    assert!(!r.conclusive);
}
