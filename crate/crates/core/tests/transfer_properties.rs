use grouprisk_core::transfer_sets::find_iteration_violation;
use grouprisk_core::{FamilyKind, Margin, TransferFamily};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn two_agent_families() -> Vec<TransferFamily> {
    let kinds = vec![
        FamilyKind::Granular,
        FamilyKind::Unconstrained,
        FamilyKind::NoBankruptcy,
        FamilyKind::ProportionalCost { pi: 0.0 },
        FamilyKind::ProportionalCost { pi: 0.5 },
        FamilyKind::ProportionalCost { pi: 1.0 },
        FamilyKind::FixedCost { cost: 0.0 },
        FamilyKind::FixedCost { cost: 1.0 },
        FamilyKind::Fungibility { thresholds: [1.0, 1.0], exponent: 1.0 },
        FamilyKind::Fungibility { thresholds: [0.5, 2.0], exponent: 2.5 },
    ];
    let mut out = Vec::new();
    for k in kinds {
        out.push(TransferFamily::new(k.clone(), None).unwrap());
        out.push(TransferFamily::new(k.clone(), Some(Margin::Fixed(vec![0.5, 0.25]))).unwrap());
        out.push(TransferFamily::new(k, Some(Margin::Proportional(vec![0.2, 0.4]))).unwrap());
    }
    out
}

fn dot(u: [f64; 2], x: [f64; 2]) -> f64 {
    u[0] * x[0] + u[1] * x[1]
}

#[test]
fn sandwich_between_orthant_and_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for f in two_agent_families() {
        for _ in 0..400 {
            let c = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let neg = [-rng.gen_range(0.0..4.0), -rng.gen_range(0.0..4.0)];
            assert!(f.contains(&c, &neg).unwrap(), "{f:?} rejects {neg:?} at {c:?}");
            let y = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            if f.contains(&c, &y).unwrap() {
                assert!(y[0] + y[1] <= 1e-9, "{f:?} accepts {y:?} at {c:?}");
            }
        }
    }
    for kind in [FamilyKind::Granular, FamilyKind::Unconstrained, FamilyKind::NoBankruptcy] {
        let f = TransferFamily::new(kind, None).unwrap();
        for _ in 0..400 {
            let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let neg: Vec<f64> = (0..4).map(|_| -rng.gen_range(0.0..2.0)).collect();
            assert!(f.contains(&c, &neg).unwrap());
            let y: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            if f.contains(&c, &y).unwrap() {
                assert!(y.iter().sum::<f64>() <= 1e-9);
            }
        }
    }
}

#[test]
fn iteration_property_where_claimed() {
    let grid: Vec<f64> = (-4..=4).map(|k| k as f64 * 0.5).collect();
    for f in [TransferFamily::granular(), TransferFamily::unconstrained(), TransferFamily::no_bankruptcy()] {
        assert!(f.satisfies_iteration_property());
        assert_eq!(find_iteration_violation(&f, &grid).unwrap(), None, "{f:?}");
    }
    let fixed = TransferFamily::no_bankruptcy().with_margin(Margin::Fixed(vec![0.5, 1.0])).unwrap();
    assert_eq!(find_iteration_violation(&fixed, &grid).unwrap(), None);
}

#[test]
fn finder_reports_a_witness_for_proportional_margins() {
    let grid: Vec<f64> = (-4..=4).map(|k| k as f64 * 0.5).collect();
    let prop = TransferFamily::no_bankruptcy().with_margin(Margin::Proportional(vec![0.5, 0.5])).unwrap();
    assert!(!prop.satisfies_iteration_property());
    let [c, y, z] = find_iteration_violation(&prop, &grid).unwrap().expect("a violating triple");
    assert!(prop.contains(&c, &y).unwrap());
    assert!(prop.contains(&[c[0] + y[0], c[1] + y[1]], &z).unwrap());
    assert!(!prop.contains(&c, &[z[0] + y[0], z[1] + y[1]]).unwrap());
}

#[test]
fn fixed_costs_are_closed_under_addition() {
    // orthant ∪ {y1 + y2 <= -a} is closed under addition, so the grid search
    // finds no violating triple
    let grid: Vec<f64> = (-4..=4).map(|k| k as f64 * 0.5).collect();
    let ftc = TransferFamily::new(FamilyKind::FixedCost { cost: 1.0 }, None).unwrap();
    assert_eq!(find_iteration_violation(&ftc, &grid).unwrap(), None);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20_000 {
        let c = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let y = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
        let z = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
        if ftc.contains(&c, &y).unwrap() {
            assert!(ftc.iteration_check(&c, &y, &z).unwrap());
        }
    }
}

#[test]
fn support_function_dominates_the_frontier() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for f in two_agent_families() {
        for _ in 0..40 {
            let c = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let a = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2);
            let u = [a.cos(), a.sin()];
            let h = f.support_function(&c, &u).unwrap();
            assert!(h >= dot(u, c) - 1e-9);
            let curve = f.frontier(&c, 1024).unwrap();
            assert!(curve.is_pareto_ordered(), "{f:?} at {c:?}");
            if h.is_finite() {
                assert!(curve.max_dot(u) <= h + 1e-9, "{f:?} at {c:?} along {u:?}");
                if !curve.truncated {
                    let tol = if f.is_polyhedral() { 1e-12 } else { 1e-5 };
                    assert!(h - curve.max_dot(u) <= tol, "{f:?} at {c:?} along {u:?}");
                }
            }
            for _ in 0..20 {
                let y = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
                if f.contains(&c, &y).unwrap() {
                    assert!(dot(u, [c[0] + y[0], c[1] + y[1]]) <= h + 1e-9);
                }
            }
        }
    }
}

#[test]
fn linear_fungibility_frontier_is_the_separable_parabola() {
    let (cbar1, cbar2) = (1.0, 1.5);
    let f = TransferFamily::new(FamilyKind::Fungibility { thresholds: [cbar1, cbar2], exponent: 1.0 }, None).unwrap();
    let c = [0.6, 0.9];
    let curve = f.frontier(&c, 1024).unwrap();
    let mut checked = 0;
    for p in curve.points() {
        let err = if p[0] >= c[0] {
            p[1] * p[1] - (c[1] * c[1] - 2.0 * cbar2 * (p[0] - c[0]))
        } else {
            p[0] * p[0] - (c[0] * c[0] - 2.0 * cbar1 * (p[1] - c[1]))
        };
        assert!(err.abs() <= 1e-6, "{p:?}: {err}");
        checked += 1;
    }
    assert!(checked > 1000);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn no_bankruptcy_is_positively_homogeneous(
        c in prop::collection::vec(-5.0f64..5.0, 3),
        y in prop::collection::vec(-5.0f64..5.0, 3),
        t in 0.1f64..10.0,
    ) {
        let f = TransferFamily::no_bankruptcy();
        let tc: Vec<f64> = c.iter().map(|v| t * v).collect();
        let ty: Vec<f64> = y.iter().map(|v| t * v).collect();
        // stay clear of the boundary where rounding decides
        let slack: f64 = y.iter().zip(&c).map(|(v, c)| v.max(-c.max(0.0))).sum();
        prop_assume!(slack.abs() > 1e-6);
        prop_assert_eq!(f.contains(&tc, &ty).unwrap(), f.contains(&c, &y).unwrap());
    }

    #[test]
    fn no_bankruptcy_is_monotone_in_capital(
        c in prop::collection::vec(-5.0f64..5.0, 3),
        bump in prop::collection::vec(0.0f64..3.0, 3),
        y in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        let f = TransferFamily::no_bankruptcy();
        let richer: Vec<f64> = c.iter().zip(&bump).map(|(c, b)| c + b).collect();
        if f.contains(&c, &y).unwrap() {
            prop_assert!(f.contains(&richer, &y).unwrap());
        }
    }

    #[test]
    fn capital_independent_families_ignore_capital(
        c in prop::collection::vec(-5.0f64..5.0, 2),
        c2 in prop::collection::vec(-5.0f64..5.0, 2),
        y in prop::collection::vec(-5.0f64..5.0, 2),
    ) {
        for f in two_agent_families().into_iter().filter(|f| !f.depends_on_capital() && f.margin.is_none()) {
            prop_assert_eq!(f.contains(&c, &y).unwrap(), f.contains(&c2, &y).unwrap());
        }
    }
}
