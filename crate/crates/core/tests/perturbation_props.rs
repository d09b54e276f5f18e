use abprop_core::ab_model::PhysParams;
use abprop_core::lattice::{GridFunction, TimeGrid};
use abprop_core::perturbation::{
    closed_form_propagator, free_phase, g_n_bound, g_n_eval, make_ab_reduction, series_global_bound,
    series_propagator, smeared_potential, AtomRecord, AtomicMeasure,
};
use abprop_core::verify::{random_measure, random_params};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn g_n_dominated(seed in any::<u64>(), n in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_params(&mut rng);
        let grid = TimeGrid::new(p.t0, p.t, rng.random_range(1..16)).unwrap();
        let phi = GridFunction::from_fn(grid, 2, |_, _| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(p.t0..=p.t)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        prop_assert!(g_n_eval(&p, &phi, &s, &b).unwrap().norm() <= g_n_bound(&p, &phi, &b).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn truncation_error_within_remainder(seed in any::<u64>(), order in 0usize..26) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_params(&mut rng);
        let m = random_measure(&mut rng, true);
        let s = series_propagator(&p, &m, order).unwrap();
        // complex weights with large |x| overflow the closed form itself
        prop_assume!(s.report.x.norm() < 30.0);
        let exact = closed_form_propagator(&p, &m).unwrap();
        let err = ((s.value.phase - exact.phase) / free_phase(&p)).norm();
        prop_assert!(err <= s.report.remainder_bound + 1e-14 * s.report.x.norm().exp());
    }

    #[test]
    fn global_bound_monotone(seed in any::<u64>(), c1 in 0.0..3.0f64, dc in 0.0..3.0f64, stretch in 1.0..3.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_params(&mut rng);
        let m = random_measure(&mut rng, true);
        let b1 = series_global_bound(&p, &m, c1).unwrap();
        prop_assert!(series_global_bound(&p, &m, c1 + dc).unwrap() >= b1);
        let longer = PhysParams { t: p.t0 + stretch * p.delta(), ..p };
        prop_assert!(series_global_bound(&longer, &m, c1).unwrap() >= b1);
    }

    #[test]
    fn real_measures_give_unit_phase(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_params(&mut rng);
        let m = random_measure(&mut rng, false);
        prop_assert!((closed_form_propagator(&p, &m).unwrap().phase.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detectable_iff_not_divisible(k in -50i64..50, n in -12i64..12) {
        prop_assume!(k != 0 && n != 0);
        let p = PhysParams { p1: 1.5, ..Default::default() };
        let r = make_ab_reduction(&p, k, n).unwrap();
        prop_assert_eq!(r.detectable(), k % n != 0);
    }

    #[test]
    fn record_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_measure(&mut rng, true);
        let records: Vec<AtomRecord> = m.records();
        prop_assert_eq!(AtomicMeasure::from_records(&records), m.clone());
        prop_assert_eq!(AtomicMeasure::parse(&m.to_text()).unwrap(), m);
    }
}

/// The smeared potential equals the time integral of the one-point factor
/// `∫ dm(β) ∫ ds G_1(φ; s, β)`, here by composite Simpson.
#[test]
fn smeared_potential_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let p = random_params(&mut rng);
        let m = random_measure(&mut rng, true);
        let grid = TimeGrid::new(p.t0, p.t, 10).unwrap();
        let phi = GridFunction::from_fn(grid, 2, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let n = 2000;
        let h = p.delta() / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for a in &m.atoms {
            for i in 0..=n {
                let s = (p.t0 + i as f64 * h).min(p.t);
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += a.weight * g_n_eval(&p, &phi, &[s], &[a.beta]).unwrap() * w * h / 3.0;
            }
        }
        let y = smeared_potential(&p, &m, &phi).unwrap();
        assert!((y - acc).norm() <= 1e-9 * (1.0 + acc.norm()), "{y} {acc}");
    }
}
