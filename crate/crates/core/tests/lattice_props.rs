use abprop_core::lattice::{indicator, inner_product, l2_norm, point_mass, sample_noise, GridFunction, TimeGrid};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = TimeGrid> {
    (0.0..2.0f64, 0.1..3.0f64, 1usize..40).prop_map(|(t0, len, n)| TimeGrid::new(t0, t0 + len, n).unwrap())
}

fn function_on(grid: TimeGrid, seed: u64) -> GridFunction {
    let mut state = seed.wrapping_add(1);
    GridFunction::from_fn(grid, 2, |_, _| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let a = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        let b = ((state >> 3) & 0xffff) as f64 / 65536.0 - 0.5;
        Complex64::new(a, b)
    })
}

proptest! {
    #[test]
    fn pairing_is_symmetric_and_bilinear(grid in grid_strategy(), s1 in any::<u64>(), s2 in any::<u64>(), c in -3.0..3.0f64) {
        let f = function_on(grid, s1);
        let g = function_on(grid, s2);
        let fg = inner_product(&f, &g).unwrap();
        prop_assert!((fg - inner_product(&g, &f).unwrap()).norm() < 1e-13);
        let scaled = inner_product(&f.scale(Complex64::new(c, 0.0)), &g).unwrap();
        prop_assert!((scaled - fg * c).norm() < 1e-12);
        let sum = inner_product(&f.add(&g).unwrap(), &g).unwrap();
        prop_assert!((sum - fg - inner_product(&g, &g).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn prolongation_keeps_pairings(grid in grid_strategy(), s1 in any::<u64>(), s2 in any::<u64>(), k in 1usize..5) {
        let f = function_on(grid, s1);
        let g = function_on(grid, s2);
        let a = inner_product(&f, &g).unwrap();
        let b = inner_product(&f.prolong(k).unwrap(), &g.prolong(k).unwrap()).unwrap();
        prop_assert!((a - b).norm() < 1e-12);
        prop_assert!((l2_norm(&f) - l2_norm(&f.prolong(k).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn point_mass_samples_cell_value(grid in grid_strategy(), seed in any::<u64>(), frac in 0.0..=1.0f64) {
        let f = function_on(grid, seed);
        let s = grid.t0() + frac * grid.delta();
        let delta = point_mass(&grid, 2, s, 1).unwrap();
        let v = inner_product(&f, &delta).unwrap();
        prop_assert!((v - f.eval(1, s).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn full_indicator_integrates_to_length(grid in grid_strategy()) {
        let one = indicator(&grid, 1, grid.t0(), grid.t(), 0).unwrap();
        let len = inner_product(&one, &one).unwrap();
        prop_assert!((len.re - grid.delta()).abs() < 1e-12);
    }

    #[test]
    fn noise_is_reproducible(grid in grid_strategy(), seed in any::<u64>()) {
        prop_assert_eq!(sample_noise(&grid, seed), sample_noise(&grid, seed));
    }
}

#[test]
fn noise_cell_variance_is_inverse_step() {
    let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
    let xs: Vec<f64> = (0..400).flat_map(|s| sample_noise(&grid, s).theta()).collect();
    let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
    assert!((var * grid.dt() - 1.0).abs() < 0.03, "{}", var * grid.dt());
}
