//! Self-check suites over the whole crate. Each suite draws its random
//! instances from a seeded generator, so results are reproducible.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ab_model::{
    action_closed, action_direct, build_integrand, n_eps_inverse, symmetric_surrogate, t_transform_eps, PhysParams,
};
use crate::error::{Error, Result};
use crate::gaussian::{pin_matrix, t_transform_lemma, t_transform_oracle, BlockOperator, GaussianFunctional, Normalization, Pin};
use crate::lattice::{sample_noise, GridFunction, TimeGrid};
use crate::perturbation::{
    closed_form_propagator, free_phase, g_n_bound, g_n_bound_constant, g_n_eval, make_ab_reduction, exp_partial_sums,
    first_order_matching, series_global_bound, series_propagator, series_variable, series_with_test_function,
    reduction_measure, AtomicMeasure, ExponentSign,
};
use crate::propagators::{
    poisson_comb_lhs, poisson_comb_rhs, poisson_truncations, propagator_no_winding, propagator_winding,
};
use crate::schrodinger::{residual_analytic, residual_fd, winding_residual_term, EnergySpec};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub const SUITES: [&str; 9] = [
    "oracle",
    "pin-matrix",
    "nascent-delta",
    "action",
    "poisson",
    "schrodinger",
    "winding",
    "series",
    "reduction",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub params: PhysParams,
    pub n_cells: usize,
    pub eps: Vec<f64>,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            params: PhysParams::default(),
            n_cells: 32,
            eps: vec![1e-2, 1e-3],
            sigma: 1e-3,
            seed: 0,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_cells == 0 {
            return Err(Error::Domain("n_cells must be positive".into()));
        }
        if self.eps.is_empty() {
            return Err(Error::Domain("eps list must not be empty".into()));
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0)) {
            return Err(Error::Domain(format!("eps must be positive, got {e}")));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Domain(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

fn rng_for(cfg: &VerifyConfig, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Random physical parameters with `p1 = p0`: `p0 ∈ [-5, 5] \ (-0.1, 0.1)`,
/// `α ∈ [-2, 2]`, `t - t0 ∈ (0, 5]`, the rest in `[0.5, 2]`.
pub fn random_params(rng: &mut impl Rng) -> PhysParams {
    let mut p0: f64 = rng.random_range(-5.0..5.0);
    if p0.abs() < 0.1 {
        p0 = 0.1f64.copysign(p0);
    }
    let t0 = rng.random_range(0.0..1.0);
    let delta = rng.random_range(0.05..=5.0);
    let base = PhysParams {
        m0: rng.random_range(0.5..2.0),
        radius: rng.random_range(0.5..2.0),
        hbar: rng.random_range(0.5..2.0),
        c: rng.random_range(0.5..2.0),
        e: rng.random_range(0.5..2.0),
        phi: 0.0,
        a: rng.random_range(0.1..=1.0) * delta,
        p0,
        p1: p0,
        t0,
        t: t0 + delta,
    };
    base.with_alpha(rng.random_range(-2.0..2.0))
}

/// Random measure with 1 to 5 atoms, `β ∈ [-2, 2]`, real weights in `[-1, 1]`.
pub fn random_measure(rng: &mut impl Rng, complex: bool) -> AtomicMeasure {
    let n = rng.random_range(1..=5);
    AtomicMeasure::from_atoms((0..n).map(|_| {
        let beta = rng.random_range(-2.0..2.0);
        let im = if complex { rng.random_range(-1.0..1.0) } else { 0.0 };
        (beta, Complex64::new(rng.random_range(-1.0..1.0), im))
    }))
}

fn random_complex(rng: &mut impl Rng, scale: f64) -> Complex64 {
    Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

/// Random two-component functional on `[0, 1]` with complex-symmetric
/// cell blocks of norm at most 1/2, complex shift, and `j` real pins.
pub fn random_functional(rng: &mut impl Rng, n_cells: usize, j: usize) -> Result<GaussianFunctional> {
    let grid = TimeGrid::new(0.0, 1.0, n_cells)?;
    let blocks: Vec<[Complex64; 3]> = (0..n_cells)
        .map(|_| {
            let b = [random_complex(rng, 1.0), random_complex(rng, 1.0), random_complex(rng, 1.0)];
            let frob = (b[0].norm_sqr() + 2.0 * b[1].norm_sqr() + b[2].norm_sqr()).sqrt();
            let s = rng.random_range(0.0..0.5) / frob;
            [b[0] * s, b[1] * s, b[2] * s]
        })
        .collect();
    let k = BlockOperator::from_cell_fn(grid, 2, |cell, _, r, c| {
        let b = &blocks[cell];
        match (r, c) {
            (0, 0) => b[0],
            (1, 1) => b[2],
            _ => b[1],
        }
    });
    let g = GridFunction::from_fn(grid, 2, |_, _| random_complex(rng, 0.5));
    let pins = (0..j)
        .map(|_| Pin {
            eta: GridFunction::from_real_fn(grid, 2, |_, _| rng.random_range(-1.5..1.5)),
            y: rng.random_range(-1.0..1.0),
        })
        .collect();
    GaussianFunctional::new(k, g, pins, Normalization::Explicit(ONE))
}

fn pass(name: &str, ok: bool, detail: String) -> SuiteResult {
    SuiteResult {
        name: name.to_string(),
        passed: ok,
        detail,
    }
}

pub fn run_suite(name: &str, cfg: &VerifyConfig) -> Result<SuiteResult> {
    cfg.validate()?;
    match name {
        "oracle" => suite_oracle(cfg),
        "pin-matrix" => suite_pin_matrix(cfg),
        "nascent-delta" => suite_nascent_delta(cfg),
        "action" => suite_action(cfg),
        "poisson" => suite_poisson(cfg),
        "schrodinger" => suite_schrodinger(cfg),
        "winding" => suite_winding(cfg),
        "series" => suite_series(cfg),
        "reduction" => suite_reduction(cfg),
        other => Err(Error::Domain(format!(
            "unknown suite `{other}`; expected one of {}",
            SUITES.join(", ")
        ))),
    }
}

pub fn run_all(cfg: &VerifyConfig) -> Result<Vec<SuiteResult>> {
    SUITES.iter().map(|s| run_suite(s, cfg)).collect()
}

fn suite_oracle(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut rng = rng_for(cfg, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(1..=16);
        let j = rng.random_range(0..=2);
        let phi = random_functional(&mut rng, n, j)?;
        let f = GridFunction::from_fn(*phi.grid(), 2, |_, _| random_complex(&mut rng, 0.5));
        let lemma = t_transform_lemma(&phi, &f)?;
        let oracle = t_transform_oracle(&phi, &f, cfg.sigma)?;
        worst = worst.max((lemma - oracle).norm() / lemma.norm());
    }
    // the flux integrand through its symmetric surrogate, f_p with zero mean
    let p = PhysParams { p1: cfg.params.p0, ..cfg.params };
    let grid = TimeGrid::new(p.t0, p.t, cfg.n_cells.min(32))?;
    let eps = cfg.eps[0];
    let sur = symmetric_surrogate(&p, &grid, eps)?;
    let f = GridFunction::from_real_fn(grid, 2, |j, s| {
        let x = (s - p.t0) / p.delta();
        if j == 0 { 0.2 * (3.0 * x).cos() } else { 0.3 * (2.0 * PI * x).sin() }
    });
    let lemma = t_transform_eps(&p, &grid, eps, &f)?;
    let oracle = p.classical_phase() * t_transform_oracle(&sur, &f, cfg.sigma)?;
    let ab_err = (lemma - oracle).norm() / lemma.norm();
    Ok(pass(
        "oracle",
        worst <= 1e-4 && ab_err <= 1e-3,
        format!("random max rel err {worst:.3e} (tol 1e-4); flux integrand rel err {ab_err:.3e} (tol 1e-3)"),
    ))
}

fn suite_pin_matrix(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut rng = rng_for(cfg, 2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = random_params(&mut rng);
        let eps = 10f64.powf(rng.random_range(-4.0..-1.0));
        let grid = TimeGrid::new(p.t0, p.t, rng.random_range(1..=32))?;
        let phi = build_integrand(&p, &grid)?;
        let pm = pin_matrix(&phi, &GridFunction::zeros(grid, 2), &n_eps_inverse(&p, &grid, eps)?)?;
        let expect = eps * p.hbar * p.m0 / p.delta();
        worst = worst.max((pm.m[(0, 0)] - expect).norm() / expect);
    }
    Ok(pass("pin-matrix", worst <= 1e-14, format!("max rel err {worst:.3e} (tol 1e-14)")))
}

/// `∫ dp1 T I_ε(0)` by composite Simpson over `±12` Gaussian widths.
pub fn nascent_delta_integral(params: &PhysParams, eps: f64) -> Result<Complex64> {
    let width = (eps * params.hbar * params.m0 / params.delta()).sqrt();
    let half = 12.0 * width;
    let n = 4000;
    let h = 2.0 * half / n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..=n {
        let y = -half + i as f64 * h;
        let p = PhysParams { p1: params.p0 + y, ..*params };
        let grid = TimeGrid::new(p.t0, p.t, 2)?;
        let v = t_transform_eps(&p, &grid, eps, &GridFunction::zeros(grid, 2))?;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += v * w;
    }
    Ok(acc * h / 3.0)
}

fn suite_nascent_delta(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let p = PhysParams { p1: cfg.params.p0, ..cfg.params };
    let target = propagator_no_winding(&p)?.phase;
    let mut ok = true;
    let mut parts = Vec::new();
    for &eps in &cfg.eps {
        let rel = (nascent_delta_integral(&p, eps)? - target).norm() / target.norm();
        ok &= rel <= 10.0 * eps;
        parts.push(format!("eps {eps:.0e}: rel err {rel:.3e} (tol {:.0e})", 10.0 * eps));
    }
    Ok(pass("nascent-delta", ok, parts.join("; ")))
}

fn suite_action(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let p = cfg.params;
    let grid = TimeGrid::new(p.t0, p.t, 64)?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..100 {
        let base = sample_noise(&grid, cfg.seed.wrapping_add(k));
        let mut errs = [0.0; 3];
        for (e, factor) in errs.iter_mut().zip([1, 2, 4]) {
            let noise = base.prolong(factor)?;
            *e = (action_direct(&p, &noise)? - action_closed(&p, &noise)?).abs();
        }
        for r in [errs[0] / errs[1], errs[1] / errs[2]] {
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    Ok(pass(
        "action",
        lo >= 2.0 * 0.85 && hi <= 2.0 * 1.15,
        format!("error ratio per doubling in [{lo:.4}, {hi:.4}] (want 2 ± 15%)"),
    ))
}

fn suite_poisson(_cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut worst_fixed: f64 = 0.0;
    for i in 0..1000 {
        let x = -1.0 + 2.0 * i as f64 / 999.0;
        let d = (poisson_comb_lhs(x, 1.0, 0.1, 12)? - poisson_comb_rhs(x, 1.0, 0.1, 12)?).abs();
        worst_fixed = worst_fixed.max(d);
    }
    let mut worst_adaptive: f64 = 0.0;
    for ratio in [0.05, 0.1, 0.2, 0.35, 0.5] {
        let t = 2.0;
        let s = ratio * t;
        let (l, k) = poisson_truncations(t, s, 1e-14)?;
        for i in 0..1000 {
            let x = -t + 2.0 * t * i as f64 / 999.0;
            let d = (poisson_comb_lhs(x, t, s, l)? - poisson_comb_rhs(x, t, s, k)?).abs();
            worst_adaptive = worst_adaptive.max(d);
        }
    }
    let peak = poisson_comb_lhs(0.0, 1.0, 0.1, 12)?;
    let expect = 1.0 / (0.1 * (2.0 * PI).sqrt());
    Ok(pass(
        "poisson",
        worst_fixed <= 1e-6 && worst_adaptive <= 1e-6 && (peak - expect).abs() <= 1e-4,
        format!(
            "fixed truncation max diff {worst_fixed:.3e}; adaptive max diff {worst_adaptive:.3e}; peak {peak:.6}"
        ),
    ))
}

/// Least-squares slope of `ln r` against `ln h`.
pub fn log_slope(h: &[f64], r: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Steps spanning `[1e-4, 1e-2]`, clipped to the admissible range for `delta`.
pub fn fd_steps(delta: f64) -> Vec<f64> {
    [1e-2, 3e-3, 1e-3, 3e-4, 1e-4].into_iter().filter(|h| *h < 0.2 * delta).collect()
}

fn suite_schrodinger(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut rng = rng_for(cfg, 6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let m = random_measure(&mut rng, false);
        for spec in [EnergySpec::ab(p), EnergySpec::circle(p), EnergySpec::exponential(p, m)] {
            worst = worst.max(residual_analytic(&spec)?);
        }
        if let Ok(red) = make_ab_reduction(&p, rng.random_range(1..5), rng.random_range(1..5)) {
            let spec = EnergySpec::exponential(p, reduction_measure(&red, ExponentSign::Plus));
            worst = worst.max(residual_analytic(&spec)?);
        }
    }
    let p = PhysParams { p1: cfg.params.p0, ..cfg.params };
    let steps = fd_steps(p.delta());
    let mut rates = Vec::new();
    for spec in [EnergySpec::ab(p), EnergySpec::circle(p)] {
        let r: Vec<f64> = steps.iter().map(|&h| residual_fd(&spec, h)).collect::<Result<_>>()?;
        rates.push(log_slope(&steps, &r));
    }
    let rates_ok = rates.iter().all(|r| (r - 2.0).abs() <= 0.2);
    Ok(pass(
        "schrodinger",
        worst <= 1e-12 && rates_ok,
        format!("max analytic residual {worst:.3e}; fd rates {rates:.3?}"),
    ))
}

fn suite_winding(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut rng = rng_for(cfg, 7);
    let mut worst: f64 = 0.0;
    let mut iff = true;
    for _ in 0..50 {
        let p = random_params(&mut rng);
        let l_max = rng.random_range(0..20);
        let d = (propagator_no_winding(&p)?.phase - propagator_winding(&p, l_max)?.phase).norm();
        worst = worst.max(d);
        let l = rng.random_range(-5..=5);
        iff &= winding_residual_term(&p, l) == Complex64::new(0.0, 0.0);
        let off = PhysParams { p1: p.p0 + rng.random_range(0.1..1.0), ..p };
        // l/(m0R) + p0/(2m0ħ) vanishes only for l = -p0 R/(2ħ); skip that case
        let coef = l as f64 / (p.m0 * p.radius) + p.p0 / (2.0 * p.m0 * p.hbar);
        if coef != 0.0 {
            iff &= winding_residual_term(&off, l).norm() > 0.0;
        }
    }
    Ok(pass(
        "winding",
        worst <= 1e-12 && iff,
        format!("max phase difference {worst:.3e}; residual term zero iff conserved: {iff}"),
    ))
}

fn suite_series(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut rng = rng_for(cfg, 8);
    let unit = PhysParams::default();
    let delta0 = AtomicMeasure::point(0.0, ONE);
    let s3 = series_propagator(&unit, &delta0, 3)?;
    let err3 = (s3.value.phase - closed_form_propagator(&unit, &delta0)?.phase).norm();
    let example_ok = (err3 - 0.0411).abs() <= 1e-3 && err3 <= s3.report.remainder_bound;

    let mut agree: f64 = 0.0;
    let mut trunc_ok = true;
    let mut bound_ok = true;
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let mut m = random_measure(&mut rng, true);
        // rescale so that |x| <= 3
        let x = series_variable(&p, &m)?;
        let target = rng.random_range(0.0..3.0);
        if x.norm() > 0.0 {
            for a in &mut m.atoms {
                a.weight *= target / x.norm();
            }
        }
        let x = series_variable(&p, &m)?;
        let exact = closed_form_propagator(&p, &m)?.phase / free_phase(&p);
        let sums = exp_partial_sums(x, 25);
        agree = agree.max((sums[25] - exact).norm());
        for (n, s) in sums.iter().enumerate() {
            let rb = series_propagator(&p, &m, n)?.report.remainder_bound;
            // rounding floor of the summation
            trunc_ok &= (s - exact).norm() <= rb + 1e-14 * x.norm().exp();
        }
        let c0 = p.p1.abs() / (p.m0 * p.radius);
        let gb = series_global_bound(&p, &m, c0)?;
        bound_ok &= sums.iter().all(|s| s.norm() <= gb * (1.0 + 1e-12));
    }

    let mut g_violations = 0;
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let grid = TimeGrid::new(p.t0, p.t, rng.random_range(1..=16))?;
        let phi = GridFunction::from_fn(grid, 2, |_, _| random_complex(&mut rng, 1.0));
        let n = rng.random_range(0..=4);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(p.t0..=p.t)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        if g_n_eval(&p, &phi, &s, &b)?.norm() > g_n_bound(&p, &phi, &b)? * (1.0 + 1e-12) {
            g_violations += 1;
        }
        let m = random_measure(&mut rng, true);
        let c = g_n_bound_constant(&p, &phi)?;
        let gb = series_global_bound(&p, &m, c)?;
        for order in [0, 1, 2, 5, 10] {
            if series_with_test_function(&p, &m, &phi, order)?.norm() > gb * (1.0 + 1e-12) {
                g_violations += 1;
            }
        }
    }
    Ok(pass(
        "series",
        example_ok && agree <= 1e-12 && trunc_ok && bound_ok && g_violations == 0,
        format!(
            "N=3 error {err3:.4}; N=25 max diff {agree:.3e} (|x| <= 3); remainder bound holds: {trunc_ok}; \
             global bound holds: {bound_ok}; dominance violations {g_violations}"
        ),
    ))
}

fn suite_reduction(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let mut rng = rng_for(cfg, 9);
    let p = PhysParams { p1: 2.0, ..Default::default() };
    let r = make_ab_reduction(&p, 1, 3)?;
    let example_ok = (r.big_b - 2.0 / 3.0).abs() < 1e-15 && (r.b - 2.5).abs() < 1e-15;
    let mut detect_ok = true;
    let mut coef_err: f64 = 0.0;
    for _ in 0..100 {
        let k: i64 = rng.random_range(-12..=12);
        let n: i64 = rng.random_range(1..=6) * if rng.random_bool(0.5) { 1 } else { -1 };
        if k == 0 {
            continue;
        }
        let mut q = random_params(&mut rng);
        q.p1 = q.p0;
        let red = make_ab_reduction(&q, k, n)?;
        detect_ok &= red.detectable() == (k.rem_euclid(n.abs()) != 0);
        let (lin, _) = first_order_matching(&red, &q);
        coef_err = coef_err.max((lin + k as f64 / n as f64).abs());
    }
    Ok(pass(
        "reduction",
        example_ok && detect_ok && coef_err <= 1e-14,
        format!(
            "B = {:.15}, b = {:.15}; detectability matches: {detect_ok}; max coefficient err {coef_err:.3e}",
            r.big_b, r.b
        ),
    ))
}
