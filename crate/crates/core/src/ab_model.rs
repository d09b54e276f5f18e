//! The ring-plus-flux system: parameters, noise-driven paths, the action,
//! and the ε-regularized T-transform of the Feynman integrand.
//!
//! Paths are driven by the `θ` component of the lattice noise:
//!
//! ```text
//! θ(s)   = p0 (s - t0 + a) / (m0 R) + E ∫_{t0}^{s} ω_θ,     E = sqrt(ħ / (m0 R²))
//! p_θ(s) = p0 + D ω_θ(s),                                 D = sqrt(ħ m0)
//! ```
//!
//! The integrand is a [`GaussianFunctional`] with the window kernel
//! `K = [[-1-i, -1], [1, -1]]` on `[t0, t)`, a linear shift along `θ`, and
//! one pin fixing the final conjugate momentum at `p1`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{t_transform_lemma_with_inverse, BlockOperator, GaussianFunctional, Normalization, Pin};
use crate::lattice::{indicator, GridFunction, NoiseSample, TimeGrid};
use crate::propagators::PropagatorValue;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Physical parameters. Defaults are natural units with `a = (t - t0)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    pub m0: f64,
    pub radius: f64,
    pub hbar: f64,
    pub c: f64,
    pub e: f64,
    /// Magnetic flux through the excluded region.
    pub phi: f64,
    /// Time offset fixing the angular position at `t0`.
    pub a: f64,
    /// Initial conjugate momentum.
    pub p0: f64,
    /// Pinned final conjugate momentum.
    pub p1: f64,
    pub t0: f64,
    pub t: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            m0: 1.0,
            radius: 1.0,
            hbar: 1.0,
            c: 1.0,
            e: 1.0,
            phi: 0.0,
            a: 0.5,
            p0: 1.0,
            p1: 1.0,
            t0: 0.0,
            t: 1.0,
        }
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m0", self.m0), ("R", self.radius), ("hbar", self.hbar), ("c", self.c)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.e != 0.0) || !self.e.is_finite() {
            return Err(Error::Domain(format!("e must be nonzero, got {}", self.e)));
        }
        if !(self.t0 >= 0.0) || !(self.t > self.t0) {
            return Err(Error::Domain(format!(
                "need t > t0 >= 0, got t0 = {}, t = {}",
                self.t0, self.t
            )));
        }
        if self.a == 0.0 || self.a.abs() > self.t || self.a.is_nan() {
            return Err(Error::Domain(format!("a must satisfy a != 0, |a| <= t, got {}", self.a)));
        }
        for (name, v) in [("phi", self.phi), ("p0", self.p0), ("p1", self.p1)] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Flux parameter `α = -eφ / (2πħc)`.
    pub fn alpha(&self) -> f64 {
        -self.e * self.phi / (2.0 * std::f64::consts::PI * self.hbar * self.c)
    }

    /// Sets the flux so that `alpha()` returns `alpha`.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.phi = -2.0 * std::f64::consts::PI * self.hbar * self.c * alpha / self.e;
        self
    }

    /// `t - t0`.
    pub fn delta(&self) -> f64 {
        self.t - self.t0
    }

    pub fn c1(&self) -> f64 {
        1.0 / (2.0 * self.m0)
    }

    pub fn c2(&self) -> f64 {
        -self.alpha() / (self.m0 * self.radius)
    }

    /// `D = sqrt(ħ m0)`, the momentum noise amplitude.
    pub fn d_coef(&self) -> f64 {
        (self.hbar * self.m0).sqrt()
    }

    /// `E = sqrt(ħ / (m0 R²))`, the angle noise amplitude.
    pub fn e_coef(&self) -> f64 {
        (self.hbar / (self.m0 * self.radius * self.radius)).sqrt()
    }

    /// Shift amplitude `C = (-α/R - (p1 - p0)) / sqrt(ħ m0)`, with `p_θ(t)`
    /// resolved by the pin value.
    pub fn shift_amplitude(&self) -> f64 {
        (-self.alpha() / self.radius - (self.p1 - self.p0)) / self.d_coef()
    }

    /// Hamiltonian `C1 p² - C2 p`.
    pub fn hamiltonian(&self, p: f64) -> f64 {
        self.c1() * p * p - self.c2() * p
    }

    /// `exp{-i p0/(2ħm0) [(p1 + 2α/R)Δ + (p1 - p0)(Δ + 2a)]}`: the
    /// boundary part of `exp(iS/ħ)` with `p_θ(t) = p1`.
    pub fn classical_phase(&self) -> Complex64 {
        let dl = self.delta();
        let bracket =
            (self.p1 + 2.0 * self.alpha() / self.radius) * dl + (self.p1 - self.p0) * (dl + 2.0 * self.a);
        (-I * self.p0 * bracket / (2.0 * self.hbar * self.m0)).exp()
    }

    fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        let tol = 1e-12 * self.t.abs().max(1.0);
        if (grid.t0() - self.t0).abs() > tol || (grid.t() - self.t).abs() > tol {
            return Err(Error::Dimension(format!(
                "grid [{}, {}] does not match [t0, t] = [{}, {}]",
                grid.t0(),
                grid.t(),
                self.t0,
                self.t
            )));
        }
        Ok(())
    }
}

/// Angle and conjugate-momentum paths realized from one noise sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPair {
    grid: TimeGrid,
    p0: f64,
    theta_nodes: Vec<f64>,
    ptheta_cells: Vec<f64>,
}

impl PathPair {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `θ` on the grid nodes `t0, t0 + dt, ..., t`.
    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta_nodes
    }

    /// `p_θ` on the cells.
    pub fn ptheta_cells(&self) -> &[f64] {
        &self.ptheta_cells
    }

    /// `θ(s)`; piecewise linear because `ω_θ` is a step function.
    pub fn theta(&self, s: f64) -> Result<f64> {
        let i = self.grid.cell_of(s)?;
        let frac = (s - self.grid.node(i)) / self.grid.dt();
        Ok(self.theta_nodes[i] + frac * (self.theta_nodes[i + 1] - self.theta_nodes[i]))
    }

    /// `p_θ(s)`; `p_θ(t0) = p0` and otherwise the value on the cell of `s`.
    pub fn ptheta(&self, s: f64) -> Result<f64> {
        if s == self.grid.t0() {
            return Ok(self.p0);
        }
        Ok(self.ptheta_cells[self.grid.cell_of(s)?])
    }

    /// `p_θ(t)`, read from the last cell.
    pub fn final_momentum(&self) -> f64 {
        *self.ptheta_cells.last().expect("n_cells >= 1")
    }
}

pub fn build_paths(params: &PhysParams, noise: &NoiseSample) -> Result<PathPair> {
    let grid = *noise.grid();
    params.check_grid(&grid)?;
    let w = noise.theta();
    let dt = grid.dt();
    let v0 = params.p0 / (params.m0 * params.radius);
    let (d, e) = (params.d_coef(), params.e_coef());
    let mut theta_nodes = Vec::with_capacity(w.len() + 1);
    let mut acc = 0.0;
    theta_nodes.push(v0 * params.a);
    for (i, wi) in w.iter().enumerate() {
        acc += wi * dt;
        theta_nodes.push(v0 * (grid.node(i + 1) - grid.t0() + params.a) + e * acc);
    }
    let ptheta_cells = w.iter().map(|wi| params.p0 + d * wi).collect();
    Ok(PathPair {
        grid,
        p0: params.p0,
        theta_nodes,
        ptheta_cells,
    })
}

/// Action in the integrated-by-parts closed form:
///
/// ```text
/// S = -p0/(2m0) [(p_θ(t) + 2α/R)Δ + (p_θ(t) - p0)(Δ + 2a)]
///     + (ħ/2) ∫ω_θ² + sqrt(ħ/m0) ⟨ω_θ, (-α/R - (p_θ(t) - p0)) 1_[t0,t)⟩
/// ```
pub fn action_closed(params: &PhysParams, noise: &NoiseSample) -> Result<f64> {
    let path = build_paths(params, noise)?;
    let w = noise.theta();
    let dt = noise.grid().dt();
    let dl = params.delta();
    let alpha = params.alpha();
    let pt = path.final_momentum();
    let boundary = -params.p0 / (2.0 * params.m0)
        * ((pt + 2.0 * alpha / params.radius) * dl + (pt - params.p0) * (dl + 2.0 * params.a));
    let sum_sq: f64 = w.iter().map(|x| x * x).sum::<f64>() * dt;
    let sum: f64 = w.iter().sum::<f64>() * dt;
    Ok(boundary
        + 0.5 * params.hbar * sum_sq
        + (params.hbar / params.m0).sqrt() * (-alpha / params.radius - (pt - params.p0)) * sum)
}

/// Action `-∫(R θ ṗ_θ + H) ds` evaluated directly on the lattice.
///
/// `ṗ_θ` on cell `i` is the forward difference `(p_{i+1} - p_i)/dt`, paired
/// with `θ` at the midpoint of cell `i`; the first difference is the step
/// from `p_θ(t0) = p0` into cell 0, paired with `θ(t0)`. The mismatch with
/// [`action_closed`] is first order in `dt`.
pub fn action_direct(params: &PhysParams, noise: &NoiseSample) -> Result<f64> {
    let grid = *noise.grid();
    if grid.n_cells() < 2 {
        return Err(Error::Domain("direct action needs n_cells >= 2".into()));
    }
    let path = build_paths(params, noise)?;
    let p = path.ptheta_cells();
    let dt = grid.dt();
    let mut kinetic = path.theta(grid.t0())? * (p[0] - params.p0);
    for i in 0..p.len() - 1 {
        kinetic += path.theta(grid.midpoint(i))? * (p[i + 1] - p[i]);
    }
    let energy: f64 = p.iter().map(|&pi| params.hamiltonian(pi)).sum::<f64>() * dt;
    Ok(-params.radius * kinetic - energy)
}

/// Window kernel, shift, and momentum pin of the Feynman integrand.
pub fn build_integrand(params: &PhysParams, grid: &TimeGrid) -> Result<GaussianFunctional> {
    params.validate()?;
    let window = indicator(grid, 2, params.t0, params.t, 0)?;
    let inside = |cell: usize| window.get(0, cell) != ZERO;
    let k = BlockOperator::from_cell_fn(*grid, 2, |cell, _, r, c| {
        if inside(cell) {
            [[-ONE - I, -ONE], [ONE, -ONE]][r][c]
        } else {
            ZERO
        }
    });
    let g = window.scale(Complex64::new(params.shift_amplitude(), 0.0));
    let eta = window.scale(Complex64::new(params.d_coef() / params.delta(), 0.0));
    GaussianFunctional::new(
        k,
        g,
        vec![Pin {
            eta,
            y: params.p1 - params.p0,
        }],
        Normalization::EliminateDeterminant,
    )
}

/// The regularized inverse `N_ε⁻¹ = diag(1_c, 1_c) + [[ε, 1_w], [-1_w, -i 1_w]]`
/// (`1_w` the window indicator, `1_c` its complement). The `ε` entry is not
/// windowed, so off the window the `θθ` entry is `1 + ε`.
pub fn n_eps_inverse(params: &PhysParams, grid: &TimeGrid, eps: f64) -> Result<BlockOperator> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let window = indicator(grid, 2, params.t0, params.t, 0)?;
    let e = Complex64::new(eps, 0.0);
    Ok(BlockOperator::from_cell_fn(*grid, 2, |cell, _, r, c| {
        if window.get(0, cell) != ZERO {
            [[e, ONE], [-ONE, -I]][r][c]
        } else {
            [[ONE + e, ZERO], [ZERO, ONE]][r][c]
        }
    }))
}

/// `⟨f+g, N_ε⁻¹(f+g)⟩` as the four-term sum
/// `(ε+1)∫_c f_θ² + ε∫_w (f_θ + C)² - i∫_w f_p² + ∫_c f_p²`.
pub fn quad_form_feps(params: &PhysParams, grid: &TimeGrid, eps: f64, f: &GridFunction) -> Result<Complex64> {
    if f.grid() != grid || f.components() != 2 {
        return Err(Error::Dimension("f must be a two-component function on the grid".into()));
    }
    let window = indicator(grid, 2, params.t0, params.t, 0)?;
    let c = params.shift_amplitude();
    let mut acc = ZERO;
    for i in 0..grid.n_cells() {
        let (ft, fp) = (f.get(0, i), f.get(1, i));
        acc += if window.get(0, i) != ZERO {
            eps * (ft + c) * (ft + c) - I * fp * fp
        } else {
            (eps + 1.0) * ft * ft + fp * fp
        };
    }
    Ok(acc * grid.dt())
}

/// `T I_{V_AB, ε}(f)`: classical phase times the closed-form T-transform of
/// the integrand with the regularized inverse.
pub fn t_transform_eps(params: &PhysParams, grid: &TimeGrid, eps: f64, f: &GridFunction) -> Result<Complex64> {
    let ninv = n_eps_inverse(params, grid, eps)?;
    let phi = build_integrand(params, grid)?;
    Ok(params.classical_phase() * t_transform_lemma_with_inverse(&phi, f, &ninv)?)
}

/// The integrand with `Id + K` replaced by the inverse of the symmetric part
/// of `N_ε⁻¹`. This is the kernel a genuine Gaussian integral sees; it agrees
/// with [`t_transform_eps`] for every `f` whose `p_θ` component integrates
/// to zero over the window.
pub fn symmetric_surrogate(params: &PhysParams, grid: &TimeGrid, eps: f64) -> Result<GaussianFunctional> {
    let forward = n_eps_inverse(params, grid, eps)?.symmetric_part().inverse()?;
    let k = forward.add(&BlockOperator::identity(*grid, 2).scale(-ONE))?;
    let phi = build_integrand(params, grid)?;
    GaussianFunctional::new(k, phi.g, phi.pins, phi.normalization)
}

/// The `ε → 0` limit: `δ(p1 - p0) exp[-i p0 (p1 + 2α/R) Δ / (2ħm0)]`.
/// The `(p1 - p0)(Δ + 2a)` phase term is dropped along with the Gaussian
/// prefactor, since both only matter off the delta's support.
pub fn propagator_limit(params: &PhysParams) -> PropagatorValue {
    let exponent = params.p0 * (params.p1 + 2.0 * params.alpha() / params.radius) * params.delta()
        / (2.0 * params.hbar * params.m0);
    PropagatorValue {
        delta_arg: params.p1 - params.p0,
        phase: (-I * exponent).exp(),
        comb: None,
    }
}
