//! Uniform time lattice and step functions on it.
//!
//! A [`GridFunction`] is a `d`-component step function on a [`TimeGrid`]:
//! one complex value per component and cell. Interval membership is decided
//! by cell midpoints, and a point evaluation at `s` reads the cell containing
//! `s` (with `s = t` mapped to the last cell, matching half-open `[t0, t)`).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t: f64,
    n_cells: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t: f64, n_cells: usize) -> Result<Self> {
        if !(t0 >= 0.0) || !t.is_finite() || !(t > t0) {
            return Err(Error::Domain(format!(
                "time grid needs t > t0 >= 0, got t0 = {t0}, t = {t}"
            )));
        }
        if n_cells == 0 {
            return Err(Error::Domain("time grid needs n_cells >= 1".into()));
        }
        Ok(Self { t0, t, n_cells })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Interval length `t - t0`.
    pub fn delta(&self) -> f64 {
        self.t - self.t0
    }

    pub fn dt(&self) -> f64 {
        self.delta() / self.n_cells as f64
    }

    /// Left node of cell `i` (also valid for `i = n_cells`, giving `t`).
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.t
        } else {
            self.t0 + self.delta() * i as f64 / self.n_cells as f64
        }
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        self.t0 + self.delta() * (i as f64 + 0.5) / self.n_cells as f64
    }

    fn check_time(&self, s: f64, name: &str) -> Result<()> {
        if s < self.t0 || s > self.t || s.is_nan() {
            return Err(Error::Domain(format!(
                "{name} = {s} lies outside [{}, {}]",
                self.t0, self.t
            )));
        }
        Ok(())
    }

    /// Index of the cell containing `s`; `s = t` belongs to the last cell.
    pub fn cell_of(&self, s: f64) -> Result<usize> {
        self.check_time(s, "s")?;
        let x = (s - self.t0) * self.n_cells as f64 / self.delta();
        Ok((x.floor() as usize).min(self.n_cells - 1))
    }

    /// The same interval with every cell split into `factor` cells.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        Self::new(self.t0, self.t, self.n_cells * factor)
    }
}

/// Cell-constant, `d`-component complex function on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: TimeGrid,
    d: usize,
    // component-major: values[j * n_cells + i]
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: TimeGrid, d: usize) -> Self {
        assert!(d >= 1, "grid function needs at least one component");
        Self {
            grid,
            d,
            values: vec![Complex64::new(0.0, 0.0); d * grid.n_cells],
        }
    }

    /// Samples `f(component, midpoint)` on every cell.
    pub fn from_fn<F>(grid: TimeGrid, d: usize, mut f: F) -> Self
    where
        F: FnMut(usize, f64) -> Complex64,
    {
        let mut out = Self::zeros(grid, d);
        for j in 0..d {
            for i in 0..grid.n_cells {
                out.values[j * grid.n_cells + i] = f(j, grid.midpoint(i));
            }
        }
        out
    }

    /// Real step function from a function of the cell midpoint.
    pub fn from_real_fn<F>(grid: TimeGrid, d: usize, mut f: F) -> Self
    where
        F: FnMut(usize, f64) -> f64,
    {
        Self::from_fn(grid, d, |j, s| Complex64::new(f(j, s), 0.0))
    }

    pub fn from_values(grid: TimeGrid, d: usize, values: Vec<Complex64>) -> Result<Self> {
        if d == 0 || values.len() != d * grid.n_cells {
            return Err(Error::Dimension(format!(
                "expected {} x {} values, got {}",
                d,
                grid.n_cells,
                values.len()
            )));
        }
        Ok(Self { grid, d, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.d
    }

    pub fn get(&self, component: usize, cell: usize) -> Complex64 {
        self.values[component * self.grid.n_cells + cell]
    }

    pub fn set(&mut self, component: usize, cell: usize, value: Complex64) {
        self.values[component * self.grid.n_cells + cell] = value;
    }

    pub fn component(&self, component: usize) -> &[Complex64] {
        let n = self.grid.n_cells;
        &self.values[component * n..(component + 1) * n]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at time `s` (cell lookup).
    pub fn eval(&self, component: usize, s: f64) -> Result<Complex64> {
        Ok(self.get(component, self.grid.cell_of(s)?))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.d != other.d {
            return Err(Error::Dimension(format!(
                "grid functions disagree: ({:?}, d = {}) vs ({:?}, d = {})",
                self.grid, self.d, other.grid, other.d
            )));
        }
        Ok(())
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid,
            d: self.d,
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            grid: self.grid,
            d: self.d,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Pointwise product with another step function.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            grid: self.grid,
            d: self.d,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    /// Repeats every cell value `factor` times on the refined grid.
    pub fn prolong(&self, factor: usize) -> Result<Self> {
        let fine = self.grid.refine(factor)?;
        let n = self.grid.n_cells;
        let mut values = Vec::with_capacity(self.values.len() * factor);
        for j in 0..self.d {
            for i in 0..n {
                let v = self.values[j * n + i];
                values.extend(std::iter::repeat_n(v, factor));
            }
        }
        Ok(Self {
            grid: fine,
            d: self.d,
            values,
        })
    }
}

/// Bilinear pairing `Σ_j Σ_i f_{j,i} g_{j,i} dt` (no conjugation).
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<Complex64> {
    f.check_compatible(g)?;
    let sum: Complex64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum();
    Ok(sum * f.grid.dt())
}

/// `|f|_0 = sqrt(Σ |f_{j,i}|² dt)`.
pub fn l2_norm(f: &GridFunction) -> f64 {
    (f.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * f.grid.dt()).sqrt()
}

/// Indicator of `[a, b)` on one component: 1 where the cell midpoint lies in
/// the interval.
pub fn indicator(grid: &TimeGrid, d: usize, a: f64, b: f64, component: usize) -> Result<GridFunction> {
    grid.check_time(a, "a")?;
    grid.check_time(b, "b")?;
    if a > b {
        return Err(Error::Domain(format!("indicator needs a <= b, got [{a}, {b})")));
    }
    if component >= d {
        return Err(Error::Dimension(format!("component {component} out of range for d = {d}")));
    }
    let mut out = GridFunction::zeros(*grid, d);
    for i in 0..grid.n_cells {
        let m = grid.midpoint(i);
        if m >= a && m < b {
            out.set(component, i, Complex64::new(1.0, 0.0));
        }
    }
    Ok(out)
}

/// One-cell box of height `1/dt` on the cell containing `s`.
pub fn point_mass(grid: &TimeGrid, d: usize, s: f64, component: usize) -> Result<GridFunction> {
    if component >= d {
        return Err(Error::Dimension(format!("component {component} out of range for d = {d}")));
    }
    let cell = grid.cell_of(s)?;
    let mut out = GridFunction::zeros(*grid, d);
    out.set(component, cell, Complex64::new(1.0 / grid.dt(), 0.0));
    Ok(out)
}

/// Lattice white-noise sample: two components of i.i.d. `N(0, 1/dt)` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSample {
    pub omega: GridFunction,
    pub seed: u64,
}

impl NoiseSample {
    pub fn grid(&self) -> &TimeGrid {
        self.omega.grid()
    }

    /// Real cell values of `ω_θ`.
    pub fn theta(&self) -> Vec<f64> {
        self.omega.component(0).iter().map(|v| v.re).collect()
    }

    /// Same path on a grid refined by `factor`.
    pub fn prolong(&self, factor: usize) -> Result<Self> {
        Ok(Self {
            omega: self.omega.prolong(factor)?,
            seed: self.seed,
        })
    }

    /// The identically zero sample.
    pub fn zero(grid: TimeGrid) -> Self {
        Self {
            omega: GridFunction::zeros(grid, 2),
            seed: 0,
        }
    }
}

pub fn sample_noise(grid: &TimeGrid, seed: u64) -> NoiseSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, (1.0 / grid.dt()).sqrt()).expect("dt > 0");
    let omega = GridFunction::from_fn(*grid, 2, |_, _| Complex64::new(normal.sample(&mut rng), 0.0));
    NoiseSample { omega, seed }
}
