//! T-transform of normalized Gaussian functionals with delta pinning.
//!
//! A [`GaussianFunctional`] is
//! `N · exp(-½⟨ω, Kω⟩) · exp(i⟨ω, g⟩) · Π_k δ(⟨ω, η_k⟩ - y_k)`
//! on the lattice white-noise space. Its T-transform at `f` has the closed
//! form (the "lemma" route)
//!
//! ```text
//! (2π)^{-J/2} det(M)^{-1/2} det(Id+K)^{-1/2}
//!     · exp(-½⟨f+g, N⁻¹(f+g)⟩) · exp(½ uᵀ M⁻¹ u)
//! M_ij = ⟨η_i, N⁻¹ η_j⟩,   u_k = i y_k + ⟨η_k, N⁻¹(f+g)⟩,   N = Id + K
//! ```
//!
//! with the determinant factors adjusted by the [`Normalization`] mode.
//! [`t_transform_oracle`] evaluates the same object as an explicit
//! finite-dimensional Gaussian integral and is the independent check.
//!
//! Only cell-diagonal block operators (multiplication operators) are
//! supported. Their determinant is the product of the per-cell block
//! determinants, with no `dt` weights.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dense::{CMatrix, SymmetricFactor};
use crate::error::{Error, Result};
use crate::lattice::{inner_product, GridFunction, TimeGrid};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `d × d` array of cell-wise multiplication operators.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    grid: TimeGrid,
    d: usize,
    // cell-major: blocks[cell * d * d + row * d + col]
    blocks: Vec<Complex64>,
}

impl BlockOperator {
    pub fn zeros(grid: TimeGrid, d: usize) -> Self {
        Self {
            grid,
            d,
            blocks: vec![ZERO; grid.n_cells() * d * d],
        }
    }

    pub fn identity(grid: TimeGrid, d: usize) -> Self {
        Self::from_cell_fn(grid, d, |_, _, r, c| if r == c { ONE } else { ZERO })
    }

    /// Builds the operator from `entry(cell, midpoint, row, col)`.
    pub fn from_cell_fn<F>(grid: TimeGrid, d: usize, mut entry: F) -> Self
    where
        F: FnMut(usize, f64, usize, usize) -> Complex64,
    {
        let mut op = Self::zeros(grid, d);
        for i in 0..grid.n_cells() {
            let m = grid.midpoint(i);
            for r in 0..d {
                for c in 0..d {
                    op.blocks[(i * d + r) * d + c] = entry(i, m, r, c);
                }
            }
        }
        op
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.d
    }

    pub fn get(&self, cell: usize, row: usize, col: usize) -> Complex64 {
        self.blocks[(cell * self.d + row) * self.d + col]
    }

    pub fn block(&self, cell: usize) -> &[Complex64] {
        let s = self.d * self.d;
        &self.blocks[cell * s..(cell + 1) * s]
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.d != other.d {
            return Err(Error::Dimension(format!(
                "block operators disagree: d = {} vs d = {} or grids differ",
                self.d, other.d
            )));
        }
        Ok(())
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if f.grid() != &self.grid || f.components() != self.d {
            return Err(Error::Dimension(format!(
                "operator with d = {} applied to function with d = {}",
                self.d,
                f.components()
            )));
        }
        let mut out = GridFunction::zeros(self.grid, self.d);
        for i in 0..self.grid.n_cells() {
            for r in 0..self.d {
                let v: Complex64 = (0..self.d).map(|c| self.get(i, r, c) * f.get(c, i)).sum();
                out.set(r, i, v);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            grid: self.grid,
            d: self.d,
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid,
            d: self.d,
            blocks: self.blocks.iter().map(|v| v * a).collect(),
        }
    }

    /// `self · other` cell-wise.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let d = self.d;
        Ok(Self::from_cell_fn(self.grid, d, |i, _, r, c| {
            (0..d).map(|k| self.get(i, r, k) * other.get(i, k, c)).sum()
        }))
    }

    fn cell_matrix(&self, cell: usize) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.d, self.d, self.block(cell))
    }

    pub fn cell_det(&self, cell: usize) -> Complex64 {
        let b = self.block(cell);
        match self.d {
            1 => b[0],
            2 => b[0] * b[3] - b[1] * b[2],
            _ => self.cell_matrix(cell).determinant(),
        }
    }

    /// Cell-wise inverse; fails naming the first singular cell.
    pub fn inverse(&self) -> Result<Self> {
        let d = self.d;
        let mut out = Self::zeros(self.grid, d);
        for i in 0..self.grid.n_cells() {
            let det = self.cell_det(i);
            let scale = self.block(i).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if !(det.norm() > 1e-14 * scale.powi(d as i32)) {
                return Err(Error::Singular {
                    what: "block operator".into(),
                    detail: format!("cell {i} has determinant {det}"),
                });
            }
            let inv: Vec<Complex64> = if d == 2 {
                let b = self.block(i);
                vec![b[3] / det, -b[1] / det, -b[2] / det, b[0] / det]
            } else {
                let m = self.cell_matrix(i).try_inverse().ok_or_else(|| Error::Singular {
                    what: "block operator".into(),
                    detail: format!("cell {i} is not invertible"),
                })?;
                // DMatrix is column-major
                (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).map(|(r, c)| m[(r, c)]).collect()
            };
            out.blocks[i * d * d..(i + 1) * d * d].copy_from_slice(&inv);
        }
        Ok(out)
    }

    /// `(B + Bᵀ)/2` cell-wise: the part a bilinear form `⟨ω, Bω⟩` sees.
    pub fn symmetric_part(&self) -> Self {
        Self::from_cell_fn(self.grid, self.d, |i, _, r, c| (self.get(i, r, c) + self.get(i, c, r)) * 0.5)
    }

    /// Largest entry-wise deviation from another operator.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// Product of the per-cell block determinants.
pub fn fredholm_det(n: &BlockOperator) -> Complex64 {
    (0..n.grid().n_cells()).map(|i| n.cell_det(i)).product()
}

/// `Σ_cells ln det(block)`, principal log per cell. Errors if a cell is singular.
pub fn fredholm_log_det(n: &BlockOperator) -> Result<Complex64> {
    let mut acc = ZERO;
    for i in 0..n.grid().n_cells() {
        let det = n.cell_det(i);
        if det == ZERO {
            return Err(Error::Singular {
                what: "Id + K".into(),
                detail: format!("cell {i} has zero determinant"),
            });
        }
        acc += det.ln();
    }
    Ok(acc)
}

/// How the normalization constant absorbs `det(Id+K)^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Multiply by the given constant; the determinant factor stays.
    Explicit(Complex64),
    /// Constant `sqrt(det(Id+K))`: the determinant factor drops out.
    EliminateDeterminant,
    /// Constant `prefactor · sqrt(det(Id+K))`.
    EliminateDeterminantWith(Complex64),
}

impl Normalization {
    /// `N · exp(log_value)`, where `log_value` either excludes the
    /// determinant factor (closed form) or already contains
    /// `-½ ln det(Id+K)` (direct integral).
    fn apply(&self, log_value: Complex64, forward: &BlockOperator, has_det: bool) -> Result<Complex64> {
        let log_det = || fredholm_log_det(forward);
        Ok(match (*self, has_det) {
            (Normalization::Explicit(c), false) => c * (log_value - 0.5 * log_det()?).exp(),
            (Normalization::Explicit(c), true) => c * log_value.exp(),
            (Normalization::EliminateDeterminant, false) => log_value.exp(),
            (Normalization::EliminateDeterminant, true) => (log_value + 0.5 * log_det()?).exp(),
            (Normalization::EliminateDeterminantWith(p), false) => p * log_value.exp(),
            (Normalization::EliminateDeterminantWith(p), true) => p * (log_value + 0.5 * log_det()?).exp(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pin {
    pub eta: GridFunction,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFunctional {
    pub k: BlockOperator,
    pub g: GridFunction,
    pub pins: Vec<Pin>,
    pub normalization: Normalization,
}

impl GaussianFunctional {
    pub fn new(k: BlockOperator, g: GridFunction, pins: Vec<Pin>, normalization: Normalization) -> Result<Self> {
        let same = |f: &GridFunction| f.grid() == k.grid() && f.components() == k.components();
        if !same(&g) {
            return Err(Error::Dimension("g does not live on the grid of K".into()));
        }
        for (idx, p) in pins.iter().enumerate() {
            if !same(&p.eta) {
                return Err(Error::Dimension(format!("eta_{idx} does not live on the grid of K")));
            }
            if p.eta.values().iter().all(|v| *v == ZERO) {
                return Err(Error::Domain(format!("eta_{idx} is the zero function")));
            }
        }
        Ok(Self { k, g, pins, normalization })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.k.grid()
    }

    /// `Id + K`.
    pub fn forward(&self) -> BlockOperator {
        BlockOperator::identity(*self.k.grid(), self.k.components())
            .add(&self.k)
            .expect("same shape")
    }
}

/// `M_ij = ⟨η_i, N⁻¹η_j⟩` and `u_k = i y_k + ⟨η_k, N⁻¹(f+g)⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct PinMatrix {
    pub m: CMatrix,
    pub u: Vec<Complex64>,
}

impl PinMatrix {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Returns `(ln det M, uᵀ M⁻¹ u)`.
    fn log_det_and_quad(&self) -> Result<(Complex64, Complex64)> {
        if self.is_empty() {
            return Ok((ZERO, ZERO));
        }
        if self.m.is_symmetric(1e-12) {
            let f = SymmetricFactor::new(&self.m, "pin matrix M")?;
            return Ok((f.log_det(), f.quad(&self.u)));
        }
        let j = self.len();
        let m = DMatrix::from_fn(j, j, |r, c| self.m[(r, c)]);
        let lu = m.lu();
        let det = lu.determinant();
        let x = lu
            .solve(&nalgebra::DVector::from_column_slice(&self.u))
            .filter(|_| det != ZERO)
            .ok_or_else(|| Error::Singular {
                what: "pin matrix M".into(),
                detail: "LU solve failed".into(),
            })?;
        let q = self.u.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        Ok((det.ln(), q))
    }
}

pub fn pin_matrix(phi: &GaussianFunctional, f: &GridFunction, ninv: &BlockOperator) -> Result<PinMatrix> {
    let h = f.add(&phi.g)?;
    let ninv_h = ninv.apply(&h)?;
    let j = phi.pins.len();
    let ninv_eta: Vec<GridFunction> = phi
        .pins
        .iter()
        .map(|p| ninv.apply(&p.eta))
        .collect::<Result<_>>()?;
    let mut m = CMatrix::zeros(j);
    for (r, pr) in phi.pins.iter().enumerate() {
        for (c, ne) in ninv_eta.iter().enumerate() {
            m[(r, c)] = inner_product(&pr.eta, ne)?;
        }
    }
    let u = phi
        .pins
        .iter()
        .map(|p| Ok(I * p.y + inner_product(&p.eta, &ninv_h)?))
        .collect::<Result<_>>()?;
    Ok(PinMatrix { m, u })
}

/// Lemma condition: `Re M` positive definite, or `Re M = 0` and `Im M` definite.
pub fn check_condition(pm: &PinMatrix) -> bool {
    let j = pm.len();
    if j == 0 {
        return true;
    }
    let part = |pick: fn(&Complex64) -> f64| {
        DMatrix::from_fn(j, j, |r, c| 0.5 * (pick(&pm.m[(r, c)]) + pick(&pm.m[(c, r)])))
    };
    let re = part(|z| z.re);
    let im = part(|z| z.im);
    let scale = re.amax().max(im.amax()).max(f64::MIN_POSITIVE);
    if re.clone().cholesky().is_some() {
        return true;
    }
    if re.amax() <= 1e-14 * scale {
        return im.clone().cholesky().is_some() || (-im).cholesky().is_some();
    }
    false
}

/// Closed-form T-transform, inverting `Id + K` cell-wise.
pub fn t_transform_lemma(phi: &GaussianFunctional, f: &GridFunction) -> Result<Complex64> {
    let ninv = phi.forward().inverse()?;
    t_transform_lemma_with_inverse(phi, f, &ninv)
}

/// Closed-form T-transform with an explicitly supplied (possibly regularized)
/// inverse of `Id + K`.
pub fn t_transform_lemma_with_inverse(
    phi: &GaussianFunctional,
    f: &GridFunction,
    ninv: &BlockOperator,
) -> Result<Complex64> {
    let h = f.add(&phi.g)?;
    let quad = inner_product(&h, &ninv.apply(&h)?)?;
    let pm = pin_matrix(phi, f, ninv)?;
    let (log_det_m, u_quad) = pm.log_det_and_quad()?;
    let j = pm.len() as f64;
    let log_value = -0.5 * j * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det_m - 0.5 * quad + 0.5 * u_quad;
    phi.normalization.apply(log_value, &phi.forward(), false)
}

/// Direct evaluation of the lattice Gaussian integral.
///
/// In the coordinates `x = ω·sqrt(dt)` the lattice measure is standard
/// normal and the integrand is `exp(-½xᵀ(K+Kᵀ)/2 x + i bᵀx)` with
/// `b = (f+g)·sqrt(dt)`. Each pin is regularized as a Gaussian of width
/// `sigma` and written through its Fourier representation, which adds one
/// auxiliary variable per pin. The resulting `(n+J)`-dimensional complex
/// Gaussian is evaluated by a dense `L D Lᵀ` factorization.
pub fn t_transform_oracle(phi: &GaussianFunctional, f: &GridFunction, sigma: f64) -> Result<Complex64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("oracle needs sigma > 0, got {sigma}")));
    }
    let grid = *phi.grid();
    let n_cells = grid.n_cells();
    let d = phi.k.components();
    let n = d * n_cells;
    let j = phi.pins.len();
    let sdt = grid.dt().sqrt();
    let h = f.add(&phi.g)?;

    let mut p = CMatrix::zeros(n + j);
    for i in 0..n_cells {
        for r in 0..d {
            for c in 0..d {
                let k = 0.5 * (phi.k.get(i, r, c) + phi.k.get(i, c, r));
                let id = if r == c { ONE } else { ZERO };
                p[(r * n_cells + i, c * n_cells + i)] = id + k;
            }
        }
    }
    for (k, pin) in phi.pins.iter().enumerate() {
        for (idx, v) in pin.eta.values().iter().enumerate() {
            let e = -I * v * sdt;
            p[(idx, n + k)] = e;
            p[(n + k, idx)] = e;
        }
        p[(n + k, n + k)] = Complex64::new(sigma * sigma, 0.0);
    }
    let mut lin: Vec<Complex64> = h.values().iter().map(|v| I * v * sdt).collect();
    lin.extend(phi.pins.iter().map(|pin| -I * pin.y));

    let fac = SymmetricFactor::new(&p, "assembled quadratic form")?;
    let log_value = -0.5 * j as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * fac.log_det() + 0.5 * fac.quad(&lin);
    phi.normalization.apply(log_value, &phi.forward(), true)
}
