//! Small dense complex-symmetric factorization.
//!
//! `A = L D Lᵀ` without pivoting and without conjugation. For matrices whose
//! real part is positive definite every pivot has a positive real part, so
//! `Σ ln d_k` with principal logs is the continuous branch of `ln det A`
//! reached from the identity. That is the branch the Gaussian integral
//! `det(A)^{-1/2}` needs.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        (0..self.n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).norm() <= rel_tol * scale))
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

#[derive(Debug, Clone)]
pub struct SymmetricFactor {
    n: usize,
    l: Vec<Complex64>,
    d: Vec<Complex64>,
}

impl SymmetricFactor {
    /// Factors the symmetric part of `a` (only the lower triangle is read).
    pub fn new(a: &CMatrix, what: &str) -> Result<Self> {
        let n = a.dim();
        let scale = (0..n).map(|i| a[(i, i)].norm()).fold(0.0, f64::max).max(1.0);
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        let mut d = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let mut dj = a[(j, j)];
            for k in 0..j {
                dj -= l[j * n + k] * l[j * n + k] * d[k];
            }
            if !(dj.norm() > 1e-14 * scale) {
                return Err(Error::Singular {
                    what: what.to_string(),
                    detail: format!("pivot {j} vanishes ({dj})"),
                });
            }
            d[j] = dj;
            l[j * n + j] = Complex64::new(1.0, 0.0);
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k] * d[k];
                }
                l[i * n + j] = s / dj;
            }
        }
        Ok(Self { n, l, d })
    }

    pub fn pivots(&self) -> &[Complex64] {
        &self.d
    }

    /// `Σ ln d_k` (principal branch per pivot).
    pub fn log_det(&self) -> Complex64 {
        self.d.iter().map(|z| z.ln()).sum()
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[i * n + k];
                y[i] = y[i] - lik * y[k];
            }
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let lki = self.l[k * n + i];
                y[i] = y[i] - lki * y[k];
            }
        }
        y
    }

    /// `bᵀ A⁻¹ b` (bilinear, no conjugation).
    pub fn quad(&self, b: &[Complex64]) -> Complex64 {
        let x = self.solve(b);
        b.iter().zip(&x).map(|(p, q)| p * q).sum()
    }
}

/// Square root of `value(target)` continued along a log-spaced path in the
/// parameter from `start` to `target`, picking at each step the sign closest
/// to the previous root. The first root is principal.
pub fn sqrt_continued<F>(value: F, start: f64, target: f64, steps: usize) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    assert!(start > 0.0 && target > 0.0, "continuation path must stay positive");
    let steps = steps.max(1);
    let mut root = value(start).sqrt();
    let (ls, lt) = (start.ln(), target.ln());
    for k in 1..=steps {
        let p = (ls + (lt - ls) * k as f64 / steps as f64).exp();
        let r = value(p).sqrt();
        root = if (r - root).norm() <= (r + root).norm() { r } else { -r };
    }
    root
}
