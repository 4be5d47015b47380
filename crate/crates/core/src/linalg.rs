//! Small dense and tridiagonal helpers shared by the solvers.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex tridiagonal matrix stored by diagonals.
#[derive(Clone, Debug)]
pub struct ComplexTridiagonal {
    pub lower: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub upper: Vec<Complex64>,
}

impl ComplexTridiagonal {
    pub fn zeros(n: usize) -> Self {
        let off = n.saturating_sub(1);
        Self {
            lower: vec![Complex64::new(0.0, 0.0); off],
            diag: vec![Complex64::new(0.0, 0.0); n],
            upper: vec![Complex64::new(0.0, 0.0); off],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.upper[i];
                m[(i + 1, i)] = self.lower[i];
            }
        }
        m
    }

    /// LU factorization without pivoting. Fails when a pivot falls below
    /// `1e-14` times the largest entry.
    pub fn factor(&self) -> Result<TridiagonalLu> {
        let n = self.dim();
        let scale = self
            .diag
            .iter()
            .chain(self.lower.iter())
            .chain(self.upper.iter())
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max);
        let threshold = 1e-14 * scale.max(f64::MIN_POSITIVE);
        let mut pivots = Vec::with_capacity(n);
        let mut mult = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let mut p = self.diag[i];
            if i > 0 {
                let l = self.lower[i - 1] / pivots[i - 1];
                p -= l * self.upper[i - 1];
                mult.push(l);
            }
            if !(p.norm() >= threshold) {
                return Err(Error::NearResonance { row: i, pivot: p.norm(), threshold });
            }
            pivots.push(p);
        }
        Ok(TridiagonalLu { mult, pivots, upper: self.upper.clone() })
    }

    /// Solve with one step of iterative refinement.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let lu = self.factor()?;
        let mut x = lu.solve(b);
        let ax = self.apply(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let dx = lu.solve(&r);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
        Ok(x)
    }
}

#[derive(Clone, Debug)]
pub struct TridiagonalLu {
    mult: Vec<Complex64>,
    pivots: Vec<Complex64>,
    upper: Vec<Complex64>,
}

impl TridiagonalLu {
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.pivots.len();
        let mut y = b.to_vec();
        for i in 1..n {
            let t = self.mult[i - 1] * y[i - 1];
            y[i] -= t;
        }
        y[n - 1] /= self.pivots[n - 1];
        for i in (0..n - 1).rev() {
            let t = self.upper[i] * y[i + 1];
            y[i] = (y[i] - t) / self.pivots[i];
        }
        y
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Singular values in ascending order.
pub fn singular_values(a: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::domain("empty matrix"));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NoConvergence("matrix has non-finite entries".into()));
    }
    let svd = a.clone().try_svd(false, false, 1e-15, 10_000).ok_or_else(|| {
        Error::NoConvergence("singular value decomposition".into())
    })?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|x, y| x.total_cmp(y));
    Ok(s)
}

pub fn sigma_min(a: &DMatrix<Complex64>) -> Result<f64> {
    let s = singular_values(a)?;
    if a.nrows() < a.ncols() {
        return Ok(0.0);
    }
    Ok(s[0])
}

pub fn sigma_max(a: &DMatrix<Complex64>) -> Result<f64> {
    let s = singular_values(a)?;
    Ok(*s.last().unwrap())
}

/// Dense matrix `diag(left) * A * diag(right)`.
pub fn scale_rows_cols(a: &DMatrix<Complex64>, left: &[f64], right: &[f64]) -> DMatrix<Complex64> {
    let mut out = a.clone();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            out[(i, j)] *= left[i] * right[j];
        }
    }
    out
}
