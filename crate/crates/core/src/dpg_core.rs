//! Ultraweak inf-sup diagnostics for discrete first-order operators.
//!
//! An operator `A` maps a trial space with Gram matrix `M_U` to a test space
//! with Gram matrix `M_V`. Everything is computed on the whitened matrix
//! `L_V^H A L_U^{-H}` where `M = L L^H`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Above this dimension singular values come from iteration instead of a dense SVD.
pub const DENSE_LIMIT: usize = 1024;

#[derive(Clone, Debug, PartialEq)]
pub enum Gram {
    Diagonal(Vec<f64>),
    Dense(DMatrix<Complex64>),
}

impl Gram {
    pub fn dim(&self) -> usize {
        match self {
            Gram::Diagonal(w) => w.len(),
            Gram::Dense(m) => m.nrows(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, Gram::Diagonal(_))
    }

    // Lower Cholesky factor.
    fn factor(&self) -> Result<Factor> {
        match self {
            Gram::Diagonal(w) => {
                if let Some(i) = w.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(Error::NotPositiveDefinite(format!("diagonal entry {i} is {}", w[i])));
                }
                Ok(Factor::Diagonal(w.iter().map(|x| x.sqrt()).collect()))
            }
            Gram::Dense(m) => {
                if m.nrows() != m.ncols() {
                    return Err(Error::domain("Gram matrix is not square"));
                }
                let herm = (m - m.adjoint()).norm() <= 1e-12 * m.norm().max(1.0);
                if !herm {
                    return Err(Error::NotPositiveDefinite("matrix is not Hermitian".into()));
                }
                let ch = nalgebra::Cholesky::new(m.clone())
                    .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
                let l = ch.l();
                // Complex Cholesky happily takes square roots of negative pivots.
                if (0..l.nrows()).any(|i| !(l[(i, i)].re > 0.0) || l[(i, i)].im.abs() > 1e-12 * l[(i, i)].re) {
                    return Err(Error::NotPositiveDefinite("Cholesky pivot is not positive".into()));
                }
                Ok(Factor::Dense(l))
            }
        }
    }

    fn swap_positions_compatible(&self) -> bool {
        self.is_diagonal()
    }
}

enum Factor {
    Diagonal(Vec<f64>),
    Dense(DMatrix<Complex64>),
}

/// A discrete operator with its trial and test Gram matrices. Optional
/// coordinates of each trial and test degree of freedom enable
/// [`envelope_conjugate`].
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub matrix: DMatrix<Complex64>,
    pub trial_gram: Gram,
    pub test_gram: Gram,
    pub trial_positions: Option<Vec<f64>>,
    pub test_positions: Option<Vec<f64>>,
}

impl DiscreteOperator {
    pub fn new(matrix: DMatrix<Complex64>, trial_gram: Gram, test_gram: Gram) -> Result<Self> {
        if matrix.ncols() != trial_gram.dim() || matrix.nrows() != test_gram.dim() {
            return Err(Error::domain(format!(
                "operator is {}x{} but Grams have sizes {} (trial) and {} (test)",
                matrix.nrows(),
                matrix.ncols(),
                trial_gram.dim(),
                test_gram.dim()
            )));
        }
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::domain("operator is empty"));
        }
        trial_gram.factor()?;
        test_gram.factor()?;
        Ok(Self { matrix, trial_gram, test_gram, trial_positions: None, test_positions: None })
    }

    pub fn with_positions(mut self, trial: Vec<f64>, test: Vec<f64>) -> Result<Self> {
        if trial.len() != self.matrix.ncols() || test.len() != self.matrix.nrows() {
            return Err(Error::domain("position arrays do not match operator size"));
        }
        self.trial_positions = Some(trial);
        self.test_positions = Some(test);
        Ok(self)
    }

    pub fn trial_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn test_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `L_V^H A L_U^{-H}`.
    pub fn whitened(&self) -> Result<DMatrix<Complex64>> {
        let mut a = self.matrix.clone();
        match self.test_gram.factor()? {
            Factor::Diagonal(s) => {
                for i in 0..a.nrows() {
                    for j in 0..a.ncols() {
                        a[(i, j)] *= s[i];
                    }
                }
            }
            Factor::Dense(l) => a = l.adjoint() * a,
        }
        match self.trial_gram.factor()? {
            Factor::Diagonal(s) => {
                for j in 0..a.ncols() {
                    for i in 0..a.nrows() {
                        a[(i, j)] /= s[j];
                    }
                }
            }
            Factor::Dense(l) => {
                // X L^H = A  <=>  L X^H = A^H
                let xh = l
                    .solve_lower_triangular(&a.adjoint())
                    .ok_or_else(|| Error::NotPositiveDefinite("trial Gram".into()))?;
                a = xh.adjoint();
            }
        }
        Ok(a)
    }

    /// Generalized singular values, ascending.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        linalg::singular_values(&self.whitened()?)
    }

    /// Gram-consistent adjoint `M_U^{-1} A^H M_V`, with the Grams swapped.
    pub fn adjoint(&self) -> Result<Self> {
        let mv = gram_dense(&self.test_gram);
        let mu = gram_dense(&self.trial_gram);
        let rhs = self.matrix.adjoint() * mv;
        let m = match &self.trial_gram {
            Gram::Diagonal(w) => {
                let mut r = rhs;
                for i in 0..r.nrows() {
                    for j in 0..r.ncols() {
                        r[(i, j)] /= w[i];
                    }
                }
                r
            }
            Gram::Dense(_) => mu.lu().solve(&rhs).ok_or_else(|| Error::NotPositiveDefinite("trial Gram".into()))?,
        };
        let mut out = Self::new(m, self.test_gram.clone(), self.trial_gram.clone())?;
        if let (Some(t), Some(s)) = (&self.trial_positions, &self.test_positions) {
            if self.test_gram.swap_positions_compatible() {
                out = out.with_positions(s.clone(), t.clone())?;
            }
        }
        Ok(out)
    }
}

fn gram_dense(g: &Gram) -> DMatrix<Complex64> {
    match g {
        Gram::Diagonal(w) => DMatrix::from_diagonal(&DVector::from_iterator(w.len(), w.iter().map(|x| Complex64::new(*x, 0.0)))),
        Gram::Dense(m) => m.clone(),
    }
}

/// `alpha = inf_u ||A u||_V / ||u||_U`.
pub fn boundedness_below(op: &DiscreteOperator) -> Result<f64> {
    if op.test_dim() < op.trial_dim() {
        return Ok(0.0);
    }
    let a = op.whitened()?;
    if a.ncols() <= DENSE_LIMIT && a.nrows() <= DENSE_LIMIT {
        return linalg::sigma_min(&a);
    }
    if a.nrows() != a.ncols() {
        return Err(Error::Unsupported("iterative path needs a square operator".into()));
    }
    let lu = a.clone().lu();
    let ah = a.adjoint();
    let lu_h = ah.lu();
    // Power iteration on (A^H A)^{-1} = A^{-1} A^{-H}.
    let lam = power_max(a.ncols(), |x| {
        let y = lu_h.solve(x)?;
        lu.solve(&y)
    })?;
    Ok(1.0 / lam.sqrt())
}

fn power_max(n: usize, apply: impl Fn(&DVector<Complex64>) -> Option<DVector<Complex64>>) -> Result<f64> {
    let mut r = crate::rng::stream(0x5EED, n as u64);
    let mut x = DVector::from_vec(crate::rng::complex_vector(&mut r, n));
    let nx = x.norm();
    x /= Complex64::new(nx, 0.0);
    let mut est = 0.0;
    for _ in 0..5000 {
        let y = apply(&x).ok_or(Error::NearResonance { row: 0, pivot: 0.0, threshold: 0.0 })?;
        let lam = x.dotc(&y).re;
        let ny = y.norm();
        if ny == 0.0 {
            return Ok(0.0);
        }
        x = y / Complex64::new(ny, 0.0);
        if (lam - est).abs() <= 1e-11 * lam.abs() {
            return Ok(lam);
        }
        est = lam;
    }
    Err(Error::NoConvergence("power iteration".into()))
}

/// Ultraweak inf-sup result for one scaling parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfSupReport {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_computed: f64,
    /// `(1 + beta^2 / alpha^2)^{-1/2}`.
    pub gamma_bound: f64,
}

impl InfSupReport {
    pub fn stability_proxy(&self) -> f64 {
        1.0 / self.gamma_computed
    }

    pub fn satisfies_bound(&self, tol: f64) -> bool {
        self.gamma_computed >= self.gamma_bound - tol && self.gamma_computed <= 1.0 + tol
    }
}

pub fn gamma_lower_bound(alpha: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return 1.0;
    }
    if alpha == 0.0 {
        return 0.0;
    }
    1.0 / (1.0 + (beta / alpha).powi(2)).sqrt()
}

/// Inf-sup constant of `b(u, v) = (u, A* v)_U` in the trial norm against the
/// scaled adjoint graph norm `||A* v||_U^2 + beta^2 ||v||_V^2`.
pub fn uw_infsup(op: &DiscreteOperator, beta: f64) -> Result<InfSupReport> {
    Ok(uw_infsup_many(op, &[beta])?.remove(0))
}

/// [`uw_infsup`] for several scalings, sharing the whitening and `alpha`.
pub fn uw_infsup_many(op: &DiscreteOperator, betas: &[f64]) -> Result<Vec<InfSupReport>> {
    if let Some(b) = betas.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
        return Err(Error::domain(format!("beta must be non-negative, got {b}")));
    }
    let a = op.whitened()?;
    let alpha = boundedness_below(op)?;
    let (nv, nu) = (a.nrows(), a.ncols());
    let dense = nv <= DENSE_LIMIT && nu <= DENSE_LIMIT;
    if !dense && nv != nu {
        return Err(Error::Unsupported("iterative path needs a square operator".into()));
    }
    let factors = if dense { None } else { Some((a.clone().lu(), a.adjoint().lu())) };
    let mut out = Vec::with_capacity(betas.len());
    for &beta in betas {
        let gamma = match &factors {
            // ||A* v|| is only a seminorm on a tall range; sup over v then
            // recovers ||u|| whenever A is injective.
            None if beta == 0.0 && nv > nu => {
                if alpha > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            None => {
                // Test norm factor R with G_V = R^H R from QR of [A^H; beta I].
                let mut z = DMatrix::<Complex64>::zeros(nu + nv, nv);
                z.view_mut((0, 0), (nu, nv)).copy_from(&a.adjoint());
                for i in 0..nv {
                    z[(nu + i, i)] = Complex64::new(beta, 0.0);
                }
                let r = z.qr().r();
                let x = r
                    .adjoint()
                    .solve_lower_triangular(&a)
                    .ok_or_else(|| Error::NotPositiveDefinite("test norm is degenerate".into()))?;
                if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(Error::NotPositiveDefinite("test norm is degenerate".into()));
                }
                linalg::sigma_min(&x)?
            }
            Some((lu, lu_h)) => {
                // gamma^{-2} = lambda_max(A^{-1} G_V A^{-H}), G_V = A A^H + beta^2 I.
                let lam = power_max(nu, |x| {
                    let y = lu_h.solve(x)?;
                    let g = &a * (a.adjoint() * &y) + &y * Complex64::new(beta * beta, 0.0);
                    lu.solve(&g)
                })?;
                1.0 / lam.sqrt()
            }
        };
        out.push(InfSupReport { alpha, beta, gamma_computed: gamma, gamma_bound: gamma_lower_bound(alpha, beta) });
    }
    Ok(out)
}

/// Phase factors `exp(-i k z)` of an envelope substitution `u = e^{-ikz} w`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeTransform {
    pub positions: Vec<f64>,
    pub k: f64,
    pub phase: Vec<Complex64>,
}

impl EnvelopeTransform {
    pub fn new(positions: Vec<f64>, k: f64) -> Self {
        let phase = positions.iter().map(|z| Complex64::from_polar(1.0, -k * z)).collect();
        Self { positions, k, phase }
    }

    pub fn apply(&self, w: &[Complex64]) -> Vec<Complex64> {
        w.iter().zip(&self.phase).map(|(a, p)| a * p).collect()
    }
}

/// The operator acting on envelopes: `diag(e^{ikz_test}) A diag(e^{-ikz_trial})`.
/// Diagonal Grams are unchanged, so every generalized singular value is kept.
pub fn envelope_conjugate(op: &DiscreteOperator, k: f64) -> Result<DiscreteOperator> {
    if !k.is_finite() {
        return Err(Error::domain("envelope wavenumber is not finite"));
    }
    if !op.trial_gram.is_diagonal() || !op.test_gram.is_diagonal() {
        return Err(Error::Unsupported("envelope conjugation needs diagonal Gram matrices".into()));
    }
    let (Some(zt), Some(zv)) = (&op.trial_positions, &op.test_positions) else {
        return Err(Error::domain("operator has no degree-of-freedom positions"));
    };
    if k == 0.0 {
        return Ok(op.clone());
    }
    let right = EnvelopeTransform::new(zt.clone(), k);
    let left = EnvelopeTransform::new(zv.clone(), -k);
    let mut m = op.matrix.clone();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            m[(i, j)] *= left.phase[i] * right.phase[j];
        }
    }
    Ok(DiscreteOperator { matrix: m, ..op.clone() })
}

/// Outcome of the relative perturbation argument for `eps = 1 + delta_eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PerturbationOutcome {
    /// `margin = 1 - C L omega delta_eps > 0`; the perturbed constant is
    /// bounded by `effective_constant = C L / margin`.
    Stable { margin: f64, effective_constant: f64 },
    Unstable { margin: f64 },
}

pub fn perturbation_margin(c: f64, length: f64, omega: f64, delta_eps: f64) -> Result<PerturbationOutcome> {
    for (name, v) in [("C", c), ("L", length), ("omega", omega)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    if !(delta_eps >= 0.0 && delta_eps.is_finite()) {
        return Err(Error::domain(format!("delta_eps must be non-negative, got {delta_eps}")));
    }
    let margin = 1.0 - c * length * omega * delta_eps;
    if margin > 0.0 {
        Ok(PerturbationOutcome::Stable { margin, effective_constant: c * length / margin })
    } else {
        Ok(PerturbationOutcome::Unstable { margin })
    }
}

/// Block-diagonal operator, one block per decoupled mode.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    pub blocks: Vec<DiscreteOperator>,
}

impl BlockOperator {
    pub fn new(blocks: Vec<DiscreteOperator>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::domain("block operator has no blocks"));
        }
        Ok(Self { blocks })
    }

    pub fn boundedness_below(&self) -> Result<f64> {
        let mut a = f64::INFINITY;
        for b in &self.blocks {
            a = a.min(boundedness_below(b)?);
        }
        Ok(a)
    }

    /// The inf-sup constant of a block-diagonal form is the smallest block value.
    pub fn uw_infsup(&self, beta: f64) -> Result<InfSupReport> {
        Ok(self.uw_infsup_many(&[beta])?.remove(0))
    }

    pub fn uw_infsup_many(&self, betas: &[f64]) -> Result<Vec<InfSupReport>> {
        let mut alpha = f64::INFINITY;
        let mut gamma = vec![f64::INFINITY; betas.len()];
        for b in &self.blocks {
            for (i, r) in uw_infsup_many(b, betas)?.into_iter().enumerate() {
                alpha = alpha.min(r.alpha);
                gamma[i] = gamma[i].min(r.gamma_computed);
            }
        }
        Ok(betas
            .iter()
            .zip(gamma)
            .map(|(&beta, g)| InfSupReport { alpha, beta, gamma_computed: g, gamma_bound: gamma_lower_bound(alpha, beta) })
            .collect())
    }
}
