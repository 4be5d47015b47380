//! One-dimensional modal boundary value problem
//!
//! `(u', v') + kappa^2 (u, v) + kappa u(L) conj(v(L)) = l(v)`
//!
//! on `(0, L)`, discretized with linear elements and a lumped mass matrix.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexTridiagonal};
use crate::mode_map::{InputKind, ModeMap, NodalOutput, OutputBlock};

const MIN_CELLS: usize = 4;
/// Floor on the resolution rule so short or slow problems still get a usable grid.
pub const MIN_RESOLVED_CELLS: usize = 16;

/// Uniform grid on `[0, length]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    length: f64,
    cells: usize,
}

impl Grid1D {
    pub fn new(length: f64, cells: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::domain(format!("length must be positive, got {length}")));
        }
        if cells < MIN_CELLS {
            return Err(Error::domain(format!("need at least {MIN_CELLS} cells, got {cells}")));
        }
        Ok(Self { length, cells })
    }

    /// Grid with `ceil(ppw * L * max(1, |kappa|) / 2pi)` cells.
    pub fn resolved(length: f64, kappa_abs: f64, ppw: f64) -> Result<Self> {
        if !(ppw > 0.0 && ppw.is_finite()) {
            return Err(Error::domain(format!("points per wavelength must be positive, got {ppw}")));
        }
        Self::new(length, resolved_cells(length, kappa_abs, ppw))
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn nodes_len(&self) -> usize {
        self.cells + 1
    }

    pub fn h(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.cells {
            self.length
        } else {
            i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.cells).map(|i| self.node(i)).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.cells).map(|e| (e as f64 + 0.5) * self.h()).collect()
    }

    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.h();
        let mut w = vec![h; self.cells + 1];
        w[0] = 0.5 * h;
        w[self.cells] = 0.5 * h;
        w
    }
}

pub fn resolved_cells(length: f64, kappa_abs: f64, ppw: f64) -> usize {
    let m = (ppw * length * kappa_abs.max(1.0) / (2.0 * PI)).ceil();
    (m as usize).max(MIN_RESOLVED_CELLS)
}

/// Complex nodal values on a [`Grid1D`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField1D {
    grid: Grid1D,
    values: Vec<Complex64>,
}

impl ComplexField1D {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.nodes_len() {
            return Err(Error::domain(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.nodes_len()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("field has non-finite values"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.nodes_len()] }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        Self { grid, values: grid.nodes().into_iter().map(f).collect() }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| *z == Complex64::new(0.0, 0.0))
    }

    /// Trapezoid `(u, v) = int u conj(v)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| a * b.conj() * *w)
            .sum()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, z)| w * z.norm_sqr())
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Second-order nodal derivative: central inside, one-sided at the ends.
    pub fn derivative(&self) -> Self {
        let v = &self.values;
        let m = self.grid.cells;
        let h = self.grid.h();
        let mut d = vec![Complex64::new(0.0, 0.0); m + 1];
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        d[m] = (3.0 * v[m] - 4.0 * v[m - 1] + v[m - 2]) / (2.0 * h);
        for i in 1..m {
            d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        }
        Self { grid: self.grid, values: d }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|z| f(*z)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }

    /// The first `grid.nodes_len()` values, for a grid that is a prefix of
    /// this one with the same spacing.
    pub fn restrict(&self, grid: Grid1D) -> Result<Self> {
        same_spacing(&self.grid, &grid)?;
        Self::new(grid, self.values[..grid.nodes_len()].to_vec())
    }

    /// Zero extension onto a longer grid with the same spacing.
    pub fn extend_by_zero(&self, grid: Grid1D) -> Result<Self> {
        same_spacing(&grid, &self.grid)?;
        let mut v = self.values.clone();
        v.resize(grid.nodes_len(), Complex64::new(0.0, 0.0));
        Self::new(grid, v)
    }
}

fn same_spacing(long: &Grid1D, short: &Grid1D) -> Result<()> {
    if short.cells > long.cells || (long.h() - short.h()).abs() > 1e-12 * long.h() {
        return Err(Error::domain("grids are not nested with equal spacing"));
    }
    Ok(())
}

/// `H1`: no constraint; `H1Left0`: `u(0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrialSpace {
    H1,
    H1Left0,
}

/// Mass load `(f, v)` or derivative load `(f, v')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhsKind {
    Mass,
    Derivative,
}

/// Sign of the boundary term at `z = L`. `Outgoing` pairs with `u' + kappa u = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BoundarySign {
    #[default]
    Outgoing,
    Incoming,
}

/// The modal problem on one grid.
#[derive(Clone, Debug)]
pub struct OneDProblem {
    pub grid: Grid1D,
    pub kappa: Complex64,
    pub trial_space: TrialSpace,
    pub boundary: BoundarySign,
    pub mass_rhs: Option<ComplexField1D>,
    pub derivative_rhs: Option<ComplexField1D>,
}

/// Lower bound on `|kappa| L` accepted by [`OneDProblem::new`].
pub const MIN_KAPPA_LENGTH: f64 = 1e-8;

impl OneDProblem {
    pub fn new(grid: Grid1D, kappa: Complex64, trial_space: TrialSpace) -> Result<Self> {
        if !(kappa.re.is_finite() && kappa.im.is_finite()) {
            return Err(Error::domain("kappa is not finite"));
        }
        if kappa.re < 0.0 {
            return Err(Error::domain(format!("kappa must have non-negative real part, got {kappa}")));
        }
        if kappa.norm() * grid.length() < MIN_KAPPA_LENGTH {
            return Err(Error::domain(format!(
                "|kappa| L = {:.3e} is below {MIN_KAPPA_LENGTH:.0e}",
                kappa.norm() * grid.length()
            )));
        }
        Ok(Self { grid, kappa, trial_space, boundary: BoundarySign::Outgoing, mass_rhs: None, derivative_rhs: None })
    }

    pub fn with_rhs(mut self, kind: RhsKind, f: ComplexField1D) -> Result<Self> {
        if *f.grid() != self.grid {
            return Err(Error::domain("right-hand side lives on a different grid"));
        }
        match kind {
            RhsKind::Mass => self.mass_rhs = Some(f),
            RhsKind::Derivative => self.derivative_rhs = Some(f),
        }
        Ok(self)
    }

    pub fn with_boundary(mut self, sign: BoundarySign) -> Self {
        self.boundary = sign;
        self
    }

    fn offset(&self) -> usize {
        match self.trial_space {
            TrialSpace::H1 => 0,
            TrialSpace::H1Left0 => 1,
        }
    }

    /// Full nodal system matrix before any constraint is applied.
    pub fn full_matrix(&self) -> ComplexTridiagonal {
        let m = self.grid.cells();
        let h = self.grid.h();
        let k2 = self.kappa * self.kappa;
        let w = self.grid.trapezoid_weights();
        let mut t = ComplexTridiagonal::zeros(m + 1);
        for i in 0..=m {
            let stiff = if i == 0 || i == m { 1.0 / h } else { 2.0 / h };
            t.diag[i] = Complex64::new(stiff, 0.0) + k2 * w[i];
        }
        for e in 0..m {
            t.upper[e] = Complex64::new(-1.0 / h, 0.0);
            t.lower[e] = Complex64::new(-1.0 / h, 0.0);
        }
        let b = match self.boundary {
            BoundarySign::Outgoing => self.kappa,
            BoundarySign::Incoming => -self.kappa,
        };
        t.diag[m] += b;
        t
    }

    /// Nodal load vector `l(phi_k)` for every node.
    pub fn full_load(&self) -> Vec<Complex64> {
        let m = self.grid.cells();
        let mut b = vec![Complex64::new(0.0, 0.0); m + 1];
        if let Some(f) = &self.mass_rhs {
            for ((bi, wi), fi) in b.iter_mut().zip(self.grid.trapezoid_weights()).zip(f.values()) {
                *bi += fi * wi;
            }
        }
        if let Some(g) = &self.derivative_rhs {
            let v = g.values();
            for e in 0..m {
                let avg = 0.5 * (v[e] + v[e + 1]);
                b[e] -= avg;
                b[e + 1] += avg;
            }
        }
        b
    }

    /// The system in the constrained unknowns.
    pub fn assemble(&self) -> (ComplexTridiagonal, Vec<Complex64>) {
        let t = self.full_matrix();
        let b = self.full_load();
        let off = self.offset();
        if off == 0 {
            return (t, b);
        }
        let r = ComplexTridiagonal { lower: t.lower[1..].to_vec(), diag: t.diag[1..].to_vec(), upper: t.upper[1..].to_vec() };
        (r, b[1..].to_vec())
    }
}

/// Solve the modal problem with a tridiagonal LU and one refinement step.
pub fn solve_bvp(problem: &OneDProblem) -> Result<ComplexField1D> {
    let (a, b) = problem.assemble();
    let x = a.solve(&b)?;
    let mut values = Vec::with_capacity(problem.grid.nodes_len());
    if problem.offset() == 1 {
        values.push(Complex64::new(0.0, 0.0));
    }
    values.extend(x);
    ComplexField1D::new(problem.grid, values)
}

/// `||u||_{1,|kappa|}^2 = ||u'||^2 + |kappa|^2 ||u||^2` with the cellwise
/// derivative of the linear interpolant.
pub fn norm_1k(u: &ComplexField1D, kappa: Complex64) -> f64 {
    let h = u.grid().h();
    let v = u.values();
    let grad: f64 = v.windows(2).map(|p| (p[1] - p[0]).norm_sqr() / h).sum();
    (grad + kappa.norm_sqr() * u.l2_norm_sq()).sqrt()
}

/// Gram matrix of the `(1,|kappa|)` norm in the constrained unknowns.
pub fn energy_gram(grid: &Grid1D, kappa_abs: f64, trial_space: TrialSpace) -> DMatrix<f64> {
    let m = grid.cells();
    let h = grid.h();
    let w = grid.trapezoid_weights();
    let mut g = DMatrix::<f64>::zeros(m + 1, m + 1);
    for e in 0..m {
        g[(e, e)] += 1.0 / h;
        g[(e + 1, e + 1)] += 1.0 / h;
        g[(e, e + 1)] -= 1.0 / h;
        g[(e + 1, e)] -= 1.0 / h;
    }
    for i in 0..=m {
        g[(i, i)] += kappa_abs * kappa_abs * w[i];
    }
    match trial_space {
        TrialSpace::H1 => g,
        TrialSpace::H1Left0 => g.view((1, 1), (m, m)).into_owned(),
    }
}

fn cholesky_lower(g: DMatrix<f64>) -> Result<DMatrix<Complex64>> {
    let l = nalgebra::Cholesky::new(g).ok_or_else(|| Error::NotPositiveDefinite("energy norm".into()))?.l();
    Ok(l.map(|x| Complex64::new(x, 0.0)))
}

/// Discrete inf-sup constant of the modal form in the `(1,|kappa|)` norm.
pub fn inf_sup_1d(grid: &Grid1D, kappa: Complex64, trial_space: TrialSpace) -> Result<f64> {
    let p = OneDProblem::new(*grid, kappa, trial_space)?;
    let (a, _) = p.assemble();
    let l = cholesky_lower(energy_gram(grid, kappa.norm(), trial_space))?;
    // C = L^{-1} A L^{-T}
    let x = l.solve_lower_triangular(&a.to_dense()).ok_or_else(|| Error::NotPositiveDefinite("energy norm".into()))?;
    let c = l
        .solve_lower_triangular(&x.adjoint())
        .ok_or_else(|| Error::NotPositiveDefinite("energy norm".into()))?
        .adjoint();
    linalg::sigma_min(&c)
}

#[derive(Clone, Copy, Debug)]
pub struct StabilityOptions {
    pub ppw: f64,
    pub seed: u64,
    /// Overrides the resolution rule.
    pub cells: Option<usize>,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { ppw: 20.0, seed: crate::rng::DEFAULT_SEED, cells: None }
    }
}

impl StabilityOptions {
    pub fn grid(&self, length: f64, kappa_abs: f64) -> Result<Grid1D> {
        match self.cells {
            Some(m) => Grid1D::new(length, m),
            None => Grid1D::resolved(length, kappa_abs, self.ppw),
        }
    }
}

/// Weighted map `f -> u` from L2 loads of the given kind to the `(1,|kappa|)` norm.
pub fn solution_map(grid: &Grid1D, kappa: Complex64, kind: RhsKind) -> Result<ModeMap> {
    let one = Complex64::new(1.0, 0.0);
    let input = match kind {
        RhsKind::Mass => InputKind::Mass(one),
        RhsKind::Derivative => InputKind::Derivative(one),
    };
    ModeMap::new(
        grid,
        kappa,
        &[input],
        &[OutputBlock::Nodal(NodalOutput::value(Complex64::new(kappa.norm(), 0.0))), OutputBlock::CellGradient(1.0)],
    )
}

/// Estimate of `sup ||u||_{1,|kappa|} / ||f||` over loads of the given kind,
/// with `u(0) = 0`, by seeded power iteration on the weighted solution map.
pub fn stability_constant_1d(kappa: Complex64, length: f64, kind: RhsKind, trials: usize, opts: &StabilityOptions) -> Result<f64> {
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let grid = opts.grid(length, kappa.norm())?;
    OneDProblem::new(grid, kappa, TrialSpace::H1Left0)?;
    Ok(solution_map(&grid, kappa, kind)?.norm_estimate(trials, opts.seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn resolution_rule() {
        assert_eq!(resolved_cells(8.0, 10.0, 20.0), (20.0 * 80.0 / (2.0 * PI)).ceil() as usize);
        assert_eq!(resolved_cells(1.0, 0.5, 20.0), MIN_RESOLVED_CELLS);
    }

    #[test]
    fn rejects_negative_real_part() {
        let g = Grid1D::new(1.0, 8).unwrap();
        assert!(OneDProblem::new(g, c(-1.0, 0.0), TrialSpace::H1).is_err());
        assert!(OneDProblem::new(g, c(0.0, 1e-10), TrialSpace::H1).is_err());
    }

    #[test]
    fn zero_load_gives_zero() {
        let g = Grid1D::new(2.0, 16).unwrap();
        let p = OneDProblem::new(g, c(0.0, 1.5), TrialSpace::H1Left0)
            .unwrap()
            .with_rhs(RhsKind::Mass, ComplexField1D::zeros(g))
            .unwrap();
        assert!(solve_bvp(&p).unwrap().is_zero());
    }

    #[test]
    fn derivative_load_adds_boundary_consistent_terms() {
        // Constant g: (g, v') = g (v(L) - v(0)).
        let g = Grid1D::new(1.0, 8).unwrap();
        let p = OneDProblem::new(g, c(1.0, 0.0), TrialSpace::H1)
            .unwrap()
            .with_rhs(RhsKind::Derivative, ComplexField1D::from_fn(g, |_| c(2.0, 0.0)))
            .unwrap();
        let b = p.full_load();
        assert!((b[0] + 2.0).norm() < 1e-14 && (b[8] - 2.0).norm() < 1e-14);
        assert!(b[1..8].iter().all(|z| z.norm() < 1e-14));
    }
}
