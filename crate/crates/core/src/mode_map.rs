//! Matrix-free solution maps of a single mode.
//!
//! A map sends nodal input channels through the modal load, one tridiagonal
//! solve and a local readout, `S x = R A^{-1} Q x + D x`. Inputs and outputs
//! carry diagonal L2 weights so that the operator norm of the weighted map is
//! a stability constant.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::helmholtz_1d::{Grid1D, OneDProblem, TrialSpace};
use crate::linalg::{ComplexTridiagonal, TridiagonalLu};
use crate::rng;

#[derive(Clone, Debug, Default)]
struct Sparse {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl Sparse {
    fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: Vec::new() }
    }

    fn push(&mut self, r: usize, c: usize, v: Complex64) {
        debug_assert!(r < self.rows && c < self.cols);
        if v != Complex64::new(0.0, 0.0) {
            self.entries.push((r, c, v));
        }
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut x = vec![Complex64::new(0.0, 0.0); self.cols];
        for &(r, c, v) in &self.entries {
            x[c] += v.conj() * y[r];
        }
        x
    }
}

/// One output block evaluated at every node, as a combination of the
/// solution, its nodal derivative and the input channels at the same node.
#[derive(Clone, Debug, Default)]
pub struct NodalOutput {
    pub value: Complex64,
    pub derivative: Complex64,
    pub direct: Vec<(usize, Complex64)>,
}

impl NodalOutput {
    pub fn value(scale: Complex64) -> Self {
        Self { value: scale, ..Default::default() }
    }

    pub fn with_derivative(mut self, scale: Complex64) -> Self {
        self.derivative = scale;
        self
    }

    pub fn with_direct(mut self, channel: usize, scale: Complex64) -> Self {
        self.direct.push((channel, scale));
        self
    }
}

#[derive(Clone, Debug)]
pub enum InputKind {
    /// Enters the load as `scale (x, v)`.
    Mass(Complex64),
    /// Enters the load as `scale (x, v')`.
    Derivative(Complex64),
}

#[derive(Clone, Debug)]
pub enum OutputBlock {
    Nodal(NodalOutput),
    /// Cellwise derivative of the solution times a scale, weighted by `h`.
    CellGradient(f64),
}

/// A weighted single-mode solution map.
#[derive(Clone, Debug)]
pub struct ModeMap {
    load: Sparse,
    read: Sparse,
    direct: Sparse,
    lu: TridiagonalLu,
    lu_adjoint: TridiagonalLu,
    in_scale: Vec<f64>,
    out_scale: Vec<f64>,
    pub cells: usize,
}

fn nodal_derivative_stencil(i: usize, m: usize, h: f64) -> Vec<(usize, f64)> {
    let s = 1.0 / (2.0 * h);
    if i == 0 {
        vec![(0, -3.0 * s), (1, 4.0 * s), (2, -s)]
    } else if i == m {
        vec![(m, 3.0 * s), (m - 1, -4.0 * s), (m - 2, s)]
    } else {
        vec![(i + 1, s), (i - 1, -s)]
    }
}

impl ModeMap {
    /// Build the map for the modal problem with wavenumber `kappa` on the
    /// constrained space `u(0) = 0`.
    pub fn new(grid: &Grid1D, kappa: Complex64, inputs: &[InputKind], outputs: &[OutputBlock]) -> Result<Self> {
        if inputs.is_empty() || outputs.is_empty() {
            return Err(Error::domain("map needs inputs and outputs"));
        }
        let m = grid.cells();
        let np = m + 1;
        let h = grid.h();
        let w = grid.trapezoid_weights();
        let (a, _) = OneDProblem::new(*grid, kappa, TrialSpace::H1Left0)?.assemble();
        let lu = a.factor()?;
        let ah = ComplexTridiagonal {
            lower: a.upper.iter().map(|z| z.conj()).collect(),
            diag: a.diag.iter().map(|z| z.conj()).collect(),
            upper: a.lower.iter().map(|z| z.conj()).collect(),
        };
        let lu_adjoint = ah.factor()?;
        let dim = m; // unknowns at nodes 1..=m
        let n_in = inputs.len() * np;
        let mut load = Sparse::new(dim, n_in);
        let put = |load: &mut Sparse, node: usize, col: usize, v: Complex64| {
            if node >= 1 {
                load.push(node - 1, col, v);
            }
        };
        for (ch, kind) in inputs.iter().enumerate() {
            for j in 0..np {
                let col = ch * np + j;
                match kind {
                    InputKind::Mass(s) => put(&mut load, j, col, s * w[j]),
                    InputKind::Derivative(s) => {
                        let half = 0.5 * s;
                        if j < m {
                            put(&mut load, j, col, -half);
                            put(&mut load, j + 1, col, half);
                        }
                        if j >= 1 {
                            put(&mut load, j - 1, col, -half);
                            put(&mut load, j, col, half);
                        }
                    }
                }
            }
        }
        let n_out: usize = outputs
            .iter()
            .map(|b| match b {
                OutputBlock::Nodal(_) => np,
                OutputBlock::CellGradient(_) => m,
            })
            .sum();
        let mut read = Sparse::new(n_out, dim);
        let mut direct = Sparse::new(n_out, n_in);
        let mut out_w = Vec::with_capacity(n_out);
        let mut row = 0;
        let rput = |read: &mut Sparse, r: usize, node: usize, v: Complex64| {
            if node >= 1 {
                read.push(r, node - 1, v);
            }
        };
        for b in outputs {
            match b {
                OutputBlock::Nodal(o) => {
                    for i in 0..np {
                        rput(&mut read, row, i, o.value);
                        if o.derivative != Complex64::new(0.0, 0.0) {
                            for (node, c) in nodal_derivative_stencil(i, m, h) {
                                rput(&mut read, row, node, o.derivative * c);
                            }
                        }
                        for &(ch, s) in &o.direct {
                            if ch >= inputs.len() {
                                return Err(Error::domain(format!("output refers to missing input channel {ch}")));
                            }
                            direct.push(row, ch * np + i, s);
                        }
                        out_w.push(w[i]);
                        row += 1;
                    }
                }
                OutputBlock::CellGradient(s) => {
                    for e in 0..m {
                        rput(&mut read, row, e + 1, Complex64::new(s / h, 0.0));
                        rput(&mut read, row, e, Complex64::new(-s / h, 0.0));
                        out_w.push(h);
                        row += 1;
                    }
                }
            }
        }
        let in_scale = (0..inputs.len()).flat_map(|_| w.iter().map(|x| 1.0 / x.sqrt())).collect();
        let out_scale = out_w.iter().map(|x| x.sqrt()).collect();
        Ok(Self { load, read, direct, lu, lu_adjoint, in_scale, out_scale, cells: m })
    }

    pub fn input_dim(&self) -> usize {
        self.in_scale.len()
    }

    pub fn output_dim(&self) -> usize {
        self.out_scale.len()
    }

    /// Unweighted map applied to nodal inputs.
    pub fn apply_raw(&self, x: &[Complex64]) -> Vec<Complex64> {
        let b = self.load.apply(x);
        let u = self.lu.solve(&b);
        let mut y = self.read.apply(&u);
        for (yi, di) in y.iter_mut().zip(self.direct.apply(x)) {
            *yi += di;
        }
        y
    }

    /// Weighted map `W_out^{1/2} S W_in^{-1/2}`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let xs: Vec<Complex64> = x.iter().zip(&self.in_scale).map(|(a, s)| a * s).collect();
        let mut y = self.apply_raw(&xs);
        for (yi, s) in y.iter_mut().zip(&self.out_scale) {
            *yi *= s;
        }
        y
    }

    pub fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let ys: Vec<Complex64> = y.iter().zip(&self.out_scale).map(|(a, s)| a * s).collect();
        let r = self.read.apply_adjoint(&ys);
        let u = self.lu_adjoint.solve(&r);
        let mut x = self.load.apply_adjoint(&u);
        for (xi, di) in x.iter_mut().zip(self.direct.apply_adjoint(&ys)) {
            *xi += di;
        }
        for (xi, s) in x.iter_mut().zip(&self.in_scale) {
            *xi *= s;
        }
        x
    }

    /// Dense weighted matrix, column by column.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.input_dim();
        let mut t = DMatrix::zeros(self.output_dim(), n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = Complex64::new(1.0, 0.0);
            for (i, v) in self.apply(&e).into_iter().enumerate() {
                t[(i, j)] = v;
            }
            e[j] = Complex64::new(0.0, 0.0);
        }
        t
    }

    /// Operator norm of the weighted map by block power iteration: each of
    /// the `trials` seeded random starts is one block column, and a
    /// Rayleigh-Ritz step on the block picks the dominant direction.
    pub fn norm_estimate(&self, trials: usize, seed: u64) -> f64 {
        let n = self.input_dim();
        let k = trials.max(1).min(n);
        let mut x = DMatrix::<Complex64>::zeros(n, k);
        for t in 0..k {
            let mut r = rng::stream(seed, t as u64);
            for (i, v) in rng::complex_vector(&mut r, n).into_iter().enumerate() {
                x[(i, t)] = v;
            }
        }
        x = x.qr().q();
        let mut est = 0.0_f64;
        for _ in 0..20_000 {
            let mut y = DMatrix::<Complex64>::zeros(n, k);
            for t in 0..k {
                let col: Vec<Complex64> = x.column(t).iter().copied().collect();
                let z = self.apply_adjoint(&self.apply(&col));
                for (i, v) in z.into_iter().enumerate() {
                    y[(i, t)] = v;
                }
            }
            let small = x.adjoint() * &y;
            let small = (&small + small.adjoint()) * Complex64::new(0.5, 0.0);
            let theta = nalgebra::SymmetricEigen::new(small).eigenvalues.iter().copied().fold(0.0_f64, f64::max);
            if y.norm() == 0.0 {
                return 0.0;
            }
            let converged = (theta - est).abs() <= 1e-13 * theta;
            est = theta;
            if converged {
                break;
            }
            x = y.qr().q();
        }
        est.max(0.0).sqrt()
    }
}
