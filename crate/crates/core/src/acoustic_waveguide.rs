//! Modal solver for the first-order acoustic system
//!
//! `i omega u + grad p = g`, `i omega p + div u = f`
//!
//! on a semi-infinite waveguide truncated at `z = L` by the exact
//! Dirichlet-to-Neumann (DtN) outflow condition, with `p = 0` at `z = 0`.
//!
//! Modal data use the Neumann eigenbasis `phi_n` normalized in L2:
//! `f_n = (f, phi_n)`, `gz_n = (g_z, phi_n)` and the transverse load
//! `gx_n = (g_x, grad phi_n)`, which satisfies `||g_x||^2 = sum |gx_n|^2 / lambda_n`
//! over modes with positive eigenvalue.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dpg_core::{BlockOperator, DiscreteOperator, Gram};
use crate::error::{Error, Result};
use crate::helmholtz_1d::{self, ComplexField1D, Grid1D, OneDProblem, RhsKind, TrialSpace};
use crate::mode_map::{InputKind, ModeMap, NodalOutput, OutputBlock};
use crate::transverse_spectrum::{
    classify_modes, BoundaryCondition, CrossSection, Eigenfunction, ModeClass, ModeClassification, Normalization,
    TransverseSpectrum,
};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Modal right-hand side, one field per retained mode and component.
#[derive(Clone, Debug)]
pub struct AcousticRhs {
    pub f: Vec<ComplexField1D>,
    pub gz: Vec<ComplexField1D>,
    pub gx: Vec<ComplexField1D>,
}

impl AcousticRhs {
    pub fn zeros(modes: usize, grid: Grid1D) -> Self {
        let z = ComplexField1D::zeros(grid);
        Self { f: vec![z.clone(); modes], gz: vec![z.clone(); modes], gx: vec![z; modes] }
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    /// `sqrt(||f||^2 + ||g||^2)`.
    pub fn norm(&self, eigenvalues: &[f64]) -> f64 {
        let mut s = 0.0;
        for n in 0..self.len() {
            s += self.f[n].l2_norm_sq() + self.gz[n].l2_norm_sq();
            if eigenvalues[n] > 0.0 {
                s += self.gx[n].l2_norm_sq() / eigenvalues[n];
            }
        }
        s.sqrt()
    }
}

/// Modal acoustic problem on `(0, L)`.
#[derive(Clone, Debug)]
pub struct AcousticProblem {
    pub spectrum: TransverseSpectrum,
    pub classification: ModeClassification,
    pub grid: Grid1D,
    pub rhs: AcousticRhs,
}

impl AcousticProblem {
    pub fn new(spectrum: TransverseSpectrum, omega: f64, grid: Grid1D, rhs: AcousticRhs) -> Result<Self> {
        if spectrum.is_empty() {
            return Err(Error::domain("no transverse modes retained"));
        }
        if spectrum.bc != BoundaryCondition::Neumann || spectrum.normalization != Normalization::UnitL2 {
            return Err(Error::domain("acoustic modes need the L2-normalized Neumann eigenbasis"));
        }
        let classification = classify_modes(&spectrum, omega, None)?;
        let n = spectrum.len();
        if rhs.f.len() != n || rhs.gz.len() != n || rhs.gx.len() != n {
            return Err(Error::domain(format!("right-hand side must have {n} modes per component")));
        }
        for field in rhs.f.iter().chain(&rhs.gz).chain(&rhs.gx) {
            if *field.grid() != grid {
                return Err(Error::domain("right-hand side lives on a different grid"));
            }
        }
        for n in 0..n {
            if spectrum.eigenvalues[n] <= 1e-10 && !rhs.gx[n].is_zero() {
                return Err(Error::domain(format!("mode {n} has no transverse gradient but gx is nonzero")));
            }
        }
        Ok(Self { spectrum, classification, grid, rhs })
    }

    pub fn omega(&self) -> f64 {
        self.classification.omega
    }

    pub fn modes(&self) -> usize {
        self.spectrum.len()
    }

    /// The 1D problem for mode `n`: load `i omega (f, v) + (gz, v') + (gx, v)`.
    pub fn mode_problem(&self, n: usize) -> Result<OneDProblem> {
        let w = self.omega();
        let mass = self.rhs.f[n].zip_with(&self.rhs.gx[n], |f, c| I * w * f + c);
        OneDProblem::new(self.grid, self.classification.kappas[n], TrialSpace::H1Left0)?
            .with_rhs(RhsKind::Mass, mass)?
            .with_rhs(RhsKind::Derivative, self.rhs.gz[n].clone())
    }
}

/// Modal pressure coefficients `p_n(z)`.
#[derive(Clone, Debug)]
pub struct AcousticSolution {
    pub modes: Vec<ComplexField1D>,
    pub kappas: Vec<Complex64>,
    pub eigenvalues: Vec<f64>,
}

impl AcousticSolution {
    /// `||p||^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.modes.iter().map(|p| p.l2_norm_sq()).sum()
    }

    /// `||dp/dz||^2` from the cellwise derivative.
    pub fn dz_norm_sq(&self) -> f64 {
        self.modes.iter().map(cell_gradient_sq).sum()
    }

    /// `||sqrt(a) grad_x p||^2 = sum lambda_n ||p_n||^2`.
    pub fn transverse_norm_sq(&self) -> f64 {
        self.modes.iter().zip(&self.eigenvalues).map(|(p, l)| l * p.l2_norm_sq()).sum()
    }

    /// `(||p_n||, ||grad p_n||)` for one mode.
    pub fn mode_norms(&self, n: usize) -> (f64, f64) {
        let p = &self.modes[n];
        (p.l2_norm(), (cell_gradient_sq(p) + self.eigenvalues[n] * p.l2_norm_sq()).sqrt())
    }

    /// Modal outflow traces `p_n(L)`.
    pub fn traces(&self) -> Vec<Complex64> {
        self.modes.iter().map(|p| *p.values().last().unwrap()).collect()
    }
}

fn cell_gradient_sq(p: &ComplexField1D) -> f64 {
    let h = p.grid().h();
    p.values().windows(2).map(|w| (w[1] - w[0]).norm_sqr() / h).sum()
}

pub fn solve_acoustic(problem: &AcousticProblem) -> Result<AcousticSolution> {
    let mut modes = Vec::with_capacity(problem.modes());
    for n in 0..problem.modes() {
        let p = problem.mode_problem(n).and_then(|pb| helmholtz_1d::solve_bvp(&pb)).map_err(|e| Error::in_mode(n, e))?;
        modes.push(p);
    }
    Ok(AcousticSolution {
        modes,
        kappas: problem.classification.kappas.clone(),
        eigenvalues: problem.spectrum.eigenvalues.clone(),
    })
}

/// Modal velocity: `uz_n = (u_z, phi_n)` and `ux_n = (u_x, grad phi_n)`.
#[derive(Clone, Debug)]
pub struct VelocityModes {
    pub uz: Vec<ComplexField1D>,
    pub ux: Vec<ComplexField1D>,
}

impl VelocityModes {
    pub fn l2_norm_sq(&self, eigenvalues: &[f64]) -> f64 {
        let mut s = 0.0;
        for n in 0..self.uz.len() {
            s += self.uz[n].l2_norm_sq();
            if eigenvalues[n] > 1e-10 {
                s += self.ux[n].l2_norm_sq() / eigenvalues[n];
            }
        }
        s
    }
}

/// Recover the velocity from `i omega u = g - grad p` mode by mode.
pub fn reconstruct_velocity(problem: &AcousticProblem, solution: &AcousticSolution) -> VelocityModes {
    let iw = I * problem.omega();
    let mut uz = Vec::with_capacity(problem.modes());
    let mut ux = Vec::with_capacity(problem.modes());
    for n in 0..problem.modes() {
        let p = &solution.modes[n];
        let dp = p.derivative();
        uz.push(problem.rhs.gz[n].zip_with(&dp, |g, d| (g - d) / iw));
        let l = solution.eigenvalues[n];
        if l > 1e-10 {
            ux.push(problem.rhs.gx[n].zip_with(p, |c, pv| (c - l * pv) / iw));
        } else {
            ux.push(ComplexField1D::zeros(*p.grid()));
        }
    }
    VelocityModes { uz, ux }
}

/// The modal DtN map `p_n(L) -> -kappa_n p_n(L)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DtnOperator {
    pub kappas: Vec<Complex64>,
}

impl DtnOperator {
    pub fn new(kappas: Vec<Complex64>) -> Self {
        Self { kappas }
    }

    pub fn from_classification(c: &ModeClassification) -> Self {
        Self::new(c.kappas.clone())
    }

    pub fn apply(&self, trace: &[Complex64]) -> Vec<Complex64> {
        trace.iter().zip(&self.kappas).map(|(p, k)| -k * p).collect()
    }

    /// `<DtN p, q> = -sum kappa_n p_n conj(q_n)`.
    pub fn pairing(&self, p: &[Complex64], q: &[Complex64]) -> Complex64 {
        p.iter().zip(q).zip(&self.kappas).map(|((a, b), k)| -k * a * b.conj()).sum()
    }
}

/// Which modes a stability estimate ranges over.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum ModeSelection {
    #[default]
    All,
    Propagating,
    Evanescent,
    Indices(Vec<usize>),
}

impl ModeSelection {
    pub fn select(&self, classes: &[ModeClass]) -> Result<Vec<usize>> {
        let n = classes.len();
        Ok(match self {
            ModeSelection::All => (0..n).collect(),
            ModeSelection::Propagating => (0..n).filter(|&i| classes[i] == ModeClass::Propagating).collect(),
            ModeSelection::Evanescent => (0..n).filter(|&i| classes[i] == ModeClass::Evanescent).collect(),
            ModeSelection::Indices(v) => {
                if let Some(&bad) = v.iter().find(|&&i| i >= n) {
                    return Err(Error::domain(format!("mode index {bad} out of range (have {n})")));
                }
                let mut v = v.clone();
                v.sort_unstable();
                v.dedup();
                v
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeStability {
    pub index: usize,
    pub class: ModeClass,
    pub kappa: Complex64,
    pub cells: usize,
    pub constant: f64,
}

/// Per-mode stability constants and their maximum. `constant` is `None` when
/// the selection is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub length: f64,
    pub constant: Option<f64>,
    pub modes: Vec<ModeStability>,
}

impl StabilityReport {
    pub fn from_modes(length: f64, modes: Vec<ModeStability>) -> Self {
        let constant = modes.iter().map(|m| m.constant).reduce(f64::max);
        Self { length, constant, modes }
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn class_max(&self, class: ModeClass) -> Option<f64> {
        self.modes.iter().filter(|m| m.class == class).map(|m| m.constant).reduce(f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct AcousticStabilityOptions {
    pub ppw: f64,
    pub seed: u64,
    pub selection: ModeSelection,
    pub cells: Option<usize>,
}

impl Default for AcousticStabilityOptions {
    fn default() -> Self {
        Self { ppw: 20.0, seed: crate::rng::DEFAULT_SEED, selection: ModeSelection::All, cells: None }
    }
}

impl AcousticStabilityOptions {
    fn grid(&self, length: f64, kappa: Complex64) -> Result<Grid1D> {
        match self.cells {
            Some(m) => Grid1D::new(length, m),
            None => Grid1D::resolved(length, kappa.norm(), self.ppw),
        }
    }
}

/// Weighted modal map `(f, gz, gx/sqrt(lambda)) -> (p, uz, ux/sqrt(lambda))`
/// of the forward (`adjoint = false`) or adjoint problem. Modes with zero
/// eigenvalue have no transverse channel.
pub fn acoustic_mode_map(kappa: Complex64, lambda: f64, omega: f64, grid: &Grid1D, adjoint: bool) -> Result<ModeMap> {
    let transverse = lambda > 1e-10;
    let sl = lambda.max(0.0).sqrt();
    let iw = I * omega;
    let (k, sign) = if adjoint { (kappa.conj(), -1.0) } else { (kappa, 1.0) };
    let mut inputs = vec![InputKind::Mass(sign * iw), InputKind::Derivative(real(sign))];
    // forward: uz = (gz - p')/(i w), ux = (gx - sqrt(l) p)/(i w)
    // adjoint: vz = -(fz + q')/(i w), vx = -(fx + sqrt(l) q)/(i w)
    let mut outputs = vec![
        OutputBlock::Nodal(NodalOutput::value(real(1.0))),
        OutputBlock::Nodal(NodalOutput::value(zero()).with_derivative(-1.0 / iw).with_direct(1, sign / iw)),
    ];
    if transverse {
        inputs.push(InputKind::Mass(real(sign * sl)));
        outputs.push(OutputBlock::Nodal(NodalOutput::value(-sl / iw).with_direct(2, sign / iw)));
    }
    ModeMap::new(grid, k, &inputs, &outputs)
}

fn stability_common(
    spectrum: &TransverseSpectrum,
    omega: f64,
    length: f64,
    trials: usize,
    opts: &AcousticStabilityOptions,
    adjoint: bool,
) -> Result<StabilityReport> {
    if trials < 1 {
        return Err(Error::domain("trials must be at least 1"));
    }
    if !(length > 0.0) {
        return Err(Error::domain(format!("length must be positive, got {length}")));
    }
    let cls = classify_modes(spectrum, omega, None)?;
    let selected = opts.selection.select(&cls.classes)?;
    let mut modes = Vec::with_capacity(selected.len());
    for n in selected {
        let kappa = cls.kappas[n];
        let run = || -> Result<ModeStability> {
            let grid = opts.grid(length, kappa)?;
            let map = acoustic_mode_map(kappa, spectrum.eigenvalues[n], omega, &grid, adjoint)?;
            let c = map.norm_estimate(trials, opts.seed ^ ((n as u64) << 32));
            Ok(ModeStability { index: n, class: cls.classes[n], kappa, cells: grid.cells(), constant: c })
        };
        modes.push(run().map_err(|e| Error::in_mode(n, e))?);
    }
    Ok(StabilityReport::from_modes(length, modes))
}

/// Estimate of `sup (||p|| + ||u||) / (||f|| + ||g||)` over the selected
/// modes, in the l2 combination of the component norms.
pub fn acoustic_stability_constant(
    spectrum: &TransverseSpectrum,
    omega: f64,
    length: f64,
    trials: usize,
    opts: &AcousticStabilityOptions,
) -> Result<StabilityReport> {
    stability_common(spectrum, omega, length, trials, opts, false)
}

/// Same estimate for the adjoint problem `-i omega v - grad q = f_vec`,
/// `-i omega q - div v = f`, with the conjugate DtN condition.
pub fn adjoint_stability_constant(
    spectrum: &TransverseSpectrum,
    omega: f64,
    length: f64,
    trials: usize,
    opts: &AcousticStabilityOptions,
) -> Result<StabilityReport> {
    stability_common(spectrum, omega, length, trials, opts, true)
}

/// Dense system matrix of one mode (constrained unknowns); the adjoint
/// variant uses `conj(kappa)`.
pub fn mode_system_matrix(kappa: Complex64, grid: &Grid1D, adjoint: bool) -> Result<DMatrix<Complex64>> {
    let k = if adjoint { kappa.conj() } else { kappa };
    let (a, _) = OneDProblem::new(*grid, k, TrialSpace::H1Left0)?.assemble();
    Ok(a.to_dense())
}

/// Relative L2 mismatch on `(0, L)` between the DtN-truncated solution and the
/// solution on `(0, factor L)` with zero-extended data.
pub fn dtn_transparency_check(problem: &AcousticProblem, extension_factor: f64) -> Result<f64> {
    let (mism, _) = transparency_by_mode(problem, extension_factor)?;
    Ok(mism)
}

/// Overall and per-mode relative mismatch.
pub fn transparency_by_mode(problem: &AcousticProblem, extension_factor: f64) -> Result<(f64, Vec<f64>)> {
    if !(extension_factor > 1.0 && extension_factor.is_finite()) {
        return Err(Error::domain(format!("extension factor must exceed 1, got {extension_factor}")));
    }
    let m = problem.grid.cells();
    let m_ext = (extension_factor * m as f64).round();
    if (m_ext - extension_factor * m as f64).abs() > 1e-9 * m_ext {
        return Err(Error::domain("extension factor times cell count must be an integer"));
    }
    let ext_grid = Grid1D::new(problem.grid.length() * m_ext / m as f64, m_ext as usize)?;
    let ext = |fs: &[ComplexField1D]| -> Result<Vec<ComplexField1D>> { fs.iter().map(|f| f.extend_by_zero(ext_grid)).collect() };
    let rhs_ext = AcousticRhs { f: ext(&problem.rhs.f)?, gz: ext(&problem.rhs.gz)?, gx: ext(&problem.rhs.gx)? };
    let big = AcousticProblem::new(problem.spectrum.clone(), problem.omega(), ext_grid, rhs_ext)?;
    let short = solve_acoustic(problem)?;
    let long = solve_acoustic(&big)?;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut per_mode = Vec::with_capacity(problem.modes());
    for n in 0..problem.modes() {
        let r = long.modes[n].restrict(problem.grid)?;
        let d = short.modes[n].zip_with(&r, |a, b| a - b).l2_norm_sq();
        let rn = r.l2_norm_sq();
        num += d;
        den += rn;
        per_mode.push(if rn > 0.0 { (d / rn).sqrt() } else { d.sqrt() });
    }
    let total = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    Ok((total, per_mode))
}

/// First-order box-scheme discretization of one mode as a [`DiscreteOperator`].
///
/// Trial unknowns: `p` at nodes 1..=M, `u_z` at nodes 0..M-1 (the last value
/// is eliminated by the outflow condition `i omega u_z(L) = kappa p(L)`) and
/// the scaled transverse velocity on cells. Three equations per cell are
/// collocated at midpoints. Both Grams are lumped L2 masses.
pub fn modal_first_order_operator(kappa: Complex64, lambda: f64, omega: f64, grid: &Grid1D) -> Result<DiscreteOperator> {
    if !(omega > 0.0) {
        return Err(Error::domain("omega must be positive"));
    }
    let m = grid.cells();
    let h = grid.h();
    let transverse = lambda > 1e-10;
    let sl = lambda.max(0.0).sqrt();
    let iw = I * omega;
    let nb = if transverse { 3 } else { 2 };
    let n = nb * m;
    let ip = |k: usize| k - 1; // p_k, k = 1..=M
    let iu = |k: usize| m + k; // u_k, k = 0..M-1
    let is = |e: usize| 2 * m + e;
    let bc = kappa / iw; // u_M = bc * p_M
    let mut a = DMatrix::<Complex64>::zeros(n, n);
    let add_p = |a: &mut DMatrix<Complex64>, row: usize, k: usize, v: Complex64| {
        if k >= 1 {
            a[(row, ip(k))] += v;
        }
    };
    let add_u = |a: &mut DMatrix<Complex64>, row: usize, k: usize, v: Complex64| {
        if k < m {
            a[(row, iu(k))] += v;
        } else {
            a[(row, ip(m))] += v * bc;
        }
    };
    for e in 0..m {
        // i w u_avg + p' = gz
        let r = e;
        add_u(&mut a, r, e, 0.5 * iw);
        add_u(&mut a, r, e + 1, 0.5 * iw);
        add_p(&mut a, r, e + 1, real(1.0 / h));
        add_p(&mut a, r, e, real(-1.0 / h));
        // i w p_avg + u' - sqrt(lambda) s = f
        let r = m + e;
        add_p(&mut a, r, e, 0.5 * iw);
        add_p(&mut a, r, e + 1, 0.5 * iw);
        add_u(&mut a, r, e + 1, real(1.0 / h));
        add_u(&mut a, r, e, real(-1.0 / h));
        if transverse {
            a[(r, is(e))] += real(-sl);
            // i w s + sqrt(lambda) p_avg = gx
            let r = 2 * m + e;
            a[(r, is(e))] += iw;
            add_p(&mut a, r, e, real(0.5 * sl));
            add_p(&mut a, r, e + 1, real(0.5 * sl));
        }
    }
    let mut trial_w = vec![h; n];
    trial_w[ip(m)] = 0.5 * h * (1.0 + bc.norm_sqr());
    trial_w[iu(0)] = 0.5 * h;
    let test_w = vec![h; n];
    let nodes = grid.nodes();
    let mids = grid.midpoints();
    let mut trial_pos = Vec::with_capacity(n);
    trial_pos.extend_from_slice(&nodes[1..=m]);
    trial_pos.extend_from_slice(&nodes[0..m]);
    if transverse {
        trial_pos.extend_from_slice(&mids);
    }
    let test_pos: Vec<f64> = (0..nb).flat_map(|_| mids.iter().copied()).collect();
    DiscreteOperator::new(a, Gram::Diagonal(trial_w), Gram::Diagonal(test_w))?.with_positions(trial_pos, test_pos)
}

/// Block operator over the selected modes, each on its own resolved grid.
pub fn acoustic_block_operator(
    spectrum: &TransverseSpectrum,
    omega: f64,
    length: f64,
    ppw: f64,
    selection: &ModeSelection,
) -> Result<BlockOperator> {
    let cls = classify_modes(spectrum, omega, None)?;
    let sel = selection.select(&cls.classes)?;
    if sel.is_empty() {
        return Err(Error::domain("mode selection is empty"));
    }
    let mut blocks = Vec::with_capacity(sel.len());
    for n in sel {
        let grid = Grid1D::resolved(length, cls.kappas[n].norm(), ppw)?;
        blocks.push(
            modal_first_order_operator(cls.kappas[n], spectrum.eigenvalues[n], omega, &grid).map_err(|e| Error::in_mode(n, e))?,
        );
    }
    BlockOperator::new(blocks)
}

/// Modal coefficients `(f(., z), phi_n)` of a function on an interval
/// cross-section, by the trapezoid rule on the eigenfunction grid.
pub fn project_onto_modes(
    spectrum: &TransverseSpectrum,
    grid: &Grid1D,
    f: impl Fn(f64, f64) -> Complex64,
) -> Result<Vec<ComplexField1D>> {
    if !matches!(spectrum.cross_section, CrossSection::Interval(_)) {
        return Err(Error::Unsupported("projection is implemented for interval cross-sections".into()));
    }
    let mut out = Vec::with_capacity(spectrum.len());
    for phi in &spectrum.eigenfunctions {
        let Eigenfunction::Grid { nodes, values } = phi else {
            return Err(Error::Unsupported("projection needs grid eigenfunctions".into()));
        };
        out.push(ComplexField1D::from_fn(*grid, |z| {
            let mut s = zero();
            for i in 0..nodes.len() - 1 {
                let hx = nodes[i + 1] - nodes[i];
                s += 0.5 * hx * (f(nodes[i], z) * values[i] + f(nodes[i + 1], z) * values[i + 1]);
            }
            s
        }));
    }
    Ok(out)
}
