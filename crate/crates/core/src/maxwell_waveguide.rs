//! Modal solver for the time-harmonic Maxwell system in a semi-infinite
//! waveguide, split into two decoupled families of 1D problems.
//!
//! Tangential fields are expanded in gradients of Neumann eigenfunctions
//! `phi_i` (eigenvalues `mu_i`) and rotated gradients of Dirichlet
//! eigenfunctions `psi_j` (eigenvalues `lambda_j`), both with unit gradient
//! norm. The alpha family carries `(alpha, delta, zeta)` with wavenumber
//! `mu~ = sqrt(mu - omega^2)`; the beta family carries `(beta, eta, gamma)`
//! with `lambda~ = sqrt(lambda - omega^2)`. Tangential components vanish at
//! `z = 0` and the exact outflow condition closes each family at `z = L`.

use num_complex::Complex64;

use crate::acoustic_waveguide::{ModeSelection, ModeStability, StabilityReport};
use crate::error::{Error, Result};
use crate::helmholtz_1d::{self, ComplexField1D, Grid1D, OneDProblem, RhsKind, TrialSpace};
use crate::mode_map::{InputKind, ModeMap, NodalOutput, OutputBlock};
use crate::transverse_spectrum::{
    classify_modes, disk_spectrum, rectangle_spectrum, BoundaryCondition, CrossSection, ModeClassification,
    Normalization, TransverseSpectrum,
};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Both transverse families with their wavenumbers.
#[derive(Clone, Debug)]
pub struct MaxwellSpectra {
    pub omega: f64,
    /// Neumann family without the constant mode.
    pub neumann: TransverseSpectrum,
    pub dirichlet: TransverseSpectrum,
    /// `mu~_i`.
    pub neumann_modes: ModeClassification,
    /// `lambda~_j`.
    pub dirichlet_modes: ModeClassification,
}

impl MaxwellSpectra {
    pub fn mu(&self, i: usize) -> f64 {
        self.neumann.eigenvalues[i]
    }

    pub fn lambda(&self, j: usize) -> f64 {
        self.dirichlet.eigenvalues[j]
    }

    pub fn mu_tilde(&self, i: usize) -> Complex64 {
        self.neumann_modes.kappas[i]
    }

    pub fn lambda_tilde(&self, j: usize) -> Complex64 {
        self.dirichlet_modes.kappas[j]
    }
}

/// Build `n_per_family` modes of each family, gradient-normalized.
pub fn build_maxwell_spectra(cross_section: &CrossSection, omega: f64, n_per_family: usize) -> Result<MaxwellSpectra> {
    if n_per_family == 0 {
        return Err(Error::domain("at least one mode per family must be requested"));
    }
    let (neu, dir) = match *cross_section {
        CrossSection::Rectangle { width, height } => (
            rectangle_spectrum(width, height, BoundaryCondition::Neumann, n_per_family + 1, Normalization::UnitL2)?,
            rectangle_spectrum(width, height, BoundaryCondition::Dirichlet, n_per_family, Normalization::UnitL2)?,
        ),
        CrossSection::Disk { radius } => (
            disk_spectrum(radius, BoundaryCondition::Neumann, n_per_family + 1, Normalization::UnitL2)?,
            disk_spectrum(radius, BoundaryCondition::Dirichlet, n_per_family, Normalization::UnitL2)?,
        ),
        CrossSection::Interval(_) => {
            return Err(Error::Unsupported("the Maxwell waveguide needs a two-dimensional cross-section".into()))
        }
    };
    let neumann = neu.without_zero_modes().truncated(n_per_family).with_normalization(Normalization::UnitGradient)?;
    let dirichlet = dir.with_normalization(Normalization::UnitGradient)?;
    let neumann_modes = classify_modes(&neumann, omega, None)?;
    let dirichlet_modes = classify_modes(&dirichlet, omega, None).map_err(|e| match e {
        Error::DegenerateMode { index, magnitude, tol } => Error::DegenerateMode { index: index + neumann.len(), magnitude, tol },
        e => e,
    })?;
    Ok(MaxwellSpectra { omega, neumann, dirichlet, neumann_modes, dirichlet_modes })
}

/// Modal data: `f1, f3, g1` per Neumann mode and `f2, g2, g3` per Dirichlet mode.
#[derive(Clone, Debug)]
pub struct MaxwellRhs {
    pub f1: Vec<ComplexField1D>,
    pub f2: Vec<ComplexField1D>,
    pub f3: Vec<ComplexField1D>,
    pub g1: Vec<ComplexField1D>,
    pub g2: Vec<ComplexField1D>,
    pub g3: Vec<ComplexField1D>,
}

impl MaxwellRhs {
    pub fn zeros(spectra: &MaxwellSpectra, grid: Grid1D) -> Self {
        let z = ComplexField1D::zeros(grid);
        let (a, b) = (spectra.neumann.len(), spectra.dirichlet.len());
        Self {
            f1: vec![z.clone(); a],
            f3: vec![z.clone(); a],
            g1: vec![z.clone(); a],
            f2: vec![z.clone(); b],
            g2: vec![z.clone(); b],
            g3: vec![z; b],
        }
    }

    fn check(&self, spectra: &MaxwellSpectra, grid: &Grid1D) -> Result<()> {
        let (a, b) = (spectra.neumann.len(), spectra.dirichlet.len());
        if self.f1.len() != a || self.f3.len() != a || self.g1.len() != a {
            return Err(Error::domain(format!("f1, f3, g1 need {a} modes")));
        }
        if self.f2.len() != b || self.g2.len() != b || self.g3.len() != b {
            return Err(Error::domain(format!("f2, g2, g3 need {b} modes")));
        }
        let all = [&self.f1, &self.f2, &self.f3, &self.g1, &self.g2, &self.g3];
        if all.iter().flat_map(|v| v.iter()).any(|f| f.grid() != grid) {
            return Err(Error::domain("right-hand side lives on a different grid"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct AlphaFamily {
    pub alpha: Vec<ComplexField1D>,
    pub delta: Vec<ComplexField1D>,
    pub zeta: Vec<ComplexField1D>,
}

#[derive(Clone, Debug)]
pub struct BetaFamily {
    pub beta: Vec<ComplexField1D>,
    pub eta: Vec<ComplexField1D>,
    pub gamma: Vec<ComplexField1D>,
}

#[derive(Clone, Debug)]
pub struct MaxwellSolution {
    pub alpha: AlphaFamily,
    pub beta: BetaFamily,
}

pub fn solve_alpha_subsystem(spectra: &MaxwellSpectra, rhs: &MaxwellRhs, grid: &Grid1D) -> Result<AlphaFamily> {
    rhs.check(spectra, grid)?;
    let iw = I * spectra.omega;
    let mut out = AlphaFamily { alpha: vec![], delta: vec![], zeta: vec![] };
    for i in 0..spectra.neumann.len() {
        let mu = spectra.mu(i);
        let solve = || -> Result<ComplexField1D> {
            let mass = rhs.g1[i].zip_with(&rhs.f3[i], |g, f| iw * g + mu * f);
            let pb = OneDProblem::new(*grid, spectra.mu_tilde(i), TrialSpace::H1Left0)?
                .with_rhs(RhsKind::Derivative, rhs.f1[i].clone())?
                .with_rhs(RhsKind::Mass, mass)?;
            helmholtz_1d::solve_bvp(&pb)
        };
        let a = solve().map_err(|e| Error::in_mode(i, e))?;
        out.delta.push(a.derivative().zip_with(&rhs.f1[i], |d, f| (d - f) / iw));
        out.zeta.push(a.zip_with(&rhs.f3[i], |x, f| mu * (x - f) / iw));
        out.alpha.push(a);
    }
    Ok(out)
}

pub fn solve_beta_subsystem(spectra: &MaxwellSpectra, rhs: &MaxwellRhs, grid: &Grid1D) -> Result<BetaFamily> {
    rhs.check(spectra, grid)?;
    let iw = I * spectra.omega;
    let offset = spectra.neumann.len();
    let mut out = BetaFamily { beta: vec![], eta: vec![], gamma: vec![] };
    for j in 0..spectra.dirichlet.len() {
        let lam = spectra.lambda(j);
        let lt = spectra.lambda_tilde(j);
        let lt2 = lt * lt;
        let solve = || -> Result<ComplexField1D> {
            let der = rhs.f2[j].zip_with(&rhs.g3[j], |f, g| -f + lam / iw * g);
            let mass = rhs.g2[j].scaled(lt2 / iw);
            let pb = OneDProblem::new(*grid, lt, TrialSpace::H1Left0)?
                .with_rhs(RhsKind::Derivative, der)?
                .with_rhs(RhsKind::Mass, mass)?;
            helmholtz_1d::solve_bvp(&pb)
        };
        let b = solve().map_err(|e| Error::in_mode(offset + j, e))?;
        let db = b.derivative();
        let eta = ComplexField1D::new(
            *grid,
            (0..grid.nodes_len())
                .map(|k| (-iw * db.values()[k] - iw * rhs.f2[j].values()[k] + lam * rhs.g3[j].values()[k]) / lt2)
                .collect(),
        )?;
        out.gamma.push(rhs.g3[j].zip_with(&eta, |g, e| lam * (g - e) / iw));
        out.eta.push(eta);
        out.beta.push(b);
    }
    Ok(out)
}

pub fn solve_maxwell(spectra: &MaxwellSpectra, rhs: &MaxwellRhs, grid: &Grid1D) -> Result<MaxwellSolution> {
    Ok(MaxwellSolution {
        alpha: solve_alpha_subsystem(spectra, rhs, grid)?,
        beta: solve_beta_subsystem(spectra, rhs, grid)?,
    })
}

/// Squared field norms and their modal contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxwellNorms {
    pub e_sq: f64,
    pub h_sq: f64,
    /// `(E, H)` contributions of each Neumann mode.
    pub neumann: Vec<(f64, f64)>,
    /// `(E, H)` contributions of each Dirichlet mode.
    pub dirichlet: Vec<(f64, f64)>,
}

pub fn maxwell_field_norms(solution: &MaxwellSolution, spectra: &MaxwellSpectra) -> MaxwellNorms {
    let a = &solution.alpha;
    let b = &solution.beta;
    let neumann: Vec<(f64, f64)> = (0..a.alpha.len())
        .map(|i| (a.alpha[i].l2_norm_sq(), a.delta[i].l2_norm_sq() + a.zeta[i].l2_norm_sq() / spectra.mu(i)))
        .collect();
    let dirichlet: Vec<(f64, f64)> = (0..b.beta.len())
        .map(|j| (b.beta[j].l2_norm_sq() + b.gamma[j].l2_norm_sq() / spectra.lambda(j), b.eta[j].l2_norm_sq()))
        .collect();
    let e_sq = neumann.iter().chain(&dirichlet).map(|x| x.0).sum();
    let h_sq = neumann.iter().chain(&dirichlet).map(|x| x.1).sum();
    MaxwellNorms { e_sq, h_sq, neumann, dirichlet }
}

/// Sesquilinear outflow pairing of tangential traces `(alpha_E, beta_E)` and
/// `(alpha_G, beta_G)`:
/// `sum mu~/(i w) a_E conj(a_G) + sum (i w)/lambda~ b_E conj(b_G)`.
pub fn dtnmw_pairing(
    spectra: &MaxwellSpectra,
    alpha_e: &[Complex64],
    beta_e: &[Complex64],
    alpha_g: &[Complex64],
    beta_g: &[Complex64],
) -> Result<Complex64> {
    let (a, b) = (spectra.neumann.len(), spectra.dirichlet.len());
    if alpha_e.len() != a || alpha_g.len() != a || beta_e.len() != b || beta_g.len() != b {
        return Err(Error::domain("trace coefficient lengths do not match the spectra"));
    }
    let iw = I * spectra.omega;
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..a {
        s += spectra.mu_tilde(i) / iw * alpha_e[i] * alpha_g[i].conj();
    }
    for j in 0..b {
        s += iw / spectra.lambda_tilde(j) * beta_e[j] * beta_g[j].conj();
    }
    Ok(s)
}

/// Weighted map `(f1, g1, sqrt(mu) f3) -> (alpha, delta, zeta / sqrt(mu))` of
/// one Neumann mode.
pub fn alpha_mode_map(mu_tilde: Complex64, mu: f64, omega: f64, grid: &Grid1D) -> Result<ModeMap> {
    let iw = I * omega;
    let sm = mu.sqrt();
    ModeMap::new(
        grid,
        mu_tilde,
        &[InputKind::Derivative(real(1.0)), InputKind::Mass(iw), InputKind::Mass(real(sm))],
        &[
            OutputBlock::Nodal(NodalOutput::value(real(1.0))),
            OutputBlock::Nodal(NodalOutput::value(real(0.0)).with_derivative(1.0 / iw).with_direct(0, -1.0 / iw)),
            OutputBlock::Nodal(NodalOutput::value(sm / iw).with_direct(2, -1.0 / iw)),
        ],
    )
}

/// Weighted map `(f2, g2, sqrt(lambda) g3) -> (beta, eta, gamma / sqrt(lambda))`
/// of one Dirichlet mode.
pub fn beta_mode_map(lambda_tilde: Complex64, lambda: f64, omega: f64, grid: &Grid1D) -> Result<ModeMap> {
    let iw = I * omega;
    let sl = lambda.sqrt();
    let lt2 = lambda_tilde * lambda_tilde;
    // eta = (-i w beta' - i w f2 + sqrt(l) g3h) / lt2, gamma_h = (g3h - sqrt(l) eta) / (i w)
    let eta = NodalOutput::value(real(0.0)).with_derivative(-iw / lt2).with_direct(0, -iw / lt2).with_direct(2, sl / lt2);
    let gamma = NodalOutput::value(real(0.0))
        .with_derivative(sl / lt2)
        .with_direct(0, sl / lt2)
        .with_direct(2, 1.0 / iw - lambda / (iw * lt2));
    ModeMap::new(
        grid,
        lambda_tilde,
        &[InputKind::Derivative(real(-1.0)), InputKind::Mass(lt2 / iw), InputKind::Derivative(sl / iw)],
        &[OutputBlock::Nodal(NodalOutput::value(real(1.0))), OutputBlock::Nodal(eta), OutputBlock::Nodal(gamma)],
    )
}

#[derive(Clone, Debug)]
pub struct MaxwellStabilityOptions {
    pub ppw: f64,
    pub seed: u64,
    pub neumann_selection: ModeSelection,
    pub dirichlet_selection: ModeSelection,
    pub cells: Option<usize>,
}

impl Default for MaxwellStabilityOptions {
    fn default() -> Self {
        Self {
            ppw: 20.0,
            seed: crate::rng::DEFAULT_SEED,
            neumann_selection: ModeSelection::All,
            dirichlet_selection: ModeSelection::All,
            cells: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxwellStabilityReport {
    pub alpha_family: StabilityReport,
    pub beta_family: StabilityReport,
    pub constant: Option<f64>,
}

/// Estimate of `sup (||E|| + ||H||) / (||f|| + ||g||)`, per family and overall.
pub fn maxwell_stability_constant(
    spectra: &MaxwellSpectra,
    length: f64,
    trials: usize,
    opts: &MaxwellStabilityOptions,
) -> Result<MaxwellStabilityReport> {
    if trials < 1 {
        return Err(Error::domain("trials must be at least 1"));
    }
    if !(length > 0.0) {
        return Err(Error::domain(format!("length must be positive, got {length}")));
    }
    let grid_for = |k: Complex64| match opts.cells {
        Some(m) => Grid1D::new(length, m),
        None => Grid1D::resolved(length, k.norm(), opts.ppw),
    };
    let mut alpha = Vec::new();
    for i in opts.neumann_selection.select(&spectra.neumann_modes.classes)? {
        let k = spectra.mu_tilde(i);
        let run = || -> Result<ModeStability> {
            let grid = grid_for(k)?;
            let c = alpha_mode_map(k, spectra.mu(i), spectra.omega, &grid)?.norm_estimate(trials, opts.seed ^ ((i as u64) << 32));
            Ok(ModeStability { index: i, class: spectra.neumann_modes.classes[i], kappa: k, cells: grid.cells(), constant: c })
        };
        alpha.push(run().map_err(|e| Error::in_mode(i, e))?);
    }
    let off = spectra.neumann.len();
    let mut beta = Vec::new();
    for j in opts.dirichlet_selection.select(&spectra.dirichlet_modes.classes)? {
        let k = spectra.lambda_tilde(j);
        let run = || -> Result<ModeStability> {
            let grid = grid_for(k)?;
            let c = beta_mode_map(k, spectra.lambda(j), spectra.omega, &grid)?
                .norm_estimate(trials, opts.seed ^ (((off + j) as u64) << 32));
            Ok(ModeStability { index: j, class: spectra.dirichlet_modes.classes[j], kappa: k, cells: grid.cells(), constant: c })
        };
        beta.push(run().map_err(|e| Error::in_mode(off + j, e))?);
    }
    let alpha_family = StabilityReport::from_modes(length, alpha);
    let beta_family = StabilityReport::from_modes(length, beta);
    let constant = match (alpha_family.constant, beta_family.constant) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    Ok(MaxwellStabilityReport { alpha_family, beta_family, constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn spectra_exclude_constant_mode() {
        let cs = CrossSection::rectangle(1.0, 0.5).unwrap();
        let s = build_maxwell_spectra(&cs, 7.5, 4).unwrap();
        assert!((s.mu(0) - PI * PI).abs() < 1e-12);
        assert!((s.lambda(0) - 5.0 * PI * PI).abs() < 1e-11);
        assert_eq!(s.neumann.normalization, Normalization::UnitGradient);
    }

    #[test]
    fn omega_at_cutoff_is_degenerate() {
        let cs = CrossSection::rectangle(1.0, 0.5).unwrap();
        assert!(matches!(build_maxwell_spectra(&cs, PI, 3), Err(Error::DegenerateMode { index: 0, .. })));
    }

    #[test]
    fn gamma_only_field_norm() {
        let cs = CrossSection::rectangle(1.0, 0.5).unwrap();
        let s = build_maxwell_spectra(&cs, 2.0, 1).unwrap();
        let g = Grid1D::new(3.0, 30).unwrap();
        let z = ComplexField1D::zeros(g);
        let sol = MaxwellSolution {
            alpha: AlphaFamily { alpha: vec![z.clone()], delta: vec![z.clone()], zeta: vec![z.clone()] },
            beta: BetaFamily { beta: vec![z.clone()], eta: vec![z], gamma: vec![ComplexField1D::from_fn(g, |_| real(1.0))] },
        };
        let n = maxwell_field_norms(&sol, &s);
        assert!((n.e_sq - 3.0 / (5.0 * PI * PI)).abs() < 1e-14);
        assert_eq!(n.h_sq, 0.0);
    }
}
