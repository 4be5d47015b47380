//! Experiment runners behind the command-line tool: configuration, sweeps and
//! CSV reports.

pub mod config;

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::acoustic_waveguide::{self as ac, AcousticProblem, AcousticRhs, ModeSelection};
use crate::dpg_core::InfSupReport;
use crate::error::{Error, Result};
use crate::helmholtz_1d::{self, ComplexField1D, Grid1D, TrialSpace};
use crate::maxwell_waveguide::{self as mw, MaxwellRhs};
use crate::rng;
use crate::transverse_spectrum::{
    classify_modes, disk_spectrum, rectangle_spectrum, sturm_liouville_spectrum, BoundaryCondition, CrossSection,
    Normalization, TransverseSpectrum,
};

pub use config::{parse_config, BetaScaling, ConfigError, ConfigErrors, ExperimentConfig, ExperimentKind, RhsProfile};

pub const TOOL_VERSION: &str = concat!("waveguide-modal ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            Cell::Text(_) => None,
        }
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Result table of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Largest violation of the inequality the experiment checks, if any.
    pub max_violation: Option<f64>,
    pub config_hash: String,
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("# {TOOL_VERSION}\n"));
        s.push_str(&format!("# experiment {}\n", self.experiment.name()));
        s.push_str(&format!("# config-sha256 {}\n", self.config_hash));
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::render).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    pub fn summary(&self, output: &Path) -> String {
        let v = self.max_violation.map(format_float).unwrap_or_else(|| "n/a".into());
        format!("experiment={} rows={} max_violation={} output={}", self.experiment.name(), self.rows.len(), v, output.display())
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }
}

/// Write `contents` through a temporary file in the target directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let kind = cfg.experiment.ok_or_else(|| Error::domain("no experiment selected"))?;
    let (columns, rows, max_violation) = match kind {
        ExperimentKind::Spectrum => run_spectrum(cfg)?,
        ExperimentKind::Acoustic => run_acoustic(cfg)?,
        ExperimentKind::Maxwell => run_maxwell(cfg)?,
        ExperimentKind::InfSup1d => run_infsup_1d(cfg)?,
        ExperimentKind::UwSweep => run_uw_sweep(cfg)?,
        ExperimentKind::Transparency => run_transparency(cfg)?,
    };
    Ok(Report { experiment: kind, columns, rows, max_violation, config_hash: cfg.hash() })
}

type Table = (Vec<&'static str>, Vec<Vec<Cell>>, Option<f64>);

fn spectrum_for(cfg: &ExperimentConfig, bc: BoundaryCondition, norm: Normalization) -> Result<TransverseSpectrum> {
    match &cfg.cross_section {
        CrossSection::Rectangle { width, height } => rectangle_spectrum(*width, *height, bc, cfg.modes, norm),
        CrossSection::Disk { radius } => disk_spectrum(*radius, bc, cfg.modes, norm),
        CrossSection::Interval(a) => sturm_liouville_spectrum(a, bc, cfg.grid_points, cfg.modes, norm),
    }
}

fn run_spectrum(cfg: &ExperimentConfig) -> Result<Table> {
    let s = spectrum_for(cfg, cfg.bc, Normalization::UnitL2)?;
    let mult = s.multiplicities();
    let rows = (0..s.len())
        .map(|i| {
            vec![Cell::Int(i as i64 + 1), Cell::Float(s.eigenvalues[i]), Cell::Int(mult[i] as i64), Cell::Text(cfg.bc.name().into())]
        })
        .collect();
    Ok((vec!["index", "eigenvalue", "multiplicity", "bc"], rows, None))
}

/// Load profile on the grid. The bump is supported in `(0, support)`.
fn profile(cfg: &ExperimentConfig, grid: Grid1D, support: f64, stream: u64) -> ComplexField1D {
    match cfg.rhs {
        RhsProfile::Constant => ComplexField1D::from_fn(grid, |_| Complex64::new(1.0, 0.0)),
        RhsProfile::Bump => ComplexField1D::from_fn(grid, |z| Complex64::new(bump(z, support), 0.0)),
        RhsProfile::Random => {
            let mut r = rng::stream(cfg.seed, stream);
            let mut v = rng::complex_vector(&mut r, grid.nodes_len());
            v[0] = Complex64::new(0.0, 0.0);
            ComplexField1D::new(grid, v).expect("sized to the grid")
        }
    }
}

/// Smooth compactly supported bump on `(0, support)` with unit peak.
pub fn bump(z: f64, support: f64) -> f64 {
    let s = 2.0 * z / support - 1.0;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

fn acoustic_setup(cfg: &ExperimentConfig, length: f64, support: f64) -> Result<AcousticProblem> {
    let spec = spectrum_for(cfg, BoundaryCondition::Neumann, Normalization::UnitL2)?;
    let cls = classify_modes(&spec, cfg.omega, None)?;
    let kmax = cls.kappas.iter().map(|k| k.norm()).fold(0.0, f64::max);
    let grid = match cfg.cells {
        Some(m) => Grid1D::new(length, m)?,
        None => Grid1D::resolved(length, kmax, cfg.ppw)?,
    };
    let mut rhs = AcousticRhs::zeros(spec.len(), grid);
    for n in cfg.rhs_modes.select(&cls.classes)? {
        rhs.f[n] = profile(cfg, grid, support, n as u64);
    }
    AcousticProblem::new(spec, cfg.omega, grid, rhs)
}

fn first_length(cfg: &ExperimentConfig) -> Result<f64> {
    cfg.lengths.first().copied().ok_or_else(|| Error::domain("no length given"))
}

fn run_acoustic(cfg: &ExperimentConfig) -> Result<Table> {
    let length = first_length(cfg)?;
    let problem = acoustic_setup(cfg, length, 0.5 * length)?;
    let sol = ac::solve_acoustic(&problem)?;
    let total = sol.l2_norm_sq();
    let rows = (0..problem.modes())
        .map(|n| {
            let (np, ndp) = sol.mode_norms(n);
            let k = sol.kappas[n];
            vec![
                Cell::Int(n as i64 + 1),
                Cell::Float(k.re),
                Cell::Float(k.im),
                Cell::Text(problem.classification.classes[n].name().into()),
                Cell::Float(np),
                Cell::Float(ndp),
                Cell::Float(if total > 0.0 { np * np / total } else { 0.0 }),
            ]
        })
        .collect();
    Ok((vec!["mode", "kappa_re", "kappa_im", "class", "norm_p", "norm_dp", "contribution"], rows, None))
}

fn run_maxwell(cfg: &ExperimentConfig) -> Result<Table> {
    let length = first_length(cfg)?;
    let spectra = mw::build_maxwell_spectra(&cfg.cross_section, cfg.omega, cfg.modes)?;
    let kmax = spectra
        .neumann_modes
        .kappas
        .iter()
        .chain(&spectra.dirichlet_modes.kappas)
        .map(|k| k.norm())
        .fold(0.0, f64::max);
    let grid = match cfg.cells {
        Some(m) => Grid1D::new(length, m)?,
        None => Grid1D::resolved(length, kmax, cfg.ppw)?,
    };
    let mut rhs = MaxwellRhs::zeros(&spectra, grid);
    let off = spectra.neumann.len() as u64;
    for i in cfg.rhs_modes.select(&spectra.neumann_modes.classes)? {
        rhs.g1[i] = profile(cfg, grid, 0.5 * length, i as u64);
    }
    for j in cfg.rhs_modes.select(&spectra.dirichlet_modes.classes)? {
        rhs.g2[j] = profile(cfg, grid, 0.5 * length, off + j as u64);
    }
    let sol = mw::solve_maxwell(&spectra, &rhs, &grid)?;
    let norms = mw::maxwell_field_norms(&sol, &spectra);
    let frac = |x: f64, t: f64| if t > 0.0 { x / t } else { 0.0 };
    let mut rows = Vec::new();
    for (family, spec, cls, contrib) in [
        ("neumann", &spectra.neumann, &spectra.neumann_modes, &norms.neumann),
        ("dirichlet", &spectra.dirichlet, &spectra.dirichlet_modes, &norms.dirichlet),
    ] {
        for n in 0..spec.len() {
            rows.push(vec![
                Cell::Text(family.into()),
                Cell::Int(n as i64 + 1),
                Cell::Float(spec.eigenvalues[n]),
                Cell::Float(cls.kappas[n].re),
                Cell::Float(cls.kappas[n].im),
                Cell::Text(cls.classes[n].name().into()),
                Cell::Float(frac(contrib[n].0, norms.e_sq)),
                Cell::Float(frac(contrib[n].1, norms.h_sq)),
            ]);
        }
    }
    Ok((vec!["family", "index", "eigenvalue", "tilde_re", "tilde_im", "class", "norm_contrib_E", "norm_contrib_H"], rows, None))
}

fn run_infsup_1d(cfg: &ExperimentConfig) -> Result<Table> {
    let length = first_length(cfg)?;
    let k = cfg.kappa;
    let grid = match cfg.cells {
        Some(m) => Grid1D::new(length, m)?,
        None => Grid1D::resolved(length, k.norm(), cfg.ppw)?,
    };
    let gamma = helmholtz_1d::inf_sup_1d(&grid, k, TrialSpace::H1Left0)?;
    let bound = k.re / k.norm();
    let row = vec![
        Cell::Float(k.re),
        Cell::Float(k.im),
        Cell::Float(length),
        Cell::Int(grid.cells() as i64),
        Cell::Float(gamma),
        Cell::Float(bound),
    ];
    Ok((
        vec!["kappa_re", "kappa_im", "length", "cells", "gamma", "coercivity_bound"],
        vec![row],
        Some((bound - gamma).max(0.0)),
    ))
}

fn run_uw_sweep(cfg: &ExperimentConfig) -> Result<Table> {
    let spec = spectrum_for(cfg, BoundaryCondition::Neumann, Normalization::UnitL2)?;
    let mut lengths = cfg.lengths.clone();
    lengths.sort_by(|a, b| a.total_cmp(b));
    let per_length: Vec<Result<Vec<(f64, InfSupReport)>>> = lengths
        .par_iter()
        .map(|&l| {
            let op = ac::acoustic_block_operator(&spec, cfg.omega, l, cfg.ppw, &cfg.rhs_modes)?;
            let betas: Vec<f64> = cfg
                .betas
                .iter()
                .map(|&b0| match cfg.beta_scaling {
                    BetaScaling::Fixed => b0,
                    BetaScaling::InverseLength => b0 / l,
                })
                .collect();
            Ok(op.uw_infsup_many(&betas)?.into_iter().map(|r| (l, r)).collect())
        })
        .collect();
    let mut results = Vec::new();
    for r in per_length {
        results.extend(r?);
    }
    results.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.beta.total_cmp(&b.1.beta)));
    let mut worst = 0.0_f64;
    let rows = results
        .iter()
        .map(|(l, r)| {
            worst = worst.max(r.gamma_bound - r.gamma_computed).max(r.gamma_computed - 1.0);
            vec![
                Cell::Float(*l),
                Cell::Float(r.beta),
                Cell::Float(r.alpha),
                Cell::Float(r.gamma_computed),
                Cell::Float(r.gamma_bound),
                Cell::Float(r.gamma_computed - r.gamma_bound),
                Cell::Float(r.stability_proxy()),
            ]
        })
        .collect();
    Ok((
        vec!["L", "beta", "alpha", "gamma_computed", "gamma_bound", "margin_check", "stability_proxy"],
        rows,
        Some(worst.max(0.0)),
    ))
}

fn run_transparency(cfg: &ExperimentConfig) -> Result<Table> {
    let mut lengths = cfg.lengths.clone();
    lengths.sort_by(|a, b| a.total_cmp(b));
    let per_length: Vec<Result<Vec<Vec<Cell>>>> = lengths
        .par_iter()
        .map(|&l| {
            let problem = acoustic_setup(cfg, l, l / cfg.extension_factor)?;
            let (_, per_mode) = ac::transparency_by_mode(&problem, cfg.extension_factor)?;
            Ok((0..problem.modes())
                .map(|n| {
                    let k = problem.classification.kappas[n];
                    vec![
                        Cell::Float(l),
                        Cell::Int(n as i64 + 1),
                        Cell::Float(k.re),
                        Cell::Float(k.im),
                        Cell::Text(problem.classification.classes[n].name().into()),
                        Cell::Int(problem.grid.cells() as i64),
                        Cell::Float(per_mode[n]),
                    ]
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_length {
        rows.extend(r?);
    }
    Ok((vec!["length", "mode", "kappa_re", "kappa_im", "class", "cells", "mismatch"], rows, None))
}

/// Selection helper for callers that build their own problems.
pub fn selection_from_str(s: &str) -> Option<ModeSelection> {
    match s {
        "all" => Some(ModeSelection::All),
        "propagating" => Some(ModeSelection::Propagating),
        "evanescent" => Some(ModeSelection::Evanescent),
        _ => {
            let v: Option<Vec<usize>> = s.split(',').map(|t| t.trim().parse().ok()).collect();
            v.map(ModeSelection::Indices)
        }
    }
}
