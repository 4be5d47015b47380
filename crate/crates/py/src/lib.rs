//! Python bindings (module `pywaveguide`).

use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;
use waveguide_modal::acoustic_waveguide::{self as ac, AcousticStabilityOptions, ModeSelection};
use waveguide_modal::dpg_core::{self, DiscreteOperator, Gram, PerturbationOutcome};
use waveguide_modal::experiment;
use waveguide_modal::helmholtz_1d::{self as h1, ComplexField1D, Grid1D, OneDProblem, RhsKind, StabilityOptions, TrialSpace};
use waveguide_modal::maxwell_waveguide::{self as mw, MaxwellStabilityOptions};
use nalgebra::DMatrix;
use waveguide_modal::transverse_spectrum::{self as ts, BoundaryCondition, Coefficient, CrossSection, Normalization};
use waveguide_modal::Error;

type ModeRows = Vec<(usize, &'static str, f64)>;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        e if e.is_numerical() => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn bc(name: &str) -> PyResult<BoundaryCondition> {
    match name {
        "neumann" => Ok(BoundaryCondition::Neumann),
        "dirichlet" => Ok(BoundaryCondition::Dirichlet),
        _ => Err(PyValueError::new_err(format!("bc must be 'neumann' or 'dirichlet', got '{name}'"))),
    }
}

fn normalization(name: &str) -> PyResult<Normalization> {
    match name {
        "l2" => Ok(Normalization::UnitL2),
        "gradient" => Ok(Normalization::UnitGradient),
        _ => Err(PyValueError::new_err(format!("normalization must be 'l2' or 'gradient', got '{name}'"))),
    }
}

fn rhs_kind(name: &str) -> PyResult<RhsKind> {
    match name {
        "mass" => Ok(RhsKind::Mass),
        "derivative" => Ok(RhsKind::Derivative),
        _ => Err(PyValueError::new_err(format!("kind must be 'mass' or 'derivative', got '{name}'"))),
    }
}

fn selection(name: &str) -> PyResult<ModeSelection> {
    experiment::selection_from_str(name).ok_or_else(|| PyValueError::new_err(format!("unknown mode selection '{name}'")))
}

/// A truncated transverse eigenbasis.
#[pyclass(name = "TransverseSpectrum", frozen)]
struct PySpectrum {
    inner: ts::TransverseSpectrum,
}

#[pymethods]
impl PySpectrum {
    #[staticmethod]
    #[pyo3(signature = (width, height, bc="neumann", n=8, normalization="l2"))]
    fn rectangle(width: f64, height: f64, bc: &str, n: usize, normalization: &str) -> PyResult<Self> {
        let inner = ts::rectangle_spectrum(width, height, self::bc(bc)?, n, self::normalization(normalization)?).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (radius, bc="neumann", n=8, normalization="l2"))]
    fn disk(radius: f64, bc: &str, n: usize, normalization: &str) -> PyResult<Self> {
        let inner = ts::disk_spectrum(radius, self::bc(bc)?, n, self::normalization(normalization)?).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// `-(a u')' = lambda u` on (0, 1) with `a` linear from `left` to `right`.
    #[staticmethod]
    #[pyo3(signature = (left=1.0, right=1.0, bc="neumann", cells=256, n=8, normalization="l2"))]
    fn interval(left: f64, right: f64, bc: &str, cells: usize, n: usize, normalization: &str) -> PyResult<Self> {
        let a = if left == right { Coefficient::Constant(left) } else { Coefficient::Linear { left, right } };
        let inner = ts::sturm_liouville_spectrum(&a, self::bc(bc)?, cells, n, self::normalization(normalization)?).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues.clone()
    }

    fn multiplicities(&self) -> Vec<usize> {
        self.inner.multiplicities()
    }

    /// Value of mode `n` at a point of the cross-section.
    fn value(&self, n: usize, point: Vec<f64>) -> PyResult<f64> {
        let f = self.inner.eigenfunctions.get(n).ok_or_else(|| PyValueError::new_err("mode index out of range"))?;
        if point.len() < self.inner.cross_section.dimension() {
            return Err(PyValueError::new_err("point has too few coordinates"));
        }
        Ok(f.value(&point))
    }

    /// `(kappa, class)` per mode at frequency `omega`.
    fn classify(&self, omega: f64) -> PyResult<Vec<(Complex64, &'static str)>> {
        let c = ts::classify_modes(&self.inner, omega, None).map_err(py_err)?;
        Ok(c.kappas.into_iter().zip(c.classes.iter().map(|x| x.name())).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("TransverseSpectrum({} modes, {})", self.inner.len(), self.inner.bc.name())
    }
}

/// Ultraweak inf-sup result for one scaling.
#[pyclass(name = "InfSupReport", frozen, get_all)]
struct PyInfSupReport {
    alpha: f64,
    beta: f64,
    gamma_computed: f64,
    gamma_bound: f64,
}

#[pymethods]
impl PyInfSupReport {
    fn __repr__(&self) -> String {
        format!(
            "InfSupReport(alpha={:e}, beta={:e}, gamma_computed={:e}, gamma_bound={:e})",
            self.alpha, self.beta, self.gamma_computed, self.gamma_bound
        )
    }
}

impl From<dpg_core::InfSupReport> for PyInfSupReport {
    fn from(r: dpg_core::InfSupReport) -> Self {
        Self { alpha: r.alpha, beta: r.beta, gamma_computed: r.gamma_computed, gamma_bound: r.gamma_bound }
    }
}

fn problem(kappa: Complex64, length: f64, cells: usize) -> PyResult<(Grid1D, OneDProblem)> {
    let g = Grid1D::new(length, cells).map_err(py_err)?;
    let p = OneDProblem::new(g, kappa, TrialSpace::H1Left0).map_err(py_err)?;
    Ok((g, p))
}

/// Nodal solution of the modal problem with `u(0) = 0` and the outgoing condition.
#[pyfunction]
#[pyo3(signature = (kappa, length, load, kind="mass"))]
fn solve_bvp(kappa: Complex64, length: f64, load: Vec<Complex64>, kind: &str) -> PyResult<Vec<Complex64>> {
    if load.len() < 5 {
        return Err(PyValueError::new_err("load needs at least 5 nodal values"));
    }
    let (g, p) = problem(kappa, length, load.len() - 1)?;
    let f = ComplexField1D::new(g, load).map_err(py_err)?;
    let p = p.with_rhs(rhs_kind(kind)?, f).map_err(py_err)?;
    Ok(h1::solve_bvp(&p).map_err(py_err)?.into_values())
}

#[pyfunction]
fn norm_1k(kappa: Complex64, length: f64, values: Vec<Complex64>) -> PyResult<f64> {
    let g = Grid1D::new(length, values.len().saturating_sub(1)).map_err(py_err)?;
    Ok(h1::norm_1k(&ComplexField1D::new(g, values).map_err(py_err)?, kappa))
}

#[pyfunction]
fn inf_sup_1d(kappa: Complex64, length: f64, cells: usize) -> PyResult<f64> {
    let g = Grid1D::new(length, cells).map_err(py_err)?;
    h1::inf_sup_1d(&g, kappa, TrialSpace::H1Left0).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (kappa, length, kind="mass", trials=8, ppw=20.0, seed=None))]
fn stability_constant_1d(kappa: Complex64, length: f64, kind: &str, trials: usize, ppw: f64, seed: Option<u64>) -> PyResult<f64> {
    let mut o = StabilityOptions { ppw, ..Default::default() };
    if let Some(s) = seed {
        o.seed = s;
    }
    h1::stability_constant_1d(kappa, length, rhs_kind(kind)?, trials, &o).map_err(py_err)
}

/// Inf-sup reports for a dense operator with diagonal Gram weights.
#[pyfunction]
fn uw_infsup(matrix: Vec<Vec<Complex64>>, trial_weights: Vec<f64>, test_weights: Vec<f64>, betas: Vec<f64>) -> PyResult<Vec<PyInfSupReport>> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 || matrix.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("matrix must be a non-empty rectangular list of rows"));
    }
    let m = DMatrix::from_fn(rows, cols, |i, j| matrix[i][j]);
    let op = DiscreteOperator::new(m, Gram::Diagonal(trial_weights), Gram::Diagonal(test_weights)).map_err(py_err)?;
    Ok(dpg_core::uw_infsup_many(&op, &betas).map_err(py_err)?.into_iter().map(Into::into).collect())
}

/// Inf-sup reports of the first-order acoustic modal operator on the rectangle.
#[pyfunction]
#[pyo3(signature = (width, height, omega, length, betas, modes=2, ppw=20.0, selection="propagating"))]
#[allow(clippy::too_many_arguments)]
fn acoustic_uw_infsup(width: f64, height: f64, omega: f64, length: f64, betas: Vec<f64>, modes: usize, ppw: f64, selection: &str) -> PyResult<Vec<PyInfSupReport>> {
    let s = ts::rectangle_spectrum(width, height, BoundaryCondition::Neumann, modes, Normalization::UnitL2).map_err(py_err)?;
    let op = ac::acoustic_block_operator(&s, omega, length, ppw, &self::selection(selection)?).map_err(py_err)?;
    Ok(op.uw_infsup_many(&betas).map_err(py_err)?.into_iter().map(Into::into).collect())
}

/// `(stable, margin, effective_constant or None)`.
#[pyfunction]
fn perturbation_margin(c: f64, length: f64, omega: f64, delta_eps: f64) -> PyResult<(bool, f64, Option<f64>)> {
    Ok(match dpg_core::perturbation_margin(c, length, omega, delta_eps).map_err(py_err)? {
        PerturbationOutcome::Stable { margin, effective_constant } => (true, margin, Some(effective_constant)),
        PerturbationOutcome::Unstable { margin } => (false, margin, None),
    })
}

/// Per-mode `(index, class, constant)` and the overall constant.
#[pyfunction]
#[pyo3(signature = (spectrum, omega, length, trials=8, adjoint=false, selection="all", seed=None))]
#[allow(clippy::too_many_arguments)]
fn acoustic_stability(
    spectrum: &PySpectrum,
    omega: f64,
    length: f64,
    trials: usize,
    adjoint: bool,
    selection: &str,
    seed: Option<u64>,
) -> PyResult<(ModeRows, Option<f64>)> {
    let mut o = AcousticStabilityOptions { selection: self::selection(selection)?, ..Default::default() };
    if let Some(s) = seed {
        o.seed = s;
    }
    let f = if adjoint { ac::adjoint_stability_constant } else { ac::acoustic_stability_constant };
    let r = f(&spectrum.inner, omega, length, trials, &o).map_err(py_err)?;
    Ok((r.modes.iter().map(|m| (m.index, m.class.name(), m.constant)).collect(), r.constant))
}

/// `(alpha family, beta family, overall)` for a rectangle or disk cross-section.
#[pyfunction]
#[pyo3(signature = (omega, length, width=1.0, height=0.5, radius=None, modes=4, trials=8))]
#[allow(clippy::too_many_arguments)]
fn maxwell_stability(
    omega: f64,
    length: f64,
    width: f64,
    height: f64,
    radius: Option<f64>,
    modes: usize,
    trials: usize,
) -> PyResult<(ModeRows, ModeRows, Option<f64>)> {
    let cs = match radius {
        Some(r) => CrossSection::disk(r),
        None => CrossSection::rectangle(width, height),
    }
    .map_err(py_err)?;
    let s = mw::build_maxwell_spectra(&cs, omega, modes).map_err(py_err)?;
    let r = mw::maxwell_stability_constant(&s, length, trials, &MaxwellStabilityOptions::default()).map_err(py_err)?;
    let rows = |f: &ac::StabilityReport| f.modes.iter().map(|m| (m.index, m.class.name(), m.constant)).collect();
    Ok((rows(&r.alpha_family), rows(&r.beta_family), r.constant))
}

/// Run a configuration and return the CSV text. `experiment` overrides the
/// experiment named in the text.
#[pyfunction]
#[pyo3(signature = (text, experiment=None))]
fn run_config(text: &str, experiment: Option<&str>) -> PyResult<String> {
    let parse = |t: &str| experiment::parse_config(t).map_err(|e| PyValueError::new_err(e.to_string()));
    let mut cfg = parse(text)?;
    if let Some(e) = experiment {
        cfg.experiment = parse(&format!("experiment = {e}"))?.experiment;
    }
    Ok(experiment::run_experiment(&cfg).map_err(py_err)?.to_csv())
}

#[pymodule]
fn pywaveguide(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyInfSupReport>()?;
    m.add_function(wrap_pyfunction!(solve_bvp, m)?)?;
    m.add_function(wrap_pyfunction!(norm_1k, m)?)?;
    m.add_function(wrap_pyfunction!(inf_sup_1d, m)?)?;
    m.add_function(wrap_pyfunction!(stability_constant_1d, m)?)?;
    m.add_function(wrap_pyfunction!(uw_infsup, m)?)?;
    m.add_function(wrap_pyfunction!(acoustic_uw_infsup, m)?)?;
    m.add_function(wrap_pyfunction!(perturbation_margin, m)?)?;
    m.add_function(wrap_pyfunction!(acoustic_stability, m)?)?;
    m.add_function(wrap_pyfunction!(maxwell_stability, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
