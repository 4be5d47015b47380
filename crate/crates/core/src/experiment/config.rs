//! Line-based `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::acoustic_waveguide::ModeSelection;
use crate::rng::DEFAULT_SEED;
use crate::transverse_spectrum::{BoundaryCondition, Coefficient, CrossSection};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Spectrum,
    Acoustic,
    Maxwell,
    InfSup1d,
    UwSweep,
    Transparency,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Acoustic => "acoustic",
            ExperimentKind::Maxwell => "maxwell",
            ExperimentKind::InfSup1d => "infsup1d",
            ExperimentKind::UwSweep => "uw-sweep",
            ExperimentKind::Transparency => "transparency",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "spectrum" => ExperimentKind::Spectrum,
            "acoustic" | "solve-acoustic" => ExperimentKind::Acoustic,
            "maxwell" | "solve-maxwell" => ExperimentKind::Maxwell,
            "infsup1d" | "infsup-1d" => ExperimentKind::InfSup1d,
            "uw-sweep" | "uw_sweep" => ExperimentKind::UwSweep,
            "transparency" => ExperimentKind::Transparency,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaScaling {
    Fixed,
    /// `beta = beta0 / L`.
    InverseLength,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhsProfile {
    /// Smooth bump supported near the inflow end.
    Bump,
    Constant,
    /// Seeded random nodal values.
    Random,
}

/// A fully validated experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub cross_section: CrossSection,
    pub bc: BoundaryCondition,
    pub omega: f64,
    pub lengths: Vec<f64>,
    pub betas: Vec<f64>,
    pub beta_scaling: BetaScaling,
    pub ppw: f64,
    pub modes: usize,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub grid_points: usize,
    pub kappa: Complex64,
    pub cells: Option<usize>,
    pub rhs: RhsProfile,
    pub rhs_modes: ModeSelection,
    pub extension_factor: f64,
    pub tag: String,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            cross_section: CrossSection::Rectangle { width: 1.0, height: 0.5 },
            bc: BoundaryCondition::Neumann,
            omega: 2.0,
            lengths: vec![4.0],
            betas: vec![1.0, 1e-1, 1e-2, 1e-3],
            beta_scaling: BetaScaling::Fixed,
            ppw: 20.0,
            modes: 8,
            trials: 8,
            seed: DEFAULT_SEED,
            output: None,
            grid_points: 256,
            kappa: Complex64::new(1.0, 0.0),
            cells: None,
            rhs: RhsProfile::Bump,
            rhs_modes: ModeSelection::All,
            extension_factor: 2.0,
            tag: "run".into(),
            threads: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line number, 0 for problems not tied to a line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

/// Every problem found in a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

const KEYS: &[&str] = &[
    "experiment",
    "cross_section",
    "width",
    "height",
    "radius",
    "coefficient",
    "bc",
    "omega",
    "lengths",
    "betas",
    "beta_scaling",
    "ppw",
    "modes",
    "trials",
    "seed",
    "output",
    "grid_points",
    "kappa_re",
    "kappa_im",
    "cells",
    "rhs",
    "rhs_modes",
    "extension_factor",
    "tag",
    "threads",
];

struct Parser {
    errors: Vec<ConfigError>,
}

impl Parser {
    fn err(&mut self, line: usize, message: impl Into<String>) {
        self.errors.push(ConfigError { line, message: message.into() });
    }

    fn float(&mut self, key: &str, v: &str, line: usize) -> Option<f64> {
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.err(line, format!("type mismatch for '{key}': expected a number, got '{v}'"));
                None
            }
        }
    }

    fn uint(&mut self, key: &str, v: &str, line: usize) -> Option<u64> {
        let parsed = if let Some(hex) = v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
            u64::from_str_radix(hex, 16).ok()
        } else {
            v.parse::<u64>().ok()
        };
        if parsed.is_none() {
            self.err(line, format!("type mismatch for '{key}': expected a non-negative integer, got '{v}'"));
        }
        parsed
    }

    fn list(&mut self, key: &str, v: &str, line: usize) -> Option<Vec<f64>> {
        let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if items.is_empty() {
            self.err(line, format!("empty list at line {line} for '{key}'"));
            return None;
        }
        let mut out = Vec::with_capacity(items.len());
        let mut ok = true;
        for it in items {
            match self.float(key, it, line) {
                Some(x) => out.push(x),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }
}

/// Parse and validate a configuration, reporting every problem at once.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let mut p = Parser { errors: Vec::new() };
    let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            p.err(line, format!("expected 'key = value', got '{content}'"));
            continue;
        };
        let (k, v) = (k.trim().to_ascii_lowercase(), v.trim().to_string());
        if !KEYS.contains(&k.as_str()) {
            p.err(line, format!("unknown key '{k}'"));
            continue;
        }
        if let Some((_, prev)) = entries.get(&k) {
            p.err(line, format!("duplicate key '{k}' (first set at line {prev})"));
            continue;
        }
        entries.insert(k, (v, line));
    }

    let mut c = ExperimentConfig::default();
    let get = |k: &str| entries.get(k).map(|(v, l)| (v.as_str(), *l));

    if let Some((v, l)) = get("experiment") {
        match ExperimentKind::parse(v) {
            Some(e) => c.experiment = Some(e),
            None => p.err(l, format!("unknown experiment '{v}'")),
        }
    }
    if let Some((v, l)) = get("bc") {
        match v {
            "neumann" => c.bc = BoundaryCondition::Neumann,
            "dirichlet" => c.bc = BoundaryCondition::Dirichlet,
            _ => p.err(l, format!("bc must be 'neumann' or 'dirichlet', got '{v}'")),
        }
    }
    let float_key = |p: &mut Parser, key: &str, positive: bool| -> Option<f64> {
        let (v, l) = get(key)?;
        let x = p.float(key, v, l)?;
        if positive && x <= 0.0 {
            p.err(l, format!("'{key}' must be positive, got {x}"));
            return None;
        }
        Some(x)
    };
    let width = float_key(&mut p, "width", true);
    let height = float_key(&mut p, "height", true);
    let radius = float_key(&mut p, "radius", true);
    if let Some(x) = float_key(&mut p, "omega", true) {
        c.omega = x;
    }
    if let Some(x) = float_key(&mut p, "ppw", true) {
        c.ppw = x;
    }
    if let Some(x) = float_key(&mut p, "kappa_re", false) {
        if x < 0.0 {
            p.err(get("kappa_re").unwrap().1, "'kappa_re' must be non-negative");
        }
        c.kappa.re = x;
    }
    if let Some(x) = float_key(&mut p, "kappa_im", false) {
        c.kappa.im = x;
    }
    if let Some((v, l)) = get("extension_factor") {
        if let Some(x) = p.float("extension_factor", v, l) {
            if x <= 1.0 {
                p.err(l, format!("'extension_factor' must exceed 1, got {x}"));
            }
            c.extension_factor = x;
        }
    }

    let coefficient = get("coefficient").and_then(|(v, l)| {
        let r = parse_coefficient(v);
        if r.is_none() {
            p.err(l, format!("coefficient must be constant:c, linear:a,b or step:a,b[,at], got '{v}'"));
        }
        r
    });
    let cs_line = get("cross_section").map(|x| x.1).unwrap_or(0);
    let cs_kind = get("cross_section").map(|x| x.0).unwrap_or("rectangle");
    match cs_kind {
        "rectangle" => {
            c.cross_section = CrossSection::Rectangle { width: width.unwrap_or(1.0), height: height.unwrap_or(0.5) };
        }
        "disk" => c.cross_section = CrossSection::Disk { radius: radius.unwrap_or(1.0) },
        "interval" => {
            let a = coefficient.clone().unwrap_or(Coefficient::Constant(1.0));
            if a.min_value() <= 0.0 {
                p.err(get("coefficient").map(|x| x.1).unwrap_or(0), "coefficient must be positive");
            }
            c.cross_section = CrossSection::Interval(a);
        }
        other => p.err(cs_line, format!("cross_section must be rectangle, disk or interval, got '{other}'")),
    }

    let uint_key = |p: &mut Parser, key: &str, min: u64| -> Option<u64> {
        let (v, l) = get(key)?;
        let x = p.uint(key, v, l)?;
        if x < min {
            p.err(l, format!("'{key}' must be at least {min}, got {x}"));
            return None;
        }
        Some(x)
    };
    if let Some(x) = uint_key(&mut p, "modes", 1) {
        c.modes = x as usize;
    }
    if let Some(x) = uint_key(&mut p, "trials", 1) {
        c.trials = x as usize;
    }
    if let Some(x) = uint_key(&mut p, "seed", 0) {
        c.seed = x;
    }
    if let Some(x) = uint_key(&mut p, "grid_points", 16) {
        c.grid_points = x as usize;
    }
    if let Some(x) = uint_key(&mut p, "cells", 4) {
        c.cells = Some(x as usize);
    }
    if let Some(x) = uint_key(&mut p, "threads", 1) {
        c.threads = Some(x as usize);
    }

    if let Some((v, l)) = get("lengths") {
        if let Some(ls) = p.list("lengths", v, l) {
            if ls.iter().any(|x| *x <= 0.0) {
                p.err(l, "all lengths must be positive");
            }
            c.lengths = ls;
        }
    }
    if let Some((v, l)) = get("betas") {
        if let Some(bs) = p.list("betas", v, l) {
            if bs.iter().any(|x| *x < 0.0) {
                p.err(l, "all betas must be non-negative");
            }
            c.betas = bs;
        }
    }
    if let Some((v, l)) = get("beta_scaling") {
        match v {
            "fixed" => c.beta_scaling = BetaScaling::Fixed,
            "inverse_length" | "inverse-length" => c.beta_scaling = BetaScaling::InverseLength,
            _ => p.err(l, format!("beta_scaling must be 'fixed' or 'inverse_length', got '{v}'")),
        }
    }
    if let Some((v, l)) = get("rhs") {
        match v {
            "bump" => c.rhs = RhsProfile::Bump,
            "constant" => c.rhs = RhsProfile::Constant,
            "random" => c.rhs = RhsProfile::Random,
            _ => p.err(l, format!("rhs must be bump, constant or random, got '{v}'")),
        }
    }
    if let Some((v, l)) = get("rhs_modes") {
        match v {
            "all" => c.rhs_modes = ModeSelection::All,
            "propagating" => c.rhs_modes = ModeSelection::Propagating,
            "evanescent" => c.rhs_modes = ModeSelection::Evanescent,
            _ => {
                let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
                if items.is_empty() {
                    p.err(l, format!("empty list at line {l} for 'rhs_modes'"));
                } else {
                    let mut idx = Vec::new();
                    for it in items {
                        if let Some(x) = p.uint("rhs_modes", it, l) {
                            idx.push(x as usize);
                        }
                    }
                    c.rhs_modes = ModeSelection::Indices(idx);
                }
            }
        }
    }
    if let Some((v, _)) = get("output") {
        c.output = Some(PathBuf::from(v));
    }
    if let Some((v, l)) = get("tag") {
        if v.is_empty() || !v.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_') {
            p.err(l, format!("tag must be non-empty and use letters, digits, '-' or '_', got '{v}'"));
        } else {
            c.tag = v.to_string();
        }
    }

    if p.errors.is_empty() {
        Ok(c)
    } else {
        p.errors.sort_by_key(|e| e.line);
        Err(ConfigErrors(p.errors))
    }
}

fn parse_coefficient(v: &str) -> Option<Coefficient> {
    let (kind, args) = v.split_once(':')?;
    let nums: Option<Vec<f64>> = args.split(',').map(|s| s.trim().parse::<f64>().ok()).collect();
    let nums = nums?;
    match (kind.trim(), nums.as_slice()) {
        ("constant", [c]) => Some(Coefficient::Constant(*c)),
        ("linear", [a, b]) => Some(Coefficient::Linear { left: *a, right: *b }),
        ("step", [a, b]) => Some(Coefficient::Step { left: *a, right: *b, at: 0.5 }),
        ("step", [a, b, at]) if *at > 0.0 && *at < 1.0 => Some(Coefficient::Step { left: *a, right: *b, at: *at }),
        _ => None,
    }
}

impl ExperimentConfig {
    /// Canonical `key = value` rendering of every setting that affects results.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let exp = self.experiment.map(|e| e.name()).unwrap_or("none");
        let cs = match &self.cross_section {
            CrossSection::Rectangle { width, height } => format!("rectangle {width:e} {height:e}"),
            CrossSection::Disk { radius } => format!("disk {radius:e}"),
            CrossSection::Interval(a) => format!("interval {a}"),
        };
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        let sel = match &self.rhs_modes {
            ModeSelection::All => "all".to_string(),
            ModeSelection::Propagating => "propagating".into(),
            ModeSelection::Evanescent => "evanescent".into(),
            ModeSelection::Indices(v) => v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","),
        };
        for (k, v) in [
            ("experiment", exp.to_string()),
            ("cross_section", cs),
            ("bc", self.bc.name().to_string()),
            ("omega", format!("{:e}", self.omega)),
            ("lengths", list(&self.lengths)),
            ("betas", list(&self.betas)),
            ("beta_scaling", format!("{:?}", self.beta_scaling)),
            ("ppw", format!("{:e}", self.ppw)),
            ("modes", self.modes.to_string()),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            ("grid_points", self.grid_points.to_string()),
            ("kappa", format!("{:e},{:e}", self.kappa.re, self.kappa.im)),
            ("cells", self.cells.map(|c| c.to_string()).unwrap_or_else(|| "auto".into())),
            ("rhs", format!("{:?}", self.rhs)),
            ("rhs_modes", sel),
            ("extension_factor", format!("{:e}", self.extension_factor)),
        ] {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        }
        s
    }

    pub fn hash(&self) -> String {
        let d = Sha256::digest(self.canonical().as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn default_output(&self) -> PathBuf {
        let exp = self.experiment.map(|e| e.name()).unwrap_or("experiment");
        PathBuf::from(format!("{exp}_{}.csv", self.tag))
    }
}
