//! Transverse eigenbases of `-div(a grad)` on the waveguide cross-section and
//! the propagating/evanescent split of longitudinal wavenumbers.

pub mod bessel;
mod sturm_liouville;

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use sturm_liouville::sturm_liouville_spectrum;

/// Piecewise-smooth positive coefficient on the unit interval.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// Linear from `left` at 0 to `right` at 1.
    Linear { left: f64, right: f64 },
    /// `left` below `at`, `right` above.
    Step { left: f64, right: f64, at: f64 },
}

impl Coefficient {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Coefficient::Constant(c) => c,
            Coefficient::Linear { left, right } => left + (right - left) * x,
            Coefficient::Step { left, right, at } => {
                if x < at {
                    left
                } else {
                    right
                }
            }
        }
    }

    pub fn min_value(&self) -> f64 {
        match *self {
            Coefficient::Constant(c) => c,
            Coefficient::Linear { left, right } | Coefficient::Step { left, right, .. } => left.min(right),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok_vals = match *self {
            Coefficient::Constant(c) => c.is_finite(),
            Coefficient::Linear { left, right } => left.is_finite() && right.is_finite(),
            Coefficient::Step { left, right, at } => {
                left.is_finite() && right.is_finite() && at > 0.0 && at < 1.0
            }
        };
        if !ok_vals {
            return Err(Error::domain(format!("invalid coefficient {self:?}")));
        }
        if !(self.min_value() > 0.0) {
            return Err(Error::domain(format!("coefficient must be positive, got {self:?}")));
        }
        Ok(())
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "constant:{c}"),
            Coefficient::Linear { left, right } => write!(f, "linear:{left},{right}"),
            Coefficient::Step { left, right, at } => write!(f, "step:{left},{right},{at}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CrossSection {
    /// The unit interval with a variable coefficient.
    Interval(Coefficient),
    Rectangle { width: f64, height: f64 },
    Disk { radius: f64 },
}

impl CrossSection {
    pub fn interval(a: Coefficient) -> Result<Self> {
        a.validate()?;
        Ok(CrossSection::Interval(a))
    }

    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::domain(format!("rectangle sides must be positive, got {width} x {height}")));
        }
        Ok(CrossSection::Rectangle { width, height })
    }

    pub fn disk(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain(format!("disk radius must be positive, got {radius}")));
        }
        Ok(CrossSection::Disk { radius })
    }

    pub fn dimension(&self) -> usize {
        match self {
            CrossSection::Interval(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    Neumann,
    Dirichlet,
}

impl BoundaryCondition {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryCondition::Neumann => "neumann",
            BoundaryCondition::Dirichlet => "dirichlet",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// `||phi||_{L2} = 1`.
    UnitL2,
    /// `||sqrt(a) grad phi||_{L2} = 1`; undefined for zero eigenvalues.
    UnitGradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Angular {
    Cos,
    Sin,
}

/// A transverse eigenfunction, either in closed form or as nodal values.
#[derive(Clone, Debug, PartialEq)]
pub enum Eigenfunction {
    Rectangle { m: usize, n: usize, width: f64, height: f64, bc: BoundaryCondition, scale: f64 },
    Disk { order: usize, root: f64, radius: f64, angular: Angular, bc: BoundaryCondition, scale: f64 },
    Grid { nodes: Vec<f64>, values: Vec<f64> },
}

impl Eigenfunction {
    /// Value at a point of the cross-section. Disk points are relative to the
    /// center; grid functions interpolate linearly.
    pub fn value(&self, point: &[f64]) -> f64 {
        match self {
            Eigenfunction::Rectangle { m, n, width, height, bc, scale } => {
                let (x, y) = (point[0], point[1]);
                let ax = *m as f64 * PI / width;
                let ay = *n as f64 * PI / height;
                match bc {
                    BoundaryCondition::Neumann => scale * (ax * x).cos() * (ay * y).cos(),
                    BoundaryCondition::Dirichlet => scale * (ax * x).sin() * (ay * y).sin(),
                }
            }
            Eigenfunction::Disk { order, root, radius, angular, scale, .. } => {
                let (x, y) = (point[0], point[1]);
                let r = x.hypot(y);
                let th = y.atan2(x);
                let ang = angular_factor(*angular, *order, th);
                scale * bessel::bessel_j(*order, root * r / radius) * ang
            }
            Eigenfunction::Grid { nodes, values } => interpolate(nodes, values, point[0]),
        }
    }

    /// Gradient at a point (closed-form variants only).
    pub fn gradient(&self, point: &[f64]) -> Option<[f64; 2]> {
        match self {
            Eigenfunction::Rectangle { m, n, width, height, bc, scale } => {
                let (x, y) = (point[0], point[1]);
                let ax = *m as f64 * PI / width;
                let ay = *n as f64 * PI / height;
                Some(match bc {
                    BoundaryCondition::Neumann => [
                        -scale * ax * (ax * x).sin() * (ay * y).cos(),
                        -scale * ay * (ax * x).cos() * (ay * y).sin(),
                    ],
                    BoundaryCondition::Dirichlet => [
                        scale * ax * (ax * x).cos() * (ay * y).sin(),
                        scale * ay * (ax * x).sin() * (ay * y).cos(),
                    ],
                })
            }
            Eigenfunction::Disk { order, root, radius, angular, scale, .. } => {
                let (x, y) = (point[0], point[1]);
                let r = x.hypot(y);
                if r == 0.0 {
                    return Some([0.0, 0.0]);
                }
                let th = y.atan2(x);
                let s = root / radius;
                let k = *order as f64;
                let jr = scale * s * bessel::bessel_j_prime(*order, s * r) * angular_factor(*angular, *order, th);
                let jt = scale * bessel::bessel_j(*order, s * r) / r
                    * match angular {
                        Angular::Cos => -k * (k * th).sin(),
                        Angular::Sin => k * (k * th).cos(),
                    };
                let (c, sn) = (th.cos(), th.sin());
                Some([jr * c - jt * sn, jr * sn + jt * c])
            }
            Eigenfunction::Grid { .. } => None,
        }
    }

    /// `||phi||^2` in closed form (trapezoid rule for grid functions).
    pub fn l2_norm_sq(&self) -> f64 {
        match self {
            Eigenfunction::Rectangle { scale, .. } | Eigenfunction::Disk { scale, .. } => {
                scale * scale / unit_l2_scale(self).powi(2)
            }
            Eigenfunction::Grid { nodes, values } => {
                let mut s = 0.0;
                for i in 0..nodes.len() - 1 {
                    let h = nodes[i + 1] - nodes[i];
                    s += 0.5 * h * (values[i] * values[i] + values[i + 1] * values[i + 1]);
                }
                s
            }
        }
    }

    fn rescaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Eigenfunction::Rectangle { scale, .. } | Eigenfunction::Disk { scale, .. } => *scale *= factor,
            Eigenfunction::Grid { values, .. } => values.iter_mut().for_each(|v| *v *= factor),
        }
        out
    }
}

fn angular_factor(a: Angular, k: usize, th: f64) -> f64 {
    match a {
        Angular::Cos => (k as f64 * th).cos(),
        Angular::Sin => (k as f64 * th).sin(),
    }
}

fn interpolate(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    if x <= nodes[0] {
        return values[0];
    }
    let last = nodes.len() - 1;
    if x >= nodes[last] {
        return values[last];
    }
    let i = match nodes.binary_search_by(|t| t.total_cmp(&x)) {
        Ok(i) => return values[i],
        Err(i) => i - 1,
    };
    let t = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
    values[i] * (1.0 - t) + values[i + 1] * t
}

// Scale giving unit L2 norm for the closed-form variants.
fn unit_l2_scale(f: &Eigenfunction) -> f64 {
    match f {
        Eigenfunction::Rectangle { m, n, width, height, .. } => {
            let fx = if *m == 0 { 1.0 } else { 0.5 };
            let fy = if *n == 0 { 1.0 } else { 0.5 };
            1.0 / (fx * fy * width * height).sqrt()
        }
        Eigenfunction::Disk { order, root, radius, bc, .. } => {
            let k = *order;
            let radial = match bc {
                BoundaryCondition::Dirichlet => 0.5 * radius * radius * bessel::bessel_j(k + 1, *root).powi(2),
                BoundaryCondition::Neumann => {
                    let corr = if k == 0 { 1.0 } else { 1.0 - (k * k) as f64 / (root * root) };
                    0.5 * radius * radius * corr * bessel::bessel_j(k, *root).powi(2)
                }
            };
            let angular = if k == 0 { 2.0 * PI } else { PI };
            1.0 / (radial * angular).sqrt()
        }
        Eigenfunction::Grid { .. } => 1.0,
    }
}

/// Truncated transverse eigenbasis, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct TransverseSpectrum {
    pub cross_section: CrossSection,
    pub bc: BoundaryCondition,
    pub normalization: Normalization,
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Eigenfunction>,
}

const ZERO_EIGENVALUE: f64 = 1e-10;

impl TransverseSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Drops modes with (numerically) zero eigenvalue.
    pub fn without_zero_modes(&self) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.eigenvalues[i].abs() > ZERO_EIGENVALUE).collect();
        Self {
            cross_section: self.cross_section.clone(),
            bc: self.bc,
            normalization: self.normalization,
            eigenvalues: keep.iter().map(|&i| self.eigenvalues[i]).collect(),
            eigenfunctions: keep.iter().map(|&i| self.eigenfunctions[i].clone()).collect(),
        }
    }

    /// First `n` modes.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            cross_section: self.cross_section.clone(),
            bc: self.bc,
            normalization: self.normalization,
            eigenvalues: self.eigenvalues[..n].to_vec(),
            eigenfunctions: self.eigenfunctions[..n].to_vec(),
        }
    }

    pub fn with_normalization(&self, target: Normalization) -> Result<Self> {
        if target == self.normalization {
            return Ok(self.clone());
        }
        if target == Normalization::UnitGradient {
            if let Some(i) = self.eigenvalues.iter().position(|l| l.abs() <= ZERO_EIGENVALUE) {
                return Err(Error::domain(format!(
                    "mode {i} has zero eigenvalue and cannot be gradient-normalized"
                )));
            }
        }
        let eigenfunctions = self
            .eigenvalues
            .iter()
            .zip(&self.eigenfunctions)
            .map(|(&l, f)| match target {
                Normalization::UnitGradient => f.rescaled(1.0 / l.sqrt()),
                Normalization::UnitL2 => f.rescaled(l.sqrt()),
            })
            .collect();
        Ok(Self {
            cross_section: self.cross_section.clone(),
            bc: self.bc,
            normalization: target,
            eigenvalues: self.eigenvalues.clone(),
            eigenfunctions,
        })
    }

    /// Multiplicity of each eigenvalue within the truncated list.
    pub fn multiplicities(&self) -> Vec<usize> {
        self.eigenvalues
            .iter()
            .map(|&l| {
                let tol = 1e-9 * l.abs().max(1.0);
                self.eigenvalues.iter().filter(|&&m| (m - l).abs() <= tol).count()
            })
            .collect()
    }

    /// `||phi_n||^2` for the stored normalization.
    pub fn mode_l2_norm_sq(&self, n: usize) -> f64 {
        match self.normalization {
            Normalization::UnitL2 => 1.0,
            Normalization::UnitGradient => 1.0 / self.eigenvalues[n],
        }
    }
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("at least one mode must be requested"));
    }
    Ok(())
}

/// Closed-form spectrum of the rectangle `(0,width) x (0,height)`.
pub fn rectangle_spectrum(
    width: f64,
    height: f64,
    bc: BoundaryCondition,
    n: usize,
    normalization: Normalization,
) -> Result<TransverseSpectrum> {
    let cs = CrossSection::rectangle(width, height)?;
    check_count(n)?;
    let start = if bc == BoundaryCondition::Dirichlet { 1 } else { 0 };
    let eig = |m: usize, k: usize| PI * PI * ((m * m) as f64 / (width * width) + (k * k) as f64 / (height * height));
    let mut cap = eig(start + 1, start + 1);
    let mut pairs;
    loop {
        pairs = Vec::new();
        let mmax = (cap.sqrt() * width / PI).floor() as usize + 1;
        let kmax = (cap.sqrt() * height / PI).floor() as usize + 1;
        for m in start..=mmax {
            for k in start..=kmax {
                let l = eig(m, k);
                if l <= cap {
                    pairs.push((l, m, k));
                }
            }
        }
        if pairs.len() >= n {
            break;
        }
        cap *= 2.0;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    pairs.truncate(n);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenfunctions = Vec::with_capacity(n);
    for (l, m, k) in pairs {
        let mut f = Eigenfunction::Rectangle { m, n: k, width, height, bc, scale: 1.0 };
        let s = unit_l2_scale(&f);
        f = f.rescaled(s);
        eigenvalues.push(l);
        eigenfunctions.push(f);
    }
    let spec = TransverseSpectrum { cross_section: cs, bc, normalization: Normalization::UnitL2, eigenvalues, eigenfunctions };
    spec.with_normalization(normalization)
}

/// Spectrum of the disk of the given radius via Bessel zeros. Orders `k >= 1`
/// contribute a cosine and a sine mode.
pub fn disk_spectrum(radius: f64, bc: BoundaryCondition, n: usize, normalization: Normalization) -> Result<TransverseSpectrum> {
    let cs = CrossSection::disk(radius)?;
    check_count(n)?;
    let derivative = bc == BoundaryCondition::Neumann;
    let mut x_max = 8.0_f64;
    let mut entries: Vec<(f64, usize, f64, Angular)>;
    loop {
        entries = Vec::new();
        if derivative {
            entries.push((0.0, 0, 0.0, Angular::Cos));
        }
        let mut k = 0usize;
        while (k as f64) < x_max {
            for root in bessel::bessel_zeros_below(k, x_max, derivative)? {
                if derivative && k == 0 && root < 1e-8 {
                    continue;
                }
                entries.push((root, k, root, Angular::Cos));
                if k > 0 {
                    entries.push((root, k, root, Angular::Sin));
                }
            }
            k += 1;
        }
        if entries.len() >= n {
            break;
        }
        x_max *= 2.0;
    }
    entries.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then((a.3 == Angular::Sin).cmp(&(b.3 == Angular::Sin)))
    });
    entries.truncate(n);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenfunctions = Vec::with_capacity(n);
    for (root, k, _, angular) in entries {
        let mut f = Eigenfunction::Disk { order: k, root, radius, angular, bc, scale: 1.0 };
        let s = unit_l2_scale(&f);
        f = f.rescaled(s);
        eigenvalues.push((root / radius).powi(2));
        eigenfunctions.push(f);
    }
    let spec = TransverseSpectrum { cross_section: cs, bc, normalization: Normalization::UnitL2, eigenvalues, eigenfunctions };
    spec.with_normalization(normalization)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeClass {
    /// `lambda < omega^2`, purely imaginary wavenumber.
    Propagating,
    /// `lambda > omega^2`, positive real wavenumber.
    Evanescent,
}

impl ModeClass {
    pub fn name(self) -> &'static str {
        match self {
            ModeClass::Propagating => "propagating",
            ModeClass::Evanescent => "evanescent",
        }
    }
}

/// Longitudinal wavenumbers `kappa_n = sqrt(lambda_n - omega^2)` (principal
/// branch) and their classes.
#[derive(Clone, Debug)]
pub struct ModeClassification {
    pub omega: f64,
    pub eigenvalues: Vec<f64>,
    pub kappas: Vec<Complex64>,
    pub classes: Vec<ModeClass>,
}

impl ModeClassification {
    pub fn len(&self) -> usize {
        self.kappas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappas.is_empty()
    }

    pub fn propagating(&self) -> Vec<usize> {
        self.indices(ModeClass::Propagating)
    }

    pub fn evanescent(&self) -> Vec<usize> {
        self.indices(ModeClass::Evanescent)
    }

    fn indices(&self, c: ModeClass) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.classes[i] == c).collect()
    }
}

pub fn default_degeneracy_tol(omega: f64) -> f64 {
    1e-8 * omega.abs().max(1.0)
}

/// `sqrt(lambda - omega^2)` with non-negative real and imaginary parts.
pub fn mode_wavenumber(lambda: f64, omega: f64) -> Complex64 {
    let d = lambda - omega * omega;
    if d >= 0.0 {
        Complex64::new(d.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-d).sqrt())
    }
}

pub fn classify_eigenvalues(eigenvalues: &[f64], omega: f64, degeneracy_tol: Option<f64>) -> Result<ModeClassification> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::domain(format!("omega must be positive, got {omega}")));
    }
    let tol = degeneracy_tol.unwrap_or_else(|| default_degeneracy_tol(omega));
    let mut kappas = Vec::with_capacity(eigenvalues.len());
    let mut classes = Vec::with_capacity(eigenvalues.len());
    for (i, &l) in eigenvalues.iter().enumerate() {
        let k = mode_wavenumber(l, omega);
        if k.norm() <= tol {
            return Err(Error::DegenerateMode { index: i, magnitude: k.norm(), tol });
        }
        classes.push(if l < omega * omega { ModeClass::Propagating } else { ModeClass::Evanescent });
        kappas.push(k);
    }
    Ok(ModeClassification { omega, eigenvalues: eigenvalues.to_vec(), kappas, classes })
}

pub fn classify_modes(spectrum: &TransverseSpectrum, omega: f64, degeneracy_tol: Option<f64>) -> Result<ModeClassification> {
    classify_eigenvalues(&spectrum.eigenvalues, omega, degeneracy_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_neumann_leading_modes() {
        let s = rectangle_spectrum(1.0, 0.5, BoundaryCondition::Neumann, 5, Normalization::UnitL2).unwrap();
        let p2 = PI * PI;
        let want = [0.0, p2, 4.0 * p2, 4.0 * p2, 5.0 * p2];
        for (a, b) in s.eigenvalues.iter().zip(want) {
            assert!((a - b).abs() < 1e-12 * b.max(1.0));
        }
        assert_eq!(s.multiplicities()[2], 2);
    }

    #[test]
    fn gradient_normalization_scales_by_eigenvalue() {
        let s = rectangle_spectrum(1.0, 0.5, BoundaryCondition::Dirichlet, 3, Normalization::UnitGradient).unwrap();
        for i in 0..3 {
            let f = &s.eigenfunctions[i];
            assert!((f.l2_norm_sq() * s.eigenvalues[i] - 1.0).abs() < 1e-12);
        }
        let n = rectangle_spectrum(1.0, 0.5, BoundaryCondition::Neumann, 3, Normalization::UnitL2).unwrap();
        assert!(n.with_normalization(Normalization::UnitGradient).is_err());
    }

    #[test]
    fn classification_branch() {
        let c = classify_eigenvalues(&[1.0, 9.0], 2.0, None).unwrap();
        assert_eq!(c.classes, vec![ModeClass::Propagating, ModeClass::Evanescent]);
        assert!((c.kappas[0] - Complex64::new(0.0, 3f64.sqrt())).norm() < 1e-15);
        assert!((c.kappas[1] - Complex64::new(5f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!(matches!(classify_eigenvalues(&[4.0], 2.0, None), Err(Error::DegenerateMode { index: 0, .. })));
    }
}
