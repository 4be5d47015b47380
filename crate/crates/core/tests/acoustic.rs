use std::f64::consts::PI;

use approx::assert_relative_eq;
use num_complex::Complex64 as C;
use waveguide_modal::acoustic_waveguide::*;
use waveguide_modal::helmholtz_1d::{ComplexField1D, Grid1D};
use waveguide_modal::transverse_spectrum::*;

const I: C = C::new(0.0, 1.0);

fn bump(z: f64, a: f64, b: f64) -> f64 {
    if z <= a || z >= b {
        return 0.0;
    }
    let s = (2.0 * z - a - b) / (b - a);
    (1.0 - 1.0 / (1.0 - s * s)).exp()
}

fn rect(n: usize) -> TransverseSpectrum {
    rectangle_spectrum(1.0, 0.5, BoundaryCondition::Neumann, n, Normalization::UnitL2).unwrap()
}

fn smooth_problem(spec: TransverseSpectrum, omega: f64, l: f64, cells: usize) -> AcousticProblem {
    let g = Grid1D::new(l, cells).unwrap();
    let n = spec.len();
    let mut rhs = AcousticRhs::zeros(n, g);
    for m in 0..n {
        let s = 1.0 + m as f64;
        rhs.f[m] = ComplexField1D::from_fn(g, |z| C::new(bump(z, 0.0, 0.7 * l), 0.3 * s));
        rhs.gz[m] = ComplexField1D::from_fn(g, |z| C::new(0.0, bump(z, 0.1 * l, 0.6 * l)) * s);
        if spec.eigenvalues[m] > 1e-10 {
            rhs.gx[m] = ComplexField1D::from_fn(g, |z| C::new(bump(z, 0.2 * l, 0.8 * l), -(z / l)) / s);
        }
    }
    AcousticProblem::new(spec, omega, g, rhs).unwrap()
}

// || i w p + uz' - ux - f || on interior nodes, central differences.
fn divergence_residual(p: &AcousticProblem) -> f64 {
    let sol = solve_acoustic(p).unwrap();
    let vel = reconstruct_velocity(p, &sol);
    let h = p.grid.h();
    let m = p.grid.cells();
    let mut s = 0.0;
    for n in 0..p.modes() {
        let (pv, uz, ux, f) = (sol.modes[n].values(), vel.uz[n].values(), vel.ux[n].values(), p.rhs.f[n].values());
        for i in 2..m - 1 {
            let r = I * p.omega() * pv[i] + (uz[i + 1] - uz[i - 1]) / (2.0 * h) - ux[i] - f[i];
            s += h * r.norm_sqr();
        }
    }
    s.sqrt()
}

#[test]
fn reconstructed_fields_satisfy_the_first_order_system() {
    let r: Vec<f64> = [200, 400, 800].iter().map(|&m| divergence_residual(&smooth_problem(rect(4), 2.0, 4.0, m))).collect();
    for w in r.windows(2) {
        let f = w[0] / w[1];
        assert!((3.5..=4.5).contains(&f), "residuals {r:?}");
    }
}

#[test]
fn outflow_relation_holds_at_the_end() {
    let gaps: Vec<f64> = [200, 400, 800]
        .iter()
        .map(|&m| {
            let p = smooth_problem(rect(3), 2.0, 4.0, m);
            let sol = solve_acoustic(&p).unwrap();
            let vel = reconstruct_velocity(&p, &sol);
            (0..3)
                .map(|n| (I * p.omega() * *vel.uz[n].values().last().unwrap() - sol.kappas[n] * sol.traces()[n]).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(gaps[2] < 1e-3);
    assert!(gaps[1] / gaps[2] > 3.0, "{gaps:?}");
}

#[test]
fn discrete_energy_identity_fixes_the_dtn_sign() {
    let p = smooth_problem(rect(4), 2.0, 3.0, 120);
    let sol = solve_acoustic(&p).unwrap();
    let dtn = DtnOperator::from_classification(&p.classification);
    let tr = sol.traces();
    let w = p.grid.trapezoid_weights();
    let h = p.grid.h();
    let mut lhs = -dtn.pairing(&tr, &tr);
    let mut rhs = C::new(0.0, 0.0);
    for n in 0..p.modes() {
        let k = sol.kappas[n];
        let v = sol.modes[n].values();
        let (f, gz, gx) = (p.rhs.f[n].values(), p.rhs.gz[n].values(), p.rhs.gx[n].values());
        for i in 0..v.len() {
            lhs += k * k * w[i] * v[i].norm_sqr();
            rhs += w[i] * (I * p.omega() * f[i] + gx[i]) * v[i].conj();
        }
        for e in 0..v.len() - 1 {
            lhs += (v[e + 1] - v[e]).norm_sqr() / h;
            rhs += 0.5 * (gz[e] + gz[e + 1]) * (v[e + 1] - v[e]).conj();
        }
    }
    assert!((lhs - rhs).norm() < 1e-10 * rhs.norm(), "{lhs} vs {rhs}");
    // Propagating traces give an imaginary pairing, evanescent ones a negative real one.
    let e0 = [C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)];
    let e1 = [C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)];
    let a = dtn.pairing(&e0, &e0);
    let b = dtn.pairing(&e1, &e1);
    assert!(a.re.abs() < 1e-14 && a.im < 0.0);
    assert!(b.im.abs() < 1e-14 && b.re < 0.0);
    assert_eq!(dtn.apply(&e1)[1], -sol.kappas[1]);
}

#[test]
fn transparency_on_the_disk_by_mode() {
    // omega = 3: the first three disk Neumann modes propagate.
    let spec = disk_spectrum(1.0, BoundaryCondition::Neumann, 6, Normalization::UnitL2).unwrap();
    let cls = classify_modes(&spec, 3.0, None).unwrap();
    let run = |cells: usize| {
        let g = Grid1D::new(4.0, cells).unwrap();
        let mut rhs = AcousticRhs::zeros(6, g);
        for n in 0..6 {
            rhs.f[n] = ComplexField1D::from_fn(g, |z| C::new(bump(z, 0.0, 2.0), 0.0));
        }
        transparency_by_mode(&AcousticProblem::new(spec.clone(), 3.0, g, rhs).unwrap(), 2.0).unwrap().1
    };
    let (a, b) = (run(160), run(320));
    for n in 0..6 {
        match cls.classes[n] {
            ModeClass::Evanescent => assert!(b[n] < 1e-6, "mode {n}: {}", b[n]),
            ModeClass::Propagating => {
                let f = a[n] / b[n];
                assert!((3.5..=4.5).contains(&f), "mode {n}: {} -> {}", a[n], b[n]);
            }
        }
    }
    assert!(cls.propagating().len() >= 2 && cls.evanescent().len() >= 2);
}

#[test]
fn adjoint_system_is_the_conjugate() {
    for k in [C::new(0.0, 2.7), C::new(1.3, 0.0)] {
        let g = Grid1D::new(3.0, 40).unwrap();
        let f = mode_system_matrix(k, &g, false).unwrap();
        let a = mode_system_matrix(k, &g, true).unwrap();
        assert_relative_eq!((f.adjoint() - &a).norm(), 0.0, epsilon = 1e-12);
        let sf = f.singular_values().min();
        let sa = a.singular_values().min();
        assert!((sf - sa).abs() < 1e-10);
    }
    let spec = rect(3);
    let opts = AcousticStabilityOptions::default();
    let f = acoustic_stability_constant(&spec, 2.0, 6.0, 8, &opts).unwrap();
    let a = adjoint_stability_constant(&spec, 2.0, 6.0, 8, &opts).unwrap();
    for (x, y) in f.modes.iter().zip(&a.modes) {
        assert_relative_eq!(x.constant, y.constant, max_relative = 1e-6);
    }
}

#[test]
fn stability_constant_bounds_concrete_loads() {
    let spec = rect(2).truncated(1);
    let (omega, l) = (2.0, 8.0);
    let opts = AcousticStabilityOptions::default();
    let c = acoustic_stability_constant(&spec, omega, l, 8, &opts).unwrap().constant.unwrap();
    let k = mode_wavenumber(0.0, omega);
    let g = Grid1D::resolved(l, k.norm(), opts.ppw).unwrap();
    for load in [|z: f64, l: f64| C::new(0.0, 2.0 * z).exp() * (z / l), |z: f64, l: f64| C::new(bump(z, 0.0, l), 0.0)] {
        let mut rhs = AcousticRhs::zeros(1, g);
        rhs.f[0] = ComplexField1D::from_fn(g, |z| load(z, l));
        let p = AcousticProblem::new(spec.clone(), omega, g, rhs).unwrap();
        let sol = solve_acoustic(&p).unwrap();
        let vel = reconstruct_velocity(&p, &sol);
        let ratio = (sol.l2_norm_sq() + vel.l2_norm_sq(&sol.eigenvalues)).sqrt() / p.rhs.norm(&sol.eigenvalues);
        assert!(ratio <= 1.02 * c, "ratio {ratio} above constant {c}");
    }
    // A load in phase with the wave is close to the worst case.
    let mut rhs = AcousticRhs::zeros(1, g);
    rhs.f[0] = ComplexField1D::from_fn(g, |z| C::new(0.0, 2.0 * z).exp());
    let p = AcousticProblem::new(spec.clone(), omega, g, rhs).unwrap();
    let sol = solve_acoustic(&p).unwrap();
    let vel = reconstruct_velocity(&p, &sol);
    let ratio = (sol.l2_norm_sq() + vel.l2_norm_sq(&sol.eigenvalues)).sqrt() / p.rhs.norm(&sol.eigenvalues);
    assert!(ratio >= 0.3 * c, "ratio {ratio} vs constant {c}");
}

#[test]
fn problem_validation() {
    let g = Grid1D::new(1.0, 32).unwrap();
    let mut rhs = AcousticRhs::zeros(2, g);
    rhs.gx[0] = ComplexField1D::from_fn(g, |_| C::new(1.0, 0.0));
    assert!(AcousticProblem::new(rect(2), 2.0, g, rhs).is_err());
    let dir = rectangle_spectrum(1.0, 0.5, BoundaryCondition::Dirichlet, 2, Normalization::UnitL2).unwrap();
    assert!(AcousticProblem::new(dir, 2.0, g, AcousticRhs::zeros(2, g)).is_err());
    assert!(AcousticProblem::new(rect(2), PI, g, AcousticRhs::zeros(2, g)).is_err());
    assert!(AcousticProblem::new(rect(3), 2.0, g, AcousticRhs::zeros(2, g)).is_err());
    let sel = ModeSelection::Indices(vec![5]);
    assert!(sel.select(&[ModeClass::Propagating]).is_err());
}
