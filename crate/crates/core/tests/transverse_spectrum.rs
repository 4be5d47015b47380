use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use waveguide_modal::transverse_spectrum::*;
use waveguide_modal::Error;

fn rect_quadrature(f: &Eigenfunction, g: &Eigenfunction, w: f64, h: f64, grad: bool) -> f64 {
    let n = 200;
    let (dx, dy) = (w / n as f64, h / n as f64);
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = [(i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy];
            s += if grad {
                let (a, b) = (f.gradient(&p).unwrap(), g.gradient(&p).unwrap());
                a[0] * b[0] + a[1] * b[1]
            } else {
                f.value(&p) * g.value(&p)
            };
        }
    }
    s * dx * dy
}

#[test]
fn rectangle_eigenvalues_match_enumeration() {
    let (w, h) = (1.3, 0.7);
    for (bc, start) in [(BoundaryCondition::Neumann, 0), (BoundaryCondition::Dirichlet, 1)] {
        let mut want: Vec<f64> = (start..20)
            .flat_map(|m| (start..20).map(move |n| PI * PI * ((m * m) as f64 / (w * w) + (n * n) as f64 / (h * h))))
            .collect();
        want.sort_by(f64::total_cmp);
        let s = rectangle_spectrum(w, h, bc, 25, Normalization::UnitL2).unwrap();
        for (a, b) in s.eigenvalues.iter().zip(&want) {
            assert_relative_eq!(*a, *b, max_relative = 1e-13, epsilon = 1e-13);
        }
    }
}

#[test]
fn rectangle_modes_are_orthonormal_and_solve_the_eigenproblem() {
    let (w, h) = (1.0, 0.6);
    for bc in [BoundaryCondition::Neumann, BoundaryCondition::Dirichlet] {
        let s = rectangle_spectrum(w, h, bc, 6, Normalization::UnitL2).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let m = rect_quadrature(&s.eigenfunctions[i], &s.eigenfunctions[j], w, h, false);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((m - want).abs() < 1e-3, "{bc:?} ({i},{j}) {m}");
                // grad inner product equals lambda * mass inner product
                let k = rect_quadrature(&s.eigenfunctions[i], &s.eigenfunctions[j], w, h, true);
                assert!((k - s.eigenvalues[i] * want).abs() < 1e-3 * (1.0 + s.eigenvalues[i]));
            }
            assert_relative_eq!(s.mode_l2_norm_sq(i), 1.0, max_relative = 1e-12);
        }
    }
}

// Integral representation of J_k and J_k'; the periodic integrands make the
// trapezoid rule converge geometrically.
fn bessel_oracle(k: usize, x: f64, derivative: bool) -> f64 {
    let n = 400;
    let h = PI / n as f64;
    let f = |t: f64| {
        if derivative {
            (k as f64 * t - x * t.sin()).sin() * t.sin()
        } else {
            (k as f64 * t - x * t.sin()).cos()
        }
    };
    let mut s = 0.5 * (f(0.0) + f(PI));
    for i in 1..n {
        s += f(i as f64 * h);
    }
    s * h / PI
}

fn oracle_roots(k: usize, derivative: bool, x_max: f64) -> Vec<f64> {
    let step = 0.01;
    let mut roots = vec![];
    // Zeros of J_k and J_k' (besides 0) lie beyond k.
    let mut a = (k as f64).max(0.05);
    while a < x_max {
        let b = a + step;
        let (fa, fb) = (bessel_oracle(k, a, derivative), bessel_oracle(k, b, derivative));
        if fa * fb < 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if bessel_oracle(k, lo, derivative) * bessel_oracle(k, mid, derivative) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
    }
    roots
}

#[test]
fn disk_spectrum_matches_bessel_oracle() {
    let r = 1.5;
    for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
        let derivative = bc == BoundaryCondition::Neumann;
        let mut want = vec![];
        if derivative {
            want.push(0.0);
        }
        for k in 0..12 {
            for z in oracle_roots(k, derivative, 20.0) {
                want.push((z / r).powi(2));
                if k > 0 {
                    want.push((z / r).powi(2));
                }
            }
        }
        want.sort_by(f64::total_cmp);
        let s = disk_spectrum(r, bc, 20, Normalization::UnitL2).unwrap();
        for (a, b) in s.eigenvalues.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9 * b.max(1.0), "{bc:?}: {a} vs {b}");
        }
    }
}

#[test]
fn disk_modes_have_unit_norm_by_quadrature() {
    let r = 1.0;
    for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
        let s = disk_spectrum(r, bc, 6, Normalization::UnitL2).unwrap();
        for f in &s.eigenfunctions {
            let (nr, nt) = (400, 256);
            let mut q = 0.0;
            for i in 0..nr {
                let rr = (i as f64 + 0.5) * r / nr as f64;
                for j in 0..nt {
                    let t = 2.0 * PI * j as f64 / nt as f64;
                    q += f.value(&[rr * t.cos(), rr * t.sin()]).powi(2) * rr;
                }
            }
            q *= (r / nr as f64) * (2.0 * PI / nt as f64);
            assert!((q - 1.0).abs() < 1e-4, "{bc:?} norm {q}");
        }
    }
}

// Shooting for -(a u')' = lambda u on (0,1) with y = (u, a u') and RK4; the
// node set includes any coefficient jump so each step sees a smooth a.
fn shoot(a: &Coefficient, lambda: f64, dirichlet: bool) -> f64 {
    let n = 4000;
    let h = 1.0 / n as f64;
    let (mut u, mut p) = if dirichlet { (0.0, 1.0) } else { (1.0, 0.0) };
    for i in 0..n {
        let x = i as f64 * h;
        let ax = |t: f64| a.eval((x + t).clamp(x + 1e-14, x + h - 1e-14));
        let rhs = |t: f64, u: f64, p: f64| (p / ax(t), -lambda * u);
        let k1 = rhs(0.0, u, p);
        let k2 = rhs(0.5 * h, u + 0.5 * h * k1.0, p + 0.5 * h * k1.1);
        let k3 = rhs(0.5 * h, u + 0.5 * h * k2.0, p + 0.5 * h * k2.1);
        let k4 = rhs(h, u + h * k3.0, p + h * k3.1);
        u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        p += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    if dirichlet {
        u
    } else {
        p
    }
}

fn shooting_eigenvalue(a: &Coefficient, guess: f64, dirichlet: bool) -> f64 {
    let (mut lo, mut hi) = (guess * 0.97, guess * 1.03);
    assert!(shoot(a, lo, dirichlet) * shoot(a, hi, dirichlet) < 0.0, "bracket failed near {guess}");
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if shoot(a, lo, dirichlet) * shoot(a, mid, dirichlet) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn sturm_liouville_matches_shooting_oracle() {
    for a in [Coefficient::Linear { left: 1.0, right: 2.0 }, Coefficient::Step { left: 1.0, right: 4.0, at: 0.5 }] {
        for bc in [BoundaryCondition::Neumann, BoundaryCondition::Dirichlet] {
            let dirichlet = bc == BoundaryCondition::Dirichlet;
            let s = sturm_liouville_spectrum(&a, bc, 512, 4, Normalization::UnitL2).unwrap();
            let first = if dirichlet { 0 } else { 1 };
            if !dirichlet {
                assert!(s.eigenvalues[0].abs() < 1e-9);
            }
            for &lam in &s.eigenvalues[first..] {
                let oracle = shooting_eigenvalue(&a, lam, dirichlet);
                assert!((lam - oracle).abs() < 1e-3 * oracle, "{a:?} {bc:?}: {lam} vs {oracle}");
            }
        }
    }
}

#[test]
fn sturm_liouville_second_order_for_smooth_coefficient() {
    let a = Coefficient::Linear { left: 1.0, right: 3.0 };
    let guess = sturm_liouville_spectrum(&a, BoundaryCondition::Neumann, 512, 2, Normalization::UnitL2).unwrap().eigenvalues[1];
    let reference = shooting_eigenvalue(&a, guess, false);
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&m| {
            let s = sturm_liouville_spectrum(&a, BoundaryCondition::Neumann, m, 2, Normalization::UnitL2).unwrap();
            (s.eigenvalues[1] - reference).abs()
        })
        .collect();
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((3.5..=4.5).contains(&r), "ratio {r} errs {errs:?}");
    }
}

#[test]
fn grid_modes_are_normalized() {
    let s = sturm_liouville_spectrum(&Coefficient::Constant(2.0), BoundaryCondition::Dirichlet, 64, 3, Normalization::UnitL2).unwrap();
    for i in 0..3 {
        assert_relative_eq!(s.mode_l2_norm_sq(i), 1.0, max_relative = 1e-10);
    }
    let g = s.with_normalization(Normalization::UnitGradient).unwrap();
    for i in 0..3 {
        assert_relative_eq!(g.mode_l2_norm_sq(i) * g.eigenvalues[i], 1.0, max_relative = 1e-10);
    }
}

#[test]
fn degenerate_frequency_is_reported() {
    let s = rectangle_spectrum(1.0, 0.5, BoundaryCondition::Neumann, 3, Normalization::UnitL2).unwrap();
    match classify_modes(&s, PI, None) {
        Err(Error::DegenerateMode { index, .. }) => assert_eq!(index, 1),
        other => panic!("expected degenerate mode, got {other:?}"),
    }
    assert!(classify_modes(&s, PI + 1e-3, None).is_ok());
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(CrossSection::rectangle(0.0, 1.0).is_err());
    assert!(CrossSection::disk(-1.0).is_err());
    assert!(CrossSection::interval(Coefficient::Constant(-1.0)).is_err());
    assert!(rectangle_spectrum(1.0, 1.0, BoundaryCondition::Neumann, 0, Normalization::UnitL2).is_err());
    assert!(sturm_liouville_spectrum(&Coefficient::Constant(1.0), BoundaryCondition::Neumann, 8, 2, Normalization::UnitL2).is_err());
    assert!(classify_eigenvalues(&[1.0], 0.0, None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classification_is_consistent(l in 0.0f64..200.0, w in 0.1f64..12.0) {
        prop_assume!((l - w * w).abs() > 1e-6);
        let c = classify_eigenvalues(&[l], w, None).unwrap();
        let k = c.kappas[0];
        prop_assert!(k.re >= 0.0 && k.im >= 0.0 && k.re * k.im == 0.0);
        prop_assert!(((k * k).re - (l - w * w)).abs() < 1e-9 * (1.0 + l));
        prop_assert_eq!(c.classes[0] == ModeClass::Propagating, l < w * w);
    }
}
