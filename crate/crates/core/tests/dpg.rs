use approx::assert_relative_eq;
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waveguide_modal::dpg_core::*;

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<C> {
    DMatrix::from_fn(rows, cols, |_, _| C::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
}

fn random_weights(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(0.2..3.0)).collect()
}

fn hermitian_sqrt(m: &DMatrix<C>, inverse: bool) -> DMatrix<C> {
    let e = nalgebra::SymmetricEigen::new(m.clone());
    let d = e.eigenvalues.map(|x| C::new(if inverse { 1.0 / x.sqrt() } else { x.sqrt() }, 0.0));
    &e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.adjoint()
}

fn diag(w: &[f64]) -> DMatrix<C> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(w.len(), w.iter().map(|x| C::new(*x, 0.0))))
}

// gamma from the definition: sigma_min of G^{-1/2} A_hat with G = A_hat A_hat^H + beta^2 I.
fn gamma_oracle(a_hat: &DMatrix<C>, beta: f64) -> f64 {
    let n = a_hat.nrows();
    let g = a_hat * a_hat.adjoint() + DMatrix::<C>::identity(n, n) * C::new(beta * beta, 0.0);
    (hermitian_sqrt(&g, true) * a_hat).singular_values().min()
}

fn whiten(a: &DMatrix<C>, mu: &DMatrix<C>, mv: &DMatrix<C>) -> DMatrix<C> {
    hermitian_sqrt(mv, false) * a * hermitian_sqrt(mu, true)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gamma_matches_definition_and_bound(seed in 0u64..1000, nu in 2usize..12, extra in 0usize..4, beta in 0.0f64..20.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let nv = nu + extra;
        let a = random_matrix(&mut r, nv, nu);
        let (wu, wv) = (random_weights(&mut r, nu), random_weights(&mut r, nv));
        let op = DiscreteOperator::new(a.clone(), Gram::Diagonal(wu.clone()), Gram::Diagonal(wv.clone())).unwrap();
        let a_hat = whiten(&a, &diag(&wu), &diag(&wv));
        let alpha = a_hat.singular_values().min();
        let rep = uw_infsup(&op, beta).unwrap();
        prop_assert!((rep.alpha - alpha).abs() < 1e-10 * (1.0 + alpha));
        let oracle = gamma_oracle(&a_hat, beta);
        prop_assert!((rep.gamma_computed - oracle).abs() < 1e-9, "{} vs {}", rep.gamma_computed, oracle);
        prop_assert!(rep.satisfies_bound(1e-10));
        if extra == 0 {
            // Square operators attain the bound.
            prop_assert!((rep.gamma_computed - gamma_lower_bound(alpha, beta)).abs() < 1e-9);
        }
    }
}

#[test]
fn dense_grams_are_whitened_consistently() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let n = 10;
    let a = random_matrix(&mut r, n, n);
    let hpd = |r: &mut ChaCha8Rng| {
        let b = random_matrix(r, n, n);
        &b * b.adjoint() + DMatrix::<C>::identity(n, n) * C::new(0.5, 0.0)
    };
    let (mu, mv) = (hpd(&mut r), hpd(&mut r));
    let op = DiscreteOperator::new(a.clone(), Gram::Dense(mu.clone()), Gram::Dense(mv.clone())).unwrap();
    let want: Vec<f64> = {
        let mut s: Vec<f64> = whiten(&a, &mu, &mv).singular_values().iter().copied().collect();
        s.sort_by(f64::total_cmp);
        s
    };
    for (x, y) in op.singular_values().unwrap().iter().zip(&want) {
        assert_relative_eq!(*x, *y, max_relative = 1e-9);
    }
    let adj = op.adjoint().unwrap();
    assert_relative_eq!(boundedness_below(&adj).unwrap(), want[0], max_relative = 1e-9);
}

#[test]
fn indefinite_and_mismatched_grams_are_rejected() {
    let a = DMatrix::<C>::identity(2, 2);
    let bad = DMatrix::from_row_slice(2, 2, &[C::new(1.0, 0.0), C::new(2.0, 0.0), C::new(2.0, 0.0), C::new(1.0, 0.0)]);
    let op = DiscreteOperator::new(a.clone(), Gram::Dense(bad), Gram::Diagonal(vec![1.0, 1.0]));
    assert!(op.and_then(|o| o.singular_values()).is_err());
    assert!(DiscreteOperator::new(a.clone(), Gram::Diagonal(vec![1.0]), Gram::Diagonal(vec![1.0, 1.0])).is_err());
    let op = DiscreteOperator::new(a, Gram::Diagonal(vec![1.0, -1.0]), Gram::Diagonal(vec![1.0, 1.0]));
    assert!(op.and_then(|o| o.singular_values()).is_err());
}

#[test]
fn adjoint_keeps_singular_values() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let n = 16;
    let op = DiscreteOperator::new(random_matrix(&mut r, n, n), Gram::Diagonal(random_weights(&mut r, n)), Gram::Diagonal(random_weights(&mut r, n)))
        .unwrap();
    let a = op.singular_values().unwrap();
    let b = op.adjoint().unwrap().singular_values().unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_relative_eq!(*x, *y, max_relative = 1e-10);
    }
}

#[test]
fn envelope_conjugation_preserves_the_spectrum() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let (nv, nu) = (14, 12);
    let zt: Vec<f64> = (0..nu).map(|_| r.gen_range(0.0..10.0)).collect();
    let zv: Vec<f64> = (0..nv).map(|_| r.gen_range(0.0..10.0)).collect();
    let op = DiscreteOperator::new(random_matrix(&mut r, nv, nu), Gram::Diagonal(random_weights(&mut r, nu)), Gram::Diagonal(random_weights(&mut r, nv)))
        .unwrap()
        .with_positions(zt.clone(), zv)
        .unwrap();
    let base = op.singular_values().unwrap();
    for k in [0.0, 0.5, 3.7, 40.0] {
        let e = envelope_conjugate(&op, k).unwrap();
        for (x, y) in base.iter().zip(e.singular_values().unwrap()) {
            assert!((x - y).abs() < 1e-12);
        }
        for beta in [0.0, 0.3] {
            assert!((uw_infsup(&op, beta).unwrap().gamma_computed - uw_infsup(&e, beta).unwrap().gamma_computed).abs() < 1e-12);
        }
    }
    let t = EnvelopeTransform::new(zt.clone(), 2.0);
    let w = vec![C::new(1.0, 0.0); nu];
    let u = t.apply(&w);
    for (ui, z) in u.iter().zip(&zt) {
        assert!((ui - C::from_polar(1.0, -2.0 * z)).norm() < 1e-15);
    }
    let no_pos = DiscreteOperator::new(DMatrix::<C>::identity(2, 2), Gram::Diagonal(vec![1.0; 2]), Gram::Diagonal(vec![1.0; 2])).unwrap();
    assert!(envelope_conjugate(&no_pos, 1.0).is_err());
}

#[test]
fn iterative_path_agrees_with_the_square_bound() {
    let n = DENSE_LIMIT + 40;
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let mut a = DMatrix::<C>::zeros(n, n);
    for i in 0..n {
        let m = if i == 0 { 0.05 } else { 0.1 + i as f64 / n as f64 };
        a[(i, i)] = C::from_polar(m, r.gen_range(-3.0..3.0));
    }
    // Permuting rows keeps the singular values |a_ii| but defeats any diagonal shortcut.
    a = DMatrix::from_fn(n, n, |i, j| a[((i + 7) % n, j)]);
    let alpha = 0.05;
    let op = DiscreteOperator::new(a.clone(), Gram::Diagonal(vec![1.0; n]), Gram::Diagonal(vec![1.0; n])).unwrap();
    let reps = uw_infsup_many(&op, &[0.0, 0.01, 1.0]).unwrap();
    for rep in reps {
        assert_relative_eq!(rep.alpha, alpha, max_relative = 1e-8);
        assert_relative_eq!(rep.gamma_computed, gamma_lower_bound(alpha, rep.beta), max_relative = 1e-8);
    }
}

#[test]
fn block_operator_takes_the_weakest_block() {
    let mk = |s: f64| DiscreteOperator::new(DMatrix::<C>::identity(3, 3) * C::new(s, 0.0), Gram::Diagonal(vec![1.0; 3]), Gram::Diagonal(vec![1.0; 3])).unwrap();
    let b = BlockOperator::new(vec![mk(2.0), mk(0.5), mk(1.0)]).unwrap();
    assert_relative_eq!(b.boundedness_below().unwrap(), 0.5, epsilon = 1e-14);
    let r = b.uw_infsup(1.0).unwrap();
    assert_relative_eq!(r.gamma_computed, 0.5 / 1.25f64.sqrt(), max_relative = 1e-12);
    assert!(BlockOperator::new(vec![]).is_err());
    assert!(uw_infsup(&mk(1.0), -1.0).is_err());
}

#[test]
fn perturbation_margin_closed_form() {
    match perturbation_margin(2.0, 4.0, 1.5, 0.01).unwrap() {
        PerturbationOutcome::Stable { margin, effective_constant } => {
            assert_relative_eq!(margin, 1.0 - 2.0 * 4.0 * 1.5 * 0.01, epsilon = 1e-15);
            assert_relative_eq!(effective_constant, 8.0 / margin, epsilon = 1e-13);
        }
        o => panic!("{o:?}"),
    }
    assert!(matches!(perturbation_margin(2.0, 4.0, 1.5, 0.1).unwrap(), PerturbationOutcome::Unstable { .. }));
    // Doubling L halves the admissible contrast when C grows with L.
    let admissible = |l: f64| 1.0 / (l * l * 1.5);
    assert_relative_eq!(admissible(8.0) / admissible(4.0), 0.25, epsilon = 1e-15);
    assert!(perturbation_margin(-1.0, 1.0, 1.0, 0.0).is_err());
    assert!(perturbation_margin(1.0, 1.0, 1.0, -0.1).is_err());
}
