//! Integer-order Bessel functions of the first kind and their zeros.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const SERIES_LIMIT: f64 = 8.0;

/// `J_k(x)` for `x >= 0`.
pub fn bessel_j(k: usize, x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_LIMIT {
        series(k, x)
    } else {
        miller(k, x)
    }
}

/// `J_k'(x)`.
pub fn bessel_j_prime(k: usize, x: f64) -> f64 {
    if k == 0 {
        -bessel_j(1, x)
    } else {
        0.5 * (bessel_j(k - 1, x) - bessel_j(k + 1, x))
    }
}

fn series(k: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for i in 1..=k {
        term *= half / i as f64;
    }
    let q = half * half;
    let mut sum = term;
    let mut m = 0usize;
    loop {
        m += 1;
        term *= -q / (m as f64 * (m + k) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && m > 2 {
            break;
        }
        if m > 500 {
            break;
        }
    }
    sum
}

// Backward recurrence normalized by J_0 + 2 sum J_2m = 1.
fn miller(k: usize, x: f64) -> f64 {
    let top = (k.max(x as usize) + 40 + (x.sqrt() as usize) * 10) | 1;
    let top = top + 1;
    let mut jp1 = 0.0_f64;
    let mut j = 1e-300_f64;
    let mut norm = 0.0_f64;
    let mut want = 0.0_f64;
    for n in (1..=top).rev() {
        let jm1 = (2.0 * n as f64 / x) * j - jp1;
        jp1 = j;
        j = jm1;
        let idx = n - 1;
        if idx == k {
            want = j;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            want *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += j;
    want / norm
}

/// The first `count` positive zeros of `J_k` (`derivative = false`) or
/// `J_k'` (`derivative = true`) in increasing order.
pub fn bessel_zeros(k: usize, count: usize, derivative: bool) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut x = 0.5 * k as f64 + 0.05;
    let step = PI / 4.0;
    let f = |t: f64| if derivative { bessel_j_prime(k, t) } else { bessel_j(k, t) };
    let mut fx = f(x);
    let limit = k as f64 + (count as f64 + 4.0) * PI + 20.0;
    while out.len() < count {
        let xn = x + step;
        if xn > limit {
            return Err(Error::RootBracketing { order: k, root: out.len() + 1 });
        }
        let fxn = f(xn);
        if fx == 0.0 {
            out.push(x);
        } else if fx * fxn < 0.0 {
            out.push(bisect(&f, x, xn));
        }
        x = xn;
        fx = fxn;
    }
    Ok(out)
}

/// Zeros below `x_max`.
pub fn bessel_zeros_below(k: usize, x_max: f64, derivative: bool) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut n = 4;
    loop {
        let z = bessel_zeros(k, n, derivative)?;
        if *z.last().unwrap() >= x_max {
            out.extend(z.into_iter().filter(|&r| r < x_max));
            return Ok(out);
        }
        n *= 2;
    }
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}
