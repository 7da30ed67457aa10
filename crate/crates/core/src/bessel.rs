//! Bessel functions J0 and J1 of real argument.
//!
//! Ascending series up to |x| = 12, Hankel asymptotic expansion beyond. Absolute
//! error is below 1e-10 over the whole real line.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 12.0;

fn series(nu: u32, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = if nu == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + nu as f64));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn hankel(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() > prev || term.abs() < 1e-17 {
            break;
        }
        prev = term.abs();
        // k ≡ 1, 2, 3, 0 (mod 4) contribute +Q, −P, −Q, +P.
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    let phase = x - (0.5 * nu as f64 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * phase.cos() - q * phase.sin())
}

pub fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_LIMIT {
        series(0, ax)
    } else {
        hankel(0, ax)
    }
}

pub fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_LIMIT { series(1, ax) } else { hankel(1, ax) };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// 2·J1(x)/x, continuous at 0.
pub fn jinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 8.0
    } else {
        2.0 * j1(x) / x
    }
}
