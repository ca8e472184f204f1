//! Bessel function of the first kind, order zero.

use std::f64::consts::{FRAC_PI_4, PI};

/// Argument at which the power series hands over to the Hankel expansion.
pub const SERIES_CUTOFF: f64 = 12.0;

/// `J₀(x)`: power series below [`SERIES_CUTOFF`], Hankel asymptotic
/// expansion above. Both branches are accurate to about `1e-11` at the
/// switch point.
pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_CUTOFF {
        j0_series(x)
    } else {
        j0_asymptotic(x)
    }
}

/// `Σ_k (−1)^k (x²/4)^k / (k!)²`.
pub fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) || k > 200.0 {
            break;
        }
        k += 1.0;
    }
    sum
}

/// `√(2/πx)·(P cos χ − Q sin χ)`, `χ = x − π/4`, with `P`, `Q` summed until
/// their terms stop decreasing.
pub fn j0_asymptotic(x: f64) -> f64 {
    let (p, q) = hankel_pq(x);
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

// a_k = Π_{j≤k} (2j−1)² / (k!·8^k); P takes even k with alternating sign,
// Q the odd ones.
fn hankel_pq(x: f64) -> (f64, f64) {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    let mut k = 1;
    loop {
        let kf = k as f64;
        let next = term * (2.0 * kf - 1.0).powi(2) / (8.0 * kf * x);
        if next.abs() >= term.abs() || next.abs() < 1e-17 {
            break;
        }
        term = next;
        // k mod 4: 1 → −Q, 2 → −P, 3 → +Q, 0 → +P
        match k % 4 {
            1 => q -= term,
            2 => p -= term,
            3 => q += term,
            _ => p += term,
        }
        k += 1;
    }
    (p, q)
}
