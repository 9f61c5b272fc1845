//! Small numeric helpers: log-gamma, log-space binomial pmf, printf-style
//! `%g` float formatting for the CSV writer, and symmetric-matrix utilities.

use nalgebra::DMatrix;

/// Natural log of the gamma function, Lanczos approximation (g = 7, n = 9).
/// Accurate to ~1e-14 relative for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    assert!(x > 0.0, "ln_gamma requires x > 0, got {x}");
    if x < 0.5 {
        // reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i as f64) + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// log of the binomial coefficient C(n, k).
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// log pmf of Bin(n, p) at s, valid for p in [0, 1] including the endpoints.
pub fn ln_binomial_pmf(n: u64, p: f64, s: u64) -> f64 {
    debug_assert!(s <= n);
    if p <= 0.0 {
        return if s == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if s == n { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_binomial(n, s) + (s as f64) * p.ln() + ((n - s) as f64) * (1.0 - p).ln()
}

/// Format a float like C's `%.12g`: 12 significant digits, scientific notation
/// outside `[1e-4, 1e12)`, trailing zeros stripped.
pub fn format_g12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let exp = v.abs().log10().floor() as i32;
    if exp < -4 || exp >= 12 {
        let s = format!("{:.*e}", 11, v);
        // normalize exponent formatting: "1.5e4" style with trailing zeros trimmed
        let (mantissa, exponent) = s.split_once('e').expect("exponential format");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        let e: i32 = exponent.parse().expect("exponent");
        format!("{mantissa}e{:+03}", e)
    } else {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}

/// Max |A - Aᵀ| entry.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// (A + Aᵀ)/2, guarding against float drift in iterative solvers.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}
