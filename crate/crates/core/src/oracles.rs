//! Independent brute-force references used by tests and the benchmark
//! harness.
//!
//! Review checklist: every routine here must stay implemented without sharing
//! code with the operation it checks; that independence is what makes the
//! dual-route acceptance tests meaningful. Costs are exponential or
//! grid-dense, so each routine guards its small-`n` precondition.

use crate::error::{Error, Result};
use crate::dualnorm::ProductDistribution;
use crate::samples::SampleMatrix;
use num_complex::Complex64;

/// Coordinatewise empirical mean, clipped to [0,1]. Baseline estimator for
/// the robust-vs-naive benchmarks.
pub fn naive_mean_estimator(samples: &SampleMatrix) -> Result<ProductDistribution> {
    if samples.n_samples() == 0 {
        return Err(Error::EmptySamples);
    }
    let means = samples
        .column_means()
        .into_iter()
        .map(|m| m.clamp(0.0, 1.0))
        .collect();
    ProductDistribution::new(means)
}

const GRID_MAX_N: usize = 6;

/// Grid-search oracle for the dual norm `sup_{y ∈ T_μ} ⟨y, x⟩`.
///
/// Evaluates the water-filling family over a dense λ grid with golden-section
/// refinement, then cross-checks with projected gradient ascent. Every
/// candidate is projected into the feasible set before scoring, so the result
/// is a valid lower bound on the supremum and converges to it as the
/// resolution grows.
pub fn grid_test_vector_max(x: &[f64], mu: &ProductDistribution, resolution: usize) -> Result<f64> {
    let n = x.len();
    if n != mu.len() {
        return Err(Error::DimensionMismatch(n, mu.len()));
    }
    if n > GRID_MAX_N {
        return Err(Error::TooLarge {
            op: "grid_test_vector_max",
            n,
            max: GRID_MAX_N,
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input vector"));
    }

    // Feasible value of the clipped family at a given λ ≥ 0 (λ = 0 means
    // "fully clipped"), normalizing into the ball if needed.
    let eval = |lambda: f64| -> f64 {
        let mut y = vec![0.0f64; n];
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            y[i] = if mu.mean(i) == 0.0 || lambda == 0.0 {
                x[i].signum()
            } else {
                x[i].signum() * (x[i].abs() / (2.0 * lambda * mu.mean(i))).min(1.0)
            };
        }
        let quad: f64 = y.iter().zip(mu.means()).map(|(yi, mi)| mi * yi * yi).sum();
        if quad > 1.0 {
            let s = (1.0 / quad).sqrt();
            for (yi, mi) in y.iter_mut().zip(mu.means()) {
                if *mi > 0.0 {
                    *yi *= s;
                }
            }
        }
        y.iter().zip(x).map(|(yi, xi)| yi * xi).sum()
    };

    // The clip pattern of the candidate family only changes at the
    // per-coordinate thresholds t_i = |x_i|/(2 mu_i). Between consecutive
    // thresholds the normalized value has the form
    // (A + B/lam)/max(1, sqrt(C + D/lam^2)) with a single stationary point,
    // so a coarse scan plus golden-section inside every segment reaches the
    // global maximum to full precision. lam = 0 covers the fully clipped
    // solution.
    let mut thresholds: Vec<f64> = (0..n)
        .filter(|&i| x[i] != 0.0 && mu.mean(i) > 0.0)
        .map(|i| x[i].abs() / (2.0 * mu.mean(i)))
        .collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut best = eval(0.0);
    let mut best_lambda = 0.0;
    if let Some(&t_max) = thresholds.last() {
        let q: f64 = (0..n)
            .filter(|&i| x[i] != 0.0 && mu.mean(i) > 0.0)
            .map(|i| x[i] * x[i] / mu.mean(i))
            .sum();
        let upper = (2.0 * t_max).max(q.sqrt());
        let mut endpoints = thresholds.clone();
        endpoints.push(upper);
        let per_segment = (resolution / endpoints.len().max(1)).clamp(8, 512);
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut left = 0.0f64;
        for &right in &endpoints {
            let mut seg_best = f64::NEG_INFINITY;
            let mut seg_arg = left;
            for k in 0..=per_segment {
                let lambda = left + (right - left) * k as f64 / per_segment as f64;
                let v = eval(lambda);
                if v > seg_best {
                    seg_best = v;
                    seg_arg = lambda;
                }
            }
            let (mut lo, mut hi) = (left, right);
            for _ in 0..160 {
                let m1 = hi - phi * (hi - lo);
                let m2 = lo + phi * (hi - lo);
                if eval(m1) > eval(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let refined = 0.5 * (lo + hi);
            for candidate in [seg_arg, refined] {
                let v = eval(candidate);
                if v > best {
                    best = v;
                    best_lambda = candidate;
                }
            }
            left = right;
        }
    }

    // Projected gradient ascent cross-check: the objective is linear, so step
    // toward x and project back onto the box and the weighted ball.
    let mut y: Vec<f64> = {
        let lambda = best_lambda;
        (0..n)
            .map(|i| {
                if x[i] == 0.0 {
                    0.0
                } else if mu.mean(i) == 0.0 || lambda == 0.0 {
                    x[i].signum()
                } else {
                    x[i].signum() * (x[i].abs() / (2.0 * lambda * mu.mean(i))).min(1.0)
                }
            })
            .collect()
    };
    let mut step = 0.5;
    for it in 0..600 {
        let mut cand: Vec<f64> = y.iter().zip(x).map(|(yi, xi)| yi + step * xi).collect();
        for v in cand.iter_mut() {
            *v = v.clamp(-1.0, 1.0);
        }
        let quad: f64 = cand.iter().zip(mu.means()).map(|(v, m)| m * v * v).sum();
        if quad > 1.0 {
            let s = (1.0 / quad).sqrt();
            for (v, m) in cand.iter_mut().zip(mu.means()) {
                if *m > 0.0 {
                    *v *= s;
                }
            }
        }
        let v: f64 = cand.iter().zip(x).map(|(yi, xi)| yi * xi).sum();
        if v > best {
            best = v;
            y = cand;
        }
        if it % 100 == 99 {
            step *= 0.6;
        }
    }
    Ok(best)
}

/// A 2×2 complex matrix in row-major order.
pub type Mat2 = [[Complex64; 2]; 2];

fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn mat2_trace(a: &Mat2) -> Complex64 {
    a[0][0] + a[1][1]
}

fn mat2_det(a: &Mat2) -> Complex64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

fn validate_density(m: &Mat2, name: &'static str) -> Result<()> {
    let tol = 1e-10;
    if (m[0][1] - m[1][0].conj()).norm() > tol
        || m[0][0].im.abs() > tol
        || m[1][1].im.abs() > tol
    {
        return Err(Error::InvalidState(format!("{name} is not Hermitian")));
    }
    let tr = mat2_trace(m).re;
    if (tr - 1.0).abs() > tol {
        return Err(Error::InvalidState(format!("{name} has trace {tr}, expected 1")));
    }
    let det = mat2_det(m).re;
    if m[0][0].re < -1e-12 || m[1][1].re < -1e-12 || det < -tol {
        return Err(Error::InvalidState(format!("{name} is not PSD (det = {det:.3e})")));
    }
    Ok(())
}

/// Hermitian PSD square root of a 2×2 matrix via its closed-form
/// eigendecomposition.
fn mat2_sqrt_psd(a: &Mat2) -> Mat2 {
    let tr = mat2_trace(a).re;
    let det = mat2_det(a).re.max(0.0);
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let l1 = ((tr + disc) / 2.0).max(0.0);
    let l2 = ((tr - disc) / 2.0).max(0.0);
    let id = [
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ];
    if disc < 1e-14 {
        // scalar matrix
        let s = l1.sqrt();
        return [
            [id[0][0] * s, id[0][1]],
            [id[1][0], id[1][1] * s],
        ];
    }
    // P1 = (A - l2 I)/(l1 - l2); sqrt(A) = sqrt(l1) P1 + sqrt(l2) (I - P1)
    let mut p1 = *a;
    p1[0][0] -= Complex64::new(l2, 0.0);
    p1[1][1] -= Complex64::new(l2, 0.0);
    let inv = 1.0 / (l1 - l2);
    let (s1, s2) = (l1.sqrt(), l2.sqrt());
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let p = p1[i][j] * inv;
            let q = id[i][j] - p;
            out[i][j] = p * s1 + q * s2;
        }
    }
    out
}

/// Fidelity `tr(√(√ρ σ √ρ))²` computed through explicit 2×2
/// eigendecompositions. Oracle for the Bloch-vector closed form.
pub fn dense_fidelity(rho: &Mat2, sigma: &Mat2) -> Result<f64> {
    validate_density(rho, "rho")?;
    validate_density(sigma, "sigma")?;
    let sr = mat2_sqrt_psd(rho);
    let inner = mat2_mul(&mat2_mul(&sr, sigma), &sr);
    let tr = mat2_trace(&inner).re;
    let det = mat2_det(&inner).re.max(0.0);
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let l1 = ((tr + disc) / 2.0).max(0.0);
    let l2 = ((tr - disc) / 2.0).max(0.0);
    let root = l1.sqrt() + l2.sqrt();
    Ok((root * root).clamp(0.0, 1.0 + 1e-9).min(1.0))
}

/// Density matrix of a single qubit from its Bloch vector.
pub fn mat2_from_bloch(c: [f64; 3]) -> Mat2 {
    let half = 0.5;
    [
        [
            Complex64::new(half * (1.0 + c[2]), 0.0),
            Complex64::new(half * c[0], -half * c[1]),
        ],
        [
            Complex64::new(half * c[0], half * c[1]),
            Complex64::new(half * (1.0 - c[2]), 0.0),
        ],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn naive_mean_single_sample() {
        let mut m = SampleMatrix::zeros(1, 3);
        m.set(0, 1, true);
        let est = naive_mean_estimator(&m).unwrap();
        assert_eq!(est.means(), &[0.0, 1.0, 0.0]);
        assert!(naive_mean_estimator(&SampleMatrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn grid_oracle_edge_cases() {
        let mu = ProductDistribution::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(grid_test_vector_max(&[0.0, 0.0], &mu, 100).unwrap(), 0.0);
        let v = grid_test_vector_max(&[1.0, 0.0], &mu, 400).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-9);
        let big = ProductDistribution::new(vec![0.5; 7]).unwrap();
        assert!(grid_test_vector_max(&[0.0; 7], &big, 10).is_err());
    }

    #[test]
    fn dense_fidelity_matches_diagonal_dominance_closed_form() {
        // rho = [[0.7, 0.1], [0.1, 0.3]] against its diagonal part:
        // F = 1 − 2γ + 2√(γ² − γt²) with γ = 0.21, t = 0.1 → 0.98987803…,
        // which dominates the 1 − 2t² = 0.98 floor
        let rho = [
            [Complex64::new(0.7, 0.0), Complex64::new(0.1, 0.0)],
            [Complex64::new(0.1, 0.0), Complex64::new(0.3, 0.0)],
        ];
        let diag = [
            [Complex64::new(0.7, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(0.3, 0.0)],
        ];
        let f = dense_fidelity(&rho, &diag).unwrap();
        let gamma: f64 = 0.21;
        let closed = 1.0 - 2.0 * gamma + 2.0 * (gamma * gamma - gamma * 0.01).sqrt();
        assert_relative_eq!(f, closed, epsilon = 1e-12);
        assert_relative_eq!(f, 0.9898780306383839, epsilon = 1e-12);
        assert!(f >= 0.98);
    }

    #[test]
    fn dense_fidelity_basics() {
        // identical pure states
        let pure = mat2_from_bloch([0.0, 0.0, 1.0]);
        assert_relative_eq!(dense_fidelity(&pure, &pure).unwrap(), 1.0, epsilon = 1e-12);
        // orthogonal pure states
        let anti = mat2_from_bloch([0.0, 0.0, -1.0]);
        assert!(dense_fidelity(&pure, &anti).unwrap() < 1e-12);
        // maximally mixed vs pure: F = 1/2
        let mixed = mat2_from_bloch([0.0, 0.0, 0.0]);
        assert_relative_eq!(dense_fidelity(&mixed, &pure).unwrap(), 0.5, epsilon = 1e-12);
        // invalid state rejected
        let mut bad = pure;
        bad[0][0] = Complex64::new(0.9, 0.0);
        assert!(dense_fidelity(&bad, &pure).is_err());
    }
}
