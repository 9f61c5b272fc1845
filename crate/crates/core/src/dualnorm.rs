//! Geometry of the certificate sets and the distances they witness.
//!
//! The test-vector set for a base mean vector μ is
//! `T_μ = { y : ‖y‖_∞ ≤ 1, Σ_i μ_i y_i² ≤ 1 }`; its dual norm
//! `‖x‖_μ = sup_{y ∈ T_μ} ⟨y, x⟩` tightly characterizes the total variation
//! distance between binary product distributions with means ≤ 2/3. The PSD
//! relaxation `ST_μ` lifts the same constraints to matrices so that a linear
//! objective can be maximized by convex programming (see [`crate::convexopt`]).

use crate::error::{Error, Result};
use crate::mathutil::asymmetry;
use nalgebra::DMatrix;

/// Validator slack for the quadratic/box constraints of the certificate set.
pub const TOL_FEAS: f64 = 1e-9;
/// Absolute tolerance on the minimum eigenvalue of a certificate matrix.
pub const TOL_PSD: f64 = 1e-8;

/// A binary product distribution, parameterized by its mean vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDistribution {
    means: Vec<f64>,
}

impl ProductDistribution {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        for &m in &means {
            if !m.is_finite() {
                return Err(Error::NonFinite("mean"));
            }
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::OutOfRange {
                    name: "mean",
                    value: m,
                    range: "[0, 1]",
                });
            }
        }
        Ok(ProductDistribution { means })
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.means[i]
    }
}

/// A vector in `T_μ`, kept together with the base distribution defining
/// feasibility.
#[derive(Debug, Clone)]
pub struct TestVector {
    pub y: Vec<f64>,
    pub base: ProductDistribution,
}

impl TestVector {
    pub fn new(y: Vec<f64>, base: ProductDistribution) -> Result<Self> {
        if y.len() != base.len() {
            return Err(Error::DimensionMismatch(y.len(), base.len()));
        }
        let tv = TestVector { y, base };
        tv.validate()?;
        Ok(tv)
    }

    pub fn validate(&self) -> Result<()> {
        let mut quad = 0.0;
        for (yi, mi) in self.y.iter().zip(self.base.means()) {
            if !yi.is_finite() {
                return Err(Error::NonFinite("test vector entry"));
            }
            if yi.abs() > 1.0 + TOL_FEAS {
                return Err(Error::OutOfRange {
                    name: "|y_i|",
                    value: yi.abs(),
                    range: "[0, 1]",
                });
            }
            quad += mi * yi * yi;
        }
        if quad > 1.0 + TOL_FEAS {
            return Err(Error::OutOfRange {
                name: "sum mu_i y_i^2",
                value: quad,
                range: "[0, 1]",
            });
        }
        Ok(())
    }
}

/// Evaluations of the five certificate-set constraints at a symmetric matrix.
#[derive(Debug, Clone, Copy)]
pub struct CertificateChecks {
    pub min_eig: f64,
    pub max_abs_entry: f64,
    pub weighted_trace: f64,
    pub weighted_frobenius_sq: f64,
    pub row_sup_sum: f64,
}

impl CertificateChecks {
    pub fn feasible(&self) -> bool {
        self.min_eig >= -TOL_PSD
            && self.max_abs_entry <= 1.0 + TOL_FEAS
            && self.weighted_trace <= 1.0 + TOL_FEAS
            && self.weighted_frobenius_sq <= 1.0 + TOL_FEAS
            && self.row_sup_sum <= 1.0 + TOL_FEAS
    }
}

/// Evaluate all certificate-set constraints. The matrix must be symmetric.
pub fn certificate_checks(m: &DMatrix<f64>, mu: &ProductDistribution) -> Result<CertificateChecks> {
    let n = mu.len();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(m.nrows(), n));
    }
    let asym = asymmetry(m);
    if asym > 1e-9 {
        return Err(Error::NotSymmetric(asym));
    }
    let min_eig = if n == 0 {
        0.0
    } else {
        let eig = m.clone().symmetric_eigen();
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let mut max_abs_entry = 0.0f64;
    let mut weighted_trace = 0.0;
    let mut weighted_frobenius_sq = 0.0;
    let mut row_sup_sum = 0.0;
    for i in 0..n {
        let mut row_sup = 0.0f64;
        for j in 0..n {
            let v = m[(i, j)];
            max_abs_entry = max_abs_entry.max(v.abs());
            weighted_frobenius_sq += v * v * mu.mean(i) * mu.mean(j);
            row_sup = row_sup.max(v * v);
        }
        weighted_trace += m[(i, i)] * mu.mean(i);
        row_sup_sum += mu.mean(i) * row_sup;
    }
    Ok(CertificateChecks {
        min_eig,
        max_abs_entry,
        weighted_trace,
        weighted_frobenius_sq,
        row_sup_sum,
    })
}

/// A symmetric PSD matrix in the certificate set `ST_μ`.
#[derive(Debug, Clone)]
pub struct CertificateMatrix {
    pub m: DMatrix<f64>,
    pub base: ProductDistribution,
}

impl CertificateMatrix {
    pub fn new(m: DMatrix<f64>, base: ProductDistribution) -> Result<Self> {
        let checks = certificate_checks(&m, &base)?;
        if !checks.feasible() {
            return Err(Error::OutOfRange {
                name: "certificate matrix constraint",
                value: worst_violation(&checks),
                range: "feasible ST_mu",
            });
        }
        Ok(CertificateMatrix { m, base })
    }
}

fn worst_violation(c: &CertificateChecks) -> f64 {
    (-c.min_eig)
        .max(c.max_abs_entry - 1.0)
        .max(c.weighted_trace - 1.0)
        .max(c.weighted_frobenius_sq - 1.0)
        .max(c.row_sup_sum - 1.0)
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input vector"));
    }
    Ok(())
}

/// Exact dual norm `‖x‖_μ = sup_{y ∈ T_μ} ⟨y, x⟩`, with the attaining witness.
///
/// The optimum has the water-filling form `y_i(λ) = sign(x_i) · min(1,
/// |x_i|/(2λμ_i))`. Rather than bisecting on λ, the segment of λ in which each
/// coordinate clips is walked explicitly, so the returned value is exact up to
/// rounding. Coordinates with μ_i = 0 contribute `sign(x_i)` outright (the
/// quadratic constraint is vacuous there), and x_i = 0 coordinates get y_i = 0.
pub fn vector_dual_norm(x: &[f64], mu: &ProductDistribution) -> Result<(f64, TestVector)> {
    if x.len() != mu.len() {
        return Err(Error::DimensionMismatch(x.len(), mu.len()));
    }
    check_finite(x)?;
    let n = x.len();
    let mut y = vec![0.0f64; n];
    // Coordinates that participate in the water-filling: x_i != 0 and mu_i > 0.
    let mut active: Vec<usize> = Vec::new();
    let mut value_free = 0.0; // contribution of mu_i = 0 coordinates
    for i in 0..n {
        if x[i] == 0.0 {
            continue;
        }
        if mu.mean(i) == 0.0 {
            y[i] = x[i].signum();
            value_free += x[i].abs();
        } else {
            active.push(i);
        }
    }
    let budget_all: f64 = active.iter().map(|&i| mu.mean(i)).sum();
    if budget_all <= 1.0 {
        // all-clipped vector is feasible: λ = 0
        let mut value = value_free;
        for &i in &active {
            y[i] = x[i].signum();
            value += x[i].abs();
        }
        let witness = TestVector::new(y, mu.clone())?;
        return Ok((value, witness));
    }
    // Sort active coordinates by clip threshold t_i = |x_i| / (2 mu_i), descending.
    let mut order = active.clone();
    order.sort_by(|&a, &b| {
        let ta = x[a].abs() / (2.0 * mu.mean(a));
        let tb = x[b].abs() / (2.0 * mu.mean(b));
        tb.total_cmp(&ta).then(a.cmp(&b))
    });
    let q_all: f64 = order.iter().map(|&i| x[i] * x[i] / mu.mean(i)).sum();
    // Walk segments: with the top m coordinates clipped, the stationarity
    // condition is C_m + Q_m / (4λ²) = 1 for λ in (t_(m+1), t_(m)].
    let mut clipped_budget = 0.0;
    let mut q_free = q_all;
    let mut lambda = 0.0;
    let mut n_clipped = order.len();
    for m in 0..=order.len() {
        if clipped_budget < 1.0 && q_free >= 0.0 {
            let cand = (q_free / (4.0 * (1.0 - clipped_budget))).sqrt();
            let upper = if m == 0 {
                f64::INFINITY
            } else {
                let i = order[m - 1];
                x[i].abs() / (2.0 * mu.mean(i))
            };
            let lower = if m == order.len() {
                0.0
            } else {
                let i = order[m];
                x[i].abs() / (2.0 * mu.mean(i))
            };
            if cand <= upper && cand >= lower {
                lambda = cand;
                n_clipped = m;
                break;
            }
        }
        if m < order.len() {
            let i = order[m];
            clipped_budget += mu.mean(i);
            q_free -= x[i] * x[i] / mu.mean(i);
        }
    }
    let mut value = value_free;
    for (rank, &i) in order.iter().enumerate() {
        let yi = if rank < n_clipped {
            1.0
        } else {
            (x[i].abs() / (2.0 * lambda * mu.mean(i))).min(1.0)
        };
        y[i] = x[i].signum() * yi;
        value += x[i].abs() * yi;
    }
    // Guard against rounding pushing the witness just outside the ball.
    let quad: f64 = y
        .iter()
        .zip(mu.means())
        .map(|(yi, mi)| mi * yi * yi)
        .sum();
    if quad > 1.0 {
        let scale = (1.0 / quad).sqrt();
        for (i, yi) in y.iter_mut().enumerate() {
            if mu.mean(i) > 0.0 {
                *yi *= scale;
            }
        }
        value = y.iter().zip(x).map(|(yi, xi)| yi * xi).sum();
    }
    let witness = TestVector::new(y, mu.clone())?;
    Ok((value, witness))
}

/// Squared Hellinger distance between Bernoulli(μ) and Bernoulli(ν):
/// `(√μ−√ν)² + (√(1−μ)−√(1−ν))²`.
pub fn hellinger_sq_bernoulli(mu: f64, nu: f64) -> Result<f64> {
    for (name, v) in [("mu", mu), ("nu", nu)] {
        if !(0.0..=1.0).contains(&v) || !v.is_finite() {
            return Err(Error::OutOfRange {
                name,
                value: v,
                range: "[0, 1]",
            });
        }
    }
    let a = mu.sqrt() - nu.sqrt();
    let b = (1.0 - mu).sqrt() - (1.0 - nu).sqrt();
    Ok(a * a + b * b)
}

const TV_EXACT_MAX_N: usize = 20;

/// Exact total variation distance between two binary product distributions by
/// enumerating all 2^n atoms. Reference oracle; n ≤ 20.
pub fn tv_exact(p: &ProductDistribution, q: &ProductDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    if p.len() > TV_EXACT_MAX_N {
        return Err(Error::TooLarge {
            op: "tv_exact",
            n: p.len(),
            max: TV_EXACT_MAX_N,
        });
    }
    fn walk(p: &[f64], q: &[f64], pp: f64, qq: f64) -> f64 {
        if p.is_empty() {
            return (pp - qq).abs();
        }
        if pp == 0.0 && qq == 0.0 {
            return 0.0;
        }
        walk(&p[1..], &q[1..], pp * p[0], qq * q[0])
            + walk(&p[1..], &q[1..], pp * (1.0 - p[0]), qq * (1.0 - q[0]))
    }
    Ok(0.5 * walk(p.means(), q.means(), 1.0, 1.0))
}

/// Certified upper bound on TV via Hellinger tensorization:
/// `min(1, √2 · √(Σ_i H²(Bern(p_i), Bern(q_i))))`. Usable at any n.
pub fn tv_upper_bound_product(p: &ProductDistribution, q: &ProductDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    let mut h2 = 0.0;
    for i in 0..p.len() {
        h2 += hellinger_sq_bernoulli(p.mean(i), q.mean(i))?;
    }
    Ok((std::f64::consts::SQRT_2 * h2.sqrt()).min(1.0))
}

/// The two-block characterization of TV distance between product
/// distributions with p_i ≤ 2/3: sort coordinates by |δ_i|/p_i descending,
/// pack the prefix while Σ p_i ≤ 1 into an l1 block, and score the tail with
/// the χ²-style sum. The result is Θ(‖p − q‖_p) and hence Θ(TV) up to a
/// universal constant.
pub fn tv_characterization(p: &ProductDistribution, q: &ProductDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    for &m in p.means() {
        if m > 2.0 / 3.0 + 1e-12 {
            return Err(Error::OutOfRange {
                name: "p mean",
                value: m,
                range: "[0, 2/3]",
            });
        }
    }
    let n = p.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let ratio = |i: usize| -> f64 {
        let d = (p.mean(i) - q.mean(i)).abs();
        if d == 0.0 {
            0.0
        } else if p.mean(i) == 0.0 {
            f64::INFINITY
        } else {
            d / p.mean(i)
        }
    };
    idx.sort_by(|&a, &b| ratio(b).total_cmp(&ratio(a)).then(a.cmp(&b)));
    let mut budget = 0.0;
    let mut l1 = 0.0;
    let mut chi2 = 0.0;
    let mut in_prefix = true;
    for &i in &idx {
        let delta = p.mean(i) - q.mean(i);
        if in_prefix && budget + p.mean(i) <= 1.0 {
            budget += p.mean(i);
            l1 += delta.abs();
        } else {
            in_prefix = false;
            if delta != 0.0 {
                chi2 += delta * delta / p.mean(i);
            }
        }
    }
    Ok(l1.max(chi2.sqrt()))
}

const BRUTEFORCE_MAX_N: usize = 4;

/// Brute-force reference for `sup_{M ∈ ST_μ} |⟨A, M⟩|`: dense rank-one grid
/// plus randomized PSD candidates, each rescaled into feasibility, followed by
/// local polish. Exponential in spirit; n ≤ 4. Used only to validate the
/// convex solver — the search path is deliberately independent of it.
pub fn matrix_dual_norm_bruteforce(a: &DMatrix<f64>, mu: &ProductDistribution) -> Result<f64> {
    use rand::Rng;
    use rand::SeedableRng;

    let n = mu.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch(a.nrows(), n));
    }
    if n > BRUTEFORCE_MAX_N {
        return Err(Error::TooLarge {
            op: "matrix_dual_norm_bruteforce",
            n,
            max: BRUTEFORCE_MAX_N,
        });
    }
    let asym = asymmetry(a);
    if asym > 1e-9 {
        return Err(Error::NotSymmetric(asym));
    }
    if n == 0 {
        return Ok(0.0);
    }

    // Largest α so that αM (already PSD) lies in ST_μ.
    let feasible_scale = |m: &DMatrix<f64>| -> f64 {
        let mut box_max = 0.0f64;
        let mut trace = 0.0;
        let mut frob = 0.0;
        let mut rowsup = 0.0;
        for i in 0..n {
            let mut sup = 0.0f64;
            for j in 0..n {
                let v = m[(i, j)];
                box_max = box_max.max(v.abs());
                frob += v * v * mu.mean(i) * mu.mean(j);
                sup = sup.max(v * v);
            }
            trace += m[(i, i)] * mu.mean(i).max(0.0);
            rowsup += mu.mean(i) * sup;
        }
        let mut alpha = 1.0f64;
        if box_max > 0.0 {
            alpha = alpha.min(1.0 / box_max);
        }
        if trace > 0.0 {
            alpha = alpha.min(1.0 / trace);
        }
        if frob > 0.0 {
            alpha = alpha.min(1.0 / frob.sqrt());
        }
        if rowsup > 0.0 {
            alpha = alpha.min(1.0 / rowsup.sqrt());
        }
        alpha * (1.0 - 1e-12)
    };

    let score = |m: &DMatrix<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += a[(i, j)] * m[(i, j)];
            }
        }
        s.abs()
    };

    let clip_to_t = |y: &mut [f64]| {
        for v in y.iter_mut() {
            *v = v.clamp(-1.0, 1.0);
        }
        let quad: f64 = y.iter().zip(mu.means()).map(|(v, m)| m * v * v).sum();
        if quad > 1.0 {
            let s = (1.0 / quad).sqrt();
            for v in y.iter_mut() {
                *v *= s;
            }
        }
    };

    let rank_one = |y: &[f64]| -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| y[i] * y[j])
    };

    let mut best = 0.0f64;
    let mut best_m = DMatrix::<f64>::zeros(n, n);

    // Dense sign/magnitude grid over rank-one candidates.
    let levels: &[f64] = &[-1.0, -0.6, -0.3, -0.1, 0.0, 0.1, 0.3, 0.6, 1.0];
    let total = levels.len().pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut y = vec![0.0f64; n];
        for yi in y.iter_mut() {
            *yi = levels[c % levels.len()];
            c /= levels.len();
        }
        clip_to_t(&mut y);
        let m = rank_one(&y);
        let s = score(&m);
        if s > best {
            best = s;
            best_m = m;
        }
    }

    // Random PSD candidates, rescaled into the set.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x0b5e55ed);
    for _ in 0..400 {
        let b = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let mut m = &b * b.transpose();
        let alpha = feasible_scale(&m);
        m *= alpha;
        let s = score(&m);
        if s > best {
            best = s;
            best_m = m;
        }
    }

    // Local polish: random symmetric perturbations with PSD repair by
    // Jacobi eigenvalue clipping, re-entering the set by rescaling.
    let mut step = 0.25;
    for it in 0..4000 {
        let mut cand = best_m.clone();
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let d = (rng.random::<f64>() * 2.0 - 1.0) * step;
        cand[(i, j)] += d;
        cand[(j, i)] = cand[(i, j)];
        let (vals, vecs) = jacobi_eigen(&cand);
        let mut rebuilt = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let lam = vals[k].max(0.0);
            if lam > 0.0 {
                let col = vecs.column(k);
                for r in 0..n {
                    for c in 0..n {
                        rebuilt[(r, c)] += lam * col[r] * col[c];
                    }
                }
            }
        }
        let alpha = feasible_scale(&rebuilt);
        rebuilt *= alpha;
        let s = score(&rebuilt);
        if s > best {
            best = s;
            best_m = rebuilt;
        }
        if it % 500 == 499 {
            step *= 0.7;
        }
    }
    let _ = best_m;
    Ok(best)
}

/// Plain Jacobi rotation eigensolver for small symmetric matrices. Kept local
/// so the brute-force path does not share an eigensolver with the projected
/// solver it validates.
pub(crate) fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let mut off = 0.0;
        let (mut p, mut q) = (0, 1);
        for i in 0..n {
            for j in (i + 1)..n {
                if m[(i, j)].abs() > off {
                    off = m[(i, j)].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if off < 1e-13 {
            break;
        }
        let theta = 0.5 * (2.0 * m[(p, q)]).atan2(m[(q, q)] - m[(p, p)]);
        let (s, c) = theta.sin_cos();
        let mut rot = DMatrix::<f64>::identity(n, n);
        rot[(p, p)] = c;
        rot[(q, q)] = c;
        rot[(p, q)] = s;
        rot[(q, p)] = -s;
        m = rot.transpose() * m * &rot;
        v *= rot;
    }
    let vals = (0..n).map(|i| m[(i, i)]).collect();
    (vals, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pd(means: &[f64]) -> ProductDistribution {
        ProductDistribution::new(means.to_vec()).unwrap()
    }

    #[test]
    fn dual_norm_single_coordinate_clips() {
        let mu = pd(&[0.5, 0.5]);
        let (value, witness) = vector_dual_norm(&[1.0, 0.0], &mu).unwrap();
        assert_relative_eq!(value, 1.0, max_relative = 1e-12);
        assert_relative_eq!(witness.y[0], 1.0, max_relative = 1e-12);
        assert_eq!(witness.y[1], 0.0);
    }

    #[test]
    fn dual_norm_zero_vector() {
        let mu = pd(&[0.3, 0.6, 0.1]);
        let (value, _) = vector_dual_norm(&[0.0, 0.0, 0.0], &mu).unwrap();
        assert_eq!(value, 0.0);
    }

    #[test]
    fn dual_norm_zero_mean_coordinate_is_free() {
        let mu = pd(&[0.0, 1.0]);
        let (value, witness) = vector_dual_norm(&[-2.0, 1.0], &mu).unwrap();
        // y_0 = sign(-2) = -1 free of budget; y_1 spends the whole budget.
        assert_relative_eq!(value, 3.0, max_relative = 1e-12);
        assert_relative_eq!(witness.y[0], -1.0, max_relative = 1e-12);
    }

    #[test]
    fn dual_norm_witness_attains_value() {
        let mu = pd(&[0.5, 0.01, 0.64]);
        let x = [0.3, 0.4, 0.1];
        let (value, witness) = vector_dual_norm(&x, &mu).unwrap();
        let attained: f64 = witness.y.iter().zip(&x).map(|(y, x)| y * x).sum();
        assert_relative_eq!(value, attained, max_relative = 1e-12);
        witness.validate().unwrap();
        // cross-check against the independent grid oracle
        let oracle = crate::oracles::grid_test_vector_max(&x, &mu, 2000).unwrap();
        assert_relative_eq!(value, oracle, max_relative = 1e-6);
    }

    #[test]
    fn dual_norm_errors() {
        let mu = pd(&[0.5]);
        assert!(vector_dual_norm(&[1.0, 2.0], &mu).is_err());
        assert!(vector_dual_norm(&[f64::NAN], &mu).is_err());
    }

    #[test]
    fn hellinger_examples() {
        assert_eq!(hellinger_sq_bernoulli(0.5, 0.5).unwrap(), 0.0);
        assert_relative_eq!(hellinger_sq_bernoulli(0.0, 1.0).unwrap(), 2.0);
        // 0.01 + (√0.99 − √0.96)² evaluated directly
        let h = hellinger_sq_bernoulli(0.01, 0.04).unwrap();
        assert_relative_eq!(h, 0.010230782887369517, max_relative = 1e-9);
        // Eq-style bound: H² ≤ 4 (μ−ν)² / min(μ, 1−μ)
        assert!(h <= 4.0 * 0.0009 / 0.01);
        assert!(hellinger_sq_bernoulli(-0.1, 0.5).is_err());
    }

    #[test]
    fn tv_exact_basics() {
        let p = pd(&[0.5, 0.5]);
        assert_eq!(tv_exact(&p, &p).unwrap(), 0.0);
        let p1 = pd(&[0.0]);
        let q1 = pd(&[1.0]);
        assert_relative_eq!(tv_exact(&p1, &q1).unwrap(), 1.0);
        // n=2 marginal difference on the second coordinate only
        let q = pd(&[0.5, 0.9]);
        assert_relative_eq!(tv_exact(&p, &q).unwrap(), 0.4, max_relative = 1e-12);
        let big = pd(&vec![0.5; 21]);
        assert!(tv_exact(&big, &big).is_err());
    }

    #[test]
    fn tv_upper_bound_dominates_exact_n1() {
        let p = pd(&[0.3]);
        let q = pd(&[0.7]);
        let bound = tv_upper_bound_product(&p, &q).unwrap();
        let exact = tv_exact(&p, &q).unwrap();
        assert!(bound >= exact);
        assert_eq!(tv_upper_bound_product(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn tv_characterization_basics() {
        let p = pd(&[0.2, 0.6]);
        assert_eq!(tv_characterization(&p, &p).unwrap(), 0.0);
        let q = pd(&[0.9, 0.6]);
        assert!(tv_characterization(&q, &p).is_err()); // precondition p <= 2/3
    }

    #[test]
    fn certificate_set_contains_rank_one_of_test_vectors() {
        // closure property: y in T_mu implies y yᵀ in ST_mu
        let mu = pd(&[0.4, 0.2, 0.1]);
        let y = vec![1.0, -0.5, 1.0];
        let tv = TestVector::new(y.clone(), mu.clone()).unwrap();
        tv.validate().unwrap();
        let m = DMatrix::from_fn(3, 3, |i, j| y[i] * y[j]);
        CertificateMatrix::new(m, mu).unwrap();
    }

    #[test]
    fn bruteforce_zero_matrix() {
        let mu = pd(&[0.3, 0.3, 0.3]);
        let a = DMatrix::zeros(3, 3);
        assert_eq!(matrix_dual_norm_bruteforce(&a, &mu).unwrap(), 0.0);
    }

    #[test]
    fn bruteforce_dominates_rank_one_witness() {
        let mu = pd(&[0.3, 0.2, 0.25]);
        let y = vec![1.0, 0.8, -1.0];
        let tv = TestVector::new(y.clone(), mu.clone()).unwrap();
        tv.validate().unwrap();
        let a = DMatrix::from_fn(3, 3, |i, j| y[i] * y[j]);
        let v = matrix_dual_norm_bruteforce(&a, &mu).unwrap();
        let yay: f64 = (0..3)
            .map(|i| (0..3).map(|j| y[i] * a[(i, j)] * y[j]).sum::<f64>())
            .sum();
        assert!(v >= yay - 1e-9, "bruteforce {v} < witness value {yay}");
    }

    #[test]
    fn jacobi_matches_known_eigenvalues() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (mut vals, _) = jacobi_eigen(&a);
        vals.sort_by(f64::total_cmp);
        assert_relative_eq!(vals[0], 1.0, max_relative = 1e-10);
        assert_relative_eq!(vals[1], 3.0, max_relative = 1e-10);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn mean_strategy() -> impl Strategy<Value = f64> {
            prop_oneof![
                0.0..=(2.0 / 3.0),
                (1e-6..1e-2f64),
                Just(0.0),
            ]
        }

        fn base_and_vectors(n_max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
            (1..=n_max).prop_flat_map(|n| {
                (
                    proptest::collection::vec(mean_strategy(), n),
                    proptest::collection::vec(-1.0..1.0f64, n),
                    proptest::collection::vec(-1.0..1.0f64, n),
                )
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            // nonnegativity, absolute homogeneity, triangle inequality
            #[test]
            fn norm_axioms((mu, x, z) in base_and_vectors(6), scale in -3.0..3.0f64) {
                let mu = ProductDistribution::new(mu).unwrap();
                let (nx, _) = vector_dual_norm(&x, &mu).unwrap();
                let (nz, _) = vector_dual_norm(&z, &mu).unwrap();
                prop_assert!(nx >= 0.0);
                let scaled: Vec<f64> = x.iter().map(|v| v * scale).collect();
                let (ns, _) = vector_dual_norm(&scaled, &mu).unwrap();
                prop_assert!((ns - scale.abs() * nx).abs() <= 1e-9 * (1.0 + ns));
                let sum: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a + b).collect();
                let (nsum, _) = vector_dual_norm(&sum, &mu).unwrap();
                prop_assert!(nsum <= nx + nz + 1e-9);
            }

            // every accepted test vector lifts to an accepted certificate
            #[test]
            fn feasibility_closure((mu, y, _) in base_and_vectors(6)) {
                let mu = ProductDistribution::new(mu).unwrap();
                let mut y = y;
                // project into T_mu
                let quad: f64 = y.iter().zip(mu.means()).map(|(v, m)| m * v * v).sum();
                if quad > 1.0 {
                    let s = (1.0 / quad).sqrt();
                    y.iter_mut().for_each(|v| *v *= s);
                }
                let tv = TestVector::new(y.clone(), mu.clone()).unwrap();
                tv.validate().unwrap();
                let n = y.len();
                let m = DMatrix::from_fn(n, n, |i, j| y[i] * y[j]);
                prop_assert!(CertificateMatrix::new(m, mu).is_ok());
            }

            // TV sandwich on random product pairs with means <= 2/3
            #[test]
            fn tv_sandwich(
                p in proptest::collection::vec(0.0..=(2.0/3.0f64), 1..10),
                q_raw in proptest::collection::vec(0.0..=1.0f64, 10),
            ) {
                let n = p.len();
                let q: Vec<f64> = q_raw[..n].to_vec();
                let p = ProductDistribution::new(p).unwrap();
                let q = ProductDistribution::new(q).unwrap();
                let exact = tv_exact(&p, &q).unwrap();
                let hell = tv_upper_bound_product(&p, &q).unwrap();
                prop_assert!(exact <= hell + 1e-9, "exact {exact} > hellinger bound {hell}");
                let score = tv_characterization(&p, &q).unwrap();
                prop_assert!(
                    exact <= 2.0 * score.min(1.0) + 1e-9,
                    "exact {exact} > 2 * min(1, {score})"
                );
            }
        }

        // rank-one bound: the matrix norm of δδᵀ is controlled by the squared
        // vector norm, with a universal constant (recorded: 4)
        #[test]
        fn rank_one_bound_on_random_instances() {
            use rand::Rng;
            let mut rng = crate::seeding::Seed(505).rng();
            for trial in 0..40 {
                let n = 2 + trial % 3;
                let mu = ProductDistribution::new(
                    (0..n).map(|_| 0.01 + 0.6 * rng.random::<f64>()).collect::<Vec<_>>(),
                )
                .unwrap();
                let delta: Vec<f64> =
                    (0..n).map(|_| rng.random::<f64>() * 0.4 - 0.2).collect();
                let outer = DMatrix::from_fn(n, n, |i, j| delta[i] * delta[j]);
                let matrix_norm = matrix_dual_norm_bruteforce(&outer, &mu).unwrap();
                let (vec_norm, _) = vector_dual_norm(&delta, &mu).unwrap();
                assert!(
                    matrix_norm <= 4.0 * vec_norm * vec_norm + 1e-9,
                    "trial {trial}: |dd^T|_mu = {matrix_norm} vs 4|d|_mu^2 = {}",
                    4.0 * vec_norm * vec_norm
                );
            }
        }
    }
}
