//! The robust learner: preprocessing reductions, the weighted filter loop,
//! and the output mapping back to the original coordinate frame.
//!
//! The loop alternates two moves until the certificate is small: find a
//! matrix `A` in the certificate set approximately maximizing
//! `⟨A, poff(Σ(w))⟩`, then downweight the samples with the largest scores
//! `τ_i = (X_i − μ(w))ᵀ A (X_i − μ(w))` among the top-2ε weight prefix.
//! Each step zeroes at least the top-scoring point, so the number of active
//! samples strictly decreases and the loop terminates within N iterations.

use crate::convexopt::{maximize_certificate_detailed, SolverConfig};
use crate::dualnorm::{CertificateMatrix, ProductDistribution};
use crate::error::{Error, Result};
use crate::samples::SampleMatrix;
use nalgebra::DMatrix;

/// Weights below this are snapped to zero so the strict nnz decrease of the
/// filter step holds bitwise.
pub const WEIGHT_FLOOR: f64 = 1e-15;

/// Default upper bound ε₀ on the corruption rate the learner accepts.
pub const EPS_MAX_DEFAULT: f64 = 0.05;

const EPSILON_INFLATION: f64 = 1.2;

/// Binary samples with the filter's mutable weight state. Weights live in
/// `Γ_N` (nonnegative, total ≤ 1) and never exceed the uniform weight 1/N.
#[derive(Debug, Clone)]
pub struct WeightedSampleSet {
    samples: SampleMatrix,
    weights: Vec<f64>,
}

impl WeightedSampleSet {
    /// Uniform weights w(S): every sample gets 1/N.
    pub fn uniform(samples: SampleMatrix) -> Result<Self> {
        if samples.n_samples() == 0 {
            return Err(Error::EmptySamples);
        }
        let n = samples.n_samples();
        Ok(WeightedSampleSet {
            samples,
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn samples(&self) -> &SampleMatrix {
        &self.samples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_samples(&self) -> usize {
        self.samples.n_samples()
    }

    pub fn n_coords(&self) -> usize {
        self.samples.n_coords()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn nnz(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    /// l1 distance to the uniform weights w(S); the filter's removal budget.
    pub fn removed_mass(&self) -> f64 {
        let u = 1.0 / self.n_samples() as f64;
        self.weights.iter().map(|w| u - w).sum()
    }

    /// Membership in Γ_N and the box w ≤ w(S).
    pub fn validate_weights(&self) -> Result<()> {
        let u = 1.0 / self.n_samples() as f64;
        let mut total = 0.0;
        for &w in &self.weights {
            if !(0.0..=u + 1e-15).contains(&w) {
                return Err(Error::OutOfRange {
                    name: "weight",
                    value: w,
                    range: "[0, 1/N]",
                });
            }
            total += w;
        }
        if total > 1.0 + 1e-9 {
            return Err(Error::OutOfRange {
                name: "total weight",
                value: total,
                range: "[0, 1]",
            });
        }
        Ok(())
    }
}

/// What preprocessing did, and how to undo it on the learned means.
#[derive(Debug, Clone)]
pub struct PreprocessReport {
    /// Coordinates forced to mean 0 (empirical mean below ε/n).
    pub dropped_low: Vec<usize>,
    /// Coordinates forced to mean 1 (empirical mean above 1 − ε/n).
    pub dropped_high: Vec<usize>,
    /// Surviving coordinates whose 0/1 roles were swapped.
    pub flipped: Vec<usize>,
    /// Surviving coordinates, in output order, as original indices.
    pub kept: Vec<usize>,
    /// Corruption-rate inflation the reductions cost downstream.
    pub epsilon_inflation: f64,
}

impl PreprocessReport {
    /// Map means learned in the preprocessed frame back to the original one.
    pub fn restore_means(&self, learned: &[f64]) -> Vec<f64> {
        let n = self.dropped_low.len() + self.dropped_high.len() + self.kept.len();
        let mut out = vec![0.0; n];
        for &i in &self.dropped_high {
            out[i] = 1.0;
        }
        let flipped: std::collections::HashSet<usize> = self.flipped.iter().copied().collect();
        for (pos, &orig) in self.kept.iter().enumerate() {
            out[orig] = if flipped.contains(&orig) {
                1.0 - learned[pos]
            } else {
                learned[pos]
            };
        }
        out
    }
}

/// Regularity reductions: set aside near-degenerate coordinates and flip
/// heavy ones so all surviving empirical means are ≤ 1/2.
pub fn preprocess(s: &WeightedSampleSet, eps: f64) -> Result<(WeightedSampleSet, PreprocessReport)> {
    preprocess_with_max(s, eps, EPS_MAX_DEFAULT)
}

fn preprocess_with_max(
    s: &WeightedSampleSet,
    eps: f64,
    eps_max: f64,
) -> Result<(WeightedSampleSet, PreprocessReport)> {
    if !(eps > 0.0 && eps <= eps_max) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "(0, eps_max]",
        });
    }
    if s.n_samples() < 2 {
        return Err(Error::TooFewSamples {
            n: s.n_samples(),
            min: 2,
        });
    }
    let n = s.n_coords();
    let means = s.samples.column_means();
    let low_cut = eps / n as f64;
    let mut dropped_low = Vec::new();
    let mut dropped_high = Vec::new();
    let mut flipped = Vec::new();
    let mut kept = Vec::new();
    for (i, &m) in means.iter().enumerate() {
        if m < low_cut {
            dropped_low.push(i);
        } else if m > 1.0 - low_cut {
            dropped_high.push(i);
        } else {
            if m >= 0.5 {
                flipped.push(i);
            }
            kept.push(i);
        }
    }
    let matrix = s.samples.select_columns(&kept, &flipped);
    let survived = WeightedSampleSet::uniform(matrix)?;
    Ok((
        survived,
        PreprocessReport {
            dropped_low,
            dropped_high,
            flipped,
            kept,
            epsilon_inflation: EPSILON_INFLATION,
        },
    ))
}

/// Weighted mean μ(w) = Σ (w_i/‖w‖₁) X_i.
pub fn weighted_mean(s: &WeightedSampleSet) -> Result<Vec<f64>> {
    let total = s.total_weight();
    if total <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    let mut acc = vec![0.0f64; s.n_coords()];
    for i in 0..s.n_samples() {
        let w = s.weights[i];
        if w > 0.0 {
            s.samples.for_each_one(i, |j| acc[j] += w);
        }
    }
    for v in acc.iter_mut() {
        *v /= total;
    }
    Ok(acc)
}

/// Off-diagonal of the weighted second moment
/// `Σ w_i (X_i − μ(w))(X_i − μ(w))ᵀ`, with the raw (unnormalized) weights.
///
/// For binary rows this reduces to `Σ w_i X_i X_iᵀ − ‖w‖₁ μμᵀ`, and the first
/// term accumulates over each row's set bits only.
pub fn weighted_cov_offdiag(s: &WeightedSampleSet) -> Result<DMatrix<f64>> {
    let total = s.total_weight();
    if total <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    let n = s.n_coords();
    let mu = weighted_mean(s)?;
    let mut cov = DMatrix::<f64>::zeros(n, n);
    let mut ones: Vec<usize> = Vec::with_capacity(n);
    for i in 0..s.n_samples() {
        let w = s.weights[i];
        if w <= 0.0 {
            continue;
        }
        ones.clear();
        s.samples.for_each_one(i, |j| ones.push(j));
        for (a_pos, &a) in ones.iter().enumerate() {
            for &b in &ones[a_pos + 1..] {
                cov[(a, b)] += w;
            }
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let v = cov[(a, b)] - total * mu[a] * mu[b];
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
        cov[(a, a)] = 0.0;
    }
    Ok(cov)
}

/// Quadratic scores `τ_i = (X_i − μ(w))ᵀ A (X_i − μ(w))` for the active rows;
/// inactive rows get 0. PSD certificates make the scores nonnegative; tiny
/// negative rounding is clamped.
pub fn filter_scores(s: &WeightedSampleSet, a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() != s.n_coords() || a.ncols() != s.n_coords() {
        return Err(Error::DimensionMismatch(a.nrows(), s.n_coords()));
    }
    let mu = weighted_mean(s)?;
    let mu_vec = nalgebra::DVector::from_column_slice(&mu);
    let a_mu = a * &mu_vec;
    let mu_a_mu = mu_vec.dot(&a_mu);
    let mut tau = vec![0.0f64; s.n_samples()];
    let mut ones: Vec<usize> = Vec::with_capacity(s.n_coords());
    for i in 0..s.n_samples() {
        if s.weights[i] <= 0.0 {
            continue;
        }
        ones.clear();
        s.samples.for_each_one(i, |j| ones.push(j));
        let mut x_a_x = 0.0;
        let mut a_mu_x = 0.0;
        for (p_pos, &p) in ones.iter().enumerate() {
            a_mu_x += a_mu[p];
            x_a_x += a[(p, p)];
            for &q in &ones[p_pos + 1..] {
                x_a_x += 2.0 * a[(p, q)];
            }
        }
        tau[i] = (x_a_x - 2.0 * a_mu_x + mu_a_mu).max(0.0);
    }
    Ok(tau)
}

struct StepOutcome {
    set: WeightedSampleSet,
    removed_mass: f64,
    tau_max: f64,
}

fn filter_step_impl(s: &WeightedSampleSet, a: &DMatrix<f64>, eps: f64) -> Result<StepOutcome> {
    let tau = filter_scores(s, a)?;
    let mut order: Vec<usize> = (0..s.n_samples()).filter(|&i| s.weights[i] > 0.0).collect();
    order.sort_by(|&x, &y| tau[y].total_cmp(&tau[x]).then(x.cmp(&y)));
    let tau_max = order.first().map(|&i| tau[i]).unwrap_or(0.0);
    if tau_max <= 0.0 {
        return Err(Error::AllScoresZero);
    }
    let mut cut = order.len();
    let mut cumulative = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        cumulative += s.weights[i];
        if cumulative > 2.0 * eps {
            cut = rank + 1;
            break;
        }
    }
    let mut out = s.clone();
    let mut removed = 0.0;
    for &i in &order[..cut] {
        let updated = (1.0 - tau[i] / tau_max) * out.weights[i];
        let updated = if updated < WEIGHT_FLOOR { 0.0 } else { updated };
        removed += out.weights[i] - updated;
        out.weights[i] = updated;
    }
    debug_assert!(out.nnz() < s.nnz());
    Ok(StepOutcome {
        set: out,
        removed_mass: removed,
        tau_max,
    })
}

/// One filter update: sort the active scores descending, take the smallest
/// prefix whose weight exceeds 2ε, and multiply those weights by
/// `1 − τ_i/τ_max`. The top-scoring point always drops to zero weight, so
/// `nnz` strictly decreases. Errors with [`Error::AllScoresZero`] when every
/// score vanishes (the caller should already have stopped).
pub fn filter_step(
    s: &WeightedSampleSet,
    a: &CertificateMatrix,
    eps: f64,
) -> Result<(WeightedSampleSet, f64)> {
    let outcome = filter_step_impl(s, &a.m, eps)?;
    Ok((outcome.set, outcome.removed_mass))
}

/// Per-iteration record of the filter loop.
#[derive(Debug, Clone)]
pub struct FilterIteration {
    /// ⟨A, poff(Σ(w))⟩ for the certificate found this iteration.
    pub certificate_value: f64,
    /// Weight removed by this iteration's step.
    pub removed_mass: f64,
    /// Active samples after the step.
    pub nnz: usize,
    /// Largest score this iteration.
    pub tau_max: f64,
}

/// Trace of a [`robust_learn`] run.
#[derive(Debug, Clone, Default)]
pub struct FilterTrace {
    pub iterations: Vec<FilterIteration>,
    /// Certificate value at the final check.
    pub final_certificate_value: f64,
    /// Stopping threshold used: C · ε' · ln²(1/ε') at the inflated ε'.
    pub threshold: f64,
    /// True when the loop exited because the certificate dropped below the
    /// threshold (or every score vanished, which implies it).
    pub terminated_by_certificate: bool,
}

/// Tunables for [`robust_learn`].
#[derive(Debug, Clone)]
pub struct FilterConfig {
    pub solver: SolverConfig,
    /// C in the stopping rule `⟨A, poff(Σ(w))⟩ ≤ C ε ln²(1/ε)`. Calibrated on
    /// the synthetic benchmarks and frozen; see the harness defaults.
    pub stop_constant: f64,
    /// Largest admissible corruption rate ε₀.
    pub eps_max: f64,
    /// Minimum sample count (on top of N ≥ n + 1).
    pub min_samples: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            solver: SolverConfig::default(),
            stop_constant: 1.0,
            eps_max: EPS_MAX_DEFAULT,
            min_samples: 16,
        }
    }
}

/// Output of the robust learner.
#[derive(Debug, Clone)]
pub struct RobustLearnOutput {
    /// Estimated mean vector, mapped back to the original coordinate frame.
    pub estimate: ProductDistribution,
    pub trace: FilterTrace,
    pub report: PreprocessReport,
}

/// Cumulative removal audit when the harness labels samples good/bad.
#[derive(Debug, Clone, Copy)]
pub struct WeightAuditRow {
    pub cumulative_good_removed: f64,
    pub cumulative_bad_removed: f64,
}

/// Run the full robust learner on raw binary samples: preprocess, loop the
/// certificate/filter pair until the certificate falls below
/// `C ε' ln²(1/ε')`, and report the weighted mean mapped back through the
/// preprocessing reductions.
pub fn robust_learn(
    samples: &SampleMatrix,
    eps: f64,
    cfg: &FilterConfig,
) -> Result<RobustLearnOutput> {
    robust_learn_impl(samples, eps, cfg, None).map(|(out, _)| out)
}

/// [`robust_learn`] with a good/bad label per sample; additionally returns the
/// cumulative weight removed from each class after every iteration.
pub fn robust_learn_audited(
    samples: &SampleMatrix,
    eps: f64,
    cfg: &FilterConfig,
    bad: &[bool],
) -> Result<(RobustLearnOutput, Vec<WeightAuditRow>)> {
    if bad.len() != samples.n_samples() {
        return Err(Error::DimensionMismatch(bad.len(), samples.n_samples()));
    }
    robust_learn_impl(samples, eps, cfg, Some(bad))
}

fn robust_learn_impl(
    samples: &SampleMatrix,
    eps: f64,
    cfg: &FilterConfig,
    bad: Option<&[bool]>,
) -> Result<(RobustLearnOutput, Vec<WeightAuditRow>)> {
    let n_samples = samples.n_samples();
    let n = samples.n_coords();
    let min_n = (n + 1).max(cfg.min_samples);
    if n_samples < min_n {
        return Err(Error::TooFewSamples {
            n: n_samples,
            min: min_n,
        });
    }
    let uniform = WeightedSampleSet::uniform(samples.clone())?;
    let (mut working, report) = preprocess_with_max(&uniform, eps, cfg.eps_max)?;
    let eps_eff = eps * report.epsilon_inflation;
    let log_term = (1.0 / eps_eff).ln();
    let threshold = cfg.stop_constant * eps_eff * log_term * log_term;

    let mut trace = FilterTrace {
        threshold,
        ..FilterTrace::default()
    };
    let mut audit = Vec::new();
    let mut cumulative_good = 0.0;
    let mut cumulative_bad = 0.0;

    if report.kept.is_empty() {
        let estimate = ProductDistribution::new(report.restore_means(&[]))?;
        trace.terminated_by_certificate = true;
        return Ok((
            RobustLearnOutput {
                estimate,
                trace,
                report,
            },
            audit,
        ));
    }

    // Constraint base: empirical mean of the preprocessed set, fixed for the
    // whole loop. All entries are ≤ 1/2 after the flip reduction.
    let mu_base = ProductDistribution::new(weighted_mean(&working)?)?;
    let mut warm: Option<DMatrix<f64>> = None;

    for _ in 0..n_samples {
        let cov = weighted_cov_offdiag(&working)?;
        let solve = maximize_certificate_detailed(&cov, &mu_base, &cfg.solver, warm.as_ref())?;
        trace.final_certificate_value = solve.value;
        if solve.value <= threshold {
            trace.terminated_by_certificate = true;
            break;
        }
        let before_weights = working.weights().to_vec();
        let outcome = match filter_step_impl(&working, &solve.certificate.m, eps_eff) {
            Ok(o) => o,
            Err(Error::AllScoresZero) => {
                trace.terminated_by_certificate = true;
                break;
            }
            Err(e) => return Err(e),
        };
        if let Some(labels) = bad {
            for i in 0..n_samples {
                let delta = before_weights[i] - outcome.set.weights()[i];
                if labels[i] {
                    cumulative_bad += delta;
                } else {
                    cumulative_good += delta;
                }
            }
            audit.push(WeightAuditRow {
                cumulative_good_removed: cumulative_good,
                cumulative_bad_removed: cumulative_bad,
            });
        }
        working = outcome.set;
        trace.iterations.push(FilterIteration {
            certificate_value: solve.value,
            removed_mass: outcome.removed_mass,
            nnz: working.nnz(),
            tau_max: outcome.tau_max,
        });
        warm = Some(solve.certificate.m.clone());
        if working.removed_mass() > 3.0 * eps_eff {
            return Err(Error::WeightBudgetExhausted {
                removed: working.removed_mass(),
                budget: 3.0 * eps_eff,
            });
        }
        if working.total_weight() <= 0.0 {
            break;
        }
    }

    let learned = weighted_mean(&working)?;
    let estimate = ProductDistribution::new(report.restore_means(&learned))?;
    Ok((
        RobustLearnOutput {
            estimate,
            trace,
            report,
        },
        audit,
    ))
}
