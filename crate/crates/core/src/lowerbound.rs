//! Desk-scale realization of the non-adaptive measurement lower bound:
//! moment-matched bias distributions, the hard state pair they induce, and
//! Monte-Carlo evidence that product-basis measurements cannot tell the pair
//! apart.
//!
//! The two states share a hidden random product basis; conditioned on a bias
//! t, every qubit is diagonal in that basis with eigenvalues (1−t, t). The two
//! bias distributions agree on moments 0..k yet are far apart, so the states
//! are constantly separated in trace distance while any fixed product-basis
//! measurement sees outcome laws that are nearly indistinguishable.

use crate::error::{Error, Result};
use crate::mathutil::ln_binomial_pmf;
use crate::seeding::Seed;
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};

/// A finitely supported distribution on the real line.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution {
    pub support: Vec<f64>,
    pub probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn moment(&self, r: u32) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(t, p)| p * t.powi(r as i32))
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn validate(&self, lo: f64, hi: f64) -> Result<()> {
        if self.support.len() != self.probs.len() {
            return Err(Error::DimensionMismatch(self.support.len(), self.probs.len()));
        }
        for (&t, &p) in self.support.iter().zip(&self.probs) {
            if p < -1e-12 {
                return Err(Error::OutOfRange {
                    name: "probability",
                    value: p,
                    range: "[0, 1]",
                });
            }
            if t < lo - 1e-12 || t > hi + 1e-12 {
                return Err(Error::OutOfRange {
                    name: "support point",
                    value: t,
                    range: "[0, 2m/n]",
                });
            }
        }
        let total = self.total_mass();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfRange {
                name: "total mass",
                value: total,
                range: "1 ± 1e-12",
            });
        }
        Ok(())
    }

    /// Draw one atom index by its probability.
    fn sample_index<R: Rng>(&self, rng: &mut R) -> usize {
        let mut pick = rng.random::<f64>();
        for (i, &p) in self.probs.iter().enumerate() {
            if pick < p {
                return i;
            }
            pick -= p;
        }
        self.probs.len() - 1
    }
}

/// Two bias distributions on [0, 2m/n] matching moments 0..k, with dominant
/// atoms at m/n and (m+√m)/n respectively.
#[derive(Debug, Clone)]
pub struct MomentMatchedPair {
    pub p1: DiscreteDistribution,
    pub p2: DiscreteDistribution,
    pub m: f64,
    pub n: usize,
    pub k: usize,
    pub eps_mix: f64,
    /// l1 norm of the signed difference density found by the LP.
    pub signed_l1: f64,
}

impl MomentMatchedPair {
    /// Largest |E_{p1}[t^r] − E_{p2}[t^r]| over 0 ≤ r ≤ k.
    pub fn max_moment_residual(&self) -> f64 {
        (0..=self.k as u32)
            .map(|r| (self.p1.moment(r) - self.p2.moment(r)).abs())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let hi = 2.0 * self.m / self.n as f64;
        self.p1.validate(0.0, hi)?;
        self.p2.validate(0.0, hi)?;
        if self.max_moment_residual() > 1e-9 {
            return Err(Error::OutOfRange {
                name: "moment residual",
                value: self.max_moment_residual(),
                range: "[0, 1e-9]",
            });
        }
        // dominant atoms
        let main1 = self.m / self.n as f64;
        let main2 = (self.m + self.m.sqrt()) / self.n as f64;
        for (dist, loc) in [(&self.p1, main1), (&self.p2, main2)] {
            let mass: f64 = dist
                .support
                .iter()
                .zip(&dist.probs)
                .filter(|(t, _)| (**t - loc).abs() < 1e-15 * (1.0 + loc))
                .map(|(_, p)| p)
                .sum();
            if mass < 1.0 - self.eps_mix - 1e-12 {
                return Err(Error::OutOfRange {
                    name: "dominant atom mass",
                    value: mass,
                    range: ">= 1 - eps_mix",
                });
            }
        }
        Ok(())
    }
}

// ---- dense simplex for the signed moment problem ----

const LP_TOL: f64 = 1e-11;

/// Minimize c·x subject to Ax = b, x ≥ 0. Two-phase dense simplex with
/// Bland's rule; sized for the small moment systems this module builds.
fn simplex_min(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let m = a.len();
    let n = c.len();
    // normalize to b >= 0
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    for i in 0..m {
        if a[i].len() != n {
            return Err(Error::LinearProgram("ragged constraint matrix".into()));
        }
        if b[i] < 0.0 {
            rows.push(a[i].iter().map(|v| -v).collect());
            rhs.push(-b[i]);
        } else {
            rows.push(a[i].clone());
            rhs.push(b[i]);
        }
    }
    // phase 1 tableau: columns = n original + m artificial
    let total = n + m;
    let mut tab: Vec<Vec<f64>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![0.0; total];
            row[..n].copy_from_slice(r);
            row[n + i] = 1.0;
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut x_rhs = rhs;

    let run = |tab: &mut Vec<Vec<f64>>,
               x_rhs: &mut Vec<f64>,
               basis: &mut Vec<usize>,
               cost: &[f64],
               allowed: usize|
     -> Result<f64> {
        for _round in 0..200_000 {
            // reduced costs via the basis cost vector
            let mut y = vec![0.0; m]; // simplex multipliers applied row-wise
            for (i, &bi) in basis.iter().enumerate() {
                y[i] = cost[bi];
            }
            let mut entering = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let mut red = cost[j];
                for i in 0..m {
                    red -= y[i] * tab[i][j];
                }
                if red < -LP_TOL {
                    entering = Some(j);
                    break; // Bland: smallest index
                }
            }
            let Some(e) = entering else {
                let obj = basis.iter().enumerate().map(|(i, &bi)| cost[bi] * x_rhs[i]).sum();
                return Ok(obj);
            };
            // ratio test, Bland tie-break by basis variable index
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..m {
                if tab[i][e] > LP_TOL {
                    let ratio = x_rhs[i] / tab[i][e];
                    let better = ratio < best_ratio - LP_TOL
                        || (ratio < best_ratio + LP_TOL
                            && leave.map(|l| basis[i] < basis[l]).unwrap_or(true));
                    if better {
                        best_ratio = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(l) = leave else {
                return Err(Error::LinearProgram("unbounded".into()));
            };
            // pivot on (l, e)
            let pivot = tab[l][e];
            for v in tab[l].iter_mut() {
                *v /= pivot;
            }
            x_rhs[l] /= pivot;
            for i in 0..m {
                if i != l && tab[i][e].abs() > 0.0 {
                    let f = tab[i][e];
                    for j in 0..total {
                        tab[i][j] -= f * tab[l][j];
                    }
                    x_rhs[i] -= f * x_rhs[l];
                    tab[i][e] = 0.0;
                }
            }
            basis[l] = e;
        }
        Err(Error::LinearProgram("iteration limit".into()))
    };

    // phase 1: minimize sum of artificials
    let mut cost1 = vec![0.0; total];
    for c1 in cost1.iter_mut().skip(n) {
        *c1 = 1.0;
    }
    let infeas = run(&mut tab, &mut x_rhs, &mut basis, &cost1, total)?;
    if infeas > 1e-8 {
        return Err(Error::LinearProgram(format!(
            "phase-1 infeasibility {infeas:.3e}"
        )));
    }
    // drive any leftover artificial basis variables out where possible
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab[i][j].abs() > 1e-9) {
                let pivot = tab[i][j];
                for v in tab[i].iter_mut() {
                    *v /= pivot;
                }
                x_rhs[i] /= pivot;
                for r in 0..m {
                    if r != i && tab[r][j].abs() > 0.0 {
                        let f = tab[r][j];
                        for col in 0..total {
                            tab[r][col] -= f * tab[i][col];
                        }
                        x_rhs[r] -= f * x_rhs[i];
                        tab[r][j] = 0.0;
                    }
                }
                basis[i] = j;
            }
        }
    }
    // phase 2 over the original columns only
    let mut cost2 = vec![0.0; total];
    cost2[..n].copy_from_slice(c);
    run(&mut tab, &mut x_rhs, &mut basis, &cost2, n)?;
    let mut x = vec![0.0; n];
    for (i, &bi) in basis.iter().enumerate() {
        if bi < n {
            x[bi] = x_rhs[i];
        }
    }
    Ok(x)
}

/// Build the moment-matched pair: solve the l1-minimizing signed measure on a
/// uniform grid in the translated frame matching moments r = 1..k to
/// `((1−ε)/ε)·m^{−r/2}` (the rescaled targets), split it by sign into the
/// noise distributions, and attach the dominant atoms.
///
/// Errors with [`Error::MomentMatchInfeasible`] when the minimal l1 norm
/// exceeds 2; callers respond by increasing m or the grid size.
pub fn build_moment_matched(
    m: f64,
    k: usize,
    eps_mix: f64,
    grid_size: usize,
    n: usize,
) -> Result<MomentMatchedPair> {
    if m < 4.0 {
        return Err(Error::OutOfRange {
            name: "m",
            value: m,
            range: "[4, inf)",
        });
    }
    if !(0.0..0.5).contains(&eps_mix) || eps_mix == 0.0 {
        return Err(Error::OutOfRange {
            name: "eps_mix",
            value: eps_mix,
            range: "(0, 1/2)",
        });
    }
    if grid_size < 2 * k + 2 {
        return Err(Error::OutOfRange {
            name: "grid_size",
            value: grid_size as f64,
            range: ">= 2k + 2",
        });
    }
    if 2.0 * m > n as f64 {
        return Err(Error::OutOfRange {
            name: "m",
            value: m,
            range: "<= n/2 (support must fit in [0, 1])",
        });
    }
    let scale = m / n as f64;
    let main1 = scale;
    let main2 = (m + m.sqrt()) / n as f64;

    if k == 0 {
        // any common noise distribution matches the zeroth moment
        let p1 = DiscreteDistribution {
            support: vec![main1],
            probs: vec![1.0],
        };
        let p2 = DiscreteDistribution {
            support: vec![main2, main1],
            probs: vec![1.0 - eps_mix, eps_mix],
        };
        let pair = MomentMatchedPair {
            p1,
            p2,
            m,
            n,
            k,
            eps_mix,
            signed_l1: 0.0,
        };
        pair.validate()?;
        return Ok(pair);
    }

    // grid on [−1, 1] in the rescaled frame τ = (t − m/n)·(n/m)
    let grid: Vec<f64> = (0..grid_size)
        .map(|g| -1.0 + 2.0 * g as f64 / (grid_size - 1) as f64)
        .collect();
    let targets: Vec<f64> = (1..=k)
        .map(|r| (1.0 - eps_mix) / eps_mix * m.powf(-(r as f64) / 2.0))
        .collect();
    // variables: p⁺ then p⁻; constraints: Σp = 0 and k moment equations
    let n_vars = 2 * grid_size;
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    let mut b: Vec<f64> = Vec::with_capacity(k + 1);
    {
        let mut row = vec![0.0; n_vars];
        for g in 0..grid_size {
            row[g] = 1.0;
            row[grid_size + g] = -1.0;
        }
        a.push(row);
        b.push(0.0);
    }
    for (r, &target) in targets.iter().enumerate() {
        let mut row = vec![0.0; n_vars];
        for (g, &tau) in grid.iter().enumerate() {
            let v = tau.powi(r as i32 + 1);
            row[g] = v;
            row[grid_size + g] = -v;
        }
        a.push(row);
        b.push(target);
    }
    let cost = vec![1.0; n_vars];
    let x = simplex_min(&cost, &a, &b)?;
    let signed_l1: f64 = x.iter().sum();
    if signed_l1 > 2.0 + 1e-9 {
        return Err(Error::MomentMatchInfeasible { min_l1: signed_l1 });
    }
    let plus_mass: f64 = x[..grid_size].iter().sum();
    let minus_mass: f64 = x[grid_size..].iter().sum();
    // Σp = 0 makes these equal up to LP tolerance; use the average as the
    // shared noise mass and put the remainder on the translation origin.
    let s = 0.5 * (plus_mass + minus_mass);
    let filler = 1.0 - s;

    let to_t = |tau: f64| -> f64 { main1 + scale * tau };
    let build = |noise: &[f64], main_loc: f64| -> DiscreteDistribution {
        // noise distribution D = filler at the translation origin + LP atoms,
        // normalized to mass exactly 1 before mixing, so the dominant atom
        // carries exactly 1 − ε.
        let mut noise_support = vec![main1];
        let mut noise_probs = vec![filler];
        for (g, &w) in noise.iter().enumerate() {
            if w > 1e-15 {
                noise_support.push(to_t(grid[g]));
                noise_probs.push(w);
            }
        }
        let noise_total: f64 = noise_probs.iter().sum();
        for p in noise_probs.iter_mut() {
            *p /= noise_total;
        }
        let mut support = vec![main_loc];
        let mut probs = vec![1.0 - eps_mix];
        for (t, p) in noise_support.into_iter().zip(noise_probs) {
            if (t - main_loc).abs() < 1e-18 {
                probs[0] += eps_mix * p;
            } else {
                support.push(t);
                probs.push(eps_mix * p);
            }
        }
        DiscreteDistribution { support, probs }
    };
    let p1 = build(&x[..grid_size], main1);
    let p2 = build(&x[grid_size..], main2);
    let pair = MomentMatchedPair {
        p1,
        p2,
        m,
        n,
        k,
        eps_mix,
        signed_l1,
    };
    pair.validate()?;
    Ok(pair)
}

/// Exact TV distance between Bin(n, t1) and Bin(n, t2), summing log-space
/// pmfs over the region where either has non-negligible mass.
pub fn binomial_tv(n: u64, t1: f64, t2: f64) -> Result<f64> {
    for (name, t) in [("t1", t1), ("t2", t2)] {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange {
                name,
                value: t,
                range: "[0, 1]",
            });
        }
    }
    let (lo, hi) = binomial_window(n, &[t1, t2]);
    let mut tv = 0.0;
    for s in lo..=hi {
        let a = ln_binomial_pmf(n, t1, s).exp();
        let b = ln_binomial_pmf(n, t2, s).exp();
        tv += (a - b).abs();
    }
    Ok(0.5 * tv)
}

fn binomial_window(n: u64, ts: &[f64]) -> (u64, u64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &t in ts {
        let mean = n as f64 * t;
        let sd = (n as f64 * t * (1.0 - t)).sqrt();
        lo = lo.min(mean - 16.0 * sd - 16.0);
        hi = hi.max(mean + 16.0 * sd + 16.0);
    }
    let lo = lo.floor().max(0.0) as u64;
    let hi = (hi.ceil() as u64).min(n);
    (lo, hi)
}

/// Trace distance between the two hard states: by unitary invariance it is
/// the TV distance between the n-fold mixed-Bernoulli outcome laws, which is
/// a mixture-of-binomials computation.
pub fn pair_trace_distance(pair: &MomentMatchedPair) -> f64 {
    let n = pair.n as u64;
    let ts: Vec<f64> = pair
        .p1
        .support
        .iter()
        .chain(&pair.p2.support)
        .copied()
        .collect();
    let (lo, hi) = binomial_window(n, &ts);
    let mut tv = 0.0;
    for s in lo..=hi {
        let mix = |d: &DiscreteDistribution| -> f64 {
            d.support
                .iter()
                .zip(&d.probs)
                .map(|(&t, &p)| p * ln_binomial_pmf(n, t, s).exp())
                .sum()
        };
        tv += (mix(&pair.p1) - mix(&pair.p2)).abs();
    }
    0.5 * tv
}

/// The hard instance: a hidden product basis (one unit Bloch axis per qubit)
/// shared by both states, plus the moment-matched bias pair.
#[derive(Debug, Clone)]
pub struct HardStatePair {
    pub axes: Vec<[f64; 3]>,
    pub pair: MomentMatchedPair,
}

impl HardStatePair {
    /// Sample the hidden basis uniformly on the sphere, qubit by qubit.
    pub fn new(pair: MomentMatchedPair, seed: Seed) -> HardStatePair {
        let mut rng = seed.rng();
        let axes = (0..pair.n).map(|_| UnitSphere.sample(&mut rng)).collect();
        HardStatePair { axes, pair }
    }

    fn bias(&self, which: u8) -> &DiscreteDistribution {
        if which == 1 {
            &self.pair.p1
        } else {
            &self.pair.p2
        }
    }
}

/// Per-qubit overlap of the measurement outcome's axis with the hidden state
/// axis: `(1 + s·⟨v, u⟩)/2` with s = +1 for the outcome along +v.
fn outcome_overlap(meas_axis: &[f64; 3], state_axis: &[f64; 3], outcome_plus: bool) -> f64 {
    let dot: f64 = meas_axis.iter().zip(state_axis).map(|(a, b)| a * b).sum();
    let s = if outcome_plus { 1.0 } else { -1.0 };
    (0.5 * (1.0 + s * dot)).clamp(0.0, 1.0)
}

/// Exact log-likelihood `ln P_ℓ(F)` of the outcome row F under hard state ℓ:
/// log-sum-exp over the bias atoms of `Σ_j ln(o_j(1−t) + (1−o_j)t)`.
pub fn outcome_log_likelihood(
    outcomes: &[bool],
    meas_axes: &[[f64; 3]],
    pair: &HardStatePair,
    which: u8,
) -> Result<f64> {
    let n = pair.pair.n;
    if outcomes.len() != n || meas_axes.len() != n {
        return Err(Error::DimensionMismatch(outcomes.len(), n));
    }
    let dist = pair.bias(which);
    let mut terms: Vec<f64> = Vec::with_capacity(dist.support.len());
    for (&t, &p) in dist.support.iter().zip(&dist.probs) {
        if p <= 0.0 {
            continue;
        }
        let mut log_prod = 0.0f64;
        for j in 0..n {
            let o = outcome_overlap(&meas_axes[j], &pair.axes[j], outcomes[j]);
            let l = o * (1.0 - t) + (1.0 - o) * t;
            if l <= 0.0 {
                log_prod = f64::NEG_INFINITY;
                break;
            }
            log_prod += l.ln();
        }
        terms.push(p.ln() + log_prod);
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = terms.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Linear-space likelihood; underflows for large n, intended for the small-n
/// consistency checks.
pub fn outcome_likelihood(
    outcomes: &[bool],
    meas_axes: &[[f64; 3]],
    pair: &HardStatePair,
    which: u8,
) -> Result<f64> {
    Ok(outcome_log_likelihood(outcomes, meas_axes, pair, which)?.exp())
}

/// Monte-Carlo estimate of the TV distance between the two outcome laws.
#[derive(Debug, Clone, Copy)]
pub struct TvEstimate {
    /// One-sided estimator `E_{F∼ρ₂}[max(0, 1 − P₁/P₂)]` — exactly the TV.
    pub mean: f64,
    pub stderr: f64,
    /// Symmetrized cross-check `½·E_{F∼ρ₂}[|1 − P₁/P₂|]`.
    pub symmetric: f64,
}

/// Sample outcome rows from the ρ₂ law (bias atom, then per-qubit Bernoulli in
/// the measurement frame) and average `max(0, 1 − P₁(F)/P₂(F))`. Shard k of
/// 4096 draws uses `seed.child(k)`; shards are accumulated in order.
pub fn tv_between_outcome_laws(
    pair: &HardStatePair,
    meas_axes: &[[f64; 3]],
    mc_samples: usize,
    seed: Seed,
) -> Result<TvEstimate> {
    if mc_samples < 1000 {
        return Err(Error::TooFewSamples {
            n: mc_samples,
            min: 1000,
        });
    }
    let n = pair.pair.n;
    if meas_axes.len() != n {
        return Err(Error::DimensionMismatch(meas_axes.len(), n));
    }
    // plus-outcome probability per qubit per atom of p2
    let p2 = &pair.pair.p2;
    let mut plus_prob: Vec<Vec<f64>> = Vec::with_capacity(p2.support.len());
    for &t in &p2.support {
        plus_prob.push(
            (0..n)
                .map(|j| {
                    let o = outcome_overlap(&meas_axes[j], &pair.axes[j], true);
                    o * (1.0 - t) + (1.0 - o) * t
                })
                .collect(),
        );
    }
    const SHARD: usize = 4096;
    let n_shards = mc_samples.div_ceil(SHARD);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut sum_sym = 0.0f64;
    let mut outcomes = vec![false; n];
    for shard in 0..n_shards {
        let count = SHARD.min(mc_samples - shard * SHARD);
        let mut rng = seed.child(shard as u64).rng();
        for _ in 0..count {
            let atom = p2.sample_index(&mut rng);
            for j in 0..n {
                outcomes[j] = rng.random::<f64>() < plus_prob[atom][j];
            }
            let l1 = outcome_log_likelihood(&outcomes, meas_axes, pair, 1)?;
            let l2 = outcome_log_likelihood(&outcomes, meas_axes, pair, 2)?;
            let ratio = (l1 - l2).exp();
            let x = (1.0 - ratio).max(0.0);
            sum += x;
            sum_sq += x * x;
            sum_sym += 0.5 * (1.0 - ratio).abs();
        }
    }
    let mc = mc_samples as f64;
    let mean = sum / mc;
    let var = (sum_sq / mc - mean * mean).max(0.0);
    Ok(TvEstimate {
        mean,
        stderr: (var / mc).sqrt(),
        symmetric: sum_sym / mc,
    })
}

/// Uniformly random measurement axes, the honest non-adaptive strategy.
pub fn random_axes(n: usize, seed: Seed) -> Vec<[f64; 3]> {
    let mut rng = seed.rng();
    (0..n).map(|_| UnitSphere.sample(&mut rng)).collect()
}
