//! Classical simulation of single-qubit single-copy measurements on
//! contaminated n-qubit product mixed states, and the two-round adaptive
//! tomography pipeline built on the robust learner.
//!
//! Everything is parameterized by Bloch vectors: a qubit state is
//! `½(I + c·σ)` with `‖c‖₂ ≤ 1`, and measuring along a unit axis `u` yields
//! outcome +1 with probability `(1 + ⟨u, c⟩)/2`. A contaminated state mixes a
//! clean product state with junk product-state components, so single-copy
//! sampling stays exact and cheap at any n while the outcome law moves at most
//! ε in total variation from the clean product law.

use crate::error::{Error, Result};
use crate::filter::{robust_learn, FilterConfig};
use crate::samples::SampleMatrix;
use crate::seeding::Seed;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use std::io::{BufRead, Write};

const BLOCH_TOL: f64 = 1e-12;
/// Below this Bloch norm the eigenbasis is ambiguous and the Z axis is used.
pub const TOL_AXIS: f64 = 1e-6;
/// The learner needs a strictly positive corruption rate; clean-state
/// pipelines run it at this floor.
pub const LEARNER_EPS_FLOOR: f64 = 1e-3;

/// One qubit as a Bloch vector, `‖c‖₂ ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub bloch: [f64; 3],
}

impl QubitState {
    pub fn new(bloch: [f64; 3]) -> Result<Self> {
        let norm_sq: f64 = bloch.iter().map(|v| v * v).sum();
        if !norm_sq.is_finite() {
            return Err(Error::NonFinite("bloch vector"));
        }
        if norm_sq > 1.0 + BLOCH_TOL {
            return Err(Error::InvalidState(format!(
                "bloch norm {} exceeds 1",
                norm_sq.sqrt()
            )));
        }
        Ok(QubitState { bloch })
    }

    pub fn norm(&self) -> f64 {
        self.bloch.iter().map(|v| v * v).sum::<f64>().sqrt().min(1.0)
    }

    /// 2×2 density matrix ½(I + c·σ).
    pub fn density(&self) -> DMatrix<Complex64> {
        let [x, y, z] = self.bloch;
        DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.5 * (1.0 + z), 0.0),
                Complex64::new(0.5 * x, -0.5 * y),
                Complex64::new(0.5 * x, 0.5 * y),
                Complex64::new(0.5 * (1.0 - z), 0.0),
            ],
        )
    }
}

/// An n-qubit product mixed state.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMixedState {
    pub qubits: Vec<QubitState>,
}

impl ProductMixedState {
    pub fn new(qubits: Vec<QubitState>) -> Self {
        ProductMixedState { qubits }
    }

    pub fn from_bloch_rows(rows: &[[f64; 3]]) -> Result<Self> {
        Ok(ProductMixedState {
            qubits: rows.iter().map(|r| QubitState::new(*r)).collect::<Result<_>>()?,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }
}

/// `ρ = (1−ε)·π + ε·Σ_m α_m σ_m` with product-state junk components. The
/// represented state satisfies `trd(ρ, π) ≤ ε` by construction.
#[derive(Debug, Clone)]
pub struct ContaminatedState {
    pub clean: ProductMixedState,
    pub eps: f64,
    pub junk: Vec<(f64, ProductMixedState)>,
}

impl ContaminatedState {
    pub fn new(
        clean: ProductMixedState,
        eps: f64,
        junk: Vec<(f64, ProductMixedState)>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::OutOfRange {
                name: "eps",
                value: eps,
                range: "[0, 1]",
            });
        }
        if eps > 0.0 {
            if junk.is_empty() {
                return Err(Error::InvalidState("eps > 0 but no junk components".into()));
            }
            let total: f64 = junk.iter().map(|(w, _)| w).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidState(format!(
                    "junk mixing weights sum to {total}, expected 1"
                )));
            }
            for (w, comp) in &junk {
                if *w < 0.0 {
                    return Err(Error::InvalidState("negative mixing weight".into()));
                }
                if comp.n_qubits() != clean.n_qubits() {
                    return Err(Error::DimensionMismatch(comp.n_qubits(), clean.n_qubits()));
                }
            }
        }
        Ok(ContaminatedState { clean, eps, junk })
    }

    pub fn pristine(clean: ProductMixedState) -> Self {
        ContaminatedState {
            clean,
            eps: 0.0,
            junk: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.clean.n_qubits()
    }

    /// Bloch vectors of the mixture state, qubit by qubit:
    /// `(1−ε)·c_clean + ε·Σ α_m c_m`.
    pub fn effective_bloch(&self) -> Vec<[f64; 3]> {
        let n = self.n_qubits();
        let mut out = vec![[0.0; 3]; n];
        for j in 0..n {
            for k in 0..3 {
                out[j][k] = (1.0 - self.eps) * self.clean.qubits[j].bloch[k];
            }
        }
        for (w, comp) in &self.junk {
            for j in 0..n {
                for k in 0..3 {
                    out[j][k] += self.eps * w * comp.qubits[j].bloch[k];
                }
            }
        }
        out
    }
}

/// Per-qubit two-outcome projective measurement, given by the Bloch axis of
/// its +1 eigenstate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasurementAxis {
    PauliX,
    PauliY,
    PauliZ,
    Custom([f64; 3]),
}

impl MeasurementAxis {
    pub fn unit(&self) -> [f64; 3] {
        match self {
            MeasurementAxis::PauliX => [1.0, 0.0, 0.0],
            MeasurementAxis::PauliY => [0.0, 1.0, 0.0],
            MeasurementAxis::PauliZ => [0.0, 0.0, 1.0],
            MeasurementAxis::Custom(u) => *u,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let MeasurementAxis::Custom(u) = self {
            let norm: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidState(format!(
                    "measurement axis has norm {norm}, expected 1"
                )));
            }
        }
        Ok(())
    }
}

/// A basis choice for every qubit.
#[derive(Debug, Clone)]
pub struct MeasurementBasis {
    pub axes: Vec<MeasurementAxis>,
}

impl MeasurementBasis {
    pub fn new(axes: Vec<MeasurementAxis>) -> Result<Self> {
        for a in &axes {
            a.validate()?;
        }
        Ok(MeasurementBasis { axes })
    }

    pub fn uniform(axis: MeasurementAxis, n: usize) -> Result<Self> {
        axis.validate()?;
        Ok(MeasurementBasis {
            axes: vec![axis; n],
        })
    }

    pub fn from_units(units: &[[f64; 3]]) -> Result<Self> {
        MeasurementBasis::new(units.iter().map(|u| MeasurementAxis::Custom(*u)).collect())
    }
}

fn outcome_prob_one(axis: &[f64; 3], bloch: &[f64; 3]) -> f64 {
    let dot: f64 = axis.iter().zip(bloch).map(|(a, b)| a * b).sum();
    (0.5 * (1.0 + dot)).clamp(0.0, 1.0)
}

const SHARD_SIZE: usize = 1 << 16;

/// Draw `count` measurement outcomes: each copy first picks the clean state
/// (probability 1−ε) or a junk component (by its mixing weight), then draws
/// per-qubit independent bits with `Pr[1] = (1 + ⟨u_j, c_j⟩)/2`.
///
/// Sampling is sharded: shard k of 2^16 copies uses `seed.child(k)` and the
/// shards are concatenated in order, so the output is reproducible and the
/// shards may be generated in parallel.
pub fn measure_samples(
    state: &ContaminatedState,
    basis: &MeasurementBasis,
    count: usize,
    seed: Seed,
) -> Result<SampleMatrix> {
    let n = state.n_qubits();
    if basis.axes.len() != n {
        return Err(Error::DimensionMismatch(basis.axes.len(), n));
    }
    if count == 0 {
        return Err(Error::EmptySamples);
    }
    for a in &basis.axes {
        a.validate()?;
    }
    // Probability table: row per component (clean first), column per qubit.
    let mut tables: Vec<(f64, Vec<f64>)> = Vec::with_capacity(1 + state.junk.len());
    let clean_probs: Vec<f64> = (0..n)
        .map(|j| outcome_prob_one(&basis.axes[j].unit(), &state.clean.qubits[j].bloch))
        .collect();
    tables.push((1.0 - state.eps, clean_probs));
    for (w, comp) in &state.junk {
        let probs = (0..n)
            .map(|j| outcome_prob_one(&basis.axes[j].unit(), &comp.qubits[j].bloch))
            .collect();
        tables.push((state.eps * w, probs));
    }
    let mut out = SampleMatrix::zeros(count, n);
    let n_shards = count.div_ceil(SHARD_SIZE);
    for shard in 0..n_shards {
        let start = shard * SHARD_SIZE;
        let end = ((shard + 1) * SHARD_SIZE).min(count);
        let mut rng = seed.child(shard as u64).rng();
        for row in start..end {
            let mut pick = rng.random::<f64>();
            let mut probs = &tables[tables.len() - 1].1;
            for (w, table) in &tables {
                if pick < *w {
                    probs = table;
                    break;
                }
                pick -= w;
            }
            for (j, &p) in probs.iter().enumerate() {
                if rng.random::<f64>() < p {
                    out.set(row, j, true);
                }
            }
        }
    }
    Ok(out)
}

/// Post-hoc classical corruption strategies for measurement outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryStrategy {
    None,
    MeanShift,
    RareInflate,
}

impl std::str::FromStr for AdversaryStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AdversaryStrategy::None),
            "mean_shift" => Ok(AdversaryStrategy::MeanShift),
            "rare_inflate" => Ok(AdversaryStrategy::RareInflate),
            other => Err(Error::UnknownStrategy(other.to_string())),
        }
    }
}

impl std::fmt::Display for AdversaryStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AdversaryStrategy::None => "none",
            AdversaryStrategy::MeanShift => "mean_shift",
            AdversaryStrategy::RareInflate => "rare_inflate",
        })
    }
}

/// Fraction of coordinates the rare_inflate adversary targets by default.
pub const RARE_INFLATE_FRACTION: f64 = 0.2;

/// Replace exactly ⌊εN⌋ rows of the sample matrix.
///
/// `mean_shift` writes the fixed row maximizing the l2 displacement of the
/// empirical mean (1 where the clean mean is below 1/2). `rare_inflate`
/// overwrites the coordinates with the smallest clean means with 1s in the
/// replaced rows, leaving their other coordinates untouched — the attack that
/// drives naive mean estimation to large relative error on rare coordinates.
pub fn adversary_corrupt(
    samples: &SampleMatrix,
    eps: f64,
    strategy: AdversaryStrategy,
    seed: Seed,
) -> Result<SampleMatrix> {
    let n = samples.n_coords();
    let rare_count = ((n as f64 * RARE_INFLATE_FRACTION).ceil() as usize).clamp(1, n);
    adversary_corrupt_with(samples, eps, strategy, seed, rare_count)
}

/// [`adversary_corrupt`] with an explicit number of targeted rare coordinates.
pub fn adversary_corrupt_with(
    samples: &SampleMatrix,
    eps: f64,
    strategy: AdversaryStrategy,
    seed: Seed,
    rare_count: usize,
) -> Result<SampleMatrix> {
    adversary_corrupt_labeled(samples, eps, strategy, seed, rare_count).map(|(m, _)| m)
}

/// [`adversary_corrupt_with`] that also reports which rows were replaced, for
/// the good/bad weight-removal audits.
pub fn adversary_corrupt_labeled(
    samples: &SampleMatrix,
    eps: f64,
    strategy: AdversaryStrategy,
    seed: Seed,
    rare_count: usize,
) -> Result<(SampleMatrix, Vec<bool>)> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "[0, 1]",
        });
    }
    let n_rows = samples.n_samples();
    let n = samples.n_coords();
    let k = (eps * n_rows as f64).floor() as usize;
    let mut bad = vec![false; n_rows];
    if k == 0 || strategy == AdversaryStrategy::None {
        return Ok((samples.clone(), bad));
    }
    let mut rng = seed.rng();
    let targets = rand::seq::index::sample(&mut rng, n_rows, k);
    let means = samples.column_means();
    let mut out = samples.clone();
    match strategy {
        AdversaryStrategy::None => unreachable!(),
        AdversaryStrategy::MeanShift => {
            let row: Vec<bool> = means.iter().map(|&m| m < 0.5).collect();
            for i in targets {
                out.overwrite_row(i, &row);
                bad[i] = true;
            }
        }
        AdversaryStrategy::RareInflate => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));
            let rare = &order[..rare_count.min(n)];
            for i in targets {
                for &j in rare {
                    out.set(i, j, true);
                }
                bad[i] = true;
            }
        }
    }
    Ok((out, bad))
}

/// Estimated Bloch matrix from round one: measure N1 copies in each Pauli
/// basis, run the robust learner on the {0,1} outcomes, and map means m to
/// Bloch components 2m − 1. Rows are clipped into the unit ball.
pub fn round_one_bloch_estimate(
    state: &ContaminatedState,
    n1: usize,
    eps: f64,
    cfg: &FilterConfig,
    seed: Seed,
    adversary: AdversaryStrategy,
) -> Result<Vec<[f64; 3]>> {
    let n = state.n_qubits();
    let mut bloch = vec![[0.0f64; 3]; n];
    let learner_eps = eps.max(LEARNER_EPS_FLOOR);
    for (axis_idx, axis) in [
        MeasurementAxis::PauliX,
        MeasurementAxis::PauliY,
        MeasurementAxis::PauliZ,
    ]
    .iter()
    .enumerate()
    {
        let basis = MeasurementBasis::uniform(*axis, n)?;
        let batch_seed = seed.child(axis_idx as u64);
        let raw = measure_samples(state, &basis, n1, batch_seed)?;
        let corrupted = adversary_corrupt(&raw, eps, adversary, batch_seed.child(u64::MAX))?;
        let learned = robust_learn(&corrupted, learner_eps, cfg)?;
        for (j, m) in learned.estimate.means().iter().enumerate() {
            bloch[j][axis_idx] = 2.0 * m - 1.0;
        }
    }
    for row in bloch.iter_mut() {
        let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }
    Ok(bloch)
}

/// Exact-moment variant of round one: bypass sampling and read the mixture
/// Bloch vectors off the state. Deterministic pipeline-algebra tests use this.
pub fn round_one_bloch_exact(state: &ContaminatedState) -> Vec<[f64; 3]> {
    let mut bloch = state.effective_bloch();
    for row in bloch.iter_mut() {
        let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }
    bloch
}

/// Measurement axis diagonalizing the estimated qubit: the normalized Bloch
/// estimate, or the Z axis when the estimate is too close to maximally mixed
/// for the direction to mean anything.
pub fn eigenbasis_from_bloch(c_hat: &[f64; 3]) -> [f64; 3] {
    let norm: f64 = c_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < TOL_AXIS {
        return [0.0, 0.0, 1.0];
    }
    [c_hat[0] / norm, c_hat[1] / norm, c_hat[2] / norm]
}

/// Options for the two-round tomography pipeline.
#[derive(Debug, Clone)]
pub struct TomographyOptions {
    pub n1: usize,
    pub n2: usize,
    pub eps: f64,
    pub filter: FilterConfig,
    pub adversary: AdversaryStrategy,
    /// Bypass sampling and feed exact outcome probabilities through the
    /// pipeline algebra.
    pub stub_exact: bool,
}

impl TomographyOptions {
    pub fn new(n1: usize, n2: usize, eps: f64) -> Self {
        TomographyOptions {
            n1,
            n2,
            eps,
            filter: FilterConfig::default(),
            adversary: AdversaryStrategy::None,
            stub_exact: false,
        }
    }
}

/// Result of [`agnostic_tomography`].
#[derive(Debug, Clone)]
pub struct TomographyOutcome {
    pub estimate: ProductMixedState,
    /// Round-one Bloch estimates.
    pub bloch_round1: Vec<[f64; 3]>,
    /// Per-qubit measurement axes used in round two.
    pub axes: Vec<[f64; 3]>,
    /// Round-two smaller-eigenvalue estimates, clipped to [0, 1/2].
    pub lambda: Vec<f64>,
}

/// Two-round adaptive agnostic tomography: learn the Bloch vectors in the
/// Pauli bases, re-measure in the per-qubit eigenbasis of the estimate, and
/// learn the diagonal there. The output qubit j has Bloch vector
/// `(1 − 2λ̂_j)·û_j`, i.e. eigenvalues `(1 − λ̂_j, λ̂_j)` in the learned basis.
pub fn agnostic_tomography(
    state: &ContaminatedState,
    opts: &TomographyOptions,
    seed: Seed,
) -> Result<TomographyOutcome> {
    let n = state.n_qubits();
    let bloch_round1 = if opts.stub_exact {
        round_one_bloch_exact(state)
    } else {
        round_one_bloch_estimate(
            state,
            opts.n1,
            opts.eps,
            &opts.filter,
            seed.child(1),
            opts.adversary,
        )?
    };
    let axes: Vec<[f64; 3]> = bloch_round1.iter().map(eigenbasis_from_bloch).collect();

    let means: Vec<f64> = if opts.stub_exact {
        let eff = state.effective_bloch();
        (0..n).map(|j| outcome_prob_one(&axes[j], &eff[j])).collect()
    } else {
        let basis = MeasurementBasis::from_units(&axes)?;
        let batch_seed = seed.child(2);
        let raw = measure_samples(state, &basis, opts.n2, batch_seed)?;
        let corrupted =
            adversary_corrupt(&raw, opts.eps, opts.adversary, batch_seed.child(u64::MAX))?;
        let learner_eps = opts.eps.max(LEARNER_EPS_FLOOR);
        let learned = robust_learn(&corrupted, learner_eps, &opts.filter)?;
        learned.estimate.means().to_vec()
    };

    let lambda: Vec<f64> = means.iter().map(|m| (1.0 - m).clamp(0.0, 0.5)).collect();
    let qubits = (0..n)
        .map(|j| {
            let scale = 1.0 - 2.0 * lambda[j];
            QubitState::new([
                scale * axes[j][0],
                scale * axes[j][1],
                scale * axes[j][2],
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TomographyOutcome {
        estimate: ProductMixedState::new(qubits),
        bloch_round1,
        axes,
        lambda,
    })
}

/// Fidelity of two qubit states from their Bloch vectors:
/// `F = (1 + a·b + √((1−‖a‖²)(1−‖b‖²)))/2`, the closed form of
/// `tr(√(√ρσ√ρ))²` in dimension two.
pub fn fidelity_qubit(a: &QubitState, b: &QubitState) -> f64 {
    let dot: f64 = a.bloch.iter().zip(&b.bloch).map(|(x, y)| x * y).sum();
    let ra: f64 = 1.0 - a.bloch.iter().map(|v| v * v).sum::<f64>();
    let rb: f64 = 1.0 - b.bloch.iter().map(|v| v * v).sum::<f64>();
    let root = (ra.max(0.0) * rb.max(0.0)).sqrt();
    (0.5 * (1.0 + dot + root)).clamp(0.0, 1.0)
}

/// `√(1 − Π_j F(a_j, b_j))`: the tensorized-fidelity upper bound on the trace
/// distance between two product states.
pub fn trace_distance_bound_product(a: &ProductMixedState, b: &ProductMixedState) -> Result<f64> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::DimensionMismatch(a.n_qubits(), b.n_qubits()));
    }
    let mut prod = 1.0;
    for (qa, qb) in a.qubits.iter().zip(&b.qubits) {
        prod *= fidelity_qubit(qa, qb);
    }
    Ok((1.0 - prod).max(0.0).sqrt())
}

/// Anything that can materialize its full density matrix.
pub trait DensityOperator {
    fn n_qubits(&self) -> usize;
    fn density(&self) -> DMatrix<Complex64>;
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::from_element(ar * br, ac * bc, Complex64::new(0.0, 0.0));
    for i in 0..ar {
        for j in 0..ac {
            let v = a[(i, j)];
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = v * b[(k, l)];
                }
            }
        }
    }
    out
}

impl DensityOperator for ProductMixedState {
    fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    fn density(&self) -> DMatrix<Complex64> {
        let mut acc = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for q in &self.qubits {
            acc = kron(&acc, &q.density());
        }
        acc
    }
}

impl DensityOperator for ContaminatedState {
    fn n_qubits(&self) -> usize {
        self.clean.n_qubits()
    }

    fn density(&self) -> DMatrix<Complex64> {
        let mut acc = self.clean.density() * Complex64::new(1.0 - self.eps, 0.0);
        for (w, comp) in &self.junk {
            acc += comp.density() * Complex64::new(self.eps * w, 0.0);
        }
        acc
    }
}

/// Default qubit cap for [`trace_distance_exact`].
pub const TRD_EXACT_DEFAULT_NMAX: usize = 10;

/// Exact trace distance `½‖ρ_a − ρ_b‖₁` by eigenvalue absolute sum of the
/// dense difference. Builds 2^n × 2^n operators; n ≤ nmax.
///
/// The Hermitian difference H = Re + i·Im is embedded as the real symmetric
/// matrix [[Re, −Im], [Im, Re]], whose spectrum is that of H doubled.
pub fn trace_distance_exact<A: DensityOperator, B: DensityOperator>(
    a: &A,
    b: &B,
    nmax: usize,
) -> Result<f64> {
    let n = a.n_qubits();
    if b.n_qubits() != n {
        return Err(Error::DimensionMismatch(b.n_qubits(), n));
    }
    if n > nmax {
        return Err(Error::TooLarge {
            op: "trace_distance_exact",
            n,
            max: nmax,
        });
    }
    let diff = a.density() - b.density();
    let d = diff.nrows();
    let mut embed = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let v = diff[(i, j)];
            embed[(i, j)] = v.re;
            embed[(i + d, j + d)] = v.re;
            embed[(i, j + d)] = -v.im;
            embed[(i + d, j)] = v.im;
        }
    }
    let eig = embed.symmetric_eigen();
    let abs_sum: f64 = eig.eigenvalues.iter().map(|l| l.abs()).sum();
    Ok(0.25 * abs_sum)
}

/// Exact TV distance between the outcome laws of the contaminated state and
/// its clean part under a basis, by enumerating all 2^n outcomes. Test oracle
/// for the measurement channel; n ≤ 12.
pub fn outcome_law_tv_from_clean(
    state: &ContaminatedState,
    basis: &MeasurementBasis,
) -> Result<f64> {
    let n = state.n_qubits();
    if basis.axes.len() != n {
        return Err(Error::DimensionMismatch(basis.axes.len(), n));
    }
    if n > 12 {
        return Err(Error::TooLarge {
            op: "outcome_law_tv_from_clean",
            n,
            max: 12,
        });
    }
    let clean_probs: Vec<f64> = (0..n)
        .map(|j| outcome_prob_one(&basis.axes[j].unit(), &state.clean.qubits[j].bloch))
        .collect();
    let mut components: Vec<(f64, Vec<f64>)> = vec![(1.0 - state.eps, clean_probs.clone())];
    for (w, comp) in &state.junk {
        let probs = (0..n)
            .map(|j| outcome_prob_one(&basis.axes[j].unit(), &comp.qubits[j].bloch))
            .collect();
        components.push((state.eps * w, probs));
    }
    let mut tv = 0.0;
    for outcome in 0u64..(1 << n) {
        let atom = |probs: &[f64]| -> f64 {
            let mut p = 1.0;
            for (j, pr) in probs.iter().enumerate() {
                p *= if outcome >> j & 1 == 1 { *pr } else { 1.0 - pr };
            }
            p
        };
        let clean_p = atom(&clean_probs);
        let mixed_p: f64 = components.iter().map(|(w, probs)| w * atom(probs)).sum();
        tv += (mixed_p - clean_p).abs();
    }
    Ok(0.5 * tv)
}

// ---- state description file ----

/// Write the plain-text state description: one `cX cY cZ` line per qubit,
/// then optionally `EPS <value>` and per-component `JUNK <weight>` blocks.
pub fn write_state_file<W: Write>(state: &ContaminatedState, w: &mut W) -> Result<()> {
    for q in &state.clean.qubits {
        writeln!(w, "{} {} {}", q.bloch[0], q.bloch[1], q.bloch[2])?;
    }
    if state.eps > 0.0 {
        writeln!(w, "EPS {}", state.eps)?;
        for (weight, comp) in &state.junk {
            writeln!(w, "JUNK {weight}")?;
            for q in &comp.qubits {
                writeln!(w, "{} {} {}", q.bloch[0], q.bloch[1], q.bloch[2])?;
            }
        }
    }
    Ok(())
}

/// Parse the plain-text state description.
pub fn read_state_file<R: BufRead>(r: &mut R) -> Result<ContaminatedState> {
    let mut clean_rows: Vec<[f64; 3]> = Vec::new();
    let mut eps = 0.0f64;
    let mut junk: Vec<(f64, Vec<[f64; 3]>)> = Vec::new();
    enum Section {
        Clean,
        Junk,
    }
    let mut section = Section::Clean;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let first = parts.next().expect("nonempty line");
        match first {
            "EPS" => {
                eps = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Format(format!("line {}: bad EPS", lineno + 1)))?;
            }
            "JUNK" => {
                let w = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Format(format!("line {}: bad JUNK", lineno + 1)))?;
                junk.push((w, Vec::new()));
                section = Section::Junk;
            }
            _ => {
                let x: f64 = first
                    .parse()
                    .map_err(|_| Error::Format(format!("line {}: bad Bloch line", lineno + 1)))?;
                let y: f64 = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Format(format!("line {}: bad Bloch line", lineno + 1)))?;
                let z: f64 = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Format(format!("line {}: bad Bloch line", lineno + 1)))?;
                match section {
                    Section::Clean => clean_rows.push([x, y, z]),
                    Section::Junk => junk
                        .last_mut()
                        .expect("JUNK header precedes Bloch lines")
                        .1
                        .push([x, y, z]),
                }
            }
        }
    }
    let clean = ProductMixedState::from_bloch_rows(&clean_rows)?;
    let junk = junk
        .into_iter()
        .map(|(w, rows)| Ok((w, ProductMixedState::from_bloch_rows(&rows)?)))
        .collect::<Result<Vec<_>>>()?;
    ContaminatedState::new(clean, eps, junk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pure_z(n: usize) -> ProductMixedState {
        ProductMixedState::from_bloch_rows(&vec![[0.0, 0.0, 1.0]; n]).unwrap()
    }

    #[test]
    fn qubit_validation() {
        assert!(QubitState::new([0.6, 0.0, 0.8]).is_ok());
        assert!(QubitState::new([1.0, 0.1, 0.0]).is_err());
        assert!(QubitState::new([f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn measurement_probabilities_match_bloch_formula() {
        // maximally mixed: 1/2 on any axis; |+x⟩ on X: 1; c_X = 0.6 on X: 0.8
        assert_relative_eq!(outcome_prob_one(&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]), 0.5);
        assert_relative_eq!(outcome_prob_one(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]), 1.0);
        assert_relative_eq!(outcome_prob_one(&[1.0, 0.0, 0.0], &[0.6, 0.0, 0.0]), 0.8);
    }

    #[test]
    fn sampling_frequencies_converge() {
        let state = ContaminatedState::pristine(
            ProductMixedState::from_bloch_rows(&[[0.6, 0.0, 0.0], [0.0, 0.0, -0.4]]).unwrap(),
        );
        let basis = MeasurementBasis::uniform(MeasurementAxis::PauliX, 2).unwrap();
        let m = measure_samples(&state, &basis, 200_000, Seed(5)).unwrap();
        let means = m.column_means();
        assert_relative_eq!(means[0], 0.8, epsilon = 5e-3);
        assert_relative_eq!(means[1], 0.5, epsilon = 5e-3);
    }

    #[test]
    fn sampling_is_deterministic() {
        let state = ContaminatedState::pristine(pure_z(3));
        let basis = MeasurementBasis::uniform(MeasurementAxis::PauliY, 3).unwrap();
        let a = measure_samples(&state, &basis, 1000, Seed(1)).unwrap();
        let b = measure_samples(&state, &basis, 1000, Seed(1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn adversary_none_and_zero_eps_are_identity() {
        let state = ContaminatedState::pristine(pure_z(4));
        let basis = MeasurementBasis::uniform(MeasurementAxis::PauliZ, 4).unwrap();
        let m = measure_samples(&state, &basis, 100, Seed(2)).unwrap();
        let same = adversary_corrupt(&m, 0.0, AdversaryStrategy::RareInflate, Seed(3)).unwrap();
        assert_eq!(m, same);
        let same = adversary_corrupt(&m, 0.5, AdversaryStrategy::None, Seed(3)).unwrap();
        assert_eq!(m, same);
        assert!("bogus".parse::<AdversaryStrategy>().is_err());
    }

    #[test]
    fn rare_inflate_shifts_rare_coordinate_mean() {
        use rand::SeedableRng;
        let n_rows = 100_000;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut m = SampleMatrix::zeros(n_rows, 10);
        // coordinate 0 rare (mean 0.001), the rest moderate
        for i in 0..n_rows {
            for j in 0..10 {
                let p = if j == 0 { 0.001 } else { 0.3 };
                if rng.random::<f64>() < p {
                    m.set(i, j, true);
                }
            }
        }
        let corrupted =
            adversary_corrupt_with(&m, 0.02, AdversaryStrategy::RareInflate, Seed(4), 1).unwrap();
        let mean0 = corrupted.column_means()[0];
        // μ(1−ε) + ε ≈ 0.021: twenty-fold relative error for the naive mean
        assert!((mean0 - 0.021).abs() < 0.002, "corrupted mean {mean0}");
    }

    #[test]
    fn mean_shift_writes_fixed_row() {
        let mut m = SampleMatrix::zeros(1000, 2);
        for i in 0..1000 {
            m.set(i, 1, true); // means (0, 1)
        }
        let corrupted = adversary_corrupt(&m, 0.1, AdversaryStrategy::MeanShift, Seed(9)).unwrap();
        let means = corrupted.column_means();
        // attack row is (1, 0): displaces both coordinates by ε
        assert_relative_eq!(means[0], 0.1, epsilon = 1e-12);
        assert_relative_eq!(means[1], 0.9, epsilon = 1e-12);
    }

    #[test]
    fn eigenbasis_cases() {
        assert_eq!(eigenbasis_from_bloch(&[0.0, 0.0, 0.5]), [0.0, 0.0, 1.0]);
        assert_eq!(eigenbasis_from_bloch(&[0.0, 0.0, 0.0]), [0.0, 0.0, 1.0]);
        let u = eigenbasis_from_bloch(&[0.3, 0.4, 0.0]);
        assert_relative_eq!(u[0], 0.6, epsilon = 1e-12);
        assert_relative_eq!(u[1], 0.8, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_qubit_cases() {
        let a = QubitState::new([0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(fidelity_qubit(&a, &a), 1.0);
        let b = QubitState::new([0.0, 0.0, -1.0]).unwrap();
        assert!(fidelity_qubit(&a, &b) < 1e-15);
        let mixed = QubitState::new([0.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(fidelity_qubit(&a, &mixed), 0.5);
    }

    #[test]
    fn fidelity_matches_dense_oracle() {
        use crate::oracles::{dense_fidelity, mat2_from_bloch};
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let rand_bloch = |rng: &mut rand_chacha::ChaCha8Rng| -> [f64; 3] {
                let v = [
                    rng.random::<f64>() * 2.0 - 1.0,
                    rng.random::<f64>() * 2.0 - 1.0,
                    rng.random::<f64>() * 2.0 - 1.0,
                ];
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let scale = rng.random::<f64>().min(0.999) / norm.max(1e-9);
                [v[0] * scale, v[1] * scale, v[2] * scale]
            };
            let ca = rand_bloch(&mut rng);
            let cb = rand_bloch(&mut rng);
            let fast = fidelity_qubit(
                &QubitState::new(ca).unwrap(),
                &QubitState::new(cb).unwrap(),
            );
            let dense = dense_fidelity(&mat2_from_bloch(ca), &mat2_from_bloch(cb)).unwrap();
            assert_relative_eq!(fast, dense, epsilon = 1e-10);
        }
    }

    #[test]
    fn trace_distance_exact_cases() {
        let a = pure_z(3);
        assert_relative_eq!(
            trace_distance_exact(&a, &a, TRD_EXACT_DEFAULT_NMAX).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        // orthogonal pure product states are at distance 1
        let b = ProductMixedState::from_bloch_rows(&[
            [0.0, 0.0, -1.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_relative_eq!(
            trace_distance_exact(&a, &b, TRD_EXACT_DEFAULT_NMAX).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let big = pure_z(11);
        assert!(trace_distance_exact(&big, &big, TRD_EXACT_DEFAULT_NMAX).is_err());
    }

    #[test]
    fn contamination_stays_within_eps_in_trace_distance() {
        let clean = pure_z(4);
        let junk = ProductMixedState::from_bloch_rows(&[
            [1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, -1.0],
            [0.5, 0.5, 0.0],
        ])
        .unwrap();
        let state = ContaminatedState::new(clean.clone(), 0.05, vec![(1.0, junk)]).unwrap();
        let trd = trace_distance_exact(&state, &clean, TRD_EXACT_DEFAULT_NMAX).unwrap();
        assert!(trd <= 0.05 + 1e-12, "trd = {trd}");
        // outcome law stays within trd of the clean product law
        let basis = MeasurementBasis::uniform(MeasurementAxis::PauliX, 4).unwrap();
        let tv = outcome_law_tv_from_clean(&state, &basis).unwrap();
        assert!(tv <= trd + 1e-12, "tv = {tv} > trd = {trd}");
    }

    #[test]
    fn stub_exact_pipeline_recovers_pure_state() {
        let state = ContaminatedState::pristine(pure_z(5));
        let mut opts = TomographyOptions::new(10, 10, 0.0);
        opts.stub_exact = true;
        let outcome = agnostic_tomography(&state, &opts, Seed(0)).unwrap();
        for q in &outcome.estimate.qubits {
            assert_relative_eq!(q.bloch[2], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stub_exact_pipeline_recovers_random_mixed_state() {
        let clean = ProductMixedState::from_bloch_rows(&[
            [0.3, -0.2, 0.5],
            [0.0, 0.0, 0.9],
            [-0.7, 0.1, 0.1],
        ])
        .unwrap();
        let state = ContaminatedState::pristine(clean.clone());
        let mut opts = TomographyOptions::new(10, 10, 0.0);
        opts.stub_exact = true;
        let outcome = agnostic_tomography(&state, &opts, Seed(0)).unwrap();
        for (est, truth) in outcome.estimate.qubits.iter().zip(&clean.qubits) {
            for k in 0..3 {
                assert_relative_eq!(est.bloch[k], truth.bloch[k], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn round_one_survives_rare_inflate_on_outcome_bits() {
        let clean = ProductMixedState::from_bloch_rows(&[
            [0.9, 0.0, 0.3],
            [0.0, -0.9, 0.2],
            [0.1, 0.1, 0.95],
            [0.4, 0.4, 0.4],
        ])
        .unwrap();
        let state = ContaminatedState::pristine(clean);
        let eps = 0.02;
        let bloch = round_one_bloch_estimate(
            &state,
            30_000,
            eps,
            &crate::filter::FilterConfig::default(),
            Seed(73),
            AdversaryStrategy::RareInflate,
        )
        .unwrap();
        let eff = state.effective_bloch();
        let mut frob = 0.0;
        for (est, truth) in bloch.iter().zip(&eff) {
            for k in 0..3 {
                frob += (est[k] - truth[k]) * (est[k] - truth[k]);
            }
        }
        let frob = frob.sqrt();
        assert!(frob < 0.15, "round-one Frobenius error {frob} under adversary");
    }

    #[test]
    fn sampled_tomography_converges_on_clean_state() {
        let clean = ProductMixedState::from_bloch_rows(&[
            [0.5, 0.1, 0.2],
            [0.0, -0.8, 0.1],
            [0.2, 0.2, -0.5],
        ])
        .unwrap();
        let state = ContaminatedState::pristine(clean.clone());
        let opts = TomographyOptions::new(40_000, 40_000, 0.0);
        let outcome = agnostic_tomography(&state, &opts, Seed(11)).unwrap();
        let trd = trace_distance_exact(&outcome.estimate, &clean, TRD_EXACT_DEFAULT_NMAX).unwrap();
        assert!(trd < 0.03, "clean-run trace distance {trd}");
    }

    #[test]
    fn state_file_roundtrip() {
        let clean = ProductMixedState::from_bloch_rows(&[[0.1, 0.2, 0.3], [0.0, 0.0, -1.0]])
            .unwrap();
        let junk1 = ProductMixedState::from_bloch_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
            .unwrap();
        let junk2 = ProductMixedState::from_bloch_rows(&[[0.0, 0.0, 0.0], [0.2, 0.0, 0.0]])
            .unwrap();
        let state =
            ContaminatedState::new(clean, 0.03, vec![(0.6, junk1), (0.4, junk2)]).unwrap();
        let mut buf = Vec::new();
        write_state_file(&state, &mut buf).unwrap();
        let back = read_state_file(&mut &buf[..]).unwrap();
        assert_eq!(back.clean, state.clean);
        assert_eq!(back.eps, state.eps);
        assert_eq!(back.junk.len(), 2);
        assert_eq!(back.junk[0].0, 0.6);
        assert_eq!(back.junk[1].1, state.junk[1].1);
    }

    #[test]
    fn junk_weights_must_sum_to_one() {
        let clean = pure_z(1);
        let junk = pure_z(1);
        assert!(ContaminatedState::new(clean, 0.1, vec![(0.5, junk)]).is_err());
    }

    /// Dense fidelity of two multi-qubit density matrices through the real
    /// embedding E(H) = [[Re, −Im], [Im, Re]]: E is a *-homomorphism, so
    /// E(√H) = √E(H) and tr over the embedding doubles.
    fn dense_product_fidelity(a: &ProductMixedState, b: &ProductMixedState) -> f64 {
        use nalgebra::DMatrix;
        let embed = |m: &DMatrix<Complex64>| -> DMatrix<f64> {
            let d = m.nrows();
            let mut out = DMatrix::<f64>::zeros(2 * d, 2 * d);
            for i in 0..d {
                for j in 0..d {
                    out[(i, j)] = m[(i, j)].re;
                    out[(i + d, j + d)] = m[(i, j)].re;
                    out[(i, j + d)] = -m[(i, j)].im;
                    out[(i + d, j)] = m[(i, j)].im;
                }
            }
            out
        };
        let sqrt_psd = |m: &DMatrix<f64>| -> DMatrix<f64> {
            let eig = m.clone().symmetric_eigen();
            let d = m.nrows();
            let mut out = DMatrix::<f64>::zeros(d, d);
            for k in 0..d {
                let lam = eig.eigenvalues[k].max(0.0).sqrt();
                let v = eig.eigenvectors.column(k);
                for i in 0..d {
                    for j in 0..d {
                        out[(i, j)] += lam * v[i] * v[j];
                    }
                }
            }
            out
        };
        let ra = embed(&a.density());
        let rb = embed(&b.density());
        let sa = sqrt_psd(&ra);
        let inner = &sa * rb * &sa;
        let tr_sqrt = sqrt_psd(&inner).trace() / 2.0;
        tr_sqrt * tr_sqrt
    }

    #[test]
    fn fidelity_tensorizes_over_product_states() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(59);
        for n in 1..=3usize {
            for _ in 0..5 {
                let rand_state = |rng: &mut rand_chacha::ChaCha8Rng| {
                    let qubits = (0..n)
                        .map(|_| {
                            let v = [
                                rng.random::<f64>() * 2.0 - 1.0,
                                rng.random::<f64>() * 2.0 - 1.0,
                                rng.random::<f64>() * 2.0 - 1.0,
                            ];
                            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                            let r = rng.random::<f64>() * 0.98 / norm.max(1e-9);
                            QubitState::new([v[0] * r, v[1] * r, v[2] * r]).unwrap()
                        })
                        .collect();
                    ProductMixedState::new(qubits)
                };
                let a = rand_state(&mut rng);
                let b = rand_state(&mut rng);
                let product: f64 = a
                    .qubits
                    .iter()
                    .zip(&b.qubits)
                    .map(|(x, y)| fidelity_qubit(x, y))
                    .product();
                let dense = dense_product_fidelity(&a, &b);
                // −ln F adds across qubits ⇔ F multiplies
                assert_relative_eq!(dense, product, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn trace_distance_bounded_by_tensorized_fidelity() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        for _ in 0..10 {
            let n = 2 + (rng.random::<f64>() * 4.0) as usize;
            let rand_state = |rng: &mut rand_chacha::ChaCha8Rng| {
                let qubits = (0..n)
                    .map(|_| {
                        let v = [
                            rng.random::<f64>() * 2.0 - 1.0,
                            rng.random::<f64>() * 2.0 - 1.0,
                            rng.random::<f64>() * 2.0 - 1.0,
                        ];
                        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                        let r = rng.random::<f64>() / norm.max(1e-9);
                        QubitState::new([v[0] * r, v[1] * r, v[2] * r]).unwrap()
                    })
                    .collect();
                ProductMixedState::new(qubits)
            };
            let a = rand_state(&mut rng);
            let b = rand_state(&mut rng);
            let exact = trace_distance_exact(&a, &b, TRD_EXACT_DEFAULT_NMAX).unwrap();
            let bound = trace_distance_bound_product(&a, &b).unwrap();
            assert!(
                exact <= bound + 1e-9,
                "trd {exact} exceeds sqrt(1 − ΠF) = {bound}"
            );
        }
    }
}
