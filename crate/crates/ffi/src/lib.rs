//! C ABI for the robust product-distribution learner.
//!
//! Conventions: opaque handles with explicit `_new`/`_free` pairs, status
//! codes for every fallible call, out-parameters for values. Sample matrices
//! cross the boundary as row-major byte-per-entry arrays (0/1). Every entry
//! point catches panics and reports [`RkStatus::Panic`] instead of unwinding
//! across the ABI.

use robustkit::dualnorm::{
    tv_characterization, tv_upper_bound_product, vector_dual_norm, ProductDistribution,
};
use robustkit::error::Error;
use robustkit::filter::{robust_learn, FilterConfig, RobustLearnOutput};
use robustkit::quantumsim::{fidelity_qubit, QubitState};
use robustkit::samples::SampleMatrix;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NumericFailure = 4,
    Panic = 5,
}

fn status_of(e: &Error) -> RkStatus {
    match e {
        Error::DimensionMismatch(_, _) => RkStatus::DimensionMismatch,
        Error::OutOfRange { .. }
        | Error::NonFinite(_)
        | Error::EmptySamples
        | Error::TooFewSamples { .. }
        | Error::TooLarge { .. }
        | Error::UnknownStrategy(_)
        | Error::InvalidState(_)
        | Error::Config(_)
        | Error::Format(_) => RkStatus::InvalidArgument,
        _ => RkStatus::NumericFailure,
    }
}

fn guarded<F: FnOnce() -> RkStatus>(f: F) -> RkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => RkStatus::Panic,
    }
}

/// Opaque tunables for the robust learner.
pub struct RkFilterConfig {
    inner: FilterConfig,
}

/// Opaque result of a robust_learn run.
pub struct RkLearnResult {
    output: RobustLearnOutput,
}

/// Version string of the underlying library; static storage, do not free.
#[no_mangle]
pub extern "C" fn rk_version() -> *const c_char {
    concat!("robustkit ", env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Allocate a filter config with the library defaults.
#[no_mangle]
pub extern "C" fn rk_filter_config_new() -> *mut RkFilterConfig {
    Box::into_raw(Box::new(RkFilterConfig {
        inner: FilterConfig::default(),
    }))
}

/// Free a config created by [`rk_filter_config_new`]. NULL is a no-op.
///
/// # Safety
/// `cfg` must be NULL or a pointer previously returned by
/// [`rk_filter_config_new`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn rk_filter_config_free(cfg: *mut RkFilterConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Set the stopping-rule constant C in `C · ε · ln²(1/ε)`.
///
/// # Safety
/// `cfg` must be a live pointer from [`rk_filter_config_new`].
#[no_mangle]
pub unsafe extern "C" fn rk_filter_config_set_stop_constant(
    cfg: *mut RkFilterConfig,
    stop_constant: f64,
) -> RkStatus {
    if cfg.is_null() {
        return RkStatus::NullPointer;
    }
    if !(stop_constant > 0.0) || !stop_constant.is_finite() {
        return RkStatus::InvalidArgument;
    }
    (*cfg).inner.stop_constant = stop_constant;
    RkStatus::Ok
}

/// Seed for the certificate solver's randomized restarts; fixes the run
/// bit-for-bit.
///
/// # Safety
/// `cfg` must be a live pointer from [`rk_filter_config_new`].
#[no_mangle]
pub unsafe extern "C" fn rk_filter_config_set_solver_seed(
    cfg: *mut RkFilterConfig,
    seed: u64,
) -> RkStatus {
    if cfg.is_null() {
        return RkStatus::NullPointer;
    }
    (*cfg).inner.solver.seed = seed;
    RkStatus::Ok
}

/// Run the robust learner on an ε-corrupted binary sample matrix.
///
/// `samples` is row-major with one byte per entry (0 or 1), `n_samples` rows
/// and `n_coords` columns. On success `*out` owns the result and must be
/// freed with [`rk_learn_result_free`]. `cfg` may be NULL for defaults.
///
/// # Safety
/// `samples` must point to `n_samples * n_coords` readable bytes; `out` must
/// be a valid writable pointer; `cfg`, when non-NULL, must be a live config.
#[no_mangle]
pub unsafe extern "C" fn rk_robust_learn(
    samples: *const u8,
    n_samples: usize,
    n_coords: usize,
    eps: f64,
    cfg: *const RkFilterConfig,
    out: *mut *mut RkLearnResult,
) -> RkStatus {
    if samples.is_null() || out.is_null() {
        return RkStatus::NullPointer;
    }
    let bytes = std::slice::from_raw_parts(samples, n_samples * n_coords);
    let config = if cfg.is_null() {
        FilterConfig::default()
    } else {
        (*cfg).inner.clone()
    };
    guarded(|| {
        let mut matrix = SampleMatrix::zeros(n_samples, n_coords);
        for (idx, &b) in bytes.iter().enumerate() {
            match b {
                0 => {}
                1 => matrix.set(idx / n_coords, idx % n_coords, true),
                _ => return RkStatus::InvalidArgument,
            }
        }
        match robust_learn(&matrix, eps, &config) {
            Ok(output) => {
                *out = Box::into_raw(Box::new(RkLearnResult { output }));
                RkStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Free a result from [`rk_robust_learn`]. NULL is a no-op.
///
/// # Safety
/// `result` must be NULL or a pointer previously returned through
/// [`rk_robust_learn`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn rk_learn_result_free(result: *mut RkLearnResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Copy the estimated mean vector into `out` (length `len`, which must equal
/// the learned dimension).
///
/// # Safety
/// `result` must be live; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rk_learn_result_means(
    result: *const RkLearnResult,
    out: *mut f64,
    len: usize,
) -> RkStatus {
    if result.is_null() || out.is_null() {
        return RkStatus::NullPointer;
    }
    let means = (*result).output.estimate.means();
    if means.len() != len {
        return RkStatus::DimensionMismatch;
    }
    std::ptr::copy_nonoverlapping(means.as_ptr(), out, len);
    RkStatus::Ok
}

/// Number of filter iterations the run took.
///
/// # Safety
/// `result` must be live.
#[no_mangle]
pub unsafe extern "C" fn rk_learn_result_iterations(result: *const RkLearnResult) -> usize {
    if result.is_null() {
        return 0;
    }
    (*result).output.trace.iterations.len()
}

/// Certificate value at termination.
///
/// # Safety
/// `result` must be live.
#[no_mangle]
pub unsafe extern "C" fn rk_learn_result_certificate_value(
    result: *const RkLearnResult,
) -> f64 {
    if result.is_null() {
        return f64::NAN;
    }
    (*result).output.trace.final_certificate_value
}

/// Stopping threshold the run used.
///
/// # Safety
/// `result` must be live.
#[no_mangle]
pub unsafe extern "C" fn rk_learn_result_threshold(result: *const RkLearnResult) -> f64 {
    if result.is_null() {
        return f64::NAN;
    }
    (*result).output.trace.threshold
}

unsafe fn product_from_raw(p: *const f64, n: usize) -> Result<ProductDistribution, RkStatus> {
    if p.is_null() {
        return Err(RkStatus::NullPointer);
    }
    let means = std::slice::from_raw_parts(p, n).to_vec();
    ProductDistribution::new(means).map_err(|e| status_of(&e))
}

/// Two-block TV characterization of the distance between product
/// distributions with means `p` (entries ≤ 2/3) and `q`.
///
/// # Safety
/// `p` and `q` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_tv_characterization(
    p: *const f64,
    q: *const f64,
    n: usize,
    out: *mut f64,
) -> RkStatus {
    if out.is_null() {
        return RkStatus::NullPointer;
    }
    guarded(|| {
        let pd = match product_from_raw(p, n) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let qd = match product_from_raw(q, n) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match tv_characterization(&pd, &qd) {
            Ok(v) => {
                *out = v;
                RkStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Certified Hellinger upper bound on the TV distance between two product
/// distributions.
///
/// # Safety
/// `p` and `q` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_tv_upper_bound(
    p: *const f64,
    q: *const f64,
    n: usize,
    out: *mut f64,
) -> RkStatus {
    if out.is_null() {
        return RkStatus::NullPointer;
    }
    guarded(|| {
        let pd = match product_from_raw(p, n) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let qd = match product_from_raw(q, n) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match tv_upper_bound_product(&pd, &qd) {
            Ok(v) => {
                *out = v;
                RkStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Dual norm `sup_{y in T_mu} <y, x>` with the attaining witness (optional:
/// pass NULL to skip copying the witness).
///
/// # Safety
/// `x` and `mu` must point to `n` readable doubles, `out_value` must be
/// writable, and `out_witness` must be NULL or point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rk_vector_dual_norm(
    x: *const f64,
    mu: *const f64,
    n: usize,
    out_value: *mut f64,
    out_witness: *mut f64,
) -> RkStatus {
    if x.is_null() || out_value.is_null() {
        return RkStatus::NullPointer;
    }
    guarded(|| {
        let base = match product_from_raw(mu, n) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let xs = std::slice::from_raw_parts(x, n);
        match vector_dual_norm(xs, &base) {
            Ok((value, witness)) => {
                *out_value = value;
                if !out_witness.is_null() {
                    std::ptr::copy_nonoverlapping(witness.y.as_ptr(), out_witness, n);
                }
                RkStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Fidelity of two single-qubit states given as Bloch 3-vectors.
///
/// # Safety
/// `a` and `b` must point to 3 readable doubles each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_fidelity_qubit(
    a: *const f64,
    b: *const f64,
    out: *mut f64,
) -> RkStatus {
    if a.is_null() || b.is_null() || out.is_null() {
        return RkStatus::NullPointer;
    }
    guarded(|| {
        let read = |p: *const f64| -> [f64; 3] {
            let s = std::slice::from_raw_parts(p, 3);
            [s[0], s[1], s[2]]
        };
        let qa = match QubitState::new(read(a)) {
            Ok(v) => v,
            Err(e) => return status_of(&e),
        };
        let qb = match QubitState::new(read(b)) {
            Ok(v) => v,
            Err(e) => return status_of(&e),
        };
        *out = fidelity_qubit(&qa, &qb);
        RkStatus::Ok
    })
}
