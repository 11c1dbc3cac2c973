//! C ABI over `histories-core`.
//!
//! Every function returns a [`DhStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`dh_last_error_message`]. Spaces are opaque and must be released with
//! [`dh_space_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use histories_core::ergodic::{time_average_measure, DiscreteMap, Region};
use histories_core::models::{
    branch_count, count_fraction, hilbert_bernoulli_model_with_present, measure_fraction,
    partial_decoherence_model, BranchTree, FrequencyQuery,
};
use histories_core::probability::{
    absolute_measure, chance_of_present, compare_views_with_tolerance, fatalist_future, minimalist_future,
    retrodictive_chance,
};
use histories_core::{config::ModelConfig, decoherence_report, History, HistoriesError, HistorySpace};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Dimension = 3,
    Validation = 4,
    OutOfRange = 5,
    Contract = 6,
    ZeroMeasure = 7,
    Numerical = 8,
    Budget = 9,
    Unsupported = 10,
    Config = 11,
    Panic = 12,
}

/// Opaque history space.
pub struct DhSpace {
    inner: HistorySpace,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DhDecoherenceReport {
    pub n_histories: u64,
    pub max_offdiag: f64,
    pub max_normalized_offdiag: f64,
    pub tolerance: f64,
    pub passes: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DhViewComparison {
    pub minimalist: f64,
    pub fatalist: f64,
    pub gap: f64,
    pub max_offdiag: f64,
    pub max_normalized_offdiag: f64,
    pub decoherence_passes: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &HistoriesError) -> DhStatus {
    match e {
        HistoriesError::Dimension { .. } => DhStatus::Dimension,
        HistoriesError::Validation(_) => DhStatus::Validation,
        HistoriesError::IndexOutOfRange { .. } | HistoriesError::RangeOutsideGrid { .. } => DhStatus::OutOfRange,
        HistoriesError::Contract(_) => DhStatus::Contract,
        HistoriesError::ZeroMeasureCondition { .. } => DhStatus::ZeroMeasure,
        HistoriesError::NumericalIntegrity { .. } => DhStatus::Numerical,
        HistoriesError::Budget(_) => DhStatus::Budget,
        HistoriesError::Unsupported(_) => DhStatus::Unsupported,
        HistoriesError::Config(_) => DhStatus::Config,
    }
}

struct Failure(DhStatus, String);

impl From<HistoriesError> for Failure {
    fn from(e: HistoriesError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DhStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DhStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(DhStatus::NullPointer, format!("{what} is null"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn space_ref<'a>(space: *const DhSpace) -> Result<&'a HistorySpace, Failure> {
    space.as_ref().map(|s| &s.inner).ok_or_else(|| null("space"))
}

unsafe fn outcomes<'a>(ptr: *const usize, len: usize) -> Result<&'a [usize], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null("outcome array"));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn boxed(out: *mut *mut DhSpace, inner: HistorySpace) -> Result<(), Failure> {
    write_out(out, Box::into_raw(Box::new(DhSpace { inner })))
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dh_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// `n` qubits prepared in √p|0⟩ + √(1−p)|1⟩, measured one per time.
///
/// # Safety
/// `out` must be a valid pointer to a `DhSpace*`.
#[no_mangle]
pub unsafe extern "C" fn dh_space_bernoulli(n: usize, p: f64, present: usize, out: *mut *mut DhSpace) -> DhStatus {
    guard(|| boxed(out, hilbert_bernoulli_model_with_present(n, p, present)?))
}

/// # Safety
/// `out` must be a valid pointer to a `DhSpace*`.
#[no_mangle]
pub unsafe extern "C" fn dh_space_partial_decoherence(delta: f64, out: *mut *mut DhSpace) -> DhStatus {
    guard(|| boxed(out, partial_decoherence_model(delta)?))
}

/// Builds a space from a model config document (TOML text).
///
/// # Safety
/// `config` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dh_space_from_config(config: *const c_char, out: *mut *mut DhSpace) -> DhStatus {
    guard(|| {
        if config.is_null() {
            return Err(null("config"));
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|e| Failure(DhStatus::InvalidUtf8, e.to_string()))?;
        boxed(out, ModelConfig::parse(text)?.build_space()?)
    })
}

/// # Safety
/// `space` must come from a `dh_space_*` constructor and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dh_space_free(space: *mut DhSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Hilbert-space dimension, number of times and present position.
///
/// # Safety
/// `space` must be live; each out pointer may be null to skip it.
#[no_mangle]
pub unsafe extern "C" fn dh_space_shape(
    space: *const DhSpace,
    dim: *mut usize,
    times: *mut usize,
    present: *mut usize,
) -> DhStatus {
    guard(|| {
        let s = space_ref(space)?;
        for (p, v) in [(dim, s.dim()), (times, s.len()), (present, s.present())] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `space` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dh_decoherence_report(
    space: *const DhSpace,
    eps_dec: f64,
    out: *mut DhDecoherenceReport,
) -> DhStatus {
    guard(|| {
        let r = decoherence_report(space_ref(space)?, eps_dec)?;
        write_out(
            out,
            DhDecoherenceReport {
                n_histories: r.n_histories as u64,
                max_offdiag: r.max_offdiag,
                max_normalized_offdiag: r.max_normalized_offdiag,
                tolerance: r.tolerance,
                passes: r.passes,
            },
        )
    })
}

/// The future segment starts right after the present and has `future_len` outcomes.
///
/// # Safety
/// `space` must be live, `future` must point at `future_len` values, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dh_compare_views(
    space: *const DhSpace,
    future: *const usize,
    future_len: usize,
    present_outcome: usize,
    eps_dec: f64,
    out: *mut DhViewComparison,
) -> DhStatus {
    guard(|| {
        let s = space_ref(space)?;
        let f = History::new(s.present() + 1, outcomes(future, future_len)?.to_vec());
        let c = compare_views_with_tolerance(s, &f, present_outcome, eps_dec)?;
        write_out(
            out,
            DhViewComparison {
                minimalist: c.minimalist,
                fatalist: c.fatalist,
                gap: c.gap,
                max_offdiag: c.max_offdiag,
                max_normalized_offdiag: c.max_normalized_offdiag,
                decoherence_passes: c.decoherence_passes,
            },
        )
    })
}

/// # Safety
/// As for [`dh_compare_views`].
#[no_mangle]
pub unsafe extern "C" fn dh_minimalist_future(
    space: *const DhSpace,
    future: *const usize,
    future_len: usize,
    present_outcome: usize,
    out: *mut f64,
) -> DhStatus {
    guard(|| {
        let s = space_ref(space)?;
        let f = History::new(s.present() + 1, outcomes(future, future_len)?.to_vec());
        write_out(out, minimalist_future(s, &f, present_outcome)?)
    })
}

/// # Safety
/// As for [`dh_compare_views`].
#[no_mangle]
pub unsafe extern "C" fn dh_fatalist_future(
    space: *const DhSpace,
    future: *const usize,
    future_len: usize,
    present_outcome: usize,
    out: *mut f64,
) -> DhStatus {
    guard(|| {
        let s = space_ref(space)?;
        let f = History::new(s.present() + 1, outcomes(future, future_len)?.to_vec());
        write_out(out, fatalist_future(s, &f, present_outcome)?)
    })
}

/// # Safety
/// `space` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dh_chance_of_present(space: *const DhSpace, present_outcome: usize, out: *mut f64) -> DhStatus {
    guard(|| write_out(out, chance_of_present(space_ref(space)?, present_outcome)?))
}

/// The past covers every time before the present, earliest first.
///
/// # Safety
/// `space` must be live, `past` must point at `past_len` values, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dh_retrodictive_chance(
    space: *const DhSpace,
    past: *const usize,
    past_len: usize,
    present_outcome: usize,
    out: *mut f64,
) -> DhStatus {
    guard(|| {
        let s = space_ref(space)?;
        let p = History::new(0, outcomes(past, past_len)?.to_vec());
        write_out(out, retrodictive_chance(s, &p, present_outcome)?)
    })
}

/// Measure of a full history given as one outcome per time.
///
/// # Safety
/// `space` must be live, `history` must point at `len` values, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dh_absolute_measure(
    space: *const DhSpace,
    history: *const usize,
    len: usize,
    out: *mut f64,
) -> DhStatus {
    guard(|| {
        let s = space_ref(space)?;
        let h = History::new(0, outcomes(history, len)?.to_vec());
        write_out(out, absolute_measure(s, &h)?)
    })
}

/// C(n, k); `DH_STATUS_BUDGET` when it does not fit in 64 bits.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dh_branch_count_u64(n: u64, k: u64, out: *mut u64) -> DhStatus {
    guard(|| {
        let count = branch_count(n, k)?;
        let small = u64::try_from(&count)
            .map_err(|_| Failure(DhStatus::Budget, format!("C({n}, {k}) = {count} exceeds 64 bits")))?;
        write_out(out, small)
    })
}

/// Fraction of the 2^n yes/no histories whose frequency of outcome 0 lies in [lo, hi].
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dh_count_fraction(n: u64, lo: f64, hi: f64, out: *mut f64) -> DhStatus {
    guard(|| write_out(out, count_fraction(n, &FrequencyQuery::new(0, lo, hi)?)))
}

/// Measure of the same set when outcome 0 has weight `p` on every trial.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dh_measure_fraction(n: usize, p: f64, lo: f64, hi: f64, out: *mut f64) -> DhStatus {
    guard(|| {
        let tree = BranchTree::bernoulli(n, p)?;
        write_out(out, measure_fraction(&tree, &FrequencyQuery::new(0, lo, hi)?)?)
    })
}

/// Fraction of the first `steps` points of x ↦ x + alpha (mod 1) from `x0` landing in [lo, hi).
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dh_time_average_rotation(
    alpha: f64,
    x0: f64,
    lo: f64,
    hi: f64,
    steps: u64,
    out: *mut f64,
) -> DhStatus {
    guard(|| {
        let map = DiscreteMap::rotation(vec![alpha], vec![x0])?;
        let region = Region::interval(lo, hi)?;
        write_out(out, time_average_measure(&map, &region, steps)?.value())
    })
}
