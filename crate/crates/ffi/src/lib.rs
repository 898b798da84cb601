//! C ABI for the marginfit library.
//!
//! Conventions:
//! - Every fallible function returns a [`MarginfitStatus`]; out-parameters
//!   are written only when the status is `Ok`.
//! - Handles are opaque. Free them with the matching `_free` function;
//!   `_free` accepts NULL. Using a handle after freeing it is undefined
//!   behavior, as in any C API.
//! - Matrices are row-major with `n * p` entries.
//! - After a failing call, [`marginfit_last_error_message`] returns a
//!   NUL-terminated description. The pointer is thread-local and stays
//!   valid until the next failing call on the same thread.
//! - Panics never unwind across the boundary; they surface as
//!   `MARGINFIT_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;

use marginfit::causal::{margin_pipeline, PipelineConfig};
use marginfit::dataset::{Dataset, TreatmentKind, TreatmentVector};
use marginfit::error::Error;
use marginfit::geometry::{relaxed_overlap_check, OverlapVerdict};
use marginfit::svm::{
    fit_linear_svm, margin_set, SvmModel, SvmParams, DEFAULT_KKT_TOL, DEFAULT_MARGIN_TOL,
};
use ndarray::Array2;

/// Result code for every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginfitStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Schema = 4,
    Parse = 5,
    InsufficientData = 6,
    NonFinite = 7,
    /// A solver exhausted its iteration budget.
    Convergence = 8,
    Degenerate = 9,
    EmptyMargin = 10,
    Io = 11,
    /// An output buffer is smaller than the data to be written.
    BufferTooSmall = 12,
    /// An internal invariant failed; the library caught a panic.
    Internal = 13,
}

/// Treatment coding expected by [`marginfit_dataset_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginfitTreatmentKind {
    /// Exactly two distinct values; the smaller is coded -1.
    Binary = 0,
    /// Integer levels 0..K with K >= 3, every level present.
    Categorical = 1,
    /// At least 3 distinct finite doses.
    Continuous = 2,
}

/// Opaque dataset handle.
pub struct MarginfitDataset(Dataset);

/// Opaque fitted SVM handle.
pub struct MarginfitSvmModel(SvmModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    // NUL bytes inside the message would truncate it; replace them.
    let clean: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    let c = CString::new(clean).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn fail(e: &Error) -> MarginfitStatus {
    set_last_error(&e.to_string());
    match e {
        Error::InvalidArgument(_) => MarginfitStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => MarginfitStatus::DimensionMismatch,
        Error::Schema(_) => MarginfitStatus::Schema,
        Error::Parse { .. } | Error::Csv(_) => MarginfitStatus::Parse,
        Error::InsufficientData(_) => MarginfitStatus::InsufficientData,
        Error::NonFinite(_) => MarginfitStatus::NonFinite,
        Error::Convergence { .. } => MarginfitStatus::Convergence,
        Error::Degenerate(_) => MarginfitStatus::Degenerate,
        Error::EmptyMargin(_) => MarginfitStatus::EmptyMargin,
        Error::Io(_) => MarginfitStatus::Io,
    }
}

fn fail_null(what: &str) -> MarginfitStatus {
    set_last_error(&format!("{what} must not be NULL"));
    MarginfitStatus::NullPointer
}

/// Runs `f` with a panic guard so unwinding never crosses the ABI.
fn guarded(f: impl FnOnce() -> MarginfitStatus) -> MarginfitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            MarginfitStatus::Internal
        }
    }
}

/// Library version as a NUL-terminated string. Never NULL; the pointer is
/// valid for the life of the process.
#[no_mangle]
pub extern "C" fn marginfit_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(marginfit::VERSION).unwrap_or_default())
        .as_ptr()
}

/// Description of the last error observed on this thread, or an empty
/// string if none. Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn marginfit_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds a dataset from row-major covariates `z` (`n` rows, `p`
/// columns), a length-`n` treatment vector interpreted per `kind`, and an
/// optional length-`n` outcome (`outcome` may be NULL). On success writes
/// a new handle to `out`; free it with [`marginfit_dataset_free`].
///
/// # Safety
/// `z` must point to `n * p` readable doubles; `treatment` (and `outcome`
/// when non-NULL) to `n` readable doubles; `out` to a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn marginfit_dataset_new(
    z: *const f64,
    n: usize,
    p: usize,
    treatment: *const f64,
    kind: MarginfitTreatmentKind,
    outcome: *const f64,
    out: *mut *mut MarginfitDataset,
) -> MarginfitStatus {
    guarded(|| {
        if out.is_null() {
            return fail_null("out");
        }
        if z.is_null() {
            return fail_null("z");
        }
        if treatment.is_null() {
            return fail_null("treatment");
        }
        let Some(len) = n.checked_mul(p) else {
            set_last_error("n * p overflows");
            return MarginfitStatus::InvalidArgument;
        };
        let zm = match Array2::from_shape_vec((n, p), slice(z, len).to_vec()) {
            Ok(m) => m,
            Err(e) => {
                set_last_error(&e.to_string());
                return MarginfitStatus::InvalidArgument;
            }
        };
        let kind = match kind {
            MarginfitTreatmentKind::Binary => TreatmentKind::Binary,
            MarginfitTreatmentKind::Categorical => TreatmentKind::Categorical,
            MarginfitTreatmentKind::Continuous => TreatmentKind::Continuous,
        };
        let t = match TreatmentVector::from_values(slice(treatment, n), kind) {
            Ok(t) => t,
            Err(e) => return fail(&e),
        };
        let y = if outcome.is_null() {
            None
        } else {
            Some(slice(outcome, n).iter().cloned().collect())
        };
        let names = (1..=p).map(|j| format!("z{j}")).collect();
        match Dataset::new(zm, t, y, names) {
            Ok(d) => {
                *out = Box::into_raw(Box::new(MarginfitDataset(d)));
                MarginfitStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of rows.
///
/// # Safety
/// `d` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn marginfit_dataset_n(
    d: *const MarginfitDataset,
    out: *mut usize,
) -> MarginfitStatus {
    guarded(|| {
        let (Some(d), false) = (d.as_ref(), out.is_null()) else {
            return fail_null("d and out");
        };
        *out = d.0.n();
        MarginfitStatus::Ok
    })
}

/// Number of covariate columns.
///
/// # Safety
/// `d` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn marginfit_dataset_p(
    d: *const MarginfitDataset,
    out: *mut usize,
) -> MarginfitStatus {
    guarded(|| {
        let (Some(d), false) = (d.as_ref(), out.is_null()) else {
            return fail_null("d and out");
        };
        *out = d.0.p();
        MarginfitStatus::Ok
    })
}

/// Frees a dataset handle. NULL is a no-op.
///
/// # Safety
/// `d` must be NULL or a handle produced by this library and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn marginfit_dataset_free(d: *mut MarginfitDataset) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Relaxed convex-hull overlap check between the two arms of a binary
/// dataset. `delta` is the hull-distance relaxation; pass a negative
/// value for the data-scaled default. Writes whether the hulls overlap
/// (distance <= delta) and the hull distance itself.
///
/// # Safety
/// `d` must be a live dataset handle; `out_overlap` and `out_distance`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn marginfit_overlap_check(
    d: *const MarginfitDataset,
    delta: f64,
    out_overlap: *mut bool,
    out_distance: *mut f64,
) -> MarginfitStatus {
    guarded(|| {
        let Some(d) = d.as_ref() else {
            return fail_null("d");
        };
        if out_overlap.is_null() || out_distance.is_null() {
            return fail_null("out_overlap and out_distance");
        }
        let z0 = match d.0.group_covariates(-1.0) {
            Ok(z) => z,
            Err(e) => return fail(&e),
        };
        let z1 = match d.0.group_covariates(1.0) {
            Ok(z) => z,
            Err(e) => return fail(&e),
        };
        let delta = if delta < 0.0 { None } else { Some(delta) };
        match relaxed_overlap_check(&z0, &z1, delta) {
            Ok(report) => {
                *out_overlap = report.verdict == OverlapVerdict::Overlap;
                *out_distance = report.distance;
                MarginfitStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Fits a linear soft-margin SVM separating the arms of a binary
/// dataset. Pass `kkt_tol <= 0` for the default tolerance and
/// `max_passes == 0` for the default iteration budget. On success writes
/// a new handle to `out`; free it with [`marginfit_svm_free`].
///
/// # Safety
/// `d` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn marginfit_svm_fit(
    d: *const MarginfitDataset,
    cost: f64,
    kkt_tol: f64,
    max_passes: usize,
    out: *mut *mut MarginfitSvmModel,
) -> MarginfitStatus {
    guarded(|| {
        let Some(d) = d.as_ref() else {
            return fail_null("d");
        };
        if out.is_null() {
            return fail_null("out");
        }
        let params = SvmParams {
            cost,
            kkt_tol: if kkt_tol > 0.0 { kkt_tol } else { DEFAULT_KKT_TOL },
            max_passes: if max_passes > 0 { Some(max_passes) } else { None },
        };
        match fit_linear_svm(&d.0, &params) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(MarginfitSvmModel(m)));
                MarginfitStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Dimension of the fitted weight vector.
///
/// # Safety
/// `m` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn marginfit_svm_dim(
    m: *const MarginfitSvmModel,
    out: *mut usize,
) -> MarginfitStatus {
    guarded(|| {
        let (Some(m), false) = (m.as_ref(), out.is_null()) else {
            return fail_null("m and out");
        };
        *out = m.0.w.len();
        MarginfitStatus::Ok
    })
}

/// Copies the weight vector into `buf`. `len` must equal the model
/// dimension exactly.
///
/// # Safety
/// `m` must be a live model handle; `buf` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn marginfit_svm_weights(
    m: *const MarginfitSvmModel,
    buf: *mut f64,
    len: usize,
) -> MarginfitStatus {
    guarded(|| {
        let Some(m) = m.as_ref() else {
            return fail_null("m");
        };
        if buf.is_null() {
            return fail_null("buf");
        }
        if len != m.0.w.len() {
            return fail(&Error::DimensionMismatch {
                expected: m.0.w.len(),
                actual: len,
            });
        }
        std::ptr::copy_nonoverlapping(m.0.w.as_ptr(), buf, len);
        MarginfitStatus::Ok
    })
}

/// Offset `b` of the decision function f(z) = w . z - b.
///
/// # Safety
/// `m` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn marginfit_svm_bias(
    m: *const MarginfitSvmModel,
    out: *mut f64,
) -> MarginfitStatus {
    guarded(|| {
        let (Some(m), false) = (m.as_ref(), out.is_null()) else {
            return fail_null("m and out");
        };
        *out = m.0.b;
        MarginfitStatus::Ok
    })
}

/// Geometric margin width 2 / ||w||.
///
/// # Safety
/// `m` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn marginfit_svm_margin_width(
    m: *const MarginfitSvmModel,
    out: *mut f64,
) -> MarginfitStatus {
    guarded(|| {
        let (Some(m), false) = (m.as_ref(), out.is_null()) else {
            return fail_null("m and out");
        };
        let norm = m.0.w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 0.0 {
            return fail(&Error::Degenerate(
                "zero weight vector has no margin width".into(),
            ));
        }
        *out = 2.0 / norm;
        MarginfitStatus::Ok
    })
}

/// Decision value f(z) = w . z - b for one observation of the model's
/// dimension.
///
/// # Safety
/// `m` must be a live model handle; `z` must point to `len` readable
/// doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn marginfit_svm_decision_value(
    m: *const MarginfitSvmModel,
    z: *const f64,
    len: usize,
    out: *mut f64,
) -> MarginfitStatus {
    guarded(|| {
        let Some(m) = m.as_ref() else {
            return fail_null("m");
        };
        if z.is_null() || out.is_null() {
            return fail_null("z and out");
        }
        match m.0.decision_value(slice(z, len)) {
            Ok(v) => {
                *out = v;
                MarginfitStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Frees a model handle. NULL is a no-op.
///
/// # Safety
/// `m` must be NULL or a handle produced by this library and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn marginfit_svm_free(m: *mut MarginfitSvmModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of subjects inside the margin: T_i f(Z_i) < 1 - margin_tol.
/// Pass a negative `margin_tol` for the default.
///
/// # Safety
/// `m` and `d` must be live handles over data of matching dimension;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn marginfit_margin_count(
    m: *const MarginfitSvmModel,
    d: *const MarginfitDataset,
    margin_tol: f64,
    out: *mut usize,
) -> MarginfitStatus {
    guarded(|| {
        let (Some(m), Some(d)) = (m.as_ref(), d.as_ref()) else {
            return fail_null("m and d");
        };
        if out.is_null() {
            return fail_null("out");
        }
        let tol = if margin_tol < 0.0 { DEFAULT_MARGIN_TOL } else { margin_tol };
        match margin_set(&m.0, &d.0, tol) {
            Ok(report) => {
                *out = report.kept.len();
                MarginfitStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Writes the sorted row indices of the margin subpopulation into `buf`
/// and their count into `written`. Fails with `BUFFER_TOO_SMALL` when
/// `cap` is less than the count; query [`marginfit_margin_count`] first.
///
/// # Safety
/// `m` and `d` must be live handles over data of matching dimension;
/// `buf` must point to `cap` writable size_t slots; `written` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn marginfit_margin_indices(
    m: *const MarginfitSvmModel,
    d: *const MarginfitDataset,
    margin_tol: f64,
    buf: *mut usize,
    cap: usize,
    written: *mut usize,
) -> MarginfitStatus {
    guarded(|| {
        let (Some(m), Some(d)) = (m.as_ref(), d.as_ref()) else {
            return fail_null("m and d");
        };
        if buf.is_null() || written.is_null() {
            return fail_null("buf and written");
        }
        let tol = if margin_tol < 0.0 { DEFAULT_MARGIN_TOL } else { margin_tol };
        let report = match margin_set(&m.0, &d.0, tol) {
            Ok(r) => r,
            Err(e) => return fail(&e),
        };
        if report.kept.len() > cap {
            set_last_error(&format!(
                "buffer holds {cap} indices, margin has {}",
                report.kept.len()
            ));
            return MarginfitStatus::BufferTooSmall;
        }
        std::ptr::copy_nonoverlapping(report.kept.as_ptr(), buf, report.kept.len());
        *written = report.kept.len();
        MarginfitStatus::Ok
    })
}

/// Runs the margin pipeline (standardize, fit the assignment model,
/// extract the margin, estimate on it) on a dataset with an outcome and
/// writes the first estimate: point, standard error, and the number of
/// subjects used. `cost` is the SVM/SVR regularization parameter; other
/// settings are library defaults.
///
/// # Safety
/// `d` must be a live dataset handle; the three out-pointers must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn marginfit_pipeline_estimate(
    d: *const MarginfitDataset,
    cost: f64,
    out_point: *mut f64,
    out_stderr: *mut f64,
    out_n_used: *mut usize,
) -> MarginfitStatus {
    guarded(|| {
        let Some(d) = d.as_ref() else {
            return fail_null("d");
        };
        if out_point.is_null() || out_stderr.is_null() || out_n_used.is_null() {
            return fail_null("out_point, out_stderr, and out_n_used");
        }
        let mut config = PipelineConfig::default();
        config.svm.cost = cost;
        config.svr.reg_c = cost;
        match margin_pipeline(&d.0, &config) {
            Ok(result) => {
                // Non-empty by pipeline postcondition: an empty margin is
                // an error, and every estimate carries a point.
                let est = &result.estimates[0];
                *out_point = est.point;
                *out_stderr = est.stderr;
                *out_n_used = est.n_used;
                MarginfitStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// `ptr` must point to `len` readable doubles.
unsafe fn slice<'a>(ptr: *const f64, len: usize) -> &'a [f64] {
    std::slice::from_raw_parts(ptr, len)
}

#[cfg(test)]
mod tests;
