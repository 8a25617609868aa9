//! C ABI over the `plda` library.
//!
//! Every entry point returns a [`PldaStatus`]. On failure a description is
//! stored per thread and can be read with [`plda_last_error_message`].
//! Models and enrollments are opaque heap handles owned by the caller and
//! released with their `_free` function. Matrices cross the boundary as
//! row-major `dim * dim` arrays of `double`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use plda::formats::{format_model, read_model, write_file};
use plda::{enroll, score_llr, Enrollment, LabeledDataset, PldaError, PldaModel, SymMatrix, TrainConfig, Variant};

/// Result code of every `plda_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PldaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotPositiveDefinite = 4,
    Numerical = 5,
    Parse = 6,
    Io = 7,
    Panic = 8,
}

/// Values accepted by the `variant` argument of `plda_train`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PldaVariant {
    Kaldi = 0,
    Paper = 1,
}

/// Opaque trained model.
pub struct PldaModelHandle(PldaModel);

/// Opaque enrolled class.
pub struct PldaEnrollmentHandle(Enrollment);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(PldaStatus, String);

impl From<PldaError> for Failure {
    fn from(err: PldaError) -> Self {
        let status = match &err {
            PldaError::NotPositiveDefinite { .. } => PldaStatus::NotPositiveDefinite,
            PldaError::DimensionMismatch { .. } | PldaError::Alignment { .. } => PldaStatus::DimensionMismatch,
            PldaError::NonFiniteLikelihood { .. } => PldaStatus::Numerical,
            PldaError::Parse { .. } => PldaStatus::Parse,
            PldaError::Io { .. } => PldaStatus::Io,
            PldaError::NotSymmetric { .. }
            | PldaError::TooFewClasses(_)
            | PldaError::EmptyEnrollment
            | PldaError::InvalidConfig(_)
            | PldaError::InvalidValue(_) => PldaStatus::InvalidArgument,
        };
        Failure(status, err.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PldaStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(PldaStatus::InvalidArgument, message.into())
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> PldaStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PldaStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            PldaStatus::Panic
        }
    }
}

unsafe fn input<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(data, len))
}

unsafe fn output<'a>(data: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if data.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(data, len))
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(Path::new(s))
}

unsafe fn model_ref<'a>(model: *const PldaModelHandle) -> Result<&'a PldaModel, Failure> {
    model.as_ref().map(|h| &h.0).ok_or_else(|| null("model"))
}

fn square(dim: usize) -> Result<usize, Failure> {
    dim.checked_mul(dim).ok_or_else(|| invalid("dimension overflows"))
}

/// Message for the most recent failed call on this thread, or null. The
/// pointer stays valid until the next `plda_*` call on the same thread.
#[no_mangle]
pub extern "C" fn plda_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a model from `mu` (`dim`) and row-major `phi_b`, `phi_w`
/// (`dim * dim`).
///
/// # Safety
/// Pointers must reference arrays of the stated lengths; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn plda_model_new(
    dim: usize,
    mu: *const f64,
    phi_b: *const f64,
    phi_w: *const f64,
    out: *mut *mut PldaModelHandle,
) -> PldaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        let len = square(dim)?;
        let mu = input(mu, dim, "mu")?.to_vec();
        let phi_b = SymMatrix::from_row_major(dim, input(phi_b, len, "phi_b")?.to_vec())?;
        let phi_w = SymMatrix::from_row_major(dim, input(phi_w, len, "phi_w")?.to_vec())?;
        let model = PldaModel::new(mu, phi_b, phi_w)?;
        *out = Box::into_raw(Box::new(PldaModelHandle(model)));
        Ok(())
    })
}

/// Reads a model file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn plda_model_load(path: *const c_char, out: *mut *mut PldaModelHandle) -> PldaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = read_model(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(PldaModelHandle(model)));
        Ok(())
    })
}

/// Writes a model file.
///
/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn plda_model_save(model: *const PldaModelHandle, path: *const c_char) -> PldaStatus {
    guard(|| {
        let model = model_ref(model)?;
        write_file(path_arg(path)?, &format_model(model))?;
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn plda_model_free(model: *mut PldaModelHandle) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must come from this library; `out_dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn plda_model_dim(model: *const PldaModelHandle, out_dim: *mut usize) -> PldaStatus {
    guard(|| {
        let model = model_ref(model)?;
        if out_dim.is_null() {
            return Err(null("out_dim"));
        }
        *out_dim = model.dim();
        Ok(())
    })
}

/// Copies `mu` (`dim`) and row-major `phi_b`, `phi_w` (`dim * dim`) into
/// caller buffers.
///
/// # Safety
/// Buffers must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn plda_model_get_params(
    model: *const PldaModelHandle,
    mu: *mut f64,
    phi_b: *mut f64,
    phi_w: *mut f64,
) -> PldaStatus {
    guard(|| {
        let model = model_ref(model)?;
        let dim = model.dim();
        output(mu, dim, "mu")?.copy_from_slice(model.mu());
        output(phi_b, dim * dim, "phi_b")?.copy_from_slice(model.phi_b().as_slice());
        output(phi_w, dim * dim, "phi_w")?.copy_from_slice(model.phi_w().as_slice());
        Ok(())
    })
}

/// Trains a model by EM from `rows` row-major vectors of length `dim`, with
/// `labels[i]` the class of row `i` and `variant` a `PldaVariant`. Uses data-split initialization and the
/// library's default jitter.
///
/// # Safety
/// `vectors` must hold `rows * dim` doubles and `labels` `rows` entries.
#[no_mangle]
pub unsafe extern "C" fn plda_train(
    dim: usize,
    rows: usize,
    vectors: *const f64,
    labels: *const u32,
    iterations: u32,
    variant: u32,
    out: *mut *mut PldaModelHandle,
) -> PldaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        let len = rows.checked_mul(dim).ok_or_else(|| invalid("rows * dim overflows"))?;
        let vectors = input(vectors, len, "vectors")?;
        if labels.is_null() && rows > 0 {
            return Err(null("labels"));
        }
        let labels = if rows == 0 { &[][..] } else { slice::from_raw_parts(labels, rows) };
        let mut data = LabeledDataset::new(dim);
        for (v, label) in vectors.chunks_exact(dim).zip(labels) {
            data.push(&label.to_string(), v)?;
        }
        let config = TrainConfig {
            iterations: iterations as usize,
            variant: match variant {
                v if v == PldaVariant::Kaldi as u32 => Variant::Kaldi,
                v if v == PldaVariant::Paper as u32 => Variant::Paper,
                other => return Err(invalid(format!("unknown variant {other}"))),
            },
            ..TrainConfig::default()
        };
        let (model, _) = plda::em_train(&data, &config)?;
        *out = Box::into_raw(Box::new(PldaModelHandle(model)));
        Ok(())
    })
}

/// Enrolls a class from `count` row-major vectors of the model's dimension.
///
/// # Safety
/// `vectors` must hold `count * dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn plda_enroll(
    model: *const PldaModelHandle,
    vectors: *const f64,
    count: usize,
    out: *mut *mut PldaEnrollmentHandle,
) -> PldaStatus {
    guard(|| {
        let model = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let len = count.checked_mul(model.dim()).ok_or_else(|| invalid("count * dim overflows"))?;
        let rows: Vec<&[f64]> = input(vectors, len, "vectors")?.chunks_exact(model.dim()).collect();
        let enrollment = enroll(model, &rows)?;
        *out = Box::into_raw(Box::new(PldaEnrollmentHandle(enrollment)));
        Ok(())
    })
}

/// Releases an enrollment. Null is ignored.
///
/// # Safety
/// `enrollment` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn plda_enrollment_free(enrollment: *mut PldaEnrollmentHandle) {
    if !enrollment.is_null() {
        drop(Box::from_raw(enrollment));
    }
}

/// Log-likelihood ratio of `test` (model dimension) against an enrollment.
///
/// # Safety
/// `test` must hold `dim` doubles; `out_llr` must be writable.
#[no_mangle]
pub unsafe extern "C" fn plda_score(
    model: *const PldaModelHandle,
    enrollment: *const PldaEnrollmentHandle,
    test: *const f64,
    out_llr: *mut f64,
) -> PldaStatus {
    guard(|| {
        let model = model_ref(model)?;
        let enrollment = enrollment.as_ref().ok_or_else(|| null("enrollment"))?;
        if out_llr.is_null() {
            return Err(null("out_llr"));
        }
        let test = input(test, model.dim(), "test")?;
        *out_llr = score_llr(model, &enrollment.0, test)?;
        Ok(())
    })
}
