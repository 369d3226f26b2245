//! C ABI for the classification pipeline.
//!
//! Conventions: every fallible function returns an [`OfflangStatus`];
//! `OFFLANG_STATUS_OK` is 0 and the nonzero codes mirror the CLI exit
//! codes. On failure, [`offlang_last_error`] returns a thread-local,
//! NUL-terminated message valid until the next failing call on the same
//! thread. Out-parameters are written only on success. Strings returned
//! through out-parameters are owned by the caller and must be released with
//! [`offlang_string_free`]; pipelines with [`offlang_pipeline_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use libc::c_char;

use offlang::corpus::Language;
use offlang::error::ErrorCategory;
use offlang::preprocess::normalize;
use offlang::{Pipeline, PipelineConfig};

/// Result codes; nonzero values match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OfflangStatus {
    Ok = 0,
    /// Bad invocation or unusable configuration.
    Usage = 1,
    /// Malformed or inconsistent input data.
    Data = 2,
    /// Embedding backend failure.
    Provider = 3,
    /// Filesystem or artifact-format failure.
    Io = 4,
    /// Null pointer or non-UTF-8 argument.
    InvalidArgument = 5,
    /// Internal panic; state may be inconsistent.
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn status_of(err: &offlang::Error) -> OfflangStatus {
    match err.category() {
        ErrorCategory::Usage => OfflangStatus::Usage,
        ErrorCategory::Data => OfflangStatus::Data,
        ErrorCategory::Provider => OfflangStatus::Provider,
        ErrorCategory::Io => OfflangStatus::Io,
    }
}

fn fail(err: offlang::Error) -> OfflangStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn invalid(message: &str) -> OfflangStatus {
    set_error(message.to_string());
    OfflangStatus::InvalidArgument
}

/// Run a body with panic containment.
fn guarded(body: impl FnOnce() -> OfflangStatus) -> OfflangStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".to_string());
            OfflangStatus::Internal
        }
    }
}

/// SAFETY: `ptr` must be null or a valid NUL-terminated string.
unsafe fn utf8_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, OfflangStatus> {
    if ptr.is_null() {
        return Err(invalid(&format!("{name} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| invalid(&format!("{name} is not valid UTF-8")))
}

fn write_string_out(out: *mut *mut c_char, value: String) -> OfflangStatus {
    let cstring = match CString::new(value) {
        Ok(c) => c,
        Err(_) => return invalid("output contains an interior NUL byte"),
    };
    unsafe { *out = cstring.into_raw() };
    OfflangStatus::Ok
}

/// An opened pipeline (config parsed, providers built, cache attached).
pub struct OfflangPipeline {
    inner: Pipeline,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn offlang_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn offlang_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |m| m.as_ptr())
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `ptr` must be null or a pointer previously returned through an
/// out-parameter of this library, released at most once.
#[no_mangle]
pub unsafe extern "C" fn offlang_string_free(ptr: *mut c_char) {
    if !ptr.is_null() {
        drop(CString::from_raw(ptr));
    }
}

/// Open a pipeline from a TOML config file.
///
/// # Safety
/// `config_path` must be a valid NUL-terminated string and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn offlang_pipeline_new(
    config_path: *const c_char,
    out: *mut *mut OfflangPipeline,
) -> OfflangStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        let path = match utf8_arg(config_path, "config_path") {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        let config = match PipelineConfig::load(&path) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match Pipeline::new(config) {
            Ok(pipeline) => {
                *out = Box::into_raw(Box::new(OfflangPipeline { inner: pipeline }));
                OfflangStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Release a pipeline handle.
///
/// # Safety
/// `pipeline` must be null or a pointer from [`offlang_pipeline_new`],
/// released at most once.
#[no_mangle]
pub unsafe extern "C" fn offlang_pipeline_free(pipeline: *mut OfflangPipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}

unsafe fn pipeline_arg<'a>(
    ptr: *const OfflangPipeline,
) -> Result<&'a OfflangPipeline, OfflangStatus> {
    if ptr.is_null() {
        return Err(invalid("pipeline is null"));
    }
    Ok(&*ptr)
}

/// Normalize one text: URL removal, language-gated lowercasing, digit
/// normalization, whitespace collapse. `language` is `"en"`, `"de"` or
/// `"hi"`.
///
/// # Safety
/// `text` and `language` must be valid NUL-terminated strings; `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn offlang_normalize(
    text: *const c_char,
    language: *const c_char,
    out: *mut *mut c_char,
) -> OfflangStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        let text = match utf8_arg(text, "text") {
            Ok(t) => t,
            Err(status) => return status,
        };
        let language = match utf8_arg(language, "language") {
            Ok(l) => l,
            Err(status) => return status,
        };
        let language = match Language::from_code(language) {
            Ok(l) => l,
            Err(e) => return fail(e),
        };
        write_string_out(out, normalize(text, language).text)
    })
}

/// Train the cascade from the pipeline's configured training data and save
/// it to the configured model path.
///
/// # Safety
/// `pipeline` must be a live handle from [`offlang_pipeline_new`].
#[no_mangle]
pub unsafe extern "C" fn offlang_train(pipeline: *const OfflangPipeline) -> OfflangStatus {
    guarded(|| {
        let pipeline = match pipeline_arg(pipeline) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match pipeline.inner.train() {
            Ok(_) => OfflangStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Predict a TSV of posts into the submission format.
///
/// # Safety
/// `pipeline` must be a live handle; `input_path` and `output_path` must be
/// valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn offlang_predict(
    pipeline: *const OfflangPipeline,
    input_path: *const c_char,
    output_path: *const c_char,
) -> OfflangStatus {
    guarded(|| {
        let pipeline = match pipeline_arg(pipeline) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let input = match utf8_arg(input_path, "input_path") {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        let output = match utf8_arg(output_path, "output_path") {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        match pipeline.inner.predict_file(&input, &output) {
            Ok(_) => OfflangStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Score a prediction file against a gold file. `report_dir` may be null;
/// when given, JSON and text reports are written there. When `out_text` is
/// non-null it receives the rendered text tables.
///
/// # Safety
/// `pipeline` must be a live handle; paths must be valid NUL-terminated
/// strings (`report_dir` may be null); `out_text` may be null.
#[no_mangle]
pub unsafe extern "C" fn offlang_evaluate(
    pipeline: *const OfflangPipeline,
    gold_path: *const c_char,
    pred_path: *const c_char,
    report_dir: *const c_char,
    out_text: *mut *mut c_char,
) -> OfflangStatus {
    guarded(|| {
        let pipeline = match pipeline_arg(pipeline) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let gold = match utf8_arg(gold_path, "gold_path") {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        let pred = match utf8_arg(pred_path, "pred_path") {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        let dir = if report_dir.is_null() {
            None
        } else {
            match utf8_arg(report_dir, "report_dir") {
                Ok(p) => Some(PathBuf::from(p)),
                Err(status) => return status,
            }
        };
        match pipeline
            .inner
            .evaluate_files(&gold, &pred, dir.as_deref().map(Path::new))
        {
            Ok((_, text)) => {
                if out_text.is_null() {
                    OfflangStatus::Ok
                } else {
                    write_string_out(out_text, text)
                }
            }
            Err(e) => fail(e),
        }
    })
}

/// Render dataset statistics for the configured data files.
///
/// # Safety
/// `pipeline` must be a live handle; `out_text` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn offlang_stats(
    pipeline: *const OfflangPipeline,
    out_text: *mut *mut c_char,
) -> OfflangStatus {
    guarded(|| {
        if out_text.is_null() {
            return invalid("out_text is null");
        }
        let pipeline = match pipeline_arg(pipeline) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match pipeline.inner.stats() {
            Ok(text) => write_string_out(out_text, text),
            Err(e) => fail(e),
        }
    })
}
