//! C ABI over the generator: opaque run handles, integer status codes, and
//! a thread-local last-error message. The header `include/amlgen.h` is
//! generated by cbindgen at build time.
//!
//! Ownership rules: every `*mut AmlgenRun` comes from [`amlgen_run_new`] and
//! must be released with [`amlgen_run_free`]; every `char*` returned by
//! this library must be released with [`amlgen_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::path::PathBuf;

use libc::c_char;

use amlgen::assemble::ExportManifest;
use amlgen::pipeline::{generate, GenerateOptions};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmlgenStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    GenerationError = 4,
    /// The export directory was readable but at least one pattern instance
    /// failed structural validation.
    ValidationFailed = 5,
    IoError = 6,
    /// A result accessor was called before a successful execute.
    NotRun = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let sanitized = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(sanitized));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// One configured generation run. Opaque to C callers.
pub struct AmlgenRun {
    graph_config: PathBuf,
    pattern_config: PathBuf,
    seed_override: Option<u64>,
    threads: usize,
    strict: bool,
    manifest: Option<ExportManifest>,
}

unsafe fn cstr_to_string(ptr: *const c_char) -> Result<String, AmlgenStatus> {
    if ptr.is_null() {
        return Err(AmlgenStatus::NullArgument);
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(|s| s.to_string())
        .map_err(|_| AmlgenStatus::InvalidUtf8)
}

/// Creates a run handle from the two config file paths. Returns null when
/// either argument is null or not UTF-8 (details via
/// [`amlgen_last_error_message`]).
///
/// # Safety
/// `graph_config` and `patterns_config` must be valid NUL-terminated
/// strings or null.
#[no_mangle]
pub unsafe extern "C" fn amlgen_run_new(
    graph_config: *const c_char,
    patterns_config: *const c_char,
) -> *mut AmlgenRun {
    clear_last_error();
    let graph = match cstr_to_string(graph_config) {
        Ok(s) => s,
        Err(_) => {
            set_last_error("graph_config path is null or not UTF-8".into());
            return std::ptr::null_mut();
        }
    };
    let patterns = match cstr_to_string(patterns_config) {
        Ok(s) => s,
        Err(_) => {
            set_last_error("patterns_config path is null or not UTF-8".into());
            return std::ptr::null_mut();
        }
    };
    Box::into_raw(Box::new(AmlgenRun {
        graph_config: PathBuf::from(graph),
        pattern_config: PathBuf::from(patterns),
        seed_override: None,
        threads: 0,
        strict: false,
        manifest: None,
    }))
}

/// Overrides the master seed from the config file.
///
/// # Safety
/// `run` must be a live handle from [`amlgen_run_new`].
#[no_mangle]
pub unsafe extern "C" fn amlgen_run_set_seed(run: *mut AmlgenRun, seed: u64) -> AmlgenStatus {
    let Some(run) = run.as_mut() else {
        return AmlgenStatus::NullArgument;
    };
    run.seed_override = Some(seed);
    AmlgenStatus::Ok
}

/// Bounds worker parallelism (0 = library default). Output is invariant to
/// this setting.
///
/// # Safety
/// `run` must be a live handle from [`amlgen_run_new`].
#[no_mangle]
pub unsafe extern "C" fn amlgen_run_set_threads(
    run: *mut AmlgenRun,
    threads: usize,
) -> AmlgenStatus {
    let Some(run) = run.as_mut() else {
        return AmlgenStatus::NullArgument;
    };
    run.threads = threads;
    AmlgenStatus::Ok
}

/// Aborts on the first failed pattern instance instead of skipping it.
///
/// # Safety
/// `run` must be a live handle from [`amlgen_run_new`].
#[no_mangle]
pub unsafe extern "C" fn amlgen_run_set_strict(run: *mut AmlgenRun, strict: bool) -> AmlgenStatus {
    let Some(run) = run.as_mut() else {
        return AmlgenStatus::NullArgument;
    };
    run.strict = strict;
    AmlgenStatus::Ok
}

/// Executes the full pipeline and exports the dataset into `out_dir`.
///
/// # Safety
/// `run` must be a live handle; `out_dir` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn amlgen_run_execute(
    run: *mut AmlgenRun,
    out_dir: *const c_char,
) -> AmlgenStatus {
    clear_last_error();
    let Some(run) = run.as_mut() else {
        return AmlgenStatus::NullArgument;
    };
    let out = match cstr_to_string(out_dir) {
        Ok(s) => PathBuf::from(s),
        Err(status) => return status,
    };
    let options = GenerateOptions {
        graph_config: run.graph_config.clone(),
        pattern_config: run.pattern_config.clone(),
        out_dir: out,
        seed_override: run.seed_override,
        formats: None,
        strict: run.strict,
        threads: run.threads,
    };
    match generate(&options) {
        Ok(output) => {
            run.manifest = Some(output.manifest);
            AmlgenStatus::Ok
        }
        Err(err) => {
            set_last_error(format!("{err}"));
            match err {
                amlgen::pipeline::PipelineError::Config(_) => AmlgenStatus::ConfigError,
                amlgen::pipeline::PipelineError::Assemble(amlgen::assemble::AssembleError::Io(
                    _,
                )) => AmlgenStatus::IoError,
                _ => AmlgenStatus::GenerationError,
            }
        }
    }
}

unsafe fn with_manifest<T>(
    run: *const AmlgenRun,
    f: impl FnOnce(&ExportManifest) -> T,
) -> Option<T> {
    run.as_ref().and_then(|r| r.manifest.as_ref()).map(f)
}

/// Node count of the last successful run, or 0.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn amlgen_run_node_count(run: *const AmlgenRun) -> u64 {
    with_manifest(run, |m| m.node_count).unwrap_or(0)
}

/// Total edge count of the last successful run, or 0.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn amlgen_run_edge_count(run: *const AmlgenRun) -> u64 {
    with_manifest(run, |m| m.edge_count).unwrap_or(0)
}

/// Fraud transaction edge count of the last successful run, or 0.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn amlgen_run_fraud_edge_count(run: *const AmlgenRun) -> u64 {
    with_manifest(run, |m| m.fraud_edge_count).unwrap_or(0)
}

/// Achieved illicit ratio of the last successful run, or NaN.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn amlgen_run_achieved_ratio(run: *const AmlgenRun) -> f64 {
    with_manifest(run, |m| m.achieved_illicit_ratio).unwrap_or(f64::NAN)
}

/// The manifest of the last successful run as a JSON string, or null if the
/// run has not executed. Free with [`amlgen_string_free`].
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn amlgen_run_manifest_json(run: *const AmlgenRun) -> *mut c_char {
    let json = with_manifest(run, |m| serde_json::to_string(m).ok()).flatten();
    match json {
        Some(text) => CString::new(text)
            .map(CString::into_raw)
            .unwrap_or(std::ptr::null_mut()),
        None => {
            set_last_error("run has not executed successfully".into());
            std::ptr::null_mut()
        }
    }
}

/// Releases a run handle. Null is a no-op.
///
/// # Safety
/// `run` must come from [`amlgen_run_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn amlgen_run_free(run: *mut AmlgenRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Re-validates every pattern instance in an export directory. On success
/// (even a failing validation) and when `report_json_out` is non-null, it
/// receives the full report as JSON; free it with [`amlgen_string_free`].
///
/// # Safety
/// `dir` must be a valid NUL-terminated string; `report_json_out` must be
/// null or point to writable `char*` storage.
#[no_mangle]
pub unsafe extern "C" fn amlgen_validate_dir(
    dir: *const c_char,
    report_json_out: *mut *mut c_char,
) -> AmlgenStatus {
    clear_last_error();
    let dir = match cstr_to_string(dir) {
        Ok(s) => PathBuf::from(s),
        Err(status) => return status,
    };
    match amlgen::validate::validate_export(&dir) {
        Ok(report) => {
            if !report_json_out.is_null() {
                let json = serde_json::to_string(&report).unwrap_or_default();
                *report_json_out = CString::new(json)
                    .map(CString::into_raw)
                    .unwrap_or(std::ptr::null_mut());
            }
            if report.pass {
                AmlgenStatus::Ok
            } else {
                set_last_error("structural validation failed for at least one instance".into());
                AmlgenStatus::ValidationFailed
            }
        }
        Err(err) => {
            set_last_error(format!("{err}"));
            AmlgenStatus::IoError
        }
    }
}

/// Releases a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from an amlgen function and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn amlgen_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The last error message on this thread, or null. Free with
/// [`amlgen_string_free`].
#[no_mangle]
pub extern "C" fn amlgen_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|msg| msg.clone().into_raw())
            .unwrap_or(std::ptr::null_mut())
    })
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn amlgen_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
