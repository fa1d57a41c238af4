//! C ABI over `smalltime`.
//!
//! Conventions:
//! - Every fallible call returns a [`SmalltimeStatus`]; on anything but
//!   `SMALLTIME_STATUS_OK` a message is available from
//!   [`smalltime_last_error`] on the same thread.
//! - Strings passed in are NUL-terminated UTF-8. Strings handed out must be
//!   released with [`smalltime_string_free`].
//! - A [`SmalltimeProject`] is immutable once opened and may be shared
//!   between threads for reading.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use smalltime::narrative::{parse_captions, CaptionSet};
use smalltime::pipeline::{Error, Project, RunConfig};
use smalltime::select::SelectorConfig;
use smalltime::table::TableError;

/// Result of a C API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmalltimeStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A file could not be read or written.
    Io = 3,
    /// Manifest or snapshot contents are invalid.
    Data = 4,
    /// Selection failed, e.g. K too large or infeasible.
    Selection = 5,
    Render = 6,
    Captions = 7,
    /// Configuration JSON was rejected.
    Config = 8,
    /// An internal panic was caught at the boundary.
    Panic = 9,
}

/// Opaque handle to a loaded snapshot sequence.
pub struct SmalltimeProject {
    inner: Project,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SmalltimeStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Table(TableError::Io { .. } | TableError::MissingSnapshotFile { .. }) => {
                SmalltimeStatus::Io
            }
            Error::Table(_) => SmalltimeStatus::Data,
            Error::Select(_) => SmalltimeStatus::Selection,
            Error::Render(_) => SmalltimeStatus::Render,
            Error::Caption(_) => SmalltimeStatus::Captions,
            Error::Config(_) => SmalltimeStatus::Config,
            Error::Write { .. } => SmalltimeStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SmalltimeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SmalltimeStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            SmalltimeStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(
            SmalltimeStatus::NullArgument,
            format!("`{name}` is NULL"),
        ));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            SmalltimeStatus::InvalidUtf8,
            format!("`{name}` is not valid UTF-8"),
        )
    })
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn project<'a>(p: *const SmalltimeProject) -> Result<&'a Project, Failure> {
    p.as_ref()
        .map(|p| &p.inner)
        .ok_or_else(|| Failure(SmalltimeStatus::NullArgument, "`project` is NULL".into()))
}

fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    unsafe { p.as_mut() }
        .ok_or_else(|| Failure(SmalltimeStatus::NullArgument, format!("`{name}` is NULL")))
}

fn into_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .unwrap_or_default()
        .into_raw()
}

fn config_error(e: impl std::fmt::Display) -> Failure {
    Failure(SmalltimeStatus::Config, e.to_string())
}

fn selector(json: Option<&str>) -> Result<SelectorConfig, Failure> {
    match json {
        None => Ok(SelectorConfig::default()),
        Some(j) => serde_json::from_str(j).map_err(config_error),
    }
}

/// Loads a capture manifest and its snapshots. On success `*out` owns a
/// new handle to be released with [`smalltime_project_free`].
#[no_mangle]
pub unsafe extern "C" fn smalltime_project_open(
    manifest_path: *const c_char,
    strict: bool,
    epsilon: f64,
    out: *mut *mut SmalltimeProject,
) -> SmalltimeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(manifest_path, "manifest_path")?;
        let inner = Project::open(Path::new(path), strict, epsilon)?;
        *out = Box::into_raw(Box::new(SmalltimeProject { inner }));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn smalltime_project_free(project: *mut SmalltimeProject) {
    if !project.is_null() {
        drop(Box::from_raw(project));
    }
}

#[no_mangle]
pub unsafe extern "C" fn smalltime_project_snapshot_count(
    project: *const SmalltimeProject,
    out: *mut usize,
) -> SmalltimeStatus {
    guard(|| {
        *out_arg(out, "out")? = self::project(project)?.n_snapshots();
        Ok(())
    })
}

/// Rows in the original snapshot.
#[no_mangle]
pub unsafe extern "C" fn smalltime_project_row_count(
    project: *const SmalltimeProject,
    out: *mut usize,
) -> SmalltimeStatus {
    guard(|| {
        *out_arg(out, "out")? = self::project(project)?.n_original_rows();
        Ok(())
    })
}

/// Selects the Smallset. `selector_json` may be NULL for defaults.
/// `*out_json` receives `{"selection": ..., "warnings": [...]}`.
#[no_mangle]
pub unsafe extern "C" fn smalltime_project_select(
    project: *const SmalltimeProject,
    selector_json: *const c_char,
    out_json: *mut *mut c_char,
) -> SmalltimeStatus {
    guard(|| {
        let out = out_arg(out_json, "out_json")?;
        *out = ptr::null_mut();
        let p = self::project(project)?;
        let cfg = selector(opt_str_arg(selector_json, "selector_json")?)?;
        let report = p.select(&cfg).map_err(Error::from)?;
        *out = into_c(serde_json::to_string(&report).map_err(config_error)?);
        Ok(())
    })
}

/// Coverage and appearance matrices as JSON.
#[no_mangle]
pub unsafe extern "C" fn smalltime_project_dump_matrices(
    project: *const SmalltimeProject,
    out_json: *mut *mut c_char,
) -> SmalltimeStatus {
    guard(|| {
        let out = out_arg(out_json, "out_json")?;
        *out = ptr::null_mut();
        let dump = self::project(project)?.matrix_dump();
        *out = into_c(serde_json::to_string(&dump).map_err(config_error)?);
        Ok(())
    })
}

/// Caption template text for the Smallset chosen by `selector_json`
/// (NULL for defaults).
#[no_mangle]
pub unsafe extern "C" fn smalltime_project_caption_template(
    project: *const SmalltimeProject,
    selector_json: *const c_char,
    out_text: *mut *mut c_char,
) -> SmalltimeStatus {
    guard(|| {
        let out = out_arg(out_text, "out_text")?;
        *out = ptr::null_mut();
        let p = self::project(project)?;
        let cfg = selector(opt_str_arg(selector_json, "selector_json")?)?;
        let report = p.select(&cfg).map_err(Error::from)?;
        *out = into_c(p.caption_template(Some(&report.selection)));
        Ok(())
    })
}

/// Renders the timeline. `config_json` is a run configuration (NULL for
/// defaults); `captions` is a completed caption file's text. Both outputs
/// are set on success and NULL otherwise.
#[no_mangle]
pub unsafe extern "C" fn smalltime_project_render(
    project: *const SmalltimeProject,
    config_json: *const c_char,
    captions: *const c_char,
    out_svg: *mut *mut c_char,
    out_alt_text: *mut *mut c_char,
) -> SmalltimeStatus {
    guard(|| {
        let svg_out = out_arg(out_svg, "out_svg")?;
        *svg_out = ptr::null_mut();
        let alt_out = out_arg(out_alt_text, "out_alt_text")?;
        *alt_out = ptr::null_mut();
        let p = self::project(project)?;
        let cfg = match opt_str_arg(config_json, "config_json")? {
            None => RunConfig::default(),
            Some(j) => RunConfig::from_json(j)?,
        };
        let text = str_arg(captions, "captions")?;
        let (set, _warnings): (CaptionSet, _) =
            parse_captions(text, Some(p.n_snapshots())).map_err(Error::from)?;
        let rendered = p.render(&cfg, &set)?;
        *svg_out = into_c(rendered.svg);
        *alt_out = into_c(rendered.alt_text.render());
        Ok(())
    })
}

/// Releases a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn smalltime_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn smalltime_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn smalltime_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
