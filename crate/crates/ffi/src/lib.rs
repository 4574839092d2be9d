//! C ABI over gglab.
//!
//! Every fallible call returns a [`GglabStatus`]; on anything but `GGLAB_STATUS_OK` the
//! thread's last error message is set and out-parameters are left untouched.
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use gglab::gibbs::GibbsEnsemble;
use gglab::model::{build_ea, build_sk};
use gglab::{Error, ExperimentConfig};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GglabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    /// N is beyond exact enumeration.
    TooLarge = 4,
    Config = 5,
    Io = 6,
    /// The caller's buffer is too short; any length out-parameter holds the size needed.
    BufferTooSmall = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

/// One disorder realization with its cached Gibbs moments.
pub struct GglabModel {
    ensemble: GibbsEnsemble,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> GglabStatus {
    match e {
        Error::TooLargeForExact { .. } => GglabStatus::TooLarge,
        Error::InvalidArgument(_) | Error::LengthMismatch { .. } | Error::SiteOutOfRange { .. } => {
            GglabStatus::InvalidArgument
        }
        Error::Config(_) | Error::Unknown { .. } => GglabStatus::Config,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => GglabStatus::Io,
        _ => GglabStatus::InvalidModel,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), (GglabStatus, String)>>(f: F) -> GglabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GglabStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            GglabStatus::Internal
        }
    }
}

fn lib<T>(r: gglab::Result<T>) -> Result<T, (GglabStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (GglabStatus, String) {
    (GglabStatus::NullPointer, format!("{what} is null"))
}

unsafe fn model_ref<'a>(model: *const GglabModel) -> Result<&'a GglabModel, (GglabStatus, String)> {
    model.as_ref().ok_or_else(|| null("model"))
}

unsafe fn out_ref<'a, T>(out: *mut T, what: &str) -> Result<&'a mut T, (GglabStatus, String)> {
    out.as_mut().ok_or_else(|| null(what))
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, (GglabStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| (GglabStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn emit(model: GibbsEnsemble, out: &mut *mut GglabModel) {
    *out = Box::into_raw(Box::new(GglabModel { ensemble: model }));
}

/// Builds an SK instance for disorder sample `sample_index` of `master_seed`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn gglab_model_sk(
    n: usize,
    beta: f64,
    gamma: f64,
    h: f64,
    master_seed: u64,
    sample_index: u64,
    out: *mut *mut GglabModel,
) -> GglabStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let inst = lib(build_sk(n, beta, gamma, h, master_seed, sample_index))?;
        emit(GibbsEnsemble::new(inst), out);
        Ok(())
    })
}

/// Builds an EA instance on a `rows` x `cols` lattice.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn gglab_model_ea(
    rows: usize,
    cols: usize,
    periodic: bool,
    gamma: f64,
    master_seed: u64,
    sample_index: u64,
    out: *mut *mut GglabModel,
) -> GglabStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let inst = lib(build_ea(&[rows, cols], periodic, gamma, master_seed, sample_index))?;
        emit(GibbsEnsemble::new(inst), out);
        Ok(())
    })
}

/// Releases a handle. Null is a no-op.
///
/// # Safety
/// `model` must come from a constructor in this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gglab_model_free(model: *mut GglabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of spins; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gglab_model_size(model: *const GglabModel) -> usize {
    model.as_ref().map_or(0, |m| m.ensemble.instance().n())
}

/// Number of perturbation features; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gglab_model_feature_count(model: *const GglabModel) -> usize {
    model.as_ref().map_or(0, |m| m.ensemble.instance().feature_count())
}

/// Writes `log Z`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gglab_model_log_partition(model: *const GglabModel, out: *mut f64) -> GglabStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out_ref(out, "out")?;
        *out = lib(m.ensemble.log_partition())?;
        Ok(())
    })
}

/// Writes `(1/N) log Z`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gglab_model_free_energy(model: *const GglabModel, out: *mut f64) -> GglabStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out_ref(out, "out")?;
        *out = lib(m.ensemble.free_energy_per_site())?;
        Ok(())
    })
}

/// Writes the Gibbs mean of the squared two-replica overlap.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gglab_model_pair_overlap(model: *const GglabModel, out: *mut f64) -> GglabStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out_ref(out, "out")?;
        *out = lib(m.ensemble.pair_overlap_moment())?;
        Ok(())
    })
}

/// Copies the Gibbs mean of every feature into `buf`.
///
/// `written` always receives the feature count. A short buffer yields
/// `GGLAB_STATUS_BUFFER_TOO_SMALL`; `buf` may be null when `len` is 0.
///
/// # Safety
/// `buf` must hold `len` doubles; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gglab_model_feature_averages(
    model: *const GglabModel,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> GglabStatus {
    guard(|| {
        let m = model_ref(model)?;
        let written = out_ref(written, "written")?;
        let means = lib(m.ensemble.feature_averages())?;
        *written = means.len();
        if len < means.len() {
            return Err((GglabStatus::BufferTooSmall, format!("need {} doubles, got {len}", means.len())));
        }
        if means.is_empty() {
            return Ok(());
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        std::slice::from_raw_parts_mut(buf, means.len()).copy_from_slice(means);
        Ok(())
    })
}

/// Draws `count` independent configurations into `spins` (row-major, `count * N` entries of +-1).
///
/// # Safety
/// `spins` must hold `len` bytes; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gglab_model_sample(
    model: *const GglabModel,
    stream_seed: u64,
    count: usize,
    spins: *mut i8,
    len: usize,
) -> GglabStatus {
    guard(|| {
        let m = model_ref(model)?;
        let n = m.ensemble.instance().n();
        let need = count
            .checked_mul(n)
            .ok_or_else(|| (GglabStatus::InvalidArgument, "count * N overflows".to_string()))?;
        if len < need {
            return Err((GglabStatus::BufferTooSmall, format!("need {need} bytes, got {len}")));
        }
        if need == 0 {
            return Ok(());
        }
        if spins.is_null() {
            return Err(null("spins"));
        }
        let dst = std::slice::from_raw_parts_mut(spins, need);
        let mut sampler = lib(m.ensemble.replica_sampler(count, stream_seed))?;
        for (row, config) in dst.chunks_exact_mut(n).zip(sampler.draw_tuple(count)) {
            for (d, s) in row.iter_mut().zip(config.spins()) {
                *d = s;
            }
        }
        Ok(())
    })
}

/// Runs a TOML experiment config and writes `report.csv` and `report.json` to `out_dir`.
///
/// `failures` receives the number of rows whose contract failed.
///
/// # Safety
/// Both paths must be NUL-terminated strings; `failures` writable.
#[no_mangle]
pub unsafe extern "C" fn gglab_run_config(
    config_path: *const c_char,
    out_dir: *const c_char,
    failures: *mut usize,
) -> GglabStatus {
    guard(|| {
        let config = path_arg(config_path, "config_path")?;
        let out_dir = path_arg(out_dir, "out_dir")?;
        let failures = out_ref(failures, "failures")?;
        let config = lib(ExperimentConfig::load(config))?;
        let report = lib(gglab::run_experiment(&config))?;
        lib(report.write_to(out_dir))?;
        *failures = report.failures().count();
        Ok(())
    })
}

/// Copies the calling thread's last error message, NUL-terminated and truncated to `len`.
///
/// Returns the full message length excluding the terminator.
///
/// # Safety
/// `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn gglab_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let k = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, k);
            *buf.add(k) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gglab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
