//! C ABI over `pulsedoa`.
//!
//! Objects are opaque heap handles created by `pd_*_new`/`pd_*_from_*` and
//! released with the matching `pd_*_free`. Every fallible call returns a
//! [`PdStatus`]; on failure the message is available from
//! [`pd_last_error_message`] on the same thread. Panics never cross the
//! boundary.
//!
//! # Safety
//!
//! Shared by every `unsafe` entry point: handle arguments are null or live
//! handles from this library, output pointers are null or writable, string
//! arguments are null or NUL-terminated, and array/buffer arguments point to
//! at least the stated number of elements. A handle must not be used from
//! two threads at once.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pulsedoa::experiment::{self, ExperimentConfig, SweepResult};
use pulsedoa::{AbsorptionTable, Error, PulseSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    Io = 4,
    Parse = 5,
    Config = 6,
    Numerical = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// A derivative-of-Gaussian pulse.
pub struct PdPulse(PulseSpec);

/// Absorption coefficient table `k(f)`.
pub struct PdAbsorption(AbsorptionTable);

/// Experiment configuration plus the result of its latest sweep.
pub struct PdExperiment {
    config: ExperimentConfig,
    result: Option<SweepResult>,
}

/// One Monte Carlo cell.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PdReport {
    pub order: u32,
    pub center_hz: f64,
    pub path_length_m: f64,
    pub snapshot_time_s: f64,
    pub runs: usize,
    pub rmse_theta_deg: f64,
    pub rmse_fc_hz: f64,
    pub tpr: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> PdStatus {
    match err {
        Error::Domain(_) | Error::Degenerate(_) => PdStatus::InvalidArgument,
        Error::OutOfRange { .. } => PdStatus::OutOfRange,
        Error::NotHermitian(_) | Error::Numerical(_) => PdStatus::Numerical,
        Error::Config(_) => PdStatus::Config,
        Error::Io { .. } => PdStatus::Io,
        Error::Parse { .. } => PdStatus::Parse,
    }
}

fn fail(status: PdStatus, msg: impl Into<String>) -> PdStatus {
    set_error(msg);
    status
}

/// Runs `body`, translating library errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), PdStatus>) -> PdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PdStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(PdStatus::Panic, "internal panic"),
    }
}

fn lib<T>(r: pulsedoa::Result<T>) -> Result<T, PdStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn out_ptr<'a, T>(p: *mut T) -> Result<&'a mut T, PdStatus> {
    // SAFETY: the caller guarantees a non-null `p` points to writable memory.
    unsafe { p.as_mut() }.ok_or_else(|| fail(PdStatus::NullPointer, "null output pointer"))
}

fn handle<'a, T>(p: *const T) -> Result<&'a T, PdStatus> {
    // SAFETY: non-null handles come from this library and are still live.
    unsafe { p.as_ref() }.ok_or_else(|| fail(PdStatus::NullPointer, "null handle"))
}

fn handle_mut<'a, T>(p: *mut T) -> Result<&'a mut T, PdStatus> {
    // SAFETY: as for `handle`, with exclusive access promised by the caller.
    unsafe { p.as_mut() }.ok_or_else(|| fail(PdStatus::NullPointer, "null handle"))
}

fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, PdStatus> {
    if p.is_null() {
        return Err(fail(PdStatus::NullPointer, "null path"));
    }
    // SAFETY: non-null, NUL-terminated by contract.
    let s = unsafe { CStr::from_ptr(p) };
    s.to_str().map(Path::new).map_err(|_| fail(PdStatus::InvalidArgument, "path is not UTF-8"))
}

unsafe fn free_box<T>(p: *mut T) {
    if !p.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(unsafe { Box::from_raw(p) })));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length in bytes
/// excluding the terminator; `buf` may be null to query the length.
#[no_mangle]
pub unsafe extern "C" fn pd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: caller provides `len` writable bytes at `buf`.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Pulse of the given order, center frequency (Hz) and power (W).
#[no_mangle]
pub unsafe extern "C" fn pd_pulse_new(order: u32, center_hz: f64, power_w: f64, out: *mut *mut PdPulse) -> PdStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let spec = lib(PulseSpec::from_center(order, center_hz, power_w))?;
        *out = Box::into_raw(Box::new(PdPulse(spec)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pd_pulse_free(pulse: *mut PdPulse) {
    unsafe { free_box(pulse) }
}

/// Center frequency, duration, energy, sigma and scale factor of a pulse.
#[no_mangle]
pub unsafe extern "C" fn pd_pulse_params(
    pulse: *const PdPulse,
    center_hz: *mut f64,
    duration_s: *mut f64,
    energy_j: *mut f64,
    sigma_s: *mut f64,
    scale: *mut f64,
) -> PdStatus {
    guard(|| {
        let p = &handle(pulse)?.0;
        *out_ptr(center_hz)? = p.center_freq();
        *out_ptr(duration_s)? = p.duration();
        *out_ptr(energy_j)? = p.energy();
        *out_ptr(sigma_s)? = p.sigma();
        *out_ptr(scale)? = p.scale();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pd_pulse_half_power_band(
    pulse: *const PdPulse,
    f_low: *mut f64,
    f_high: *mut f64,
) -> PdStatus {
    guard(|| {
        let band = handle(pulse)?.0.half_power_band();
        *out_ptr(f_low)? = band.f_low;
        *out_ptr(f_high)? = band.f_high;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pd_pulse_eval_time(pulse: *const PdPulse, t: f64, out: *mut f64) -> PdStatus {
    guard(|| {
        *out_ptr(out)? = handle(pulse)?.0.eval_time(t);
        Ok(())
    })
}

/// Spectrum `G_n(f)` as real and imaginary parts.
#[no_mangle]
pub unsafe extern "C" fn pd_pulse_eval_freq(pulse: *const PdPulse, f: f64, re: *mut f64, im: *mut f64) -> PdStatus {
    guard(|| {
        let g = handle(pulse)?.0.eval_freq(f);
        *out_ptr(re)? = g.re;
        *out_ptr(im)? = g.im;
        Ok(())
    })
}

/// The synthetic table shipped with the library.
#[no_mangle]
pub unsafe extern "C" fn pd_absorption_bundled(out: *mut *mut PdAbsorption) -> PdStatus {
    guard(|| {
        *out_ptr(out)? = Box::into_raw(Box::new(PdAbsorption(AbsorptionTable::bundled_summer_air())));
        Ok(())
    })
}

/// Loads a `frequency_hz,k_per_meter` CSV.
#[no_mangle]
pub unsafe extern "C" fn pd_absorption_from_csv(path: *const c_char, out: *mut *mut PdAbsorption) -> PdStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let table = lib(AbsorptionTable::from_csv_path(path_arg(path)?))?;
        *out = Box::into_raw(Box::new(PdAbsorption(table)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pd_absorption_k_at(table: *const PdAbsorption, f: f64, out: *mut f64) -> PdStatus {
    guard(|| {
        let t = handle(table)?;
        *out_ptr(out)? = lib(t.0.k_at(f))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pd_absorption_free(table: *mut PdAbsorption) {
    unsafe { free_box(table) }
}

/// Default experiment: orders 6 to 10 on their standard centers.
#[no_mangle]
pub unsafe extern "C" fn pd_experiment_default(out: *mut *mut PdExperiment) -> PdStatus {
    guard(|| {
        *out_ptr(out)? = Box::into_raw(Box::new(PdExperiment { config: ExperimentConfig::default(), result: None }));
        Ok(())
    })
}

/// Reads a TOML experiment description.
#[no_mangle]
pub unsafe extern "C" fn pd_experiment_from_toml(path: *const c_char, out: *mut *mut PdExperiment) -> PdStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let config = lib(ExperimentConfig::from_path(path_arg(path)?))?;
        *out = Box::into_raw(Box::new(PdExperiment { config, result: None }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pd_experiment_set_runs(exp: *mut PdExperiment, runs: usize, base_seed: u64) -> PdStatus {
    guard(|| {
        let e = handle_mut(exp)?;
        e.config.runs = runs;
        e.config.base_seed = base_seed;
        Ok(())
    })
}

/// Replaces the path-length list.
#[no_mangle]
pub unsafe extern "C" fn pd_experiment_set_path_lengths(
    exp: *mut PdExperiment,
    lengths_m: *const f64,
    count: usize,
) -> PdStatus {
    guard(|| {
        let e = handle_mut(exp)?;
        let lengths = if count == 0 {
            Vec::new()
        } else if lengths_m.is_null() {
            return Err(fail(PdStatus::NullPointer, "null path-length array"));
        } else {
            // SAFETY: caller provides `count` readable values.
            unsafe { std::slice::from_raw_parts(lengths_m, count) }.to_vec()
        };
        e.config.path_lengths_m = lengths;
        Ok(())
    })
}

/// Runs the full sweep. `table` may be null to use the configured table.
#[no_mangle]
pub unsafe extern "C" fn pd_experiment_run(exp: *mut PdExperiment, table: *const PdAbsorption) -> PdStatus {
    guard(|| {
        let e = handle_mut(exp)?;
        e.result = None;
        let owned;
        let table = if table.is_null() {
            owned = lib(e.config.load_absorption())?;
            &owned
        } else {
            &handle(table)?.0
        };
        e.result = Some(lib(experiment::sweep(&e.config, table))?);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pd_experiment_report_count(exp: *const PdExperiment, out: *mut usize) -> PdStatus {
    guard(|| {
        let e = handle(exp)?;
        *out_ptr(out)? = e.result.as_ref().map_or(0, |r| r.reports.len());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pd_experiment_report(exp: *const PdExperiment, index: usize, out: *mut PdReport) -> PdStatus {
    guard(|| {
        let e = handle(exp)?;
        let out = out_ptr(out)?;
        let r = e
            .result
            .as_ref()
            .and_then(|r| r.reports.get(index))
            .ok_or_else(|| fail(PdStatus::OutOfRange, format!("no report at index {index}")))?;
        *out = PdReport {
            order: r.order,
            center_hz: r.center_hz,
            path_length_m: r.path_length_m,
            snapshot_time_s: r.snapshot_time_s,
            runs: r.runs,
            rmse_theta_deg: r.rmse_theta_deg,
            rmse_fc_hz: r.rmse_fc_hz,
            tpr: r.tpr,
        };
        Ok(())
    })
}

/// Writes the results CSV of the latest sweep into `buf`. `written`
/// receives the byte count needed including the NUL terminator; when `len`
/// is too small nothing is copied and `BufferTooSmall` is returned.
#[no_mangle]
pub unsafe extern "C" fn pd_experiment_results_csv(
    exp: *const PdExperiment,
    buf: *mut c_char,
    len: usize,
    written: *mut usize,
) -> PdStatus {
    guard(|| {
        let e = handle(exp)?;
        let written = out_ptr(written)?;
        let result = e.result.as_ref().ok_or_else(|| fail(PdStatus::InvalidArgument, "experiment has not been run"))?;
        let mut text = Vec::new();
        experiment::write_results_csv(&result.reports, &mut text).map_err(|err| fail(PdStatus::Io, err.to_string()))?;
        *written = text.len() + 1;
        if buf.is_null() || len < text.len() + 1 {
            return Err(fail(PdStatus::BufferTooSmall, format!("need {} bytes", text.len() + 1)));
        }
        // SAFETY: `len` writable bytes at `buf`, checked above.
        unsafe {
            ptr::copy_nonoverlapping(text.as_ptr().cast::<c_char>(), buf, text.len());
            *buf.add(text.len()) = 0;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pd_experiment_free(exp: *mut PdExperiment) {
    unsafe { free_box(exp) }
}
