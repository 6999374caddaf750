//! C ABI over riss-core.
//!
//! Every fallible call returns a [`RissStatus`]; on failure the message is
//! kept per thread and read with [`riss_last_error_message`]. Handles are
//! opaque, created by the library and released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use riss_core::harness::{self, emit_csv, render_csv, Experiment, RunOutput, ScenarioConfig};
use riss_core::schedule::{optimal_order, waiting_cost, RotationOrder};
use riss_core::wet::{self, BeamPlan, EhModel, FirstBeam};
use riss_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RissStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Infeasible = 4,
    Eigen = 5,
    Config = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RissFirstBeam {
    EdgeAtEndfire = 0,
    PeakAtEndfire = 1,
}

impl From<RissFirstBeam> for FirstBeam {
    fn from(f: RissFirstBeam) -> Self {
        match f {
            RissFirstBeam::EdgeAtEndfire => FirstBeam::EdgeAtEndfire,
            RissFirstBeam::PeakAtEndfire => FirstBeam::PeakAtEndfire,
        }
    }
}

/// Scenario configuration.
pub struct RissConfig(ScenarioConfig);

/// Rows and cell accounting of one experiment run.
pub struct RissRun(RunOutput);

/// Beam rotation plan.
pub struct RissBeamPlan(BeamPlan);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RissStatus {
    match e {
        Error::InvalidArgument(_) => RissStatus::InvalidArgument,
        Error::Dimension(_) => RissStatus::Dimension,
        Error::Infeasible => RissStatus::Infeasible,
        Error::Eigen => RissStatus::Eigen,
        Error::Config(_) => RissStatus::Config,
        Error::Io { .. } => RissStatus::Io,
    }
}

fn fail(status: RissStatus, msg: impl Into<String>) -> RissStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), RissStatus>) -> RissStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RissStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(RissStatus::Panic, "panic inside riss-core"),
    }
}

fn lib<T>(r: riss_core::Result<T>) -> Result<T, RissStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), RissStatus> {
    if p.is_null() {
        Err(fail(RissStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, RissStatus> {
    non_null(p, what)?;
    CStr::from_ptr(p).to_str().map_err(|_| fail(RissStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Copies `bytes` plus a terminating NUL into `buf`. `written` receives the
/// length without the NUL, also when the buffer is too small.
unsafe fn copy_out(bytes: &[u8], buf: *mut c_char, len: usize, written: *mut usize) -> Result<(), RissStatus> {
    if !written.is_null() {
        *written = bytes.len();
    }
    if buf.is_null() || len < bytes.len() + 1 {
        return Err(fail(RissStatus::BufferTooSmall, format!("need {} bytes", bytes.len() + 1)));
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
    *buf.add(bytes.len()) = 0;
    Ok(())
}

/// Copies the last error message of this thread into `buf`; see the
/// buffer convention of [`riss_run_csv`]. An empty string when none is set.
///
/// # Safety
/// `buf` must point to `len` writable bytes or be null; `written` may be null.
#[no_mangle]
pub unsafe extern "C" fn riss_last_error_message(buf: *mut c_char, len: usize, written: *mut usize) -> RissStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().as_ref().map(|c| c.as_bytes().to_vec()).unwrap_or_default());
    match copy_out(&msg, buf, len, written) {
        Ok(()) => RissStatus::Ok,
        Err(s) => s,
    }
}

/// Built-in default configuration.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn riss_config_default(out: *mut *mut RissConfig) -> RissStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = Box::into_raw(Box::new(RissConfig(ScenarioConfig::default())));
        Ok(())
    })
}

/// Configuration parsed from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn riss_config_from_toml(toml: *const c_char, out: *mut *mut RissConfig) -> RissStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = read_str(toml, "toml")?;
        let cfg = lib(ScenarioConfig::from_toml(text))?;
        *out = Box::into_raw(Box::new(RissConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn riss_config_set_seed(cfg: *mut RissConfig, seed: u64) -> RissStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        (*cfg).0.seed = seed;
        Ok(())
    })
}

/// Sets the trial count of one experiment, named by its CLI id.
///
/// # Safety
/// `cfg` must be a live handle; `experiment` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn riss_config_set_trials(cfg: *mut RissConfig, experiment: *const c_char, trials: usize) -> RissStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        let e: Experiment = lib(read_str(experiment, "experiment")?.parse())?;
        if trials == 0 {
            return Err(fail(RissStatus::InvalidArgument, "trials must be at least 1"));
        }
        e.set_trials(&mut (*cfg).0, trials);
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a handle from this library or null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn riss_config_free(cfg: *mut RissConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs one experiment, named by its CLI id.
///
/// # Safety
/// `cfg` must be a live handle; `experiment` a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn riss_run(cfg: *const RissConfig, experiment: *const c_char, out: *mut *mut RissRun) -> RissStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        non_null(out, "out")?;
        let e: Experiment = lib(read_str(experiment, "experiment")?.parse())?;
        let run = lib(harness::run(e, &(*cfg).0))?;
        *out = Box::into_raw(Box::new(RissRun(run)));
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle; the out pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn riss_run_counts(
    run: *const RissRun,
    rows: *mut usize,
    cells: *mut usize,
    failed_cells: *mut usize,
) -> RissStatus {
    guard(|| {
        non_null(run, "run")?;
        let r = &(*run).0;
        for (p, v) in [(rows, r.rows.len()), (cells, r.cells), (failed_cells, r.failed)] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Aggregate value of `metric` at the parameter cell `params`, written as
/// `name=value` pairs joined by `;` (empty for unparameterized metrics).
///
/// # Safety
/// `run` must be a live handle; strings NUL-terminated; `value` valid.
#[no_mangle]
pub unsafe extern "C" fn riss_run_aggregate(
    run: *const RissRun,
    metric: *const c_char,
    params: *const c_char,
    value: *mut f64,
) -> RissStatus {
    guard(|| {
        non_null(run, "run")?;
        non_null(value, "value")?;
        let metric = read_str(metric, "metric")?;
        let params = read_str(params, "params")?;
        let mut pairs = Vec::new();
        for kv in params.split(';').filter(|s| !s.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| fail(RissStatus::InvalidArgument, format!("parameter {kv} is not name=value")))?;
            pairs.push((k, v));
        }
        match (*run).0.aggregate(metric, &pairs) {
            Some(v) => {
                *value = v;
                Ok(())
            }
            None => Err(fail(RissStatus::InvalidArgument, format!("no aggregate {metric} at [{params}]"))),
        }
    })
}

/// CSV text of the run. Pass a null `buf` to query the length through
/// `written`; the buffer needs `written + 1` bytes for the NUL.
///
/// # Safety
/// `run` must be a live handle; `buf` must point to `len` bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn riss_run_csv(run: *const RissRun, buf: *mut c_char, len: usize, written: *mut usize) -> RissStatus {
    guard(|| {
        non_null(run, "run")?;
        copy_out(render_csv(&(*run).0.rows).as_bytes(), buf, len, written)
    })
}

/// # Safety
/// `run` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn riss_run_write_csv(run: *const RissRun, path: *const c_char) -> RissStatus {
    guard(|| {
        non_null(run, "run")?;
        let path = read_str(path, "path")?;
        lib(emit_csv(&(*run).0.rows, Path::new(path)))
    })
}

/// # Safety
/// `run` must be a handle from this library or null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn riss_run_free(run: *mut RissRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Normalized array factor of an `n`-element ULA steered to `direction`.
#[no_mangle]
pub extern "C" fn riss_beam_gain(direction: f64, omega: f64, n: usize) -> f64 {
    wet::beam_gain(direction, omega, n)
}

/// Harvested power of the default nonlinear model, watts.
#[no_mangle]
pub extern "C" fn riss_harvest(input_power: f64) -> f64 {
    EhModel::default().harvest(input_power)
}

/// Evenly stitched plan of `n_beams` beams for an `n`-element array.
///
/// # Safety
/// `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn riss_uniform_plan(n_beams: usize, n: usize, first: RissFirstBeam, out: *mut *mut RissBeamPlan) -> RissStatus {
    guard(|| {
        non_null(out, "out")?;
        let plan = lib(wet::uniform_plan(n_beams, n, first.into()))?;
        *out = Box::into_raw(Box::new(RissBeamPlan(plan)));
        Ok(())
    })
}

/// Beam count and threshold of a plan.
///
/// # Safety
/// `plan` must be a live handle; out pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn riss_plan_info(plan: *const RissBeamPlan, n_beams: *mut usize, gamma: *mut f64) -> RissStatus {
    guard(|| {
        non_null(plan, "plan")?;
        let p = &(*plan).0;
        if !n_beams.is_null() {
            *n_beams = p.n_beams();
        }
        if !gamma.is_null() {
            *gamma = p.beams.first().map_or(f64::NAN, |b| b.gamma);
        }
        Ok(())
    })
}

/// Copies the beam directions, ascending, into `out` of length `len`.
///
/// # Safety
/// `plan` must be a live handle; `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn riss_plan_directions(plan: *const RissBeamPlan, out: *mut f64, len: usize) -> RissStatus {
    guard(|| {
        non_null(plan, "plan")?;
        non_null(out, "out")?;
        let d = (*plan).0.directions();
        if len < d.len() {
            return Err(fail(RissStatus::BufferTooSmall, format!("need {} directions", d.len())));
        }
        ptr::copy_nonoverlapping(d.as_ptr(), out, d.len());
        Ok(())
    })
}

/// # Safety
/// `plan` must be a handle from this library or null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn riss_plan_free(plan: *mut RissBeamPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Rotation order minimizing the waiting cost, and that cost averaged per device.
///
/// # Safety
/// `counts` and `times` must point to `n` elements, `order` to `n` writable
/// slots; `average_wait` may be null.
#[no_mangle]
pub unsafe extern "C" fn riss_optimal_order(
    counts: *const usize,
    times: *const f64,
    n: usize,
    order: *mut usize,
    average_wait: *mut f64,
) -> RissStatus {
    guard(|| {
        if n == 0 {
            return Err(fail(RissStatus::InvalidArgument, "need at least one beam"));
        }
        non_null(counts, "counts")?;
        non_null(times, "times")?;
        non_null(order, "order")?;
        let counts = std::slice::from_raw_parts(counts, n);
        let times = std::slice::from_raw_parts(times, n);
        let o: RotationOrder = lib(optimal_order(counts, times))?;
        if !average_wait.is_null() {
            *average_wait = lib(waiting_cost(&o, counts, times, &[]))?.average;
        }
        ptr::copy_nonoverlapping(o.order.as_ptr(), order, n);
        Ok(())
    })
}
