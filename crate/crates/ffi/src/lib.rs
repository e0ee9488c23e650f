//! C interface to the `sglbo` crate.
//!
//! Objects are exposed as opaque handles created by `*_new` functions and
//! released by the matching `*_free`. Every fallible call returns an
//! [`SglboStatus`]; on failure, [`sglbo_last_error_message`] describes the
//! most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sglbo::bench::config::{ExperimentConfig, Method, OptimizerKind};
use sglbo::bench::runner::initial_point;
use sglbo::{
    build_ansatz, run_adam, run_nft, run_sglbo, tfim_hamiltonian, CostFunction, Error,
    NoiseModel, Objective, RunResult,
};

/// Result codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SglboStatus {
    Ok = 0,
    InvalidArgument = 1,
    Resource = 2,
    Numeric = 3,
    Parse = 4,
    Topology = 5,
    Config = 6,
    Io = 7,
    NullPointer = 8,
    Panic = 9,
}

impl From<&Error> for SglboStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Argument(_) => SglboStatus::InvalidArgument,
            Error::Resource(_) => SglboStatus::Resource,
            Error::Numeric(_) => SglboStatus::Numeric,
            Error::Parse { .. } => SglboStatus::Parse,
            Error::Topology(_) => SglboStatus::Topology,
            Error::Config(_) => SglboStatus::Config,
            Error::Io(_) => SglboStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SglboStatus, String)>) -> SglboStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SglboStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SglboStatus::Panic
        }
    }
}

fn lib<T>(r: sglbo::Result<T>) -> Result<T, (SglboStatus, String)> {
    r.map_err(|e| (SglboStatus::from(&e), e.to_string()))
}

fn null(what: &str) -> (SglboStatus, String) {
    (SglboStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (SglboStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SglboStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SglboStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message for the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sglbo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sglbo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// A cost function on a simulated circuit.
pub struct SglboCost {
    inner: CostFunction,
}

fn store<T>(out: *mut *mut T, value: T) -> Result<(), (SglboStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// TFIM energy `-J (sum Z_j Z_{j+1} + g sum X_j)` on the layered ansatz with `r` blocks.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sglbo_cost_new_tfim(
    n: usize,
    r: usize,
    coupling: f64,
    field: f64,
    out: *mut *mut SglboCost,
) -> SglboStatus {
    guard(|| {
        let c = lib(build_ansatz(n, r)
            .and_then(|a| CostFunction::vqe(a, tfim_hamiltonian(n, coupling, field)?)))?;
        store(out, SglboCost { inner: c })
    })
}

/// Circuit-compilation cost toward the state prepared by `target` (length `2n(r+1)`).
///
/// # Safety
/// `target` must point to `target_len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sglbo_cost_new_vqc(
    n: usize,
    r: usize,
    target: *const f64,
    target_len: usize,
    out: *mut *mut SglboCost,
) -> SglboStatus {
    guard(|| {
        let t = read_slice(target, target_len, "target")?.to_vec();
        let c = lib(build_ansatz(n, r).and_then(|a| CostFunction::vqc(a, t)))?;
        store(out, SglboCost { inner: c })
    })
}

/// Attaches a noise model read from a table file, or the bundled device table
/// when `path` is null.
///
/// # Safety
/// `cost` must be a live handle; `path` null or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sglbo_cost_set_noise(cost: *mut SglboCost, path: *const c_char) -> SglboStatus {
    guard(|| {
        let c = cost.as_mut().ok_or_else(|| null("cost"))?;
        let model = if path.is_null() {
            NoiseModel::default_device()
        } else {
            lib(NoiseModel::load_table(read_str(path, "path")?))?
        };
        c.inner = lib(c.inner.noiseless().with_noise(model))?;
        Ok(())
    })
}

/// Number of circuit parameters, or 0 for a null handle.
///
/// # Safety
/// `cost` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sglbo_cost_dim(cost: *const SglboCost) -> usize {
    cost.as_ref().map_or(0, |c| c.inner.dim())
}

/// # Safety
/// `cost` must be a live handle, `theta` must hold `len` doubles and `value` be writable.
#[no_mangle]
pub unsafe extern "C" fn sglbo_cost_exact_value(
    cost: *const SglboCost,
    theta: *const f64,
    len: usize,
    value: *mut f64,
) -> SglboStatus {
    guard(|| {
        let c = cost.as_ref().ok_or_else(|| null("cost"))?;
        let v = lib(c.inner.exact_value(read_slice(theta, len, "theta")?))?;
        *value.as_mut().ok_or_else(|| null("value"))? = v;
        Ok(())
    })
}

/// Finite-shot estimate with a generator seeded by `seed`.
///
/// # Safety
/// As for [`sglbo_cost_exact_value`].
#[no_mangle]
pub unsafe extern "C" fn sglbo_cost_noisy_query(
    cost: *const SglboCost,
    theta: *const f64,
    len: usize,
    shots: u64,
    seed: u64,
    value: *mut f64,
) -> SglboStatus {
    guard(|| {
        let c = cost.as_ref().ok_or_else(|| null("cost"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = lib(c.inner.noisy_query(read_slice(theta, len, "theta")?, shots, &mut rng))?;
        *value.as_mut().ok_or_else(|| null("value"))? = q.value;
        Ok(())
    })
}

/// # Safety
/// `cost` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sglbo_cost_free(cost: *mut SglboCost) {
    if !cost.is_null() {
        drop(Box::from_raw(cost));
    }
}

/// Optimizer settings; obtain defaults from `sglbo_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SglboOptions {
    pub budget: u64,
    pub seed: u64,
    pub kappa: f64,
    pub alpha: f64,
    /// Non-positive selects 3 for energies and 6 for compilation costs.
    pub beta: f64,
    pub epsilon: f64,
    pub s_init: u64,
    /// Shots per evaluation for Adam and NFT.
    pub shots: u64,
    pub learning_rate: f64,
}

#[no_mangle]
pub extern "C" fn sglbo_options_default() -> SglboOptions {
    let d = ExperimentConfig::default();
    SglboOptions {
        budget: d.budget,
        seed: d.seed,
        kappa: d.kappa,
        alpha: d.alpha,
        beta: 0.0,
        epsilon: d.epsilon,
        s_init: d.s_init,
        shots: d.shots,
        learning_rate: d.learning_rate,
    }
}

/// One recorded iteration.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SglboTraceRow {
    pub t: usize,
    pub cumulative_shots: u64,
    pub cost: f64,
    pub suffix_cost: f64,
    pub s_grad_mean: f64,
    pub s_cost: u64,
    pub eta: f64,
}

/// A finished optimization run.
pub struct SglboRun {
    result: RunResult,
}

fn experiment_config(cost: &CostFunction, kind: OptimizerKind, o: &SglboOptions) -> ExperimentConfig {
    let task = match cost.kind() {
        sglbo::CostKind::Vqe { .. } => sglbo::bench::Task::Vqe,
        sglbo::CostKind::Vqc { .. } => sglbo::bench::Task::Vqc,
    };
    ExperimentConfig {
        task,
        optimizer: kind,
        budget: o.budget,
        seed: o.seed,
        kappa: o.kappa,
        alpha: o.alpha,
        beta: (o.beta > 0.0).then_some(o.beta),
        epsilon: o.epsilon,
        s_init: o.s_init,
        shots: o.shots,
        learning_rate: o.learning_rate,
        ..ExperimentConfig::default()
    }
}

/// Minimizes `cost` with `optimizer` (`sglbo`, `adam`, `adam+sa`, `adam+ass`,
/// `adam+sa+ass`, `nft` or `nft+sa`). A null `theta0` draws the start uniformly
/// from `[-pi, pi]^D`; null `options` uses the defaults.
///
/// # Safety
/// Pointers must be valid for their stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sglbo_optimize(
    cost: *const SglboCost,
    optimizer: *const c_char,
    options: *const SglboOptions,
    theta0: *const f64,
    theta0_len: usize,
    out: *mut *mut SglboRun,
) -> SglboStatus {
    guard(|| {
        let c = &cost.as_ref().ok_or_else(|| null("cost"))?.inner;
        let kind: OptimizerKind = lib(read_str(optimizer, "optimizer")?.parse())?;
        let opts = options.as_ref().copied().unwrap_or_else(|| sglbo_options_default());
        let cfg = experiment_config(c, kind, &opts);
        let start = if theta0.is_null() {
            initial_point(opts.seed, 0, c.dim())
        } else {
            read_slice(theta0, theta0_len, "theta0")?.to_vec()
        };
        let mut rng = sglbo::bench::runner::run_rng(opts.seed, 0, 0);
        let mut ignore = |_: &sglbo::TraceRow| {};
        let result = lib(match kind.method {
            Method::Sglbo => run_sglbo(c, &cfg.sglbo(), &start, &mut rng, &mut ignore),
            Method::Adam => run_adam(c, &cfg.adam(), &start, &mut rng, &mut ignore),
            Method::Nft => run_nft(c, &cfg.nft(), &start, &mut rng, &mut ignore),
        })?;
        store(out, SglboRun { result })
    })
}

/// Shots consumed by the run, or 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sglbo_run_total_shots(run: *const SglboRun) -> u64 {
    run.as_ref().map_or(0, |r| r.result.total_shots)
}

/// Copies the returned point (the suffix average when enabled) into `buf`.
///
/// # Safety
/// `run` must be a live handle and `buf` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sglbo_run_point(run: *const SglboRun, buf: *mut f64, len: usize) -> SglboStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        let p = &r.result.suffix_average;
        if len != p.len() {
            return Err((
                SglboStatus::InvalidArgument,
                format!("buffer holds {len} values, point has {}", p.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        slice::from_raw_parts_mut(buf, len).copy_from_slice(p);
        Ok(())
    })
}

/// Number of trace rows, including the starting point.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sglbo_run_num_rows(run: *const SglboRun) -> usize {
    run.as_ref().map_or(0, |r| r.result.trace.rows.len())
}

/// # Safety
/// `run` must be a live handle and `row` writable.
#[no_mangle]
pub unsafe extern "C" fn sglbo_run_row(run: *const SglboRun, index: usize, row: *mut SglboTraceRow) -> SglboStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        let src = r.result.trace.rows.get(index).ok_or_else(|| {
            (SglboStatus::InvalidArgument, format!("row {index} out of range"))
        })?;
        *row.as_mut().ok_or_else(|| null("row"))? = SglboTraceRow {
            t: src.t,
            cumulative_shots: src.cumulative_shots,
            cost: src.cost,
            suffix_cost: src.suffix_cost,
            s_grad_mean: src.s_grad_mean,
            s_cost: src.s_cost,
            eta: src.eta,
        };
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sglbo_run_free(run: *mut SglboRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
