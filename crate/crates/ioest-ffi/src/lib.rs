//! C ABI for the ioest inverse-optimization library.
//!
//! Conventions:
//!
//! * Opaque handles (`IoestProblem`, `IoestDataset`) are created by the
//!   constructors below and released with the matching `_free` function.
//! * Every fallible call returns an [`IoestStatus`]; `IOEST_STATUS_OK` is 0.
//!   On failure a thread-local message is retrievable with
//!   [`ioest_last_error`].
//! * Vector arguments are plain `double` arrays whose lengths are fixed by
//!   the problem dimensions (see `ioest_problem_dims`).

use std::cell::RefCell;
use std::ffi::CStr;
use std::os::raw::c_char;
use std::path::Path;

use ioest::datagen::Scenario;
use ioest::error::Error;
use ioest::estimators::{
    cross_validate, default_gamma_grid, default_sigma_scales, ena_estimate, kka_estimate,
    spa_estimate, via_estimate, EstimateResult, KernelConfig,
};
use ioest::forward::{ParamBox, ProblemInstance};
use ioest::risk::{population_risk, risk_saa, Dataset};

/// Status codes returned by every fallible `ioest_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IoestStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    DomainError = 4,
    SolverFailure = 5,
    IoError = 6,
    ParseError = 7,
}

/// Opaque forward-problem handle.
pub struct IoestProblem {
    inner: ProblemInstance,
}

/// Opaque dataset handle.
pub struct IoestDataset {
    inner: Dataset,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(err: &Error) -> IoestStatus {
    LAST_ERROR.with(|cell| *cell.borrow_mut() = err.to_string());
    match err {
        Error::DimensionMismatch { .. } => IoestStatus::DimensionMismatch,
        Error::InvalidArgument(_) | Error::NetTooLarge { .. } | Error::Config(_) => {
            IoestStatus::InvalidArgument
        }
        Error::Domain(_) | Error::NegativeMultiplier { .. } => IoestStatus::DomainError,
        Error::BracketFailure(_) | Error::Estimator(_) => IoestStatus::SolverFailure,
        Error::Io(_) => IoestStatus::IoError,
        Error::SchemaMismatch(_) | Error::UnknownScenario(_) => IoestStatus::ParseError,
    }
}

fn clear_error() {
    LAST_ERROR.with(|cell| cell.borrow_mut().clear());
}

/// Copy the last error message (UTF-8, NUL terminated) into `buf`.
///
/// Returns the full message length in bytes (excluding the NUL), whatever
/// the capacity; passing `cap = 0` or a NULL buffer just queries the length.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes, or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ioest_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|cell| {
        let message = cell.borrow();
        let bytes = message.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

macro_rules! nonnull {
    ($ptr:expr) => {
        if $ptr.is_null() {
            LAST_ERROR.with(|cell| *cell.borrow_mut() = "null argument".to_string());
            return IoestStatus::NullArgument;
        }
    };
}

fn box_out(problem: ProblemInstance, out: *mut *mut IoestProblem) -> IoestStatus {
    let handle = Box::new(IoestProblem { inner: problem });
    unsafe { *out = Box::into_raw(handle) };
    clear_error();
    IoestStatus::Ok
}

/// Linear cost over a box; `d = m = p`.
///
/// # Safety
/// `lo`, `hi` point to `d` doubles; `out` is a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn ioest_problem_linear_box(
    d: usize,
    lo: *const f64,
    hi: *const f64,
    out: *mut *mut IoestProblem,
) -> IoestStatus {
    nonnull!(out);
    nonnull!(lo);
    nonnull!(hi);
    let lo = slice_arg(lo, d).unwrap().to_vec();
    let hi = slice_arg(hi, d).unwrap().to_vec();
    match ProblemInstance::linear_box(lo, hi) {
        Ok(problem) => box_out(problem, out),
        Err(e) => set_error(&e),
    }
}

/// Separable quadratic over a box: `sum a x_k^2 - (c theta_k + u_k + shift_k) x_k`.
///
/// # Safety
/// `shift`, `lo`, `hi` point to `d` doubles; `out` is a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn ioest_problem_separable_quad_box(
    d: usize,
    a: f64,
    c: f64,
    shift: *const f64,
    lo: *const f64,
    hi: *const f64,
    out: *mut *mut IoestProblem,
) -> IoestStatus {
    nonnull!(out);
    nonnull!(shift);
    nonnull!(lo);
    nonnull!(hi);
    let shift = slice_arg(shift, d).unwrap().to_vec();
    let lo = slice_arg(lo, d).unwrap().to_vec();
    let hi = slice_arg(hi, d).unwrap().to_vec();
    match ProblemInstance::separable_quad_box(a, c, shift, lo, hi) {
        Ok(problem) => box_out(problem, out),
        Err(e) => set_error(&e),
    }
}

/// Weighted-log objective over the standard simplex; `d = p + 1`.
///
/// # Safety
/// `out` is a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn ioest_problem_log_simplex(
    p: usize,
    out: *mut *mut IoestProblem,
) -> IoestStatus {
    nonnull!(out);
    match ProblemInstance::log_simplex(p) {
        Ok(problem) => box_out(problem, out),
        Err(e) => set_error(&e),
    }
}

/// Scalar comfort/energy tradeoff quadratic over `[70, 76]`.
///
/// # Safety
/// `out` is a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn ioest_problem_comfort_quad(out: *mut *mut IoestProblem) -> IoestStatus {
    nonnull!(out);
    match ProblemInstance::comfort_quad() {
        Ok(problem) => box_out(problem, out),
        Err(e) => set_error(&e),
    }
}

/// Build the model (and its conventional parameter box) registered for a
/// named scenario, e.g. "FOP-B" or "CE". `p` is used by the parameterized
/// scenarios; pass 0 for the default.
///
/// # Safety
/// `name` is a NUL-terminated string; `out` is a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn ioest_problem_from_scenario(
    name: *const c_char,
    p: usize,
    out: *mut *mut IoestProblem,
) -> IoestStatus {
    nonnull!(out);
    nonnull!(name);
    let Ok(name) = CStr::from_ptr(name).to_str() else {
        LAST_ERROR.with(|cell| *cell.borrow_mut() = "scenario name is not UTF-8".into());
        return IoestStatus::ParseError;
    };
    match Scenario::parse(name, (p > 0).then_some(p)) {
        Ok(scenario) => box_out(scenario.model(), out),
        Err(e) => set_error(&e),
    }
}

/// # Safety
/// `problem` must be a live handle from a constructor (or NULL).
#[no_mangle]
pub unsafe extern "C" fn ioest_problem_free(problem: *mut IoestProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Query the problem dimensions; NULL outputs are skipped.
///
/// # Safety
/// `problem` is a live handle; non-NULL outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn ioest_problem_dims(
    problem: *const IoestProblem,
    out_d: *mut usize,
    out_m: *mut usize,
    out_p: *mut usize,
    out_q: *mut usize,
) -> IoestStatus {
    nonnull!(problem);
    let dims = (*problem).inner.dims();
    if !out_d.is_null() {
        *out_d = dims.d;
    }
    if !out_m.is_null() {
        *out_m = dims.m;
    }
    if !out_p.is_null() {
        *out_p = dims.p;
    }
    if !out_q.is_null() {
        *out_q = dims.q;
    }
    clear_error();
    IoestStatus::Ok
}

/// Build a dataset from row-major arrays: `us` is `n x m`, `ys` is `n x d`.
///
/// # Safety
/// `us` and `ys` point to `n*m` and `n*d` doubles; `out` is a handle slot.
#[no_mangle]
pub unsafe extern "C" fn ioest_dataset_new(
    n: usize,
    m: usize,
    d: usize,
    us: *const f64,
    ys: *const f64,
    out: *mut *mut IoestDataset,
) -> IoestStatus {
    nonnull!(out);
    nonnull!(us);
    nonnull!(ys);
    let us = slice_arg(us, n * m).unwrap();
    let ys = slice_arg(ys, n * d).unwrap();
    let us: Vec<Vec<f64>> = (0..n).map(|i| us[i * m..(i + 1) * m].to_vec()).collect();
    let ys: Vec<Vec<f64>> = (0..n).map(|i| ys[i * d..(i + 1) * d].to_vec()).collect();
    match Dataset::new(us, ys) {
        Ok(data) => {
            *out = Box::into_raw(Box::new(IoestDataset { inner: data }));
            clear_error();
            IoestStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Load a dataset from a CSV file with header `u_1..u_m,y_1..y_d`.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn ioest_dataset_read_csv(
    path: *const c_char,
    out: *mut *mut IoestDataset,
) -> IoestStatus {
    nonnull!(out);
    nonnull!(path);
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        LAST_ERROR.with(|cell| *cell.borrow_mut() = "path is not UTF-8".into());
        return IoestStatus::ParseError;
    };
    match ioest::csvio::read_dataset(Path::new(path)) {
        Ok(data) => {
            *out = Box::into_raw(Box::new(IoestDataset { inner: data }));
            clear_error();
            IoestStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// # Safety
/// `dataset` must be a live handle (or NULL).
#[no_mangle]
pub unsafe extern "C" fn ioest_dataset_free(dataset: *mut IoestDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of observations (0 for NULL).
///
/// # Safety
/// `dataset` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ioest_dataset_len(dataset: *const IoestDataset) -> usize {
    if dataset.is_null() {
        0
    } else {
        (*dataset).inner.n()
    }
}

/// Objective value `f(x, u, theta)`.
///
/// # Safety
/// Array lengths follow the problem dims; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ioest_objective(
    problem: *const IoestProblem,
    x: *const f64,
    u: *const f64,
    theta: *const f64,
    out: *mut f64,
) -> IoestStatus {
    nonnull!(problem);
    nonnull!(x);
    nonnull!(u);
    nonnull!(theta);
    nonnull!(out);
    let prob = &(*problem).inner;
    let dims = prob.dims();
    let x = slice_arg(x, dims.d).unwrap();
    let u = slice_arg(u, dims.m).unwrap();
    let theta = slice_arg(theta, dims.p).unwrap();
    match prob.objective(x, u, theta) {
        Ok(v) => {
            *out = v;
            clear_error();
            IoestStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Exact forward solve: writes the minimizer into `out_x` (`d` doubles) and
/// the optimal value into `out_value` (NULL to skip).
///
/// # Safety
/// Array lengths follow the problem dims.
#[no_mangle]
pub unsafe extern "C" fn ioest_solve_forward(
    problem: *const IoestProblem,
    u: *const f64,
    theta: *const f64,
    out_x: *mut f64,
    out_value: *mut f64,
) -> IoestStatus {
    nonnull!(problem);
    nonnull!(u);
    nonnull!(theta);
    nonnull!(out_x);
    let prob = &(*problem).inner;
    let dims = prob.dims();
    let u = slice_arg(u, dims.m).unwrap();
    let theta = slice_arg(theta, dims.p).unwrap();
    match prob.solve_forward(u, theta) {
        Ok(solution) => {
            std::ptr::copy_nonoverlapping(solution.point.as_ptr(), out_x, dims.d);
            if !out_value.is_null() {
                *out_value = solution.value;
            }
            clear_error();
            IoestStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Euclidean projection of `z` onto the feasible set, written to `out_x`.
///
/// # Safety
/// Array lengths follow the problem dims.
#[no_mangle]
pub unsafe extern "C" fn ioest_project_feasible(
    problem: *const IoestProblem,
    z: *const f64,
    u: *const f64,
    out_x: *mut f64,
) -> IoestStatus {
    nonnull!(problem);
    nonnull!(z);
    nonnull!(u);
    nonnull!(out_x);
    let prob = &(*problem).inner;
    let dims = prob.dims();
    let z = slice_arg(z, dims.d).unwrap();
    let u = slice_arg(u, dims.m).unwrap();
    match prob.project_feasible(z, u) {
        Ok(x) => {
            std::ptr::copy_nonoverlapping(x.as_ptr(), out_x, dims.d);
            clear_error();
            IoestStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Sample-average risk `Q_n(theta; eps)` of the dataset under the problem.
///
/// # Safety
/// `theta` holds `p` doubles; `out_q` is writable.
#[no_mangle]
pub unsafe extern "C" fn ioest_risk_saa(
    problem: *const IoestProblem,
    dataset: *const IoestDataset,
    theta: *const f64,
    eps: f64,
    out_q: *mut f64,
) -> IoestStatus {
    nonnull!(problem);
    nonnull!(dataset);
    nonnull!(theta);
    nonnull!(out_q);
    let prob = &(*problem).inner;
    let data = &(*dataset).inner;
    let theta = slice_arg(theta, prob.dims().p).unwrap();
    match population_risk(prob, theta, eps, data) {
        Ok(q) => {
            *out_q = q;
            clear_error();
            IoestStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

unsafe fn write_estimate(
    estimate: EstimateResult,
    p: usize,
    out_theta: *mut f64,
    out_loss: *mut f64,
) -> IoestStatus {
    std::ptr::copy_nonoverlapping(estimate.theta_hat.as_ptr(), out_theta, p);
    if !out_loss.is_null() {
        *out_loss = estimate.loss;
    }
    clear_error();
    IoestStatus::Ok
}

/// Enumeration estimate over the box `[theta_lo, theta_hi]` (each `p`
/// doubles) with net spacing `delta` and regularization `eps`.
///
/// # Safety
/// `out_theta` holds `p` doubles; `out_loss` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn ioest_ena_estimate(
    problem: *const IoestProblem,
    dataset: *const IoestDataset,
    theta_lo: *const f64,
    theta_hi: *const f64,
    delta: f64,
    eps: f64,
    out_theta: *mut f64,
    out_loss: *mut f64,
) -> IoestStatus {
    nonnull!(problem);
    nonnull!(dataset);
    nonnull!(theta_lo);
    nonnull!(theta_hi);
    nonnull!(out_theta);
    let prob = &(*problem).inner;
    let data = &(*dataset).inner;
    let p = prob.dims().p;
    let theta_box = match ParamBox::new(
        slice_arg(theta_lo, p).unwrap().to_vec(),
        slice_arg(theta_hi, p).unwrap().to_vec(),
    ) {
        Ok(b) => b,
        Err(e) => return set_error(&e),
    };
    match ena_estimate(prob, data, &theta_box, delta, eps) {
        Ok(est) => write_estimate(est, p, out_theta, out_loss),
        Err(e) => set_error(&e),
    }
}

/// Semiparametric estimate. Pass `gamma <= 0` or `sigma <= 0` to select the
/// kernel by cross-validation; `project` forces projecting denoised points
/// onto the feasible set.
///
/// # Safety
/// `out_theta` holds `p` doubles; `out_loss` may be NULL.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ioest_spa_estimate(
    problem: *const IoestProblem,
    dataset: *const IoestDataset,
    theta_lo: *const f64,
    theta_hi: *const f64,
    gamma: f64,
    sigma: f64,
    project: bool,
    out_theta: *mut f64,
    out_loss: *mut f64,
) -> IoestStatus {
    nonnull!(problem);
    nonnull!(dataset);
    nonnull!(theta_lo);
    nonnull!(theta_hi);
    nonnull!(out_theta);
    let prob = &(*problem).inner;
    let data = &(*dataset).inner;
    let p = prob.dims().p;
    let theta_box = match ParamBox::new(
        slice_arg(theta_lo, p).unwrap().to_vec(),
        slice_arg(theta_hi, p).unwrap().to_vec(),
    ) {
        Ok(b) => b,
        Err(e) => return set_error(&e),
    };
    let cfg = if gamma > 0.0 && sigma > 0.0 {
        match KernelConfig::new(gamma, sigma) {
            Ok(cfg) => cfg,
            Err(e) => return set_error(&e),
        }
    } else {
        match cross_validate(
            data,
            &default_gamma_grid(data),
            &default_sigma_scales(),
            5.min(data.n()).max(2),
        ) {
            Ok(cfg) => cfg,
            Err(e) => return set_error(&e),
        }
    };
    let project = project || matches!(prob.family(), ioest::forward::Family::LogSimplex { .. });
    match spa_estimate(prob, data, &theta_box, &cfg, project) {
        Ok(est) => write_estimate(est, p, out_theta, out_loss),
        Err(e) => set_error(&e),
    }
}

/// Variational-inequality baseline estimate.
///
/// # Safety
/// `out_theta` holds `p` doubles; `out_loss` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn ioest_via_estimate(
    problem: *const IoestProblem,
    dataset: *const IoestDataset,
    theta_lo: *const f64,
    theta_hi: *const f64,
    delta: f64,
    out_theta: *mut f64,
    out_loss: *mut f64,
) -> IoestStatus {
    nonnull!(problem);
    nonnull!(dataset);
    nonnull!(theta_lo);
    nonnull!(theta_hi);
    nonnull!(out_theta);
    let prob = &(*problem).inner;
    let data = &(*dataset).inner;
    let p = prob.dims().p;
    let theta_box = match ParamBox::new(
        slice_arg(theta_lo, p).unwrap().to_vec(),
        slice_arg(theta_hi, p).unwrap().to_vec(),
    ) {
        Ok(b) => b,
        Err(e) => return set_error(&e),
    };
    match via_estimate(prob, data, &theta_box, delta) {
        Ok(est) => write_estimate(est, p, out_theta, out_loss),
        Err(e) => set_error(&e),
    }
}

/// KKT-residual baseline estimate.
///
/// # Safety
/// `out_theta` holds `p` doubles; `out_loss` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn ioest_kka_estimate(
    problem: *const IoestProblem,
    dataset: *const IoestDataset,
    theta_lo: *const f64,
    theta_hi: *const f64,
    delta: f64,
    out_theta: *mut f64,
    out_loss: *mut f64,
) -> IoestStatus {
    nonnull!(problem);
    nonnull!(dataset);
    nonnull!(theta_lo);
    nonnull!(theta_hi);
    nonnull!(out_theta);
    let prob = &(*problem).inner;
    let data = &(*dataset).inner;
    let p = prob.dims().p;
    let theta_box = match ParamBox::new(
        slice_arg(theta_lo, p).unwrap().to_vec(),
        slice_arg(theta_hi, p).unwrap().to_vec(),
    ) {
        Ok(b) => b,
        Err(e) => return set_error(&e),
    };
    match kka_estimate(prob, data, &theta_box, delta) {
        Ok(est) => write_estimate(est, p, out_theta, out_loss),
        Err(e) => set_error(&e),
    }
}

/// Direct check that the risk at the estimate matches an independent
/// re-evaluation; exposed mainly for binding smoke tests.
///
/// # Safety
/// `theta` holds `p` doubles.
#[no_mangle]
pub unsafe extern "C" fn ioest_risk_mean_sqdist(
    problem: *const IoestProblem,
    dataset: *const IoestDataset,
    theta: *const f64,
    eps: f64,
    out_q: *mut f64,
) -> IoestStatus {
    nonnull!(problem);
    nonnull!(dataset);
    nonnull!(theta);
    nonnull!(out_q);
    let prob = &(*problem).inner;
    let data = &(*dataset).inner;
    let theta = slice_arg(theta, prob.dims().p).unwrap();
    match risk_saa(prob, data, theta, eps) {
        Ok(risk) => {
            *out_q = risk.q;
            clear_error();
            IoestStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}
