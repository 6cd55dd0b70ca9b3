//! C interface to the transnn solvers.
//!
//! Scenarios and solutions are opaque handles owned by the caller and
//! released with the matching `*_free`. Fallible calls return a `TnnStatus`;
//! after a failure `tnn_last_error` describes it. The message belongs to the
//! calling thread and stays valid until that thread's next failing call.
//!
//! Arrays are row-major `[k][node]`. Configurations and actions are bit
//! masks with node `i` in bit `i`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use transnn::exact_chain::transition_probability;
use transnn::mdp::{solve_bellman_with, MdpOptions, DEFAULT_MDP_CAP};
use transnn::transnn::{dpsi_ds, step_info, step_prob, tlog_sigmoid};
use transnn::{
    forward_backward_solve, BinaryState, ControlSolution, InfoState, MdpSolution, ProbState,
    Scenario, SweepOptions, SweepStatus,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TnnStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed document, out-of-range value, index or size mismatch.
    InvalidInput = 2,
    /// The state space is larger than the solver's node cap.
    CapExceeded = 3,
    Io = 4,
    BufferTooSmall = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TnnSweepStatus {
    Converged = 0,
    Oscillating = 1,
    MaxIterations = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TnnControlSummary {
    pub j2: f64,
    pub status: TnnSweepStatus,
    pub iterations: usize,
    pub vaccinations: usize,
    /// Adjoint terms evaluated at the `(w = 1, s = +inf)` corner.
    pub corner_hits: usize,
}

/// A validated scenario: network, cost parameters and initial condition.
pub struct TnnScenario(Scenario);

pub struct TnnMdpSolution {
    solution: MdpSolution,
    expected_cost: f64,
}

pub struct TnnControlSolution(ControlSolution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: TnnStatus,
    message: String,
}

impl Failure {
    fn new(status: TnnStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<transnn::Error> for Failure {
    fn from(e: transnn::Error) -> Self {
        let status = match &e {
            transnn::Error::CapExceeded { .. } => TnnStatus::CapExceeded,
            transnn::Error::Io { .. } => TnnStatus::Io,
            e if e.is_validation() => TnnStatus::InvalidInput,
            _ => TnnStatus::Io,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TnnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TnnStatus::Ok,
        Ok(Err(failure)) => {
            set_error(failure.message);
            failure.status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {what}"));
            TnnStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(TnnStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(TnnStatus::NullPointer, format!("{what} is null")))
}

unsafe fn input_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::new(
            TnnStatus::NullPointer,
            format!("{what} is null"),
        ));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T: Copy>(
    values: impl ExactSizeIterator<Item = T>,
    out: *mut T,
    len: usize,
) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(
            TnnStatus::NullPointer,
            "output buffer is null",
        ));
    }
    let need = values.len();
    if len < need {
        return Err(Failure::new(
            TnnStatus::BufferTooSmall,
            format!("buffer holds {len} values, {need} needed"),
        ));
    }
    let dst = std::slice::from_raw_parts_mut(out, need);
    for (d, v) in dst.iter_mut().zip(values) {
        *d = v;
    }
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(
            TnnStatus::NullPointer,
            format!("{what} is null"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(TnnStatus::InvalidInput, format!("{what} is not UTF-8")))
}

fn check_len(len: usize, n: usize, what: &str) -> Result<(), Failure> {
    if len != n {
        return Err(Failure::new(
            TnnStatus::InvalidInput,
            format!("{what} has {len} entries, the network has {n} nodes"),
        ));
    }
    Ok(())
}

fn state(index: u64, n: usize, what: &str) -> Result<BinaryState, Failure> {
    if n < 64 && index >> n != 0 {
        return Err(Failure::new(
            TnnStatus::InvalidInput,
            format!("{what} = {index} has bits beyond node {}", n - 1),
        ));
    }
    Ok(BinaryState::new(
        (0..n).map(|i| i < 64 && index >> i & 1 == 1).collect(),
    ))
}

/// Message for the last failure on this thread, or null.
#[no_mangle]
pub extern "C" fn tnn_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn tnn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a JSON scenario document.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnn_scenario_from_json(
    json: *const c_char,
    out: *mut *mut TnnScenario,
) -> TnnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let sc = Scenario::from_json(c_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(TnnScenario(sc)));
        Ok(())
    })
}

/// Loads a JSON scenario file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnn_scenario_load(
    path: *const c_char,
    out: *mut *mut TnnScenario,
) -> TnnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let sc = Scenario::load(Path::new(c_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(TnnScenario(sc)));
        Ok(())
    })
}

/// # Safety
/// `sc` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tnn_scenario_free(sc: *mut TnnScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Number of nodes, 0 for a null handle.
///
/// # Safety
/// `sc` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tnn_scenario_node_count(sc: *const TnnScenario) -> usize {
    sc.as_ref().map_or(0, |s| s.0.network.node_count())
}

/// Horizon `T`, 0 for a null handle.
///
/// # Safety
/// `sc` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tnn_scenario_horizon(sc: *const TnnScenario) -> usize {
    sc.as_ref().map_or(0, |s| s.0.network.horizon())
}

/// Copies the `n` initial infection probabilities.
///
/// # Safety
/// `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tnn_scenario_initial(
    sc: *const TnnScenario,
    out: *mut f64,
    len: usize,
) -> TnnStatus {
    guard(|| {
        let sc = deref(sc, "scenario")?;
        write_out(sc.0.initial.as_slice().iter().copied(), out, len)
    })
}

/// `Psi(w, x) = -ln(1 - w + w e^{-x})`; NaN outside `w` in `[0, 1]`,
/// `x` in `[0, +inf]`.
#[no_mangle]
pub extern "C" fn tnn_psi(w: f64, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&w) || x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    tlog_sigmoid(w, x)
}

/// `d Psi / dx`, 0 at `(1, +inf)`; NaN outside the domain of [`tnn_psi`].
#[no_mangle]
pub extern "C" fn tnn_dpsi_ds(w: f64, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&w) || x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    dpsi_ds(w, x)
}

/// One TransNN step in probability coordinates at time `k`.
///
/// # Safety
/// `p` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tnn_step_prob(
    sc: *const TnnScenario,
    k: usize,
    p: *const f64,
    out: *mut f64,
    len: usize,
) -> TnnStatus {
    guard(|| {
        let sc = deref(sc, "scenario")?;
        check_len(len, sc.0.network.node_count(), "p")?;
        let p = ProbState::new(input_slice(p, len, "p")?.to_vec())?;
        let next = step_prob(&p, &sc.0.network, k)?;
        write_out(next.as_slice().iter().copied(), out, len)
    })
}

/// One TransNN step in information coordinates; entries may be `+inf`.
///
/// # Safety
/// `s` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tnn_step_info(
    sc: *const TnnScenario,
    k: usize,
    s: *const f64,
    out: *mut f64,
    len: usize,
) -> TnnStatus {
    guard(|| {
        let sc = deref(sc, "scenario")?;
        check_len(len, sc.0.network.node_count(), "s")?;
        let s = InfoState::new(input_slice(s, len, "s")?.to_vec())?;
        let next = step_info(&s, &sc.0.network, k)?;
        write_out(next.as_slice().iter().copied(), out, len)
    })
}

/// `Pr(X(k+1) = q | X(k) = x)` on the uncontrolled chain.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnn_transition_probability(
    sc: *const TnnScenario,
    k: usize,
    x: u64,
    q: u64,
    out: *mut f64,
) -> TnnStatus {
    guard(|| {
        let sc = deref(sc, "scenario")?;
        let out = out_ref(out, "out")?;
        let n = sc.0.network.node_count();
        *out = transition_probability(&state(x, n, "x")?, &state(q, n, "q")?, &sc.0.network, k)?;
        Ok(())
    })
}

/// Exact dynamic programming. `cap` bounds `n`; 0 selects the default.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnn_solve_mdp(
    sc: *const TnnScenario,
    cap: usize,
    out: *mut *mut TnnMdpSolution,
) -> TnnStatus {
    guard(|| {
        let sc = deref(sc, "scenario")?;
        let out = out_ref(out, "out")?;
        let options = MdpOptions {
            cap: if cap == 0 { DEFAULT_MDP_CAP } else { cap },
            parallel: false,
        };
        let solution = solve_bellman_with(&sc.0.network, &sc.0.params, &options)?;
        let expected_cost = solution.values.expected_initial(&sc.0.initial);
        *out = Box::into_raw(Box::new(TnnMdpSolution {
            solution,
            expected_cost,
        }));
        Ok(())
    })
}

/// Optimal expected cost from the scenario's initial condition; NaN for a
/// null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tnn_mdp_expected_cost(sol: *const TnnMdpSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.expected_cost)
}

fn mdp_index(sol: &TnnMdpSolution, k: usize, x: u64, last: usize) -> Result<usize, Failure> {
    if k > last {
        return Err(Failure::new(
            TnnStatus::InvalidInput,
            format!("k = {k} out of range (last {last})"),
        ));
    }
    Ok(state(x, sol.solution.values.n, "x")?.index())
}

/// `V_k(x)` for `k = 0..=T`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnn_mdp_value(
    sol: *const TnnMdpSolution,
    k: usize,
    x: u64,
    out: *mut f64,
) -> TnnStatus {
    guard(|| {
        let sol = deref(sol, "solution")?;
        let x = mdp_index(sol, k, x, sol.solution.values.horizon())?;
        *out_ref(out, "out")? = sol.solution.values.get(k, x);
        Ok(())
    })
}

/// Optimal action mask at `(k, x)` for `k < T`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnn_mdp_action(
    sol: *const TnnMdpSolution,
    k: usize,
    x: u64,
    out: *mut u64,
) -> TnnStatus {
    guard(|| {
        let sol = deref(sol, "solution")?;
        // T >= 1 for every scenario, so the last decision step is T - 1
        let x = mdp_index(sol, k, x, sol.solution.policy.horizon() - 1)?;
        *out_ref(out, "out")? = sol.solution.policy.action(k, x) as u64;
        Ok(())
    })
}

/// # Safety
/// `sol` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tnn_mdp_free(sol: *mut TnnMdpSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Forward-backward sweep on the TransNN dynamics. `max_iters` of 0
/// selects the default budget.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnn_solve_transnn(
    sc: *const TnnScenario,
    max_iters: usize,
    out: *mut *mut TnnControlSolution,
) -> TnnStatus {
    guard(|| {
        let sc = deref(sc, "scenario")?;
        let out = out_ref(out, "out")?;
        let options = if max_iters == 0 {
            SweepOptions::default()
        } else {
            SweepOptions { max_iters }
        };
        let sol = forward_backward_solve(&sc.0.network, &sc.0.params, &sc.0.initial, &options)?;
        *out = Box::into_raw(Box::new(TnnControlSolution(sol)));
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnn_control_summary(
    sol: *const TnnControlSolution,
    out: *mut TnnControlSummary,
) -> TnnStatus {
    guard(|| {
        let sol = &deref(sol, "solution")?.0;
        *out_ref(out, "out")? = TnnControlSummary {
            j2: sol.j2,
            status: match sol.status {
                SweepStatus::Converged => TnnSweepStatus::Converged,
                SweepStatus::Oscillating => TnnSweepStatus::Oscillating,
                SweepStatus::MaxIterations => TnnSweepStatus::MaxIterations,
            },
            iterations: sol.iterations,
            vaccinations: sol.schedule.total_vaccinations(),
            corner_hits: sol.corner_hits,
        };
        Ok(())
    })
}

/// Schedule as `T * n` bytes, 1 where the node is vaccinated.
///
/// # Safety
/// `out` must have room for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn tnn_control_schedule(
    sol: *const TnnControlSolution,
    out: *mut u8,
    len: usize,
) -> TnnStatus {
    guard(|| {
        let sol = &deref(sol, "solution")?.0;
        let bits: Vec<u8> = sol
            .schedule
            .u
            .iter()
            .flatten()
            .map(|&b| u8::from(b))
            .collect();
        write_out(bits.into_iter(), out, len)
    })
}

/// Controlled probability trajectory, `(T + 1) * n` doubles.
///
/// # Safety
/// `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tnn_control_probabilities(
    sol: *const TnnControlSolution,
    out: *mut f64,
    len: usize,
) -> TnnStatus {
    guard(|| {
        let sol = &deref(sol, "solution")?.0;
        let v: Vec<f64> = sol.p.iter().flat_map(|p| p.as_slice().to_vec()).collect();
        write_out(v.into_iter(), out, len)
    })
}

/// Adjoint `lambda(0..=T)`, `(T + 1) * n` doubles.
///
/// # Safety
/// `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tnn_control_adjoint(
    sol: *const TnnControlSolution,
    out: *mut f64,
    len: usize,
) -> TnnStatus {
    guard(|| {
        let sol = &deref(sol, "solution")?.0;
        let v: Vec<f64> = sol.adjoint.lambda.iter().flatten().copied().collect();
        write_out(v.into_iter(), out, len)
    })
}

/// Switching function `Delta H(k)` for `k < T`, `T * n` doubles.
///
/// # Safety
/// `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tnn_control_delta_h(
    sol: *const TnnControlSolution,
    out: *mut f64,
    len: usize,
) -> TnnStatus {
    guard(|| {
        let sol = &deref(sol, "solution")?.0;
        let v: Vec<f64> = sol.delta_h.iter().flatten().copied().collect();
        write_out(v.into_iter(), out, len)
    })
}

/// # Safety
/// `sol` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tnn_control_free(sol: *mut TnnControlSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}
