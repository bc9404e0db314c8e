//! C ABI for the bosonic Ising simulator.
//!
//! Handles are opaque pointers created and destroyed here; every call
//! returns a `bi_status` and writes results through out-pointers. The
//! last error message per thread is available via
//! `bi_last_error_message`. The generated header lands in
//! `include/bosonic_ising.h`.

// C-style names on purpose; they appear verbatim in the header.
#![allow(non_camel_case_types)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bosonic_ising::graph::{cut_value, maxcut_instance, parse_edge_list, readout_signs};
use bosonic_ising::kmc::{anneal_ensemble, final_states_ensemble, AnnealingSchedule, InitMode};
use bosonic_ising::model::{
    beta_for_error, energy, equilibrium_stats, error_probability, ground_search, local_field,
};
use bosonic_ising::{DynamicsParams, Error, OccupationState, ProblemInstance, StatisticsKind};

/// Result codes for every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum bi_status {
    BI_OK = 0,
    BI_NULL_POINTER = 1,
    BI_INVALID_ARGUMENT = 2,
    BI_DIMENSION_MISMATCH = 3,
    BI_STATE_SPACE_TOO_LARGE = 4,
    BI_DEGENERATE_GROUND_STATE = 5,
    BI_TARGET_UNREACHABLE = 6,
    BI_NOT_CONVERGED = 7,
    BI_ABSORBING_STATE = 8,
    BI_NUMERICAL_ERROR = 9,
    BI_IO_ERROR = 10,
    BI_PANIC = 11,
}

/// Particle counting rule for equilibrium statistics.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum bi_statistics {
    BI_BOSONIC = 0,
    BI_DISTINGUISHABLE = 1,
}

impl From<bi_statistics> for StatisticsKind {
    fn from(kind: bi_statistics) -> Self {
        match kind {
            bi_statistics::BI_BOSONIC => StatisticsKind::Bosonic,
            bi_statistics::BI_DISTINGUISHABLE => StatisticsKind::Distinguishable,
        }
    }
}

/// Scalar equilibrium observables; `error_probability` is NaN when the
/// ground sign pattern is degenerate.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct bi_equilibrium_summary {
    pub log_z: f64,
    pub mean_energy: f64,
    pub error_probability: f64,
}

/// Opaque problem handle.
pub struct bi_instance {
    inner: ProblemInstance,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn status_of(err: &Error) -> bi_status {
    match err {
        Error::DimensionMismatch(_) => bi_status::BI_DIMENSION_MISMATCH,
        Error::IndexOutOfRange(_) | Error::InvalidParameter(_) | Error::InvalidTransition(_)
        | Error::Config(_) => bi_status::BI_INVALID_ARGUMENT,
        Error::StateSpaceTooLarge { .. } => bi_status::BI_STATE_SPACE_TOO_LARGE,
        Error::DegenerateGroundState => bi_status::BI_DEGENERATE_GROUND_STATE,
        Error::NonMonotoneBracket | Error::TargetUnreachable(_) => {
            bi_status::BI_TARGET_UNREACHABLE
        }
        Error::NotConverged => bi_status::BI_NOT_CONVERGED,
        Error::AbsorbingState => bi_status::BI_ABSORBING_STATE,
        Error::Integration(_) | Error::NegativeProbability(_) => bi_status::BI_NUMERICAL_ERROR,
        Error::Io(_) | Error::Json(_) => bi_status::BI_IO_ERROR,
        Error::GraphParse { .. } => bi_status::BI_INVALID_ARGUMENT,
    }
}

fn fail(err: Error) -> bi_status {
    let status = status_of(&err);
    set_error(&err.to_string());
    status
}

fn guarded(body: impl FnOnce() -> bi_status + std::panic::UnwindSafe) -> bi_status {
    match catch_unwind(body) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            bi_status::BI_PANIC
        }
    }
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Create a problem from a row-major `m x m` symmetric coupling matrix
/// with zero diagonal, `n` bosons per site, and field coefficient
/// `lambda`.
///
/// # Safety
/// `coupling` must point to `m * m` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bi_instance_new(
    m: usize,
    coupling: *const f64,
    n: u32,
    lambda: f64,
    out: *mut *mut bi_instance,
) -> bi_status {
    if coupling.is_null() || out.is_null() {
        set_error("null pointer");
        return bi_status::BI_NULL_POINTER;
    }
    let flat = std::slice::from_raw_parts(coupling, m.saturating_mul(m)).to_vec();
    guarded(AssertUnwindSafe(move || {
        match ProblemInstance::from_flat(m, flat, n, lambda) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(bi_instance { inner }));
                bi_status::BI_OK
            }
            Err(e) => fail(e),
        }
    }))
}

/// Single-site instance whose per-particle excitation costs `gap`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bi_instance_two_level(
    n: u32,
    gap: f64,
    out: *mut *mut bi_instance,
) -> bi_status {
    if out.is_null() {
        set_error("null pointer");
        return bi_status::BI_NULL_POINTER;
    }
    guarded(AssertUnwindSafe(move || {
        match ProblemInstance::two_level(n, gap) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(bi_instance { inner }));
                bi_status::BI_OK
            }
            Err(e) => fail(e),
        }
    }))
}

/// Cut-problem instance from an edge-list file (`u v [weight]` lines).
///
/// # Safety
/// `path` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bi_instance_from_graph_file(
    path: *const c_char,
    n: u32,
    lambda_bias: f64,
    out: *mut *mut bi_instance,
) -> bi_status {
    if path.is_null() || out.is_null() {
        set_error("null pointer");
        return bi_status::BI_NULL_POINTER;
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(s) => s.to_owned(),
        Err(_) => {
            set_error("path is not valid UTF-8");
            return bi_status::BI_INVALID_ARGUMENT;
        }
    };
    guarded(AssertUnwindSafe(move || {
        let build = || -> Result<ProblemInstance, Error> {
            let text = std::fs::read_to_string(&path)?;
            let graph = parse_edge_list(&text)?;
            maxcut_instance(&graph, n, lambda_bias)
        };
        match build() {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(bi_instance { inner }));
                bi_status::BI_OK
            }
            Err(e) => fail(e),
        }
    }))
}

/// Destroy an instance handle (NULL is a no-op).
///
/// # Safety
/// `instance` must be a pointer from one of the constructors, used once.
#[no_mangle]
pub unsafe extern "C" fn bi_instance_free(instance: *mut bi_instance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

unsafe fn instance_ref<'a>(ptr: *const bi_instance) -> Option<&'a ProblemInstance> {
    ptr.as_ref().map(|h| &h.inner)
}

/// Number of sites.
///
/// # Safety
/// `instance` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bi_instance_site_count(instance: *const bi_instance) -> usize {
    instance_ref(instance).map_or(0, ProblemInstance::site_count)
}

/// Bosons per site.
///
/// # Safety
/// `instance` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bi_instance_bosons_per_site(instance: *const bi_instance) -> u32 {
    instance_ref(instance).map_or(0, ProblemInstance::bosons_per_site)
}

/// Energy of the occupation vector `k` (length must equal the site count).
///
/// # Safety
/// Pointers must be valid; `k` must hold `k_len` entries.
#[no_mangle]
pub unsafe extern "C" fn bi_energy(
    instance: *const bi_instance,
    k: *const u32,
    k_len: usize,
    out: *mut f64,
) -> bi_status {
    let (Some(inst), false, false) = (instance_ref(instance), k.is_null(), out.is_null()) else {
        set_error("null pointer");
        return bi_status::BI_NULL_POINTER;
    };
    let state = OccupationState::new(std::slice::from_raw_parts(k, k_len).to_vec());
    guarded(AssertUnwindSafe(move || match energy(inst, &state) {
        Ok(e) => {
            *out = e;
            bi_status::BI_OK
        }
        Err(e) => fail(e),
    }))
}

/// Local field on `site`; the energy change of a move `dk` is
/// `2 * dk * field`.
///
/// # Safety
/// Pointers must be valid; `k` must hold `k_len` entries.
#[no_mangle]
pub unsafe extern "C" fn bi_local_field(
    instance: *const bi_instance,
    k: *const u32,
    k_len: usize,
    site: usize,
    out: *mut f64,
) -> bi_status {
    let (Some(inst), false, false) = (instance_ref(instance), k.is_null(), out.is_null()) else {
        set_error("null pointer");
        return bi_status::BI_NULL_POINTER;
    };
    let state = OccupationState::new(std::slice::from_raw_parts(k, k_len).to_vec());
    guarded(AssertUnwindSafe(move || {
        match local_field(inst, &state, site) {
            Ok(h) => {
                *out = h;
                bi_status::BI_OK
            }
            Err(e) => fail(e),
        }
    }))
}

/// Exact equilibrium statistics at inverse temperature `beta`.
///
/// `mean_spin` may be NULL; otherwise it receives one entry per site.
///
/// # Safety
/// Pointers must be valid; `mean_spin`, when non-NULL, must hold
/// `site_count` doubles.
#[no_mangle]
pub unsafe extern "C" fn bi_equilibrium(
    instance: *const bi_instance,
    beta: f64,
    kind: bi_statistics,
    mean_spin: *mut f64,
    out: *mut bi_equilibrium_summary,
) -> bi_status {
    let (Some(inst), false) = (instance_ref(instance), out.is_null()) else {
        set_error("null pointer");
        return bi_status::BI_NULL_POINTER;
    };
    guarded(AssertUnwindSafe(move || {
        match equilibrium_stats(inst, beta, kind.into()) {
            Ok(stats) => {
                if !mean_spin.is_null() {
                    let slot = std::slice::from_raw_parts_mut(mean_spin, inst.site_count());
                    slot.copy_from_slice(&stats.mean_spin);
                }
                *out = bi_equilibrium_summary {
                    log_z: stats.log_z,
                    mean_energy: stats.mean_energy,
                    error_probability: stats.error_probability.unwrap_or(f64::NAN),
                };
                bi_status::BI_OK
            }
            Err(e) => fail(e),
        }
    }))
}

/// Probability that a sign readout at equilibrium misses the ground
/// pattern.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bi_error_probability(
    instance: *const bi_instance,
    beta: f64,
    kind: bi_statistics,
    out: *mut f64,
) -> bi_status {
    let (Some(inst), false) = (instance_ref(instance), out.is_null()) else {
        set_error("null pointer");
        return bi_status::BI_NULL_POINTER;
    };
    guarded(AssertUnwindSafe(move || {
        match error_probability(inst, beta, kind.into()) {
            Ok(eps) => {
                *out = eps;
                bi_status::BI_OK
            }
            Err(e) => fail(e),
        }
    }))
}

/// Inverse temperature whose equilibrium error equals `target`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bi_beta_for_error(
    instance: *const bi_instance,
    target: f64,
    kind: bi_statistics,
    out: *mut f64,
) -> bi_status {
    let (Some(inst), false) = (instance_ref(instance), out.is_null()) else {
        set_error("null pointer");
        return bi_status::BI_NULL_POINTER;
    };
    guarded(AssertUnwindSafe(move || {
        match beta_for_error(inst, target, kind.into()) {
            Ok(beta) => {
                *out = beta;
                bi_status::BI_OK
            }
            Err(e) => fail(e),
        }
    }))
}

/// Exhaustive minimum energy; `ground_k`, when non-NULL, receives one
/// minimizing occupation vector.
///
/// # Safety
/// Pointers must be valid; `ground_k`, when non-NULL, must hold
/// `site_count` entries.
#[no_mangle]
pub unsafe extern "C" fn bi_ground_energy(
    instance: *const bi_instance,
    ground_k: *mut u32,
    out: *mut f64,
) -> bi_status {
    let (Some(inst), false) = (instance_ref(instance), out.is_null()) else {
        set_error("null pointer");
        return bi_status::BI_NULL_POINTER;
    };
    guarded(AssertUnwindSafe(move || match ground_search(inst) {
        Ok(g) => {
            if !ground_k.is_null() {
                let slot = std::slice::from_raw_parts_mut(ground_k, inst.site_count());
                slot.copy_from_slice(g.minimizers[0].occupations());
            }
            *out = g.min_energy;
            bi_status::BI_OK
        }
        Err(e) => fail(e),
    }))
}

/// Exponential anneal from the error-0.7 temperature over `4 * tau0`:
/// mean final energy above the ground state and its standard error.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bi_anneal_residual(
    instance: *const bi_instance,
    alpha: f64,
    xi: f64,
    tau0: f64,
    n_traj: usize,
    seed: u64,
    residual: *mut f64,
    stderr_out: *mut f64,
) -> bi_status {
    let (Some(inst), false, false) =
        (instance_ref(instance), residual.is_null(), stderr_out.is_null())
    else {
        set_error("null pointer");
        return bi_status::BI_NULL_POINTER;
    };
    guarded(AssertUnwindSafe(move || {
        let run = || -> Result<(f64, f64), Error> {
            let params = DynamicsParams::new(alpha, xi, 0.0)?;
            let summary = anneal_ensemble(inst, &params, tau0, n_traj, seed)?;
            Ok(summary.residual_energy)
        };
        match run() {
            Ok((res, se)) => {
                *residual = res;
                *stderr_out = se;
                bi_status::BI_OK
            }
            Err(e) => fail(e),
        }
    }))
}

/// Best cut found by `n_runs` annealed trajectories on the instance's
/// couplings, read out as canonical signs (vertex 0 positive).
///
/// The instance must come from `bi_instance_from_graph_file` or encode a
/// cut problem the same way (`J_uv = +w_uv`, `lambda = 0`).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bi_anneal_best_cut(
    instance: *const bi_instance,
    alpha: f64,
    xi: f64,
    t0: f64,
    tau0: f64,
    n_runs: usize,
    seed: u64,
    out: *mut f64,
) -> bi_status {
    let (Some(inst), false) = (instance_ref(instance), out.is_null()) else {
        set_error("null pointer");
        return bi_status::BI_NULL_POINTER;
    };
    guarded(AssertUnwindSafe(move || {
        let run = || -> Result<f64, Error> {
            let m = inst.site_count();
            let mut edges = Vec::new();
            for u in 0..m {
                for v in (u + 1)..m {
                    let w = inst.coupling(u, v);
                    if w > 0.0 {
                        edges.push((u, v, w));
                    }
                }
            }
            let graph = bosonic_ising::graph::Graph::new(m, edges)?;
            let params = DynamicsParams::new(alpha, xi, 0.0)?;
            let schedule =
                AnnealingSchedule::exponential(t0, tau0, 4.0 * tau0, 400)?;
            let finals = final_states_ensemble(
                inst,
                &params,
                &schedule,
                InitMode::Uniform,
                n_runs,
                seed,
            )?;
            let mut best = f64::NEG_INFINITY;
            for state in &finals {
                let signs = readout_signs(state, inst.bosons_per_site());
                best = best.max(cut_value(&graph, &signs)?);
            }
            Ok(best)
        };
        match run() {
            Ok(best) => {
                *out = best;
                bi_status::BI_OK
            }
            Err(e) => fail(e),
        }
    }))
}
