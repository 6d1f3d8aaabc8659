//! C ABI over `symfcs`.
//!
//! Every fallible call returns a [`SymfcsStatus`]; on failure the message is
//! available from [`symfcs_last_error`] on the same thread. Handles are
//! opaque and must be released with the matching `*_free` function.
//! Panics never cross the boundary; they surface as `SYMFCS_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use symfcs::legendre::geometry_report;
use symfcs::liouville::{steady_state, CountingFields, DensityMatrix, SteadySector};
use symfcs::model::{sector_superposition_state, ModelParams, DIM};
use symfcs::spectral::SpectralEngine;
use symfcs::symmetry::{Sector, SectorOverlap};
use symfcs::trajectories::{
    ensemble_run, freezing_statistics, xi_master_equation, EnsembleOptions, InitialState,
    TrajectoryOptions, DEFAULT_FREEZE_TOL,
};
use symfcs::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymfcsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    BrokenSymmetry = 3,
    EmptyOverlap = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    NotFrozen = 7,
    Internal = 99,
}

/// Symmetry sector selector; `Both` means no restriction.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymfcsSector {
    Symmetric = 0,
    Antisymmetric = 1,
    Both = 2,
}

/// Model parameters.
pub struct SymfcsModel {
    params: ModelParams,
}

/// Tilted-generator evaluator bound to one model.
pub struct SymfcsEngine {
    engine: SpectralEngine,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SymfcsAverages {
    pub q_s: f64,
    pub q_a: f64,
    pub a_s: f64,
    pub a_a: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SymfcsGeometry {
    pub a_c: f64,
    pub u0: f64,
    pub kappa: f64,
    pub delta: f64,
    pub q_s: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SymfcsEnsembleSummary {
    pub n_traj: usize,
    pub mean_q: f64,
    pub stderr_q: f64,
    pub mean_a: f64,
    pub stderr_a: f64,
    /// Final-time `⟨ξ⟩`.
    pub mean_xi_final: f64,
    /// Fraction frozen into the antisymmetric sector; NaN unless every
    /// trajectory froze.
    pub fraction_to_a: f64,
    /// Trajectories still between the sectors at the final time.
    pub unfrozen: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SymfcsStatus {
    match e {
        Error::InvalidParams(_) | Error::DimensionMismatch { .. } | Error::Config(_) => {
            SymfcsStatus::InvalidParams
        }
        Error::BrokenSymmetry { .. } | Error::NonUniqueSteadyState(_) => SymfcsStatus::BrokenSymmetry,
        Error::EmptyOverlap => SymfcsStatus::EmptyOverlap,
        Error::NotFrozen { .. } => SymfcsStatus::NotFrozen,
        _ => SymfcsStatus::Numerical,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SymfcsStatus, String)>) -> SymfcsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SymfcsStatus::Ok
        }
        Ok(Err((s, m))) => {
            set_error(&m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            SymfcsStatus::Internal
        }
    }
}

fn lib(e: Error) -> (SymfcsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SymfcsStatus, String) {
    (SymfcsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SymfcsStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (SymfcsStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread (empty after success).
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn symfcs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn symfcs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out_model` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn symfcs_model_new(
    b_z: f64,
    gamma_bath: f64,
    n_bath: f64,
    gamma_dephase: f64,
    out_model: *mut *mut SymfcsModel,
) -> SymfcsStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        *slot = ptr::null_mut();
        let params = ModelParams::new(b_z, gamma_bath, n_bath, gamma_dephase).map_err(lib)?;
        *slot = Box::into_raw(Box::new(SymfcsModel { params }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from `symfcs_model_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn symfcs_model_free(model: *mut SymfcsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Gallavotti–Cohen constant `ln[n/(n+1)]`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn symfcs_model_kappa(model: *const SymfcsModel, out_kappa: *mut f64) -> SymfcsStatus {
    guard(|| {
        let m = deref(model, "model")?;
        *out(out_kappa, "out_kappa")? = m.params.kappa();
        Ok(())
    })
}

/// Stationary density matrix, written row-major as 64 real and 64
/// imaginary parts. `Both` requests the unique steady state (γ > 0 only).
///
/// # Safety
/// `re` and `im` must each point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn symfcs_steady_state(
    model: *const SymfcsModel,
    sector: SymfcsSector,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> SymfcsStatus {
    guard(|| {
        let m = deref(model, "model")?;
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        if len < DIM * DIM {
            return Err((SymfcsStatus::BufferTooSmall, format!("need {} entries, got {len}", DIM * DIM)));
        }
        let which = match sector {
            SymfcsSector::Symmetric => SteadySector::S,
            SymfcsSector::Antisymmetric => SteadySector::A,
            SymfcsSector::Both => SteadySector::Full,
        };
        let rho = steady_state(&m.params, which).map_err(lib)?;
        let (re, im) = (
            std::slice::from_raw_parts_mut(re, DIM * DIM),
            std::slice::from_raw_parts_mut(im, DIM * DIM),
        );
        for i in 0..DIM {
            for j in 0..DIM {
                re[i * DIM + j] = rho.0[(i, j)].re;
                im[i * DIM + j] = rho.0[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn symfcs_engine_new(
    model: *const SymfcsModel,
    out_engine: *mut *mut SymfcsEngine,
) -> SymfcsStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let slot = out(out_engine, "out_engine")?;
        *slot = ptr::null_mut();
        let engine = SpectralEngine::new(&m.params).map_err(lib)?;
        *slot = Box::into_raw(Box::new(SymfcsEngine { engine }));
        Ok(())
    })
}

/// # Safety
/// `engine` must come from `symfcs_engine_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn symfcs_engine_free(engine: *mut SymfcsEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

fn overlap_of(s: SymfcsSector) -> SectorOverlap {
    match s {
        SymfcsSector::Symmetric => SectorOverlap::only(Sector::S),
        SymfcsSector::Antisymmetric => SectorOverlap::only(Sector::A),
        SymfcsSector::Both => SectorOverlap::both(),
    }
}

/// Scaled cumulant generating function `μ(λ, ε)` restricted to the sectors
/// in `overlap`. `out_sector` (optional) receives the dominant sector. When
/// dephasing breaks the symmetry the overlap is ignored, the full generator
/// is used and `out_sector` is `Both`.
///
/// # Safety
/// Pointers must be valid; `out_sector` may be null.
#[no_mangle]
pub unsafe extern "C" fn symfcs_engine_mu(
    engine: *const SymfcsEngine,
    lambda: f64,
    epsilon: f64,
    overlap: SymfcsSector,
    out_mu: *mut f64,
    out_sector: *mut SymfcsSector,
) -> SymfcsStatus {
    guard(|| {
        let e = deref(engine, "engine")?;
        let v = e
            .engine
            .mu(CountingFields::new(lambda, epsilon), &overlap_of(overlap))
            .map_err(lib)?;
        *out(out_mu, "out_mu")? = v.value;
        if let Some(s) = out_sector.as_mut() {
            *s = match v.sector {
                Some(Sector::S) => SymfcsSector::Symmetric,
                Some(Sector::A) => SymfcsSector::Antisymmetric,
                None => SymfcsSector::Both,
            };
        }
        Ok(())
    })
}

/// Leading eigenvalue of one sector's tilted block (γ = 0 only).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn symfcs_engine_sector_eigenvalue(
    engine: *const SymfcsEngine,
    lambda: f64,
    epsilon: f64,
    sector: SymfcsSector,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SymfcsStatus {
    guard(|| {
        let e = deref(engine, "engine")?;
        let s = match sector {
            SymfcsSector::Symmetric => Sector::S,
            SymfcsSector::Antisymmetric => Sector::A,
            SymfcsSector::Both => {
                return Err((SymfcsStatus::InvalidParams, "a single sector is required".into()))
            }
        };
        let ev = e
            .engine
            .sector_leading_eigenvalue(CountingFields::new(lambda, epsilon), s)
            .map_err(lib)?;
        *out(out_re, "out_re")? = ev.value.re;
        *out(out_im, "out_im")? = ev.value.im;
        Ok(())
    })
}

/// Sector mean current and activity (γ = 0 only).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn symfcs_engine_averages(
    engine: *const SymfcsEngine,
    out_avg: *mut SymfcsAverages,
) -> SymfcsStatus {
    guard(|| {
        let e = deref(engine, "engine")?;
        let a = e.engine.sector_averages().map_err(lib)?;
        *out(out_avg, "out_avg")? = SymfcsAverages {
            q_s: a.q_s,
            q_a: a.q_a,
            a_s: a.a_s,
            a_a: a.a_a,
        };
        Ok(())
    })
}

/// Critical activity, coexistence-line slope, κ and kink gap (γ = 0 only).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn symfcs_engine_geometry(
    engine: *const SymfcsEngine,
    out_geo: *mut SymfcsGeometry,
) -> SymfcsStatus {
    guard(|| {
        let e = deref(engine, "engine")?;
        let avg = e.engine.sector_averages().map_err(lib)?;
        let g = geometry_report(&avg, e.engine.params()).map_err(lib)?;
        *out(out_geo, "out_geo")? = SymfcsGeometry {
            a_c: g.a_c,
            u0: g.u0,
            kappa: g.kappa,
            delta: g.delta,
            q_s: g.q_s,
        };
        Ok(())
    })
}

/// Quantum-jump ensemble from the pure state with antisymmetric weight
/// `weight_a`. Deterministic in `seed`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn symfcs_ensemble_run(
    model: *const SymfcsModel,
    weight_a: f64,
    duration: f64,
    n_traj: usize,
    seed: u64,
    out_summary: *mut SymfcsEnsembleSummary,
) -> SymfcsStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let slot = out(out_summary, "out_summary")?;
        if !(0.0..=1.0).contains(&weight_a) {
            return Err((SymfcsStatus::InvalidParams, format!("weight_a {weight_a} not in [0, 1]")));
        }
        let opts = EnsembleOptions {
            n_traj,
            master_seed: seed,
            trajectory: TrajectoryOptions::default(),
            keep_records: 0,
        };
        let psi = sector_superposition_state(weight_a);
        let stats = ensemble_run(&m.params, &InitialState::Pure(psi), duration, &opts).map_err(lib)?;
        let (fraction_to_a, unfrozen) = match freezing_statistics(&stats, DEFAULT_FREEZE_TOL) {
            Ok(f) => (f.fraction_to_a, 0),
            Err(Error::NotFrozen { seeds }) => (f64::NAN, seeds.len()),
            Err(e) => return Err(lib(e)),
        };
        *slot = SymfcsEnsembleSummary {
            n_traj: stats.n_traj,
            mean_q: stats.mean_q,
            stderr_q: stats.stderr_q,
            mean_a: stats.mean_a,
            stderr_a: stats.stderr_a,
            mean_xi_final: *stats.mean_xi.last().unwrap_or(&f64::NAN),
            fraction_to_a,
            unfrozen,
        };
        Ok(())
    })
}

/// Master-equation `Tr(P₋ e^{Lt} ρ₀)` at non-decreasing `times`, for the
/// same initial state as [`symfcs_ensemble_run`].
///
/// # Safety
/// `times` and `out_xi` must each point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn symfcs_xi_master_equation(
    model: *const SymfcsModel,
    weight_a: f64,
    times: *const f64,
    n: usize,
    out_xi: *mut f64,
) -> SymfcsStatus {
    guard(|| {
        let m = deref(model, "model")?;
        if times.is_null() || out_xi.is_null() {
            return Err(null("times/out_xi"));
        }
        if !(0.0..=1.0).contains(&weight_a) {
            return Err((SymfcsStatus::InvalidParams, format!("weight_a {weight_a} not in [0, 1]")));
        }
        let ts = std::slice::from_raw_parts(times, n);
        if ts.windows(2).any(|w| w[1] < w[0]) || ts.first().is_some_and(|&t| t < 0.0) {
            return Err((SymfcsStatus::InvalidParams, "times must be >= 0 and non-decreasing".into()));
        }
        let rho0 = DensityMatrix::pure(&sector_superposition_state(weight_a));
        let xi = xi_master_equation(&m.params, &rho0, ts);
        std::slice::from_raw_parts_mut(out_xi, n).copy_from_slice(&xi);
        Ok(())
    })
}
