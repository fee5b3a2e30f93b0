//! C interface to `gm3-core`.
//!
//! Objects are opaque handles created by `gm3_*_new`/`gm3_*_build` and
//! released by the matching `gm3_*_free`. Every fallible function returns a
//! [`Gm3Status`]; on failure a message is available from
//! [`gm3_last_error_message`] on the same thread until the next failing call.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use gm3_core::certificate::{self, Certificate};
use gm3_core::grid::{Dim, Field, Grid};
use gm3_core::integrator::{explicit_dt_bound, step_explicit, step_imex, State};
use gm3_core::model::{check_exponent_condition, Admissibility, Branch, GmParams, Model, RawParams};
use gm3_core::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gm3Status {
    Ok = 0,
    /// Null pointer, bad length or out-of-range option.
    InvalidArgument = 1,
    /// Coefficients or exponents fail validation.
    InvalidParams = 2,
    /// The exponent condition has no feasible branch.
    Infeasible = 3,
    /// Some other hypothesis of the certificate fails.
    NoCertificate = 4,
    /// A value overflowed during stepping.
    BlowUp = 5,
    /// A component became non-positive during stepping.
    PositivityLoss = 6,
    /// Any other numerical failure.
    Numerical = 7,
    /// A panic was caught; the library state is unaffected.
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gm3Branch {
    ViaV = 0,
    ViaW = 1,
    Infeasible = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gm3Scheme {
    Explicit = 0,
    Imex = 1,
}

/// Coefficients and exponents, index 0..2 for `u, v, w`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gm3RawParams {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub sigma: f64,
    pub c: f64,
    pub p: [f64; 3],
    pub q: [f64; 3],
    pub r: [f64; 3],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gm3BranchReport {
    pub condition_value_left: f64,
    pub bound_v_branch: f64,
    pub bound_w_branch: f64,
    pub selected_branch: Gm3Branch,
}

/// Validated parameter set.
pub struct Gm3Params {
    inner: GmParams,
}

/// Issued certificate.
pub struct Gm3Certificate {
    inner: Certificate,
}

/// A state being advanced in time.
pub struct Gm3Simulation {
    model: Model,
    state: State,
    scheme: Gm3Scheme,
    dt: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let mut bytes = msg.into().into_bytes();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> Gm3Status {
    match e {
        Error::NonPositiveCoefficient(_)
        | Error::NegativeExponent(_)
        | Error::NonFiniteCoefficient(_) => Gm3Status::InvalidParams,
        Error::InfeasibleBranch(_) => Gm3Status::Infeasible,
        Error::InvalidTriple(_)
        | Error::IterationLimit(_)
        | Error::DegenerateEpsilon(_)
        | Error::NonPositiveMu(_)
        | Error::NonFiniteConstant(_) => Gm3Status::NoCertificate,
        Error::NonFiniteRate { .. } | Error::NonFiniteValue(_) => Gm3Status::BlowUp,
        Error::PositivityLoss { .. } => Gm3Status::PositivityLoss,
        Error::InvalidGrid(_)
        | Error::InvalidScheme(_)
        | Error::NonPositiveInitialData { .. }
        | Error::PreconditionViolated(_)
        | Error::Config(_) => Gm3Status::InvalidArgument,
        _ => Gm3Status::Numerical,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (Gm3Status, String)>) -> Gm3Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => Gm3Status::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            Gm3Status::Panic
        }
    }
}

fn lib_err(e: Error) -> (Gm3Status, String) {
    (status_of(&e), e.to_string())
}

fn bad_arg(msg: &str) -> (Gm3Status, String) {
    (Gm3Status::InvalidArgument, msg.to_string())
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (Gm3Status, String)> {
    p.as_ref().ok_or_else(|| bad_arg(&format!("`{name}` is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (Gm3Status, String)> {
    p.as_mut().ok_or_else(|| bad_arg(&format!("`{name}` is null")))
}

fn to_raw(p: &Gm3RawParams) -> RawParams {
    RawParams {
        a: p.a,
        b: p.b,
        sigma: p.sigma,
        c: p.c,
        p: p.p,
        q: p.q,
        r: p.r,
    }
}

/// Message of the last failure on this thread (empty if none). The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gm3_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Validates parameters. `relaxed != 0` admits zero sources and decays
/// (usable for simulation, not for certificates).
///
/// # Safety
/// `raw` must point to a readable `Gm3RawParams`; `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn gm3_params_new(
    raw: *const Gm3RawParams,
    relaxed: i32,
    out: *mut *mut Gm3Params,
) -> Gm3Status {
    guard(|| {
        let raw = deref(raw, "raw")?;
        let out = deref_mut(out, "out")?;
        let adm = if relaxed != 0 {
            Admissibility::Relaxed
        } else {
            Admissibility::Strict
        };
        let inner = to_raw(raw).validate_with(adm).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(Gm3Params { inner }));
        Ok(())
    })
}

/// Parameters of a named preset: `phyllotaxis`, `gm2_rothe` or `blowup_ode`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gm3_params_preset(name: *const c_char, out: *mut *mut Gm3Params) -> Gm3Status {
    guard(|| {
        if name.is_null() {
            return Err(bad_arg("`name` is null"));
        }
        let out = deref_mut(out, "out")?;
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| bad_arg("`name` is not UTF-8"))?;
        let cfg = gm3_core::cli::preset(name).map_err(lib_err)?;
        let inner = cfg.validated_params().map_err(lib_err)?;
        *out = Box::into_raw(Box::new(Gm3Params { inner }));
        Ok(())
    })
}

/// Copies the coefficients back out.
///
/// # Safety
/// `params` must come from this library; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gm3_params_get(params: *const Gm3Params, out: *mut Gm3RawParams) -> Gm3Status {
    guard(|| {
        let p = deref(params, "params")?.inner.raw();
        *deref_mut(out, "out")? = Gm3RawParams {
            a: p.a,
            b: p.b,
            sigma: p.sigma,
            c: p.c,
            p: p.p,
            q: p.q,
            r: p.r,
        };
        Ok(())
    })
}

/// # Safety
/// `params` must come from this library (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gm3_params_free(params: *mut Gm3Params) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Evaluates the exponent condition.
///
/// # Safety
/// `params` must come from this library; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gm3_exponent_condition(
    params: *const Gm3Params,
    out: *mut Gm3BranchReport,
) -> Gm3Status {
    guard(|| {
        let rep = check_exponent_condition(&deref(params, "params")?.inner);
        *deref_mut(out, "out")? = Gm3BranchReport {
            condition_value_left: rep.condition_value_left,
            bound_v_branch: rep.bound_v_branch,
            bound_w_branch: rep.bound_w_branch,
            selected_branch: match rep.selected_branch {
                Branch::ViaV => Gm3Branch::ViaV,
                Branch::ViaW => Gm3Branch::ViaW,
                Branch::Infeasible => Gm3Branch::Infeasible,
            },
        };
        Ok(())
    })
}

/// Builds a certificate from initial minima `ic_minima[3]`, the domain
/// measure, the horizon and the initial Lyapunov value.
///
/// # Safety
/// `params` from this library; `ic_minima` points to 3 doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gm3_certificate_build(
    params: *const Gm3Params,
    ic_minima: *const f64,
    domain_measure: f64,
    horizon: f64,
    l0: f64,
    out: *mut *mut Gm3Certificate,
) -> Gm3Status {
    guard(|| {
        let params = &deref(params, "params")?.inner;
        if ic_minima.is_null() {
            return Err(bad_arg("`ic_minima` is null"));
        }
        let out = deref_mut(out, "out")?;
        let m = std::slice::from_raw_parts(ic_minima, 3);
        let inner = certificate::build_certificate(params, [m[0], m[1], m[2]], domain_measure, horizon, l0)
            .map_err(lib_err)?;
        *out = Box::into_raw(Box::new(Gm3Certificate { inner }));
        Ok(())
    })
}

/// # Safety
/// `cert` from this library; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gm3_certificate_kappa(cert: *const Gm3Certificate, out: *mut f64) -> Gm3Status {
    guard(|| {
        *deref_mut(out, "out")? = deref(cert, "cert")?.inner.kappa;
        Ok(())
    })
}

/// Writes `(alpha, beta, gamma)` and `mu` of the certificate.
///
/// # Safety
/// `cert` from this library; `triple` points to 3 writable doubles; `mu` writable.
#[no_mangle]
pub unsafe extern "C" fn gm3_certificate_triple(
    cert: *const Gm3Certificate,
    triple: *mut f64,
    mu: *mut f64,
) -> Gm3Status {
    guard(|| {
        let c = &deref(cert, "cert")?.inner;
        if triple.is_null() {
            return Err(bad_arg("`triple` is null"));
        }
        let t = std::slice::from_raw_parts_mut(triple, 3);
        t.copy_from_slice(&[c.triple.alpha, c.triple.beta, c.triple.gamma]);
        *deref_mut(mu, "mu")? = c.mu();
        Ok(())
    })
}

/// Nonzero when every condition holds and `kappa >= L(0)`.
///
/// # Safety
/// `cert` from this library or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gm3_certificate_is_valid(cert: *const Gm3Certificate) -> i32 {
    cert.as_ref().map_or(0, |c| i32::from(c.inner.is_valid()))
}

/// Flat `name = value` text of the certificate; release with [`gm3_string_free`].
///
/// # Safety
/// `cert` from this library; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gm3_certificate_to_text(cert: *const Gm3Certificate, out: *mut *mut c_char) -> Gm3Status {
    guard(|| {
        let text = deref(cert, "cert")?.inner.to_text();
        let c = CString::new(text).map_err(|_| bad_arg("certificate text contains NUL"))?;
        *deref_mut(out, "out")? = c.into_raw();
        Ok(())
    })
}

/// Parses certificate text written by [`gm3_certificate_to_text`].
///
/// # Safety
/// `text` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gm3_certificate_from_text(text: *const c_char, out: *mut *mut Gm3Certificate) -> Gm3Status {
    guard(|| {
        if text.is_null() {
            return Err(bad_arg("`text` is null"));
        }
        let out = deref_mut(out, "out")?;
        let s = CStr::from_ptr(text).to_str().map_err(|_| bad_arg("`text` is not UTF-8"))?;
        let inner = Certificate::from_text(s).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(Gm3Certificate { inner }));
        Ok(())
    })
}

/// # Safety
/// `cert` from this library (or null) and not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gm3_certificate_free(cert: *mut Gm3Certificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

/// # Safety
/// `s` must come from this library (or be null).
#[no_mangle]
pub unsafe extern "C" fn gm3_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Maximal root of `x - sum c_j x^theta_j = w0` for `n` terms.
///
/// # Safety
/// `c` and `theta` point to `n` doubles each (may be null when `n == 0`); `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gm3_kappa_bound(
    w0: f64,
    mu: f64,
    c: *const f64,
    theta: *const f64,
    n: usize,
    out: *mut f64,
) -> Gm3Status {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let terms: Vec<(f64, f64)> = if n == 0 {
            Vec::new()
        } else {
            if c.is_null() || theta.is_null() {
                return Err(bad_arg("`c` or `theta` is null"));
            }
            let c = std::slice::from_raw_parts(c, n);
            let th = std::slice::from_raw_parts(theta, n);
            c.iter().copied().zip(th.iter().copied()).collect()
        };
        *out = certificate::kappa_bound(w0, mu, &terms).map_err(lib_err)?;
        Ok(())
    })
}

/// Starts a simulation on a `dim`-dimensional box with `n` cells and side
/// `length` per axis, uniform initial values `initial[3]`. For the explicit
/// scheme `dt` must respect the stability bound.
///
/// # Safety
/// `params` from this library; `initial` points to 3 doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gm3_simulation_new(
    params: *const Gm3Params,
    dim: u32,
    n: usize,
    length: f64,
    scheme: Gm3Scheme,
    dt: f64,
    initial: *const f64,
    out: *mut *mut Gm3Simulation,
) -> Gm3Status {
    guard(|| {
        let params = deref(params, "params")?.inner;
        if initial.is_null() {
            return Err(bad_arg("`initial` is null"));
        }
        let out = deref_mut(out, "out")?;
        let dim = match dim {
            1 => Dim::One,
            2 => Dim::Two,
            _ => return Err(bad_arg("`dim` must be 1 or 2")),
        };
        let grid = Grid::new(dim, [n, n], [length, length]).map_err(lib_err)?;
        let model = Model::new(params);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(bad_arg("`dt` must be positive"));
        }
        if scheme == Gm3Scheme::Explicit && dt > explicit_dt_bound(&grid, &model) {
            return Err(bad_arg("`dt` exceeds the explicit stability bound"));
        }
        let init = std::slice::from_raw_parts(initial, 3);
        let state = State::uniform(grid, [init[0], init[1], init[2]]).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(Gm3Simulation {
            model,
            state,
            scheme,
            dt,
        }));
        Ok(())
    })
}

/// Number of cells.
///
/// # Safety
/// `sim` from this library or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gm3_simulation_len(sim: *const Gm3Simulation) -> usize {
    sim.as_ref().map_or(0, |s| s.state.grid().len())
}

/// Replaces one component (0 = u, 1 = v, 2 = w) with `len` values, all positive.
///
/// # Safety
/// `sim` from this library; `values` points to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gm3_simulation_set_field(
    sim: *mut Gm3Simulation,
    component: u32,
    values: *const f64,
    len: usize,
) -> Gm3Status {
    guard(|| {
        let sim = deref_mut(sim, "sim")?;
        let grid = *sim.state.grid();
        if values.is_null() || len != grid.len() || component > 2 {
            return Err(bad_arg("bad component, values or length"));
        }
        let new = Field::new(grid, std::slice::from_raw_parts(values, len).to_vec()).map_err(lib_err)?;
        let mut f = sim.state.fields().clone();
        f[component as usize] = new;
        let [u, v, w] = f;
        sim.state = State::at_step(u, v, w, sim.state.t(), sim.state.step()).map_err(lib_err)?;
        Ok(())
    })
}

/// Advances `steps` steps. On failure the state is left at the last good level.
///
/// # Safety
/// `sim` from this library.
#[no_mangle]
pub unsafe extern "C" fn gm3_simulation_step(sim: *mut Gm3Simulation, steps: usize) -> Gm3Status {
    guard(|| {
        let sim = deref_mut(sim, "sim")?;
        for _ in 0..steps {
            let next = match sim.scheme {
                Gm3Scheme::Explicit => step_explicit(&sim.state, &sim.model, sim.dt),
                Gm3Scheme::Imex => step_imex(&sim.state, &sim.model, sim.dt),
            }
            .map_err(lib_err)?;
            sim.state = next;
        }
        Ok(())
    })
}

/// # Safety
/// `sim` from this library; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gm3_simulation_time(sim: *const Gm3Simulation, out: *mut f64) -> Gm3Status {
    guard(|| {
        *deref_mut(out, "out")? = deref(sim, "sim")?.state.t();
        Ok(())
    })
}

/// Copies one component (0 = u, 1 = v, 2 = w) into `out[len]`.
///
/// # Safety
/// `sim` from this library; `out` points to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gm3_simulation_field(
    sim: *const Gm3Simulation,
    component: u32,
    out: *mut f64,
    len: usize,
) -> Gm3Status {
    guard(|| {
        let sim = deref(sim, "sim")?;
        if component > 2 || out.is_null() || len != sim.state.grid().len() {
            return Err(bad_arg("bad component, buffer or length"));
        }
        let src = sim.state.fields()[component as usize].values();
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(src);
        Ok(())
    })
}

/// `∫ u^alpha / (v^beta w^gamma)` for the current state.
///
/// # Safety
/// `sim` from this library; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gm3_simulation_lyapunov(
    sim: *const Gm3Simulation,
    alpha: f64,
    beta: f64,
    gamma: f64,
    out: *mut f64,
) -> Gm3Status {
    guard(|| {
        let sim = deref(sim, "sim")?;
        let triple = certificate::ExponentTriple::new(alpha, beta, gamma).map_err(lib_err)?;
        *deref_mut(out, "out")? = gm3_core::monitor::lyapunov_value(&sim.state, &triple).map_err(lib_err)?;
        Ok(())
    })
}

/// # Safety
/// `sim` from this library (or null) and not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gm3_simulation_free(sim: *mut Gm3Simulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_codes() {
        assert_eq!(status_of(&Error::InfeasibleBranch(String::new())), Gm3Status::Infeasible);
        assert_eq!(status_of(&Error::NonPositiveCoefficient("b1")), Gm3Status::InvalidParams);
        assert_eq!(status_of(&Error::NonFiniteValue("u")), Gm3Status::BlowUp);
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, Gm3Status::Panic);
        let msg = unsafe { CStr::from_ptr(gm3_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
    }
}
