//! C ABI for the undersolve library.
//!
//! Problems and solve outcomes are opaque handles created and destroyed
//! through paired `_new`/`_free` calls. Every fallible function returns a
//! `UsStatus` code; a human-readable message for the most recent error on
//! the calling thread is available via [`us_last_error_message`].
//!
//! The generated header lives in `include/undersolve.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use undersolve::probfile::{load_problem, load_problem_str, LoadedProblem};
use undersolve::problems::{quadratic_l1, quadratic_mu0};
use undersolve::solvers::{
    solve_adaptive, solve_basic, solve_damped_constant, solve_l_known, solve_pure, SolveOutcome,
    SolveStatus, SolverConfig,
};
use undersolve::theory;
use undersolve::NormKind;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UsStatus {
    UsOk = 0,
    /// Null pointer, bad enum value, or out-of-range numeric argument.
    UsErrInvalidArgument = 1,
    /// Problem file could not be parsed or validated.
    UsErrParse = 2,
    /// The iteration stopped without converging.
    UsErrNotConverged = 3,
    /// The operation needs data the problem does not carry
    /// (e.g. certification of a non-quadratic problem).
    UsErrUnsupported = 4,
}

/// Iteration rules selectable through [`UsSolveParams`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UsAlgorithm {
    /// Two-stage rule with known `mu` and `l`.
    UsAlgBasic = 0,
    /// Adaptive threshold rule driven by `beta0` and `q`.
    UsAlgAdaptive = 1,
    /// Lipschitz-only rule driven by `l`.
    UsAlgLOnly = 2,
    /// Undamped Newton.
    UsAlgPure = 3,
    /// Fixed damping `alpha`.
    UsAlgConstant = 4,
}

/// Norms for steps (domain) and residuals (image).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UsNorm {
    UsNormL1 = 0,
    UsNormL2 = 1,
    UsNormLInf = 2,
}

impl UsNorm {
    fn to_kind(self) -> NormKind {
        match self {
            UsNorm::UsNormL1 => NormKind::L1,
            UsNorm::UsNormL2 => NormKind::L2,
            UsNorm::UsNormLInf => NormKind::LInf,
        }
    }
}

/// Terminal state of a finished run, mirrored from the library.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UsSolveOutcomeKind {
    UsSolveConverged = 0,
    UsSolveMaxIter = 1,
    UsSolveLeftTrustBall = 2,
    UsSolveRankDeficient = 3,
    UsSolveInnerReductionLimit = 4,
    UsSolveZeroGradient = 5,
}

/// Solve parameters. Obtain defaults from [`us_solve_params_default`] and
/// override the fields the chosen algorithm needs: `mu`/`l` for basic,
/// `l` for l-only, `beta0`/`q` for adaptive, `alpha` for constant.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct UsSolveParams {
    pub algorithm: UsAlgorithm,
    pub domain_norm: UsNorm,
    pub image_norm: UsNorm,
    pub mu: f64,
    pub l: f64,
    pub beta0: f64,
    pub q: f64,
    pub alpha: f64,
    /// Relative residual stopping tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Trust-ball radius around the start point; infinity disables it.
    pub trust_radius: f64,
}

/// Opaque problem handle.
pub struct UsProblem {
    inner: LoadedProblem,
}

/// Opaque outcome handle.
pub struct UsOutcome {
    inner: SolveOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap());
}

/// Message for the most recent error on this thread. The pointer stays
/// valid until the next failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn us_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn us_problem_load_str(
    text: *const c_char,
    out: *mut *mut UsProblem,
) -> UsStatus {
    if text.is_null() || out.is_null() {
        set_error("null pointer argument");
        return UsStatus::UsErrInvalidArgument;
    }
    let text = match CStr::from_ptr(text).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("problem text is not valid UTF-8");
            return UsStatus::UsErrInvalidArgument;
        }
    };
    match load_problem_str(text) {
        Ok(lp) => {
            *out = Box::into_raw(Box::new(UsProblem { inner: lp }));
            UsStatus::UsOk
        }
        Err(e) => {
            set_error(e.to_string());
            UsStatus::UsErrParse
        }
    }
}

/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn us_problem_load_file(
    path: *const c_char,
    out: *mut *mut UsProblem,
) -> UsStatus {
    if path.is_null() || out.is_null() {
        set_error("null pointer argument");
        return UsStatus::UsErrInvalidArgument;
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(p) => p,
        Err(_) => {
            set_error("path is not valid UTF-8");
            return UsStatus::UsErrInvalidArgument;
        }
    };
    match load_problem(Path::new(path)) {
        Ok(lp) => {
            *out = Box::into_raw(Box::new(UsProblem { inner: lp }));
            UsStatus::UsOk
        }
        Err(e) => {
            set_error(e.to_string());
            UsStatus::UsErrParse
        }
    }
}

/// # Safety
/// `p` must come from a `us_problem_load_*` call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn us_problem_free(p: *mut UsProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn us_problem_dims(
    p: *const UsProblem,
    n: *mut usize,
    m: *mut usize,
) -> UsStatus {
    if p.is_null() || n.is_null() || m.is_null() {
        set_error("null pointer argument");
        return UsStatus::UsErrInvalidArgument;
    }
    *n = (*p).inner.n;
    *m = (*p).inner.m;
    UsStatus::UsOk
}

/// Defaults: basic algorithm, Euclidean norms, `tol = 1e-10`,
/// `max_iter = 500`, no trust ball; the per-algorithm constants are NaN
/// and must be set by the caller when the algorithm needs them.
#[no_mangle]
pub extern "C" fn us_solve_params_default() -> UsSolveParams {
    UsSolveParams {
        algorithm: UsAlgorithm::UsAlgBasic,
        domain_norm: UsNorm::UsNormL2,
        image_norm: UsNorm::UsNormL2,
        mu: f64::NAN,
        l: f64::NAN,
        beta0: f64::NAN,
        q: 0.5,
        alpha: f64::NAN,
        tol: 1e-10,
        max_iter: 500,
        trust_radius: f64::INFINITY,
    }
}

fn require(value: f64, name: &str) -> Result<f64, UsStatus> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        set_error(format!("parameter '{name}' must be positive and finite"));
        Err(UsStatus::UsErrInvalidArgument)
    }
}

/// Runs the selected algorithm from the problem's start point. On success
/// `*out` owns the outcome; inspect and free it with the `us_outcome_*`
/// calls. A run that stops without converging still produces an outcome
/// and returns `UsErrNotConverged`.
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn us_solve(
    p: *const UsProblem,
    params: UsSolveParams,
    out: *mut *mut UsOutcome,
) -> UsStatus {
    if p.is_null() || out.is_null() {
        set_error("null pointer argument");
        return UsStatus::UsErrInvalidArgument;
    }
    if !(params.tol.is_finite() && params.tol > 0.0) {
        set_error("parameter 'tol' must be positive and finite");
        return UsStatus::UsErrInvalidArgument;
    }
    let problem = &(*p).inner;
    let cfg = SolverConfig {
        domain_norm: params.domain_norm.to_kind(),
        image_norm: params.image_norm.to_kind(),
        stop_tol: params.tol,
        max_iter: params.max_iter,
        trust_radius: if params.trust_radius > 0.0 {
            params.trust_radius
        } else {
            f64::INFINITY
        },
        q: if params.q > 0.0 && params.q < 1.0 { params.q } else { 0.5 },
        ..SolverConfig::default()
    };
    let outcome = match params.algorithm {
        UsAlgorithm::UsAlgBasic => {
            let (mu, l) = match (require(params.mu, "mu"), require(params.l, "l")) {
                (Ok(mu), Ok(l)) => (mu, l),
                (Err(s), _) | (_, Err(s)) => return s,
            };
            solve_basic(&problem.problem, &problem.x0, mu, l, &cfg)
        }
        UsAlgorithm::UsAlgAdaptive => {
            let beta0 = match require(params.beta0, "beta0") {
                Ok(v) => v,
                Err(s) => return s,
            };
            solve_adaptive(&problem.problem, &problem.x0, beta0, &cfg)
        }
        UsAlgorithm::UsAlgLOnly => {
            let l = match require(params.l, "l") {
                Ok(v) => v,
                Err(s) => return s,
            };
            solve_l_known(&problem.problem, &problem.x0, l, &cfg)
        }
        UsAlgorithm::UsAlgPure => solve_pure(&problem.problem, &problem.x0, &cfg),
        UsAlgorithm::UsAlgConstant => {
            let alpha = match require(params.alpha, "alpha") {
                Ok(v) if v <= 1.0 => v,
                Ok(_) => {
                    set_error("parameter 'alpha' must lie in (0, 1]");
                    return UsStatus::UsErrInvalidArgument;
                }
                Err(s) => return s,
            };
            solve_damped_constant(&problem.problem, &problem.x0, alpha, &cfg)
        }
    };
    let converged = outcome.status == SolveStatus::Converged;
    if !converged {
        set_error(format!("solver stopped: {}", outcome.status.as_str()));
    }
    *out = Box::into_raw(Box::new(UsOutcome { inner: outcome }));
    if converged {
        UsStatus::UsOk
    } else {
        UsStatus::UsErrNotConverged
    }
}

/// # Safety
/// `o` must come from `us_solve` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn us_outcome_free(o: *mut UsOutcome) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

/// # Safety
/// `o` must be a valid outcome handle.
#[no_mangle]
pub unsafe extern "C" fn us_outcome_kind(o: *const UsOutcome) -> UsSolveOutcomeKind {
    match (*o).inner.status {
        SolveStatus::Converged => UsSolveOutcomeKind::UsSolveConverged,
        SolveStatus::MaxIter => UsSolveOutcomeKind::UsSolveMaxIter,
        SolveStatus::LeftTrustBall => UsSolveOutcomeKind::UsSolveLeftTrustBall,
        SolveStatus::RankDeficientJacobian => UsSolveOutcomeKind::UsSolveRankDeficient,
        SolveStatus::InnerReductionLimit => UsSolveOutcomeKind::UsSolveInnerReductionLimit,
        SolveStatus::ZeroGradient => UsSolveOutcomeKind::UsSolveZeroGradient,
    }
}

/// # Safety
/// `o` must be a valid outcome handle.
#[no_mangle]
pub unsafe extern "C" fn us_outcome_iterations(o: *const UsOutcome) -> usize {
    (*o).inner.iterations()
}

/// # Safety
/// `o` must be a valid outcome handle.
#[no_mangle]
pub unsafe extern "C" fn us_outcome_stage1_count(o: *const UsOutcome) -> usize {
    (*o).inner.stage1_count
}

/// # Safety
/// `o` must be a valid outcome handle.
#[no_mangle]
pub unsafe extern "C" fn us_outcome_final_residual(o: *const UsOutcome) -> f64 {
    (*o).inner.final_residual()
}

/// Copies the solution into `buf` (capacity `len`); fails unless
/// `len >= n`.
///
/// # Safety
/// `o` must be valid and `buf` must point to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn us_outcome_solution(
    o: *const UsOutcome,
    buf: *mut f64,
    len: usize,
) -> UsStatus {
    if o.is_null() || buf.is_null() {
        set_error("null pointer argument");
        return UsStatus::UsErrInvalidArgument;
    }
    let x = &(*o).inner.x;
    if len < x.len() {
        set_error(format!("buffer too small: need {}, got {len}", x.len()));
        return UsStatus::UsErrInvalidArgument;
    }
    std::ptr::copy_nonoverlapping(x.as_ptr(), buf, x.len());
    UsStatus::UsOk
}

/// Certified `(mu0, l1)` of a quadratic problem's linearization at the
/// origin. Non-quadratic problems return `UsErrUnsupported`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn us_certify_quadratic(
    p: *const UsProblem,
    mu0: *mut f64,
    l1: *mut f64,
) -> UsStatus {
    if p.is_null() || mu0.is_null() || l1.is_null() {
        set_error("null pointer argument");
        return UsStatus::UsErrInvalidArgument;
    }
    match &(*p).inner.quadratic {
        Some(q) => {
            *mu0 = quadratic_mu0(q);
            *l1 = quadratic_l1(q);
            UsStatus::UsOk
        }
        None => {
            set_error("certification requires a quadratic problem");
            UsStatus::UsErrUnsupported
        }
    }
}

/// The tail-sum constant `c = H_0(1/2)`.
#[no_mangle]
pub extern "C" fn us_constant_c() -> f64 {
    theory::constant_c()
}

/// Damped-stage iteration bound `k_max(u0, mu, l)`.
#[no_mangle]
pub extern "C" fn us_k_max(u0: f64, mu: f64, l: f64) -> u32 {
    theory::k_max(u0, mu, l)
}

/// Solvability radius `mu0^2 / (4 l)` and solution bound `mu0 / (2 l)`
/// for quadratic maps.
///
/// # Safety
/// `radius_y` and `radius_x` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn us_region_quadratic(
    mu0: f64,
    l: f64,
    radius_y: *mut f64,
    radius_x: *mut f64,
) -> UsStatus {
    if radius_y.is_null() || radius_x.is_null() {
        set_error("null pointer argument");
        return UsStatus::UsErrInvalidArgument;
    }
    if !(mu0 > 0.0 && l > 0.0) {
        set_error("mu0 and l must be positive");
        return UsStatus::UsErrInvalidArgument;
    }
    let r = theory::region_thm5(mu0, l);
    *radius_y = r.radius_y;
    *radius_x = r.radius_x;
    UsStatus::UsOk
}

/// The guaranteed-convergence constants `(s1, t1)`.
///
/// # Safety
/// `s1` and `t1` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn us_guarantee_constants(s1: *mut f64, t1: *mut f64) -> UsStatus {
    if s1.is_null() || t1.is_null() {
        set_error("null pointer argument");
        return UsStatus::UsErrInvalidArgument;
    }
    let (a, b) = theory::thm6_constants();
    *s1 = a;
    *t1 = b;
    UsStatus::UsOk
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    const QUAD_1D: &str = "format = 1\nkind = \"quadratic\"\nn = 1\nm = 1\n\n[payload]\na = [[[1.0]]]\nb = [[1.0]]\ny = [0.105]\n";

    fn load(text: &str) -> *mut UsProblem {
        let c = CString::new(text).unwrap();
        let mut p: *mut UsProblem = ptr::null_mut();
        let status = unsafe { us_problem_load_str(c.as_ptr(), &mut p) };
        assert_eq!(status, UsStatus::UsOk);
        assert!(!p.is_null());
        p
    }

    #[test]
    fn load_solve_inspect_free() {
        let p = load(QUAD_1D);
        let (mut n, mut m) = (0usize, 0usize);
        unsafe {
            assert_eq!(us_problem_dims(p, &mut n, &mut m), UsStatus::UsOk);
        }
        assert_eq!((n, m), (1, 1));
        let mut params = us_solve_params_default();
        params.mu = 1.0;
        params.l = 1.0;
        let mut o: *mut UsOutcome = ptr::null_mut();
        unsafe {
            assert_eq!(us_solve(p, params, &mut o), UsStatus::UsOk);
            assert_eq!(us_outcome_kind(o), UsSolveOutcomeKind::UsSolveConverged);
            assert!(us_outcome_final_residual(o) <= 1e-10);
            let mut x = [0.0f64];
            assert_eq!(us_outcome_solution(o, x.as_mut_ptr(), 1), UsStatus::UsOk);
            assert!((x[0] - 0.1).abs() < 1e-9);
            us_outcome_free(o);
            us_problem_free(p);
        }
    }

    #[test]
    fn parse_error_sets_message() {
        let c = CString::new("format = 2\nkind = \"quadratic\"\nn = 1\nm = 1\n").unwrap();
        let mut p: *mut UsProblem = ptr::null_mut();
        let status = unsafe { us_problem_load_str(c.as_ptr(), &mut p) };
        assert_eq!(status, UsStatus::UsErrParse);
        let msg = unsafe { CStr::from_ptr(us_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("format"));
    }

    #[test]
    fn missing_constant_rejected() {
        let p = load(QUAD_1D);
        let params = us_solve_params_default(); // mu/l left NaN
        let mut o: *mut UsOutcome = ptr::null_mut();
        unsafe {
            assert_eq!(us_solve(p, params, &mut o), UsStatus::UsErrInvalidArgument);
            assert!(o.is_null());
            us_problem_free(p);
        }
    }

    #[test]
    fn non_convergence_returns_outcome_and_code() {
        let p = load(QUAD_1D);
        let mut params = us_solve_params_default();
        params.algorithm = UsAlgorithm::UsAlgConstant;
        params.alpha = 0.5;
        params.max_iter = 2;
        let mut o: *mut UsOutcome = ptr::null_mut();
        unsafe {
            assert_eq!(us_solve(p, params, &mut o), UsStatus::UsErrNotConverged);
            assert!(!o.is_null());
            assert_eq!(us_outcome_kind(o), UsSolveOutcomeKind::UsSolveMaxIter);
            us_outcome_free(o);
            us_problem_free(p);
        }
    }

    #[test]
    fn certify_quadratic_constants() {
        let p = load(QUAD_1D);
        let (mut mu0, mut l1) = (0.0, 0.0);
        unsafe {
            assert_eq!(us_certify_quadratic(p, &mut mu0, &mut l1), UsStatus::UsOk);
            us_problem_free(p);
        }
        assert!((mu0 - 1.0).abs() < 1e-12);
        assert!((l1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theory_constants_exposed() {
        assert!((us_constant_c() - 0.8164).abs() < 1e-4);
        assert_eq!(us_k_max(0.1, 1.0, 1.0), 0);
        let (mut s1, mut t1) = (0.0, 0.0);
        unsafe {
            assert_eq!(us_guarantee_constants(&mut s1, &mut t1), UsStatus::UsOk);
        }
        assert!((s1 - 0.1877178).abs() < 1e-6);
        assert!((t1 - 0.40100511).abs() < 1e-6);
        let (mut ry, mut rx) = (0.0, 0.0);
        unsafe {
            assert_eq!(us_region_quadratic(1.0, 1.0, &mut ry, &mut rx), UsStatus::UsOk);
        }
        assert_eq!(ry, 0.25);
        assert_eq!(rx, 0.5);
    }

    #[test]
    fn null_arguments_rejected() {
        unsafe {
            assert_eq!(
                us_problem_load_str(ptr::null(), ptr::null_mut()),
                UsStatus::UsErrInvalidArgument
            );
            us_problem_free(ptr::null_mut());
            us_outcome_free(ptr::null_mut());
        }
    }
}
