//! C interface to `cylvort`.
//!
//! Every function returns a [`CvStatus`]; on failure the message is
//! available from [`cv_last_error`] on the same thread until the next call.
//! Objects are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use num_complex::Complex64;

use cylvort::cylinder::{Configuration, CylPoint, Cylinder};
use cylvort::dynamics::{hamiltonian, integrate, velocities, IntegratorConfig, OutputMode, Trajectory};
use cylvort::equilibria::{ring_equilibrium, CyclicOrder};
use cylvort::io::{write_trajectory, Outputs};
use cylvort::reduced::{reduced_h4, rho_critical, Split4};
use cylvort::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Collision = 3,
    NoConvergence = 4,
    Singular = 5,
    Io = 6,
    Panic = 7,
}

pub struct CvConfiguration(Configuration);

pub struct CvTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CvStatus {
    match e {
        Error::Collision { .. } => CvStatus::Collision,
        Error::NoConvergence { .. } | Error::NoBracket { .. } | Error::StepUnderflow { .. } => CvStatus::NoConvergence,
        Error::SingularPoint { .. } | Error::SingularSplit => CvStatus::Singular,
        _ => CvStatus::InvalidArgument,
    }
}

struct Fail(CvStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null() -> Fail {
    Fail(CvStatus::NullPointer, "null pointer argument".into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CvStatus::Ok
        }
        Ok(Err(Fail(s, m))) => {
            set_error(&m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            CvStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, n: usize) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize) -> Result<&'a mut [T], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `xs`, `ys` and `gammas` point to `n` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cv_configuration_new(
    radius: f64,
    xs: *const f64,
    ys: *const f64,
    gammas: *const f64,
    n: usize,
    out_cfg: *mut *mut CvConfiguration,
) -> CvStatus {
    guard(|| {
        let o = out(out_cfg)?;
        *o = ptr::null_mut();
        let (x, y, g) = (slice(xs, n)?, slice(ys, n)?, slice(gammas, n)?);
        let cyl = Cylinder::new(radius)?;
        let pts = x.iter().zip(y).map(|(a, b)| CylPoint::new(*a, *b)).collect();
        let cfg = Configuration::new(cyl, pts, g.to_vec())?;
        *o = Box::into_raw(Box::new(CvConfiguration(cfg)));
        Ok(())
    })
}

/// # Safety
/// `cfg` is null or came from `cv_configuration_new` and is not used again.
#[no_mangle]
pub unsafe extern "C" fn cv_configuration_free(cfg: *mut CvConfiguration) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` is a live handle; `out_h` is writable.
#[no_mangle]
pub unsafe extern "C" fn cv_hamiltonian(cfg: *const CvConfiguration, out_h: *mut f64) -> CvStatus {
    guard(|| {
        let c = cfg.as_ref().ok_or_else(null)?;
        *out(out_h)? = hamiltonian(&c.0)?;
        Ok(())
    })
}

/// Writes the velocity of every vortex; `vx` and `vy` hold `n` doubles,
/// `n` equal to the vortex count.
///
/// # Safety
/// `cfg` is a live handle; `vx` and `vy` point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cv_velocities(cfg: *const CvConfiguration, vx: *mut f64, vy: *mut f64, n: usize) -> CvStatus {
    guard(|| {
        let c = cfg.as_ref().ok_or_else(null)?;
        if n != c.0.len() {
            return Err(Fail(CvStatus::InvalidArgument, format!("buffers hold {n} entries, configuration has {}", c.0.len())));
        }
        let (ox, oy) = (slice_mut(vx, n)?, slice_mut(vy, n)?);
        for (k, v) in velocities(&c.0)?.iter().enumerate() {
            ox[k] = v.vx;
            oy[k] = v.vy;
        }
        Ok(())
    })
}

/// Adaptive integration to `t_final` with tolerance `tol` (relative to the
/// radius). `output_every > 0` records equally spaced samples, otherwise
/// every accepted step.
///
/// # Safety
/// `cfg` is a live handle; `out_traj` is writable.
#[no_mangle]
pub unsafe extern "C" fn cv_integrate(
    cfg: *const CvConfiguration,
    t_final: f64,
    tol: f64,
    output_every: f64,
    out_traj: *mut *mut CvTrajectory,
) -> CvStatus {
    guard(|| {
        let c = cfg.as_ref().ok_or_else(null)?;
        let o = out(out_traj)?;
        *o = ptr::null_mut();
        let mut icfg = IntegratorConfig::adaptive(tol);
        if output_every > 0.0 {
            icfg = icfg.with_output(OutputMode::Every(output_every));
        }
        let traj = integrate(&c.0, t_final, &icfg).map_err(|f| Fail::from(f.error))?;
        *o = Box::into_raw(Box::new(CvTrajectory(traj)));
        Ok(())
    })
}

/// # Safety
/// `traj` is null or came from `cv_integrate` and is not used again.
#[no_mangle]
pub unsafe extern "C" fn cv_trajectory_free(traj: *mut CvTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `traj` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cv_trajectory_len(traj: *const CvTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// Time, lifted positions and energy of sample `i`.
///
/// # Safety
/// `traj` is a live handle; `x` and `y` point to `n` writable doubles with
/// `n` equal to the vortex count; `t` and `energy` may be null.
#[no_mangle]
pub unsafe extern "C" fn cv_trajectory_sample(
    traj: *const CvTrajectory,
    i: usize,
    t: *mut f64,
    x: *mut f64,
    y: *mut f64,
    n: usize,
    energy: *mut f64,
) -> CvStatus {
    guard(|| {
        let tr = &traj.as_ref().ok_or_else(null)?.0;
        let s = tr
            .samples()
            .get(i)
            .ok_or_else(|| Fail(CvStatus::InvalidArgument, format!("sample {i} out of range ({} samples)", tr.len())))?;
        if n != s.x.len() {
            return Err(Fail(CvStatus::InvalidArgument, format!("buffers hold {n} entries, trajectory has {} vortices", s.x.len())));
        }
        slice_mut(x, n)?.copy_from_slice(&s.x);
        slice_mut(y, n)?.copy_from_slice(&s.y);
        if let Some(t) = t.as_mut() {
            *t = s.t;
        }
        if let Some(e) = energy.as_mut() {
            *e = s.energy;
        }
        Ok(())
    })
}

/// Writes the trajectory CSV to `path` and the unwrapped companion next to
/// it. Nothing is left behind on failure.
///
/// # Safety
/// `traj` is a live handle; `path` is a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn cv_trajectory_write_csv(traj: *const CvTrajectory, path: *const c_char) -> CvStatus {
    guard(|| {
        let tr = &traj.as_ref().ok_or_else(null)?.0;
        if path.is_null() {
            return Err(null());
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Fail(CvStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let mut outputs = Outputs::new();
        write_trajectory(&mut outputs, tr, Path::new(p)).map_err(|e| Fail(CvStatus::Io, e.to_string()))?;
        outputs.keep();
        Ok(())
    })
}

/// Ring equilibrium of same-sign vortices on `y = 0`. `order` lists the
/// 0-based cyclic order (null for `0, 1, …, n−1`); `x_out` receives the
/// positions indexed by vortex.
///
/// # Safety
/// `gammas` and `x_out` point to `n` doubles, `order` is null or points to
/// `n` indices; the remaining outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn cv_ring_equilibrium(
    radius: f64,
    gammas: *const f64,
    order: *const usize,
    n: usize,
    x_out: *mut f64,
    residual: *mut f64,
    certified: *mut bool,
) -> CvStatus {
    guard(|| {
        let g = slice(gammas, n)?;
        let ord = if order.is_null() {
            CyclicOrder::identity(n)
        } else {
            CyclicOrder::new(slice(order, n)?.to_vec())?
        };
        let res = ring_equilibrium(g, &ord, &Cylinder::new(radius)?)?;
        let xs = slice_mut(x_out, n)?;
        for (k, p) in res.configuration.points().iter().enumerate() {
            xs[k] = p.x;
        }
        *out(residual)? = res.residual;
        *out(certified)? = res.certified;
        Ok(())
    })
}

/// Reduced energy of two antipodal pairs on the unit cylinder.
///
/// # Safety
/// `out_h` is writable.
#[no_mangle]
pub unsafe extern "C" fn cv_reduced_h4(b: f64, gamma: f64, gamma_prime: f64, xi: f64, eta: f64, out_h: *mut f64) -> CvStatus {
    guard(|| {
        let s = Split4::new(b, gamma, gamma_prime, Complex64::new(xi, eta))?;
        *out(out_h)? = reduced_h4(&s)?;
        Ok(())
    })
}

/// Leapfrogging threshold on the unit cylinder.
///
/// # Safety
/// `out_rho` is writable.
#[no_mangle]
pub unsafe extern "C" fn cv_rho_critical(b: f64, gamma: f64, gamma_prime: f64, out_rho: *mut f64) -> CvStatus {
    guard(|| {
        *out(out_rho)? = rho_critical(b, gamma, gamma_prime)?.rho;
        Ok(())
    })
}
