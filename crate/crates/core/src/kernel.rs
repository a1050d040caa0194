//! Periodic Green's-function kernels shared by the Hamiltonian, the
//! equations of motion and the reduced Hamiltonians.
//!
//! Everything is expressed through `sin²a + sinh²h = |sin(a + ih)|²`, which
//! avoids the cancellation in `cosh 2h − cos 2a` near a vortex and the
//! overflow of `sinh h` far away from it.

use num_complex::Complex64;

/// Beyond this |h| the hyperbolic terms are evaluated through their
/// exponential asymptotics.
const FAR: f64 = 20.0;

/// `ln(sin²a + sinh²h)`.
pub fn log_sin_sq(a: f64, h: f64) -> f64 {
    let s = a.sin();
    let ah = h.abs();
    if ah <= FAR {
        let sh = h.sinh();
        (s * s + sh * sh).ln()
    } else {
        let e = (-2.0 * ah).exp();
        let log_sinh_sq = 2.0 * ah - 2.0 * std::f64::consts::LN_2 + 2.0 * (-e).ln_1p();
        let inv_sinh_sq = 4.0 * e / ((1.0 - e) * (1.0 - e));
        log_sinh_sq + (s * s * inv_sinh_sq).ln_1p()
    }
}

/// `(sinh 2h, sin 2a) / (sin²a + sinh²h)`, the two pair factors of the
/// real equations of motion.
pub fn pair_field(a: f64, h: f64) -> (f64, f64) {
    let (s, c) = a.sin_cos();
    let ah = h.abs();
    if ah <= FAR {
        let sh = h.sinh();
        let d = s * s + sh * sh;
        ((2.0 * h).sinh() / d, 2.0 * s * c / d)
    } else {
        let e = (-2.0 * ah).exp();
        let inv_sinh_sq = 4.0 * e / ((1.0 - e) * (1.0 - e));
        let denom = 1.0 + s * s * inv_sinh_sq;
        let coth = h.signum() * (1.0 + e) / (1.0 - e);
        (2.0 * coth / denom, 2.0 * s * c * inv_sinh_sq / denom)
    }
}

/// Complex cotangent, stable for large imaginary parts.
pub fn cotan(z: Complex64) -> Complex64 {
    let (u, v) = pair_field(z.re, z.im);
    Complex64::new(0.5 * v, -0.5 * u)
}

/// `ln|sin z|`.
pub fn log_abs_sin(z: Complex64) -> f64 {
    0.5 * log_sin_sq(z.re, z.im)
}
