//! Reduced Hamiltonians of split vortex systems on the unit cylinder.
//!
//! Two families are covered. In the three-vortex split, vortices `Γ`, `Γ′`
//! and `−Γ−Γ′` sit at `c + 2Γ′ζ/(Γ+Γ′)`, `c − 2Γζ/(Γ+Γ′)` and `−c`. In the
//! four-vortex split, `Γ, Γ′, −Γ′, −Γ` sit at
//! `ib + 2Γ′ζ/(Γ+Γ′)`, `ib − 2Γζ/(Γ+Γ′)`, `−ib − 2Γζ̄/(Γ+Γ′)` and
//! `−ib + 2Γ′ζ̄/(Γ+Γ′)`. After quotienting by translations the energy is a
//! function of the split variable `ζ = ξ + iη` alone.
//!
//! Everything here works at radius 1. Lengths scale with `r`; see
//! [`rho_critical_radius`] for the one quantity that is commonly needed in
//! physical units.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cylinder::{Configuration, CylPoint, Cylinder};
use crate::error::{Error, Result};
use crate::kernel::{cotan, log_abs_sin};
use crate::roots::{bisect, safeguarded_newton};

fn check_pair(gamma: f64, gamma_p: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma_p.is_finite()) {
        return Err(Error::NonFinite("vorticity"));
    }
    if !(gamma * gamma_p > 0.0) {
        return Err(Error::InvalidArgument("split vorticities must be non-zero and of one sign".into()));
    }
    Ok(())
}

/// Three-vortex split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split3 {
    pub c: Complex64,
    pub gamma: f64,
    pub gamma_p: f64,
    pub zeta: Complex64,
}

impl Split3 {
    pub fn new(c: Complex64, gamma: f64, gamma_p: f64, zeta: Complex64) -> Result<Self> {
        check_pair(gamma, gamma_p)?;
        if c.norm() == 0.0 || !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::InvalidArgument("pair offset c must be finite and non-zero".into()));
        }
        Ok(Self { c, gamma, gamma_p, zeta })
    }

    pub fn with_zeta(&self, zeta: Complex64) -> Self {
        Self { zeta, ..*self }
    }
}

/// Four-vortex split. `ξ` is kept canonical in `(−π/2, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split4 {
    pub b: f64,
    pub gamma: f64,
    pub gamma_p: f64,
    pub zeta: Complex64,
}

impl Split4 {
    pub fn new(b: f64, gamma: f64, gamma_p: f64, zeta: Complex64) -> Result<Self> {
        check_pair(gamma, gamma_p)?;
        if b == 0.0 || !b.is_finite() {
            return Err(Error::InvalidArgument("b must be finite and non-zero".into()));
        }
        if !(zeta.re.is_finite() && zeta.im.is_finite()) {
            return Err(Error::NonFinite("split variable"));
        }
        Ok(Self {
            b,
            gamma,
            gamma_p,
            zeta: Complex64::new(canonical_xi(zeta.re), zeta.im),
        })
    }

    pub fn with_zeta(&self, zeta: Complex64) -> Self {
        Self {
            zeta: Complex64::new(canonical_xi(zeta.re), zeta.im),
            ..*self
        }
    }

    /// The circles `η = −b(1+Γ/Γ′)/2` and `η = b(1+Γ′/Γ)/2` on which a
    /// vortex meets its mirror partner.
    pub fn singular_circles(&self) -> (f64, f64) {
        singular_circles(self.b, self.gamma, self.gamma_p)
    }
}

fn singular_circles(b: f64, g: f64, gp: f64) -> (f64, f64) {
    let lo = -b * (1.0 + g / gp) / 2.0;
    let hi = b * (1.0 + gp / g) / 2.0;
    (lo.min(hi), lo.max(hi))
}

/// Representative of `ξ` in `(−π/2, π/2]`.
pub fn canonical_xi(xi: f64) -> f64 {
    let mut x = (xi + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
    if x <= -FRAC_PI_2 {
        x += PI;
    }
    x
}

fn finite_or_singular(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::SingularSplit)
    }
}

/// Reduced energy of a three-vortex split:
/// `2πH/ΓΓ′ = p ln|sin(c + ζ/p)| + q ln|sin(c − ζ/q)| − ln|sin ζ|` with
/// `p = 1 + Γ/Γ′`, `q = 1 + Γ′/Γ`.
pub fn reduced_h3(s: &Split3) -> Result<f64> {
    let p = 1.0 + s.gamma / s.gamma_p;
    let q = 1.0 + s.gamma_p / s.gamma;
    let v = p * log_abs_sin(s.c + s.zeta / p) + q * log_abs_sin(s.c - s.zeta / q) - log_abs_sin(s.zeta);
    finite_or_singular(s.gamma * s.gamma_p * v / (2.0 * PI))
}

/// `∂H/∂ξ + i ∂H/∂η` of the three-vortex reduced energy.
pub fn reduced_h3_gradient(s: &Split3) -> Complex64 {
    let d = h3_holo_derivative(s.c, s.gamma, s.gamma_p, s.zeta);
    let pre = s.gamma * s.gamma_p / (2.0 * PI);
    Complex64::new(pre * d.re, -pre * d.im)
}

/// `F′(ζ)` where `2πH/ΓΓ′ = Re F`.
fn h3_holo_derivative(c: Complex64, g: f64, gp: f64, z: Complex64) -> Complex64 {
    let p = 1.0 + g / gp;
    let q = 1.0 + gp / g;
    cotan(c + z / p) - cotan(c - z / q) - cotan(z)
}

fn h3_holo_second(c: Complex64, g: f64, gp: f64, z: Complex64) -> Complex64 {
    let p = 1.0 + g / gp;
    let q = 1.0 + gp / g;
    let csc2 = |w: Complex64| {
        let k = cotan(w);
        1.0 + k * k
    };
    -csc2(c + z / p) / p - csc2(c - z / q) / q + csc2(z)
}

/// Positions of the three-vortex split on the unit cylinder.
pub fn embed3(s: &Split3) -> Result<Configuration> {
    let w = s.gamma + s.gamma_p;
    let z1 = s.c + 2.0 * s.gamma_p / w * s.zeta;
    let z2 = s.c - 2.0 * s.gamma / w * s.zeta;
    let z3 = -s.c;
    Configuration::new(
        Cylinder::unit(),
        vec![CylPoint::from_complex(z1), CylPoint::from_complex(z2), CylPoint::from_complex(z3)],
        vec![s.gamma, s.gamma_p, -w],
    )
}

/// Reduced energy of a four-vortex split.
pub fn reduced_h4(s: &Split4) -> Result<f64> {
    let (g, gp, b, z) = (s.gamma, s.gamma_p, s.b, s.zeta);
    let ib = Complex64::new(0.0, b);
    let w = g + gp;
    let d = z - z.conj();
    let t1 = log_abs_sin(ib + (gp * z + g * z.conj()) / w);
    let t0 = log_abs_sin(z);
    let t2 = log_abs_sin(ib + d / (1.0 + g / gp));
    let t3 = log_abs_sin(ib - d / (1.0 + gp / g));
    let v = 2.0 * t1 - 2.0 * t0 + (g / gp) * t2 + (gp / g) * t3;
    finite_or_singular(g * gp * v / (2.0 * PI))
}

/// `(∂H/∂ξ, ∂H/∂η)` of the four-vortex reduced energy.
pub fn reduced_h4_gradient(s: &Split4) -> (f64, f64) {
    let (g, gp, b, z) = (s.gamma, s.gamma_p, s.b, s.zeta);
    let i = Complex64::i();
    let ib = Complex64::new(0.0, b);
    let w = g + gp;
    let d = z - z.conj();
    let k1 = cotan(ib + (gp * z + g * z.conj()) / w);
    let k0 = cotan(z);
    let k2 = cotan(ib + d / (1.0 + g / gp));
    let k3 = cotan(ib - d / (1.0 + gp / g));
    let pre = g * gp / (2.0 * PI);
    let dxi = 2.0 * k1.re - 2.0 * k0.re;
    let deta = (2.0 * k1 * i * (gp - g) / w - 2.0 * i * k0 + k2 * 2.0 * i * g / w - k3 * 2.0 * i * gp / w).re;
    (pre * dxi, pre * deta)
}

/// Positions of the four-vortex split on the unit cylinder, with
/// vorticities `(Γ, Γ′, −Γ′, −Γ)`.
pub fn embed4(s: &Split4) -> Result<Configuration> {
    let (g, gp) = (s.gamma, s.gamma_p);
    let w = g + gp;
    let ib = Complex64::new(0.0, s.b);
    let z = s.zeta;
    let pts = [
        ib + 2.0 * gp / w * z,
        ib - 2.0 * g / w * z,
        -ib - 2.0 * g / w * z.conj(),
        -ib + 2.0 * gp / w * z.conj(),
    ];
    Configuration::new(
        Cylinder::unit(),
        pts.iter().map(|p| CylPoint::from_complex(*p)).collect(),
        vec![g, gp, -gp, -g],
    )
}

/// Split variable `(z1 − z2)/2` of the first two vortices, from lifted
/// positions. [`Split4::with_zeta`] reduces the real part further.
pub fn zeta_from_positions(z1: Complex64, z2: Complex64) -> Complex64 {
    (z1 - z2) / 2.0
}

/// Left-hand side of the saddle-ordinate equation; its root between the
/// singular circles is `η_re`.
fn eta_re_equation(b: f64, g: f64, gp: f64, eta: f64) -> (f64, f64) {
    let w = g + gp;
    let k = (g - gp) / w;
    let u = b + 2.0 * gp * eta / w;
    let v = b - 2.0 * g * eta / w;
    let sech2 = |x: f64| 1.0 / x.cosh().powi(2);
    let csch2 = |x: f64| 1.0 / x.sinh().powi(2);
    let f = w * eta.tanh() + (g - gp) * (b - k * eta).tanh() - g / u.tanh() + gp / v.tanh();
    let df = w * sech2(eta) - k * (g - gp) * sech2(b - k * eta) + g * (2.0 * gp / w) * csch2(u) + gp * (2.0 * g / w) * csch2(v);
    (f, df)
}

/// Ordinate of the saddle `ζ_re = π/2 + iη_re`: the height at which the two
/// antipodal vertical pairs travel with the same velocity.
pub fn eta_re(b: f64, gamma: f64, gamma_p: f64) -> Result<f64> {
    check_pair(gamma, gamma_p)?;
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidArgument("b must be positive".into()));
    }
    if gamma == gamma_p {
        return Ok(0.0);
    }
    // the equation is homogeneous in the vorticities
    let (g, gp) = (gamma.abs(), gamma_p.abs());
    let (lo, hi) = singular_circles(b, g, gp);
    let guard = 1e-6;
    safeguarded_newton(|e| eta_re_equation(b, g, gp, e), lo + guard, hi - guard, 1e-15)
}

/// Second-order expansion of `η_re` for `Γ/Γ′ = 1 + ε`, as published:
/// `tanh b sech²b (ε/2 − (1 + sech⁴b/2) ε²/4)`.
pub fn eta_re_perturbative(b: f64, eps: f64) -> f64 {
    let sech2 = 1.0 / b.cosh().powi(2);
    b.tanh() * sech2 * (eps / 2.0 - (1.0 + sech2 * sech2 / 2.0) * eps * eps / 4.0)
}

/// Second-order expansion of `ρ` for `Γ/Γ′ = 1 + ε`, as published:
/// `ρ(b,1) − tanh b sech²b/(1 + cosh²b) · ε²/(4√2)`.
pub fn rho_perturbative(b: f64, eps: f64) -> f64 {
    let rho1 = (b.tanh() / SQRT_2).atanh();
    let sech2 = 1.0 / b.cosh().powi(2);
    rho1 - b.tanh() * sech2 / (1.0 + b.cosh().powi(2)) * eps * eps / (4.0 * SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatrixResult {
    /// Saddle location; its real part is `π/2`.
    pub zeta_re: Complex64,
    /// Distance from `ζ = 0` to the nearest separatrix crossing of the
    /// `η`-axis.
    pub rho: f64,
    /// Signed ordinate of that crossing.
    pub rho_eta: f64,
    pub h_saddle: f64,
}

/// Love threshold: the separatrix through the saddle and where it meets
/// the `η`-axis.
///
/// For `Γ = Γ′` the closed form `√2 tanh ρ = tanh b` is used. Otherwise the
/// level `H(0, η) = H(ζ_re)` is solved on both sides of the origin, between
/// the origin and each singular circle, and the nearer crossing is taken.
pub fn rho_critical(b: f64, gamma: f64, gamma_p: f64) -> Result<SeparatrixResult> {
    check_pair(gamma, gamma_p)?;
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidArgument("b must be positive".into()));
    }
    if gamma == gamma_p {
        let rho = (b.tanh() / SQRT_2).atanh();
        let h_saddle = gamma * gamma / (2.0 * PI) * (b.cosh().powi(2) * b.sinh().powi(2)).ln();
        return Ok(SeparatrixResult {
            zeta_re: Complex64::new(FRAC_PI_2, 0.0),
            rho,
            rho_eta: rho,
            h_saddle,
        });
    }
    let e = eta_re(b, gamma, gamma_p)?;
    let zeta_re = Complex64::new(FRAC_PI_2, e);
    let base = Split4::new(b, gamma, gamma_p, zeta_re)?;
    let h_saddle = reduced_h4(&base)?;
    let (lo, hi) = base.singular_circles();
    let guard = 1e-6;
    let level = |eta: f64| -> (f64, f64) {
        let s = base.with_zeta(Complex64::new(0.0, eta));
        let v = reduced_h4(&s).unwrap_or(f64::NEG_INFINITY) - h_saddle;
        (v, reduced_h4_gradient(&s).1)
    };
    let mut best: Option<f64> = None;
    for (a, z) in [(guard, hi - guard), (-guard, lo + guard)] {
        match safeguarded_newton(level, a, z, 1e-15) {
            Ok(root) => {
                if best.is_none_or(|r| root.abs() < r.abs()) {
                    best = Some(root);
                }
            }
            Err(Error::NoBracket { .. }) => {}
            Err(other) => return Err(other),
        }
    }
    let rho_eta = best.ok_or(Error::NoBracket { lo, hi })?;
    Ok(SeparatrixResult {
        zeta_re,
        rho: rho_eta.abs(),
        rho_eta,
        h_saddle,
    })
}

/// Love threshold in physical units on a cylinder of radius `r`, for pair
/// half-separation `b` given in the same units.
pub fn rho_critical_radius(b: f64, gamma: f64, gamma_p: f64, r: f64) -> Result<f64> {
    Cylinder::new(r)?;
    Ok(r * rho_critical(b / r, gamma, gamma_p)?.rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Inside the separatrix around `ζ = 0`: the pairs leapfrog.
    Leapfrog,
    /// The pairs separate without leapfrogging.
    PairEscape,
    /// Within the tolerance band of the separatrix level.
    NearSeparatrix,
}

/// Band, in units of `ΓΓ′/2π`, around the separatrix level that is reported
/// as [`Regime::NearSeparatrix`].
pub const SEPARATRIX_BAND: f64 = 1e-6;

/// Classify an initial split by comparing its energy with the saddle value.
/// Starts outside the central trunk between the singular circles never
/// leapfrog.
pub fn classify_regime(s: &Split4) -> Result<Regime> {
    let (lo, hi) = s.singular_circles();
    if !(s.zeta.im > lo && s.zeta.im < hi) {
        return Ok(Regime::PairEscape);
    }
    let sep = rho_critical(s.b.abs(), s.gamma, s.gamma_p)?;
    let h = reduced_h4(s)?;
    let band = SEPARATRIX_BAND * (s.gamma * s.gamma_p).abs() / (2.0 * PI);
    let d = h - sep.h_saddle;
    Ok(if d.abs() <= band {
        Regime::NearSeparatrix
    } else if d > 0.0 {
        Regime::Leapfrog
    } else {
        Regime::PairEscape
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    Minimum,
    Maximum,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub zeta: Complex64,
    pub value: f64,
    pub kind: CriticalKind,
}

fn classify(hxx: f64, hyy: f64, hxy: f64) -> CriticalKind {
    let det = hxx * hyy - hxy * hxy;
    let scale = (hxx.abs() + hyy.abs() + hxy.abs()).powi(2);
    if det.abs() <= 1e-12 * scale {
        CriticalKind::Degenerate
    } else if det < 0.0 {
        CriticalKind::Saddle
    } else if hxx > 0.0 {
        CriticalKind::Minimum
    } else {
        CriticalKind::Maximum
    }
}

/// Hessian `(H_ξξ, H_ηη, H_ξη)` of the four-vortex energy by central
/// differences of the analytic gradient.
pub fn reduced_h4_hessian(s: &Split4) -> (f64, f64, f64) {
    let h = 1e-6;
    let at = |dx: f64, dy: f64| reduced_h4_gradient(&s.with_zeta(s.zeta + Complex64::new(dx, dy)));
    let (gxp, gyp) = at(h, 0.0);
    let (gxm, gym) = at(-h, 0.0);
    let (gxu, gyu) = at(0.0, h);
    let (gxd, gyd) = at(0.0, -h);
    let hxx = (gxp - gxm) / (2.0 * h);
    let hyy = (gyu - gyd) / (2.0 * h);
    let hxy = 0.5 * ((gyp - gym) / (2.0 * h) + (gxu - gxd) / (2.0 * h));
    (hxx, hyy, hxy)
}

/// Critical points of the four-vortex energy on the symmetry lines
/// `ξ = 0` and `ξ = π/2` with `η` in `[eta_lo, eta_hi]`.
///
/// The energy is even about both lines, so zeros of `∂H/∂η` there are
/// critical points. Sign changes of `∂H/∂η` are located on a scan of
/// `samples` points and refined by bisection; sign changes across a
/// singularity are discarded.
pub fn split4_symmetry_line_critical_points(
    b: f64,
    gamma: f64,
    gamma_p: f64,
    eta_lo: f64,
    eta_hi: f64,
    samples: usize,
) -> Result<Vec<CriticalPoint>> {
    let base = Split4::new(b, gamma, gamma_p, Complex64::new(0.0, 0.0))?;
    if !(eta_hi > eta_lo) || samples < 3 {
        return Err(Error::InvalidArgument("need eta_lo < eta_hi and at least 3 samples".into()));
    }
    let scale = (gamma * gamma_p).abs() / (2.0 * PI);
    let mut out = Vec::new();
    for xi in [0.0, FRAC_PI_2] {
        let deta = |eta: f64| reduced_h4_gradient(&base.with_zeta(Complex64::new(xi, eta))).1;
        let etas: Vec<f64> = (0..samples)
            .map(|j| eta_lo + (eta_hi - eta_lo) * j as f64 / (samples - 1) as f64)
            .collect();
        let vals: Vec<f64> = etas.iter().map(|e| deta(*e)).collect();
        for j in 0..samples - 1 {
            let (a, c) = (vals[j], vals[j + 1]);
            if !(a.is_finite() && c.is_finite()) || a.signum() == c.signum() {
                continue;
            }
            let root = bisect(deta, etas[j], etas[j + 1], 1e-14)?;
            let s = base.with_zeta(Complex64::new(xi, root));
            let value = match reduced_h4(&s) {
                Ok(v) => v,
                Err(_) => continue,
            };
            // a pole of ∂H/∂η also changes sign; keep only genuine zeros
            let (hxx, hyy, hxy) = reduced_h4_hessian(&s);
            let residual = deta(root).abs();
            if residual > 1e-6 * scale * (1.0 + hyy.abs() * 1e-8) || !value.is_finite() {
                continue;
            }
            out.push(CriticalPoint {
                zeta: s.zeta,
                value,
                kind: classify(hxx, hyy, hxy),
            });
        }
    }
    Ok(out)
}

/// Critical points of the three-vortex energy in a window, by complex
/// Newton on `F′(ζ) = 0` from a grid of seeds. The energy is the real part
/// of a holomorphic function, so every non-degenerate critical point is a
/// saddle.
pub fn split3_critical_points(
    c: Complex64,
    gamma: f64,
    gamma_p: f64,
    window: &Window,
    resolution: (usize, usize),
) -> Result<Vec<CriticalPoint>> {
    let base = Split3::new(c, gamma, gamma_p, Complex64::new(1.0, 0.0))?;
    let (nx, ny) = resolution;
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument("resolution must be at least 2×2".into()));
    }
    let mut out: Vec<CriticalPoint> = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let mut z = Complex64::new(window.xi_at(i, nx), window.eta_at(j, ny));
            let mut ok = false;
            for _ in 0..60 {
                let d1 = h3_holo_derivative(c, gamma, gamma_p, z);
                let d2 = h3_holo_second(c, gamma, gamma_p, z);
                let step = d1 / d2;
                if !(step.re.is_finite() && step.im.is_finite()) {
                    break;
                }
                let step = if step.norm() > 0.5 { step * (0.5 / step.norm()) } else { step };
                z -= step;
                if step.norm() < 1e-14 * z.norm().max(1.0) {
                    ok = h3_holo_derivative(c, gamma, gamma_p, z).norm() < 1e-9;
                    break;
                }
            }
            if !ok || !window.contains(z) {
                continue;
            }
            if out.iter().any(|p| (p.zeta - z).norm() < 1e-8) {
                continue;
            }
            let value = match reduced_h3(&base.with_zeta(z)) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let d2 = h3_holo_second(c, gamma, gamma_p, z);
            let pre = gamma * gamma_p / (2.0 * PI);
            out.push(CriticalPoint {
                zeta: z,
                value,
                kind: classify(pre * d2.re, -pre * d2.re, -pre * d2.im),
            });
        }
    }
    out.sort_by(|a, b| a.zeta.re.total_cmp(&b.zeta.re).then(a.zeta.im.total_cmp(&b.zeta.im)));
    Ok(out)
}

/// Largest saddle value of the three-vortex energy in the window. Level
/// sets of `H` above it that surround `ζ = 0` are closed loops, so it
/// bounds the neighbourhood of relative periodic orbits from below.
pub fn split3_largest_saddle_value(
    c: Complex64,
    gamma: f64,
    gamma_p: f64,
    window: &Window,
    resolution: (usize, usize),
) -> Result<Option<f64>> {
    Ok(split3_critical_points(c, gamma, gamma_p, window, resolution)?
        .into_iter()
        .filter(|p| p.kind == CriticalKind::Saddle)
        .map(|p| p.value)
        .reduce(f64::max))
}

/// Rectangle in the `ζ`-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub xi: (f64, f64),
    pub eta: (f64, f64),
}

impl Window {
    pub fn new(xi: (f64, f64), eta: (f64, f64)) -> Result<Self> {
        if !(xi.1 > xi.0 && eta.1 > eta.0) || ![xi.0, xi.1, eta.0, eta.1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("window bounds must be finite and increasing".into()));
        }
        Ok(Self { xi, eta })
    }

    /// Column `i` of `n`, ascending in `ξ`. Nodes are placed symmetrically
    /// about the window centre, so a window symmetric about zero gives
    /// exactly negated coordinates.
    pub fn xi_at(&self, i: usize, n: usize) -> f64 {
        sym_node(self.xi, i, n)
    }

    pub fn eta_at(&self, j: usize, n: usize) -> f64 {
        sym_node(self.eta, j, n)
    }

    fn contains(&self, z: Complex64) -> bool {
        z.re >= self.xi.0 && z.re <= self.xi.1 && z.im >= self.eta.0 && z.im <= self.eta.1
    }
}

fn sym_node(range: (f64, f64), j: usize, n: usize) -> f64 {
    if n == 1 {
        return 0.5 * (range.0 + range.1);
    }
    let mid = 0.5 * (range.0 + range.1);
    let half = 0.5 * (range.1 - range.0);
    mid + half * (2.0 * j as f64 - (n - 1) as f64) / (n - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelKind {
    Split3 { c: Complex64, gamma: f64, gamma_p: f64 },
    Split4 { b: f64, gamma: f64, gamma_p: f64 },
}

impl LevelKind {
    fn cap(&self) -> f64 {
        let (g, gp) = match *self {
            LevelKind::Split3 { gamma, gamma_p, .. } | LevelKind::Split4 { gamma, gamma_p, .. } => (gamma, gamma_p),
        };
        50.0 * (g * gp).abs() / (2.0 * PI)
    }

    fn eval(&self, z: Complex64) -> Result<f64> {
        match *self {
            LevelKind::Split3 { c, gamma, gamma_p } => reduced_h3(&Split3::new(c, gamma, gamma_p, z)?),
            LevelKind::Split4 { b, gamma, gamma_p } => reduced_h4(&Split4::new(b, gamma, gamma_p, z)?),
        }
    }
}

/// Reduced energy sampled on a grid. Rows run from the top of the window
/// (largest `η`) down; columns run in increasing `ξ`. Cells where the
/// energy diverges or exceeds the cap `50·|ΓΓ′|/2π` in magnitude are
/// masked and hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelGrid {
    pub kind: LevelKind,
    pub window: Window,
    pub n_xi: usize,
    pub n_eta: usize,
    pub values: Vec<Vec<f64>>,
    pub mask: Vec<Vec<bool>>,
}

impl LevelGrid {
    pub fn xi(&self, i: usize) -> f64 {
        self.window.xi_at(i, self.n_xi)
    }

    /// `η` of row `j` (row 0 is the top).
    pub fn eta(&self, j: usize) -> f64 {
        self.window.eta_at(self.n_eta - 1 - j, self.n_eta)
    }
}

pub fn level_grid(kind: LevelKind, window: Window, n_xi: usize, n_eta: usize) -> Result<LevelGrid> {
    if n_xi == 0 || n_eta == 0 {
        return Err(Error::InvalidArgument("grid resolution must be positive".into()));
    }
    // validate parameters once up front
    match kind {
        LevelKind::Split3 { c, gamma, gamma_p } => {
            Split3::new(c, gamma, gamma_p, Complex64::new(0.0, 0.0))?;
        }
        LevelKind::Split4 { b, gamma, gamma_p } => {
            Split4::new(b, gamma, gamma_p, Complex64::new(0.0, 0.0))?;
        }
    }
    let cap = kind.cap();
    let rows: Vec<(Vec<f64>, Vec<bool>)> = (0..n_eta)
        .into_par_iter()
        .map(|j| {
            let eta = window.eta_at(n_eta - 1 - j, n_eta);
            (0..n_xi)
                .map(|i| {
                    let z = Complex64::new(window.xi_at(i, n_xi), eta);
                    match kind.eval(z) {
                        Ok(v) if v.abs() <= cap => (v, false),
                        _ => (f64::NAN, true),
                    }
                })
                .unzip()
        })
        .collect();
    let (values, mask) = rows.into_iter().unzip();
    Ok(LevelGrid {
        kind,
        window,
        n_xi,
        n_eta,
        values,
        mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{config_center_vector, hamiltonian, integrate, velocities, IntegratorConfig, Partition};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn h3_blows_up_at_the_origin() {
        let s = Split3::new(c(0.3, 0.8), 1.0, 2.0, c(1e-3, 0.0)).unwrap();
        let h1 = reduced_h3(&s).unwrap();
        let h2 = reduced_h3(&s.with_zeta(c(1e-6, 0.0))).unwrap();
        assert!(h2 > h1);
        assert_eq!(reduced_h3(&s.with_zeta(c(0.0, 0.0))), Err(Error::SingularSplit));
    }

    #[test]
    fn h3_equal_split_is_even() {
        let s = Split3::new(c(0.2, 1.1), 0.7, 0.7, c(0.4, -0.3)).unwrap();
        let a = reduced_h3(&s).unwrap();
        let b = reduced_h3(&s.with_zeta(-s.zeta)).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn embed3_examples() {
        let s = Split3::new(c(0.0, 1.0), 1.0, 3.0, c(0.01, 0.02)).unwrap();
        let cfg = embed3(&s).unwrap();
        assert!(cfg.total_vorticity().abs() < 1e-15);
        // undo the canonical wrap of the slightly negative abscissa
        let z1 = cfg.z(1) - c(if cfg.z(1).re > PI { 2.0 * PI } else { 0.0 }, 0.0);
        let center = (cfg.z(0) * 1.0 + z1 * 3.0) / 4.0;
        assert!((center - c(0.0, 1.0)).norm() < 1e-15);
        assert!((cfg.z(2) - c(2.0 * PI, -1.0)).norm() < 1e-15 || (cfg.z(2) - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn reduced_energies_match_the_full_hamiltonian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let g = rng.gen_range(0.3..2.0);
            let gp = rng.gen_range(0.3..2.0);
            let base3 = Split3::new(c(rng.gen_range(-1.0..1.0), rng.gen_range(0.5..1.5)), g, gp, c(0.1, 0.0)).unwrap();
            let base4 = Split4::new(rng.gen_range(0.5..1.5), g, gp, c(0.1, 0.0)).unwrap();
            let mut d3 = Vec::new();
            let mut d4 = Vec::new();
            for _ in 0..20 {
                let z = c(rng.gen_range(-1.2..1.2), rng.gen_range(-0.3..0.3));
                let s3 = base3.with_zeta(z);
                d3.push(reduced_h3(&s3).unwrap() - hamiltonian(&embed3(&s3).unwrap()).unwrap());
                let s4 = base4.with_zeta(z);
                d4.push(reduced_h4(&s4).unwrap() - hamiltonian(&embed4(&s4).unwrap()).unwrap());
            }
            for d in [d3, d4] {
                let mean = d.iter().sum::<f64>() / d.len() as f64;
                let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d.len() as f64;
                assert!(var < 1e-20, "variance {var}");
                // the reduction drops no constant at all
                assert!(mean.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn h4_equal_case_closed_form() {
        let (g, b) = (1.3, 0.9);
        for &(xi, eta) in &[(0.4, 0.0), (1.2, 0.3), (-0.7, -0.6), (0.2, 2.5)] {
            let s = Split4::new(b, g, g, c(xi, eta)).unwrap();
            let sx: f64 = f64::sin(xi).powi(2);
            let rhs = (sx + b.sinh().powi(2)) / (sx + f64::sinh(eta).powi(2)) * ((b + eta).sinh() * (b - eta).sinh()).abs();
            let lhs = (2.0 * PI * reduced_h4(&s).unwrap() / (g * g)).exp();
            assert!((lhs - rhs).abs() < 1e-12 * rhs, "{xi} {eta}");
        }
    }

    #[test]
    fn h4_mirror_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let z = c(rng.gen_range(-1.5..1.5), rng.gen_range(-2.0..2.0));
            let a = Split4::new(1.0, 1.5, 1.0, z).unwrap();
            let b = Split4::new(1.0, 1.0, 1.5, z.conj()).unwrap();
            match (reduced_h4(&a), reduced_h4(&b)) {
                (Ok(x), Ok(y)) => assert!((x - y).abs() < 1e-12 * x.abs().max(1.0)),
                (x, y) => assert_eq!(x.is_err(), y.is_err()),
            }
        }
    }

    #[test]
    fn h4_gradient_matches_finite_differences() {
        let s = Split4::new(0.8, 1.4, 0.6, c(0.5, 0.2)).unwrap();
        let (gx, gy) = reduced_h4_gradient(&s);
        let h = 1e-6;
        let f = |dx: f64, dy: f64| reduced_h4(&s.with_zeta(s.zeta + c(dx, dy))).unwrap();
        assert!((gx - (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h)).abs() < 1e-8);
        assert!((gy - (f(0.0, h) - f(0.0, -h)) / (2.0 * h)).abs() < 1e-8);
        let s3 = Split3::new(c(0.3, 0.9), 1.4, 0.6, c(0.5, 0.2)).unwrap();
        let g3 = reduced_h3_gradient(&s3);
        let f3 = |dx: f64, dy: f64| reduced_h3(&s3.with_zeta(s3.zeta + c(dx, dy))).unwrap();
        assert!((g3.re - (f3(h, 0.0) - f3(-h, 0.0)) / (2.0 * h)).abs() < 1e-8);
        assert!((g3.im - (f3(0.0, h) - f3(0.0, -h)) / (2.0 * h)).abs() < 1e-8);
    }

    #[test]
    fn embed4_symmetries() {
        let s = Split4::new(1.0, 1.2, 0.8, c(0.3, 0.1)).unwrap();
        let cfg = embed4(&s).unwrap();
        assert!(cfg.total_vorticity().abs() < 1e-15);
        let part = Partition::new(vec![0, 1], 4).unwrap();
        let v = config_center_vector(&cfg, &part).unwrap();
        // canonical wrapping may move single vortices by 2π, which only
        // affects the real part
        assert!((v.im - 2.0).abs() < 1e-14);
        // z ↦ z̄ with negated vorticities maps vortex k to vortex 3 − k
        for k in 0..4 {
            let a = cfg.z(k).conj();
            let b = cfg.z(3 - k);
            assert!(crate::cylinder::quotient_distance(CylPoint::from_complex(a), CylPoint::from_complex(b), &Cylinder::unit()) < 1e-14);
            assert_eq!(cfg.vorticities()[k], -cfg.vorticities()[3 - k]);
        }
        let aligned = embed4(&s.with_zeta(c(0.0, 0.05))).unwrap();
        assert!(aligned.points().iter().all(|p| p.x.abs() < 1e-15));
    }

    #[test]
    fn eta_re_equal_case_and_sign() {
        assert_eq!(eta_re(1.0, 2.0, 2.0).unwrap(), 0.0);
        let e = eta_re(1.0, 1.3, 1.0).unwrap();
        assert!(e > 0.0);
        assert!(eta_re(1.0, 1.0, 1.3).unwrap() < 0.0);
        // oracle: scan η on ξ = π/2 for equal vortex velocities
        let speed_gap = |eta: f64| {
            let cfg = embed4(&Split4::new(1.0, 1.3, 1.0, c(FRAC_PI_2, eta)).unwrap()).unwrap();
            let v = velocities(&cfg).unwrap();
            v[0].vx - v[1].vx
        };
        let oracle = bisect(speed_gap, -0.5, 0.5, 1e-14).unwrap();
        assert!((oracle - e).abs() < 1e-10, "{oracle} vs {e}");
    }

    #[test]
    fn saddle_is_a_relative_equilibrium() {
        for &(g, gp) in &[(1.3, 1.0), (1.0, 1.7), (2.0, 2.0)] {
            let e = eta_re(1.0, g, gp).unwrap();
            let s = Split4::new(1.0, g, gp, c(FRAC_PI_2, e)).unwrap();
            let v = velocities(&embed4(&s).unwrap()).unwrap();
            for w in &v {
                assert!((*w - v[0]).speed() < 1e-9);
            }
            let (gx, gy) = reduced_h4_gradient(&s);
            assert!(gx.abs() < 1e-8 && gy.abs() < 1e-8);
            let (hxx, hyy, hxy) = reduced_h4_hessian(&s);
            assert_eq!(classify(hxx, hyy, hxy), CriticalKind::Saddle);
        }
    }

    #[test]
    fn eta_re_equation_is_the_saddle_condition() {
        // ∂H/∂η along ξ = π/2 is a negative multiple of the root equation
        let (b, g, gp) = (0.7, 1.6, 0.9);
        for &eta in &[-0.3, 0.1, 0.4] {
            let (f, _) = eta_re_equation(b, g, gp, eta);
            let (_, gy) = reduced_h4_gradient(&Split4::new(b, g, gp, c(FRAC_PI_2, eta)).unwrap());
            let scaled = -(g + gp) / 2.0 * (2.0 * PI / (g * gp)) * gy;
            assert!((scaled - f).abs() < 1e-12 * f.abs().max(1.0), "{scaled} vs {f}");
        }
    }

    #[test]
    fn perturbative_forms() {
        assert_eq!(eta_re_perturbative(1.0, 0.0), 0.0);
        let slope = eta_re_perturbative(1.0, 1e-8) / 1e-8;
        let expect = 1f64.tanh() / 1f64.cosh().powi(2) / 2.0;
        assert!((slope - expect).abs() < 1e-8);
        assert_eq!(rho_perturbative(1.0, 0.0), rho_critical(1.0, 1.0, 1.0).unwrap().rho);
    }

    #[test]
    fn love_threshold() {
        let sep = rho_critical(1.0, 1.0, 1.0).unwrap();
        assert!((SQRT_2 * sep.rho.tanh() - 1f64.tanh()).abs() < 1e-12);
        assert!((sep.rho - 0.602).abs() < 1e-3);
        // the closed form agrees with the level-set definition
        let s = Split4::new(1.0, 1.0, 1.0, c(0.0, sep.rho)).unwrap();
        assert!((reduced_h4(&s).unwrap() - sep.h_saddle).abs() < 1e-12);
        let plane = rho_critical_radius(1.0, 1.0, 1.0, 1e3).unwrap();
        assert!((plane - 1.0 / SQRT_2).abs() < 1e-5);
    }

    #[test]
    fn rho_for_unequal_pairs_lies_on_the_saddle_level() {
        let sep = rho_critical(1.0, 1.2, 1.0).unwrap();
        assert!((sep.zeta_re.re - FRAC_PI_2).abs() < 1e-15);
        let s = Split4::new(1.0, 1.2, 1.0, c(0.0, sep.rho_eta)).unwrap();
        assert!((reduced_h4(&s).unwrap() - sep.h_saddle).abs() < 1e-11);
        assert!(sep.rho > 0.0);
        // the crossing on the other side is farther away
        let (lo, _) = s.singular_circles();
        let other = bisect(
            |e| reduced_h4(&s.with_zeta(c(0.0, e))).unwrap_or(f64::NEG_INFINITY) - sep.h_saddle,
            -sep.rho_eta.signum() * 1e-6,
            if sep.rho_eta > 0.0 { lo + 1e-6 } else { -lo },
            1e-14,
        );
        if let Ok(o) = other {
            assert!(o.abs() >= sep.rho - 1e-12);
        }
    }

    #[test]
    fn regimes() {
        let sep = rho_critical(1.0, 1.0, 1.0).unwrap();
        let at = |eta: f64| classify_regime(&Split4::new(1.0, 1.0, 1.0, c(0.0, eta)).unwrap()).unwrap();
        assert_eq!(at(0.9 * sep.rho), Regime::Leapfrog);
        assert_eq!(at(1.1 * sep.rho), Regime::PairEscape);
        assert_eq!(at(sep.rho), Regime::NearSeparatrix);
        assert_eq!(at(3.0), Regime::PairEscape);
    }

    #[test]
    fn critical_points_in_the_upper_trunk() {
        let (b, g, gp) = (1.0, 1.5, 1.0);
        let (_, upper) = singular_circles(b, g, gp);
        let pts = split4_symmetry_line_critical_points(b, g, gp, upper + 1e-3, 12.0, 4000).unwrap();
        let saddles: Vec<_> = pts.iter().filter(|p| p.kind == CriticalKind::Saddle).collect();
        assert_eq!(saddles.len(), 2, "{pts:?}");
        assert!(saddles.iter().any(|p| p.zeta.re == 0.0));
        assert!(saddles.iter().any(|p| p.zeta.re == FRAC_PI_2));
        assert_eq!(pts.iter().filter(|p| p.kind == CriticalKind::Maximum).count(), 1);
    }

    #[test]
    fn monotone_strip_in_the_upper_trunk() {
        let (b, g, gp) = (1.0, 1.5, 1.0);
        let (_, upper) = singular_circles(b, g, gp);
        for k in 1..40 {
            let eta = upper + 0.25 * k as f64;
            let signs: Vec<f64> = (1..50)
                .map(|i| {
                    let xi = FRAC_PI_2 * i as f64 / 50.0;
                    reduced_h4_gradient(&Split4::new(b, g, gp, c(xi, eta)).unwrap()).0
                })
                .filter(|v| v.is_finite())
                .map(f64::signum)
                .collect();
            assert!(signs.windows(2).all(|w| w[0] == w[1]), "η = {eta}");
        }
    }

    #[test]
    fn equal_case_trunks_have_no_critical_points() {
        let b = 1.0;
        for k in 1..30 {
            for sign in [1.0, -1.0] {
                let eta = sign * (b + 0.2 * k as f64);
                for i in 0..20 {
                    let xi = -FRAC_PI_2 + PI * (i as f64 + 0.5) / 20.0;
                    let (gx, gy) = reduced_h4_gradient(&Split4::new(b, 1.0, 1.0, c(xi, eta)).unwrap());
                    assert!(gx.hypot(gy) > 1e-6 * (-2.0 * eta.abs()).exp(), "{xi} {eta}");
                }
            }
        }
        let pts = split4_symmetry_line_critical_points(b, 1.0, 1.0, b + 1e-3, 15.0, 3000).unwrap();
        assert!(pts.is_empty(), "{pts:?}");
    }

    #[test]
    fn singularity_inventory() {
        let s = Split4::new(1.0, 1.5, 1.0, c(0.0, 0.0)).unwrap();
        let (lo, hi) = s.singular_circles();
        let h = |z: Complex64| reduced_h4(&s.with_zeta(z)).unwrap();
        assert!(h(c(0.0, 1e-6)) > h(c(0.0, 1e-3)));
        assert!(h(c(0.3, hi - 1e-6)) < h(c(0.3, hi - 1e-3)));
        assert!(h(c(0.3, lo + 1e-6)) < h(c(0.3, lo + 1e-3)));
        // Γ ~ −Γ′ and Γ′ ~ −Γ collide at ξ = 0, η = b(Γ+Γ′)/(Γ−Γ′)
        let eta_c = 1.0 * 2.5 / 0.5;
        assert!(h(c(0.0, eta_c + 1e-6)) < h(c(0.0, eta_c + 1e-3)));
        let s3 = Split3::new(c(0.0, 1.0), 1.0, 2.0, c(0.3, 0.0)).unwrap();
        assert!(reduced_h3(&s3.with_zeta(c(1e-7, 0.0))).unwrap() > reduced_h3(&s3).unwrap());
    }

    #[test]
    fn split3_saddles_are_relative_equilibria() {
        let window = Window::new((-2.0, 2.0), (-1.5, 1.5)).unwrap();
        let (cc, g, gp) = (c(0.0, 0.8), 1.0, 2.0);
        let pts = split3_critical_points(cc, g, gp, &window, (24, 18)).unwrap();
        assert!(!pts.is_empty());
        for p in &pts {
            assert_eq!(p.kind, CriticalKind::Saddle);
            let v = velocities(&embed3(&Split3::new(cc, g, gp, p.zeta).unwrap()).unwrap()).unwrap();
            for w in &v {
                assert!((*w - v[0]).speed() < 1e-9);
            }
        }
        let top = split3_largest_saddle_value(cc, g, gp, &window, (24, 18)).unwrap().unwrap();
        assert!(pts.iter().all(|p| p.value <= top));
    }

    #[test]
    fn grid_mirror_and_asymptote() {
        let w = Window::new((-FRAC_PI_2, FRAC_PI_2), (-10.0, 10.0)).unwrap();
        let a = level_grid(LevelKind::Split4 { b: 1.0, gamma: 1.5, gamma_p: 1.0 }, w, 41, 81).unwrap();
        let b = level_grid(LevelKind::Split4 { b: 1.0, gamma: 1.0, gamma_p: 1.5 }, w, 41, 81).unwrap();
        for j in 0..81 {
            assert_eq!(a.eta(j), -b.eta(80 - j));
            for i in 0..41 {
                let (x, y) = (a.values[j][i], b.values[80 - j][i]);
                assert_eq!(a.mask[j][i], b.mask[80 - j][i]);
                if !a.mask[j][i] {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
        let e = level_grid(LevelKind::Split4 { b: 1.0, gamma: 1.0, gamma_p: 1.0 }, w, 41, 81).unwrap();
        for j in [0, 80] {
            for i in 0..41 {
                let xi = e.xi(i);
                let expect = (xi.sin().powi(2) + 1f64.sinh().powi(2)).ln();
                assert!((2.0 * PI * e.values[j][i] - expect).abs() < 1e-6);
            }
        }
        // η = 0 row against the closed form
        let mid = &e.values[40];
        for (i, value) in mid.iter().enumerate() {
            let xi = e.xi(i);
            if xi.sin().abs() < 1e-9 {
                assert!(e.mask[40][i]);
                continue;
            }
            let s2 = xi.sin().powi(2);
            let expect = ((s2 + 1f64.sinh().powi(2)) / s2 * 1f64.sinh().powi(2)).ln() / (2.0 * PI);
            assert!((value - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_energy_is_conserved_along_the_full_flow() {
        let s = Split4::new(1.0, 1.2, 1.0, c(0.0, 0.3)).unwrap();
        let cfg = embed4(&s).unwrap();
        let traj = integrate(&cfg, 5.0, &IntegratorConfig::default()).unwrap();
        let h0 = reduced_h4(&s).unwrap();
        for i in 0..traj.len() {
            let zs = traj.zs(i);
            let z = zeta_from_positions(zs[0], zs[1]);
            let h = reduced_h4(&s.with_zeta(z)).unwrap();
            assert!((h - h0).abs() < 1e-8);
        }
        let s3 = Split3::new(c(0.0, 1.0), 1.0, 2.0, c(0.2, 0.1)).unwrap();
        let traj = integrate(&embed3(&s3).unwrap(), 5.0, &IntegratorConfig::default()).unwrap();
        let h0 = reduced_h3(&s3).unwrap();
        for i in 0..traj.len() {
            let zs = traj.zs(i);
            // the pair centre and the third vortex move together, so the
            // offset c is read off the current positions
            let center = (zs[0] * 1.0 + zs[1] * 2.0) / 3.0;
            let cc = (center - zs[2]) / 2.0;
            let h = reduced_h3(&Split3::new(cc, 1.0, 2.0, zeta_from_positions(zs[0], zs[1])).unwrap()).unwrap();
            assert!((h - h0).abs() < 1e-8);
        }
    }
}
