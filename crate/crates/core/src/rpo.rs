//! Relative equilibria and relative periodic orbits: detection from
//! trajectories, winding of the split variable, the drifting vortex pair and
//! the vortex-street family.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cylinder::{shape_distance, Configuration, CylPoint, Cylinder};
use crate::dynamics::{flow, velocities, velocity_raw, Trajectory, Velocity};
use crate::error::{Error, Result};
use crate::kernel::cotan;
use crate::roots::golden_min;

/// Default closure tolerance for period detection, relative to `r`.
pub const DEFAULT_PERIOD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RelativePeriodReport {
    /// Period; `0` when the shape never leaves the tolerance band (a
    /// relative equilibrium, see `continuous`).
    pub period: f64,
    /// Mean lifted displacement of the vortices over one period.
    pub drift: Complex64,
    /// Shape distance between the start and the state one period later.
    pub residual: f64,
    /// Change of `arg((z_0 − z_1)/2)` over one period.
    pub winding: Option<f64>,
    /// Every sampled time closes the shape.
    pub continuous: bool,
}

/// Shape distance of every sample to the first one.
pub fn closure_distances(traj: &Trajectory) -> Result<Vec<f64>> {
    if traj.is_empty() {
        return Err(Error::Empty);
    }
    let first = traj.configuration(0);
    (0..traj.len())
        .into_par_iter()
        .map(|i| shape_distance(&traj.configuration(i), &first))
        .collect()
}

/// Smallest time after which the configuration returns to the translation
/// orbit of its initial state, to within `tol`.
///
/// The sampled closure distance is scanned for its first local minimum
/// after it has risen above half its maximum; the minimum is then refined
/// on the continuous flow by golden-section search between the neighbouring
/// samples. Returns `None` when no closure within `tol` is found.
pub fn detect_relative_period(traj: &Trajectory, tol: f64) -> Result<Option<RelativePeriodReport>> {
    if traj.len() < 3 {
        return Err(Error::InvalidArgument("period detection needs at least 3 samples".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let d = closure_distances(traj)?;
    let dmax = d.iter().copied().fold(0.0, f64::max);
    if dmax < tol {
        return Ok(Some(RelativePeriodReport {
            period: 0.0,
            drift: Complex64::new(0.0, 0.0),
            residual: dmax,
            winding: None,
            continuous: true,
        }));
    }
    let gate = 0.5 * dmax;
    let Some(risen) = d.iter().position(|v| *v > gate) else {
        return Ok(None);
    };
    let cyl = *traj.cylinder();
    let gammas = traj.vorticities();
    let icfg = traj.integrator();
    let first = traj.configuration(0);
    let s0 = &traj.samples()[0];

    for i in risen + 1..d.len() - 1 {
        if !(d[i] <= d[i - 1] && d[i] <= d[i + 1] && d[i] < gate) {
            continue;
        }
        let start = &traj.samples()[i - 1];
        let span = traj.time(i + 1) - start.t;
        let at = |dt: f64| -> Option<(Vec<f64>, Vec<f64>)> {
            if dt <= 0.0 {
                Some((start.x.clone(), start.y.clone()))
            } else {
                flow(cyl, gammas, &start.x, &start.y, dt, icfg).ok()
            }
        };
        let distance = |dt: f64| -> f64 {
            match at(dt) {
                Some((x, y)) => {
                    let pts = x.iter().zip(&y).map(|(a, b)| CylPoint::new(*a, *b)).collect();
                    Configuration::new(cyl, pts, gammas.to_vec())
                        .and_then(|c| shape_distance(&c, &first))
                        .unwrap_or(f64::INFINITY)
                }
                None => f64::INFINITY,
            }
        };
        let (dt, residual) = golden_min(distance, 0.0, span, 1e-13 * traj.time(i).abs().max(1.0));
        if residual >= tol {
            continue;
        }
        let period = start.t + dt - s0.t;
        let (x, y) = at(dt).ok_or(Error::NonFinite("refined state"))?;
        let n = x.len() as f64;
        let dx = x.iter().zip(&s0.x).map(|(a, b)| a - b).sum::<f64>() / n;
        let dy = y.iter().zip(&s0.y).map(|(a, b)| a - b).sum::<f64>() / n;
        let winding = if x.len() >= 2 {
            let mut zetas: Vec<Complex64> = traj.samples()[..i]
                .iter()
                .map(|s| Complex64::new(s.x[0] - s.x[1], s.y[0] - s.y[1]) / 2.0)
                .collect();
            zetas.push(Complex64::new(x[0] - x[1], y[0] - y[1]) / 2.0);
            Some(winding_angle(&zetas)?.radians)
        } else {
            None
        };
        return Ok(Some(RelativePeriodReport {
            period,
            drift: Complex64::new(dx, dy),
            residual,
            winding,
            continuous: false,
        }));
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    /// Accumulated change of the argument.
    pub radians: f64,
    /// Some sample came close to `ζ = 0` or an increment was close to `π`,
    /// so the count may have skipped or invented a turn.
    pub unreliable: bool,
}

/// Total change of `arg ζ` along a sampled series, summing increments
/// wrapped into `(−π, π]`.
pub fn winding_angle(zetas: &[Complex64]) -> Result<Winding> {
    if zetas.is_empty() {
        return Err(Error::Empty);
    }
    if zetas.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite("split variable"));
    }
    let scale = zetas.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut unreliable = zetas.iter().any(|z| z.norm() <= 1e-9 * scale);
    let mut total = 0.0;
    for w in zetas.windows(2) {
        let step = (w[1] / w[0]).arg();
        if step.abs() > 0.9 * PI {
            unreliable = true;
        }
        total += step;
    }
    Ok(Winding {
        radians: total,
        unreliable,
    })
}

/// `(z_i − z_j)/2` at every sample, from lifted positions.
pub fn zeta_series(traj: &Trajectory, i: usize, j: usize) -> Result<Vec<Complex64>> {
    let n = traj.vorticities().len();
    for k in [i, j] {
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, len: n });
        }
    }
    Ok((0..traj.len())
        .map(|s| {
            let zs = traj.zs(s);
            (zs[i] - zs[j]) / 2.0
        })
        .collect())
}

/// Direction of motion of a drifting pair, as `dy/dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    Finite(f64),
    /// The vortices share a height and are not antipodal: straight up or
    /// down.
    Vertical,
    /// Antipodal at one height: the pair is at rest.
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDrift {
    pub velocity: Velocity,
    pub slope: Slope,
}

/// Common velocity of `Γ` at `z1` and `−Γ` at `z2`, and its slope
/// `−sin((x₂−x₁)/r) / sinh((y₂−y₁)/r)`.
pub fn vortex_pair_drift(z1: CylPoint, z2: CylPoint, gamma: f64, cyl: &Cylinder) -> Result<PairDrift> {
    let cfg = Configuration::new(*cyl, vec![z1, z2], vec![gamma, -gamma])?;
    let r = cyl.radius();
    let (xs, ys): (Vec<f64>, Vec<f64>) = cfg.points().iter().map(|p| (p.x, p.y)).unzip();
    let v1 = velocity_raw(&xs, &ys, cfg.vorticities(), r, 0);
    let v2 = velocity_raw(&xs, &ys, cfg.vorticities(), r, 1);
    let velocity = Velocity::new(0.5 * (v1.vx + v2.vx), 0.5 * (v1.vy + v2.vy));
    let s = ((z2.x - z1.x) / r).sin();
    let sh = ((z2.y - z1.y) / r).sinh();
    let slope = if sh != 0.0 {
        Slope::Finite(-s / sh)
    } else if s.abs() > 1e-15 {
        Slope::Vertical
    } else {
        Slope::Undefined
    };
    Ok(PairDrift { velocity, slope })
}

/// Two staggered rows: `+Γ` at `ib + 2πrk/n` and `−Γ` at
/// `a − ib + 2πrk/n`, `k = 0, …, n−1`. The `+Γ` row comes first.
pub fn vortex_street_family(n: usize, a: f64, b: f64, gamma: f64, cyl: &Cylinder) -> Result<Configuration> {
    if n == 0 {
        return Err(Error::InvalidArgument("a street needs n ≥ 1".into()));
    }
    let step = cyl.circumference() / n as f64;
    let mut points = Vec::with_capacity(2 * n);
    for k in 0..n {
        points.push(CylPoint::new(step * k as f64, b));
    }
    for k in 0..n {
        points.push(CylPoint::new(a + step * k as f64, -b));
    }
    let mut gammas = vec![gamma; n];
    gammas.extend(std::iter::repeat_n(-gamma, n));
    Configuration::new(*cyl, points, gammas)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeEquilibriumCheck {
    pub is_relative_equilibrium: bool,
    pub common_velocity: Velocity,
    /// Largest deviation of a vortex velocity from the mean.
    pub spread: f64,
    /// With non-zero total vorticity a common motion must be rest; false
    /// flags a violation.
    pub consistent: bool,
}

/// Whether all vortices move with one common velocity.
pub fn verify_relative_equilibrium(config: &Configuration, tol: f64) -> Result<RelativeEquilibriumCheck> {
    let v = velocities(config)?;
    let n = v.len() as f64;
    let mean = Velocity::new(v.iter().map(|w| w.vx).sum::<f64>() / n, v.iter().map(|w| w.vy).sum::<f64>() / n);
    let spread = v.iter().map(|w| (*w - mean).speed()).fold(0.0, f64::max);
    let is_re = spread < tol;
    let scale: f64 = config.vorticities().iter().map(|g| g.abs()).sum();
    let neutral = config.total_vorticity().abs() <= 1e-12 * scale;
    let consistent = !is_re || neutral || mean.speed() < tol;
    Ok(RelativeEquilibriumCheck {
        is_relative_equilibrium: is_re,
        common_velocity: mean,
        spread,
        consistent,
    })
}

/// `(1/n) Σ_{l=1}^{n} cot((z + πl)/n)`, which equals `cot z`.
pub fn cotan_average(z: Complex64, n: usize) -> Complex64 {
    let sum: Complex64 = (1..=n).map(|l| cotan((z + PI * l as f64) / n as f64)).sum();
    sum / n as f64
}
