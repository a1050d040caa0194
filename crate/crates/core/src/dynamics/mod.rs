//! Hamiltonian, velocity field and first integrals of point vortices on a
//! cylinder, plus time integration.
//!
//! With `z_k = x_k + i y_k` and radius `r`,
//!
//! ```text
//! H = −(1/4π) Σ_{k<l} Γ_k Γ_l ln( sin²((x_k−x_l)/2r) + sinh²((y_k−y_l)/2r) )
//! ```
//!
//! and `Γ_k ẋ_k = ∂H/∂y_k`, `Γ_k ẏ_k = −∂H/∂x_k`.

mod integrator;
mod trajectory;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use integrator::{flow, integrate, integrate_lifted, IntegrationFailure, IntegratorConfig, OutputMode, Scheme};
pub use trajectory::{fmt17, Sample, Trajectory};

use crate::cylinder::{quotient_distance, Configuration, CylPoint, Cylinder, COLLISION_EXCLUSION};
use crate::error::{Error, Result};
use crate::kernel::{cotan, log_sin_sq, pair_field};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Velocity {
    pub vx: f64,
    pub vy: f64,
}

impl Velocity {
    pub const ZERO: Self = Self { vx: 0.0, vy: 0.0 };

    pub fn new(vx: f64, vy: f64) -> Self {
        Self { vx, vy }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.vx, self.vy)
    }
}

impl std::ops::Sub for Velocity {
    type Output = Velocity;
    fn sub(self, o: Velocity) -> Velocity {
        Velocity::new(self.vx - o.vx, self.vy - o.vy)
    }
}

/// Energy of a configuration.
pub fn hamiltonian(config: &Configuration) -> Result<f64> {
    let r = config.cylinder().radius();
    check_separation(config.points(), config.cylinder())?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = config.points().iter().map(|p| (p.x, p.y)).unzip();
    Ok(hamiltonian_raw(&xs, &ys, config.vorticities(), r))
}

pub(crate) fn hamiltonian_raw(xs: &[f64], ys: &[f64], gammas: &[f64], r: f64) -> f64 {
    let mut sum = 0.0;
    for k in 0..xs.len() {
        for l in k + 1..xs.len() {
            let a = (xs[k] - xs[l]) / (2.0 * r);
            let h = (ys[k] - ys[l]) / (2.0 * r);
            sum += gammas[k] * gammas[l] * log_sin_sq(a, h);
        }
    }
    -sum / (4.0 * PI)
}

/// Velocity of vortex `k`.
pub fn velocity(config: &Configuration, k: usize) -> Result<Velocity> {
    if k >= config.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: config.len(),
        });
    }
    check_separation(config.points(), config.cylinder())?;
    let r = config.cylinder().radius();
    let (xs, ys): (Vec<f64>, Vec<f64>) = config.points().iter().map(|p| (p.x, p.y)).unzip();
    Ok(velocity_raw(&xs, &ys, config.vorticities(), r, k))
}

/// Velocities of every vortex.
pub fn velocities(config: &Configuration) -> Result<Vec<Velocity>> {
    check_separation(config.points(), config.cylinder())?;
    let r = config.cylinder().radius();
    let (xs, ys): (Vec<f64>, Vec<f64>) = config.points().iter().map(|p| (p.x, p.y)).unzip();
    Ok((0..config.len())
        .map(|k| velocity_raw(&xs, &ys, config.vorticities(), r, k))
        .collect())
}

pub(crate) fn velocity_raw(xs: &[f64], ys: &[f64], gammas: &[f64], r: f64, k: usize) -> Velocity {
    let mut u = 0.0;
    let mut v = 0.0;
    for l in 0..xs.len() {
        if l == k {
            continue;
        }
        let (sh, s) = pair_field((xs[k] - xs[l]) / (2.0 * r), (ys[k] - ys[l]) / (2.0 * r));
        u += gammas[l] * sh;
        v += gammas[l] * s;
    }
    let pre = 1.0 / (8.0 * PI * r);
    Velocity::new(-pre * u, pre * v)
}

/// Velocity of a passive tracer at `p`, summed from the complex form
/// `dz/dt = (i/4πr) Σ Γ_l cot((z̄ − z̄_l)/2r)`.
pub fn induced_velocity_at(config: &Configuration, p: CylPoint) -> Result<Velocity> {
    let cyl = config.cylinder();
    let guard = COLLISION_EXCLUSION * cyl.radius();
    for (index, q) in config.points().iter().enumerate() {
        let distance = quotient_distance(p, *q, cyl);
        if distance < guard {
            return Err(Error::SingularPoint { index, distance });
        }
    }
    Ok(induced_raw(config, p.to_complex()))
}

pub(crate) fn induced_raw(config: &Configuration, z: Complex64) -> Velocity {
    let r = config.cylinder().radius();
    let mut sum = Complex64::new(0.0, 0.0);
    for (q, g) in config.points().iter().zip(config.vorticities()) {
        let w = (z - q.to_complex()).conj() / (2.0 * r);
        sum += *g * cotan(w);
    }
    let dz = Complex64::i() * sum / (4.0 * PI * r);
    Velocity::new(dz.re, dz.im)
}

/// `Σ Γ_k z_k` over lifted positions.
pub fn momentum(xs: &[f64], ys: &[f64], gammas: &[f64]) -> Complex64 {
    xs.iter()
        .zip(ys)
        .zip(gammas)
        .fold(Complex64::new(0.0, 0.0), |acc, ((x, y), g)| acc + *g * Complex64::new(*x, *y))
}

/// Two disjoint groups of vortex indices covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    first: Vec<usize>,
    second: Vec<usize>,
}

impl Partition {
    /// `first` lists the indices of one group; the other group is the
    /// complement in `0..n`.
    pub fn new(first: Vec<usize>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for &i in &first {
            if i >= n {
                return Err(Error::InvalidPartition("index out of range"));
            }
            if seen[i] {
                return Err(Error::InvalidPartition("repeated index"));
            }
            seen[i] = true;
        }
        let second: Vec<usize> = (0..n).filter(|i| !seen[*i]).collect();
        if first.is_empty() || second.is_empty() {
            return Err(Error::InvalidPartition("both groups must be non-empty"));
        }
        Ok(Self { first, second })
    }

    pub fn first(&self) -> &[usize] {
        &self.first
    }

    pub fn second(&self) -> &[usize] {
        &self.second
    }
}

/// Vector from the centre of vorticity of the second group to that of the
/// first, for a zero-total-vorticity system. `zs` are lifted positions.
pub fn center_vector(zs: &[Complex64], gammas: &[f64], part: &Partition) -> Result<Complex64> {
    let scale: f64 = gammas.iter().map(|g| g.abs()).sum();
    let total: f64 = gammas.iter().sum();
    if total.abs() > 1e-12 * scale {
        return Err(Error::InvalidPartition("total vorticity must vanish"));
    }
    let center = |idx: &[usize]| -> Result<Complex64> {
        let g: f64 = idx.iter().map(|&i| gammas[i]).sum();
        if g.abs() <= 1e-12 * scale {
            return Err(Error::InvalidPartition("group vorticity sums to zero"));
        }
        Ok(idx.iter().map(|&i| gammas[i] * zs[i]).sum::<Complex64>() / g)
    };
    Ok(center(part.first())? - center(part.second())?)
}

/// [`center_vector`] on the canonical positions of a configuration.
pub fn config_center_vector(config: &Configuration, part: &Partition) -> Result<Complex64> {
    let zs: Vec<Complex64> = (0..config.len()).map(|k| config.z(k)).collect();
    center_vector(&zs, config.vorticities(), part)
}

fn check_separation(points: &[CylPoint], cyl: &Cylinder) -> Result<()> {
    let guard = COLLISION_EXCLUSION * cyl.radius();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let distance = quotient_distance(points[i], points[j], cyl);
            if distance < guard {
                return Err(Error::Collision { i, j, distance });
            }
        }
    }
    Ok(())
}
