//! Equilibria: rings of same-sign vortices on a horizontal circle, the
//! spectral certificate for their Hessians, and three-vortex equilibria
//! built from a stagnation point of a two-vortex field.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::cylinder::{quotient_distance, Configuration, CylPoint, Cylinder};
use crate::dynamics::{hamiltonian_raw, velocities};
use crate::error::{Error, Result};
use crate::kernel::cotan;

/// Order of the vortices around the circle.
///
/// Stored canonically: it starts at vortex 0 and, for three or more
/// vortices, vortex 1 comes before vortex `N − 1`. A cyclic order and its
/// reflection describe the same connected component of ring
/// configurations, so they share a canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CyclicOrder(Vec<usize>);

impl CyclicOrder {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut seen = vec![false; n];
        for &k in &order {
            if k >= n || seen[k] {
                return Err(Error::InvalidArgument(format!("{order:?} is not a permutation of 0..{n}")));
            }
            seen[k] = true;
        }
        let start = order.iter().position(|&k| k == 0).unwrap();
        let mut c: Vec<usize> = order[start..].iter().chain(&order[..start]).copied().collect();
        if n >= 3 {
            let p1 = c.iter().position(|&k| k == 1).unwrap();
            let plast = c.iter().position(|&k| k == n - 1).unwrap();
            if p1 > plast {
                c[1..].reverse();
            }
        }
        Ok(Self(c))
    }

    /// `0, 1, …, N−1`.
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub configuration: Configuration,
    /// Largest vortex speed of the full two-dimensional field.
    pub residual: f64,
    /// Eigenvalues (ascending) of the Hessian of `H` restricted to the
    /// horizontal circle, in all `N` coordinates `x_k`.
    pub hessian_spectrum: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Zero simple eigenvalue, the rest positive, residual below tolerance.
    pub certified: bool,
}

/// Default speed tolerance for a ring equilibrium to count as certified.
pub const RING_TOLERANCE: f64 = 1e-9;

const NEWTON_MAX_ITER: usize = 200;

/// The unique equilibrium (up to translation) of same-sign vortices on the
/// circle `y = 0` in the given cyclic order, with the first vortex of the
/// order at `x = 0`.
///
/// Non-convergence is reported through `converged = false`, with the last
/// iterate in `configuration`.
pub fn ring_equilibrium(vorticities: &[f64], order: &CyclicOrder, cyl: &Cylinder) -> Result<EquilibriumResult> {
    let n = vorticities.len();
    let c = cyl.circumference();
    let start: Vec<f64> = (1..n).map(|j| c * j as f64 / n as f64).collect();
    ring_equilibrium_from(vorticities, order, cyl, &start)
}

/// Same as [`ring_equilibrium`] from an explicit start: `start[j−1]` is the
/// position of the `j`-th vortex of the order, strictly increasing in
/// `(0, 2πr)`.
pub fn ring_equilibrium_from(
    vorticities: &[f64],
    order: &CyclicOrder,
    cyl: &Cylinder,
    start: &[f64],
) -> Result<EquilibriumResult> {
    let n = vorticities.len();
    check_ring_input(vorticities, order)?;
    if start.len() + 1 != n {
        return Err(Error::LengthMismatch {
            points: start.len() + 1,
            vorticities: n,
        });
    }
    let r = cyl.radius();
    let c = cyl.circumference();
    if !feasible(start, c) {
        return Err(Error::InvalidArgument("start positions must increase strictly inside (0, 2πr)".into()));
    }
    let ord = order.as_slice();
    let g_ord: Vec<f64> = ord.iter().map(|&k| vorticities[k]).collect();
    let ys = vec![0.0; n];
    let energy = |u: &[f64]| -> f64 {
        let xs: Vec<f64> = std::iter::once(0.0).chain(u.iter().copied()).collect();
        hamiltonian_raw(&xs, &ys, &g_ord, r)
    };
    let scale: f64 = g_ord.iter().map(|g| g.abs()).sum::<f64>().powi(2) / (4.0 * PI * r);
    let gtol = 1e-12 * scale;

    let mut u = start.to_vec();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < NEWTON_MAX_ITER {
        let xs: Vec<f64> = std::iter::once(0.0).chain(u.iter().copied()).collect();
        let grad = ring_gradient(&xs, &g_ord, r);
        let g = DVector::from_iterator(n - 1, grad[1..].iter().copied());
        if g.amax() < gtol {
            converged = true;
            break;
        }
        iterations += 1;
        let hess = ring_hessian(&xs, &g_ord, r);
        let hs = hess.view((1, 1), (n - 1, n - 1)).into_owned();
        let dir = match hs.cholesky() {
            Some(ch) => -ch.solve(&g),
            None => -g.clone(),
        };
        let slope = g.dot(&dir);
        let e0 = energy(&u);
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(dir.iter()).map(|(a, d)| a + alpha * d).collect();
            if feasible(&trial, c) {
                let e1 = energy(&trial);
                // near the minimum energy differences drown in rounding; the
                // full Newton step is then taken as long as it stays feasible
                let tiny = (e1 - e0).abs() <= 1e-13 * e0.abs().max(scale);
                if e1 <= e0 + 1e-4 * alpha * slope || (tiny && alpha == 1.0) {
                    u = trial;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }

    let mut points = vec![CylPoint::new(0.0, 0.0); n];
    points[ord[0]] = CylPoint::new(0.0, 0.0);
    for (j, x) in u.iter().enumerate() {
        points[ord[j + 1]] = CylPoint::new(*x, 0.0);
    }
    let configuration = Configuration::new(*cyl, points, vorticities.to_vec())?;
    let residual = max_speed(&configuration)?;
    let xs: Vec<f64> = configuration.points().iter().map(|p| p.x).collect();
    let hessian = ring_hessian(&xs, vorticities, r);
    let cert = gershgorin_certificate(&hessian);
    let hessian_spectrum = cert.eigenvalues().to_vec();
    let top = hessian_spectrum.last().copied().unwrap_or(0.0).abs().max(scale / r);
    let zero_ok = hessian_spectrum[0].abs() <= 1e-10 * top.max(1.0);
    let certified = converged && residual < RING_TOLERANCE && cert.is_certified() && zero_ok;
    Ok(EquilibriumResult {
        configuration,
        residual,
        hessian_spectrum,
        converged,
        iterations,
        certified,
    })
}

/// Solve from several starts in parallel.
pub fn ring_equilibrium_multistart(
    vorticities: &[f64],
    order: &CyclicOrder,
    cyl: &Cylinder,
    starts: &[Vec<f64>],
) -> Result<Vec<EquilibriumResult>> {
    starts
        .par_iter()
        .map(|s| ring_equilibrium_from(vorticities, order, cyl, s))
        .collect()
}

fn check_ring_input(vorticities: &[f64], order: &CyclicOrder) -> Result<()> {
    let n = vorticities.len();
    if n < 2 {
        return Err(Error::InvalidArgument("a ring needs at least two vortices".into()));
    }
    if order.len() != n {
        return Err(Error::LengthMismatch {
            points: order.len(),
            vorticities: n,
        });
    }
    if let Some(k) = vorticities.iter().position(|g| *g == 0.0) {
        return Err(Error::ZeroVorticity(k));
    }
    if vorticities.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("vorticity"));
    }
    let s = vorticities[0].signum();
    if vorticities.iter().any(|g| g.signum() != s) {
        return Err(Error::InvalidArgument("ring equilibria need vorticities of one sign".into()));
    }
    Ok(())
}

fn feasible(u: &[f64], c: f64) -> bool {
    let mut prev = 0.0;
    for &x in u {
        if !(x > prev) {
            return false;
        }
        prev = x;
    }
    prev < c
}

fn max_speed(config: &Configuration) -> Result<f64> {
    Ok(velocities(config)?.iter().map(|v| v.speed()).fold(0.0, f64::max))
}

/// `∂H/∂x_k` for vortices on one horizontal circle.
pub fn ring_gradient(xs: &[f64], gammas: &[f64], r: f64) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|k| {
            let s: f64 = (0..n)
                .filter(|&l| l != k)
                .map(|l| gammas[l] * cotan(Complex64::new((xs[k] - xs[l]) / (2.0 * r), 0.0)).re)
                .sum();
            -gammas[k] * s / (4.0 * PI * r)
        })
        .collect()
}

/// Hessian `∂²H/∂x_k∂x_l` for vortices on one horizontal circle.
pub fn ring_hessian(xs: &[f64], gammas: &[f64], r: f64) -> DMatrix<f64> {
    let n = xs.len();
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            if k != l {
                let s = ((xs[k] - xs[l]) / (2.0 * r)).sin();
                m[(k, l)] = -gammas[k] * gammas[l] / (8.0 * PI * r * r * s * s);
            }
        }
        let off: f64 = (0..n).filter(|&l| l != k).map(|l| m[(k, l)]).sum();
        m[(k, k)] = -off;
    }
    m
}

/// Outcome of [`gershgorin_certificate`]; both variants carry the computed
/// eigenvalues (ascending) for cross-checking.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// Off-diagonals negative, diagonal positive, rows sum to zero: 0 is a
    /// simple eigenvalue and every other eigenvalue is positive.
    Certified { eigenvalues: Vec<f64> },
    Failed { reason: String, eigenvalues: Vec<f64> },
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        matches!(self, Certificate::Certified { .. })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        match self {
            Certificate::Certified { eigenvalues } | Certificate::Failed { eigenvalues, .. } => eigenvalues,
        }
    }
}

/// Check the hypotheses under which a symmetric matrix has 0 as a simple
/// eigenvalue and all other eigenvalues positive.
pub fn gershgorin_certificate(a: &DMatrix<f64>) -> Certificate {
    let n = a.nrows();
    let eigenvalues = if n == a.ncols() && n > 0 {
        let mut ev: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    } else {
        Vec::new()
    };
    let fail = |reason: String| Certificate::Failed {
        reason,
        eigenvalues: eigenvalues.clone(),
    };
    if n == 0 || n != a.ncols() {
        return fail("matrix must be square and non-empty".into());
    }
    let amax = a.amax();
    if amax == 0.0 || !amax.is_finite() {
        return fail("matrix is zero or not finite".into());
    }
    let tol = 1e-12 * amax * n as f64;
    for i in 0..n {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > tol {
                return fail(format!("not symmetric at ({i}, {j})"));
            }
        }
    }
    for i in 0..n {
        if !(a[(i, i)] > 0.0) {
            return fail(format!("diagonal entry {i} is not positive"));
        }
        for j in 0..n {
            if i != j && !(a[(i, j)] < 0.0) {
                return fail(format!("off-diagonal entry ({i}, {j}) is not negative"));
            }
        }
        let row: f64 = a.row(i).iter().sum();
        if row.abs() > tol {
            return fail(format!("row {i} sums to {row:e}, not zero"));
        }
    }
    Certificate::Certified { eigenvalues }
}

/// The two points where the field of two same-sign vortices vanishes,
/// i.e. the roots of `Γ1 cot((z−z1)/2r) + Γ2 cot((z−z2)/2r) = 0`.
pub fn stagnation_points(z1: CylPoint, z2: CylPoint, g1: f64, g2: f64, cyl: &Cylinder) -> Result<[CylPoint; 2]> {
    if !(g1 > 0.0 && g2 > 0.0) {
        return Err(Error::InvalidArgument("stagnation points need two positive vorticities".into()));
    }
    let pair = Configuration::new(*cyl, vec![z1, z2], vec![g1, g2])?;
    let r = cyl.radius();
    let (a, b) = (pair.z(0), pair.z(1));
    let field = |z: Complex64| g1 * cotan((z - a) / (2.0 * r)) + g2 * cotan((z - b) / (2.0 * r));
    let deriv = |z: Complex64| {
        let ca = cotan((z - a) / (2.0 * r));
        let cb = cotan((z - b) / (2.0 * r));
        -(g1 * (1.0 + ca * ca) + g2 * (1.0 + cb * cb)) / (2.0 * r)
    };
    let scale = (g1 + g2) / r;

    let span = (a.im - b.im).abs();
    let (ylo, yhi) = (a.im.min(b.im) - 2.0 * r - span, a.im.max(b.im) + 2.0 * r + span);
    let (nx, ny) = (48usize, 48usize);
    let c = cyl.circumference();
    let grid_z = |i: usize, j: usize| Complex64::new(c * (i as f64 + 0.5) / nx as f64, ylo + (yhi - ylo) * (j as f64 + 0.5) / ny as f64);
    let vals: Vec<f64> = (0..nx * ny).map(|q| field(grid_z(q % nx, q / nx)).norm()).collect();
    let mut seeds: Vec<(f64, Complex64)> = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let v = vals[j * nx + i];
            let mut is_min = true;
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let ii = (i as i64 + di).rem_euclid(nx as i64) as usize;
                let jj = j as i64 + dj;
                if jj < 0 || jj >= ny as i64 {
                    continue;
                }
                if vals[jj as usize * nx + ii] < v {
                    is_min = false;
                }
            }
            if is_min {
                seeds.push((v, grid_z(i, j)));
            }
        }
    }
    seeds.sort_by(|p, q| p.0.total_cmp(&q.0));

    let mut roots: Vec<CylPoint> = Vec::new();
    for (_, seed) in seeds {
        let mut z = seed;
        let mut ok = false;
        for _ in 0..100 {
            let f = field(z);
            let step = f / deriv(z);
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            // keep Newton from jumping across a whole period
            let step = if step.norm() > r { step * (r / step.norm()) } else { step };
            z -= step;
            if step.norm() < 1e-15 * r.max(z.norm()) || field(z).norm() < 1e-14 * scale {
                ok = field(z).norm() < 1e-11 * scale;
                if ok {
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let p = CylPoint::canonical(z.re, z.im, cyl)?;
        let near_vortex = pair.points().iter().any(|q| quotient_distance(p, *q, cyl) < 1e-6 * r);
        if near_vortex || roots.iter().any(|q| quotient_distance(p, *q, cyl) < 1e-7 * r) {
            continue;
        }
        roots.push(p);
        if roots.len() == 2 {
            break;
        }
    }
    if roots.len() != 2 {
        return Err(Error::NoConvergence {
            what: "stagnation point search",
            iterations: 100,
            residual: roots.len() as f64,
        });
    }
    roots.sort_by(|p, q| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)));
    Ok([roots[0], roots[1]])
}

/// Vorticity `Γ3` that, placed at `z3`, immobilises the vortex at `z1`:
/// `Γ2 cot((z1−z2)/2r) + Γ3 cot((z1−z3)/2r) = 0`. When `z3` is a
/// stagnation point of the `(z1, z2)` field the vortex at `z2` is then
/// immobile as well, which is checked before returning.
pub fn completing_vorticity(z1: CylPoint, z2: CylPoint, g1: f64, g2: f64, z3: CylPoint, cyl: &Cylinder) -> Result<f64> {
    let cfg = Configuration::new(*cyl, vec![z1, z2, z3], vec![g1, g2, 1.0])?;
    let r = cyl.radius();
    let (a, b, s) = (cfg.z(0), cfg.z(1), cfg.z(2));
    let c12 = cotan((a - b) / (2.0 * r));
    let c13 = cotan((a - s) / (2.0 * r));
    let c21 = -c12;
    let c23 = cotan((b - s) / (2.0 * r));
    let size = c12.norm().max(1.0);
    if c13.norm() < 1e-12 * size {
        return Err(Error::InvalidArgument("third vortex sits where it exerts no velocity on the first".into()));
    }
    let ratio = -g2 * c12 / c13;
    if ratio.im.abs() > 1e-8 * ratio.norm().max(g2.abs()) {
        return Err(Error::InvalidArgument("no real vorticity immobilises the first vortex from this point".into()));
    }
    let g3 = ratio.re;
    let second = g1 * c21 + g3 * c23;
    if second.norm() > 1e-8 * (g1.abs() * c21.norm() + g3.abs() * c23.norm()).max(1e-300) {
        return Err(Error::InvalidArgument("third vortex is not at a stagnation point: second vortex stays mobile".into()));
    }
    Ok(g3)
}

/// Whether every vortex moves slower than `tol`, with the largest speed.
pub fn is_equilibrium(config: &Configuration, tol: f64) -> Result<(bool, f64)> {
    let residual = max_speed(config)?;
    Ok((residual < tol, residual))
}
