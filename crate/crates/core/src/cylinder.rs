//! Cylinder geometry: the strip `ℝ/2πrℤ × ℝ`, canonical coordinates,
//! lifting to the universal cover, the quotient metric and the shape metric
//! used to compare configurations modulo translation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pairs closer than `COLLISION_EXCLUSION · r` are rejected when a
/// configuration is built.
pub const COLLISION_EXCLUSION: f64 = 1e-9;

/// Tolerance (relative to `r`) for declaring a lift ambiguous.
const LIFT_AMBIGUITY: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    radius: f64,
}

impl Cylinder {
    pub fn new(radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidRadius(radius));
        }
        Ok(Self { radius })
    }

    /// The cylinder of radius one, used by the reduced-Hamiltonian routines.
    pub fn unit() -> Self {
        Self { radius: 1.0 }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn circumference(&self) -> f64 {
        2.0 * PI * self.radius
    }

    /// Representative of `dx` in `(−πr, πr]`.
    pub fn centered(&self, dx: f64) -> f64 {
        let c = self.circumference();
        let mut d = dx.rem_euclid(c);
        if d > 0.5 * c {
            d -= c;
        }
        d
    }
}

/// A point on the cylinder. `x` is canonical (in `[0, 2πr)`) whenever the
/// point was produced by [`CylPoint::canonical`] or stored in a
/// [`Configuration`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylPoint {
    pub x: f64,
    pub y: f64,
}

impl CylPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn canonical(x: f64, y: f64, cyl: &Cylinder) -> Result<Self> {
        if !y.is_finite() {
            return Err(Error::NonFinite("y coordinate"));
        }
        Ok(Self { x: wrap(x, cyl)?, y })
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self { x: z.re, y: z.im }
    }
}

/// Reduce `x` to its representative in `[0, 2πr)`.
pub fn wrap(x: f64, cyl: &Cylinder) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("x coordinate"));
    }
    let c = cyl.circumference();
    let w = x.rem_euclid(c);
    // rem_euclid can round up to exactly c for tiny negative inputs
    Ok(if w >= c { 0.0 } else { w })
}

/// Distance on the cylinder: the shortest planar distance over all
/// horizontal lifts.
pub fn quotient_distance(p: CylPoint, q: CylPoint, cyl: &Cylinder) -> f64 {
    let dx = cyl.centered(p.x - q.x);
    dx.hypot(p.y - q.y)
}

/// Lift `new_wrapped` to the real line, choosing the lift nearest `prev`.
pub fn unwrap_step(prev: f64, new_wrapped: f64, cyl: &Cylinder) -> Result<f64> {
    if !prev.is_finite() || !new_wrapped.is_finite() {
        return Err(Error::NonFinite("lift input"));
    }
    let c = cyl.circumference();
    let n = ((prev - new_wrapped) / c).round();
    let lifted = new_wrapped + n * c;
    if ((lifted - prev).abs() - 0.5 * c).abs() <= LIFT_AMBIGUITY * cyl.radius() {
        return Err(Error::AmbiguousLift);
    }
    Ok(lifted)
}

/// Vortex positions with vorticities on a cylinder. Positions are stored in
/// canonical form and no two vortices coincide on the quotient.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    cylinder: Cylinder,
    points: Vec<CylPoint>,
    vorticities: Vec<f64>,
}

impl Configuration {
    pub fn new(cylinder: Cylinder, points: Vec<CylPoint>, vorticities: Vec<f64>) -> Result<Self> {
        if points.len() != vorticities.len() {
            return Err(Error::LengthMismatch {
                points: points.len(),
                vorticities: vorticities.len(),
            });
        }
        if points.is_empty() {
            return Err(Error::Empty);
        }
        for (k, g) in vorticities.iter().enumerate() {
            if !g.is_finite() {
                return Err(Error::NonFinite("vorticity"));
            }
            if *g == 0.0 {
                return Err(Error::ZeroVorticity(k));
            }
        }
        let points = points
            .into_iter()
            .map(|p| CylPoint::canonical(p.x, p.y, &cylinder))
            .collect::<Result<Vec<_>>>()?;
        let guard = COLLISION_EXCLUSION * cylinder.radius();
        if let Some((i, j, distance)) = closest_pair(&points, &cylinder) {
            if distance < guard {
                return Err(Error::Collision { i, j, distance });
            }
        }
        Ok(Self {
            cylinder,
            points,
            vorticities,
        })
    }

    /// Build from `(x, y, Γ)` triples.
    pub fn from_triples(cylinder: Cylinder, triples: &[(f64, f64, f64)]) -> Result<Self> {
        let points = triples.iter().map(|&(x, y, _)| CylPoint::new(x, y)).collect();
        let gammas = triples.iter().map(|&(_, _, g)| g).collect();
        Self::new(cylinder, points, gammas)
    }

    pub fn cylinder(&self) -> &Cylinder {
        &self.cylinder
    }

    pub fn points(&self) -> &[CylPoint] {
        &self.points
    }

    pub fn vorticities(&self) -> &[f64] {
        &self.vorticities
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_vorticity(&self) -> f64 {
        self.vorticities.iter().sum()
    }

    pub fn z(&self, k: usize) -> Complex64 {
        self.points[k].to_complex()
    }

    /// Shift every vortex by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Result<Self> {
        let points = self
            .points
            .iter()
            .map(|p| CylPoint::new(p.x + dx, p.y + dy))
            .collect();
        Self::new(self.cylinder, points, self.vorticities.clone())
    }

    /// Smallest pairwise quotient distance, with the pair attaining it.
    pub fn closest_pair(&self) -> Option<(usize, usize, f64)> {
        closest_pair(&self.points, &self.cylinder)
    }
}

fn closest_pair(points: &[CylPoint], cyl: &Cylinder) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = quotient_distance(points[i], points[j], cyl);
            if best.is_none_or(|(_, _, b)| d < b) {
                best = Some((i, j, d));
            }
        }
    }
    best
}

/// Positions lifted to the universal cover of the horizontal circle.
#[derive(Debug, Clone, PartialEq)]
pub struct UnwrappedPath {
    /// Lifted x-coordinates, one per vortex.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl UnwrappedPath {
    /// Number of full turns each vortex has made relative to the canonical
    /// range.
    pub fn winding(&self, cyl: &Cylinder) -> Vec<i64> {
        let c = cyl.circumference();
        self.x.iter().map(|x| (x / c).floor() as i64).collect()
    }

    pub fn z(&self, k: usize) -> Complex64 {
        Complex64::new(self.x[k], self.y[k])
    }
}

/// Replicate a configuration `n` times around a cylinder `n` times wider.
///
/// Vortex `k` of copy `m` sits at `z_k + 2πr·m` and has index `m·N + k`.
pub fn nfold_copy(config: &Configuration, n: usize) -> Result<Configuration> {
    if n == 0 {
        return Err(Error::InvalidArgument("n-fold copy needs n ≥ 1".into()));
    }
    let cyl = config.cylinder();
    let wide = Cylinder::new(cyl.radius() * n as f64)?;
    let c = cyl.circumference();
    let mut points = Vec::with_capacity(n * config.len());
    let mut gammas = Vec::with_capacity(n * config.len());
    for m in 0..n {
        for (p, g) in config.points().iter().zip(config.vorticities()) {
            points.push(CylPoint::new(p.x + c * m as f64, p.y));
            gammas.push(*g);
        }
    }
    Configuration::new(wide, points, gammas)
}

/// Distance between the translation orbits of two configurations: the
/// minimum over translations `t` of `max_k d(a_k + t, b_k)`, with vortices
/// matched by index.
pub fn shape_distance(a: &Configuration, b: &Configuration) -> Result<f64> {
    Ok(best_alignment(a, b)?.0)
}

/// Like [`shape_distance`] but also returns the optimal translation `t`
/// (with `t.re` in `(−πr, πr]`).
pub fn best_alignment(a: &Configuration, b: &Configuration) -> Result<(f64, Complex64)> {
    if a.len() != b.len() {
        return Err(Error::Incomparable("different number of vortices"));
    }
    if a.cylinder().radius() != b.cylinder().radius() {
        return Err(Error::Incomparable("different cylinders"));
    }
    let same_gammas = a
        .vorticities()
        .iter()
        .zip(b.vorticities())
        .all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()));
    if !same_gammas {
        return Err(Error::Incomparable("different vorticities"));
    }
    let cyl = *a.cylinder();
    let n = a.len() as f64;
    let ty0 = b.points().iter().map(|p| p.y).sum::<f64>() / n - a.points().iter().map(|p| p.y).sum::<f64>() / n;

    let eval = |t: Complex64| -> f64 {
        a.points()
            .iter()
            .zip(b.points())
            .map(|(p, q)| quotient_distance(CylPoint::new(p.x + t.re, p.y + t.im), *q, &cyl))
            .fold(0.0, f64::max)
    };

    let mut best = (f64::INFINITY, Complex64::new(0.0, ty0));
    for (pa, pb) in a.points().iter().zip(b.points()) {
        let mut t = Complex64::new(cyl.centered(pb.x - pa.x), ty0);
        let mut prev_lifts: Option<Vec<f64>> = None;
        for _ in 0..16 {
            // lift every displacement next to the current horizontal shift
            let lifts: Vec<Complex64> = a
                .points()
                .iter()
                .zip(b.points())
                .map(|(p, q)| Complex64::new(t.re + cyl.centered(q.x - p.x - t.re), q.y - p.y))
                .collect();
            let (center, _) = enclosing_circle(&lifts);
            t = center;
            let keys: Vec<f64> = lifts.iter().map(|u| u.re).collect();
            if prev_lifts.as_ref() == Some(&keys) {
                break;
            }
            prev_lifts = Some(keys);
        }
        let t = Complex64::new(cyl.centered(t.re), t.im);
        let d = eval(t);
        if d < best.0 {
            best = (d, t);
        }
    }
    Ok(best)
}

/// Smallest circle enclosing all points (incremental construction; exact
/// for any input order).
fn enclosing_circle(pts: &[Complex64]) -> (Complex64, f64) {
    let inside = |c: Complex64, r: f64, p: Complex64| (p - c).norm() <= r * (1.0 + 1e-12) + 1e-15;
    let mut c = pts[0];
    let mut r = 0.0;
    for i in 1..pts.len() {
        if inside(c, r, pts[i]) {
            continue;
        }
        c = pts[i];
        r = 0.0;
        for j in 0..i {
            if inside(c, r, pts[j]) {
                continue;
            }
            c = (pts[i] + pts[j]) * 0.5;
            r = (pts[i] - c).norm();
            for k in 0..j {
                if inside(c, r, pts[k]) {
                    continue;
                }
                let (cc, rr) = circumcircle(pts[i], pts[j], pts[k]);
                c = cc;
                r = rr;
            }
        }
    }
    (c, r)
}

fn circumcircle(a: Complex64, b: Complex64, c: Complex64) -> (Complex64, f64) {
    let (bx, by) = ((b - a).re, (b - a).im);
    let (cx, cy) = ((c - a).re, (c - a).im);
    let d = 2.0 * (bx * cy - by * cx);
    if d.abs() < 1e-300 {
        // collinear: the farthest pair spans the circle
        let pairs = [(a, b), (a, c), (b, c)];
        let (p, q) = pairs
            .into_iter()
            .max_by(|x, y| (x.0 - x.1).norm().total_cmp(&(y.0 - y.1).norm()))
            .unwrap();
        let m = (p + q) * 0.5;
        return (m, (p - m).norm());
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    let center = a + Complex64::new(ux, uy);
    (center, ux.hypot(uy))
}
