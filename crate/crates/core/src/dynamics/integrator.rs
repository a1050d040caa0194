use std::f64::consts::PI;

use crate::cylinder::{Configuration, Cylinder, COLLISION_EXCLUSION};
use crate::error::{Error, Result};

use super::trajectory::{Sample, Trajectory};
use super::velocity_raw;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Classical fourth-order Runge–Kutta with the given step.
    Rk4 { step: f64 },
    /// Dormand–Prince 5(4) with local error per step bounded by `tol · r`
    /// in every coordinate (RMS norm).
    Adaptive { tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputMode {
    /// Record every accepted step.
    Steps,
    /// Record at multiples of the given interval (steps are clipped to land
    /// on them exactly).
    Every(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Optional extra ceiling on the step size.
    pub max_step: Option<f64>,
    /// Abort when two vortices come closer than `guard · r`. Must be at least
    /// [`COLLISION_EXCLUSION`].
    pub guard: f64,
    pub output: OutputMode,
    /// Hard cap on attempted steps.
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Adaptive { tol: 1e-10 },
            max_step: None,
            guard: 1e-6,
            output: OutputMode::Steps,
            max_steps: 50_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn adaptive(tol: f64) -> Self {
        Self {
            scheme: Scheme::Adaptive { tol },
            ..Self::default()
        }
    }

    pub fn rk4(step: f64) -> Self {
        Self {
            scheme: Scheme::Rk4 { step },
            ..Self::default()
        }
    }

    pub fn with_output(mut self, output: OutputMode) -> Self {
        self.output = output;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let ok = match self.scheme {
            Scheme::Rk4 { step } => positive(step),
            Scheme::Adaptive { tol } => positive(tol),
        } && positive(self.guard)
            && self.guard >= COLLISION_EXCLUSION
            && self.max_step.is_none_or(positive)
            && match self.output {
                OutputMode::Steps => true,
                OutputMode::Every(dt) => positive(dt),
            };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("integrator settings {self:?}")))
        }
    }
}

/// Integrate a configuration over `[0, t_final]`.
///
/// Positions are advanced on the universal cover, so the recorded
/// x-coordinates are continuous lifts of the canonical ones. On collision the
/// error carries the trajectory up to the last safe sample.
pub fn integrate(
    config: &Configuration,
    t_final: f64,
    icfg: &IntegratorConfig,
) -> std::result::Result<Trajectory, IntegrationFailure> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = config.points().iter().map(|p| (p.x, p.y)).unzip();
    integrate_lifted(*config.cylinder(), config.vorticities(), &xs, &ys, 0.0, t_final, icfg)
}

/// Failure of an integration run, with whatever was computed before it.
#[derive(Debug)]
pub struct IntegrationFailure {
    pub error: Error,
    pub partial: Trajectory,
}

impl std::fmt::Display for IntegrationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({} samples kept)", self.error, self.partial.len())
    }
}

impl std::error::Error for IntegrationFailure {}

impl From<IntegrationFailure> for Error {
    fn from(f: IntegrationFailure) -> Self {
        f.error
    }
}

/// Integrate from lifted coordinates starting at time `t0`.
pub fn integrate_lifted(
    cylinder: Cylinder,
    gammas: &[f64],
    x0: &[f64],
    y0: &[f64],
    t0: f64,
    t_final: f64,
    icfg: &IntegratorConfig,
) -> std::result::Result<Trajectory, IntegrationFailure> {
    let mut traj = Trajectory::new(cylinder, gammas.to_vec(), *icfg);
    let fail = |error: Error, partial: Trajectory| IntegrationFailure { error, partial };
    if let Err(e) = icfg.validate() {
        return Err(fail(e, traj));
    }
    if !(t_final > t0) || !t_final.is_finite() {
        return Err(fail(Error::InvalidArgument("final time must exceed the start time".into()), traj));
    }
    if x0.len() != gammas.len() || y0.len() != gammas.len() || gammas.is_empty() {
        return Err(fail(Error::LengthMismatch { points: x0.len(), vorticities: gammas.len() }, traj));
    }
    let n = gammas.len();
    let r = cylinder.radius();
    let sys = System { gammas, r, n };
    let mut state: Vec<f64> = x0.iter().zip(y0).flat_map(|(x, y)| [*x, *y]).collect();
    if let Some((i, j, d)) = sys.closest(&state) {
        if d < icfg.guard * r {
            return Err(fail(Error::Collision { i, j, distance: d }, traj));
        }
    }
    traj.push(Sample::from_state(t0, &state, gammas, r));

    let ceiling = PI * r / 4.0;
    let mut t = t0;
    let mut k1 = sys.rhs(&state);
    let mut h = match icfg.scheme {
        Scheme::Rk4 { step } => step,
        Scheme::Adaptive { tol } => 0.1 * tol.powf(0.2) * r / sys.max_speed(&k1).max(1e-300),
    };
    let mut next_out = match icfg.output {
        OutputMode::Every(dt) => Some(t0 + dt),
        OutputMode::Steps => None,
    };
    let mut out_index = 1u64;
    let mut steps = 0usize;

    while t < t_final {
        steps += 1;
        if steps > icfg.max_steps {
            return Err(fail(
                Error::NoConvergence {
                    what: "integration (step budget exhausted)",
                    iterations: steps,
                    residual: t_final - t,
                },
                traj,
            ));
        }
        let target = next_out.map_or(t_final, |o| o.min(t_final));
        let speed = sys.max_speed(&k1);
        let mut h_try = match icfg.scheme {
            Scheme::Rk4 { step } => step,
            Scheme::Adaptive { .. } => h,
        };
        if speed > 0.0 {
            h_try = h_try.min(ceiling / speed);
        }
        if let Some(m) = icfg.max_step {
            h_try = h_try.min(m);
        }
        let remaining = target - t;
        let lands = h_try >= remaining * (1.0 - 1e-12);
        if lands {
            h_try = remaining;
        }
        if h_try <= 1e-14 * t.abs().max(r) {
            return Err(fail(Error::StepUnderflow { t }, traj));
        }

        let (new_state, new_k1, accepted, h_next) = match icfg.scheme {
            Scheme::Rk4 { .. } => {
                let s = sys.rk4(&state, &k1, h_try);
                let k = sys.rhs(&s);
                (s, k, true, h)
            }
            Scheme::Adaptive { tol } => {
                let (s, k7, err) = sys.dopri(&state, &k1, h_try, tol * r);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if err <= 1.0 {
                    // a step clipped to an output time must not shrink the natural step
                    let next = if lands && factor >= 1.0 { h.max(h_try * factor) } else { h_try * factor };
                    (s, k7, true, next)
                } else {
                    (s, k7, false, h_try * factor)
                }
            }
        };
        h = h_next;
        if !accepted {
            continue;
        }
        if new_state.iter().any(|v| !v.is_finite()) {
            return Err(fail(Error::NonFinite("integrator state"), traj));
        }
        t = if lands { target } else { t + h_try };
        state = new_state;
        k1 = new_k1;
        if let Some((i, j, d)) = sys.closest(&state) {
            if d < icfg.guard * r {
                traj.push(Sample::from_state(t, &state, gammas, r));
                return Err(fail(Error::Collision { i, j, distance: d }, traj));
            }
        }
        match icfg.output {
            OutputMode::Steps => traj.push(Sample::from_state(t, &state, gammas, r)),
            OutputMode::Every(dt) => {
                if lands {
                    traj.push(Sample::from_state(t, &state, gammas, r));
                    out_index += 1;
                    next_out = Some(t0 + dt * out_index as f64);
                }
            }
        }
    }
    Ok(traj)
}

/// Advance lifted coordinates by `duration` and return the final state.
pub fn flow(
    cylinder: Cylinder,
    gammas: &[f64],
    x0: &[f64],
    y0: &[f64],
    duration: f64,
    icfg: &IntegratorConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let quiet = IntegratorConfig {
        output: OutputMode::Every(duration),
        ..*icfg
    };
    let traj = integrate_lifted(cylinder, gammas, x0, y0, 0.0, duration, &quiet).map_err(|e| e.error)?;
    let last = traj.samples().last().expect("at least the initial sample");
    Ok((last.x.clone(), last.y.clone()))
}

struct System<'a> {
    gammas: &'a [f64],
    r: f64,
    n: usize,
}

// Dormand–Prince 5(4) tableau (autonomous system, so the nodes are unused).
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl System<'_> {
    fn rhs(&self, s: &[f64]) -> Vec<f64> {
        let xs: Vec<f64> = s.iter().step_by(2).copied().collect();
        let ys: Vec<f64> = s.iter().skip(1).step_by(2).copied().collect();
        let mut out = Vec::with_capacity(2 * self.n);
        for k in 0..self.n {
            let v = velocity_raw(&xs, &ys, self.gammas, self.r, k);
            out.push(v.vx);
            out.push(v.vy);
        }
        out
    }

    fn max_speed(&self, d: &[f64]) -> f64 {
        d.chunks(2).map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }

    fn closest(&self, s: &[f64]) -> Option<(usize, usize, f64)> {
        let c = 2.0 * PI * self.r;
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.n {
            for j in i + 1..self.n {
                let mut dx = (s[2 * i] - s[2 * j]).rem_euclid(c);
                if dx > 0.5 * c {
                    dx -= c;
                }
                let d = dx.hypot(s[2 * i + 1] - s[2 * j + 1]);
                if best.is_none_or(|(_, _, b)| d < b) {
                    best = Some((i, j, d));
                }
            }
        }
        best
    }

    fn combine(s: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
        let mut out = s.to_vec();
        for (c, k) in terms {
            if *c == 0.0 {
                continue;
            }
            for (o, kv) in out.iter_mut().zip(k.iter()) {
                *o += h * c * kv;
            }
        }
        out
    }

    fn rk4(&self, s: &[f64], k1: &[f64], h: f64) -> Vec<f64> {
        let k2 = self.rhs(&Self::combine(s, h, &[(0.5, k1)]));
        let k3 = self.rhs(&Self::combine(s, h, &[(0.5, &k2)]));
        let k4 = self.rhs(&Self::combine(s, h, &[(1.0, &k3)]));
        Self::combine(s, h, &[(1.0 / 6.0, k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)])
    }

    /// One Dormand–Prince step; returns the new state, its derivative and the
    /// scaled RMS error estimate.
    fn dopri(&self, s: &[f64], k1: &[f64], h: f64, atol: f64) -> (Vec<f64>, Vec<f64>, f64) {
        let k2 = self.rhs(&Self::combine(s, h, &[(A21, k1)]));
        let k3 = self.rhs(&Self::combine(s, h, &[(A31, k1), (A32, &k2)]));
        let k4 = self.rhs(&Self::combine(s, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = self.rhs(&Self::combine(s, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = self.rhs(&Self::combine(s, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let new = Self::combine(s, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = self.rhs(&new);
        let mut acc = 0.0;
        for i in 0..s.len() {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            acc += (e / atol).powi(2);
        }
        (new, k7, (acc / s.len() as f64).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::{shape_distance, Configuration};
    use crate::dynamics::Partition;

    #[test]
    fn rejects_bad_settings() {
        let cfg = Configuration::from_triples(Cylinder::unit(), &[(0.0, 1.0, 1.0), (0.0, -1.0, -1.0)]).unwrap();
        assert!(integrate(&cfg, 0.0, &IntegratorConfig::default()).is_err());
        assert!(integrate(&cfg, 1.0, &IntegratorConfig::adaptive(-1.0)).is_err());
        assert!(integrate(&cfg, 1.0, &IntegratorConfig::rk4(0.0)).is_err());
    }

    #[test]
    fn pair_is_a_relative_equilibrium() {
        let cfg = Configuration::from_triples(Cylinder::unit(), &[(0.0, 1.0, 1.0), (0.0, -1.0, -1.0)]).unwrap();
        let traj = integrate(&cfg, 10.0, &IntegratorConfig::default()).unwrap();
        for i in 0..traj.len() {
            assert!(shape_distance(&traj.configuration(i), &cfg).unwrap() < 1e-6);
        }
    }

    #[test]
    fn rk4_and_adaptive_agree() {
        let cfg = Configuration::from_triples(Cylinder::unit(), &[(0.0, 0.4, 1.0), (1.0, -0.3, 0.7), (3.0, 0.2, -0.5)]).unwrap();
        let a = integrate(&cfg, 2.0, &IntegratorConfig::default()).unwrap();
        let b = integrate(&cfg, 2.0, &IntegratorConfig::rk4(1e-3)).unwrap();
        let (sa, sb) = (a.samples().last().unwrap(), b.samples().last().unwrap());
        assert_eq!(sa.t, 2.0);
        assert_eq!(sb.t, 2.0);
        for k in 0..3 {
            assert!((sa.x[k] - sb.x[k]).abs() < 1e-9 && (sa.y[k] - sb.y[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_output_lands_on_the_grid() {
        let cfg = Configuration::from_triples(Cylinder::unit(), &[(0.0, 0.4, 1.0), (1.0, -0.3, 0.7)]).unwrap();
        let traj = integrate(&cfg, 1.0, &IntegratorConfig::default().with_output(OutputMode::Every(0.25))).unwrap();
        let times: Vec<f64> = traj.samples().iter().map(|s| s.t).collect();
        assert_eq!(times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn collision_aborts_with_partial_trajectory() {
        // two equal vortices forced together by a strong neighbour on a line
        // is hard to arrange; instead start inside the guard band
        let cyl = Cylinder::unit();
        let icfg = IntegratorConfig {
            guard: 1e-2,
            ..IntegratorConfig::default()
        };
        let err = integrate_lifted(cyl, &[1.0, 1.0], &[0.0, 0.005], &[0.0, 0.0], 0.0, 1.0, &icfg).unwrap_err();
        assert!(matches!(err.error, Error::Collision { i: 0, j: 1, .. }));
        assert!(err.partial.is_empty());
    }

    #[test]
    fn collapsing_triple_trips_the_guard() {
        // Γ = (2, 2, −1) with vanishing angular impulse collapses
        // self-similarly in the plane; a wide cylinder follows it closely
        let cyl = Cylinder::new(100.0).unwrap();
        let icfg = IntegratorConfig {
            guard: 1e-4,
            ..IntegratorConfig::default()
        };
        let res = integrate_lifted(
            cyl,
            &[2.0, 2.0, -1.0],
            &[-1.0, 1.0, 1.0],
            &[0.0, 0.0, 2f64.sqrt()],
            0.0,
            200.0,
            &icfg,
        );
        let f = res.unwrap_err();
        assert!(matches!(f.error, Error::Collision { .. }), "{:?}", f.error);
        assert!(f.partial.len() > 2);
        let last = f.partial.samples().last().unwrap();
        assert!(last.t < 200.0);
    }

    #[test]
    fn center_vector_is_conserved() {
        let cfg = Configuration::from_triples(
            Cylinder::unit(),
            &[(0.0, 1.15, 1.0), (0.0, 0.85, 1.0), (0.0, -0.85, -1.0), (0.0, -1.15, -1.0)],
        )
        .unwrap();
        let part = Partition::new(vec![0, 1], 4).unwrap();
        let traj = integrate(&cfg, 20.0, &IntegratorConfig::default()).unwrap();
        let c0 = traj.center_vector(0, &part).unwrap();
        for i in 0..traj.len() {
            assert!((traj.center_vector(i, &part).unwrap() - c0).norm() < 1e-8);
        }
    }
}
