use std::fmt::Write as _;

use num_complex::Complex64;

use crate::cylinder::{Configuration, CylPoint, Cylinder, UnwrappedPath};
use crate::error::Result;

use super::{center_vector, hamiltonian_raw, momentum, IntegratorConfig, Partition};

/// One recorded instant. `x` holds lifted coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub energy: f64,
    pub momentum: Complex64,
}

impl Sample {
    pub(crate) fn from_state(t: f64, state: &[f64], gammas: &[f64], r: f64) -> Self {
        let x: Vec<f64> = state.iter().step_by(2).copied().collect();
        let y: Vec<f64> = state.iter().skip(1).step_by(2).copied().collect();
        Self::from_xy(t, x, y, gammas, r)
    }

    pub(crate) fn from_xy(t: f64, x: Vec<f64>, y: Vec<f64>, gammas: &[f64], r: f64) -> Self {
        let energy = hamiltonian_raw(&x, &y, gammas, r);
        let momentum = momentum(&x, &y, gammas);
        Self {
            t,
            x,
            y,
            energy,
            momentum,
        }
    }
}

/// Time series produced by the integrator, together with everything needed
/// to continue or re-run it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    cylinder: Cylinder,
    vorticities: Vec<f64>,
    integrator: IntegratorConfig,
    samples: Vec<Sample>,
}

impl Trajectory {
    pub(crate) fn new(cylinder: Cylinder, vorticities: Vec<f64>, integrator: IntegratorConfig) -> Self {
        Self {
            cylinder,
            vorticities,
            integrator,
            samples: Vec::new(),
        }
    }

    /// Assemble a trajectory from externally obtained lifted samples.
    /// Energies and momenta are recomputed; times must increase strictly.
    pub fn from_lifted(
        cylinder: Cylinder,
        vorticities: Vec<f64>,
        integrator: IntegratorConfig,
        samples: Vec<(f64, Vec<f64>, Vec<f64>)>,
    ) -> Result<Self> {
        let mut traj = Self::new(cylinder, vorticities, integrator);
        let mut last = f64::NEG_INFINITY;
        for (t, x, y) in samples {
            if !(t > last) {
                return Err(crate::Error::InvalidArgument(format!("sample times must increase (t = {t})")));
            }
            if x.len() != traj.vorticities.len() || y.len() != traj.vorticities.len() {
                return Err(crate::Error::LengthMismatch {
                    points: x.len(),
                    vorticities: traj.vorticities.len(),
                });
            }
            last = t;
            let s = Sample::from_xy(t, x, y, &traj.vorticities, cylinder.radius());
            traj.samples.push(s);
        }
        Ok(traj)
    }

    pub(crate) fn push(&mut self, s: Sample) {
        self.samples.push(s);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn cylinder(&self) -> &Cylinder {
        &self.cylinder
    }

    pub fn vorticities(&self) -> &[f64] {
        &self.vorticities
    }

    pub fn integrator(&self) -> &IntegratorConfig {
        &self.integrator
    }

    pub fn time(&self, i: usize) -> f64 {
        self.samples[i].t
    }

    /// Canonical configuration at sample `i`.
    pub fn configuration(&self, i: usize) -> Configuration {
        let s = &self.samples[i];
        let pts = s.x.iter().zip(&s.y).map(|(x, y)| CylPoint::new(*x, *y)).collect();
        // the integrator guard keeps vortices farther apart than the
        // construction threshold
        Configuration::new(self.cylinder, pts, self.vorticities.clone()).expect("integrator keeps samples collision-free")
    }

    pub fn unwrapped(&self, i: usize) -> UnwrappedPath {
        let s = &self.samples[i];
        UnwrappedPath {
            x: s.x.clone(),
            y: s.y.clone(),
        }
    }

    /// Lifted complex positions at sample `i`.
    pub fn zs(&self, i: usize) -> Vec<Complex64> {
        let s = &self.samples[i];
        s.x.iter().zip(&s.y).map(|(x, y)| Complex64::new(*x, *y)).collect()
    }

    pub fn center_vector(&self, i: usize, part: &Partition) -> Result<Complex64> {
        center_vector(&self.zs(i), &self.vorticities, part)
    }

    /// Largest `|H(t) − H(0)|`.
    pub fn energy_drift(&self) -> f64 {
        let h0 = self.samples.first().map_or(0.0, |s| s.energy);
        self.samples.iter().map(|s| (s.energy - h0).abs()).fold(0.0, f64::max)
    }

    /// Largest `|P(t) − P(0)|` of the lifted momentum.
    pub fn momentum_drift(&self) -> f64 {
        let p0 = self.samples.first().map_or(Complex64::new(0.0, 0.0), |s| s.momentum);
        self.samples.iter().map(|s| (s.momentum - p0).norm()).fold(0.0, f64::max)
    }

    /// The same motion shifted rigidly by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        let r = self.cylinder.radius();
        let samples = self
            .samples
            .iter()
            .map(|s| {
                let x = s.x.iter().map(|v| v + dx).collect();
                let y = s.y.iter().map(|v| v + dy).collect();
                Sample::from_xy(s.t, x, y, &self.vorticities, r)
            })
            .collect();
        Self {
            samples,
            ..self.clone()
        }
    }

    /// CSV with header `t,x1,y1,…,xN,yN,H,Px,Py`. With `unwrapped = false`
    /// the x-columns are canonical; otherwise they are the lifts.
    pub fn to_csv(&self, unwrapped: bool) -> String {
        let n = self.vorticities.len();
        let mut out = String::from("t");
        for k in 1..=n {
            let _ = write!(out, ",x{k},y{k}");
        }
        out.push_str(",H,Px,Py\n");
        let c = self.cylinder.circumference();
        for s in &self.samples {
            let _ = write!(out, "{}", fmt17(s.t));
            for (x, y) in s.x.iter().zip(&s.y) {
                let xv = if unwrapped {
                    *x
                } else {
                    let w = x.rem_euclid(c);
                    if w >= c {
                        0.0
                    } else {
                        w
                    }
                };
                let _ = write!(out, ",{},{}", fmt17(xv), fmt17(*y));
            }
            let _ = writeln!(
                out,
                ",{},{},{}",
                fmt17(s.energy),
                fmt17(s.momentum.re),
                fmt17(s.momentum.im)
            );
        }
        out
    }
}

/// Fixed 17-significant-digit formatting used by every CSV writer.
pub fn fmt17(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::unwrap_step;
    use crate::dynamics::integrate;

    fn drifting_pair() -> Trajectory {
        let cfg = Configuration::from_triples(Cylinder::unit(), &[(0.0, 0.3, 1.0), (0.0, -0.3, -1.0)]).unwrap();
        integrate(&cfg, 40.0, &IntegratorConfig::default()).unwrap()
    }

    #[test]
    fn lifted_x_is_continuous_and_matches_unwrap_step() {
        let traj = drifting_pair();
        let cyl = *traj.cylinder();
        let mut lifted = traj.samples()[0].x[0];
        for i in 1..traj.len() {
            let wrapped = traj.configuration(i).points()[0].x;
            lifted = unwrap_step(lifted, wrapped, &cyl).unwrap();
            assert!((lifted - traj.samples()[i].x[0]).abs() < 1e-9);
        }
        // the pair has gone once round the cylinder
        assert_eq!(traj.unwrapped(traj.len() - 1).winding(&cyl)[0], 1);
    }

    #[test]
    fn csv_layout() {
        let traj = drifting_pair();
        let text = traj.to_csv(false);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,y1,x2,y2,H,Px,Py");
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row.len(), 8);
        assert_eq!(row[0], 0.0);
        for line in text.lines().skip(1) {
            let x1: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!((0.0..2.0 * std::f64::consts::PI).contains(&x1));
        }
        assert_ne!(text, traj.to_csv(true));
    }

    #[test]
    fn translation_keeps_energy() {
        let traj = drifting_pair();
        let moved = traj.translated(1.0, -2.0);
        for (a, b) in traj.samples().iter().zip(moved.samples()) {
            assert!((a.energy - b.energy).abs() < 1e-12);
        }
    }
}
