//! Run configuration files and file output.
//!
//! A configuration is a line-oriented `key = value` file followed by a
//! `[vortices]` section with one `x y gamma` triple per line. `#` starts a
//! comment. Unknown keys are rejected.
//!
//! ```text
//! radius = 1
//! horizon = 20
//! scheme = adaptive
//! tol = 1e-10
//!
//! [vortices]
//! 0.0  0.3  1.0
//! 0.0 -0.3 -1.0
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::cylinder::{unwrap_step, Configuration, Cylinder};
use crate::dynamics::{fmt17, IntegratorConfig, OutputMode, Scheme, Trajectory};
use crate::equilibria::EquilibriumResult;
use crate::reduced::{LevelGrid, LevelKind};
use crate::rpo::RelativePeriodReport;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] crate::Error),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub radius: f64,
    /// `(x, y, Γ)` in absolute units.
    pub vortices: Vec<(f64, f64, f64)>,
    pub integrator: IntegratorConfig,
    pub horizon: Option<f64>,
    pub output: Option<PathBuf>,
    /// Tolerance for period detection and equilibrium checks.
    pub detect_tol: Option<f64>,
}

impl RunConfig {
    pub fn new(radius: f64, vortices: Vec<(f64, f64, f64)>) -> Self {
        Self {
            radius,
            vortices,
            integrator: IntegratorConfig::default(),
            horizon: None,
            output: None,
            detect_tol: None,
        }
    }

    pub fn cylinder(&self) -> crate::Result<Cylinder> {
        Cylinder::new(self.radius)
    }

    pub fn configuration(&self) -> crate::Result<Configuration> {
        Configuration::from_triples(self.cylinder()?, &self.vortices)
    }

    /// Checks everything a run depends on, naming the offending vortices
    /// (1-based, as listed in the file).
    pub fn validate(&self) -> IoResult<()> {
        self.integrator.validate()?;
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(IoError::Invalid(format!("horizon must be positive, got {h}")));
            }
        }
        if let Some(t) = self.detect_tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(IoError::Invalid(format!("detect_tol must be positive, got {t}")));
            }
        }
        match self.configuration() {
            Ok(_) => Ok(()),
            Err(crate::Error::Collision { i, j, distance }) => Err(IoError::Invalid(format!(
                "vortices {} and {} collide (distance {distance:e})",
                i + 1,
                j + 1
            ))),
            Err(crate::Error::ZeroVorticity(k)) => Err(IoError::Invalid(format!("vortex {} has zero vorticity", k + 1))),
            Err(e) => Err(e.into()),
        }
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> IoResult<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| IoError::Parse {
            line,
            message: format!("{key}: expected a finite number, got `{v}`"),
        })
}

/// Parses configuration text. Semantic checks are left to
/// [`RunConfig::validate`], which [`read_config`] also runs.
pub fn parse_config(text: &str) -> IoResult<RunConfig> {
    let mut radius = None;
    let mut cfg = RunConfig::new(f64::NAN, Vec::new());
    let mut scheme = "adaptive".to_string();
    let mut tol = None;
    let mut step = None;
    let mut in_vortices = false;
    let mut seen = std::collections::HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            if content != "[vortices]" || in_vortices {
                return Err(IoError::Parse {
                    line,
                    message: format!("unexpected section `{content}`"),
                });
            }
            in_vortices = true;
            continue;
        }
        if in_vortices {
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(IoError::Parse {
                    line,
                    message: format!("expected `x y gamma`, got {} fields", fields.len()),
                });
            }
            let x = parse_f64(line, "x", fields[0])?;
            let y = parse_f64(line, "y", fields[1])?;
            let g = parse_f64(line, "gamma", fields[2])?;
            cfg.vortices.push((x, y, g));
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(IoError::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(IoError::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        match key {
            "radius" => radius = Some(parse_f64(line, key, value)?),
            "horizon" => cfg.horizon = Some(parse_f64(line, key, value)?),
            "output" => cfg.output = Some(PathBuf::from(value)),
            "scheme" => match value {
                "adaptive" | "rk4" => scheme = value.to_string(),
                _ => {
                    return Err(IoError::Parse {
                        line,
                        message: format!("scheme must be `adaptive` or `rk4`, got `{value}`"),
                    })
                }
            },
            "tol" => tol = Some(parse_f64(line, key, value)?),
            "step" => step = Some(parse_f64(line, key, value)?),
            "max_step" => cfg.integrator.max_step = Some(parse_f64(line, key, value)?),
            "guard" => cfg.integrator.guard = parse_f64(line, key, value)?,
            "output_every" => cfg.integrator.output = OutputMode::Every(parse_f64(line, key, value)?),
            "max_steps" => {
                cfg.integrator.max_steps = value.parse().map_err(|_| IoError::Parse {
                    line,
                    message: format!("max_steps: expected a non-negative integer, got `{value}`"),
                })?
            }
            "detect_tol" => cfg.detect_tol = Some(parse_f64(line, key, value)?),
            _ => {
                return Err(IoError::Parse {
                    line,
                    message: format!("unknown key `{key}`"),
                })
            }
        }
    }
    cfg.radius = radius.ok_or_else(|| IoError::Invalid("missing required key `radius`".into()))?;
    cfg.integrator.scheme = match scheme.as_str() {
        "rk4" => {
            if tol.is_some() {
                return Err(IoError::Invalid("`tol` applies to the adaptive scheme only".into()));
            }
            Scheme::Rk4 {
                step: step.ok_or_else(|| IoError::Invalid("scheme rk4 needs `step`".into()))?,
            }
        }
        _ => {
            if step.is_some() {
                return Err(IoError::Invalid("`step` applies to the rk4 scheme only".into()));
            }
            match tol {
                Some(tol) => Scheme::Adaptive { tol },
                None => IntegratorConfig::default().scheme,
            }
        }
    };
    if cfg.vortices.is_empty() {
        return Err(IoError::Invalid("no vortices given (missing `[vortices]` section?)".into()));
    }
    Ok(cfg)
}

pub fn read_config(path: &Path) -> IoResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| IoError::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let cfg = parse_config(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serializes a configuration so that [`parse_config`] returns it
/// unchanged. Floats use the shortest exact representation.
pub fn write_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "radius = {:e}", cfg.radius);
    if let Some(h) = cfg.horizon {
        let _ = writeln!(out, "horizon = {h:e}");
    }
    if let Some(p) = &cfg.output {
        let _ = writeln!(out, "output = {}", p.display());
    }
    let ic = &cfg.integrator;
    match ic.scheme {
        Scheme::Adaptive { tol } => {
            let _ = writeln!(out, "scheme = adaptive\ntol = {tol:e}");
        }
        Scheme::Rk4 { step } => {
            let _ = writeln!(out, "scheme = rk4\nstep = {step:e}");
        }
    }
    if let Some(m) = ic.max_step {
        let _ = writeln!(out, "max_step = {m:e}");
    }
    let _ = writeln!(out, "guard = {:e}", ic.guard);
    if let OutputMode::Every(dt) = ic.output {
        let _ = writeln!(out, "output_every = {dt:e}");
    }
    let _ = writeln!(out, "max_steps = {}", ic.max_steps);
    if let Some(t) = cfg.detect_tol {
        let _ = writeln!(out, "detect_tol = {t:e}");
    }
    out.push_str("\n[vortices]\n");
    for (x, y, g) in &cfg.vortices {
        let _ = writeln!(out, "{x:e} {y:e} {g:e}");
    }
    out
}

/// Companion path for the unwrapped trajectory: `run.csv` becomes
/// `run.unwrapped.csv`.
pub fn unwrapped_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.unwrapped.{}", ext.to_string_lossy()),
        None => format!("{stem}.unwrapped"),
    };
    path.with_file_name(name)
}

/// Files written during one run; dropped without [`Outputs::keep`] they are
/// removed again, so a failed run leaves nothing half-written behind.
#[derive(Debug, Default)]
pub struct Outputs {
    written: Vec<PathBuf>,
    kept: bool,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, path: &Path, contents: &str) -> IoResult<()> {
        self.written.push(path.to_path_buf());
        fs::write(path, contents).map_err(|e| IoError::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn keep(mut self) {
        self.kept = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.kept {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

/// Writes the canonical trajectory CSV and its unwrapped companion.
pub fn write_trajectory(out: &mut Outputs, traj: &Trajectory, path: &Path) -> IoResult<()> {
    out.write(path, &traj.to_csv(false))?;
    out.write(&unwrapped_path(path), &traj.to_csv(true))
}

/// Reads a trajectory CSV written by [`write_trajectory`], either the
/// canonical file or the unwrapped companion. Canonical x-columns are lifted
/// sample by sample; energies and momenta are recomputed.
pub fn read_trajectory(text: &str, cyl: Cylinder, vorticities: Vec<f64>, integrator: IntegratorConfig) -> IoResult<Trajectory> {
    let n = vorticities.len();
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(IoError::Invalid("empty trajectory file".into()));
    };
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() != 2 * n + 4 || cols[0] != "t" {
        return Err(IoError::Parse {
            line: 1,
            message: format!("header does not match {n} vortices"),
        });
    }
    let mut samples: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.trim().is_empty() {
            continue;
        }
        let vals = row
            .split(',')
            .map(|v| parse_f64(line, "value", v.trim()))
            .collect::<IoResult<Vec<f64>>>()?;
        if vals.len() != cols.len() {
            return Err(IoError::Parse {
                line,
                message: format!("expected {} columns, got {}", cols.len(), vals.len()),
            });
        }
        let mut x: Vec<f64> = (0..n).map(|k| vals[1 + 2 * k]).collect();
        let y: Vec<f64> = (0..n).map(|k| vals[2 + 2 * k]).collect();
        if let Some((_, px, _)) = samples.last() {
            let c = cyl.circumference();
            for (xk, prev) in x.iter_mut().zip(px) {
                // already lifted values are left alone
                if (*xk - prev).abs() >= 0.5 * c {
                    *xk = unwrap_step(*prev, *xk, &cyl)?;
                }
            }
        }
        samples.push((vals[0], x, y));
    }
    Ok(Trajectory::from_lifted(cyl, vorticities, integrator, samples)?)
}

/// Grid matrix (one row per line, top row first, NaN for masked cells)
/// and its `key = value` sidecar.
pub fn level_grid_text(grid: &LevelGrid) -> (String, String) {
    let mut matrix = String::new();
    for row in &grid.values {
        let line: Vec<String> = row.iter().map(|v| fmt17(*v)).collect();
        matrix.push_str(&line.join(" "));
        matrix.push('\n');
    }
    let mut side = String::new();
    match grid.kind {
        LevelKind::Split3 { c, gamma, gamma_p } => {
            let _ = writeln!(side, "kind = split3\nc_re = {}\nc_im = {}", fmt17(c.re), fmt17(c.im));
            let _ = writeln!(side, "gamma = {}\ngamma_prime = {}", fmt17(gamma), fmt17(gamma_p));
        }
        LevelKind::Split4 { b, gamma, gamma_p } => {
            let _ = writeln!(side, "kind = split4\nb = {}", fmt17(b));
            let _ = writeln!(side, "gamma = {}\ngamma_prime = {}", fmt17(gamma), fmt17(gamma_p));
        }
    }
    let w = grid.window;
    let _ = writeln!(side, "xi_min = {}\nxi_max = {}", fmt17(w.xi.0), fmt17(w.xi.1));
    let _ = writeln!(side, "eta_min = {}\neta_max = {}", fmt17(w.eta.0), fmt17(w.eta.1));
    let _ = writeln!(side, "columns = {}\nrows = {}", grid.n_xi, grid.n_eta);
    side.push_str("row_order = eta_descending\ncolumn_order = xi_ascending\nmasked = nan\n");
    (matrix, side)
}

/// `k,x,y,gamma` rows of the equilibrium configuration.
pub fn equilibrium_csv(res: &EquilibriumResult) -> String {
    let mut out = String::from("k,x,y,gamma\n");
    let cfg = &res.configuration;
    for (k, (p, g)) in cfg.points().iter().zip(cfg.vorticities()).enumerate() {
        let _ = writeln!(out, "{},{},{},{}", k + 1, fmt17(p.x), fmt17(p.y), fmt17(*g));
    }
    out
}

/// Human-readable equilibrium summary.
pub fn equilibrium_report(res: &EquilibriumResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "converged: {} ({} iterations)", res.converged, res.iterations);
    let _ = writeln!(out, "residual speed: {:e}", res.residual);
    let spec: Vec<String> = res.hessian_spectrum.iter().map(|v| format!("{v:e}")).collect();
    let _ = writeln!(out, "hessian spectrum: {}", spec.join(" "));
    let _ = writeln!(out, "certified: {}", res.certified);
    out
}

/// `T,drift_x,drift_y,residual,winding`; an absent winding is `nan`.
pub fn period_report_csv(reports: &[RelativePeriodReport]) -> String {
    let mut out = String::from("T,drift_x,drift_y,residual,winding\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt17(r.period),
            fmt17(r.drift.re),
            fmt17(r.drift.im),
            fmt17(r.residual),
            fmt17(r.winding.unwrap_or(f64::NAN))
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::integrate;

    const PAIR: &str = "radius = 1\nhorizon = 2 # short\n\n[vortices]\n0 0.3 1\n0 -0.3 -1\n";

    #[test]
    fn minimal_pair() {
        let cfg = parse_config(PAIR).unwrap();
        assert_eq!(cfg.vortices.len(), 2);
        assert_eq!(cfg.horizon, Some(2.0));
        assert_eq!(cfg.integrator, IntegratorConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("radius = 1\nspeed = 3\n[vortices]\n0 0 1\n").unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 2, .. }), "{e}");
        let e = parse_config("radius = 1\n[vortices]\n0 0 1\n1 two 1\n").unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 4, .. }));
        let e = parse_config("radius = 1\nradius = 2\n[vortices]\n0 0 1\n").unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 2, .. }));
        let e = parse_config("radius = 1\n[vortices]\n0 0\n").unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 3, .. }));
    }

    #[test]
    fn missing_radius_rejected() {
        let e = parse_config("[vortices]\n0 0 1\n").unwrap_err();
        assert!(e.to_string().contains("radius"));
    }

    #[test]
    fn collision_names_the_pair() {
        let cfg = parse_config("radius = 1\n[vortices]\n0 0 1\n1 1 1\n6.283185307179586 0 2\n").unwrap();
        let e = cfg.validate().unwrap_err();
        assert!(e.to_string().contains("vortices 1 and 3"), "{e}");
    }

    #[test]
    fn scheme_keys_are_checked() {
        assert!(parse_config("radius = 1\nscheme = rk4\n[vortices]\n0 0 1\n").is_err());
        assert!(parse_config("radius = 1\nstep = 0.1\n[vortices]\n0 0 1\n").is_err());
        let cfg = parse_config("radius = 1\nscheme = rk4\nstep = 0.01\n[vortices]\n0 0 1\n").unwrap();
        assert_eq!(cfg.integrator.scheme, Scheme::Rk4 { step: 0.01 });
    }

    #[test]
    fn config_round_trip() {
        let mut cfg = parse_config(PAIR).unwrap();
        cfg.integrator.max_step = Some(0.1);
        cfg.integrator.output = OutputMode::Every(0.1 + 0.2);
        cfg.detect_tol = Some(1e-7);
        cfg.vortices[0].0 = std::f64::consts::PI / 7.0;
        let back = parse_config(&write_config(&cfg)).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn companion_paths() {
        assert_eq!(unwrapped_path(Path::new("a/run.csv")), PathBuf::from("a/run.unwrapped.csv"));
        assert_eq!(unwrapped_path(Path::new("run")), PathBuf::from("run.unwrapped"));
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let cfg = parse_config(PAIR).unwrap();
        let conf = cfg.configuration().unwrap();
        let icfg = cfg.integrator.with_output(OutputMode::Every(0.5));
        let traj = integrate(&conf, 40.0, &icfg).unwrap();
        for unwrapped in [false, true] {
            let back = read_trajectory(&traj.to_csv(unwrapped), conf.cylinder().to_owned(), conf.vorticities().to_vec(), icfg).unwrap();
            assert_eq!(back.len(), traj.len());
            let last = traj.len() - 1;
            for k in 0..2 {
                assert_eq!(back.samples()[last].x[k], traj.samples()[last].x[k]);
            }
        }
    }

    #[test]
    fn outputs_are_removed_unless_kept() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        {
            let mut out = Outputs::new();
            out.write(&a, "x").unwrap();
        }
        assert!(!a.exists());
        let mut out = Outputs::new();
        out.write(&a, "x").unwrap();
        out.keep();
        assert!(a.exists());
    }
}
