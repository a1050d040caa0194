use std::f64::consts::{PI, SQRT_2};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use cylvort::cylinder::{nfold_copy, quotient_distance, Configuration, CylPoint, Cylinder};
use cylvort::dynamics::{hamiltonian, integrate, IntegratorConfig, OutputMode};
use cylvort::equilibria::{completing_vorticity, is_equilibrium, ring_equilibrium, stagnation_points, CyclicOrder};
use cylvort::io::{
    equilibrium_csv, equilibrium_report, level_grid_text, period_report_csv, read_config, read_trajectory, write_config,
    write_trajectory, IoError, IoResult, Outputs, RunConfig,
};
use cylvort::kernel::cotan;
use cylvort::reduced::{
    classify_regime, embed3, embed4, eta_re, eta_re_perturbative, level_grid, reduced_h3, reduced_h4, rho_critical,
    rho_perturbative, LevelKind, Split3, Split4, Window,
};
use cylvort::rpo::{cotan_average, detect_relative_period, verify_relative_equilibrium, vortex_street_family, DEFAULT_PERIOD_TOLERANCE};

#[derive(Parser)]
#[command(name = "cylvort", version, about = "Point vortices on a cylinder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configuration file and write the trajectory CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `horizon` from the file.
        #[arg(long)]
        horizon: Option<f64>,
        /// Overrides `output` from the file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Same-sign ring equilibrium in a given cyclic order.
    Equilibrium {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        gammas: Vec<f64>,
        /// Cyclic order as 1-based vortex indices; defaults to 1,2,…,N.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<usize>>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Stagnation points of a two-vortex field and the vorticity that makes
    /// a third vortex there an equilibrium.
    Complete3 {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        z1: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        z2: Vec<f64>,
        #[arg(long, allow_negative_numbers = true)]
        g1: f64,
        #[arg(long, allow_negative_numbers = true)]
        g2: f64,
    },
    /// Reduced energy of a three-vortex split and its embedding.
    Reduce3 {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, allow_negative_numbers = true)]
        c_re: f64,
        #[arg(long, allow_negative_numbers = true)]
        c_im: f64,
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long, allow_negative_numbers = true)]
        gamma_prime: f64,
        #[arg(long, allow_negative_numbers = true)]
        zeta_re: f64,
        #[arg(long, allow_negative_numbers = true)]
        zeta_im: f64,
    },
    /// Reduced energy of two antipodal pairs, its regime and embedding.
    Reduce4 {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long, allow_negative_numbers = true)]
        gamma_prime: f64,
        #[arg(long, allow_negative_numbers = true)]
        zeta_re: f64,
        #[arg(long, allow_negative_numbers = true)]
        zeta_im: f64,
    },
    /// Sample a reduced energy on a grid (unit radius).
    Contour {
        #[arg(long, value_enum)]
        kind: GridKind,
        /// Pair half-separation for split4.
        #[arg(long)]
        b: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        c_re: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        c_im: Option<f64>,
        /// Γ/Γ′ with Γ′ = 1; alternative to --gamma/--gamma-prime.
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        gamma: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        gamma_prime: Option<f64>,
        #[arg(long, allow_negative_numbers = true, default_value_t = -PI / 2.0)]
        xi_min: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = PI / 2.0)]
        xi_max: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = -3.0)]
        eta_min: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 3.0)]
        eta_max: f64,
        #[arg(long, default_value_t = 201)]
        nx: usize,
        #[arg(long, default_value_t = 201)]
        ny: usize,
        /// Matrix file; the header goes next to it with `.header` appended.
        #[arg(long, default_value = "contour.txt")]
        output: PathBuf,
    },
    /// Leapfrogging threshold for two antipodal pairs.
    Separatrix {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        gamma_prime: f64,
        /// Compare with the second-order expansion in ε = Γ/Γ′ − 1.
        #[arg(long)]
        expansion: bool,
    },
    /// Two staggered rows of n vortices each, written as a config file.
    Street {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Detect a relative period on a trajectory (read from --trajectory or
    /// integrated from the config).
    Rpo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Closure tolerance relative to the radius.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Identities, conservation and covering checks.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridKind {
    Split3,
    Split4,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("cylvort: {e}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("cylvort: {e}");
            ExitCode::FAILURE
        }
    }
}

fn configure_threads() -> IoResult<()> {
    let Ok(v) = std::env::var("CYLVORT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| IoError::Invalid(format!("CYLVORT_THREADS must be an integer ≥ 1, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| IoError::Invalid(e.to_string()))
}

fn point(v: &[f64]) -> IoResult<CylPoint> {
    match v {
        [x, y] => Ok(CylPoint::new(*x, *y)),
        _ => Err(IoError::Invalid(format!("a point is `x,y`, got {} values", v.len()))),
    }
}

fn gammas_of(ratio: Option<f64>, gamma: Option<f64>, gamma_p: Option<f64>) -> IoResult<(f64, f64)> {
    match (ratio, gamma, gamma_p) {
        (Some(q), None, None) => Ok((q, 1.0)),
        (None, Some(g), Some(gp)) => Ok((g, gp)),
        _ => Err(IoError::Invalid("give either --ratio or both --gamma and --gamma-prime".into())),
    }
}

fn print_configuration(cfg: &Configuration) {
    println!("k,x,y,gamma");
    for (k, (p, g)) in cfg.points().iter().zip(cfg.vorticities()).enumerate() {
        println!("{},{:.16e},{:.16e},{:.16e}", k + 1, p.x, p.y, g);
    }
}

fn scaled(cfg: &Configuration, r: f64) -> IoResult<Configuration> {
    let cyl = Cylinder::new(r)?;
    let pts = cfg.points().iter().map(|p| CylPoint::new(p.x * r, p.y * r)).collect();
    Ok(Configuration::new(cyl, pts, cfg.vorticities().to_vec())?)
}

fn run(cmd: Command) -> IoResult<ExitCode> {
    match cmd {
        Command::Simulate { config, horizon, output } => {
            let cfg = read_config(&config)?;
            let horizon = horizon
                .or(cfg.horizon)
                .ok_or_else(|| IoError::Invalid("no horizon given (config key `horizon` or --horizon)".into()))?;
            let output = output
                .or(cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("trajectory.csv"));
            let conf = cfg.configuration()?;
            let mut out = Outputs::new();
            let traj = match integrate(&conf, horizon, &cfg.integrator) {
                Ok(t) => t,
                Err(f) => {
                    // keep nothing, but say how far the run got
                    let reached = f.partial.samples().last().map_or(0.0, |s| s.t);
                    return Err(IoError::Invalid(format!("{} (integration stopped at t = {reached})", f.error)));
                }
            };
            write_trajectory(&mut out, &traj, &output)?;
            println!("samples: {}", traj.len());
            println!("energy drift: {:e}", traj.energy_drift());
            println!("momentum drift: {:e}", traj.momentum_drift());
            for p in out.paths() {
                println!("wrote {}", p.display());
            }
            out.keep();
        }
        Command::Equilibrium {
            radius,
            gammas,
            order,
            output,
        } => {
            let cyl = Cylinder::new(radius)?;
            let order = match order {
                Some(o) => {
                    if o.contains(&0) {
                        return Err(IoError::Invalid("order indices are 1-based".into()));
                    }
                    CyclicOrder::new(o.into_iter().map(|k| k - 1).collect())?
                }
                None => CyclicOrder::identity(gammas.len()),
            };
            let res = ring_equilibrium(&gammas, &order, &cyl)?;
            print!("{}", equilibrium_report(&res));
            let mut out = Outputs::new();
            match output {
                Some(p) => out.write(&p, &equilibrium_csv(&res))?,
                None => print!("{}", equilibrium_csv(&res)),
            }
            out.keep();
            if !res.certified {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Complete3 { radius, z1, z2, g1, g2 } => {
            let cyl = Cylinder::new(radius)?;
            let (p1, p2) = (point(&z1)?, point(&z2)?);
            let stag = stagnation_points(p1, p2, g1, g2, &cyl)?;
            println!("stagnation,x,y,gamma3,residual");
            for (k, s) in stag.iter().enumerate() {
                match completing_vorticity(p1, p2, g1, g2, *s, &cyl) {
                    Ok(g3) => {
                        let conf = Configuration::new(cyl, vec![p1, p2, *s], vec![g1, g2, g3])?;
                        let (_, res) = is_equilibrium(&conf, 1e-9)?;
                        println!("{},{:.16e},{:.16e},{:.16e},{:e}", k + 1, s.x, s.y, g3, res);
                    }
                    Err(e) => println!("{},{:.16e},{:.16e},nan,nan # {e}", k + 1, s.x, s.y),
                }
            }
        }
        Command::Reduce3 {
            radius,
            c_re,
            c_im,
            gamma,
            gamma_prime,
            zeta_re,
            zeta_im,
        } => {
            let s = Split3::new(
                Complex64::new(c_re, c_im) / radius,
                gamma,
                gamma_prime,
                Complex64::new(zeta_re, zeta_im) / radius,
            )?;
            let conf = scaled(&embed3(&s)?, radius)?;
            println!("reduced H: {:.16e}", reduced_h3(&s)?);
            println!("full H: {:.16e}", hamiltonian(&conf)?);
            print_configuration(&conf);
        }
        Command::Reduce4 {
            radius,
            b,
            gamma,
            gamma_prime,
            zeta_re,
            zeta_im,
        } => {
            let s = Split4::new(b / radius, gamma, gamma_prime, Complex64::new(zeta_re, zeta_im) / radius)?;
            let conf = scaled(&embed4(&s)?, radius)?;
            println!("reduced H: {:.16e}", reduced_h4(&s)?);
            println!("full H: {:.16e}", hamiltonian(&conf)?);
            println!("regime: {:?}", classify_regime(&s)?);
            print_configuration(&conf);
        }
        Command::Contour {
            kind,
            b,
            c_re,
            c_im,
            ratio,
            gamma,
            gamma_prime,
            xi_min,
            xi_max,
            eta_min,
            eta_max,
            nx,
            ny,
            output,
        } => {
            let (g, gp) = gammas_of(ratio, gamma, gamma_prime)?;
            let kind = match kind {
                GridKind::Split4 => LevelKind::Split4 {
                    b: b.ok_or_else(|| IoError::Invalid("split4 needs --b".into()))?,
                    gamma: g,
                    gamma_p: gp,
                },
                GridKind::Split3 => LevelKind::Split3 {
                    c: Complex64::new(
                        c_re.ok_or_else(|| IoError::Invalid("split3 needs --c-re".into()))?,
                        c_im.ok_or_else(|| IoError::Invalid("split3 needs --c-im".into()))?,
                    ),
                    gamma: g,
                    gamma_p: gp,
                },
            };
            let window = Window::new((xi_min, xi_max), (eta_min, eta_max))?;
            let grid = level_grid(kind, window, nx, ny)?;
            let (matrix, header) = level_grid_text(&grid);
            let mut header_path = output.clone().into_os_string();
            header_path.push(".header");
            let mut out = Outputs::new();
            out.write(&output, &matrix)?;
            out.write(Path::new(&header_path), &header)?;
            for p in out.paths() {
                println!("wrote {}", p.display());
            }
            out.keep();
        }
        Command::Separatrix {
            radius,
            b,
            gamma,
            gamma_prime,
            expansion,
        } => {
            let bn = b / radius;
            let sep = rho_critical(bn, gamma, gamma_prime)?;
            let er = eta_re(bn, gamma, gamma_prime)?;
            println!("rho: {:.16e}", sep.rho * radius);
            println!("crossing eta: {:.16e}", sep.rho_eta * radius);
            println!("saddle: xi = {:.16e}, eta = {:.16e}", sep.zeta_re.re * radius, er * radius);
            println!("saddle energy: {:.16e}", sep.h_saddle);
            println!("plane limit b/sqrt2: {:.16e}", b / SQRT_2);
            if gamma == gamma_prime {
                println!("closed form rho: {:.16e}", (bn.tanh() / SQRT_2).atanh() * radius);
            }
            if expansion {
                let eps = gamma / gamma_prime - 1.0;
                println!("eps: {eps:e}");
                println!("eta_re expansion: {:.16e}", eta_re_perturbative(bn, eps) * radius);
                println!("rho expansion: {:.16e}", rho_perturbative(bn, eps) * radius);
            }
        }
        Command::Street {
            radius,
            n,
            a,
            b,
            gamma,
            output,
        } => {
            let cyl = Cylinder::new(radius)?;
            let street = vortex_street_family(n, a, b, gamma, &cyl)?;
            let check = verify_relative_equilibrium(&street, 1e-9)?;
            println!("relative equilibrium: {}", check.is_relative_equilibrium);
            println!(
                "velocity: {:.16e} {:.16e} (spread {:e})",
                check.common_velocity.vx, check.common_velocity.vy, check.spread
            );
            let run = RunConfig::new(radius, street.points().iter().zip(street.vorticities()).map(|(p, g)| (p.x, p.y, *g)).collect());
            let mut out = Outputs::new();
            match output {
                Some(p) => out.write(&p, &write_config(&run))?,
                None => print!("{}", write_config(&run)),
            }
            out.keep();
            if !check.is_relative_equilibrium {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Rpo {
            config,
            trajectory,
            tol,
            output,
        } => {
            let cfg = read_config(&config)?;
            let conf = cfg.configuration()?;
            let traj = match trajectory {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| IoError::File {
                        path: p.clone(),
                        message: e.to_string(),
                    })?;
                    read_trajectory(&text, *conf.cylinder(), conf.vorticities().to_vec(), cfg.integrator)?
                }
                None => {
                    let horizon = cfg
                        .horizon
                        .ok_or_else(|| IoError::Invalid("no trajectory file and no horizon in the config".into()))?;
                    integrate(&conf, horizon, &cfg.integrator).map_err(|f| f.error)?
                }
            };
            let tol = tol.or(cfg.detect_tol).unwrap_or(DEFAULT_PERIOD_TOLERANCE) * cfg.radius;
            let Some(rep) = detect_relative_period(&traj, tol)? else {
                return Err(IoError::Invalid("no relative period found within the horizon".into()));
            };
            let csv = period_report_csv(std::slice::from_ref(&rep));
            let mut out = Outputs::new();
            match output {
                Some(p) => out.write(&p, &csv)?,
                None => print!("{csv}"),
            }
            if rep.continuous {
                println!("closure holds at every sample: relative equilibrium");
            }
            out.keep();
        }
        Command::Selftest => {
            let checks = selftest();
            let mut ok = true;
            for (name, pass, detail) in &checks {
                ok &= *pass;
                println!("{} {name}: {detail}", if *pass { "PASS" } else { "FAIL" });
            }
            if !ok {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

type Check = (&'static str, bool, String);

fn selftest() -> Vec<Check> {
    let mut checks = Vec::new();

    // cotan averaging over a fixed grid of points off the poles
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let z = Complex64::new(-2.9 + 0.61 * i as f64, -1.9 + 0.41 * j as f64);
            for n in [2, 3, 5] {
                let c = cotan(z);
                worst = worst.max((cotan_average(z, n) - c).norm() / c.norm().max(1.0));
            }
        }
    }
    checks.push(("cotan identity", worst < 1e-12, format!("max error {worst:e}")));

    let conservation = || -> cylvort::Result<(f64, f64)> {
        let conf = Configuration::from_triples(Cylinder::unit(), &[(0.1, 0.4, 1.0), (2.0, -0.3, 0.7), (4.0, 0.9, -0.5), (5.1, -0.8, 1.3)])?;
        let traj = integrate(&conf, 20.0, &IntegratorConfig::adaptive(1e-10)).map_err(|f| f.error)?;
        Ok((traj.energy_drift(), traj.momentum_drift()))
    };
    match conservation() {
        Ok((e, p)) => {
            checks.push(("energy conservation", e < 1e-7, format!("drift {e:e}")));
            checks.push(("momentum conservation", p < 1e-7, format!("drift {p:e}")));
        }
        Err(e) => checks.push(("conservation", false, e.to_string())),
    }

    let covering = || -> cylvort::Result<f64> {
        let base = Configuration::from_triples(Cylinder::unit(), &[(0.3, 0.5, 1.0), (2.5, -0.2, 0.6), (4.4, 0.1, -1.2)])?;
        let icfg = IntegratorConfig::adaptive(1e-12).with_output(OutputMode::Every(1.0));
        let a = integrate(&base, 10.0, &icfg).map_err(|f| f.error)?;
        let b = integrate(&nfold_copy(&base, 3)?, 10.0, &icfg).map_err(|f| f.error)?;
        let big = *b.cylinder();
        let mut worst: f64 = 0.0;
        for (sa, sb) in a.samples().iter().zip(b.samples()) {
            for m in 0..3 {
                for k in 0..3 {
                    let p = CylPoint::new(sa.x[k] + 2.0 * PI * m as f64, sa.y[k]);
                    let q = CylPoint::new(sb.x[3 * m + k], sb.y[3 * m + k]);
                    worst = worst.max(quotient_distance(p, q, &big));
                }
            }
        }
        Ok(worst)
    };
    match covering() {
        Ok(d) => checks.push(("covering equivalence", d < 1e-6, format!("max deviation {d:e}"))),
        Err(e) => checks.push(("covering equivalence", false, e.to_string())),
    }

    let reduced = || -> cylvort::Result<f64> {
        let s = Split4::new(1.0, 1.5, 1.0, Complex64::new(0.3, 0.2))?;
        let mut diffs = Vec::new();
        for k in 0..5 {
            let z = Complex64::new(0.2 + 0.25 * k as f64, -0.3 + 0.15 * k as f64);
            let s = s.with_zeta(z);
            diffs.push(reduced_h4(&s)? - hamiltonian(&embed4(&s)?)?);
        }
        let lo = diffs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(hi - lo)
    };
    match reduced() {
        Ok(d) => checks.push(("reduced energy offset", d < 1e-10, format!("spread {d:e}"))),
        Err(e) => checks.push(("reduced energy offset", false, e.to_string())),
    }

    let threshold = rho_critical(1.0, 1.0, 1.0).map(|s| (SQRT_2 * s.rho.tanh() - 1f64.tanh()).abs());
    match threshold {
        Ok(d) => checks.push(("leapfrog threshold closed form", d < 1e-12, format!("error {d:e}"))),
        Err(e) => checks.push(("leapfrog threshold closed form", false, e.to_string())),
    }

    let pair = Configuration::from_triples(Cylinder::unit(), &[(0.0, 0.5, 1.0), (0.9, -0.4, -1.0)]);
    match pair.and_then(|c| verify_relative_equilibrium(&c, 1e-9)) {
        Ok(chk) => checks.push(("vortex pair drifts rigidly", chk.is_relative_equilibrium, format!("spread {:e}", chk.spread))),
        Err(e) => checks.push(("vortex pair drifts rigidly", false, e.to_string())),
    }
    checks
}
