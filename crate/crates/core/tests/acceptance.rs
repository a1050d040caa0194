//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test --test acceptance -- --nocapture --test-threads 1`
//! to see the table.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cylvort::cylinder::{nfold_copy, quotient_distance, shape_distance, Configuration, CylPoint, Cylinder};
use cylvort::dynamics::{hamiltonian, integrate, IntegratorConfig, OutputMode};
use cylvort::equilibria::{
    completing_vorticity, is_equilibrium, ring_equilibrium, ring_equilibrium_multistart, stagnation_points, CyclicOrder,
};
use cylvort::kernel::cotan;
use cylvort::reduced::{
    embed3, embed4, eta_re, eta_re_perturbative, level_grid, reduced_h3, reduced_h4, rho_critical, rho_critical_radius,
    rho_perturbative, split4_symmetry_line_critical_points, CriticalKind, LevelKind, Split3, Split4, Window,
};
use cylvort::rpo::{cotan_average, vortex_pair_drift, winding_angle, zeta_series, Slope};

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    println!("{} criterion {n} ({name}): {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

/// `count` vortices with pairwise quotient distance at least `min_sep` and
/// vorticities of modulus in `[0.2, 2]`.
fn random_config(rng: &mut ChaCha8Rng, cyl: Cylinder, count: usize, min_sep: f64) -> Configuration {
    let c = cyl.circumference();
    loop {
        let pts: Vec<CylPoint> = (0..count)
            .map(|_| CylPoint::new(rng.gen_range(0.0..c), rng.gen_range(-1.0..1.0) * cyl.radius()))
            .collect();
        let ok = (0..count).all(|i| (i + 1..count).all(|j| quotient_distance(pts[i], pts[j], &cyl) >= min_sep));
        if !ok {
            continue;
        }
        let gs = (0..count)
            .map(|_| rng.gen_range(0.2..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        return Configuration::new(cyl, pts, gs).unwrap();
    }
}

#[test]
fn criterion_01_conservation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let (mut worst_h, mut worst_p) = (0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for k in 0..50 {
        let n = 2 + k % 4;
        let cfg = random_config(&mut rng, Cylinder::unit(), n, 0.3);
        match integrate(&cfg, 20.0, &IntegratorConfig::adaptive(1e-10)) {
            Ok(traj) => {
                worst_h = worst_h.max(traj.energy_drift());
                worst_p = worst_p.max(traj.momentum_drift());
            }
            Err(f) => failures.push(format!("run {k}: {}", f.error)),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && worst_h < 1e-7 && worst_p < 1e-7 && secs < 60.0;
    verdict(
        1,
        "conservation",
        pass,
        format!("max |ΔH| {worst_h:e}, max |ΔP| {worst_p:e}, {secs:.1} s, failed runs {failures:?}"),
    );
}

#[test]
fn criterion_02_vortex_pair() {
    let cyl = Cylinder::unit();
    let pair = Configuration::from_triples(cyl, &[(0.3, 0.5, 1.0), (1.4, -0.3, -1.0)]).unwrap();
    let traj = integrate(&pair, 50.0, &IntegratorConfig::default().with_output(OutputMode::Every(0.25))).unwrap();
    let first = traj.configuration(0);
    let shape = (0..traj.len())
        .map(|i| shape_distance(&traj.configuration(i), &first).unwrap())
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut slope_err = 0.0f64;
    for _ in 0..20 {
        let r = rng.gen_range(0.5..2.0);
        let cyl = Cylinder::new(r).unwrap();
        let (x1, y1) = (rng.gen_range(0.0..2.0 * PI * r), rng.gen_range(-r..r));
        let dx = rng.gen_range(0.2..2.5) * r;
        let dy = rng.gen_range(0.3..1.5) * r * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let z1 = CylPoint::new(x1, y1);
        let z2 = CylPoint::new(x1 + dx, y1 + dy);
        let cfg = Configuration::new(cyl, vec![z1, z2], vec![1.0, -1.0]).unwrap();
        let traj = integrate(&cfg, 5.0, &IntegratorConfig::default()).unwrap();
        let (s0, s1) = (&traj.samples()[0], traj.samples().last().unwrap());
        let measured = (s1.y[0] - s0.y[0]) / (s1.x[0] - s0.x[0]);
        let formula = -(dx / r).sin() / (dy / r).sinh();
        slope_err = slope_err.max((measured - formula).abs());
        let Slope::Finite(s) = vortex_pair_drift(z1, z2, 1.0, &cyl).unwrap().slope else {
            panic!("generic pair reported a non-finite slope")
        };
        slope_err = slope_err.max((s - formula).abs());
    }

    let big = Cylinder::new(1e3).unwrap();
    let (dx, dy) = (0.8, -1.3);
    let d = vortex_pair_drift(CylPoint::new(0.0, 0.0), CylPoint::new(dx, dy), 1.0, &big).unwrap();
    let plane_err = match d.slope {
        Slope::Finite(s) => (s + dx / dy).abs(),
        _ => f64::INFINITY,
    };
    verdict(
        2,
        "vortex pair",
        shape < 1e-6 && slope_err < 1e-8 && plane_err < 1e-5,
        format!("shape drift {shape:e}, slope error {slope_err:e}, plane-limit error {plane_err:e}"),
    );
}

#[test]
fn criterion_03_ring_equilibria() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_res = 0.0f64;
    let mut worst_zero = 0.0f64;
    let mut worst_spread = 0.0f64;
    let mut worst_equal = 0.0f64;
    let mut all_certified = true;
    for n in 2..=6 {
        let cyl = Cylinder::new(rng.gen_range(0.5..2.0)).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let gammas: Vec<f64> = (0..n).map(|_| sign * rng.gen_range(0.2..3.0)).collect();
        let mut orders = vec![CyclicOrder::identity(n)];
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        orders.push(CyclicOrder::new(perm).unwrap());
        for order in &orders {
            let res = ring_equilibrium(&gammas, order, &cyl).unwrap();
            worst_res = worst_res.max(res.residual);
            all_certified &= res.certified;
            let top = res.hessian_spectrum.last().copied().unwrap_or(1.0).max(1.0);
            worst_zero = worst_zero.max(res.hessian_spectrum[0].abs() / top);
            all_certified &= res.hessian_spectrum[1..].iter().all(|v| *v > 0.0);
            let c = cyl.circumference();
            let starts: Vec<Vec<f64>> = (0..20)
                .map(|_| {
                    let mut s: Vec<f64> = (1..n).map(|_| rng.gen_range(0.0..c)).collect();
                    s.sort_by(f64::total_cmp);
                    s
                })
                .filter(|s| s.windows(2).all(|w| w[1] > w[0]) && s.iter().all(|v| *v > 0.0))
                .collect();
            for other in ring_equilibrium_multistart(&gammas, order, &cyl, &starts).unwrap() {
                all_certified &= other.converged;
                worst_spread = worst_spread.max(shape_distance(&other.configuration, &res.configuration).unwrap());
            }
        }
        let equal = ring_equilibrium(&vec![1.0; n], &CyclicOrder::identity(n), &cyl).unwrap();
        let c = cyl.circumference();
        for (k, p) in equal.configuration.points().iter().enumerate() {
            let target = c * k as f64 / n as f64;
            worst_equal = worst_equal.max(cyl.centered(p.x - target).abs());
        }
    }
    verdict(
        3,
        "ring equilibria",
        all_certified && worst_res < 1e-9 && worst_zero < 1e-10 && worst_spread < 1e-8 && worst_equal < 1e-10,
        format!(
            "max residual {worst_res:e}, max |λ0|/λmax {worst_zero:e}, multistart spread {worst_spread:e}, equal-spacing error {worst_equal:e}, certified {all_certified}"
        ),
    );
}

#[test]
fn criterion_04_three_vortex_completion() {
    let g = 1.3;
    let vertical = |b: f64, r: f64, g: f64| {
        let cyl = Cylinder::new(r).unwrap();
        completing_vorticity(CylPoint::new(0.0, -b), CylPoint::new(0.0, b), g, g, CylPoint::new(0.0, 0.0), &cyl).unwrap()
    };
    let horizontal = |a: f64, r: f64, g: f64| {
        let cyl = Cylinder::new(r).unwrap();
        completing_vorticity(CylPoint::new(-a, 0.0), CylPoint::new(a, 0.0), g, g, CylPoint::new(0.0, 0.0), &cyl).unwrap()
    };
    let mut v_err = 0.0f64;
    for k in 0..=49 {
        let b = 0.1 + 0.1 * k as f64;
        for r in [0.7, 1.0, 2.5] {
            let expect = g * (0.5 / (b / (2.0 * r)).cosh().powi(2) - 1.0);
            v_err = v_err.max((vertical(b, r, g) - expect).abs());
        }
    }
    let mut h_err = 0.0f64;
    for k in 1..=30 {
        let r = 1.5;
        let a = 0.1 * k as f64;
        let expect = g * (0.5 / (a / (2.0 * r)).cos().powi(2) - 1.0);
        h_err = h_err.max((horizontal(a, r, g) - expect).abs());
    }
    let at_quarter = horizontal(PI * 1.5 / 2.0, 1.5, g).abs();
    let plane = (vertical(1.0, 1e3, g) + g / 2.0).abs();
    let far = (vertical(20.0, 1.0, g) + g).abs();

    let cyl = Cylinder::new(1.2).unwrap();
    let cases = [
        (CylPoint::new(0.4, 0.3), CylPoint::new(0.4, -0.9), 1.0, 2.5),
        (CylPoint::new(0.4, 0.3), CylPoint::new(1.6, 0.3), 0.7, 0.7),
        (CylPoint::new(0.0, 0.6), CylPoint::new(0.0, -0.6), 1.3, 1.3),
    ];
    let mut full = 0.0f64;
    for (p1, p2, g1, g2) in cases {
        for s in stagnation_points(p1, p2, g1, g2, &cyl).unwrap() {
            let g3 = completing_vorticity(p1, p2, g1, g2, s, &cyl).unwrap();
            let cfg = Configuration::new(cyl, vec![p1, p2, s], vec![g1, g2, g3]).unwrap();
            full = full.max(is_equilibrium(&cfg, 1e-9).unwrap().1);
        }
    }
    verdict(
        4,
        "three-vortex completion",
        v_err < 1e-12 && h_err < 1e-12 && at_quarter < 1e-12 && plane < 1e-5 && far < 1e-8 && full < 1e-9,
        format!(
            "vertical {v_err:e}, horizontal {h_err:e}, a = πr/2 {at_quarter:e}, plane limit {plane:e}, far limit {far:e}, residual speed {full:e}"
        ),
    );
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
}

#[test]
fn criterion_05_reduced_vs_full() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let (g, gp) = (rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0));
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.4..1.5));
        let mut d3 = Vec::new();
        while d3.len() < 20 {
            let zeta = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.4..0.4));
            let s = Split3::new(c, g, gp, zeta).unwrap();
            if let (Ok(h), Ok(cfg)) = (reduced_h3(&s), embed3(&s)) {
                d3.push(h - hamiltonian(&cfg).unwrap());
            }
        }
        worst = worst.max(variance(&d3));

        let b = rng.gen_range(0.5..2.0);
        let mut d4 = Vec::new();
        while d4.len() < 20 {
            let zeta = Complex64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-0.3..0.3) * b);
            let s = Split4::new(b, g, gp, zeta).unwrap();
            if let (Ok(h), Ok(cfg)) = (reduced_h4(&s), embed4(&s)) {
                d4.push(h - hamiltonian(&cfg).unwrap());
            }
        }
        worst = worst.max(variance(&d4));
    }
    verdict(5, "reduced vs full", worst < 1e-10, format!("max variance of the offset {worst:e}"));
}

/// Lifted horizontal distance between the two pair centres.
fn pair_separation(zs: &[Complex64]) -> f64 {
    (zs[0] + zs[3] - zs[1] - zs[2]).re.abs() / 2.0
}

#[test]
fn criterion_06_leapfrog_threshold() {
    let b = 1.0;
    let rho = rho_critical(b, 1.0, 1.0).unwrap().rho;
    let closed = (SQRT_2 * rho.tanh() - b.tanh()).abs();
    let horizon = 100.0;
    let icfg = IntegratorConfig::default().with_output(OutputMode::Every(0.05));

    let run = |eta0: f64| {
        let s = Split4::new(b, 1.0, 1.0, Complex64::new(0.0, eta0)).unwrap();
        let traj = integrate(&embed4(&s).unwrap(), horizon, &icfg).unwrap();
        let w = winding_angle(&zeta_series(&traj, 0, 1).unwrap()).unwrap();
        let sep: Vec<f64> = (0..traj.len()).map(|i| pair_separation(&traj.zs(i))).collect();
        (w, sep)
    };
    let (w_in, _) = run(0.9 * rho);
    let (w_out, sep) = run(1.1 * rho);
    let monotone = sep.windows(2).all(|p| p[1] >= p[0]) && sep.last().unwrap() > &(sep[0] + 1.0);
    let plane = (rho_critical_radius(b, 1.0, 1.0, 1e3).unwrap() - b / SQRT_2).abs();
    let pass = closed < 1e-12
        && !w_in.unreliable
        && w_in.radians.abs() > 2.0 * PI
        && !w_out.unreliable
        && w_out.radians.abs() < 2.0 * PI
        && monotone
        && plane < 1e-5;
    verdict(
        6,
        "leapfrog threshold",
        pass,
        format!(
            "closed form {closed:e}; winding at 0.9ρ {:.3} rad, at 1.1ρ {:.3} rad over t = {horizon}; separation monotone {monotone} (final {:.3}); plane limit {plane:e}",
            w_in.radians,
            w_out.radians,
            sep.last().unwrap()
        ),
    );
}

fn loglog_slope(eps: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn criterion_07_perturbative_agreement() {
    let b = 1.0;
    let eps = [0.01, 0.02, 0.04];
    let mut e_eta = Vec::new();
    let mut e_rho = Vec::new();
    for e in eps {
        e_eta.push((eta_re(b, 1.0 + e, 1.0).unwrap() - eta_re_perturbative(b, e)).abs());
        e_rho.push((rho_critical(b, 1.0 + e, 1.0).unwrap().rho - rho_perturbative(b, e)).abs());
    }
    let s_eta = loglog_slope(&eps, &e_eta);
    let s_rho = loglog_slope(&eps, &e_rho);
    verdict(
        7,
        "perturbative agreement",
        s_eta >= 2.7 && s_rho >= 2.7,
        format!("log-log slope η_re {s_eta:.3} (errors {e_eta:?}), ρ {s_rho:.3} (errors {e_rho:?})"),
    );
}

#[test]
fn criterion_08_covering_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let icfg = IntegratorConfig::adaptive(1e-12).with_output(OutputMode::Every(0.5));
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let count = rng.gen_range(2..=4);
        let base = random_config(&mut rng, Cylinder::unit(), count, 0.3);
        let a = integrate(&base, 10.0, &icfg).unwrap();
        for n in [2, 3] {
            let cover = nfold_copy(&base, n).unwrap();
            let b = integrate(&cover, 10.0, &icfg).unwrap();
            let big = *cover.cylinder();
            let c = 2.0 * PI;
            // lifted coordinates keep the copy labels fixed when a base
            // vortex crosses the seam
            for (sa, sb) in a.samples().iter().zip(b.samples()) {
                for m in 0..n {
                    for k in 0..count {
                        let p = CylPoint::new(sa.x[k] + c * m as f64, sa.y[k]);
                        let q = CylPoint::new(sb.x[m * count + k], sb.y[m * count + k]);
                        worst = worst.max(quotient_distance(p, q, &big));
                    }
                }
            }
        }
    }
    verdict(8, "covering equivalence", worst < 1e-6, format!("max deviation {worst:e}"));
}

#[test]
fn criterion_09_cotan_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let z = Complex64::new(rng.gen_range(-PI..PI), rng.gen_range(-2.0..2.0));
        for n in [2, 3, 5] {
            let c = cotan(z);
            worst = worst.max((cotan_average(z, n) - c).norm() / c.norm().max(1.0));
        }
    }
    verdict(9, "cotan identity", worst < 1e-12, format!("max error {worst:e}"));
}

#[test]
fn criterion_10_level_sets() {
    let w = Window::new((-FRAC_PI_2, FRAC_PI_2), (-10.0, 10.0)).unwrap();
    let (nx, ny) = (61, 121);
    let up = level_grid(LevelKind::Split4 { b: 1.0, gamma: 1.5, gamma_p: 1.0 }, w, nx, ny).unwrap();
    let down = level_grid(LevelKind::Split4 { b: 1.0, gamma: 1.0, gamma_p: 1.5 }, w, nx, ny).unwrap();
    let mut mirror = 0.0f64;
    let mut masks_agree = true;
    for j in 0..ny {
        for i in 0..nx {
            masks_agree &= up.mask[j][i] == down.mask[ny - 1 - j][i];
            if !up.mask[j][i] {
                mirror = mirror.max((up.values[j][i] - down.values[ny - 1 - j][i]).abs());
            }
        }
    }
    // energies are in units of ΓΓ′/2π
    let equal = level_grid(LevelKind::Split4 { b: 1.0, gamma: 1.0, gamma_p: 1.0 }, w, nx, ny).unwrap();
    let mut asym = 0.0f64;
    for j in [0, ny - 1] {
        for i in 0..nx {
            let xi = equal.xi(i);
            let expect = (xi.sin().powi(2) + 1f64.sinh().powi(2)).ln();
            asym = asym.max((2.0 * PI * equal.values[j][i] - expect).abs());
        }
    }
    // C₊: above the upper singular circle
    let (_, upper) = Split4::new(1.0, 1.5, 1.0, Complex64::new(0.0, 0.0)).unwrap().singular_circles();
    let pts = split4_symmetry_line_critical_points(1.0, 1.5, 1.0, upper + 1e-3, 12.0, 4000).unwrap();
    let saddles: Vec<_> = pts.iter().filter(|p| p.kind == CriticalKind::Saddle).collect();
    let lines = saddles.iter().any(|p| p.zeta.re == 0.0) && saddles.iter().any(|p| p.zeta.re == FRAC_PI_2);
    verdict(
        10,
        "level sets",
        masks_agree && mirror < 1e-12 && asym < 1e-6 && saddles.len() == 2 && lines,
        format!(
            "mirror error {mirror:e}, asymptote error {asym:e}, saddles on C₊ {} at {:?}",
            saddles.len(),
            saddles.iter().map(|p| (p.zeta.re, p.zeta.im)).collect::<Vec<_>>()
        ),
    );
}
