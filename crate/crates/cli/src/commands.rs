use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use shotnoise_core::crossings::{mc_crossing_curve, Conditioning, CurveOptions};
use shotnoise_core::io;
use shotnoise_core::kernels::PhaseMode;
use shotnoise_core::paths::{certified_radius, normalize_path, simulate_path};
use shotnoise_core::ppp::sample_ppp;
use shotnoise_core::scalespace::{
    rho_lambda_sweep, rho_monotonicity_report, rho_upper_bound, scaling_check, semigroup_check, track_extrema,
    MonotonicityOptions, TrackOptions,
};
use shotnoise_core::spectral::{
    convergence_constants, convergence_rate_check, crossing_fourier_curve, default_u_max, invert_crossing_curve,
    rice_gaussian, stationary_phase_certify, total_variation_bound_check, CharFn, FourierOptions, GaussianLimit,
};
use shotnoise_core::verify::{run_suite, Budget, SUITE_NAMES};
use shotnoise_core::{parse_kernel, GaussianKernel, ImpulseSpec, PathOptions, StreamFamily, Truncation, Window};

use crate::config::ExperimentConfig;
use crate::{create, CliError, Outcome};

const SIMULATE: u64 = 1;
const CROSSINGS: u64 = 2;
const SPECTRAL: u64 = 3;
const SCALESPACE: u64 = 4;

struct Timer(BTreeMap<String, f64>, Instant);

impl Timer {
    fn new() -> Self {
        Self(BTreeMap::new(), Instant::now())
    }

    fn lap(&mut self, name: &str) {
        self.0.insert(name.to_string(), self.1.elapsed().as_secs_f64());
        self.1 = Instant::now();
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
    match n {
        0 => Err(CliError::Usage("level grid needs at least one point".into())),
        1 => Ok(vec![lo]),
        _ => Ok((0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect()),
    }
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.simulate;
    let kernel = parse_kernel(&c.kernel)?;
    let impulses = ImpulseSpec::parse(&c.impulses)?;
    let opts = PathOptions::new(c.a, c.b, c.step)?
        .with_max_order(c.max_order)
        .with_truncation(Truncation::Certified(c.truncation));
    let family = StreamFamily::new(cfg.master_seed).derive(SIMULATE);
    let mut timer = Timer::new();
    let mut paths = Vec::new();
    for r in 0..c.replications {
        let mut path = simulate_path(c.intensity, &kernel, &impulses, &opts, family.stream(r as u64))?;
        if c.normalized {
            path = normalize_path(&path, c.intensity, kernel.as_ref(), Some(impulses.mean()))?;
        }
        let stem = format!("path_{r:04}");
        io::write_path_csv(create(&cfg.out, &format!("{stem}.csv"))?, &path)?;
        io::write_path_sidecar(create(&cfg.out, &format!("{stem}.json"))?, &path)?;
        paths.push(json!({
            "file": format!("{stem}.csv"),
            "points": path.provenance.points,
            "seed": path.provenance.seed,
            "certificate": path.certificate,
        }));
    }
    timer.lap("simulate");
    println!("simulate: wrote {} paths to {}", c.replications, cfg.out.display());
    Ok(Outcome {
        pass: true,
        results: json!({ "paths": paths }),
        timings: timer.0,
    })
}

pub fn crossings(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.crossings;
    let kernel = parse_kernel(&c.kernel)?;
    let impulses = ImpulseSpec::parse(&c.impulses)?;
    let levels = linspace(c.alpha_lo, c.alpha_hi, c.alpha_n)?;
    let conditioning = (c.condition_min_count > 0).then_some(Conditioning {
        half_width: c.condition_half_width,
        min_count: c.condition_min_count,
    });
    let mut timer = Timer::new();
    let curve = mc_crossing_curve(
        c.intensity,
        &kernel,
        &impulses,
        &levels,
        Window::new(c.a, c.b)?,
        c.replications,
        StreamFamily::new(cfg.master_seed).derive(CROSSINGS),
        CurveOptions {
            step: c.step,
            conditioning,
            normalized: c.normalized,
        },
    )?;
    timer.lap("crossings");
    io::write_crossing_csv(create(&cfg.out, "crossings.csv")?, &curve)?;
    let integral = curve.integral();
    let tv = curve.total_variation;
    println!(
        "crossings: {} levels, {} replications; ∫C dα = {integral:.4}, E|X′| = {:.4} ± {:.4}; Rolle violations {}",
        levels.len(),
        curve.replications,
        tv.value,
        tv.se,
        curve.rolle_violations
    );
    Ok(Outcome {
        pass: curve.rolle_violations == 0,
        results: json!({
            "level_integral": integral,
            "total_variation": tv,
            "rolle_violations": curve.rolle_violations,
            "rejected_draws": curve.rejected_draws,
        }),
        timings: timer.0,
    })
}

pub fn spectral(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.spectral;
    let kernel = parse_kernel(&c.kernel)?;
    let impulses = ImpulseSpec::parse(&c.impulses)?;
    let fourier = FourierOptions {
        tol: c.tol,
        ..FourierOptions::default()
    };
    let mut timer = Timer::new();
    let mut pass = true;
    let mut results = serde_json::Map::new();

    let cf = CharFn::new(c.intensity, kernel.clone(), &impulses, false)?;
    let sd = cf.sd();
    let u_max = if c.u_max > 0.0 { c.u_max } else { default_u_max(sd) };
    let curve = crossing_fourier_curve(&cf, u_max, c.u_points, c.length, &fourier)?;
    io::write_spectral_csv(create(&cfg.out, "spectral_fourier.csv")?, &curve)?;
    timer.lap("fourier");

    let alphas = linspace(cf.mean - 4.0 * sd, cf.mean + 4.0 * sd, c.alpha_n)?;
    let inverted = invert_crossing_curve(&curve, &alphas)?;
    let limit = GaussianLimit::for_process(c.intensity, kernel.as_ref(), &impulses)?;
    let rice: Vec<f64> = alphas.iter().map(|&a| rice_gaussian(&limit, a - limit.mean, c.length)).collect();
    if c.mc_replications > 0 {
        let mc = mc_crossing_curve(
            c.intensity,
            &kernel,
            &impulses,
            &alphas,
            Window::new(0.0, c.mc_length)?,
            c.mc_replications,
            StreamFamily::new(cfg.master_seed).derive(SPECTRAL),
            CurveOptions {
                step: c.mc_step,
                conditioning: None,
                normalized: false,
            },
        )?;
        // the Monte Carlo curve is per unit length; the Fourier route covers [0, L]
        let mut scaled = mc.clone();
        for p in scaled.points.iter_mut() {
            p.mean *= c.length;
            p.se *= c.length;
        }
        let rows = io::comparison_rows(&inverted, &scaled, &rice)?;
        io::write_rows(create(&cfg.out, "spectral_comparison.csv")?, &rows)?;
        let agree = rows.iter().filter(|r| r.agrees(3.0)).count();
        pass &= agree == rows.len();
        let tv = total_variation_bound_check(c.intensity, kernel.as_ref(), mc.total_variation)?;
        results.insert("comparison_agree".into(), json!({ "agree": agree, "levels": rows.len() }));
        if impulses == ImpulseSpec::DeterministicOne {
            pass &= tv.pass;
            results.insert("total_variation_bound".into(), serde_json::to_value(tv)?);
        }
        timer.lap("monte_carlo");
    } else {
        #[derive(Serialize)]
        struct Row {
            alpha: f64,
            c_spectral: f64,
            spectral_err: f64,
            imag_residual: f64,
            c_rice: f64,
        }
        let rows: Vec<Row> = (0..alphas.len())
            .map(|i| Row {
                alpha: alphas[i],
                c_spectral: inverted.value[i],
                spectral_err: inverted.error[i],
                imag_residual: inverted.imag_residual[i],
                c_rice: rice[i],
            })
            .collect();
        io::write_rows(create(&cfg.out, "spectral_inverted.csv")?, &rows)?;
    }

    let consts = convergence_constants(kernel.as_ref())?;
    let mut conv = Vec::new();
    for &lam in &c.convergence_intensities {
        let edge = consts.a1 * lam.sqrt();
        let grid = linspace(0.0, 0.99 * edge, c.convergence_points)?;
        let rows = convergence_rate_check(lam, &kernel, &grid, &fourier)?;
        io::write_convergence_csv(create(&cfg.out, &format!("convergence_lambda{lam}.csv"))?, &rows)?;
        let ok = rows.iter().all(|r| r.pass);
        pass &= ok;
        conv.push(json!({ "intensity": lam, "pass": ok }));
    }
    results.insert("convergence".into(), json!({ "constants": consts, "tables": conv }));
    timer.lap("convergence");

    let line: Vec<(f64, f64)> = c.phase_u.iter().map(|&u| (u, 0.0)).collect();
    let rows1 = stationary_phase_certify(kernel.as_ref(), c.phase_a, c.phase_b, &line, PhaseMode::Level1d)?;
    let ring: Vec<(f64, f64)> = c
        .ring_radii
        .iter()
        .flat_map(|&r| {
            (0..c.ring_points).map(move |j| {
                let th = std::f64::consts::TAU * j as f64 / c.ring_points as f64;
                (r * th.cos(), r * th.sin())
            })
        })
        .collect();
    let rows2 = stationary_phase_certify(kernel.as_ref(), c.phase_a, c.phase_b, &ring, PhaseMode::Joint2d)?;
    io::write_phase_csv(create(&cfg.out, "phase_1d.csv")?, &rows1)?;
    io::write_phase_csv(create(&cfg.out, "phase_2d.csv")?, &rows2)?;
    let phase_ok = rows1.iter().chain(&rows2).all(|r| r.pass);
    pass &= phase_ok;
    results.insert("phase_pass".into(), json!(phase_ok));
    timer.lap("phase");

    println!("spectral: {} u-points up to {u_max:.4}; checks pass: {pass}", c.u_points);
    Ok(Outcome {
        pass,
        results: Value::Object(results),
        timings: timer.0,
    })
}

#[derive(Serialize)]
struct ScalingRow {
    lambda: f64,
    sigma: f64,
    c: f64,
    lhs: f64,
    lhs_se: f64,
    rhs: f64,
    rhs_se: f64,
    pass: bool,
}

pub fn scalespace(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.scalespace;
    let family = StreamFamily::new(cfg.master_seed).derive(SCALESPACE);
    let mut timer = Timer::new();
    let mut results = serde_json::Map::new();

    let (lcurve, est) = rho_lambda_sweep(c.sigma, &c.lambdas, c.lambda_length, c.replications, family.derive(1))?;
    io::write_rho_csv(create(&cfg.out, "rho_lambda.csv")?, &lcurve)?;
    let capped = est.iter().all(|e| e.rho <= 2.0 * e.intensity + 2.0 * e.se);
    results.insert("lambda_sweep".into(), json!({ "capped": capped, "estimates": est }));
    timer.lap("lambda_sweep");

    let mopts = MonotonicityOptions {
        length: c.sigma_length,
        tracked: c.tracked,
        track_window: c.track_window,
    };
    let report = rho_monotonicity_report(c.lambda, &c.sigmas, c.replications, family.derive(2), &mopts)?;
    io::write_rho_csv(create(&cfg.out, "rho_sigma.csv")?, &report.curve)?;
    results.insert("sigma_sweep".into(), serde_json::to_value(&report)?);
    timer.lap("sigma_sweep");

    let s_min = c.sigmas.iter().copied().fold(f64::INFINITY, f64::min);
    let s_max = c.sigmas.iter().copied().fold(0.0, f64::max);
    let tconfig = sample_ppp(
        c.lambda,
        Window::new(0.0, c.track_window)?,
        &ImpulseSpec::DeterministicOne,
        family.derive(3).stream(0),
    )?;
    let interval = match (tconfig.points.first(), tconfig.points.last()) {
        (Some(&a), Some(&b)) => Window::new(a - s_min, b + s_min)?,
        _ => Window::new(0.0, c.track_window)?,
    };
    let topts = TrackOptions {
        checkpoints: c.sigmas.clone(),
        ..TrackOptions::default()
    };
    let tracks = track_extrema(&tconfig, s_min, s_max, interval, &topts)?;
    io::write_tracks_csv(create(&cfg.out, "tracks.csv")?, &tracks)?;
    results.insert(
        "tracks".into(),
        json!({
            "points": tconfig.len(),
            "tracks": tracks.tracks.len(),
            "births": tracks.births,
            "turning_points": tracks.turning_points,
            "consistent": tracks.consistent(),
        }),
    );
    timer.lap("tracks");

    let checks = c
        .scaling
        .iter()
        .enumerate()
        .map(|(i, &[l, s, k])| scaling_check(l, s, k, c.scaling_replications, family.derive(10 + i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<ScalingRow> = checks
        .iter()
        .map(|k| ScalingRow {
            lambda: k.intensity,
            sigma: k.sigma,
            c: k.c,
            lhs: k.lhs.value,
            lhs_se: k.lhs.se,
            rhs: k.rhs.value,
            rhs_se: k.rhs.se,
            pass: k.pass,
        })
        .collect();
    io::write_rows(create(&cfg.out, "scaling.csv")?, &rows)?;
    timer.lap("scaling");

    let (s1, s2) = (c.semigroup_sigma1, c.semigroup_sigma2);
    let interval = Window::new(0.0, 20.0)?;
    let radius = certified_radius(
        &GaussianKernel::new(s1.max(s1.hypot(s2)))?,
        c.lambda,
        &ImpulseSpec::DeterministicOne,
        1,
        1e-12,
    )?;
    let sconfig = sample_ppp(
        c.lambda,
        interval.expand(10.0 * s2 + radius),
        &ImpulseSpec::DeterministicOne,
        family.derive(4).stream(0),
    )?;
    let semigroup = semigroup_check(&sconfig, s1, s2, interval, c.semigroup_step)?;
    let semigroup_ok = semigroup.relative() <= 1e-4;
    results.insert(
        "semigroup".into(),
        json!({ "report": semigroup, "relative": semigroup.relative(), "pass": semigroup_ok }),
    );
    timer.lap("semigroup");

    let bound_ok = est.iter().all(|e| e.rho <= rho_upper_bound(e.intensity, e.sigma) + 2.0 * e.se);
    let pass = capped && bound_ok && report.pass() && checks.iter().all(|k| k.pass) && semigroup_ok;
    println!(
        "scalespace: ρ̂ <= 2λ {capped}; σ-sweep monotone {}; scaling {}/{}; semigroup {:.2e}",
        report.pass(),
        checks.iter().filter(|k| k.pass).count(),
        checks.len(),
        semigroup.relative()
    );
    Ok(Outcome {
        pass,
        results: Value::Object(results),
        timings: timer.0,
    })
}

pub fn verify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let budget = match cfg.verify.profile.as_str() {
        "quick" => Budget::quick(),
        "full" => Budget::full(),
        other => return Err(CliError::Usage(format!("unknown verify profile `{other}`"))),
    };
    let ids: Vec<u32> = if cfg.verify.suites.is_empty() {
        (1..=SUITE_NAMES.len() as u32).collect()
    } else {
        cfg.verify.suites.clone()
    };
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i as usize > SUITE_NAMES.len()) {
        return Err(CliError::Usage(format!("no suite {bad}")));
    }
    let mut timings = BTreeMap::new();
    let mut suites = Vec::new();
    let mut text = String::new();
    for &id in &ids {
        let r = run_suite(id, &budget, cfg.master_seed)?;
        let line = format!(
            "{:>2} {:<48} {} ({:.1}s) {}\n",
            r.id,
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.seconds,
            r.summary
        );
        print!("{line}");
        text.push_str(&line);
        timings.insert(format!("suite_{id}"), r.seconds);
        suites.push(r);
    }
    let passed = suites.iter().filter(|r| r.pass).count();
    let tail = format!("{passed}/{} suites pass ({} profile)\n", suites.len(), cfg.verify.profile);
    print!("{tail}");
    text.push_str(&tail);
    serde_json::to_writer_pretty(create(&cfg.out, "verify.json")?, &suites)?;
    std::fs::write(cfg.out.join("verify.txt"), text)?;
    Ok(Outcome {
        pass: passed == suites.len(),
        results: json!({ "profile": cfg.verify.profile, "budget": budget, "suites": suites }),
        timings,
    })
}
