//! Acceptance suites: each runs one end-to-end check at a replication
//! budget and reports pass/fail with the numbers behind it.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::crossings::{count_crossings, count_extrema, default_refine_tol, mc_crossing_curve, rolle_check, CurveOptions};
use crate::error::Result;
use crate::io::{comparison_rows, ComparisonRow};
use crate::kernels::{self, GaussianKernel, KernelRef, PhaseMode};
use crate::paths::{ensemble_statistics, normalize_path, simulate_path, small_ball_probability, PathOptions};
use crate::ppp::{sample_ppp, ImpulseSpec, Window};
use crate::rng::StreamFamily;
use crate::scalespace::{
    finite_extrema_count, rho_gaussian_limit, rho_lambda_sweep, rho_monotonicity_report, scaling_check,
    semigroup_check, MonotonicityOptions,
};
use crate::spectral::{
    convergence_constants, convergence_rate_check, crossing_fourier_curve, default_u_max, invert_crossing_curve,
    rice_gaussian, stationary_phase_certify, total_variation_bound_check, CharFn, FourierOptions, GaussianLimit,
    DEFAULT_U_POINTS,
};

/// Replication budget for the suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Multiplies every replication count (floored at 100).
    pub scale: f64,
    /// Target accuracy of each Fourier-route evaluation.
    pub spectral_tol: f64,
}

impl Budget {
    pub fn full() -> Self {
        Self {
            scale: 1.0,
            spectral_tol: FourierOptions::default().tol,
        }
    }

    /// Sized to finish in about a minute on one core.
    pub fn quick() -> Self {
        Self {
            scale: 0.05,
            spectral_tol: 2e-3,
        }
    }

    pub fn reps(&self, full: usize) -> usize {
        ((full as f64 * self.scale).round() as usize).max(100)
    }

    fn fourier(&self) -> FourierOptions {
        FourierOptions {
            tol: self.spectral_tol,
            ..FourierOptions::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub summary: String,
    pub details: Value,
    pub seconds: f64,
}

pub const SUITE_NAMES: [&str; 12] = [
    "extrema rate against intensity",
    "extrema rate against width",
    "Fourier and Monte Carlo crossing curves agree",
    "Fourier transform convergence rate",
    "mean absolute derivative convergence",
    "central limit moments",
    "extrema scaling law",
    "structural invariants",
    "stationary phase bound",
    "small-ball probability",
    "semigroup identity",
    "co-area consistency",
];

fn g(sigma: f64) -> KernelRef {
    GaussianKernel::arc(sigma).expect("positive width")
}

/// Runs suite `id` (1 to 12).
pub fn run_suite(id: u32, budget: &Budget, seed: u64) -> Result<SuiteResult> {
    let start = Instant::now();
    let family = StreamFamily::new(seed).derive(id as u64);
    let (pass, summary, details) = match id {
        1 => lambda_sweep(budget, family)?,
        2 => sigma_sweep(budget, family)?,
        3 => route_agreement(budget, family)?,
        4 => convergence_rate(budget)?,
        5 => derivative_mean(budget, family)?,
        6 => clt_moments(budget, family)?,
        7 => scaling_law(budget, family)?,
        8 => structural(budget, family)?,
        9 => stationary_phase()?,
        10 => small_ball(budget, family)?,
        11 => semigroup(family)?,
        12 => co_area(budget, family)?,
        _ => return crate::error::param(format!("no suite {id}")),
    };
    Ok(SuiteResult {
        id,
        name: SUITE_NAMES[id as usize - 1].to_string(),
        pass,
        summary,
        details,
        seconds: start.elapsed().as_secs_f64(),
    })
}

type Outcome = (bool, String, Value);

fn lambda_sweep(b: &Budget, family: StreamFamily) -> Result<Outcome> {
    let lambdas = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];
    let (curve, est) = rho_lambda_sweep(1.0, &lambdas, 100.0, b.reps(1000), family)?;
    let capped = est.iter().all(|e| e.rho <= 2.0 * e.intensity + 2.0 * e.se);
    let limit = rho_gaussian_limit(1.0);
    let high = est[6].rho / limit - 1.0;
    let low = est[0].rho / 0.2;
    let bound_ok = est.iter().all(|e| e.bound_violations == 0);
    let pass = capped && high.abs() <= 0.10 && low >= 0.85 && bound_ok;
    let summary = format!(
        "ρ̂ <= 2λ: {capped}; ρ̂(10)/limit − 1 = {high:+.4}; ρ̂(0.1)/0.2 = {low:.4} (need >= 0.85)"
    );
    Ok((pass, summary, json!({ "curve": curve, "estimates": est })))
}

fn sigma_sweep(b: &Budget, family: StreamFamily) -> Result<Outcome> {
    let sigmas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let opts = MonotonicityOptions {
        tracked: if b.scale >= 1.0 { 20 } else { 3 },
        ..MonotonicityOptions::default()
    };
    let rep = rho_monotonicity_report(1.0, &sigmas, b.reps(1000), family, &opts)?;
    let rel = rep.curve.rho[4] / rho_gaussian_limit(4.0) - 1.0;
    let pass = rep.strong_pass() && rep.mean_pass && rel.abs() <= 0.15;
    let summary = format!(
        "count violations {} of {}; tracked {} ({} errors, {} consistent); ρ̂(4)/limit − 1 = {rel:+.4}",
        rep.count_violations.len(),
        rep.curve.replications,
        rep.tracked.len(),
        rep.tracking_errors.len(),
        rep.tracked.iter().filter(|s| s.counts == s.direct).count(),
    );
    Ok((pass, summary, serde_json::to_value(&rep)?))
}

fn route_agreement(b: &Budget, family: StreamFamily) -> Result<Outcome> {
    let kernel = g(1.0);
    let mut all = true;
    let mut worst = Vec::new();
    let mut tables = Vec::new();
    for (i, &lam) in [2.0, 10.0].iter().enumerate() {
        let cf = CharFn::new(lam, kernel.clone(), &ImpulseSpec::DeterministicOne, false)?;
        let sd = cf.sd();
        let curve = crossing_fourier_curve(&cf, default_u_max(sd), DEFAULT_U_POINTS, 1.0, &b.fourier())?;
        let alphas: Vec<f64> = (0..=32).map(|j| cf.mean - 4.0 * sd + 8.0 * sd * j as f64 / 32.0).collect();
        let inverted = invert_crossing_curve(&curve, &alphas)?;
        let mc = mc_crossing_curve(
            lam,
            &kernel,
            &ImpulseSpec::DeterministicOne,
            &alphas,
            Window::new(0.0, 20.0)?,
            b.reps(1000),
            family.derive(i as u64),
            CurveOptions {
                step: 0.05,
                conditioning: None,
                normalized: false,
            },
        )?;
        let lim = GaussianLimit::for_process(lam, kernel.as_ref(), &ImpulseSpec::DeterministicOne)?;
        let rice: Vec<f64> = alphas.iter().map(|&a| rice_gaussian(&lim, a - lim.mean, 1.0)).collect();
        let rows = comparison_rows(&inverted, &mc, &rice)?;
        let ratio = rows
            .iter()
            .map(|r: &ComparisonRow| (r.c_spectral - r.c_mc).abs() / (r.mc_se + r.spectral_err))
            .fold(0.0, f64::max);
        all &= rows.iter().all(|r| r.agrees(3.0));
        worst.push(format!("λ={lam}: max |Δ|/(SE+err) = {ratio:.2}"));
        tables.push(json!({ "intensity": lam, "rows": rows }));
    }
    Ok((all, worst.join("; "), Value::Array(tables)))
}

fn convergence_rate(b: &Budget) -> Result<Outcome> {
    let kernel = g(1.0);
    let consts = convergence_constants(kernel.as_ref())?;
    let mut all = true;
    let mut notes = Vec::new();
    let mut tables = Vec::new();
    for &lam in &[10.0, 100.0] {
        let edge = consts.a1 * f64::sqrt(lam);
        let grid: Vec<f64> = (0..8).map(|k| edge * k as f64 / 8.0).chain([0.99 * edge]).collect();
        let rows = convergence_rate_check(lam, &kernel, &grid, &b.fourier())?;
        let ok = rows.iter().all(|r| r.in_region && r.pass);
        let tight = rows.iter().map(|r| (r.deviation + r.quad_err) / r.bound).fold(0.0, f64::max);
        all &= ok;
        notes.push(format!("λ={lam}: max (dev+err)/bound = {tight:.3}"));
        tables.push(json!({ "intensity": lam, "rows": rows }));
    }
    Ok((all, notes.join("; "), json!({ "constants": consts, "tables": tables })))
}

fn derivative_mean(b: &Budget, family: StreamFamily) -> Result<Outcome> {
    let kernel = g(1.0);
    let mut all = true;
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    for (i, &lam) in [1.0, 25.0].iter().enumerate() {
        let curve = mc_crossing_curve(
            lam,
            &kernel,
            &ImpulseSpec::DeterministicOne,
            &[],
            Window::new(0.0, 20.0)?,
            b.reps(1000),
            family.derive(i as u64),
            CurveOptions {
                step: 0.05,
                conditioning: None,
                normalized: false,
            },
        )?;
        let check = total_variation_bound_check(lam, kernel.as_ref(), curve.total_variation)?;
        all &= check.pass;
        notes.push(format!("λ={lam}: {:.4} <= {:.4} + {:.4}", check.lhs, check.rhs, check.slack));
        rows.push(json!({ "intensity": lam, "mean_abs_derivative": curve.total_variation, "check": check }));
    }
    Ok((all, notes.join("; "), Value::Array(rows)))
}

fn clt_moments(b: &Budget, family: StreamFamily) -> Result<Outcome> {
    let lam = 100.0;
    let kernel = g(1.0);
    let opts = PathOptions::new(0.0, 2.0, 0.5)?;
    let paths = (0..b.reps(10_000) as u64)
        .into_par_iter()
        .map(|r| {
            let p = simulate_path(lam, &kernel, &ImpulseSpec::DeterministicOne, &opts, family.stream(r))?;
            normalize_path(&p, lam, kernel.as_ref(), Some(1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let st = ensemble_statistics(&paths, &[0.5, 1.0, 2.0], Some(kernel.as_ref()))?;
    let m0 = kernels::covariance(kernel.as_ref(), 0.0)?.value;
    let var_ok = st.variance.within(m0, 3.0);
    let cov_ok = st
        .covariances
        .iter()
        .all(|c| c.target.is_some_and(|t| c.estimate.within(t, 3.0)));
    let skew_ok = st.skewness.value.abs() <= 3.0 * st.skewness.se;
    // exact skewness of the normalized process at this intensity
    let m30 = kernels::moments(kernel.as_ref(), &[(3, 0)])?.get(3, 0).expect("m30");
    let skew_exact = m30 / (m0.powf(1.5) * f64::sqrt(lam));
    let summary = format!(
        "Var = {:.4} ± {:.4} (m₀ = {m0:.4}); covariances within 3 SE: {cov_ok}; \
         skewness = {:.4} (3 SE = {:.4}, exact value {skew_exact:.4})",
        st.variance.value,
        st.variance.se,
        st.skewness.value,
        3.0 * st.skewness.se
    );
    Ok((var_ok && cov_ok && skew_ok, summary, serde_json::to_value(&st)?))
}

fn scaling_law(b: &Budget, family: StreamFamily) -> Result<Outcome> {
    let cases = [(1.0, 1.0, 2.0), (2.0, 0.5, 0.5)];
    let checks = cases
        .iter()
        .enumerate()
        .map(|(i, &(l, s, c))| scaling_check(l, s, c, b.reps(4000), family.derive(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let summary = checks
        .iter()
        .map(|c| {
            format!(
                "(λ,σ,c)=({},{},{}): {:.4} vs {:.4}, |Δ|/SE = {:.2}",
                c.intensity,
                c.sigma,
                c.c,
                c.lhs.value,
                c.rhs.value,
                (c.lhs.value - c.rhs.value).abs() / c.combined_se
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok((checks.iter().all(|c| c.pass), summary, serde_json::to_value(&checks)?))
}

fn structural(b: &Budget, family: StreamFamily) -> Result<Outcome> {
    let kernel = g(1.0);
    let levels: Vec<f64> = (0..10).map(|j| 0.5 + 0.5 * j as f64).collect();
    let opts = PathOptions::new(0.0, 20.0, 0.05)?;
    let fam = family.derive(0);
    let paths = b.reps(1000);
    let per_path = (0..paths as u64)
        .into_par_iter()
        .map(|r| -> Result<(usize, usize, usize, usize)> {
            let p = simulate_path(2.0, &kernel, &ImpulseSpec::DeterministicOne, &opts, fam.stream(r))?;
            let rolle = rolle_check(&p, &levels)?;
            let tol = default_refine_tol(&p);
            let mut alternation = 0;
            for &lv in &levels {
                let t = count_crossings(&p, lv, tol);
                if t.tangency_suspect == 0 && !t.alternates() {
                    alternation += 1;
                }
            }
            let e = count_extrema(&p, tol)?;
            if e.degenerate == 0 && !e.alternates() {
                alternation += 1;
            }
            Ok((rolle.checked, rolle.violations.len(), alternation, e.degenerate))
        })
        .collect::<Result<Vec<_>>>()?;
    let checked: usize = per_path.iter().map(|x| x.0).sum();
    let rolle: usize = per_path.iter().map(|x| x.1).sum();
    let alternation: usize = per_path.iter().map(|x| x.2).sum();

    let fam = family.derive(1);
    let configs = b.reps(10_000);
    let window = Window::new(0.0, 8.0)?;
    let lemma = (0..configs as u64)
        .into_par_iter()
        .map(|r| -> Result<(usize, usize)> {
            let c = sample_ppp(1.0, window, &ImpulseSpec::DeterministicOne, fam.stream(r))?;
            Ok((finite_extrema_count(&c, 1.0)?, crate::crossings::exp_poly_extrema_bound(c.len())))
        })
        .collect::<Result<Vec<_>>>()?;
    let lemma_violations = lemma.iter().filter(|(n, bound)| n > bound).count();
    let tight = lemma.iter().filter(|(n, bound)| n == bound && *n > 0).count();
    let pass = rolle == 0 && alternation == 0 && lemma_violations == 0;
    let summary = format!(
        "Rolle: {rolle} violations in {checked} path×level cases; alternation failures {alternation}; \
         extrema bound: {lemma_violations} violations in {configs} configurations ({tight} attain it)"
    );
    Ok((
        pass,
        summary,
        json!({
            "rolle_cases": checked, "rolle_violations": rolle, "alternation_failures": alternation,
            "configurations": configs, "bound_violations": lemma_violations, "bound_attained": tight,
        }),
    ))
}

fn stationary_phase() -> Result<Outcome> {
    let kernel = g(1.0);
    let line: Vec<(f64, f64)> = [10.0, 1e2, 1e3, 1e4].iter().map(|&u| (u, 0.0)).collect();
    let rows1 = stationary_phase_certify(kernel.as_ref(), -1.0, 2.0, &line, PhaseMode::Level1d)?;
    let ring: Vec<(f64, f64)> = [100.0, 1000.0]
        .iter()
        .flat_map(|&r| {
            (0..16).map(move |j| {
                let th = std::f64::consts::TAU * j as f64 / 16.0;
                (r * th.cos(), r * th.sin())
            })
        })
        .collect();
    let rows2 = stationary_phase_certify(kernel.as_ref(), -1.0, 2.0, &ring, PhaseMode::Joint2d)?;
    let ok = |rows: &[crate::spectral::PhaseRow]| rows.iter().all(|r| r.applicable && r.pass);
    let ratio = |rows: &[crate::spectral::PhaseRow]| {
        rows.iter().map(|r| (r.magnitude + r.quad_err) / r.bound).fold(0.0, f64::max)
    };
    let p1 = kernels::phase_params(kernel.as_ref(), -1.0, 2.0, PhaseMode::Level1d)?;
    let p2 = kernels::phase_params(kernel.as_ref(), -1.0, 2.0, PhaseMode::Joint2d)?;
    let summary = format!(
        "1-d (m={:.4}, n₀={}): max |I|/bound = {:.3}; 2-d (m={:.4}, n₀={}): max |I|/bound = {:.3}",
        p1.m,
        p1.n0,
        ratio(&rows1),
        p2.m,
        p2.n0,
        ratio(&rows2)
    );
    Ok((ok(&rows1) && ok(&rows2), summary, json!({ "line": rows1, "ring": rows2 })))
}

fn small_ball(b: &Budget, family: StreamFamily) -> Result<Outcome> {
    let rows = small_ball_probability(0.2, &g(1.0), &[1e-1, 1e-2, 1e-3], b.reps(20_000), family)?;
    let above = rows.iter().all(|r| r.p_hat + 3.0 * r.se >= r.bound);
    let increasing = rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
    let summary = rows
        .iter()
        .map(|r| format!("ε={:e}: p̂={:.4}±{:.4}, bound {:.4}", r.eps, r.p_hat, r.se, r.bound))
        .collect::<Vec<_>>()
        .join("; ");
    Ok((above && increasing, format!("{summary}; p̂/ε increasing: {increasing}"), serde_json::to_value(&rows)?))
}

fn semigroup(family: StreamFamily) -> Result<Outcome> {
    let c = sample_ppp(2.0, Window::new(-20.0, 40.0)?, &ImpulseSpec::DeterministicOne, family.stream(0))?;
    let rep = semigroup_check(&c, 0.5, 0.5, Window::new(0.0, 20.0)?, 0.01)?;
    let pass = rep.deviation <= 1e-4 * rep.peak;
    let summary = format!("deviation/peak = {:.3e} (need <= 1e-4)", rep.relative());
    Ok((pass, summary, serde_json::to_value(rep)?))
}

fn co_area(b: &Budget, family: StreamFamily) -> Result<Outcome> {
    let levels: Vec<f64> = (0..=525).map(|j| -0.5 + 0.02 * j as f64).collect();
    let curve = mc_crossing_curve(
        2.0,
        &g(1.0),
        &ImpulseSpec::DeterministicOne,
        &levels,
        Window::new(0.0, 20.0)?,
        b.reps(1000),
        family,
        CurveOptions {
            step: 0.05,
            conditioning: None,
            normalized: false,
        },
    )?;
    let integral = curve.integral();
    let tv = curve.total_variation;
    let pass = tv.within(integral, 2.0);
    let summary = format!(
        "∫C dα = {integral:.5}, mean total variation = {:.5} ± {:.5} (|Δ|/SE = {:.2})",
        tv.value,
        tv.se,
        (integral - tv.value).abs() / tv.se
    );
    Ok((pass, summary, json!({ "integral": integral, "total_variation": tv })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_floors_replications() {
        assert_eq!(Budget::quick().reps(1000), 100);
        assert_eq!(Budget::full().reps(1000), 1000);
    }

    #[test]
    fn deterministic_suites_pass() {
        let b = Budget::quick();
        assert!(run_suite(9, &b, 1).unwrap().pass);
        assert!(run_suite(11, &b, 1).unwrap().pass);
        assert!(run_suite(13, &b, 1).is_err());
    }
}
