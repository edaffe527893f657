//! Gaussian scale space: extrema rates ρ(λ,σ), the scaling and semigroup
//! laws, and continuation of extrema across widths.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossings::{count_extrema, default_refine_tol, ExtremaTally, Extremum, ExtremumKind};
use crate::error::{param, Error, Result};
use crate::kernels::{GaussianKernel, Kernel, KernelRef};
use crate::paths::{
    certified_radius, evaluate_path, sample_values, simulate_path, PathOptions, SamplePath, Truncation,
};
use crate::ppp::{sample_ppp, ImpulseSpec, PointConfiguration, Window};
use crate::rng::StreamFamily;
use crate::stats::{self, Estimate};

/// Grid points per unit of σ.
pub const POINTS_PER_SIGMA: f64 = 20.0;
/// Default multiplicative σ step for tracking.
pub const DEFAULT_DSIGMA_REL: f64 = 1.0 / 50.0;
pub const DEFAULT_TRACK_TOL: f64 = 1e-9;
/// Δσ is halved at most this many times before a turning-point fallback.
pub const MAX_HALVINGS: u32 = 8;

/// `(1/π)√(3/2)`, the high-intensity extrema rate at σ = 1.
pub fn rho_gaussian_limit(sigma: f64) -> f64 {
    1.5f64.sqrt() / (std::f64::consts::PI * sigma)
}

/// `(3λ(2+2σ)+1)e^λ`.
pub fn rho_upper_bound(intensity: f64, sigma: f64) -> f64 {
    (3.0 * intensity * (2.0 + 2.0 * sigma) + 1.0) * intensity.exp()
}

fn gaussian(sigma: f64) -> Result<KernelRef> {
    GaussianKernel::arc(sigma)
}

fn unit_grid(sigma: f64) -> f64 {
    sigma / POINTS_PER_SIGMA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub intensity: f64,
    pub sigma: f64,
    pub rho: f64,
    pub se: f64,
    pub replications: usize,
    pub length: f64,
    /// Degenerate extrema per unit length.
    pub degenerate_rate: f64,
    pub bound: f64,
    /// Replications whose count per unit length exceeds `bound`.
    pub bound_violations: usize,
}

impl RhoEstimate {
    pub fn estimate(&self) -> Estimate {
        Estimate::new(self.rho, self.se)
    }
}

/// Mean number of extrema per unit length of `X_{λ,σ}` on `[0, L]`.
///
/// Paths are evaluated on `[0, L]` widened by [`rho_buffer`] and only
/// extrema located inside `[0, L]` are counted, so that a flat stretch of the
/// truncated path crossing an end of `[0, L]` is placed by its midpoint
/// rather than counted whenever it touches the interval.
pub fn rho_estimate(
    intensity: f64,
    sigma: f64,
    length: f64,
    replications: usize,
    family: StreamFamily,
) -> Result<RhoEstimate> {
    if !(intensity > 0.0 && sigma > 0.0 && length > 0.0) || replications < 2 {
        return param("ρ estimate needs λ, σ, L > 0 and at least two replications");
    }
    let kernel = gaussian(sigma)?;
    let buffer = rho_buffer(intensity, sigma);
    let opts = PathOptions::new(-buffer, length + buffer, unit_grid(sigma))?;
    let counts: Vec<(usize, usize)> = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let path = simulate_path(intensity, &kernel, &ImpulseSpec::DeterministicOne, &opts, family.stream(r))?;
            let tally = count_extrema(&path, default_refine_tol(&path))?;
            let inside: Vec<_> = tally.locations.iter().filter(|e| e.t >= 0.0 && e.t <= length).collect();
            let degenerate = inside.iter().filter(|e| e.kind == ExtremumKind::Degenerate).count();
            Ok((inside.len(), degenerate))
        })
        .collect::<Result<_>>()?;
    let rates: Vec<f64> = counts.iter().map(|c| c.0 as f64 / length).collect();
    let bound = rho_upper_bound(intensity, sigma);
    let est = stats::mean_se(&rates);
    let degenerate = counts.iter().map(|c| c.1 as f64).sum::<f64>();
    Ok(RhoEstimate {
        intensity,
        sigma,
        rho: est.value,
        se: est.se,
        replications,
        length,
        degenerate_rate: degenerate / (replications as f64 * length),
        bound,
        bound_violations: rates.iter().filter(|&&x| x > bound).count(),
    })
}

/// Margin added on both sides of `[0, L]`: `10/λ` (so a point lies in it
/// with probability `1 − e⁻¹⁰`), clamped to `[10σ, 1000σ]`.
pub fn rho_buffer(intensity: f64, sigma: f64) -> f64 {
    (10.0 / intensity).clamp(10.0 * sigma, 1000.0 * sigma)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoCurve {
    /// `"sigma"` or `"lambda"`.
    pub axis_name: String,
    pub axis: Vec<f64>,
    pub rho: Vec<f64>,
    pub se: Vec<f64>,
    pub replications: usize,
    pub length: f64,
}

impl RhoCurve {
    fn from_estimates(axis_name: &str, axis: Vec<f64>, est: &[RhoEstimate]) -> Self {
        Self {
            axis_name: axis_name.to_string(),
            axis,
            rho: est.iter().map(|e| e.rho).collect(),
            se: est.iter().map(|e| e.se).collect(),
            replications: est.first().map_or(0, |e| e.replications),
            length: est.first().map_or(0.0, |e| e.length),
        }
    }
}

/// ρ̂(λ, σ) for each λ, with an independent stream family per point.
pub fn rho_lambda_sweep(
    sigma: f64,
    intensities: &[f64],
    length: f64,
    replications: usize,
    family: StreamFamily,
) -> Result<(RhoCurve, Vec<RhoEstimate>)> {
    let est = intensities
        .iter()
        .enumerate()
        .map(|(i, &lam)| rho_estimate(lam, sigma, length, replications, family.derive(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok((RhoCurve::from_estimates("lambda", intensities.to_vec(), &est), est))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub intensity: f64,
    pub sigma: f64,
    pub c: f64,
    /// `c ρ̂(λ, cσ)`.
    pub lhs: Estimate,
    /// `ρ̂(cλ, σ)`.
    pub rhs: Estimate,
    pub combined_se: f64,
    pub pass: bool,
}

/// Compares `c ρ̂(λ, cσ)` with `ρ̂(cλ, σ)` from independent streams, each on
/// an interval of `50·max(σ, cσ)`.
pub fn scaling_check(
    intensity: f64,
    sigma: f64,
    c: f64,
    replications: usize,
    family: StreamFamily,
) -> Result<ScalingCheck> {
    if !(c > 0.0) {
        return param(format!("scaling factor must be > 0, got {c}"));
    }
    let length = 50.0 * sigma.max(c * sigma);
    let l = rho_estimate(intensity, c * sigma, length, replications, family.derive(1))?;
    let r = rho_estimate(c * intensity, sigma, length, replications, family.derive(2))?;
    let lhs = Estimate::new(c * l.rho, c * l.se);
    let rhs = r.estimate();
    let combined_se = lhs.se.hypot(rhs.se);
    Ok(ScalingCheck {
        intensity,
        sigma,
        c,
        lhs,
        rhs,
        combined_se,
        pass: (lhs.value - rhs.value).abs() <= 3.0 * combined_se,
    })
}

/// Two-sample KS comparison of `X_{λ/c, cσ}(0)` against `X_{λ,σ}(0)/c`.
pub fn scaling_in_law(
    intensity: f64,
    sigma: f64,
    c: f64,
    replications: usize,
    family: StreamFamily,
) -> Result<(f64, f64)> {
    if !(c > 0.0) {
        return param(format!("scaling factor must be > 0, got {c}"));
    }
    let a = sample_values(intensity / c, &gaussian(c * sigma)?, 0.0, replications, family.derive(1))?;
    let b: Vec<f64> = sample_values(intensity, &gaussian(sigma)?, 0.0, replications, family.derive(2))?
        .into_iter()
        .map(|x| x / c)
        .collect();
    Ok(stats::ks_two_sample(&a, &b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemigroupReport {
    /// Sup-norm of direct minus convolved path over the grid.
    pub deviation: f64,
    /// Sup-norm of the direct path.
    pub peak: f64,
    pub support_radius: f64,
}

impl SemigroupReport {
    pub fn relative(&self) -> f64 {
        if self.peak > 0.0 {
            self.deviation / self.peak
        } else {
            self.deviation
        }
    }
}

/// `X_{√(σ₁²+σ₂²)}` evaluated directly against the trapezoid convolution of
/// the `σ₁` path with `g_{σ₂}`, on the grid `a, a+h, …, b`.
///
/// The `σ₁` path is evaluated on the grid extended by `10σ₂` on both sides
/// with certified truncation, so the configuration window must cover it.
pub fn semigroup_check(
    config: &PointConfiguration,
    sigma1: f64,
    sigma2: f64,
    interval: Window,
    step: f64,
) -> Result<SemigroupReport> {
    if !(sigma1 > 0.0 && sigma2 > 0.0 && step > 0.0) {
        return param("semigroup check needs σ₁, σ₂, h > 0");
    }
    let n = ((interval.length() / step).round() as usize).max(1);
    let h = interval.length() / n as f64;
    let pad = (10.0 * sigma2 / h).ceil() as usize;
    let ext = Window::new(interval.lo - pad as f64 * h, interval.hi + pad as f64 * h)?;
    let narrow = evaluate_path(
        config,
        &gaussian(sigma1)?,
        &PathOptions::new(ext.lo, ext.hi, h)?.with_max_order(1),
    )?;
    let wide = evaluate_path(
        config,
        &gaussian(sigma1.hypot(sigma2))?,
        &PathOptions::new(interval.lo, interval.hi, h)?.with_max_order(1),
    )?;
    if narrow.len() != n + 1 + 2 * pad || wide.len() != n + 1 {
        return Err(Error::Resolution("convolution grid misaligned".into()));
    }
    let g2 = GaussianKernel::new(sigma2)?;
    let weights: Vec<f64> = (0..=2 * pad)
        .map(|j| {
            let w = h * g2.derivative_unchecked(0, (j as f64 - pad as f64) * h);
            if j == 0 || j == 2 * pad {
                0.5 * w
            } else {
                w
            }
        })
        .collect();
    let x = narrow.x();
    let mut deviation: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for i in 0..=n {
        let conv: f64 = weights.iter().enumerate().map(|(j, w)| w * x[i + 2 * pad - j]).sum();
        deviation = deviation.max((conv - wide.x()[i]).abs());
        peak = peak.max(wide.x()[i].abs());
    }
    Ok(SemigroupReport {
        deviation,
        peak,
        support_radius: pad as f64 * h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtremumType {
    Maximum,
    Minimum,
}

impl ExtremumType {
    fn of(e: &Extremum) -> Self {
        if e.rising {
            ExtremumType::Minimum
        } else {
            ExtremumType::Maximum
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrackEnd {
    /// Alive at the smallest width tracked.
    ReachedMin,
    /// Left the tracking interval below this width.
    Exited { sigma: f64 },
    Annihilated { partner: usize, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaTrack {
    pub id: usize,
    pub kind: ExtremumType,
    /// `(σ, t)` with σ strictly decreasing.
    pub samples: Vec<(f64, f64)>,
    pub birth_sigma: f64,
    pub end: TrackEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackLevel {
    pub sigma: f64,
    pub live: usize,
    /// Total of a fresh extrema count at this width.
    pub direct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackOptions {
    /// Δσ as a fraction of the current σ.
    pub dsigma_rel: f64,
    pub refine_tol: f64,
    /// Widths the continuation must land on exactly.
    pub checkpoints: Vec<f64>,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            dsigma_rel: DEFAULT_DSIGMA_REL,
            refine_tol: DEFAULT_TRACK_TOL,
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSet {
    pub interval: Window,
    pub tracks: Vec<ExtremaTrack>,
    pub levels: Vec<TrackLevel>,
    /// Tracks started below the top width.
    pub births: usize,
    /// Steps resolved by the turning-point fallback.
    pub turning_points: usize,
    /// `max |Δt| / Δσ` along tracks.
    pub max_speed: f64,
    pub alternation_failures: usize,
}

impl TrackSet {
    /// Live tracks at the level closest to `sigma`.
    pub fn live_at(&self, sigma: f64) -> Option<&TrackLevel> {
        self.levels
            .iter()
            .min_by(|a, b| (a.sigma - sigma).abs().total_cmp(&(b.sigma - sigma).abs()))
    }

    pub fn consistent(&self) -> bool {
        self.levels.iter().all(|l| l.live == l.direct)
    }

    /// Smallest gap between live tracks over all levels.
    pub fn min_separation(&self) -> f64 {
        let mut by_level: std::collections::BTreeMap<u64, Vec<f64>> = Default::default();
        for tr in &self.tracks {
            for &(s, t) in &tr.samples {
                by_level.entry(s.to_bits()).or_default().push(t);
            }
        }
        by_level
            .values_mut()
            .flat_map(|ts| {
                ts.sort_by(f64::total_cmp);
                ts.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

struct Level {
    sigma: f64,
    path: SamplePath,
    roots: Vec<Extremum>,
    total: usize,
}

fn eval_level(config: &PointConfiguration, sigma: f64, interval: Window, tol: f64) -> Result<Level> {
    let opts = PathOptions::new(interval.lo, interval.hi, unit_grid(sigma))?
        .with_max_order(3)
        .with_truncation(Truncation::None);
    let path = evaluate_path(config, &gaussian(sigma)?, &opts)?;
    let tally = count_extrema(&path, tol)?;
    if tally.locations.len() != tally.total() {
        return Err(Error::Tracking {
            sigma,
            reason: "tangency run without a sign change".into(),
        });
    }
    Ok(Level {
        sigma,
        path,
        total: tally.total(),
        roots: tally.locations,
    })
}

struct Prediction {
    track: usize,
    t: f64,
    radius: f64,
    kind: ExtremumType,
}

/// Greedy nearest matching of predictions to same-type roots within each
/// prediction's trust radius. Returns the root index per prediction.
fn match_roots(preds: &[Prediction], roots: &[Extremum]) -> Vec<Option<usize>> {
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        for (j, r) in roots.iter().enumerate() {
            let d = (r.t - p.t).abs();
            if d <= p.radius && ExtremumType::of(r) == p.kind {
                cand.push((d, i, j));
            }
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut by_pred = vec![None; preds.len()];
    let mut taken = vec![false; roots.len()];
    for (_, i, j) in cand {
        if by_pred[i].is_none() && !taken[j] {
            by_pred[i] = Some(j);
            taken[j] = true;
        }
    }
    by_pred
}

/// Continues the zeros of `X′_σ` downward from `σ_max` to `σ_min` on `interval`.
///
/// Each live track is predicted with `dt/dσ = −σX‴/X″` and matched to a zero
/// of a freshly scanned level; unmatched zeros start new tracks. A prediction
/// left unmatched after `MAX_HALVINGS` halvings of Δσ is attached to the
/// nearest unmatched zero of its type within one σ (a turning point), and
/// failing that is reported as a tracking error.
pub fn track_extrema(
    config: &PointConfiguration,
    sigma_min: f64,
    sigma_max: f64,
    interval: Window,
    opts: &TrackOptions,
) -> Result<TrackSet> {
    if !(sigma_min > 0.0 && sigma_max >= sigma_min && opts.dsigma_rel > 0.0 && opts.dsigma_rel < 1.0) {
        return param("tracking needs 0 < σ_min ≤ σ_max and 0 < Δσ/σ < 1");
    }
    let tol = opts.refine_tol;
    let mut level = eval_level(config, sigma_max, interval, tol)?;
    let mut tracks: Vec<ExtremaTrack> = level
        .roots
        .iter()
        .enumerate()
        .map(|(id, r)| ExtremaTrack {
            id,
            kind: ExtremumType::of(r),
            samples: vec![(sigma_max, r.t)],
            birth_sigma: sigma_max,
            end: TrackEnd::ReachedMin,
        })
        .collect();
    let mut live: Vec<usize> = (0..tracks.len()).collect();
    let mut levels = vec![TrackLevel {
        sigma: sigma_max,
        live: live.len(),
        direct: level.total,
    }];
    let mut set = TrackSet {
        interval,
        tracks: Vec::new(),
        levels: Vec::new(),
        births: 0,
        turning_points: 0,
        max_speed: 0.0,
        alternation_failures: 0,
    };
    let mut checkpoints = opts.checkpoints.clone();
    checkpoints.sort_by(f64::total_cmp);

    while level.sigma > sigma_min {
        let sigma = level.sigma;
        let stop = checkpoints
            .iter()
            .rev()
            .find(|&&c| c < sigma)
            .copied()
            .unwrap_or(sigma_min)
            .max(sigma_min);
        let base = (sigma * opts.dsigma_rel).min(sigma - stop);
        let src = level.path.source.as_ref().expect("directly evaluated level");
        let speeds: Vec<f64> = live
            .iter()
            .map(|&k| {
                let t = tracks[k].samples.last().unwrap().1;
                -sigma * src.eval(3, t) / src.eval(2, t)
            })
            .collect();
        let predict = |ds: f64| -> Vec<Prediction> {
            live.iter()
                .zip(&speeds)
                .map(|(&k, &v)| {
                    let t = tracks[k].samples.last().unwrap().1;
                    let (t, radius) = if v.is_finite() {
                        (t - ds * v, 3.0 * v.abs() * ds + 10.0 * tol)
                    } else {
                        (t, sigma)
                    };
                    Prediction {
                        track: k,
                        t,
                        radius,
                        kind: tracks[k].kind,
                    }
                })
                .collect()
        };
        let h = unit_grid(sigma);
        let exits = |p: &Prediction| p.t - p.radius - h <= interval.lo || p.t + p.radius + h >= interval.hi;

        let mut accepted = None;
        let mut ds = base;
        for _ in 0..=MAX_HALVINGS {
            let next = eval_level(config, sigma - ds, interval, tol)?;
            let preds = predict(ds);
            let m = match_roots(&preds, &next.roots);
            if preds.iter().zip(&m).all(|(p, j)| j.is_some() || exits(p)) {
                accepted = Some((next, preds, m));
                break;
            }
            ds *= 0.5;
        }
        let (next, preds, mut m) = match accepted {
            Some(a) => a,
            None => {
                ds = base;
                let next = eval_level(config, sigma - ds, interval, tol)?;
                let preds = predict(ds);
                let mut m = match_roots(&preds, &next.roots);
                let mut taken: Vec<bool> = vec![false; next.roots.len()];
                for j in m.iter().flatten() {
                    taken[*j] = true;
                }
                for (i, p) in preds.iter().enumerate() {
                    if m[i].is_some() || exits(p) {
                        continue;
                    }
                    let near = next
                        .roots
                        .iter()
                        .enumerate()
                        .filter(|(j, r)| !taken[*j] && ExtremumType::of(r) == p.kind)
                        .map(|(j, r)| (j, (r.t - p.t).abs()))
                        .filter(|&(_, d)| d <= sigma)
                        .min_by(|a, b| a.1.total_cmp(&b.1));
                    match near {
                        Some((j, _)) => {
                            m[i] = Some(j);
                            taken[j] = true;
                            set.turning_points += 1;
                        }
                        None => {
                            return Err(Error::Tracking {
                                sigma: sigma - ds,
                                reason: format!("track {} has no continuation (annihilation)", p.track),
                            })
                        }
                    }
                }
                (next, preds, m)
            }
        };

        let new_sigma = next.sigma;
        let mut taken = vec![false; next.roots.len()];
        let mut still = Vec::with_capacity(live.len());
        for (p, j) in preds.iter().zip(m.iter_mut()) {
            let tr = &mut tracks[p.track];
            match j.take() {
                Some(j) => {
                    taken[j] = true;
                    let (s0, t0) = *tr.samples.last().unwrap();
                    let t1 = next.roots[j].t;
                    set.max_speed = set.max_speed.max((t1 - t0).abs() / (s0 - new_sigma));
                    tr.samples.push((new_sigma, t1));
                    still.push(p.track);
                }
                None => tr.end = TrackEnd::Exited { sigma: new_sigma },
            }
        }
        for (j, r) in next.roots.iter().enumerate() {
            if !taken[j] {
                let id = tracks.len();
                tracks.push(ExtremaTrack {
                    id,
                    kind: ExtremumType::of(r),
                    samples: vec![(new_sigma, r.t)],
                    birth_sigma: new_sigma,
                    end: TrackEnd::ReachedMin,
                });
                set.births += 1;
                still.push(id);
            }
        }
        still.sort_by(|&a, &b| tracks[a].samples.last().unwrap().1.total_cmp(&tracks[b].samples.last().unwrap().1));
        if still.windows(2).any(|w| tracks[w[0]].kind == tracks[w[1]].kind) {
            set.alternation_failures += 1;
        }
        live = still;
        levels.push(TrackLevel {
            sigma: new_sigma,
            live: live.len(),
            direct: next.total,
        });
        level = next;
    }
    set.tracks = tracks;
    set.levels = levels;
    Ok(set)
}

/// Sign changes of `X′_σ(t)` over `n` geometrically spaced widths in
/// `[σ_lo, σ_hi]`.
pub fn sigma_crossings(config: &PointConfiguration, t: f64, sigma_lo: f64, sigma_hi: f64, n: usize) -> Result<usize> {
    if !(sigma_lo > 0.0 && sigma_hi > sigma_lo) || n < 2 {
        return param("σ-crossing scan needs 0 < σ_lo < σ_hi and n >= 2");
    }
    let cfg = Arc::new(config.clone());
    let ratio = (sigma_hi / sigma_lo).powf(1.0 / (n - 1) as f64);
    let mut prev: Option<f64> = None;
    let mut count = 0;
    for i in 0..n {
        let s = sigma_lo * ratio.powi(i as i32);
        let k = gaussian(s)?;
        let src = crate::paths::PathSource::new(cfg.clone(), k.clone(), k.vanishing_radius());
        let v = src.eval(1, t);
        if let Some(p) = prev {
            if p != 0.0 && v != 0.0 && p.signum() != v.signum() {
                count += 1;
            }
        }
        if v != 0.0 {
            prev = Some(v);
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityOptions {
    /// Counting interval `[0, L]` for ρ̂.
    pub length: f64,
    /// Configurations (from the start of the ensemble) that are also tracked.
    pub tracked: usize,
    /// Length of the central sub-window tracked in each sampled configuration.
    pub track_window: f64,
}

impl Default for MonotonicityOptions {
    fn default() -> Self {
        Self {
            length: 200.0,
            tracked: 10,
            track_window: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedSample {
    pub replication: u64,
    pub points: usize,
    pub counts: Vec<usize>,
    pub direct: Vec<usize>,
    pub births: usize,
    pub turning_points: usize,
    pub sigma_crossings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub intensity: f64,
    pub curve: RhoCurve,
    /// Degenerate extrema per unit length at each σ.
    pub degenerate_rate: Vec<f64>,
    /// ρ̂ non-increasing within `2·SE` slack between consecutive σ.
    pub mean_pass: bool,
    /// Replications whose extrema count over the whole line rises with σ.
    pub count_violations: Vec<u64>,
    pub tracked: Vec<TrackedSample>,
    pub tracking_errors: Vec<String>,
}

impl MonotonicityReport {
    pub fn strong_pass(&self) -> bool {
        self.count_violations.is_empty()
            && self.tracking_errors.is_empty()
            && self
                .tracked
                .iter()
                .all(|s| s.counts == s.direct && s.counts.windows(2).all(|w| w[1] <= w[0]))
    }

    pub fn pass(&self) -> bool {
        self.mean_pass && self.strong_pass()
    }
}

/// Mean absolute tail omitted from whole-line counts.
pub const WHOLE_LINE_TRUNCATION: f64 = 1e-30;

/// Extrema of a finite configuration over the whole line (they lie in the
/// hull of its points), summing points within the radius certified for
/// `tail`; `None` sums every point.
fn whole_line_extrema(config: &PointConfiguration, sigma: f64, tail: Option<f64>) -> Result<Option<ExtremaTally>> {
    if config.len() < 2 {
        return Ok(None);
    }
    let lo = config.points[0] - sigma;
    let hi = config.points[config.len() - 1] + sigma;
    let kernel = gaussian(sigma)?;
    let mut opts = PathOptions::new(lo, hi, unit_grid(sigma))?;
    let mut finite = config.clone();
    match tail {
        Some(eps) => {
            opts = opts.with_truncation(Truncation::Certified(eps));
            let r = certified_radius(kernel.as_ref(), config.intensity, &ImpulseSpec::DeterministicOne, 2, eps)?;
            finite.window = Window::new(lo, hi)?.expand(r).hull(&config.window);
        }
        None => opts = opts.with_truncation(Truncation::None),
    }
    let path = evaluate_path(&finite, &kernel, &opts)?;
    count_extrema(&path, default_refine_tol(&path)).map(Some)
}

/// Exact extrema count of a finite configuration over the whole line.
pub fn finite_extrema_count(config: &PointConfiguration, sigma: f64) -> Result<usize> {
    Ok(match whole_line_extrema(config, sigma, None)? {
        Some(t) => t.total(),
        None => config.len(),
    })
}

fn whole_line_count(config: &PointConfiguration, sigma: f64) -> Result<usize> {
    Ok(match whole_line_extrema(config, sigma, Some(WHOLE_LINE_TRUNCATION))? {
        Some(t) => t.total(),
        None => config.len(),
    })
}

struct Replication {
    rates: Vec<f64>,
    degenerate: Vec<usize>,
    whole: Vec<usize>,
}

/// ρ̂(λ, σ) over an increasing σ grid with common configurations, the
/// per-configuration count monotonicity, and tracking on a sample.
pub fn rho_monotonicity_report(
    intensity: f64,
    sigmas: &[f64],
    replications: usize,
    family: StreamFamily,
    opts: &MonotonicityOptions,
) -> Result<MonotonicityReport> {
    if sigmas.is_empty() || sigmas.windows(2).any(|w| w[1] <= w[0]) || sigmas[0] <= 0.0 {
        return param("σ grid must be positive and strictly increasing");
    }
    if replications < 2 {
        return param("monotonicity report needs at least two replications");
    }
    let s_max = *sigmas.last().unwrap();
    let length = opts.length;
    let buffer = certified_radius(
        &GaussianKernel::new(s_max)?,
        intensity,
        &ImpulseSpec::DeterministicOne,
        2,
        crate::paths::DEFAULT_TRUNCATION,
    )?;
    let window = Window::new(-buffer, length + buffer)?;
    let sample = |r: u64| sample_ppp(intensity, window, &ImpulseSpec::DeterministicOne, family.stream(r));
    let reps: Vec<Replication> = (0..replications as u64)
        .into_par_iter()
        .map(|r| -> Result<Replication> {
            let config = sample(r)?;
            let mut out = Replication {
                rates: Vec::new(),
                degenerate: Vec::new(),
                whole: Vec::new(),
            };
            for &s in sigmas {
                let whole = whole_line_extrema(&config, s, Some(WHOLE_LINE_TRUNCATION))?;
                let (inside, degenerate, total) = match &whole {
                    Some(t) => {
                        let inner: Vec<_> = t.locations.iter().filter(|e| e.t >= 0.0 && e.t <= length).collect();
                        let deg = inner.iter().filter(|e| e.kind == ExtremumKind::Degenerate).count();
                        (inner.len(), deg, t.total())
                    }
                    None => {
                        let n = config.count_in(0.0, length);
                        (n, 0, config.len())
                    }
                };
                out.rates.push(inside as f64 / length);
                out.degenerate.push(degenerate);
                out.whole.push(total);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let n = replications as f64;
    let mut rho = Vec::new();
    let mut se = Vec::new();
    let mut degenerate_rate = Vec::new();
    for j in 0..sigmas.len() {
        let xs: Vec<f64> = reps.iter().map(|r| r.rates[j]).collect();
        let e = stats::mean_se(&xs);
        rho.push(e.value);
        se.push(e.se);
        degenerate_rate.push(reps.iter().map(|r| r.degenerate[j] as f64).sum::<f64>() / (n * length));
    }
    let mean_pass = (1..sigmas.len()).all(|j| rho[j] <= rho[j - 1] + 2.0 * se[j].hypot(se[j - 1]));
    let count_violations = reps
        .iter()
        .enumerate()
        .filter(|(_, r)| r.whole.windows(2).any(|w| w[1] > w[0]))
        .map(|(i, _)| i as u64)
        .collect();

    let centre = 0.5 * length;
    let half = 0.5 * opts.track_window;
    let tracked_results: Vec<Result<TrackedSample>> = (0..opts.tracked.min(replications) as u64)
        .into_par_iter()
        .map(|r| {
            let full = sample(r)?;
            let sub = full.restrict(Window::new(centre - half, centre + half)?);
            let hull = match (sub.points.first(), sub.points.last()) {
                (Some(&a), Some(&b)) => Window::new(a - sigmas[0], b + sigmas[0])?,
                _ => Window::new(centre - half, centre + half)?,
            };
            let topts = TrackOptions {
                checkpoints: sigmas.to_vec(),
                ..TrackOptions::default()
            };
            let set = track_extrema(&sub, sigmas[0], s_max, hull, &topts)?;
            let counts = sigmas
                .iter()
                .map(|&s| set.live_at(s).map_or(0, |l| l.live))
                .collect();
            let direct = sigmas
                .iter()
                .map(|&s| whole_line_count(&sub, s))
                .collect::<Result<_>>()?;
            Ok(TrackedSample {
                replication: r,
                points: sub.len(),
                counts,
                direct,
                births: set.births,
                turning_points: set.turning_points,
                sigma_crossings: sigma_crossings(&sub, centre, sigmas[0], s_max, 400)?,
            })
        })
        .collect();
    let mut tracked = Vec::new();
    let mut tracking_errors = Vec::new();
    for (r, res) in tracked_results.into_iter().enumerate() {
        match res {
            Ok(s) => tracked.push(s),
            Err(e) => tracking_errors.push(format!("replication {r}: {e}")),
        }
    }
    Ok(MonotonicityReport {
        intensity,
        curve: RhoCurve {
            axis_name: "sigma".into(),
            axis: sigmas.to_vec(),
            rho,
            se,
            replications,
            length,
        },
        degenerate_rate,
        mean_pass,
        count_violations,
        tracked,
        tracking_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(points: &[f64]) -> PointConfiguration {
        PointConfiguration::unit_points(Window::new(-200.0, 200.0).unwrap(), 1.0, points).unwrap()
    }

    #[test]
    fn limits_and_bound() {
        assert!((rho_gaussian_limit(1.0) - 0.389_848).abs() < 1e-6);
        assert!((rho_upper_bound(0.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_point_has_one_static_track() {
        let c = config(&[0.3]);
        let set = track_extrema(&c, 0.2, 2.0, Window::new(0.1, 0.5).unwrap(), &TrackOptions::default()).unwrap();
        assert_eq!(set.tracks.len(), 1);
        let tr = &set.tracks[0];
        assert_eq!(tr.kind, ExtremumType::Maximum);
        assert!(tr.samples.iter().all(|&(_, t)| (t - 0.3).abs() < 1e-8));
        assert_eq!(tr.end, TrackEnd::ReachedMin);
        assert!(set.consistent());
    }

    #[test]
    fn two_points_split_near_half_distance() {
        let d = 2.0;
        let c = config(&[-d / 2.0, d / 2.0]);
        let set = track_extrema(&c, 0.3, 3.0, Window::new(-1.3, 1.3).unwrap(), &TrackOptions::default()).unwrap();
        assert!(set.consistent());
        assert_eq!(set.tracks.len(), 3);
        assert_eq!(set.live_at(3.0).unwrap().live, 1);
        assert_eq!(set.live_at(0.3).unwrap().live, 3);
        let birth = set.tracks.iter().map(|t| t.birth_sigma).filter(|&s| s < 3.0).fold(0.0, f64::max);
        assert!((birth - d / 2.0).abs() < 0.03 * d, "birth at {birth}");
        assert_eq!(set.alternation_failures, 0);
        assert!(set.min_separation() > DEFAULT_TRACK_TOL);
    }

    #[test]
    fn asymmetric_pair_births_without_fallback() {
        let c = PointConfiguration::from_points(
            Window::new(-50.0, 50.0).unwrap(),
            1.0,
            vec![(-1.1, 1.0), (0.9, 0.7), (2.5, 1.3)],
            crate::rng::SeedInfo::new(0, 0),
        )
        .unwrap();
        let set = track_extrema(&c, 0.2, 3.0, Window::new(-1.3, 2.7).unwrap(), &TrackOptions::default()).unwrap();
        assert!(set.consistent());
        assert_eq!(set.turning_points, 0);
        assert_eq!(set.live_at(0.2).unwrap().live, 5);
        assert!(set.levels.windows(2).all(|w| w[1].live >= w[0].live));
    }

    #[test]
    fn semigroup_identity_on_fixed_configuration() {
        let pts: Vec<f64> = (0..40).map(|i| -20.0 + i as f64 * 0.97 + 0.3 * ((i * 7) % 5) as f64).collect();
        let c = config(&pts);
        let rep = semigroup_check(&c, 0.5, 0.5, Window::new(-5.0, 5.0).unwrap(), 0.01).unwrap();
        assert!(rep.relative() < 1e-7, "{rep:?}");
        let small = config(&[0.0]);
        let err = semigroup_check(
            &PointConfiguration::unit_points(Window::new(-6.0, 6.0).unwrap(), 1.0, &[0.0]).unwrap(),
            0.5,
            0.5,
            Window::new(-5.0, 5.0).unwrap(),
            0.01,
        );
        assert!(matches!(err, Err(Error::Window { .. })));
        assert!(semigroup_check(&small, 0.5, 0.5, Window::new(-5.0, 5.0).unwrap(), 0.01).is_ok());
    }

    #[test]
    fn sigma_crossings_are_few() {
        let c = config(&[-1.0, 1.5]);
        assert!(sigma_crossings(&c, 0.2, 0.2, 4.0, 200).unwrap() <= 2);
    }
}
