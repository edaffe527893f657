//! Level crossings and local extrema of sample paths, Kac's smoothed count,
//! total variation, Monte Carlo crossing curves and structural bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::kernels::KernelRef;
use crate::paths::{evaluate_path, required_window, PathOptions, SamplePath};
use crate::ppp::{sample_conditional_with, sample_ppp_with, ImpulseSpec, PointConfiguration, Window};
use crate::roots::bisect;
use crate::rng::StreamFamily;
use crate::stats::{self, Estimate};

/// Relative value/derivative tolerance for tangency suspicion.
pub const TANGENCY_REL_TOL: f64 = 1e-9;
/// Grid steps searched beyond an endpoint to close a near-tangent run.
pub const EDGE_SEARCH_STEPS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

/// A refined root of `X^(k) − α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub t: f64,
    /// `|X^(k)(t) − α|` at the refined location.
    pub residual: f64,
    /// `X^(k+1)(t)`.
    pub slope: f64,
    pub direction: Direction,
    /// Found inside a near-tangent run (counted as tangency-suspect).
    pub suspect: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingTally {
    pub level: f64,
    pub a: f64,
    pub b: f64,
    pub up: usize,
    pub down: usize,
    pub tangency_suspect: usize,
    pub roots: Vec<Root>,
}

impl CrossingTally {
    pub fn total(&self) -> usize {
        self.up + self.down + self.tangency_suspect
    }

    /// Up and down crossings alternate in location order.
    pub fn alternates(&self) -> bool {
        self.roots
            .iter()
            .filter(|r| !r.suspect)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[0].direction != w[1].direction)
    }
}

fn scale(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Roots of `X^(order) − level` on the path grid, refined by bisection.
///
/// Nodes where both `|X^(k) − α|` and `|X^(k+1)|` are below `10⁻⁹` times
/// their path scales form near-tangent runs; each maximal run counts once as
/// tangency-suspect. A run bracketed by opposite signs is still located.
fn level_set(path: &SamplePath, order: usize, level: f64, refine_tol: f64) -> CrossingTally {
    let f: Vec<f64> = path.values[order].iter().map(|x| x - level).collect();
    let d = &path.values[order + 1];
    let v_tol = TANGENCY_REL_TOL * scale(&path.values[order]);
    let d_tol = TANGENCY_REL_TOL * scale(d);
    let n = f.len();
    let near: Vec<bool> = (0..n).map(|i| f[i].abs() <= v_tol && d[i].abs() <= d_tol).collect();
    let mut tally = CrossingTally {
        level,
        a: path.a,
        b: path.b,
        up: 0,
        down: 0,
        tangency_suspect: 0,
        roots: Vec::new(),
    };
    let eval = |t: f64| path.eval(order, t) - level;
    let push = |tally: &mut CrossingTally, t: f64, rising: bool, suspect: bool| {
        let slope = path.eval(order + 1, t);
        let direction = if slope > 0.0 || (slope == 0.0 && rising) || (suspect && rising) {
            Direction::Up
        } else {
            Direction::Down
        };
        if suspect {
            tally.tangency_suspect += 1;
        } else {
            match direction {
                Direction::Up => tally.up += 1,
                Direction::Down => tally.down += 1,
            }
        }
        tally.roots.push(Root {
            t,
            residual: eval(t).abs(),
            slope,
            direction,
            suspect,
        });
    };
    // A run touching an endpoint is followed past it with the path source;
    // a sign change across the run is located by bisection and kept only
    // when it falls inside the interval.
    let edge_run = |tally: &mut CrossingTally, inner: f64, f_inner: f64, dir: f64| {
        let outer = path.source.as_ref().and_then(|_| {
            let start = if dir < 0.0 { path.a } else { path.b };
            (1..=EDGE_SEARCH_STEPS).map(|j| start + dir * path.step * j as f64).find(|&t| {
                let v = eval(t);
                v != 0.0 && (v.abs() > v_tol || path.eval(order + 1, t).abs() > d_tol)
            })
        });
        match outer {
            Some(t_out) if eval(t_out).signum() != f_inner.signum() => {
                let (lo, hi) = if dir < 0.0 { (t_out, inner) } else { (inner, t_out) };
                let t = bisect(eval, lo, hi, refine_tol);
                if t >= path.a && t <= path.b {
                    push(tally, t, (f_inner > 0.0) == (dir < 0.0), true);
                }
            }
            _ => tally.tangency_suspect += 1,
        }
    };
    // nodes with a definite sign, outside near-tangent runs
    let definite = |i: usize| f[i] != 0.0 && !near[i];
    let mut prev: Option<usize> = None;
    for i in 0..n {
        if !definite(i) {
            continue;
        }
        let opposite = |p: usize| f[p].signum() != f[i].signum();
        match prev {
            Some(p) if i == p + 1 => {
                if opposite(p) {
                    let t = bisect(eval, path.t[p], path.t[i], refine_tol);
                    push(&mut tally, t, f[i] > 0.0, false);
                }
            }
            Some(p) => {
                let gap = p + 1..i;
                if gap.clone().any(|j| near[j]) {
                    if opposite(p) {
                        let t = bisect(eval, path.t[p], path.t[i], refine_tol);
                        push(&mut tally, t, f[i] > 0.0, true);
                    } else {
                        tally.tangency_suspect += 1;
                    }
                } else if opposite(p) {
                    // exact zeros on the grid with a definite slope
                    let mid = gap.start + (gap.len() - 1) / 2;
                    push(&mut tally, path.t[mid], f[i] > 0.0, false);
                } else {
                    tally.tangency_suspect += 1;
                }
            }
            None if i > 0 => {
                if (0..i).any(|j| near[j]) {
                    edge_run(&mut tally, path.t[i], f[i], -1.0);
                } else {
                    // exact zero at the left endpoint
                    push(&mut tally, path.t[0], f[i] > 0.0, false);
                }
            }
            None => {}
        }
        prev = Some(i);
    }
    match prev {
        Some(p) if p + 1 < n => {
            if (p + 1..n).any(|j| near[j]) {
                edge_run(&mut tally, path.t[p], f[p], 1.0);
            } else {
                push(&mut tally, path.t[n - 1], f[p] < 0.0, false);
            }
        }
        None if n > 0 => {
            if near.iter().any(|&x| x) {
                tally.tangency_suspect += 1;
            } else {
                // every node is an exact zero with a definite slope
                push(&mut tally, path.t[0], d[0] > 0.0, false);
            }
        }
        _ => {}
    }
    tally
}

/// Default bisection tolerance for a path: `h · 10⁻⁶`.
pub fn default_refine_tol(path: &SamplePath) -> f64 {
    path.step * 1e-6
}

/// Crossings of level `α` on `[a, b]`.
pub fn count_crossings(path: &SamplePath, level: f64, refine_tol: f64) -> CrossingTally {
    level_set(path, 0, level, refine_tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Maximum,
    Minimum,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub t: f64,
    pub kind: ExtremumKind,
    /// `X′` increases through the zero (a minimum when nondegenerate).
    pub rising: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaTally {
    pub maxima: usize,
    pub minima: usize,
    pub degenerate: usize,
    pub locations: Vec<Extremum>,
}

impl ExtremaTally {
    pub fn total(&self) -> usize {
        self.maxima + self.minima + self.degenerate
    }

    /// Maxima and minima alternate in location order; degenerate entries
    /// alternate by the direction of `X′`.
    pub fn alternates(&self) -> bool {
        self.locations.windows(2).all(|w| w[0].rising != w[1].rising)
    }
}

/// Zeros of `X′` classified by the sign of `X″`; zeros with `|X″|` below
/// `10⁻⁹` times its path scale, or inside near-tangent runs, are degenerate.
pub fn count_extrema(path: &SamplePath, refine_tol: f64) -> Result<ExtremaTally> {
    if path.max_order() < 2 {
        return param("extrema counting needs X″ on the path");
    }
    let tally = level_set(path, 1, 0.0, refine_tol);
    let d_tol = TANGENCY_REL_TOL * scale(&path.values[2]);
    let located_suspects = tally.roots.iter().filter(|r| r.suspect).count();
    let mut out = ExtremaTally {
        maxima: 0,
        minima: 0,
        degenerate: tally.tangency_suspect - located_suspects,
        locations: Vec::with_capacity(tally.roots.len()),
    };
    for r in &tally.roots {
        let rising = r.direction == Direction::Up;
        let kind = if r.suspect || r.slope.abs() <= d_tol {
            out.degenerate += 1;
            ExtremumKind::Degenerate
        } else if r.slope < 0.0 {
            out.maxima += 1;
            ExtremumKind::Maximum
        } else {
            out.minima += 1;
            ExtremumKind::Minimum
        };
        out.locations.push(Extremum { t: r.t, kind, rising });
    }
    Ok(out)
}

/// Kac's smoothed count `(1/2δ) ∫ 1{|X − α| < δ} |X′| dt`, with `X` taken
/// as the piecewise-linear interpolant of the grid values, on which the
/// integral is exact.
pub fn kac_estimate(path: &SamplePath, level: f64, delta: f64) -> f64 {
    let (lo, hi) = (level - delta, level + delta);
    let x = path.x();
    let mut acc = 0.0;
    for w in x.windows(2) {
        let (p, q) = if w[0] <= w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
        acc += (q.min(hi) - p.max(lo)).max(0.0);
    }
    acc / (2.0 * delta)
}

/// `∫_a^b |X′|` by the trapezoid rule, integrating `|·|` of the linear
/// interpolant exactly in cells where `X′` changes sign.
pub fn total_variation(path: &SamplePath) -> f64 {
    let d = path.dx();
    let h = path.step;
    let mut acc = 0.0;
    for w in d.windows(2) {
        let (p, q) = (w[0], w[1]);
        acc += if p * q < 0.0 {
            0.5 * h * (p * p + q * q) / (p.abs() + q.abs())
        } else {
            0.5 * h * (p.abs() + q.abs())
        };
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolleViolation {
    pub level: f64,
    pub crossings: usize,
    pub extrema: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolleReport {
    pub extrema: usize,
    pub checked: usize,
    pub violations: Vec<RolleViolation>,
}

impl RolleReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `N_X(α) <= N_{X′}(0) + 1` for every level.
pub fn rolle_check(path: &SamplePath, levels: &[f64]) -> Result<RolleReport> {
    let tol = default_refine_tol(path);
    let extrema = count_extrema(path, tol)?.total();
    let violations = levels
        .iter()
        .filter_map(|&level| {
            let c = count_crossings(path, level, tol).total();
            (c > extrema + 1).then_some(RolleViolation {
                level,
                crossings: c,
                extrema,
            })
        })
        .collect();
    Ok(RolleReport {
        extrema,
        checked: levels.len(),
        violations,
    })
}

/// Zero bound for `X′` of a unit-impulse Gaussian shot noise with `n` points.
pub fn exp_poly_extrema_bound(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        2 * n - 1
    }
}

/// Zero bound for `X″` (degree-2 polynomial factors).
pub fn exp_poly_inflection_bound(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        3 * n - 1
    }
}

/// Restricts sampling to configurations with at least `min_count` points in `[−T, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    pub half_width: f64,
    pub min_count: usize,
}

/// Samples a configuration on `window`, optionally conditioned on the count
/// in `[−T, T]`; the conditioning window is sampled by rejection and the
/// rest of the hull unconditionally.
pub fn sample_for_path(
    intensity: f64,
    window: Window,
    impulses: &ImpulseSpec,
    conditioning: Option<Conditioning>,
    seed: crate::rng::SeedInfo,
) -> Result<PointConfiguration> {
    let mut rng = seed.rng();
    let Some(cond) = conditioning else {
        return sample_ppp_with(&mut rng, intensity, window, impulses, seed);
    };
    let inner = Window::symmetric(cond.half_width)?;
    let full = window.hull(&inner);
    let core = sample_conditional_with(&mut rng, intensity, inner, cond.min_count, impulses, seed)?;
    let mut pairs: Vec<(f64, f64)> = core.points.iter().copied().zip(core.impulses.iter().copied()).collect();
    for (lo, hi) in [(full.lo, inner.lo), (inner.hi, full.hi)] {
        if hi > lo {
            let side = sample_ppp_with(&mut rng, intensity, Window::new(lo, hi)?, impulses, seed)?;
            pairs.extend(side.points.iter().copied().zip(side.impulses.iter().copied()));
        }
    }
    let mut config = PointConfiguration::from_points(full, intensity, pairs, seed)?;
    config.rejected_draws = core.rejected_draws;
    Ok(config)
}

/// One level of a Monte Carlo crossing curve (rates per unit length).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub level: f64,
    pub mean: f64,
    pub se: f64,
    pub up_mean: f64,
    pub down_mean: f64,
    pub tangency_rate: f64,
    /// Mean of the squared count (not normalized by length).
    pub second_moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingCurve {
    pub interval: Window,
    pub replications: usize,
    pub points: Vec<CurvePoint>,
    /// Mean total variation per unit length.
    pub total_variation: Estimate,
    pub rolle_violations: usize,
    pub rejected_draws: u64,
}

impl CrossingCurve {
    /// Trapezoid integral of the mean curve over its level grid.
    pub fn integral(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| 0.5 * (w[1].level - w[0].level) * (w[0].mean + w[1].mean))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions {
    pub step: f64,
    pub conditioning: Option<Conditioning>,
    /// Count crossings of the normalized process `(X − λE(β)∫g)/√λ`.
    pub normalized: bool,
}

struct ReplicationTally {
    counts: Vec<(usize, usize, usize)>,
    tv: f64,
    rolle: usize,
    rejected: u64,
}

/// Monte Carlo mean crossings per unit length over `interval` for each level.
pub fn mc_crossing_curve(
    intensity: f64,
    kernel: &KernelRef,
    impulses: &ImpulseSpec,
    levels: &[f64],
    interval: Window,
    replications: usize,
    family: StreamFamily,
    opts: CurveOptions,
) -> Result<CrossingCurve> {
    if replications == 0 {
        return param("crossing curve needs at least one replication");
    }
    let popts = PathOptions::new(interval.lo, interval.hi, opts.step)?.with_impulses(impulses);
    let window = required_window(kernel.as_ref(), intensity, impulses, &popts)?;
    let tallies: Vec<ReplicationTally> = (0..replications as u64)
        .into_par_iter()
        .map(|r| -> Result<ReplicationTally> {
            let config = sample_for_path(intensity, window, impulses, opts.conditioning, family.stream(r))?;
            let mut path = evaluate_path(&config, kernel, &popts)?;
            if opts.normalized {
                path = crate::paths::normalize_path(&path, intensity, kernel.as_ref(), Some(impulses.mean()))?;
            }
            let tol = default_refine_tol(&path);
            let extrema = count_extrema(&path, tol)?.total();
            let mut rolle = 0;
            let counts = levels
                .iter()
                .map(|&lv| {
                    let t = count_crossings(&path, lv, tol);
                    if t.total() > extrema + 1 {
                        rolle += 1;
                    }
                    (t.up, t.down, t.tangency_suspect)
                })
                .collect();
            Ok(ReplicationTally {
                counts,
                tv: total_variation(&path),
                rolle,
                rejected: config.rejected_draws,
            })
        })
        .collect::<Result<_>>()?;
    let len = interval.length().max(f64::MIN_POSITIVE);
    let n = replications as f64;
    let points = levels
        .iter()
        .enumerate()
        .map(|(j, &level)| {
            let totals: Vec<f64> = tallies
                .iter()
                .map(|t| {
                    let (u, d, s) = t.counts[j];
                    (u + d + s) as f64
                })
                .collect();
            let est = stats::mean_se(&totals);
            let sum = |f: fn(&(usize, usize, usize)) -> usize| {
                tallies.iter().map(|t| f(&t.counts[j]) as f64).sum::<f64>() / n
            };
            CurvePoint {
                level,
                mean: est.value / len,
                se: est.se / len,
                up_mean: sum(|c| c.0) / len,
                down_mean: sum(|c| c.1) / len,
                tangency_rate: sum(|c| c.2) / len,
                second_moment: totals.iter().map(|x| x * x).sum::<f64>() / n,
            }
        })
        .collect();
    let tv: Vec<f64> = tallies.iter().map(|t| t.tv / len).collect();
    Ok(CrossingCurve {
        interval,
        replications,
        points,
        total_variation: stats::mean_se(&tv),
        rolle_violations: tallies.iter().map(|t| t.rolle).sum(),
        rejected_draws: tallies.iter().map(|t| t.rejected).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::GaussianKernel;
    use crate::paths::Truncation;

    fn bump(a: f64, b: f64, h: f64) -> SamplePath {
        let k = GaussianKernel::arc(1.0).unwrap();
        let w = Window::new(-30.0, 30.0).unwrap();
        let c = PointConfiguration::unit_points(w, 1.0, &[0.0]).unwrap();
        evaluate_path(&c, &k, &PathOptions::new(a, b, h).unwrap()).unwrap()
    }

    fn constant(v: f64) -> SamplePath {
        SamplePath::from_values(0.0, 0.1, vec![vec![v; 50], vec![0.0; 50], vec![0.0; 50]]).unwrap()
    }

    #[test]
    fn constant_paths() {
        let p = constant(0.0);
        assert_eq!(count_crossings(&p, 1.0, 1e-9).total(), 0);
        let t = count_crossings(&p, 0.0, 1e-9);
        assert!(t.tangency_suspect >= 1);
        assert_eq!((t.up, t.down), (0, 0));
        assert_eq!(kac_estimate(&p, 1.0, 0.5), 0.0);
        assert_eq!(total_variation(&p), 0.0);
        assert!(rolle_check(&p, &[0.0, 1.0]).unwrap().pass());
    }

    #[test]
    fn single_bump_half_height() {
        let p = bump(-6.0, 6.0, 0.05);
        let level = 0.5 / (2.0 * std::f64::consts::PI).sqrt();
        let t = count_crossings(&p, level, 1e-10);
        assert_eq!((t.up, t.down, t.total()), (1, 1, 2));
        let half = (2.0 * 2f64.ln()).sqrt();
        assert!((t.roots[0].t + half).abs() < 1e-9);
        assert!((t.roots[1].t - half).abs() < 1e-9);
        let e = count_extrema(&p, 1e-10).unwrap();
        assert_eq!((e.maxima, e.minima), (1, 0));
        let kac = kac_estimate(&p, level, 1e-3);
        assert!((kac - 2.0).abs() < 0.1);
    }

    #[test]
    fn bump_total_variation() {
        let p = bump(-6.0, 6.0, 1.0 / 40.0);
        let exact = 2.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((total_variation(&p) - exact).abs() < 1e-4, "{}", total_variation(&p));
    }

    #[test]
    fn exact_grid_zero_counts_once() {
        let xs: Vec<f64> = (0..11).map(|i| i as f64 - 5.0).collect();
        let p = SamplePath::from_values(-5.0, 1.0, vec![xs, vec![1.0; 11], vec![0.0; 11]]).unwrap();
        let t = count_crossings(&p, 0.0, 1e-9);
        assert_eq!((t.up, t.down), (1, 0));
        let t = count_crossings(&p, -5.0, 1e-9);
        assert_eq!(t.total(), 1);
        let t = count_crossings(&p, 5.0, 1e-9);
        assert_eq!(t.total(), 1);
    }

    #[test]
    fn two_separated_bumps() {
        let k = GaussianKernel::arc(1.0).unwrap();
        let w = Window::new(-10.0, 10.0).unwrap();
        let c = PointConfiguration::unit_points(w, 1.0, &[-3.0, 3.0]).unwrap();
        let opts = PathOptions::new(-10.0, 10.0, 0.05).unwrap().with_truncation(Truncation::None);
        let p = evaluate_path(&c, &k, &opts).unwrap();
        let e = count_extrema(&p, 1e-10).unwrap();
        assert_eq!((e.maxima, e.minima), (2, 1));
        assert!(e.alternates());
        assert!(e.total() <= exp_poly_extrema_bound(2));
        assert!(k.smoothness() >= 2);
    }

    #[test]
    fn bounds() {
        assert_eq!(exp_poly_extrema_bound(0), 0);
        assert_eq!(exp_poly_extrema_bound(1), 1);
        assert_eq!(exp_poly_extrema_bound(2), 3);
        assert_eq!(exp_poly_inflection_bound(2), 5);
    }
}
