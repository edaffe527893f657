//! Marked Poisson point configurations on finite windows.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::quad;
use crate::rng::SeedInfo;

/// Rejection sampling gives up below this acceptance probability.
pub const MIN_ACCEPTANCE: f64 = 1e-9;

/// Closed interval `[lo, hi]` on the time axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return param(format!("window [{lo}, {hi}] is inverted or not finite"));
        }
        Ok(Self { lo, hi })
    }

    /// Symmetric window `[-t, t]`.
    pub fn symmetric(t: f64) -> Result<Self> {
        Self::new(-t, t)
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn expand(&self, by: f64) -> Window {
        Window {
            lo: self.lo - by,
            hi: self.hi + by,
        }
    }

    pub fn hull(&self, other: &Window) -> Window {
        Window {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

/// Law of the impulse marks `β_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ImpulseSpec {
    DeterministicOne,
    /// `lo` with probability `1 - p_hi`, `hi` with probability `p_hi`.
    TwoPoint { lo: f64, hi: f64, p_hi: f64 },
    UniformInterval { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
}

impl Default for ImpulseSpec {
    fn default() -> Self {
        ImpulseSpec::DeterministicOne
    }
}

impl ImpulseSpec {
    /// Parses `one`, `two:lo=..,hi=..,p=..`, `uniform:lo=..,hi=..` or
    /// `normal:mean=..,sd=..`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, args) = spec.trim().split_once(':').unwrap_or((spec.trim(), ""));
        let mut kv = std::collections::BTreeMap::new();
        for pair in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("impulse argument `{pair}` is not key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("impulse argument `{pair}` is not numeric")))?;
            kv.insert(k.trim().to_string(), v);
        }
        let get = |k: &str| {
            kv.get(k)
                .copied()
                .ok_or_else(|| Error::Parameter(format!("impulse law `{name}` needs `{k}`")))
        };
        let spec = match name.to_ascii_lowercase().as_str() {
            "one" | "unit" | "deterministic" => ImpulseSpec::DeterministicOne,
            "two" | "two-point" => ImpulseSpec::TwoPoint {
                lo: get("lo")?,
                hi: get("hi")?,
                p_hi: get("p")?,
            },
            "uniform" => ImpulseSpec::UniformInterval {
                lo: get("lo")?,
                hi: get("hi")?,
            },
            "normal" => ImpulseSpec::Normal {
                mean: get("mean")?,
                sd: get("sd")?,
            },
            other => return param(format!("unknown impulse law `{other}`")),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ImpulseSpec::DeterministicOne => Ok(()),
            ImpulseSpec::TwoPoint { lo, hi, p_hi } => {
                if !(0.0..=1.0).contains(&p_hi) || !lo.is_finite() || !hi.is_finite() {
                    return param("two-point impulse needs finite values and p in [0, 1]");
                }
                Ok(())
            }
            ImpulseSpec::UniformInterval { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                    return param("uniform impulse interval is inverted or not finite");
                }
                Ok(())
            }
            ImpulseSpec::Normal { mean, sd } => {
                if !mean.is_finite() || !(sd >= 0.0 && sd.is_finite()) {
                    return param("normal impulse needs finite mean and sd >= 0");
                }
                Ok(())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ImpulseSpec::DeterministicOne => 1.0,
            ImpulseSpec::TwoPoint { lo, hi, p_hi } => {
                if rng.random::<f64>() < p_hi {
                    hi
                } else {
                    lo
                }
            }
            ImpulseSpec::UniformInterval { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            ImpulseSpec::Normal { mean, sd } => {
                Normal::new(mean, sd).expect("validated normal law").sample(rng)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ImpulseSpec::DeterministicOne => 1.0,
            ImpulseSpec::TwoPoint { lo, hi, p_hi } => lo * (1.0 - p_hi) + hi * p_hi,
            ImpulseSpec::UniformInterval { lo, hi } => 0.5 * (lo + hi),
            ImpulseSpec::Normal { mean, .. } => mean,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            ImpulseSpec::DeterministicOne => 1.0,
            ImpulseSpec::TwoPoint { lo, hi, p_hi } => lo * lo * (1.0 - p_hi) + hi * hi * p_hi,
            ImpulseSpec::UniformInterval { lo, hi } => (lo * lo + lo * hi + hi * hi) / 3.0,
            ImpulseSpec::Normal { mean, sd } => mean * mean + sd * sd,
        }
    }

    /// Upper bound on E|β|.
    pub fn abs_mean_bound(&self) -> f64 {
        match *self {
            ImpulseSpec::DeterministicOne => 1.0,
            ImpulseSpec::TwoPoint { lo, hi, p_hi } => lo.abs() * (1.0 - p_hi) + hi.abs() * p_hi,
            ImpulseSpec::UniformInterval { lo, hi } => lo.abs().max(hi.abs()),
            ImpulseSpec::Normal { .. } => self.second_moment().sqrt(),
        }
    }

    /// Weighted nodes `(z, w)` with `Σ w f(z) ≈ E f(β)`: exact for discrete laws,
    /// Gauss rules otherwise.
    pub fn expectation_nodes(&self) -> Vec<(f64, f64)> {
        match *self {
            ImpulseSpec::DeterministicOne => vec![(1.0, 1.0)],
            ImpulseSpec::TwoPoint { lo, hi, p_hi } => vec![(lo, 1.0 - p_hi), (hi, p_hi)],
            ImpulseSpec::UniformInterval { lo, hi } => quad::gauss_legendre(24)
                .into_iter()
                .map(|(x, w)| (0.5 * (lo + hi) + 0.5 * (hi - lo) * x, 0.5 * w))
                .collect(),
            ImpulseSpec::Normal { mean, sd } => quad::gauss_hermite_normal(32)
                .into_iter()
                .map(|(x, w)| (mean + sd * x, w))
                .collect(),
        }
    }
}

/// A sampled configuration `{(τ_i, β_i)}` on a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfiguration {
    pub window: Window,
    /// Sorted ascending.
    pub points: Vec<f64>,
    pub impulses: Vec<f64>,
    pub intensity: f64,
    pub seed: SeedInfo,
    /// Draws discarded by conditioning (0 when unconditioned).
    pub rejected_draws: u64,
}

impl PointConfiguration {
    /// Builds a configuration from explicit points; sorts them and checks the window.
    pub fn from_points(
        window: Window,
        intensity: f64,
        mut pairs: Vec<(f64, f64)>,
        seed: SeedInfo,
    ) -> Result<Self> {
        if let Some(&(t, _)) = pairs.iter().find(|(t, _)| !window.contains(*t)) {
            return param(format!("point {t} outside window [{}, {}]", window.lo, window.hi));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (points, impulses) = pairs.into_iter().unzip();
        Ok(Self {
            window,
            points,
            impulses,
            intensity,
            seed,
            rejected_draws: 0,
        })
    }

    /// Unit impulses at the given times.
    pub fn unit_points(window: Window, intensity: f64, times: &[f64]) -> Result<Self> {
        Self::from_points(
            window,
            intensity,
            times.iter().map(|&t| (t, 1.0)).collect(),
            SeedInfo::new(0, 0),
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points in `[lo, hi]`.
    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        let start = self.points.partition_point(|&t| t < lo);
        let end = self.points.partition_point(|&t| t <= hi);
        end.saturating_sub(start)
    }

    /// Index range of points with `lo <= τ <= hi`.
    pub fn range_in(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.points.partition_point(|&t| t < lo);
        let end = self.points.partition_point(|&t| t <= hi);
        start..end.max(start)
    }

    /// Superposition of two configurations on the same window.
    pub fn merge(&self, other: &PointConfiguration) -> Result<PointConfiguration> {
        if self.window != other.window {
            return param("superposition requires identical windows");
        }
        let pairs = self
            .points
            .iter()
            .copied()
            .zip(self.impulses.iter().copied())
            .chain(other.points.iter().copied().zip(other.impulses.iter().copied()))
            .collect();
        let mut merged =
            Self::from_points(self.window, self.intensity + other.intensity, pairs, self.seed)?;
        merged.rejected_draws = self.rejected_draws + other.rejected_draws;
        Ok(merged)
    }

    /// Restriction to a sub-window.
    pub fn restrict(&self, window: Window) -> PointConfiguration {
        let r = self.range_in(window.lo, window.hi);
        PointConfiguration {
            window,
            points: self.points[r.clone()].to_vec(),
            impulses: self.impulses[r].to_vec(),
            intensity: self.intensity,
            seed: self.seed,
            rejected_draws: self.rejected_draws,
        }
    }
}

fn check_intensity(intensity: f64) -> Result<()> {
    if !(intensity >= 0.0 && intensity.is_finite()) {
        return param(format!("intensity must be finite and >= 0, got {intensity}"));
    }
    Ok(())
}

fn draw_count<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let n: f64 = Poisson::new(mean).expect("positive Poisson mean").sample(rng);
    n as usize
}

fn draw_points<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    window: &Window,
    impulses: &ImpulseSpec,
) -> (Vec<f64>, Vec<f64>) {
    let mut points: Vec<f64> = (0..count)
        .map(|_| window.lo + window.length() * rng.random::<f64>())
        .collect();
    points.sort_by(f64::total_cmp);
    let marks = (0..count).map(|_| impulses.sample(rng)).collect();
    (points, marks)
}

/// Samples a Poisson configuration of intensity `intensity` on `window`
/// from the generator of `seed`.
pub fn sample_ppp(
    intensity: f64,
    window: Window,
    impulses: &ImpulseSpec,
    seed: SeedInfo,
) -> Result<PointConfiguration> {
    let mut rng = seed.rng();
    sample_ppp_with(&mut rng, intensity, window, impulses, seed)
}

/// As [`sample_ppp`] but drawing from a caller-supplied generator.
pub fn sample_ppp_with<R: Rng + ?Sized>(
    rng: &mut R,
    intensity: f64,
    window: Window,
    impulses: &ImpulseSpec,
    seed: SeedInfo,
) -> Result<PointConfiguration> {
    check_intensity(intensity)?;
    Window::new(window.lo, window.hi)?;
    impulses.validate()?;
    let count = draw_count(rng, intensity * window.length());
    let (points, impulses) = draw_points(rng, count, &window, impulses);
    Ok(PointConfiguration {
        window,
        points,
        impulses,
        intensity,
        seed,
        rejected_draws: 0,
    })
}

/// Samples conditionally on at least `min_count` points in the window, by rejection.
pub fn sample_conditional(
    intensity: f64,
    window: Window,
    min_count: usize,
    impulses: &ImpulseSpec,
    seed: SeedInfo,
) -> Result<PointConfiguration> {
    let mut rng = seed.rng();
    sample_conditional_with(&mut rng, intensity, window, min_count, impulses, seed)
}

pub fn sample_conditional_with<R: Rng + ?Sized>(
    rng: &mut R,
    intensity: f64,
    window: Window,
    min_count: usize,
    impulses: &ImpulseSpec,
    seed: SeedInfo,
) -> Result<PointConfiguration> {
    check_intensity(intensity)?;
    Window::new(window.lo, window.hi)?;
    impulses.validate()?;
    let mean = intensity * window.length();
    let acceptance = poisson_upper_tail(mean, min_count);
    if acceptance < MIN_ACCEPTANCE {
        return Err(Error::Infeasible {
            probability: acceptance,
            floor: MIN_ACCEPTANCE,
        });
    }
    let mut rejected = 0u64;
    let count = loop {
        let n = draw_count(rng, mean);
        if n >= min_count {
            break n;
        }
        rejected += 1;
    };
    let (points, impulses) = draw_points(rng, count, &window, impulses);
    Ok(PointConfiguration {
        window,
        points,
        impulses,
        intensity,
        seed,
        rejected_draws: rejected,
    })
}

/// `P(N >= k)` for `N ~ Poisson(mean)`.
pub fn poisson_upper_tail(mean: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if mean <= 0.0 {
        return 0.0;
    }
    let log_pmf = |j: usize| -> f64 { j as f64 * mean.ln() - mean - ln_factorial(j) };
    if (k as f64) > mean {
        // sum the upper tail directly; terms decrease geometrically past the mode
        let mut total = 0.0;
        let mut j = k;
        loop {
            let term = log_pmf(j).exp();
            total += term;
            if term < 1e-18 * total.max(f64::MIN_POSITIVE) || j > k + 100_000 {
                break;
            }
            j += 1;
        }
        total.min(1.0)
    } else {
        let lower: f64 = (0..k).map(|j| log_pmf(j).exp()).sum();
        (1.0 - lower).max(0.0)
    }
}

fn ln_factorial(n: usize) -> f64 {
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_is_empty() {
        let w = Window::new(-5.0, 5.0).unwrap();
        let c = sample_ppp(0.0, w, &ImpulseSpec::DeterministicOne, SeedInfo::new(1, 0)).unwrap();
        assert!(c.is_empty());
        assert!(c.impulses.is_empty());
    }

    #[test]
    fn parameter_errors() {
        let w = Window { lo: 1.0, hi: 0.0 };
        assert!(matches!(
            sample_ppp(1.0, w, &ImpulseSpec::DeterministicOne, SeedInfo::new(1, 0)),
            Err(Error::Parameter(_))
        ));
        let w = Window::new(0.0, 1.0).unwrap();
        assert!(matches!(
            sample_ppp(-1.0, w, &ImpulseSpec::DeterministicOne, SeedInfo::new(1, 0)),
            Err(Error::Parameter(_))
        ));
        assert!(Window::new(2.0, 1.0).is_err());
    }

    #[test]
    fn unit_marks_are_exactly_one() {
        let w = Window::new(0.0, 1.0).unwrap();
        for r in 0..50 {
            let c = sample_ppp(1.0, w, &ImpulseSpec::DeterministicOne, SeedInfo::new(3, r)).unwrap();
            assert!(c.impulses.iter().all(|&b| b == 1.0));
        }
    }

    #[test]
    fn points_sorted_and_inside() {
        let w = Window::new(-3.0, 7.0).unwrap();
        let spec = ImpulseSpec::Normal { mean: 0.0, sd: 2.0 };
        let c = sample_ppp(4.0, w, &spec, SeedInfo::new(9, 2)).unwrap();
        assert!(c.points.windows(2).all(|p| p[0] <= p[1]));
        assert!(c.points.iter().all(|&t| w.contains(t)));
        assert_eq!(c.points.len(), c.impulses.len());
    }

    #[test]
    fn infeasible_conditioning_is_reported() {
        let w = Window::new(-1.0, 1.0).unwrap();
        let err = sample_conditional(0.1, w, 40, &ImpulseSpec::DeterministicOne, SeedInfo::new(1, 0))
            .unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn poisson_tail_values() {
        assert_eq!(poisson_upper_tail(3.0, 0), 1.0);
        // P(Poisson(2) >= 3) = 1 - 5 e^{-2}
        assert!((poisson_upper_tail(2.0, 3) - (1.0 - 5.0 * (-2.0f64).exp())).abs() < 1e-14);
        // P(Poisson(20) >= 20)
        assert!((poisson_upper_tail(20.0, 20) - 0.529_743_4).abs() < 1e-6);
    }

    #[test]
    fn merge_requires_same_window() {
        let a = PointConfiguration::unit_points(Window::new(0.0, 1.0).unwrap(), 1.0, &[0.5]).unwrap();
        let b = PointConfiguration::unit_points(Window::new(0.0, 2.0).unwrap(), 1.0, &[0.5]).unwrap();
        assert!(a.merge(&b).is_err());
        let c = PointConfiguration::unit_points(Window::new(0.0, 1.0).unwrap(), 2.0, &[0.2, 0.9]).unwrap();
        let m = a.merge(&c).unwrap();
        assert_eq!(m.points, vec![0.2, 0.5, 0.9]);
        assert_eq!(m.intensity, 3.0);
    }
}
