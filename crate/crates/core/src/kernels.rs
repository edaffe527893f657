//! Smooth response kernels: derivatives to order 4, tail descriptors,
//! moment functionals and the stationary-phase parameters of a kernel.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::quad::{self, Estimate, QuadConfig};
use crate::roots;

/// Highest derivative order any kernel exposes.
pub const MAX_ORDER: usize = 4;

/// Tail regime of `|g|`, used for small-ball lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailRegime {
    /// `|g(s)| <= exp(-|s|^alpha)` eventually, `alpha > 1`.
    SuperExponential { alpha: f64 },
    /// `|g(s)| <= exp(-|s|)` eventually.
    Exponential,
}

/// A kernel `g` with analytic derivatives.
pub trait Kernel: Debug + Send + Sync {
    fn id(&self) -> String;

    /// Highest available derivative order.
    fn smoothness(&self) -> usize;

    /// Characteristic width, used for default grids and search steps.
    fn scale(&self) -> f64;

    /// `g^(order)(t)` without the capability check.
    fn derivative_unchecked(&self, order: usize, t: f64) -> f64;

    /// Fills `out[k] = g^(k)(t)` for `k < out.len()`.
    fn derivatives(&self, t: f64, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.derivative_unchecked(k, t);
        }
    }

    /// Upper bound on `∫_{|s|>radius} |g^(order)(s)| ds`.
    fn tail_l1(&self, _order: usize, _radius: f64) -> Option<f64> {
        None
    }

    /// Upper bound on `sup_{|s|>=radius} |g^(order)(s)|`.
    fn tail_sup(&self, _order: usize, _radius: f64) -> Option<f64> {
        None
    }

    /// Known zeros of `g^(order)`, used as quadrature breakpoints.
    fn zeros(&self, _order: usize) -> Vec<f64> {
        Vec::new()
    }

    /// Closed-form `∫ g`, when available.
    fn mass(&self) -> Option<f64> {
        None
    }

    fn tail_regime(&self) -> Option<TailRegime> {
        None
    }

    /// Width `σ` if this is the Gaussian kernel `g_σ`.
    fn gaussian_sigma(&self) -> Option<f64> {
        None
    }

    fn compact_support(&self) -> bool {
        false
    }

    /// Distance beyond which every derivative evaluates to exactly zero in
    /// floating point.
    fn vanishing_radius(&self) -> f64 {
        f64::INFINITY
    }
}

pub type KernelRef = Arc<dyn Kernel>;

/// Probabilists' Hermite polynomial `H_k(x)` by the three-term recurrence.
pub fn hermite(k: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    if k == 0 {
        return h0;
    }
    for j in 1..k {
        let h2 = x * h1 - j as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

// Nonnegative roots of H_1..H_5.
fn hermite_positive_roots(k: usize) -> Vec<f64> {
    match k {
        1 => vec![0.0],
        2 => vec![1.0],
        3 => vec![0.0, 3f64.sqrt()],
        4 => vec![(3.0 - 6f64.sqrt()).sqrt(), (3.0 + 6f64.sqrt()).sqrt()],
        5 => vec![0.0, (5.0 - 10f64.sqrt()).sqrt(), (5.0 + 10f64.sqrt()).sqrt()],
        _ => vec![],
    }
}

/// Gaussian kernel `g_σ(t) = exp(-t²/2σ²) / (σ√(2π))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    pub sigma: f64,
}

impl GaussianKernel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return param(format!("gaussian width must be > 0, got {sigma}"));
        }
        Ok(Self { sigma })
    }

    pub fn arc(sigma: f64) -> Result<KernelRef> {
        Ok(Arc::new(Self::new(sigma)?))
    }

    fn envelope(&self, t: f64) -> f64 {
        let x = t / self.sigma;
        (-0.5 * x * x).exp() / (self.sigma * (2.0 * PI).sqrt())
    }
}

impl Kernel for GaussianKernel {
    fn id(&self) -> String {
        format!("gaussian:sigma={}", self.sigma)
    }

    fn smoothness(&self) -> usize {
        MAX_ORDER
    }

    fn scale(&self) -> f64 {
        self.sigma
    }

    fn vanishing_radius(&self) -> f64 {
        // exp(−x²/2) underflows to zero past x ≈ 38.6
        39.0 * self.sigma
    }

    fn derivative_unchecked(&self, order: usize, t: f64) -> f64 {
        let x = t / self.sigma;
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        self.envelope(t) * sign * hermite(order, x) / self.sigma.powi(order as i32)
    }

    fn derivatives(&self, t: f64, out: &mut [f64]) {
        let s = self.sigma;
        let x = t / s;
        let e = self.envelope(t);
        let x2 = x * x;
        for (k, o) in out.iter_mut().enumerate() {
            *o = match k {
                0 => e,
                1 => -e * x / s,
                2 => e * (x2 - 1.0) / (s * s),
                3 => -e * x * (x2 - 3.0) / (s * s * s),
                4 => e * (x2 * x2 - 6.0 * x2 + 3.0) / (s * s * s * s),
                _ => self.derivative_unchecked(k, t),
            };
        }
    }

    fn tail_l1(&self, order: usize, radius: f64) -> Option<f64> {
        if order > MAX_ORDER {
            return None;
        }
        let r = radius.max(0.0);
        if order == 0 {
            return Some(statrs::function::erf::erfc(r / (self.sigma * SQRT_2)));
        }
        // Between consecutive zeros of g^(k) the integral of |g^(k)| is the
        // increment of |g^(k-1)|.
        let mut cuts: Vec<f64> = hermite_positive_roots(order)
            .into_iter()
            .map(|x| x * self.sigma)
            .filter(|&z| z > r)
            .collect();
        cuts.insert(0, r);
        let prev = |t: f64| self.derivative_unchecked(order - 1, t);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += (prev(w[1]) - prev(w[0])).abs();
        }
        total += prev(*cuts.last().unwrap()).abs();
        Some(2.0 * total)
    }

    fn tail_sup(&self, order: usize, radius: f64) -> Option<f64> {
        if order > MAX_ORDER {
            return None;
        }
        let r = radius.max(0.0);
        let mut best = self.derivative_unchecked(order, r).abs();
        for x in hermite_positive_roots(order + 1) {
            let z = x * self.sigma;
            if z > r {
                best = best.max(self.derivative_unchecked(order, z).abs());
            }
        }
        Some(best)
    }

    fn zeros(&self, order: usize) -> Vec<f64> {
        let mut z: Vec<f64> = hermite_positive_roots(order)
            .into_iter()
            .flat_map(|x| {
                let t = x * self.sigma;
                if t == 0.0 {
                    vec![0.0]
                } else {
                    vec![-t, t]
                }
            })
            .collect();
        z.sort_by(f64::total_cmp);
        z
    }

    fn mass(&self) -> Option<f64> {
        Some(1.0)
    }

    fn tail_regime(&self) -> Option<TailRegime> {
        Some(TailRegime::SuperExponential { alpha: 2.0 })
    }

    fn gaussian_sigma(&self) -> Option<f64> {
        Some(self.sigma)
    }
}

/// Hyperbolic-secant kernel `g(t) = sech(t/w) / (π w)`, unit mass with
/// exponential tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SechKernel {
    pub width: f64,
}

// sup over t in [0, 1] of the tanh-polynomial factor of sech^(k)
const SECH_POLY_BOUND: [f64; 5] = [1.0, 1.0, 1.0, 2.0, 5.0];

impl SechKernel {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return param(format!("sech width must be > 0, got {width}"));
        }
        Ok(Self { width })
    }

    fn unit_derivative(order: usize, x: f64) -> f64 {
        let y = 1.0 / x.cosh();
        let t = x.tanh();
        let t2 = t * t;
        match order {
            0 => y,
            1 => -y * t,
            2 => y * (2.0 * t2 - 1.0),
            3 => y * t * (5.0 - 6.0 * t2),
            4 => y * (5.0 - 28.0 * t2 + 24.0 * t2 * t2),
            _ => f64::NAN,
        }
    }
}

impl Kernel for SechKernel {
    fn id(&self) -> String {
        format!("sech:w={}", self.width)
    }

    fn smoothness(&self) -> usize {
        MAX_ORDER
    }

    fn scale(&self) -> f64 {
        self.width
    }

    fn derivative_unchecked(&self, order: usize, t: f64) -> f64 {
        let w = self.width;
        Self::unit_derivative(order, t / w) / (PI * w.powi(order as i32 + 1))
    }

    fn tail_l1(&self, order: usize, radius: f64) -> Option<f64> {
        let c = *SECH_POLY_BOUND.get(order)?;
        let w = self.width;
        Some(4.0 * c * (-radius.max(0.0) / w).exp() / (PI * w.powi(order as i32)))
    }

    fn tail_sup(&self, order: usize, radius: f64) -> Option<f64> {
        let c = *SECH_POLY_BOUND.get(order)?;
        let w = self.width;
        Some(2.0 * c * (-radius.max(0.0) / w).exp() / (PI * w.powi(order as i32 + 1)))
    }

    fn zeros(&self, order: usize) -> Vec<f64> {
        let at = |t2: f64| t2.sqrt().atanh() * self.width;
        let pos: Vec<f64> = match order {
            1 => vec![0.0],
            2 => vec![at(0.5)],
            3 => vec![0.0, at(5.0 / 6.0)],
            4 => {
                let d = (28.0f64 * 28.0 - 4.0 * 24.0 * 5.0).sqrt();
                vec![at((28.0 - d) / 48.0), at((28.0 + d) / 48.0)]
            }
            _ => vec![],
        };
        let mut z: Vec<f64> = pos
            .into_iter()
            .flat_map(|t| if t == 0.0 { vec![0.0] } else { vec![-t, t] })
            .collect();
        z.sort_by(f64::total_cmp);
        z
    }

    fn mass(&self) -> Option<f64> {
        Some(1.0)
    }

    fn tail_regime(&self) -> Option<TailRegime> {
        // sech(x) <= 2 e^{-|x|}, so |g| <= e^{-|s|} eventually iff w <= 1
        (self.width <= 1.0).then_some(TailRegime::Exponential)
    }
}

/// Parses a kernel selection string such as `gaussian:sigma=1.5`,
/// `gaussian:σ=1` or `sech:w=0.5`.
pub fn parse_kernel(spec: &str) -> Result<KernelRef> {
    let spec = spec.trim();
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    let mut params = BTreeMap::new();
    for kv in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parameter(format!("kernel argument `{kv}` is not key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("kernel argument `{kv}` is not numeric")))?;
        params.insert(k.trim().to_string(), v);
    }
    let get = |keys: &[&str], default: Option<f64>| -> Result<f64> {
        keys.iter()
            .find_map(|k| params.get(*k).copied())
            .or(default)
            .ok_or_else(|| Error::Parameter(format!("kernel `{name}` needs `{}`", keys[0])))
    };
    match name.to_ascii_lowercase().as_str() {
        "gaussian" | "gauss" => GaussianKernel::arc(get(&["sigma", "σ", "s"], Some(1.0))?),
        "sech" => Ok(Arc::new(SechKernel::new(get(&["w", "width"], Some(1.0))?)?)),
        other => Err(Error::Parameter(format!("unknown kernel `{other}`"))),
    }
}

/// `g^(order)(t)`, checking the kernel supports that order.
pub fn eval_derivative(kernel: &dyn Kernel, order: usize, t: f64) -> Result<f64> {
    if order > kernel.smoothness() {
        return Err(Error::Capability(format!(
            "kernel {} provides derivatives up to order {}, requested {order}",
            kernel.id(),
            kernel.smoothness()
        )));
    }
    Ok(kernel.derivative_unchecked(order, t))
}

/// Smallest radius (on a grid of step `scale/64`) at which every listed
/// order has tail mass at most `tol`.
pub fn support_radius(kernel: &dyn Kernel, orders: &[usize], tol: f64) -> Result<f64> {
    let step = kernel.scale() / 64.0;
    let mut r = 0.0;
    for _ in 0..(64 * 10_000) {
        let mut ok = true;
        for &k in orders {
            let tail = kernel
                .tail_l1(k, r)
                .ok_or_else(|| Error::Capability(format!("kernel {} has no tail descriptor", kernel.id())))?;
            if tail > tol {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(r);
        }
        r += step;
    }
    Err(Error::Integrability(format!(
        "tail of {} does not fall below {tol:e}",
        kernel.id()
    )))
}

/// Smallest grid-searched radius `T` with `λ ∫_{|s|>T} |g^(k)| <= ε`.
pub fn truncation_radius(kernel: &dyn Kernel, order: usize, intensity: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return param("truncation tolerance must be > 0");
    }
    if intensity <= 0.0 {
        return Ok(0.0);
    }
    support_radius(kernel, &[order], eps / intensity)
}

fn quad_breaks(kernel: &dyn Kernel, orders: &[usize], radius: f64) -> Vec<f64> {
    let mut b = vec![-radius, radius];
    for &k in orders {
        b.extend(kernel.zeros(k).into_iter().filter(|z| z.abs() < radius));
    }
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// One entry of a moment table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub value: f64,
    pub error: f64,
}

/// `m_kl = ∫ |g|^k |g'|^l` plus `m₄ = ∫ g''²`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MomentTable {
    pub entries: BTreeMap<(u32, u32), Moment>,
    pub m4: Option<Moment>,
}

impl MomentTable {
    pub fn get(&self, k: u32, l: u32) -> Option<f64> {
        self.entries.get(&(k, l)).map(|m| m.value)
    }

    fn require(&self, k: u32, l: u32) -> f64 {
        self.get(k, l)
            .unwrap_or_else(|| panic!("moment m_{k}{l} missing from table"))
    }

    /// `∫ g²`.
    pub fn m0(&self) -> f64 {
        self.require(2, 0)
    }

    /// `∫ g'²`.
    pub fn m2(&self) -> f64 {
        self.require(0, 2)
    }

    pub fn max_error(&self) -> f64 {
        self.entries
            .values()
            .map(|m| m.error)
            .chain(self.m4.map(|m| m.error))
            .fold(0.0, f64::max)
    }
}

const MOMENT_TOL: f64 = 1e-9;

fn moment_integral(
    kernel: &dyn Kernel,
    orders: &[usize],
    exps: &[u32],
) -> Result<Moment> {
    // tail bound: sup^(total-1) times the L1 tail of one factor
    let radius = support_radius(kernel, orders, 1e-13)?.max(kernel.scale());
    let total: u32 = exps.iter().sum();
    let mut tail = 0.0;
    if let Some((i, _)) = exps.iter().enumerate().find(|(_, &e)| e > 0) {
        let sup = orders
            .iter()
            .map(|&k| kernel.tail_sup(k, radius).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        let l1 = kernel.tail_l1(orders[i], radius).unwrap_or(f64::INFINITY);
        tail = sup.powi(total as i32 - 1) * l1;
    }
    if !tail.is_finite() {
        return Err(Error::Integrability(format!(
            "kernel {} lacks tail bounds for the requested moment",
            kernel.id()
        )));
    }
    let breaks = quad_breaks(kernel, orders, radius);
    let mut buf = [0.0; MAX_ORDER + 1];
    let top = *orders.iter().max().unwrap();
    let est = quad::adaptive_breaks(
        |s| {
            kernel.derivatives(s, &mut buf[..=top]);
            orders
                .iter()
                .zip(exps)
                .map(|(&k, &e)| buf[k].abs().powi(e as i32))
                .product::<f64>()
        },
        &breaks,
        &QuadConfig::with_abs_tol(1e-12),
    )?;
    let error = est.error + tail;
    if error > MOMENT_TOL {
        return Err(Error::Accuracy {
            requested: MOMENT_TOL,
            achieved: error,
        });
    }
    Ok(Moment {
        value: est.value,
        error,
    })
}

/// Moment table for the requested `(k, l)` pairs; `m₀`, `m₂` and `m₄` are
/// always included.
pub fn moments(kernel: &dyn Kernel, pairs: &[(u32, u32)]) -> Result<MomentTable> {
    if kernel.compact_support() {
        return Err(Error::Capability("moment tables need a decaying kernel".into()));
    }
    let mut table = MomentTable::default();
    let mut all: Vec<(u32, u32)> = vec![(2, 0), (0, 2)];
    all.extend_from_slice(pairs);
    for (k, l) in all {
        if k + l == 0 {
            return param("moment m_00 is not integrable");
        }
        if table.entries.contains_key(&(k, l)) {
            continue;
        }
        let m = moment_integral(kernel, &[0, 1], &[k, l])?;
        table.entries.insert((k, l), m);
    }
    if kernel.smoothness() >= 2 {
        table.m4 = Some(moment_integral(kernel, &[2], &[2])?);
    }
    Ok(table)
}

/// Covariance of the limit process at lag τ: `∫ g(τ - s) g(-s) ds`.
pub fn covariance(kernel: &dyn Kernel, lag: f64) -> Result<Estimate<f64>> {
    let radius = support_radius(kernel, &[0], 1e-14)?.max(kernel.scale());
    let lo = -radius - lag.abs();
    let hi = radius + lag.abs();
    let breaks: Vec<f64> = {
        let mut b = vec![lo, -lag, 0.0, hi];
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    };
    let mut est = quad::adaptive_breaks(
        |x| kernel.derivative_unchecked(0, lag + x) * kernel.derivative_unchecked(0, x),
        &breaks,
        &QuadConfig::with_abs_tol(1e-13),
    )?;
    est.error += 2.0 * kernel.tail_sup(0, radius).unwrap_or(0.0) * 1e-14;
    Ok(est)
}

/// L¹ norm of `g^(order)`.
pub fn l1_norm(kernel: &dyn Kernel, order: usize) -> Result<f64> {
    if let Some(t) = kernel.tail_l1(order, 0.0) {
        if kernel.gaussian_sigma().is_some() {
            return Ok(t);
        }
    }
    let radius = support_radius(kernel, &[order], 1e-13)?;
    let breaks = quad_breaks(kernel, &[order], radius);
    Ok(quad::adaptive_breaks(
        |s| kernel.derivative_unchecked(order, s).abs(),
        &breaks,
        &QuadConfig::with_abs_tol(1e-12),
    )?
    .value)
}

/// `∫ g`, closed form when the kernel provides it.
pub fn mass(kernel: &dyn Kernel) -> Result<f64> {
    if let Some(m) = kernel.mass() {
        return Ok(m);
    }
    let radius = support_radius(kernel, &[0], 1e-13)?;
    Ok(quad::adaptive(
        |s| kernel.derivative_unchecked(0, s),
        -radius,
        radius,
        &QuadConfig::with_abs_tol(1e-12),
    )?
    .value)
}

/// Which oscillatory integral the phase parameters describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseMode {
    /// Phase `g`: `∫ e^{iu g(s)} ds`.
    Level1d,
    /// Phases `(g, g')`: `∫ e^{i(u g(s) + v g'(s))} ds`.
    Joint2d,
}

/// Lower bound `m` and zero count `n₀` entering the stationary-phase bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub m: f64,
    pub n0: usize,
    pub argmin: f64,
    pub zeros: Vec<f64>,
}

/// Scan resolution for phase parameters.
pub const PHASE_SCAN_CELLS: usize = 4096;
const DEGENERACY_FLOOR: f64 = 1e-12;

fn smallest_singular_value_sym(a: f64, b: f64, c: f64) -> f64 {
    // eigenvalues of [[a, b], [b, c]]
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mean - rad).abs().min((mean + rad).abs())
}

pub fn phase_params(kernel: &dyn Kernel, a: f64, b: f64, mode: PhaseMode) -> Result<PhaseParams> {
    if b < a {
        return param("phase interval is inverted");
    }
    let need = match mode {
        PhaseMode::Level1d => 2,
        PhaseMode::Joint2d => 4,
    };
    if kernel.smoothness() < need {
        return Err(Error::Capability(format!(
            "phase parameters need derivatives up to order {need}"
        )));
    }
    let mut buf = [0.0; MAX_ORDER + 1];
    let mut lower = |s: f64| -> f64 {
        kernel.derivatives(s, &mut buf);
        match mode {
            PhaseMode::Level1d => buf[1].hypot(buf[2]),
            PhaseMode::Joint2d => smallest_singular_value_sym(buf[1], buf[2], buf[3]),
        }
    };
    let cells = if b > a { PHASE_SCAN_CELLS } else { 0 };
    let h = if cells > 0 { (b - a) / cells as f64 } else { 0.0 };
    let (mut m, mut argmin) = (f64::INFINITY, a);
    for i in 0..=cells {
        let s = if i == cells { b } else { a + h * i as f64 };
        let v = lower(s);
        if v < m {
            m = v;
            argmin = s;
        }
    }
    if m < DEGENERACY_FLOOR {
        return Err(Error::Degenerate { minimum: m, at: argmin });
    }
    let mut buf2 = [0.0; MAX_ORDER + 1];
    let target = |s: f64| -> f64 {
        kernel.derivatives(s, &mut buf2);
        match mode {
            PhaseMode::Level1d => buf2[2],
            PhaseMode::Joint2d => buf2[2] * buf2[4] - buf2[3] * buf2[3],
        }
    };
    let zeros = roots::scan_zeros(target, a, b, PHASE_SCAN_CELLS, 1e-12, DEGENERACY_FLOOR);
    Ok(PhaseParams {
        m,
        n0: zeros.len(),
        argmin,
        zeros,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1() -> GaussianKernel {
        GaussianKernel::new(1.0).unwrap()
    }

    #[test]
    fn gaussian_point_values() {
        let k = g1();
        assert_eq!(eval_derivative(&k, 1, 0.0).unwrap(), 0.0);
        let inv = 1.0 / (2.0 * PI).sqrt();
        assert!((eval_derivative(&k, 0, 0.0).unwrap() - inv).abs() < 1e-16);
        assert!((eval_derivative(&k, 2, 0.0).unwrap() + inv).abs() < 1e-16);
    }

    #[test]
    fn unsupported_order_is_capability_error() {
        assert!(matches!(eval_derivative(&g1(), 5, 0.0), Err(Error::Capability(_))));
    }

    #[test]
    fn batch_derivatives_match_single() {
        for k in [GaussianKernel::new(0.7).unwrap()] {
            let mut out = [0.0; 5];
            for &t in &[-2.1, -0.3, 0.0, 0.8, 3.3] {
                k.derivatives(t, &mut out);
                for (o, v) in out.iter().enumerate() {
                    let single = k.derivative_unchecked(o, t);
                    assert!((v - single).abs() <= 1e-14 * single.abs().max(1e-300), "order {o}");
                }
            }
        }
    }

    #[test]
    fn hermite_recurrence_holds() {
        for i in 0..=40 {
            let x = -4.0 + 0.2 * i as f64;
            for k in 1..4 {
                let lhs = hermite(k + 1, x);
                let rhs = x * hermite(k, x) - k as f64 * hermite(k - 1, x);
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            }
            assert!((hermite(2, x) - (x * x - 1.0)).abs() < 1e-12);
            assert!((hermite(4, x) - (x.powi(4) - 6.0 * x * x + 3.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let kernels: Vec<KernelRef> = vec![GaussianKernel::arc(1.3).unwrap(), Arc::new(SechKernel::new(0.6).unwrap())];
        for k in kernels {
            for order in 1..=4 {
                let err_at = |h: f64| {
                    let mut err: f64 = 0.0;
                    for i in 0..=30 {
                        let t = -3.0 + 0.2 * i as f64;
                        let fd = (k.derivative_unchecked(order - 1, t + h)
                            - k.derivative_unchecked(order - 1, t - h))
                            / (2.0 * h);
                        err = err.max((fd - k.derivative_unchecked(order, t)).abs());
                    }
                    err
                };
                let ratio = err_at(1e-2) / err_at(5e-3);
                assert!((ratio - 4.0).abs() < 0.2, "{} order {order}: ratio {ratio}", k.id());
            }
        }
    }

    #[test]
    fn gaussian_has_unit_mass() {
        let k = g1();
        let est = quad::adaptive(|s| k.derivative_unchecked(0, s), -12.0, 12.0, &QuadConfig::with_abs_tol(1e-13)).unwrap();
        assert!((est.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sech_has_unit_mass() {
        let k = SechKernel::new(0.5).unwrap();
        let r = support_radius(&k, &[0], 1e-14).unwrap();
        let est = quad::adaptive(|s| k.derivative_unchecked(0, s), -r, r, &QuadConfig::with_abs_tol(1e-13)).unwrap();
        assert!((est.value - 1.0).abs() < 1e-10);
        assert!(k.zeros(2).iter().all(|&z| k.derivative_unchecked(2, z).abs() < 1e-12));
        assert!(k.zeros(4).iter().all(|&z| k.derivative_unchecked(4, z).abs() < 1e-11));
    }

    #[test]
    fn gaussian_tail_l1_matches_quadrature() {
        let k = GaussianKernel::new(0.8).unwrap();
        for order in 0..=4 {
            for &r in &[0.0, 0.5, 1.7, 3.0] {
                let est = quad::adaptive_breaks(
                    |s| k.derivative_unchecked(order, s).abs(),
                    &{
                        let mut b: Vec<f64> = vec![r, 20.0];
                        b.extend(k.zeros(order).into_iter().filter(|&z| z > r));
                        b.sort_by(f64::total_cmp);
                        b
                    },
                    &QuadConfig::with_abs_tol(1e-13),
                )
                .unwrap();
                let tail = k.tail_l1(order, r).unwrap();
                assert!((tail - 2.0 * est.value).abs() < 1e-10, "order {order} r {r}");
            }
        }
    }

    #[test]
    fn truncation_radius_gaussian() {
        let k = g1();
        let t = truncation_radius(&k, 0, 1.0, 1e-8).unwrap();
        assert!(k.tail_l1(0, t).unwrap() <= 1e-8);
        assert!(k.tail_l1(0, t - 1.0 / 64.0).unwrap() > 1e-8);
        assert!((t - 6.0).abs() < 0.5, "{t}");
        // tolerance above the total mass
        assert_eq!(truncation_radius(&k, 0, 1.0, 2.0).unwrap(), 0.0);
        let mut last = f64::INFINITY;
        for eps in [1e-12, 1e-9, 1e-6, 1e-3] {
            let r = truncation_radius(&k, 2, 3.0, eps).unwrap();
            assert!(r <= last);
            last = r;
        }
    }

    #[test]
    fn gaussian_moments_closed_form() {
        let t = moments(&g1(), &[]).unwrap();
        let sp = PI.sqrt();
        assert!((t.m0() - 1.0 / (2.0 * sp)).abs() < 1e-10);
        assert!((t.m2() - 1.0 / (4.0 * sp)).abs() < 1e-10);
        assert!((t.m4.unwrap().value - 3.0 / (8.0 * sp)).abs() < 1e-10);
        let ratio = (t.m4.unwrap().value / t.m2()).sqrt() / PI;
        assert!((ratio - 1.5f64.sqrt() / PI).abs() < 1e-9);
        assert!(t.max_error() <= 1e-9);
    }

    #[test]
    fn gaussian_moment_scaling() {
        let base = moments(&g1(), &[]).unwrap();
        for sigma in [0.3, 2.5] {
            let t = moments(&GaussianKernel::new(sigma).unwrap(), &[]).unwrap();
            let rel = |a: f64, b: f64| ((a - b) / b).abs();
            assert!(rel(t.m0(), base.m0() / sigma) < 1e-8);
            assert!(rel(t.m2(), base.m2() / sigma.powi(3)) < 1e-8);
            assert!(rel(t.m4.unwrap().value, base.m4.unwrap().value / sigma.powi(5)) < 1e-8);
        }
    }

    #[test]
    fn covariance_is_gaussian_convolution() {
        let k = g1();
        let m0 = moments(&k, &[]).unwrap().m0();
        assert!((covariance(&k, 0.0).unwrap().value - m0).abs() < 1e-12);
        let wide = GaussianKernel::new(SQRT_2).unwrap();
        for &tau in &[0.25, 0.5, 1.0, 2.0, 3.5] {
            let c = covariance(&k, tau).unwrap().value;
            assert!((c - wide.derivative_unchecked(0, tau)).abs() < 1e-12);
            assert!((c - covariance(&k, -tau).unwrap().value).abs() < 1e-14);
        }
    }

    #[test]
    fn phase_params_gaussian() {
        let k = g1();
        let p = phase_params(&k, -1.0, 2.0, PhaseMode::Level1d).unwrap();
        assert_eq!(p.n0, 2);
        assert!((p.zeros[0] + 1.0).abs() < 1e-9 && (p.zeros[1] - 1.0).abs() < 1e-9);
        assert!((p.m - 0.194_667_198).abs() < 1e-6, "{}", p.m);
        let p2 = phase_params(&k, -1.0, 2.0, PhaseMode::Joint2d).unwrap();
        assert_eq!(p2.n0, 0);
        assert!((p2.m - 0.053_990_966).abs() < 1e-6, "{}", p2.m);
        let p0 = phase_params(&k, 0.5, 0.5, PhaseMode::Level1d).unwrap();
        let expect = k.derivative_unchecked(1, 0.5).hypot(k.derivative_unchecked(2, 0.5));
        assert_eq!(p0.m, expect);
        assert!(p0.n0 <= 1);
    }

    #[test]
    fn det_phi_negative_for_gaussian() {
        let k = g1();
        for i in 0..=100 {
            let s = -5.0 + 0.1 * i as f64;
            let d = |o| k.derivative_unchecked(o, s);
            let det = d(1) * d(3) - d(2) * d(2);
            let closed = -(s * s + 1.0) * (-s * s).exp() / (2.0 * PI);
            assert!((det - closed).abs() < 1e-14);
            assert!(det < 0.0);
        }
    }

    #[test]
    fn degenerate_phase_is_reported() {
        // far tail: sqrt(g'^2 + g''^2) underflows
        let err = phase_params(&g1(), 40.0, 41.0, PhaseMode::Level1d).unwrap_err();
        assert!(matches!(err, Error::Degenerate { .. }));
    }

    #[test]
    fn kernel_strings() {
        assert_eq!(parse_kernel("gaussian:σ=2").unwrap().scale(), 2.0);
        assert_eq!(parse_kernel("gaussian:sigma=0.5").unwrap().scale(), 0.5);
        assert_eq!(parse_kernel("sech:w=0.25").unwrap().scale(), 0.25);
        assert!(parse_kernel("cauchy:s=1").is_err());
        assert!(parse_kernel("gaussian:sigma=-1").is_err());
        assert!(parse_kernel("gaussian:sigma").is_err());
    }
}
