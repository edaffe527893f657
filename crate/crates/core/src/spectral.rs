//! Characteristic-function route to the mean crossings function: the joint
//! characteristic function of `(X(t), X′(t))`, the Fourier transform of the
//! crossings function, its numerical inversion, Gaussian-limit formulas,
//! the convergence bounds, and stationary-phase certification.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::kernels::{self, Kernel, KernelRef, MomentTable, PhaseMode, PhaseParams};
use crate::ppp::ImpulseSpec;
use crate::quad::{self, QuadConfig, QuadValue};
use crate::stats::Estimate;

/// Largest phase change allowed across one s-quadrature panel (radians).
const PHASE_PER_PANEL: f64 = 2.0;
const SUPPORT_BLOCKS: usize = 128;

#[derive(Debug, Clone, Copy)]
struct Block {
    lo: f64,
    hi: f64,
    sup_g1: f64,
    sup_g2: f64,
}

/// A pair of complex values integrated together.
#[derive(Debug, Clone, Copy)]
struct C2(Complex64, Complex64);

impl Add for C2 {
    type Output = C2;
    fn add(self, o: C2) -> C2 {
        C2(self.0 + o.0, self.1 + o.1)
    }
}

impl Sub for C2 {
    type Output = C2;
    fn sub(self, o: C2) -> C2 {
        C2(self.0 - o.0, self.1 - o.1)
    }
}

impl Mul<f64> for C2 {
    type Output = C2;
    fn mul(self, w: f64) -> C2 {
        C2(self.0 * w, self.1 * w)
    }
}

impl QuadValue for C2 {
    fn zero() -> Self {
        C2(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    }
    fn magnitude(&self) -> f64 {
        self.0.norm().max(self.1.norm())
    }
}

/// `e^{iφ} − 1 − iφ` without cancellation for small `φ`.
fn centered_exp(phi: f64) -> Complex64 {
    let half = (0.5 * phi).sin();
    let re = -2.0 * half * half;
    let im = if phi.abs() < 0.1 {
        let p2 = phi * phi;
        -phi * p2 / 6.0 * (1.0 - p2 / 20.0 * (1.0 - p2 / 42.0 * (1.0 - p2 / 72.0)))
    } else {
        phi.sin() - phi
    };
    Complex64::new(re, im)
}

/// A complex value with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEstimate {
    pub re: f64,
    pub im: f64,
    pub error: f64,
}

impl ComplexEstimate {
    pub fn new(value: Complex64, error: f64) -> Self {
        Self {
            re: value.re,
            im: value.im,
            error,
        }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Joint characteristic function `ψ(u, v) = E exp(i(uX(t) + vX′(t)))` of a
/// stationary shot noise, or of its normalization `Z_λ`.
#[derive(Debug, Clone)]
pub struct CharFn {
    kernel: KernelRef,
    pub intensity: f64,
    pub normalized: bool,
    /// `λE(β)∫g` (0 for the normalized process).
    pub mean: f64,
    scale: f64,
    marks: Vec<(f64, f64)>,
    abs_mark: f64,
    second_mark: f64,
    blocks: Vec<Block>,
    tail0: f64,
    tail1: f64,
    m0: f64,
    m2: f64,
}

impl CharFn {
    pub fn new(intensity: f64, kernel: KernelRef, impulses: &ImpulseSpec, normalized: bool) -> Result<Self> {
        if !(intensity > 0.0 && intensity.is_finite()) {
            return param("characteristic function needs λ > 0");
        }
        impulses.validate()?;
        if kernel.smoothness() < 2 {
            return Err(Error::Capability("characteristic function needs g″".into()));
        }
        let radius = kernels::support_radius(kernel.as_ref(), &[0, 1], 1e-15)?.max(kernel.scale());
        let tail0 = kernel.tail_l1(0, radius).unwrap_or(f64::INFINITY);
        let tail1 = kernel.tail_l1(1, radius).unwrap_or(f64::INFINITY);
        let h = 2.0 * radius / SUPPORT_BLOCKS as f64;
        let crit2 = kernel.zeros(2);
        let crit3 = kernel.zeros(3);
        let sup_on = |order: usize, crit: &[f64], lo: f64, hi: f64| -> f64 {
            crit.iter()
                .filter(|&&c| c > lo && c < hi)
                .chain([lo, hi].iter())
                .map(|&s| kernel.derivative_unchecked(order, s).abs())
                .fold(0.0, f64::max)
        };
        let blocks = (0..SUPPORT_BLOCKS)
            .map(|i| {
                let lo = -radius + h * i as f64;
                let hi = if i + 1 == SUPPORT_BLOCKS { radius } else { lo + h };
                Block {
                    lo,
                    hi,
                    sup_g1: sup_on(1, &crit2, lo, hi),
                    sup_g2: sup_on(2, &crit3, lo, hi),
                }
            })
            .collect();
        let marks = impulses.expectation_nodes();
        let abs_mark = marks.iter().map(|(z, w)| w * z.abs()).sum();
        let second_mark = impulses.second_moment();
        let mass = kernels::mass(kernel.as_ref())?;
        let table = kernels::moments(kernel.as_ref(), &[])?;
        Ok(Self {
            kernel,
            intensity,
            normalized,
            mean: if normalized { 0.0 } else { intensity * impulses.mean() * mass },
            scale: if normalized { 1.0 / intensity.sqrt() } else { 1.0 },
            marks,
            abs_mark,
            second_mark,
            blocks,
            tail0,
            tail1,
            m0: table.m0(),
            m2: table.m2(),
        })
    }

    pub fn kernel(&self) -> &KernelRef {
        &self.kernel
    }

    /// Standard deviation of `X′(t)` (or `Z′`).
    pub fn derivative_sd(&self) -> f64 {
        (self.intensity * self.second_mark * self.m2).sqrt() * self.scale
    }

    /// Standard deviation of `X(t)` (or `Z`).
    pub fn sd(&self) -> f64 {
        (self.intensity * self.second_mark * self.m0).sqrt() * self.scale
    }

    fn zmax(&self) -> f64 {
        self.marks.iter().map(|(z, _)| z.abs()).fold(0.0, f64::max)
    }

    fn panels(&self, b: &Block, u: f64, v: f64) -> usize {
        let rate = self.zmax() * (u.abs() * b.sup_g1 + v.abs() * b.sup_g2);
        (((b.hi - b.lo) * rate / PHASE_PER_PANEL).ceil() as usize).max(1)
    }

    /// Centered exponents `H(u, v)` and `H(u, −v)` in scaled arguments,
    /// with absolute error bounds.
    fn exponent_pair(&self, u: f64, v: f64) -> [(Complex64, f64); 2] {
        let (u, v) = (u * self.scale, v * self.scale);
        let mut total = C2::zero();
        let mut err = 0.0;
        let mut d = [0.0; 2];
        for b in &self.blocks {
            let est = quad::composite(
                |s| {
                    self.kernel.derivatives(s, &mut d);
                    let mut acc = C2::zero();
                    for &(z, w) in &self.marks {
                        let a = z * u * d[0];
                        let c = z * v * d[1];
                        acc = acc + C2(centered_exp(a + c), centered_exp(a - c)) * w;
                    }
                    acc
                },
                b.lo,
                b.hi,
                self.panels(b, u, v),
            );
            total = total + est.value;
            err += est.error;
        }
        let tail = 2.0 * self.abs_mark * (u.abs() * self.tail0 + v.abs() * self.tail1);
        let lam = self.intensity;
        let e = lam * (err + tail);
        [(total.0 * lam, e), (total.1 * lam, e)]
    }

    fn finish(&self, u: f64, h: Complex64, err: f64) -> ComplexEstimate {
        let value = (Complex64::new(0.0, u * self.mean) + h).exp();
        ComplexEstimate::new(value, value.norm() * err.exp_m1())
    }

    /// `ψ(u, v)`.
    pub fn eval(&self, u: f64, v: f64) -> ComplexEstimate {
        let [(h, e), _] = self.exponent_pair(u, v);
        self.finish(u, h, e)
    }

    /// `(ψ(u, v), ψ(u, −v))` from one quadrature pass.
    pub fn eval_pair(&self, u: f64, v: f64) -> (ComplexEstimate, ComplexEstimate) {
        let [(h1, e1), (h2, e2)] = self.exponent_pair(u, v);
        (self.finish(u, h1, e1), self.finish(u, h2, e2))
    }

    /// `∂²ψ/∂v²(u, 0) = ψ(u, 0)(H_v² + H_vv)`.
    pub fn second_derivative_v0(&self, u: f64) -> Complex64 {
        let uu = u * self.scale;
        let c = self.scale;
        let mut d = [0.0; 2];
        let mut hv = Complex64::new(0.0, 0.0);
        let mut hvv = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        for b in &self.blocks {
            let est = quad::composite(
                |s| {
                    self.kernel.derivatives(s, &mut d);
                    let mut acc = C2::zero();
                    for &(z, w) in &self.marks {
                        let e = Complex64::new(0.0, z * uu * d[0]).exp();
                        acc = acc + C2(i * z * d[1] * (e - 1.0), -e * (z * z * d[1] * d[1])) * w;
                    }
                    acc
                },
                b.lo,
                b.hi,
                self.panels(b, uu, 0.0),
            );
            hv += est.value.0;
            hvv += est.value.1;
        }
        let lam = self.intensity;
        let hv = hv * (lam * c);
        let hvv = hvv * (lam * c * c);
        self.eval(u, 0.0).value() * (hv * hv + hvv)
    }
}

/// Joint characteristic function at one point.
pub fn charfn_joint(
    intensity: f64,
    kernel: &KernelRef,
    impulses: &ImpulseSpec,
    u: f64,
    v: f64,
) -> Result<ComplexEstimate> {
    Ok(CharFn::new(intensity, kernel.clone(), impulses, false)?.eval(u, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierOptions {
    /// Absolute accuracy target for `Ĉ(u)/L`.
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for FourierOptions {
    fn default() -> Self {
        Self {
            tol: 5e-4,
            max_panels: 4000,
        }
    }
}

impl FourierOptions {
    /// Cut-off `V` with `(2/V)/π <= tol/2`.
    pub fn cutoff(&self) -> f64 {
        4.0 / (PI * self.tol)
    }
}

/// `Ĉ(u, [0, L]) = −(L/π) ∫₀^∞ (ψ(u,v) + ψ(u,−v) − 2ψ(u,0)) / v² dv`.
///
/// The integral runs to `V`; beyond it the `−2ψ(u,0)` part is exact and the
/// rest is bounded by `2/V` using `|ψ| <= 1`. Below `v₀` the integrand is
/// replaced by its limit `∂²ψ/∂v²(u, 0)`.
pub fn crossing_fourier(cf: &CharFn, u: f64, length: f64, opts: &FourierOptions) -> Result<ComplexEstimate> {
    let sd = cf.derivative_sd();
    let v0 = 1e-4 / sd.max(1e-300);
    let big_v = opts.cutoff().max(100.0 * v0);
    let psi0 = cf.eval(u, 0.0);
    let limit = cf.second_derivative_v0(u);
    let mut max_err: f64 = psi0.error;
    let mut integrand = |v: f64| -> Complex64 {
        if v < v0 {
            return limit;
        }
        let (p, m) = cf.eval_pair(u, v);
        max_err = max_err.max(p.error).max(m.error);
        (p.value() + m.value() - psi0.value() * 2.0) / (v * v)
    };
    let at_v0 = integrand(v0);
    let near_zero_err = (at_v0 - limit).norm() * v0;
    let mut breaks = vec![0.0, v0];
    let mut b = 0.25 / sd;
    while b < big_v {
        if b > v0 {
            breaks.push(b);
        }
        b *= 2.0;
    }
    breaks.push(big_v);
    let cfg = QuadConfig {
        abs_tol: 0.25 * PI * opts.tol,
        rel_tol: 0.0,
        max_panels: opts.max_panels,
    };
    let est = quad::adaptive_breaks(&mut integrand, &breaks, &cfg)?;
    let tail_exact = -psi0.value() * 2.0 / big_v;
    let error = est.error + near_zero_err + 4.0 * max_err / v0 + 2.0 / big_v + 2.0 * psi0.error / big_v;
    let value = (est.value + tail_exact) * (-length / PI);
    Ok(ComplexEstimate::new(value, error * length / PI))
}

/// `Ĉ` sampled on a u-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub u: Vec<f64>,
    pub values: Vec<ComplexEstimate>,
    pub intensity: f64,
    pub kernel: String,
    pub length: f64,
    pub normalized: bool,
    /// Mean level of the process the curve belongs to.
    pub mean: f64,
    /// Standard deviation of the process (sets the Nyquist requirement).
    pub sd: f64,
}

/// `Ĉ(u)` on `0 <= u <= U` with `n` equispaced points (inclusive); values
/// at negative `u` follow from Hermitian symmetry.
pub fn crossing_fourier_curve(
    cf: &CharFn,
    u_max: f64,
    n: usize,
    length: f64,
    opts: &FourierOptions,
) -> Result<SpectralCurve> {
    if n < 2 || !(u_max > 0.0) {
        return param("u-grid needs at least two points and U > 0");
    }
    let du = u_max / (n - 1) as f64;
    let u: Vec<f64> = (0..n).map(|j| du * j as f64).collect();
    let values = u
        .par_iter()
        .map(|&uj| crossing_fourier(cf, uj, length, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralCurve {
        u,
        values,
        intensity: cf.intensity,
        kernel: cf.kernel.id(),
        length,
        normalized: cf.normalized,
        mean: cf.mean,
        sd: cf.sd(),
    })
}

/// Default half-width of the inversion u-grid: `8/√m₀`.
pub fn default_u_max(sd: f64) -> f64 {
    8.0 / sd
}

/// Default number of points on `[0, U]`.
pub const DEFAULT_U_POINTS: usize = 129;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedCurve {
    pub alpha: Vec<f64>,
    pub value: Vec<f64>,
    pub imag_residual: Vec<f64>,
    pub error: Vec<f64>,
}

/// `C(α) = (1/2π) ∫_{−U}^{U} Ĉ(u) e^{−iuα} du` by the trapezoid rule on the
/// curve's grid (half weights at `±U`).
pub fn invert_crossing_curve(curve: &SpectralCurve, alpha: &[f64]) -> Result<InvertedCurve> {
    let n = curve.u.len();
    if n < 2 {
        return param("spectral curve needs at least two points");
    }
    let du = curve.u[1] - curve.u[0];
    if curve.u[0] != 0.0 {
        return param("spectral curve must start at u = 0");
    }
    if 2.0 * PI / du < 12.0 * curve.sd {
        return Err(Error::Resolution(format!(
            "u-step {du:.4} aliases at period {:.4} < 12 sd = {:.4}",
            2.0 * PI / du,
            12.0 * curve.sd
        )));
    }
    // weights of the full symmetric grid: u = 0 is interior, ±U are ends
    let weight = |j: usize| if j == n - 1 { 0.5 * du } else { du };
    let quad_err = (du * curve.values[0].error
        + 2.0 * (1..n).map(|j| weight(j) * curve.values[j].error).sum::<f64>())
        / (2.0 * PI);
    let edge = curve.values[n - 1].value().norm() * du / PI;
    let mut value = Vec::with_capacity(alpha.len());
    let mut imag = Vec::with_capacity(alpha.len());
    for &a in alpha {
        let mut re = du * curve.values[0].re;
        for j in 1..n {
            let z = curve.values[j].value() * Complex64::new(0.0, -curve.u[j] * a).exp();
            re += 2.0 * weight(j) * z.re;
        }
        value.push(re / (2.0 * PI));
        imag.push(du * curve.values[0].im / (2.0 * PI));
    }
    Ok(InvertedCurve {
        alpha: alpha.to_vec(),
        value,
        imag_residual: imag,
        error: vec![quad_err + edge; alpha.len()],
    })
}

/// Spectral moments of the limit Gaussian process, shifted to the mean level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianLimit {
    pub m0: f64,
    pub m2: f64,
    pub m4: Option<f64>,
    pub mean: f64,
}

impl GaussianLimit {
    /// Limit of the normalized process.
    pub fn from_moments(t: &MomentTable) -> Result<Self> {
        let (m0, m2) = (t.m0(), t.m2());
        if !(m0 > 0.0 && m2 > 0.0) {
            return param("limit moments must be positive");
        }
        Ok(Self {
            m0,
            m2,
            m4: t.m4.map(|m| m.value),
            mean: 0.0,
        })
    }

    pub fn from_kernel(kernel: &dyn Kernel) -> Result<Self> {
        Self::from_moments(&kernels::moments(kernel, &[])?)
    }

    /// Gaussian approximation of the unnormalized process `X_λ`.
    pub fn for_process(intensity: f64, kernel: &dyn Kernel, impulses: &ImpulseSpec) -> Result<Self> {
        let base = Self::from_kernel(kernel)?;
        let v = intensity * impulses.second_moment();
        Ok(Self {
            m0: base.m0 * v,
            m2: base.m2 * v,
            m4: base.m4.map(|m| m * v),
            mean: intensity * impulses.mean() * kernels::mass(kernel)?,
        })
    }
}

/// Rice rate `L (1/π) √(m₂/m₀) e^{−α²/2m₀}` (α measured from the mean).
pub fn rice_gaussian(limits: &GaussianLimit, alpha: f64, length: f64) -> f64 {
    let a = alpha - limits.mean;
    length / PI * (limits.m2 / limits.m0).sqrt() * (-a * a / (2.0 * limits.m0)).exp()
}

/// Mean number of extrema per unit length of the limit, `(1/π)√(m₄/m₂)`.
pub fn rice_extrema_rate(limits: &GaussianLimit) -> Option<f64> {
    limits.m4.map(|m4| (m4 / limits.m2).sqrt() / PI)
}

/// `L √(2m₂/π) e^{−m₀u²/2}` (times `e^{iuμ}` for a shifted limit).
pub fn gaussian_fourier(limits: &GaussianLimit, u: f64, length: f64) -> Complex64 {
    let r = length * (2.0 * limits.m2 / PI).sqrt() * (-limits.m0 * u * u / 2.0).exp();
    Complex64::from_polar(r, u * limits.mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConstants {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl ConvergenceConstants {
    /// `(a₂ + a₃|u|)/√λ`.
    pub fn bound(&self, u: f64, intensity: f64) -> f64 {
        (self.a2 + self.a3 * u.abs()) / intensity.sqrt()
    }

    /// Validity region `|u| < a₁√λ`.
    pub fn in_region(&self, u: f64, intensity: f64) -> bool {
        u.abs() < self.a1 * intensity.sqrt()
    }
}

pub const CONVERGENCE_MOMENTS: [(u32, u32); 6] = [(2, 0), (0, 2), (3, 0), (0, 3), (1, 2), (2, 2)];

pub fn convergence_constants(kernel: &dyn Kernel) -> Result<ConvergenceConstants> {
    let t = kernels::moments(kernel, &CONVERGENCE_MOMENTS)?;
    let m = |k, l| t.get(k, l).expect("requested moment");
    let (m20, m02, m30, m03, m12, m22) = (m(2, 0), m(0, 2), m(3, 0), m(0, 3), m(1, 2), m(2, 2));
    let e = std::f64::consts::E;
    Ok(ConvergenceConstants {
        a1: (m02 / (2.0 * m22)).sqrt().min(m02 / (2.0 * m12)).min(3.0 * m20 / (2.0 * m30)),
        a2: (24.0 * m30 + 2.0 * m03) / (3.0 * m02),
        a3: m12 * (PI / m02).sqrt() + 2.0 * (2.0 * PI * m02).sqrt() * m30 / (e * 3.0 * m20),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub u: f64,
    pub deviation: f64,
    pub quad_err: f64,
    pub bound: f64,
    pub in_region: bool,
    pub pass: bool,
}

/// Compares `Ĉ_{Z_λ}(u, [0,1])` with its Gaussian limit against `(a₂+a₃|u|)/√λ`.
pub fn convergence_rate_check(
    intensity: f64,
    kernel: &KernelRef,
    u_grid: &[f64],
    opts: &FourierOptions,
) -> Result<Vec<ConvergenceRow>> {
    let cf = CharFn::new(intensity, kernel.clone(), &ImpulseSpec::DeterministicOne, true)?;
    let consts = convergence_constants(kernel.as_ref())?;
    let limit = GaussianLimit::from_kernel(kernel.as_ref())?;
    u_grid
        .par_iter()
        .map(|&u| {
            let c = crossing_fourier(&cf, u, 1.0, opts)?;
            let deviation = (c.value() - gaussian_fourier(&limit, u, 1.0)).norm();
            let bound = consts.bound(u, intensity);
            let in_region = consts.in_region(u, intensity);
            Ok(ConvergenceRow {
                u,
                deviation,
                quad_err: c.error,
                bound,
                in_region,
                pass: !in_region || deviation + c.error <= bound,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalVariationBound {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

/// `|E|X′|/√λ − √(2m₂/π)| <= 14 m₃ / (3π m₂ √λ)` with `m₃ = ∫|g′|³`; the
/// Monte Carlo estimate enters with slack `3·SE/√λ`.
pub fn total_variation_bound_check(
    intensity: f64,
    kernel: &dyn Kernel,
    mc_mean_tv: Estimate,
) -> Result<TotalVariationBound> {
    let t = kernels::moments(kernel, &[(0, 3)])?;
    let (m2, m3) = (t.m2(), t.get(0, 3).expect("m03"));
    let sl = intensity.sqrt();
    let lhs = (mc_mean_tv.value / sl - (2.0 * m2 / PI).sqrt()).abs();
    let rhs = 14.0 * m3 / (3.0 * PI * m2 * sl);
    let slack = 3.0 * mc_mean_tv.se / sl;
    Ok(TotalVariationBound {
        lhs,
        rhs,
        slack,
        pass: lhs <= rhs + slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub u: f64,
    pub v: f64,
    pub magnitude: f64,
    pub quad_err: f64,
    pub bound: f64,
    pub applicable: bool,
    pub pass: bool,
}

/// `8√2(2n₀+1)/√(m|u|)`.
pub fn stationary_phase_bound_1d(p: &PhaseParams, u: f64) -> f64 {
    8.0 * 2f64.sqrt() * (2 * p.n0 + 1) as f64 / (p.m * u.abs()).sqrt()
}

/// `8√2(2n₀+3)/√(m√(u²+v²))`.
pub fn stationary_phase_bound_2d(p: &PhaseParams, u: f64, v: f64) -> f64 {
    8.0 * 2f64.sqrt() * (2 * p.n0 + 3) as f64 / (p.m * u.hypot(v)).sqrt()
}

/// `|∫_a^b e^{i(uφ₁(s) + vφ₂(s))} ds|` with `φ₁ = g`, `φ₂ = g′`, on panels
/// no wider than `min(h, π/(r·max|∇φ|))`.
pub fn oscillatory_integral(kernel: &dyn Kernel, a: f64, b: f64, u: f64, v: f64) -> (f64, f64) {
    let mut d = [0.0; 3];
    let probes = 4096;
    let mut slope: f64 = 0.0;
    for i in 0..=probes {
        let s = a + (b - a) * i as f64 / probes as f64;
        kernel.derivatives(s, &mut d);
        slope = slope.max((u * d[1] + v * d[2]).abs());
    }
    let h_base = (b - a) / 64.0;
    let h = if slope > 0.0 { h_base.min(PI / (1.1 * slope)) } else { h_base };
    let panels = ((b - a) / h).ceil() as usize;
    let est = quad::composite(
        |s| {
            kernel.derivatives(s, &mut d);
            Complex64::new(0.0, u * d[0] + v * d[1]).exp()
        },
        a,
        b,
        panels,
    );
    (est.value.norm(), est.error)
}

/// Certifies the stationary-phase bound on `[a, b]` at each `(u, v)`
/// (`v` ignored in 1-d mode).
pub fn stationary_phase_certify(
    kernel: &dyn Kernel,
    a: f64,
    b: f64,
    grid: &[(f64, f64)],
    mode: PhaseMode,
) -> Result<Vec<PhaseRow>> {
    let p = kernels::phase_params(kernel, a, b, mode)?;
    Ok(grid
        .iter()
        .map(|&(u, v)| {
            let v = if mode == PhaseMode::Level1d { 0.0 } else { v };
            let r = u.hypot(v);
            let applicable = r > 1.0 / p.m;
            let (magnitude, quad_err) = oscillatory_integral(kernel, a, b, u, v);
            let bound = match mode {
                PhaseMode::Level1d => stationary_phase_bound_1d(&p, u),
                PhaseMode::Joint2d => stationary_phase_bound_2d(&p, u, v),
            };
            PhaseRow {
                u,
                v,
                magnitude,
                quad_err,
                bound,
                applicable,
                pass: !applicable || magnitude + quad_err <= bound,
            }
        })
        .collect())
}
