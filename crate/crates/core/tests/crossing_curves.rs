use num_complex::Complex64;
use rayon::prelude::*;
use shotnoise_core::crossings::{
    count_crossings, default_refine_tol, mc_crossing_curve, rolle_check, total_variation, CurveOptions,
};
use shotnoise_core::paths::{evaluate_path, sample_values, simulate_path};
use shotnoise_core::ppp::sample_ppp;
use shotnoise_core::scalespace::finite_extrema_count;
use shotnoise_core::spectral::{crossing_fourier, rice_gaussian, CharFn, FourierOptions, GaussianLimit};
use shotnoise_core::{GaussianKernel, ImpulseSpec, PathOptions, StreamFamily, Truncation, Window};

const ONE: ImpulseSpec = ImpulseSpec::DeterministicOne;

fn opts(step: f64, normalized: bool) -> CurveOptions {
    CurveOptions {
        step,
        conditioning: None,
        normalized,
    }
}

#[test]
fn rolle_holds_on_random_paths() {
    let k = GaussianKernel::arc(0.5).unwrap();
    let popts = PathOptions::new(0.0, 10.0, 0.02).unwrap();
    let levels: Vec<f64> = (0..50).map(|j| 0.1 + 0.1 * j as f64).collect();
    let f = StreamFamily::new(21);
    let violations: usize = (0..10_000u64)
        .into_par_iter()
        .map(|r| {
            let p = simulate_path(2.0, &k, &ONE, &popts, f.stream(r)).unwrap();
            rolle_check(&p, &levels).unwrap().violations.len()
        })
        .sum();
    assert_eq!(violations, 0);
}

#[test]
fn two_point_configurations_have_at_most_three_extrema() {
    let f = StreamFamily::new(22);
    let w = Window::new(0.0, 6.0).unwrap();
    let k = GaussianKernel::arc(1.0).unwrap();
    let mut seen = 0;
    for r in 0..20_000 {
        let c = sample_ppp(0.34, w, &ONE, f.stream(r)).unwrap();
        if c.len() != 2 {
            continue;
        }
        seen += 1;
        let fast = finite_extrema_count(&c, 1.0).unwrap();
        // dense-grid sign changes of X′
        let lo = c.points[0] - 1.0;
        let hi = c.points[1] + 1.0;
        let dense = PathOptions::new(lo, hi, 1e-3).unwrap().with_truncation(Truncation::None);
        let p = evaluate_path(&c, &k, &dense).unwrap();
        let brute = p.dx().windows(2).filter(|w| w[0] > 0.0 && w[1] <= 0.0 || w[0] < 0.0 && w[1] >= 0.0).count();
        assert!(fast <= 3 && brute <= 3);
        assert_eq!(fast, brute);
        if seen == 1000 {
            break;
        }
    }
    assert_eq!(seen, 1000);
}

#[test]
fn level_integral_matches_total_variation() {
    let k = GaussianKernel::arc(1.0).unwrap();
    let levels: Vec<f64> = (0..=700).map(|j| -0.5 + 0.01 * j as f64).collect();
    let curve = mc_crossing_curve(
        1.0,
        &k,
        &ONE,
        &levels,
        Window::new(0.0, 20.0).unwrap(),
        200,
        StreamFamily::new(23),
        opts(0.02, false),
    )
    .unwrap();
    let tv = curve.total_variation;
    assert!((curve.integral() - tv.value).abs() <= 2.0 * tv.se + 0.01 * tv.value, "{} vs {}", curve.integral(), tv.value);
}

#[test]
fn co_area_on_one_path() {
    let k = GaussianKernel::arc(1.0).unwrap();
    let p = simulate_path(1.5, &k, &ONE, &PathOptions::new(0.0, 20.0, 0.01).unwrap(), StreamFamily::new(24).stream(0))
        .unwrap();
    let (lo, hi) = p.x().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let d = 1e-3;
    let tol = default_refine_tol(&p);
    let n = ((hi - lo) / d).ceil() as usize;
    let integral: f64 = (0..n).map(|j| d * count_crossings(&p, lo + (j as f64 + 0.5) * d, tol).total() as f64).sum();
    let tv = total_variation(&p);
    assert!((integral - tv).abs() <= 0.02 * tv, "{integral} vs {tv}");
}

#[test]
fn normalized_curve_approaches_rice() {
    let k = GaussianKernel::arc(1.0).unwrap();
    let lim = GaussianLimit::from_kernel(k.as_ref()).unwrap();
    let sd = lim.m0.sqrt();
    let levels: Vec<f64> = (0..=16).map(|j| -3.0 * sd + 6.0 * sd * j as f64 / 16.0).collect();
    let curve = mc_crossing_curve(
        100.0,
        &k,
        &ONE,
        &levels,
        Window::new(0.0, 20.0).unwrap(),
        200,
        StreamFamily::new(25),
        opts(0.05, true),
    )
    .unwrap();
    let max_se = curve.points.iter().map(|p| p.se).fold(0.0, f64::max);
    let dev = curve
        .points
        .iter()
        .map(|p| (p.mean - rice_gaussian(&lim, p.level, 1.0)).abs())
        .fold(0.0, f64::max);
    assert!(dev <= 5.0 * max_se, "{dev} vs 5 × {max_se}");
}

#[test]
fn charfn_matches_empirical_marginal() {
    let k = GaussianKernel::arc(1.0).unwrap();
    let cf = CharFn::new(1.0, k.clone(), &ONE, false).unwrap();
    let x = sample_values(1.0, &k, 0.0, 100_000, StreamFamily::new(26)).unwrap();
    for u in [0.5, 1.0, 2.5] {
        let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(0.0, u * v).exp()).collect();
        let n = z.len() as f64;
        let mean = z.iter().sum::<Complex64>() / n;
        let se_re = (z.iter().map(|w| (w.re - mean.re).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let se_im = (z.iter().map(|w| (w.im - mean.im).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let psi = cf.eval(u, 0.0);
        assert!((psi.re - mean.re).abs() <= 3.0 * se_re + psi.error, "u = {u}");
        assert!((psi.im - mean.im).abs() <= 3.0 * se_im + psi.error, "u = {u}");
    }
}

#[test]
fn fourier_at_zero_is_mean_total_variation() {
    let k = GaussianKernel::arc(1.0).unwrap();
    let cf = CharFn::new(2.0, k.clone(), &ONE, false).unwrap();
    let c0 = crossing_fourier(&cf, 0.0, 1.0, &FourierOptions::default()).unwrap();
    let curve = mc_crossing_curve(
        2.0,
        &k,
        &ONE,
        &[],
        Window::new(0.0, 20.0).unwrap(),
        1000,
        StreamFamily::new(27),
        opts(0.05, false),
    )
    .unwrap();
    let tv = curve.total_variation;
    assert!((c0.re - tv.value).abs() <= 3.0 * tv.se + c0.error, "{} vs {} ± {}", c0.re, tv.value, tv.se);
    let minus = crossing_fourier(&cf, -0.8, 1.0, &FourierOptions::default()).unwrap();
    let plus = crossing_fourier(&cf, 0.8, 1.0, &FourierOptions::default()).unwrap();
    assert!((minus.re - plus.re).abs() <= minus.error + plus.error);
    assert!((minus.im + plus.im).abs() <= minus.error + plus.error);
}
