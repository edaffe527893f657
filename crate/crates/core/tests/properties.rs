use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use shotnoise_core::crossings::{count_crossings, count_extrema, default_refine_tol, kac_estimate, rolle_check};
use shotnoise_core::kernels::{hermite, moments, Kernel};
use shotnoise_core::paths::{evaluate_path, heat_equation_residual};
use shotnoise_core::ppp::{sample_conditional, sample_ppp};
use shotnoise_core::scalespace::{finite_extrema_count, track_extrema, TrackOptions};
use shotnoise_core::spectral::{CharFn, GaussianLimit};
use shotnoise_core::{
    GaussianKernel, ImpulseSpec, PathOptions, PointConfiguration, StreamFamily, Truncation, Window,
};

fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Config::default()
    }
}

fn points(max: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, 1..=max)
}

fn finite(times: &[f64]) -> PointConfiguration {
    PointConfiguration::unit_points(Window::new(-50.0, 60.0).unwrap(), 1.0, times).unwrap()
}

fn exact(a: f64, b: f64, step: f64) -> PathOptions {
    PathOptions::new(a, b, step).unwrap().with_truncation(Truncation::None)
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn hermite_recurrence(x in -8.0f64..8.0) {
        for k in 1..4 {
            let lhs = hermite(k + 1, x);
            let rhs = x * hermite(k, x) - k as f64 * hermite(k - 1, x);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn derivatives_match_finite_differences(sigma in 0.3f64..3.0, t in -4.0f64..4.0) {
        let g = GaussianKernel::new(sigma).unwrap();
        let t = t * sigma;
        for order in 1..=4 {
            let h = 1e-4 * sigma;
            let fd = (g.derivative_unchecked(order - 1, t + h) - g.derivative_unchecked(order - 1, t - h)) / (2.0 * h);
            let scale = sigma.powi(-(order as i32) - 1);
            prop_assert!((fd - g.derivative_unchecked(order, t)).abs() <= 1e-6 * scale, "order {order}");
        }
    }

    #[test]
    fn gaussian_moments_scale_with_width(sigma in 0.2f64..5.0) {
        let pairs = [(2, 0), (3, 0), (0, 2), (1, 2), (0, 4)];
        let unit = moments(&GaussianKernel::new(1.0).unwrap(), &pairs).unwrap();
        let scaled = moments(&GaussianKernel::new(sigma).unwrap(), &pairs).unwrap();
        for &(k, l) in &pairs {
            let want = unit.get(k, l).unwrap() / sigma.powi((k + 2 * l) as i32 - 1);
            let got = scaled.get(k, l).unwrap();
            prop_assert!((got / want - 1.0).abs() <= 1e-8, "m{k}{l}: {got} vs {want}");
        }
        let m4 = |s: f64| GaussianLimit::from_kernel(&GaussianKernel::new(s).unwrap()).unwrap().m4.unwrap();
        prop_assert!((m4(sigma) * sigma.powi(5) / m4(1.0) - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn same_seed_same_configuration(seed in any::<u64>(), r in 0u64..1000) {
        let w = Window::new(0.0, 30.0).unwrap();
        let f = StreamFamily::new(seed);
        let a = sample_ppp(1.5, w, &ImpulseSpec::DeterministicOne, f.stream(r)).unwrap();
        let _ = sample_ppp(1.5, w, &ImpulseSpec::DeterministicOne, f.stream(r + 1)).unwrap();
        let b = sample_ppp(1.5, w, &ImpulseSpec::DeterministicOne, f.stream(r)).unwrap();
        prop_assert_eq!(a.points, b.points);
        prop_assert_eq!(a.impulses, b.impulses);
    }

    #[test]
    fn conditional_counts_reach_the_floor(seed in any::<u64>(), k in 0usize..8) {
        let w = Window::symmetric(2.0).unwrap();
        let c = sample_conditional(1.0, w, k, &ImpulseSpec::DeterministicOne, StreamFamily::new(seed).stream(0)).unwrap();
        prop_assert!(c.len() >= k);
    }

    #[test]
    fn paths_superpose(a in points(6, 0.0, 10.0), b in points(6, 0.0, 10.0)) {
        let (ca, cb) = (finite(&a), finite(&b));
        let k = GaussianKernel::arc(1.0).unwrap();
        let opts = exact(-2.0, 12.0, 0.1);
        let pa = evaluate_path(&ca, &k, &opts).unwrap();
        let pb = evaluate_path(&cb, &k, &opts).unwrap();
        let pm = evaluate_path(&ca.merge(&cb).unwrap(), &k, &opts).unwrap();
        for order in 0..3 {
            for i in 0..pm.len() {
                let sum = pa.values[order][i] + pb.values[order][i];
                prop_assert!((pm.values[order][i] - sum).abs() <= 1e-13 * 12.0);
            }
        }
    }

    #[test]
    fn path_derivative_integrates_to_increment(t in points(10, 0.0, 10.0)) {
        let k = GaussianKernel::arc(1.0).unwrap();
        let p = evaluate_path(&finite(&t), &k, &exact(0.0, 10.0, 0.01).with_max_order(3)).unwrap();
        let x3 = p.d3x().unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bound = 10.0 * p.step * p.step / 12.0 * x3 * 1.5 + 1e-12;
        prop_assert!(p.integral_consistency() <= bound);
    }

    #[test]
    fn heat_residual_is_second_order(t in points(6, 0.0, 10.0), sigma in 0.5f64..2.0) {
        let c = finite(&t);
        let probes: Vec<f64> = (0..21).map(|i| 0.5 * i as f64).collect();
        for order in [0, 1] {
            let coarse = heat_equation_residual(&c, sigma, 2e-2, order, &probes).unwrap();
            let fine = heat_equation_residual(&c, sigma, 1e-2, order, &probes).unwrap();
            prop_assume!(coarse > 1e-9);
            let ratio = coarse / fine;
            prop_assert!((3.0..5.0).contains(&ratio), "order {order}: ratio {ratio}");
        }
    }

    #[test]
    fn extrema_respect_point_count(t in points(12, 0.0, 12.0), sigma in 0.2f64..2.0) {
        let c = finite(&t);
        prop_assert!(finite_extrema_count(&c, sigma).unwrap() <= 2 * c.len() - 1);
    }

    #[test]
    fn crossings_alternate_and_obey_rolle(t in points(12, 0.0, 20.0), level in 0.1f64..1.5) {
        let k = GaussianKernel::arc(1.0).unwrap();
        let p = evaluate_path(&finite(&t), &k, &exact(-5.0, 25.0, 0.02)).unwrap();
        let tol = default_refine_tol(&p);
        let tally = count_crossings(&p, level, tol);
        if tally.tangency_suspect == 0 {
            prop_assert!(tally.alternates());
        }
        let e = count_extrema(&p, tol).unwrap();
        if e.degenerate == 0 {
            prop_assert!(e.alternates());
        }
        prop_assert!(rolle_check(&p, &[level]).unwrap().pass());
    }

    #[test]
    fn kac_count_matches_tally(t in points(10, 0.0, 20.0), level in 0.1f64..1.5) {
        let k = GaussianKernel::arc(1.0).unwrap();
        let p = evaluate_path(&finite(&t), &k, &exact(-5.0, 25.0, 0.01)).unwrap();
        prop_assume!(p.x().iter().all(|x| (x - level).abs() > 1e-3));
        let tally = count_crossings(&p, level, default_refine_tol(&p));
        prop_assume!(tally.tangency_suspect == 0);
        let (k3, k4) = (kac_estimate(&p, level, 1e-3), kac_estimate(&p, level, 1e-4));
        prop_assert!((k3 - tally.total() as f64).abs() < 1e-9);
        prop_assert!((k4 - tally.total() as f64).abs() < 1e-9);
    }

    #[test]
    fn refinement_never_loses_crossings(t in points(12, 0.0, 20.0), level in 0.1f64..1.5) {
        let k = GaussianKernel::arc(1.0).unwrap();
        let coarse = evaluate_path(&finite(&t), &k, &exact(0.0, 20.0, 0.1)).unwrap();
        let fine = evaluate_path(&finite(&t), &k, &exact(0.0, 20.0, 0.05)).unwrap();
        let a = count_crossings(&coarse, level, default_refine_tol(&coarse));
        let b = count_crossings(&fine, level, default_refine_tol(&fine));
        prop_assume!(a.tangency_suspect == 0 && b.tangency_suspect == 0);
        prop_assert!(b.total() >= a.total());
    }

    #[test]
    fn second_difference_is_nonnegative_at_zero_frequency(v in 0.0f64..50.0, lam in 0.5f64..20.0) {
        let cf = CharFn::new(lam, GaussianKernel::arc(1.0).unwrap(), &ImpulseSpec::DeterministicOne, false).unwrap();
        let (p, m) = cf.eval_pair(0.0, v);
        let d = 2.0 * cf.eval(0.0, 0.0).re - p.re - m.re;
        prop_assert!(d >= -1e-10, "{d}");
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn tracks_are_consistent(t in points(8, 0.0, 10.0), s_min in 0.3f64..0.8) {
        let c = finite(&t);
        let s_max = 2.0;
        let interval = Window::new(c.points[0] - s_min, c.points[c.len() - 1] + s_min).unwrap();
        let opts = TrackOptions { checkpoints: vec![s_min, 1.0, s_max], ..TrackOptions::default() };
        let set = track_extrema(&c, s_min, s_max, interval, &opts).unwrap();
        prop_assert!(set.consistent(), "live counts differ from direct counts");
        prop_assert_eq!(set.alternation_failures, 0);
        prop_assert!(set.min_separation() > opts.refine_tol);
    }
}
