use shotnoise_core::ppp::sample_ppp;
use shotnoise_core::scalespace::{
    rho_estimate, rho_gaussian_limit, rho_monotonicity_report, scaling_check, scaling_in_law, semigroup_check,
    MonotonicityOptions,
};
use shotnoise_core::{ImpulseSpec, StreamFamily, Window};

#[test]
fn sparse_limit_counts_two_extrema_per_point() {
    let e = rho_estimate(0.05, 1.0, 50.0, 10_000, StreamFamily::new(31)).unwrap();
    let ratio = e.rho / 0.1;
    assert!((0.8..=1.0).contains(&ratio), "ρ̂/2λ = {ratio}");
    assert_eq!(e.bound_violations, 0);
}

#[test]
fn dense_limit_at_high_intensity() {
    let e = rho_estimate(10.0, 1.0, 100.0, 200, StreamFamily::new(32)).unwrap();
    let rel = e.rho / rho_gaussian_limit(1.0) - 1.0;
    assert!(rel.abs() <= 0.10, "{rel}");
}

#[test]
fn narrow_kernel_approaches_twice_intensity() {
    let e = rho_estimate(1.0, 0.05, 40.0, 4000, StreamFamily::new(33)).unwrap();
    assert!((1.8..=2.0).contains(&e.rho), "{}", e.rho);
}

#[test]
fn wide_kernel_approaches_gaussian_limit() {
    let e = rho_estimate(1.0, 8.0, 400.0, 300, StreamFamily::new(34)).unwrap();
    let rel = e.rho / rho_gaussian_limit(8.0) - 1.0;
    assert!(rel.abs() <= 0.15, "{rel}");
}

#[test]
fn scaling_law_holds() {
    let c = scaling_check(1.0, 1.0, 2.0, 10_000, StreamFamily::new(35)).unwrap();
    assert!(c.pass, "{} vs {} (SE {})", c.lhs.value, c.rhs.value, c.combined_se);
    let same = scaling_check(1.0, 1.0, 1.0, 500, StreamFamily::new(36)).unwrap();
    assert!(same.pass);
}

#[test]
fn scaling_in_law_holds() {
    let (_, p) = scaling_in_law(1.0, 1.0, 2.0, 10_000, StreamFamily::new(37)).unwrap();
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn semigroup_at_half_widths() {
    let c = sample_ppp(2.0, Window::new(-20.0, 40.0).unwrap(), &ImpulseSpec::DeterministicOne, StreamFamily::new(38).stream(0))
        .unwrap();
    let r = semigroup_check(&c, 0.5, 0.5, Window::new(0.0, 20.0).unwrap(), 0.01).unwrap();
    assert!(r.relative() <= 1e-4, "{}", r.relative());
    let narrow = semigroup_check(&c, 0.5, 0.05, Window::new(0.0, 20.0).unwrap(), 0.005).unwrap();
    assert!(narrow.relative() <= 1e-4, "{}", narrow.relative());
}

#[test]
fn counts_never_grow_with_width() {
    let opts = MonotonicityOptions {
        length: 100.0,
        tracked: 2,
        track_window: 30.0,
    };
    let r = rho_monotonicity_report(1.0, &[0.25, 0.5, 1.0, 2.0, 4.0], 100, StreamFamily::new(39), &opts).unwrap();
    assert!(r.count_violations.is_empty(), "{:?}", r.count_violations);
    assert!(r.tracking_errors.is_empty(), "{:?}", r.tracking_errors);
    assert!(r.pass());
}
