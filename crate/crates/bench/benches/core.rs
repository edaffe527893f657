use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use shotnoise_core::crossings::{count_crossings, count_extrema, default_refine_tol};
use shotnoise_core::paths::{evaluate_path, required_window};
use shotnoise_core::ppp::sample_ppp;
use shotnoise_core::spectral::{crossing_fourier, CharFn, FourierOptions};
use shotnoise_core::{GaussianKernel, ImpulseSpec, PathOptions, StreamFamily};

fn paths(c: &mut Criterion) {
    let kernel = GaussianKernel::arc(1.0).unwrap();
    let opts = PathOptions::new(0.0, 100.0, 0.05).unwrap();
    let one = ImpulseSpec::DeterministicOne;
    let window = required_window(kernel.as_ref(), 2.0, &one, &opts).unwrap();
    let config = sample_ppp(2.0, window, &one, StreamFamily::new(1).stream(0)).unwrap();
    c.bench_function("evaluate_path λ=2 [0,100] h=0.05", |b| {
        b.iter(|| evaluate_path(black_box(&config), &kernel, &opts).unwrap())
    });

    let path = evaluate_path(&config, &kernel, &opts).unwrap();
    let tol = default_refine_tol(&path);
    c.bench_function("count_crossings one level", |b| {
        b.iter(|| count_crossings(black_box(&path), 1.0, tol))
    });
    c.bench_function("count_extrema", |b| b.iter(|| count_extrema(black_box(&path), tol).unwrap()));
}

fn spectral(c: &mut Criterion) {
    let kernel = GaussianKernel::arc(1.0).unwrap();
    let cf = CharFn::new(2.0, kernel, &ImpulseSpec::DeterministicOne, false).unwrap();
    c.bench_function("charfn eval", |b| b.iter(|| cf.eval(black_box(0.7), black_box(1.3))));
    let opts = FourierOptions::default();
    let mut g = c.benchmark_group("fourier");
    g.sample_size(10);
    g.bench_function("crossing_fourier u=1", |b| {
        b.iter(|| crossing_fourier(&cf, black_box(1.0), 1.0, &opts).unwrap())
    });
    g.finish();
}

criterion_group!(benches, paths, spectral);
criterion_main!(benches);
