use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use maskforge_bench::{bench_design, bench_object};
use maskforge_core::baseline::generate_white16;
use maskforge_core::mask_design::{
    design_optmask, generate_template, stage1_optimize, stage2_quantize, DesignConfig,
};
use maskforge_core::metrics::eta;
use maskforge_core::optics_sim::{
    cdp_intensity_discrete, cdp_intensity_optical, MeasurementModel, OpticalGeometry,
};
use maskforge_core::reconstruct::{tv_map_admm, SolverConfig};
use std::hint::black_box;

fn bench_mask_design(c: &mut Criterion) {
    let mut group = c.benchmark_group("mask_design");
    for &n in &[64usize, 128] {
        let cfg = bench_design(n);
        let template = generate_template(n, &cfg.filter, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("stage1", n), &n, |b, _| {
            b.iter(|| stage1_optimize(black_box(&template), &cfg).unwrap())
        });
        let stage1 = stage1_optimize(&template, &cfg).unwrap();
        group.bench_with_input(BenchmarkId::new("stage2", n), &n, |b, _| {
            b.iter(|| {
                stage2_quantize(black_box(&stage1.psi), stage1.gamma, &template, &cfg).unwrap()
            })
        });
    }
    group.bench_function("design_full_64", |b| {
        let cfg = DesignConfig {
            l_masks: 1,
            ..bench_design(64)
        };
        b.iter(|| design_optmask(black_box(&cfg)).unwrap())
    });
    group.finish();
}

fn bench_measurement(c: &mut Criterion) {
    let mut group = c.benchmark_group("optics_sim");
    group.sample_size(20);
    let n = 128;
    let x = bench_object(n);
    let mask = generate_white16(n, 1, 3).unwrap().remove(0);
    group.bench_function("discrete_128_pad3", |b| {
        b.iter(|| cdp_intensity_discrete(black_box(&x), &mask, (3 * n, 3 * n)).unwrap())
    });
    let geom = OpticalGeometry::bench_default();
    let model = MeasurementModel::optical((3 * n, 3 * n), 2);
    group.bench_function("optical_128_s2_pad3", |b| {
        b.iter(|| cdp_intensity_optical(black_box(&x), &mask, &geom, &model, 0).unwrap())
    });
    group.finish();
}

fn bench_reconstruction(c: &mut Criterion) {
    let mut group = c.benchmark_group("reconstruct");
    group.sample_size(10);
    let n = 32;
    let x = bench_object(n);
    let masks = generate_white16(n, 3, 5).unwrap();
    let meas: Vec<_> = masks
        .iter()
        .map(|m| cdp_intensity_discrete(&x, m, (3 * n, 3 * n)).unwrap())
        .collect();
    let cfg = SolverConfig {
        iterations: 50,
        track_objective: false,
        ..Default::default()
    };
    group.bench_function("admm_50it_32", |b| {
        b.iter(|| tv_map_admm(black_box(&meas), &masks, &cfg).unwrap())
    });
    group.finish();
}

fn bench_metrics(c: &mut Criterion) {
    let n = 256;
    let x = bench_object(n);
    let mask = generate_white16(n, 1, 9).unwrap().remove(0);
    let meas = cdp_intensity_discrete(&x, &mask, (n, n)).unwrap();
    c.bench_function("metrics/eta_256", |b| {
        b.iter(|| eta(black_box(&meas.values), 0.8).unwrap())
    });
}

criterion_group!(
    benches,
    bench_mask_design,
    bench_measurement,
    bench_reconstruction,
    bench_metrics
);
criterion_main!(benches);
