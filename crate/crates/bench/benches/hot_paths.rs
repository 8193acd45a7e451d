use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};

use beliefdrive::beliefs::{belief_to_mass, pignistic, pignistic_entropy, MassFunction, SetBudget};
use beliefdrive::controller::{scale_speed, TierPolicy};
use beliefdrive::net::{forward_rsnn, NetParams};
use beliefdrive::sampling::rng;
use beliefdrive::track::{generate_scene, RasterSpec, SceneParams, SceneTarget};

fn beliefs(c: &mut Criterion) {
    let budget = Arc::new(SetBudget::default_seven());
    let n = budget.len();
    let mass = MassFunction::new(budget.clone(), vec![1.0 / n as f64; n]).unwrap();
    let bel = mass.beliefs();
    c.bench_function("belief_to_mass/16 sets", |b| b.iter(|| belief_to_mass(&budget, black_box(&bel)).unwrap()));
    c.bench_function("pignistic_entropy/16 sets", |b| b.iter(|| pignistic_entropy(&pignistic(black_box(&mass)))));
}

fn network(c: &mut Criterion) {
    let budget = Arc::new(SetBudget::default_seven());
    let raster = RasterSpec::default();
    let params = NetParams::random(&[raster.len(), 64, 32, budget.len()], &mut rng(1));
    let x = raster.rasterize(&generate_scene(SceneTarget::Class(beliefdrive::beliefs::ClassId(2)), &SceneParams::default(), 3));
    c.bench_function("forward_rsnn/raster 32x32x3", |b| b.iter(|| forward_rsnn(&params, &budget, black_box(&x)).unwrap()));
}

fn scenes(c: &mut Criterion) {
    let params = SceneParams::default();
    let raster = RasterSpec::default();
    let mut seed = 0u64;
    c.bench_function("generate_scene+rasterize", |b| {
        b.iter(|| {
            seed += 1;
            raster.rasterize(&generate_scene(SceneTarget::Angle(30.0), &params, seed))
        })
    });
}

fn controller(c: &mut Criterion) {
    let policy = TierPolicy::default();
    c.bench_function("scale_speed", |b| b.iter(|| scale_speed(black_box(800.0), black_box(2.35), &policy, 2.81).unwrap()));
}

criterion_group!(benches, beliefs, network, scenes, controller);
criterion_main!(benches);
