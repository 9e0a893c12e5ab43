use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use delaylin::elim::run_elimination;
use delaylin::env::{drive, DelayEnv};
use delaylin::linucb::LinUcb;
use delaylin::seed::stream;
use delaylin::spanner::{certify, compute_spanner, default_budget};
use delaylin::PayoffKind;
use delaylin_bench::{loss_config, study_instance};

fn spanner(c: &mut Criterion) {
    let mut group = c.benchmark_group("spanner");
    for n in [6, 8, 10] {
        let inst = study_instance(1, n, 0.0);
        group.bench_with_input(BenchmarkId::new("compute_and_certify", n), &inst, |b, inst| {
            b.iter(|| {
                let s = compute_spanner(black_box(&inst.actions), default_budget(n));
                certify(&inst.actions, &s).unwrap().norm_factor
            })
        });
    }
    group.finish();
}

fn runs(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_4000_rounds");
    group.sample_size(10);
    let inst = study_instance(2, 6, 1000.0);
    group.bench_function("elim_loss", |b| {
        b.iter(|| run_elimination(&inst, loss_config(4000, 1000.0), stream(2, "env", 0)).unwrap().record.final_regret())
    });
    group.bench_function("linucb", |b| {
        b.iter(|| {
            let mut env = DelayEnv::new(inst.clone(), 4000, stream(2, "env", 0));
            let mut l = LinUcb::new(inst.actions.clone(), PayoffKind::Loss, 4000, 1.0);
            drive(&mut env, &mut l).unwrap();
            env.record().final_regret()
        })
    });
    group.finish();
}

criterion_group!(benches, spanner, runs);
criterion_main!(benches);
