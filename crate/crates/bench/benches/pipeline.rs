use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use hornopt_bench::{clauses, sum_bot, PROGRAMS};
use hornopt_core::hccs::{parse_formula, to_dnf};
use hornopt_core::optimizer::{optimize, Direction, OptimizeOpts};
use hornopt_core::smtio::Smt;
use hornopt_core::surface::parse_source;
use hornopt_core::{PreferenceSpec, Restriction};

fn front_end(c: &mut Criterion) {
    let mut g = c.benchmark_group("front_end");
    for (name, src) in PROGRAMS {
        g.bench_function(format!("parse/{name}"), |b| {
            b.iter(|| parse_source(black_box(src)))
        });
        g.bench_function(format!("generate/{name}"), |b| {
            b.iter(|| clauses(black_box(src)))
        });
    }
    g.finish();
}

fn normal_forms(c: &mut Criterion) {
    let f = parse_formula("!(x = 0 || (y >= x && y <= x + 3)) || (x != 1 && !(y = 2 || y = -2))")
        .unwrap();
    c.bench_function("dnf", |b| b.iter(|| to_dnf(black_box(&f), 64)));
}

// Every iteration talks to the external solver, so keep the sample small.
fn solve(c: &mut Criterion) {
    let h = sum_bot();
    let spec = PreferenceSpec::new(
        BTreeMap::from([("P".to_string(), Direction::Max)]),
        &[],
        Restriction::shape(2, 1),
    )
    .unwrap();
    let smt = Smt::new(Default::default());
    let opts = OptimizeOpts::default();
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    g.bench_function("optimize/sum_bot", |b| {
        b.iter(|| optimize(&h, &spec, &opts, &smt))
    });
    g.finish();
}

criterion_group!(benches, front_end, normal_forms, solve);
criterion_main!(benches);
