use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use xtrepan::c45::{induce_c45, C45Params};
use xtrepan::trainer::train;
use xtrepan::trepan::{extract_tree, TrepanParams, Variant};
use xtrepan::{bundled, eval};
use xtrepan_bench::{band_data, band_network, small_config};

fn induction(c: &mut Criterion) {
    let tennis = bundled::play_tennis();
    let band = band_data(400);
    let params = C45Params::default();
    c.bench_function("c45/play_tennis", |b| {
        b.iter(|| induce_c45(black_box(&tennis), &params).unwrap())
    });
    c.bench_function("c45/band_400", |b| {
        b.iter(|| induce_c45(black_box(&band), &params).unwrap())
    });
}

fn training(c: &mut Criterion) {
    let band = band_data(200);
    let cfg = small_config(20);
    c.bench_function("train/band_200_x20", |b| {
        b.iter(|| train(black_box(&band), &band, &cfg).unwrap())
    });
}

fn extraction(c: &mut Criterion) {
    let band = band_data(200);
    let net = band_network(&band);
    let mut group = c.benchmark_group("extract");
    group.sample_size(10);
    for variant in [Variant::MofN, Variant::SingleTest] {
        let params = TrepanParams {
            variant,
            min_sample: 300,
            max_internal_nodes: 8,
            ..Default::default()
        };
        group.bench_function(variant.name(), |b| {
            b.iter(|| extract_tree(&net, black_box(&band), &params).unwrap())
        });
    }
    group.finish();

    let tree = extract_tree(
        &net,
        &band,
        &TrepanParams {
            min_sample: 300,
            ..Default::default()
        },
    )
    .unwrap();
    c.bench_function("eval/fidelity", |b| {
        b.iter(|| eval::fidelity(&tree, &net, black_box(&band)).unwrap())
    });
}

criterion_group!(benches, induction, training, extraction);
criterion_main!(benches);
