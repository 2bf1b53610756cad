use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use semshift::change::{change_report, ComparisonMode, ModelOutput, Space};
use semshift::pairgen::{extract_pairs, ExtractionConfig, ExtractionMode};
use semshift::ppmi::{count_matrix, ppmi_weight, PpmiConfig};
use semshift::procrustes::{align, DistanceBasis};
use semshift::sgns::{train, SgnsConfig};
use semshift_bench::{dense_space, desk_corpus, pair_stream};
use std::hint::black_box;

fn extraction(c: &mut Criterion) {
    let (corpus, vocab, targets) = desk_corpus(2_000);
    let mut g = c.benchmark_group("extract");
    for mode in [ExtractionMode::Alignment, ExtractionMode::TemporalReferencing] {
        let cfg = ExtractionConfig { mode, ..Default::default() };
        g.bench_function(format!("{mode:?}"), |b| {
            b.iter(|| extract_pairs(black_box(&corpus), &vocab, &targets, &cfg).unwrap())
        });
    }
    g.finish();
}

fn sgns(c: &mut Criterion) {
    let stream = pair_stream(2_000, 50_000, 1);
    let cfg = SgnsConfig { dim: 100, ..Default::default() };
    let mut g = c.benchmark_group("sgns");
    g.sample_size(10);
    g.bench_function("train_d100", |b| b.iter(|| train(black_box(&stream), &cfg).unwrap()));
    g.finish();
}

fn ppmi(c: &mut Criterion) {
    let stream = pair_stream(5_000, 200_000, 2);
    let counts = count_matrix(&stream).unwrap();
    let cfg = PpmiConfig::default();
    c.bench_function("ppmi/count", |b| b.iter(|| count_matrix(black_box(&stream)).unwrap()));
    c.bench_function("ppmi/weight", |b| b.iter(|| ppmi_weight(black_box(&counts), &cfg).unwrap()));
}

fn procrustes(c: &mut Criterion) {
    let a = dense_space(5_000, 100, 3);
    let b = dense_space(5_000, 100, 4);
    c.bench_function("procrustes/align_5000x100", |bch| bch.iter(|| align(black_box(&a), &b).unwrap()));
}

fn measure(c: &mut Criterion) {
    let spaces: Vec<Space> = (0..7).map(|i| Space::Dense(dense_space(3_000, 100, 10 + i))).collect();
    let labels: Vec<String> = (0..7).map(|i| format!("t{i}")).collect();
    let model = ModelOutput::PerBin { spaces, labels };
    let targets: Vec<String> = (0..500).map(|i| format!("w{i}")).collect();
    c.bench_function("change/consecutive_al", |b| {
        b.iter_batched(
            || targets.clone(),
            |t| change_report(&model, &t, ComparisonMode::Consecutive, DistanceBasis::Centered).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, extraction, sgns, ppmi, procrustes, measure);
criterion_main!(benches);
