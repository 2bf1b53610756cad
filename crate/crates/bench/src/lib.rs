//! Seeded fixtures for the kernel benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semshift::corpus::{build_vocab, Corpus, PreprocessConfig, Vocabulary};
use semshift::desk::{generate, DeskConfig};
use semshift::pairgen::{PairStream, StreamScope, TargetSet};
use semshift::sgns::DenseSpace;

/// Random pair stream over `n_words` words and contexts with roughly
/// Zipfian context frequencies.
pub fn pair_stream(n_words: usize, n_records: usize, seed: u64) -> PairStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples = (0..n_records).map(move |_| {
        let w = rng.random_range(0..n_words);
        let c = ((n_words as f64).powf(rng.random::<f64>()) as usize).min(n_words - 1);
        (format!("w{w}"), format!("w{c}"), rng.random_range(1..20u64))
    });
    PairStream::from_counts(StreamScope::Corpus, triples)
}

/// Dense space with uniform random rows.
pub fn dense_space(n: usize, dim: usize, seed: u64) -> DenseSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|i| (format!("w{i}"), (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    DenseSpace::from_rows(rows).expect("well-formed rows")
}

/// Small drifting desk corpus with its vocabulary and every valid word as target.
pub fn desk_corpus(sentences_per_bin: usize) -> (Corpus, Vocabulary, TargetSet) {
    let cfg = DeskConfig {
        sentences_per_bin,
        n_content: 600,
        n_topics: 40,
        background_drift: 0.3,
        ..Default::default()
    };
    let corpus = generate(&cfg).expect("valid desk config").corpus;
    let vocab = build_vocab(&corpus, &PreprocessConfig { min_count: 20, ..Default::default() });
    let targets = TargetSet::all_valid(&vocab);
    (corpus, vocab, targets)
}
