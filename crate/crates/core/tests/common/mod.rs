//! Fixtures and brute-force reference implementations shared by the
//! integration suites. Nothing here calls into the code under test except
//! to build inputs.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use semshift::corpus::{Corpus, Provenance, Sentence};

pub type Tally = BTreeMap<(String, String), u64>;

const SYLLABLES: [&str; 8] = ["ka", "lo", "mi", "ne", "ru", "sa", "to", "vi"];

/// A small random corpus over a few bins. Some tokens contain digits or
/// stray hyphens so the character filter has something to reject.
pub fn random_corpus(rng: &mut impl Rng, n_bins: usize, max_sentences: usize, n_words: usize) -> Corpus {
    let mut words: Vec<String> = (0..n_words)
        .map(|i| format!("{}{}", SYLLABLES[i % 8], SYLLABLES[(i / 8) % 8]))
        .collect();
    words.push("x9".into());
    words.push("-ab".into());
    words.push("co-op".into());
    let n = rng.random_range(n_bins..=max_sentences.max(n_bins));
    let sentences = (0..n)
        .map(|i| {
            let len = rng.random_range(1..12);
            Sentence {
                tokens: (0..len)
                    // Skewed draw so some words clear the count threshold and some do not.
                    .map(|_| {
                        let u: f64 = rng.random();
                        words[((u * u) * words.len() as f64) as usize].clone()
                    })
                    .collect(),
                bin: if i < n_bins { i } else { rng.random_range(0..n_bins) },
            }
        })
        .collect();
    let labels = (0..n_bins).map(|b| format!("{}", 1900 + 10 * b)).collect();
    Corpus::new(labels, sentences, Provenance::Genuine).unwrap()
}

/// Direct window tally over one bin's sentences (or all of them), keeping
/// only tokens for which `keep` holds and deleting the rest first.
pub fn tally(corpus: &Corpus, bin: Option<usize>, window: usize, keep: impl Fn(&str) -> bool) -> Tally {
    let mut out = Tally::new();
    for s in corpus.sentences() {
        if bin.is_some_and(|b| b != s.bin) {
            continue;
        }
        let toks: Vec<&String> = s.tokens.iter().filter(|t| keep(t)).collect();
        for i in 0..toks.len() {
            for j in 0..toks.len() {
                if i != j && i.abs_diff(j) <= window {
                    *out.entry((toks[i].clone(), toks[j].clone())).or_default() += 1;
                }
            }
        }
    }
    out
}

/// Shifted, smoothed PPMI of a tally, evaluated cell by cell from the
/// textbook formula.
pub fn ppmi_reference(t: &Tally, alpha: f64, k: f64) -> BTreeMap<(String, String), f64> {
    let mut row: BTreeMap<&str, f64> = BTreeMap::new();
    let mut col: BTreeMap<&str, f64> = BTreeMap::new();
    for ((w, c), &n) in t {
        *row.entry(w).or_default() += n as f64;
        *col.entry(c).or_default() += n as f64;
    }
    let z: f64 = col.values().map(|c| c.powf(alpha)).sum();
    t.iter()
        .filter_map(|((w, c), &n)| {
            let p_wc = n as f64 / row.values().sum::<f64>();
            let p_w = row[w.as_str()] / row.values().sum::<f64>();
            let p_c = col[c.as_str()].powf(alpha) / z;
            let v = (p_wc / (p_w * p_c)).ln() - k.ln();
            (v > 0.0).then(|| ((w.clone(), c.clone()), v))
        })
        .collect()
}

/// Haar-distributed orthogonal matrix via QR with sign correction.
pub fn random_orthogonal(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `log σ(w·p) + Σ log σ(−w·n)` written out directly.
pub fn objective_reference(w: &[f64], p: &[f64], negs: &[Vec<f64>]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let ls = |x: f64| -(1.0 + (-x).exp()).ln();
    ls(dot(w, p)) + negs.iter().map(|n| ls(-dot(w, n))).sum::<f64>()
}

/// Central finite difference of `f` at `x` along every coordinate.
pub fn numeric_gradient(x: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
