//! Skip-gram with negative sampling, trained directly on pre-extracted
//! (word, context) pairs so that time-tagged tokens are ordinary rows.
//!
//! Parameters live in relaxed atomics. With one worker the run is
//! bit-reproducible for a fixed seed; with several workers updates are
//! applied without synchronisation (Hogwild) and runs may differ.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_sig, read_lines, write_atomic};
use crate::pairgen::PairStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgnsConfig {
    pub dim: usize,
    pub negatives_k: usize,
    pub cds_alpha: f64,
    pub epochs: usize,
    pub lr_initial: f64,
    pub lr_floor: f64,
    pub seed: u64,
    /// 1 selects the deterministic single-worker mode.
    pub threads: usize,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 300,
            negatives_k: 5,
            cds_alpha: 0.75,
            epochs: 1,
            lr_initial: 0.025,
            lr_floor: 1e-4,
            seed: 1,
            threads: 1,
        }
    }
}

impl SgnsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if self.negatives_k < 1 {
            return Err(Error::Config("negatives_k must be at least 1".into()));
        }
        if !(self.cds_alpha > 0.0 && self.cds_alpha <= 1.0) {
            return Err(Error::Config("cds_alpha must lie in (0, 1]".into()));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.lr_floor < self.lr_initial) || self.lr_floor < 0.0 {
            return Err(Error::Config("need 0 <= lr_floor < lr_initial".into()));
        }
        if self.threads < 1 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}

/// Named dense vectors of uniform dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSpace {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f64>,
}

impl DenseSpace {
    pub fn new(tokens: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != tokens.len() * dim {
            return Err(Error::DimensionMismatch {
                left: data.len(),
                right: tokens.len() * dim,
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Degenerate("non-finite vector component".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate token `{t}`")));
            }
        }
        Ok(DenseSpace {
            tokens,
            index,
            dim,
            data,
        })
    }

    pub fn from_rows<S: Into<String>>(rows: Vec<(S, Vec<f64>)>) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.1.len());
        let mut tokens = Vec::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (t, v) in rows {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { left: v.len(), right: dim });
            }
            tokens.push(t.into());
            data.extend(v);
        }
        Self::new(tokens, dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.index_of(token).map(|i| self.row(i))
    }

    /// `<n> <dim>` header, then `token v1 … vd` with 8 significant digits.
    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            writeln!(w, "{} {}", self.tokens.len(), self.dim)?;
            for (i, t) in self.tokens.iter().enumerate() {
                write!(w, "{t}")?;
                for &x in self.row(i) {
                    write!(w, " {}", fmt_sig(x, 8))?;
                }
                writeln!(w)?;
            }
            Ok(())
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let lines = read_lines(path)?;
        let mut it = lines.into_iter();
        let (_, header) = it
            .next()
            .ok_or_else(|| Error::parse(path, 1, "missing header"))?;
        let mut h = header.split_whitespace();
        let (Some(n), Some(d), None) = (h.next(), h.next(), h.next()) else {
            return Err(Error::parse(path, 1, "header must be `<vocab-size> <dim>`"));
        };
        let n: usize = n.parse().map_err(|_| Error::parse(path, 1, "bad vocab size"))?;
        let dim: usize = d.parse().map_err(|_| Error::parse(path, 1, "bad dimension"))?;
        let mut tokens = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * dim);
        for (line_no, line) in it {
            if line.is_empty() {
                continue;
            }
            let mut f = line.split(' ');
            let tok = f.next().unwrap_or_default();
            let before = data.len();
            for x in f {
                let x: f64 = x
                    .parse()
                    .map_err(|_| Error::parse(path, line_no, "bad vector component"))?;
                data.push(x);
            }
            if data.len() - before != dim {
                return Err(Error::parse(path, line_no, format!("expected {dim} components")));
            }
            tokens.push(tok.to_string());
        }
        if tokens.len() != n {
            return Err(Error::parse(path, 1, format!("header announces {n} rows, found {}", tokens.len())));
        }
        Self::new(tokens, dim, data)
    }
}

/// Word vectors plus the companion context table.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsModel {
    pub words: DenseSpace,
    pub contexts: DenseSpace,
}

impl SgnsModel {
    /// Negated per-pair objective (a loss) for a word, its positive context
    /// and a fixed list of negative contexts, all given by row index.
    pub fn pair_loss(&self, word: usize, positive: usize, negatives: &[usize]) -> f64 {
        let negs: Vec<&[f64]> = negatives.iter().map(|&n| self.contexts.row(n)).collect();
        -pair_objective(self.words.row(word), self.contexts.row(positive), &negs)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log σ(v·u⁺) + Σ log σ(−v·u⁻)`.
pub fn pair_objective(word: &[f64], positive: &[f64], negatives: &[&[f64]]) -> f64 {
    log_sigmoid(dot(word, positive))
        + negatives
            .iter()
            .map(|u| log_sigmoid(-dot(word, u)))
            .sum::<f64>()
}

/// Gradient of [`pair_objective`] with respect to every argument.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub word: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn pair_gradient(word: &[f64], positive: &[f64], negatives: &[&[f64]]) -> PairGradient {
    let gp = 1.0 - sigmoid(dot(word, positive));
    let mut gw: Vec<f64> = positive.iter().map(|u| gp * u).collect();
    let mut gneg = Vec::with_capacity(negatives.len());
    for u in negatives {
        let gn = -sigmoid(dot(word, u));
        for (g, x) in gw.iter_mut().zip(u.iter()) {
            *g += gn * x;
        }
        gneg.push(word.iter().map(|v| gn * v).collect());
    }
    PairGradient {
        word: gw,
        positive: word.iter().map(|v| gp * v).collect(),
        negatives: gneg,
    }
}

/// Draws context ids with probability `#(c)^α / Σ #(c')^α`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    alias: WeightedAliasIndex<f64>,
    probs: Vec<f64>,
    rng: ChaCha8Rng,
}

impl NegativeSampler {
    pub fn from_counts(counts: &[u64], alpha: f64, seed: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Config("alpha must lie in (0, 1]".into()));
        }
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(alpha)).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Empty("no context mass to sample from".into()));
        }
        let probs = weights.iter().map(|w| w / total).collect();
        let alias = WeightedAliasIndex::new(weights)
            .map_err(|e| Error::Degenerate(format!("sampler weights: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        Ok(NegativeSampler { alias, probs, rng })
    }

    pub fn sample(&mut self) -> u32 {
        self.alias.sample(&mut self.rng) as u32
    }

    pub fn probability(&self, id: usize) -> f64 {
        self.probs[id]
    }

    pub fn n_outcomes(&self) -> usize {
        self.probs.len()
    }

    /// Same distribution, independent random stream.
    fn fork(&self, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        NegativeSampler {
            alias: self.alias.clone(),
            probs: self.probs.clone(),
            rng,
        }
    }
}

/// Sampler over the context marginals of `pairs`.
pub fn negative_sampler(pairs: &PairStream, alpha: f64, seed: u64) -> Result<NegativeSampler> {
    NegativeSampler::from_counts(&pairs.context_marginals(), alpha, seed)
}

struct Params {
    dim: usize,
    words: Vec<AtomicU64>,
    contexts: Vec<AtomicU64>,
}

#[inline]
fn ld(a: &AtomicU64) -> f64 {
    f64::from_bits(a.load(Ordering::Relaxed))
}

#[inline]
fn st(a: &AtomicU64, x: f64) {
    a.store(x.to_bits(), Ordering::Relaxed)
}

impl Params {
    fn init(n_words: usize, n_contexts: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        let half = 0.5 / dim as f64;
        let words = (0..n_words * dim)
            .map(|_| AtomicU64::new(rng.random_range(-half..half).to_bits()))
            .collect();
        let contexts = (0..n_contexts * dim)
            .map(|_| AtomicU64::new(0f64.to_bits()))
            .collect();
        Params { dim, words, contexts }
    }

    /// One SGD ascent step on a positive pair and its negatives. Returns the
    /// offending dot product if the parameters have blown up.
    fn step(&self, w: usize, targets: &[(u32, f64)], lr: f64, delta: &mut [f64]) -> Result<(), f64> {
        let d = self.dim;
        let v = &self.words[w * d..(w + 1) * d];
        delta.iter_mut().for_each(|x| *x = 0.0);
        for &(c, label) in targets {
            let u = &self.contexts[c as usize * d..(c as usize + 1) * d];
            let mut x = 0.0;
            for i in 0..d {
                x += ld(&v[i]) * ld(&u[i]);
            }
            if !x.is_finite() {
                return Err(x);
            }
            let g = lr * (label - sigmoid(x));
            for i in 0..d {
                let ui = ld(&u[i]);
                delta[i] += g * ui;
                st(&u[i], ui + g * ld(&v[i]));
            }
        }
        for i in 0..d {
            st(&v[i], ld(&v[i]) + delta[i]);
        }
        Ok(())
    }

    fn into_model(self, pairs: &PairStream) -> Result<SgnsModel> {
        let take = |v: Vec<AtomicU64>| v.into_iter().map(|a| f64::from_bits(a.into_inner())).collect();
        Ok(SgnsModel {
            words: DenseSpace::new(pairs.words().to_vec(), self.dim, take(self.words))?,
            contexts: DenseSpace::new(pairs.contexts().to_vec(), self.dim, take(self.contexts))?,
        })
    }
}

fn check_stream(pairs: &PairStream) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::Empty("pair stream has no pairs".into()));
    }
    let mut word_seen = vec![false; pairs.words().len()];
    for r in pairs.records() {
        word_seen[r.word as usize] = true;
    }
    if let Some(i) = word_seen.iter().position(|s| !s) {
        return Err(Error::Empty(format!("token `{}` has no pairs", pairs.words()[i])));
    }
    if let Some(i) = pairs.context_marginals().iter().position(|&m| m == 0) {
        return Err(Error::Empty(format!("context `{}` has no pairs", pairs.contexts()[i])));
    }
    Ok(())
}

/// The parameters `train` starts from for the same stream and config.
pub fn initial_model(pairs: &PairStream, cfg: &SgnsConfig) -> Result<SgnsModel> {
    cfg.validate()?;
    check_stream(pairs)?;
    Params::init(pairs.words().len(), pairs.contexts().len(), cfg.dim, cfg.seed).into_model(pairs)
}

/// Trains word and context vectors on every pair occurrence, visiting
/// occurrences in a seed-determined shuffled order once per epoch, with the
/// learning rate decaying linearly from `lr_initial` to `lr_floor`.
pub fn train(pairs: &PairStream, cfg: &SgnsConfig) -> Result<SgnsModel> {
    cfg.validate()?;
    check_stream(pairs)?;
    let params = Params::init(pairs.words().len(), pairs.contexts().len(), cfg.dim, cfg.seed);
    let sampler = negative_sampler(pairs, cfg.cds_alpha, cfg.seed)?;

    let records = pairs.records();
    let mut order: Vec<u32> = Vec::with_capacity(pairs.total() as usize);
    for (i, r) in records.iter().enumerate() {
        order.extend(std::iter::repeat_n(i as u32, r.count as usize));
    }
    let per_epoch = order.len() as u64;
    let total = per_epoch * cfg.epochs as u64;
    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    order_rng.set_stream(1);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut order_rng);
        let chunk = order.len().div_ceil(cfg.threads);
        let epoch_start = epoch as u64 * per_epoch;
        let results: Vec<Result<(), (u64, f64, u32)>> = std::thread::scope(|s| {
            let handles: Vec<_> = order
                .chunks(chunk)
                .enumerate()
                .map(|(worker, part)| {
                    let mut sampler =
                        sampler.fork(cfg.seed, 2 + (epoch * cfg.threads + worker) as u64);
                    let params = &params;
                    s.spawn(move || {
                        let mut delta = vec![0.0; cfg.dim];
                        let mut targets = Vec::with_capacity(cfg.negatives_k + 1);
                        let span = part.len().max(1) as f64;
                        for (k, &ri) in part.iter().enumerate() {
                            // Workers progress at the same pace, so local
                            // progress stands in for global progress.
                            let done = epoch_start as f64 + (k as f64 / span) * per_epoch as f64;
                            let lr = cfg.lr_initial
                                - (cfg.lr_initial - cfg.lr_floor) * (done / total as f64);
                            let r = records[ri as usize];
                            targets.clear();
                            targets.push((r.context, 1.0));
                            for _ in 0..cfg.negatives_k {
                                targets.push((sampler.sample(), 0.0));
                            }
                            if let Err(x) = params.step(r.word as usize, &targets, lr, &mut delta) {
                                return Err((epoch_start + k as u64, x, ri));
                            }
                        }
                        Ok(())
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        for res in results {
            if let Err((update, x, ri)) = res {
                let r = records[ri as usize];
                return Err(Error::Diverged {
                    update,
                    loss: -log_sigmoid(x),
                    word: pairs.words()[r.word as usize].clone(),
                    context: pairs.contexts()[r.context as usize].clone(),
                });
            }
        }
    }
    params.into_model(pairs)
}
