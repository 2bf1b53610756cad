//! Synthetic desk-scale corpora.
//!
//! Sentences are drawn from a topic mixture. Every content word has a sense
//! profile over topics (a home topic, a secondary topic and a thin uniform
//! spread), with homes dealt round-robin by frequency rank. A sentence on
//! topic `z` picks content words with probability proportional to
//! `frequency × profile[z]`. Drift is a walk: at every bin boundary a fixed
//! share of a word's profile moves to a topic it has not visited before,
//! which changes the contexts it is seen with while leaving its frequency
//! roughly unchanged.

use std::collections::HashSet;

use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Provenance, Sentence, Vocabulary};
use crate::error::{Error, Result};
use crate::simulate::{InjectionPair, Relation};
use crate::wsc::{Status, WscEntry, YearRange};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeskConfig {
    pub seed: u64,
    pub n_bins: usize,
    /// Bin `i` is labelled `first_year + i × year_step`.
    pub first_year: u32,
    pub year_step: u32,
    pub sentences_per_bin: usize,
    pub min_sentence_len: usize,
    pub max_sentence_len: usize,
    pub n_topics: usize,
    pub n_content: usize,
    pub n_function: usize,
    /// Share of tokens that are topic-neutral function words.
    pub function_share: f64,
    pub zipf_exponent: f64,
    pub zipf_offset: f64,
    pub home_weight: f64,
    pub secondary_weight: f64,
    /// Every word drifts by a uniform draw from `[0, background_drift]`,
    /// measured as the profile mass moved away from the first bin's profile.
    pub background_drift: f64,
    /// Fraction of content words given the larger `changed_drift`.
    pub changed_fraction: f64,
    pub changed_drift: f64,
}

impl Default for DeskConfig {
    fn default() -> Self {
        DeskConfig {
            seed: 1,
            n_bins: 7,
            first_year: 1910,
            year_step: 10,
            sentences_per_bin: 12_000,
            min_sentence_len: 8,
            max_sentence_len: 16,
            n_topics: 16,
            n_content: 2_500,
            n_function: 30,
            function_share: 0.3,
            zipf_exponent: 0.8,
            zipf_offset: 10.0,
            home_weight: 0.6,
            secondary_weight: 0.25,
            background_drift: 0.0,
            changed_fraction: 0.0,
            changed_drift: 0.8,
        }
    }
}

impl DeskConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.n_bins < 1 || self.sentences_per_bin < 1 {
            return bad("need at least one bin and one sentence per bin");
        }
        if self.min_sentence_len < 2 || self.max_sentence_len < self.min_sentence_len {
            return bad("sentence lengths must satisfy 2 <= min <= max");
        }
        if self.n_topics < 3 {
            return bad("need at least three topics");
        }
        if self.n_content < 2 || self.n_function < 1 {
            return bad("need content and function words");
        }
        if !(0.0..1.0).contains(&self.function_share) {
            return bad("function_share must lie in [0, 1)");
        }
        if self.home_weight < 0.0 || self.secondary_weight < 0.0 || self.home_weight + self.secondary_weight > 1.0 {
            return bad("home and secondary weights must be non-negative and sum to at most 1");
        }
        for (v, n) in [
            (self.background_drift, "background_drift"),
            (self.changed_fraction, "changed_fraction"),
            (self.changed_drift, "changed_drift"),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{n} must lie in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.n_bins)
            .map(|i| (self.first_year + i as u32 * self.year_step).to_string())
            .collect()
    }
}

/// Latent description of one content word.
#[derive(Debug, Clone, PartialEq)]
pub struct DeskWord {
    pub token: String,
    pub home: usize,
    pub secondary: usize,
    /// Topic adopted at each bin boundary.
    pub drift_path: Vec<usize>,
    /// Profile mass moved by the last bin.
    pub drift: f64,
    pub changed: bool,
}

#[derive(Debug, Clone)]
pub struct DeskCorpus {
    pub corpus: Corpus,
    pub words: Vec<DeskWord>,
    pub function_words: Vec<String>,
}

impl DeskCorpus {
    pub fn word(&self, token: &str) -> Option<&DeskWord> {
        self.words.iter().find(|w| w.token == token)
    }
}

const MAX_REDRAWS: usize = 8;

const ONSETS: [&str; 15] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Distinct pronounceable pseudo-word for every index below 75³.
pub fn pseudo_word(mut i: usize) -> String {
    let n = ONSETS.len() * VOWELS.len();
    let mut s = String::new();
    for _ in 0..3 {
        let k = i % n;
        s.push_str(ONSETS[k / VOWELS.len()]);
        s.push_str(VOWELS[k % VOWELS.len()]);
        i /= n;
    }
    s
}

fn profile(cfg: &DeskConfig, home: usize, secondary: usize) -> Vec<f64> {
    let spread = (1.0 - cfg.home_weight - cfg.secondary_weight) / cfg.n_topics as f64;
    let mut p = vec![spread; cfg.n_topics];
    p[home] += cfg.home_weight;
    p[secondary] += cfg.secondary_weight;
    p
}

fn other_topic(rng: &mut ChaCha8Rng, n: usize, avoid: &[usize]) -> usize {
    loop {
        let z = rng.random_range(0..n);
        if !avoid.contains(&z) {
            return z;
        }
    }
}

/// Profile of `w` in `bin`. Each step keeps `1 − δ` of the previous profile
/// and gives `δ` to the next topic on the path, with `δ` chosen so that the
/// last bin has moved `w.drift` of the mass.
pub fn word_profile(cfg: &DeskConfig, w: &DeskWord, bin: usize) -> Vec<f64> {
    let mut p = profile(cfg, w.home, w.secondary);
    if cfg.n_bins < 2 || w.drift == 0.0 {
        return p;
    }
    let delta = 1.0 - (1.0 - w.drift).powf(1.0 / (cfg.n_bins - 1) as f64);
    for &z in &w.drift_path[..bin] {
        let q = profile(cfg, z, w.secondary);
        p.iter_mut().zip(&q).for_each(|(a, b)| *a = (1.0 - delta) * *a + delta * b);
    }
    p
}

pub fn generate(cfg: &DeskConfig) -> Result<DeskCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let k = cfg.n_topics;

    let words: Vec<DeskWord> = (0..cfg.n_content)
        .map(|i| {
            // Round-robin homes give every topic the same frequency profile.
            let home = i % k;
            let secondary = other_topic(&mut rng, k, &[home]);
            let mut drift_path: Vec<usize> = Vec::with_capacity(cfg.n_bins.saturating_sub(1));
            for _ in 1..cfg.n_bins {
                let mut avoid = vec![home, secondary];
                if k > 2 + drift_path.len() {
                    avoid.extend(&drift_path);
                } else if let Some(&last) = drift_path.last() {
                    avoid.push(last);
                }
                drift_path.push(other_topic(&mut rng, k, &avoid));
            }
            let changed = rng.random::<f64>() < cfg.changed_fraction;
            let drift = if changed {
                cfg.changed_drift
            } else {
                cfg.background_drift * rng.random::<f64>()
            };
            DeskWord {
                token: pseudo_word(cfg.n_function + i),
                home,
                secondary,
                drift_path,
                drift,
                changed,
            }
        })
        .collect();
    let function_words: Vec<String> = (0..cfg.n_function).map(pseudo_word).collect();
    let zipf = |r: usize| (r as f64 + cfg.zipf_offset).powf(-cfg.zipf_exponent);
    let freq: Vec<f64> = (1..=cfg.n_content).map(zipf).collect();
    let function_sampler = WeightedAliasIndex::new((1..=cfg.n_function).map(zipf).collect())
        .map_err(|e| Error::Degenerate(e.to_string()))?;

    // samplers[bin][topic] over content words
    let samplers: Vec<Vec<WeightedAliasIndex<f64>>> = (0..cfg.n_bins)
        .map(|bin| {
            let profiles: Vec<Vec<f64>> = words.iter().map(|w| word_profile(cfg, w, bin)).collect();
            (0..k)
                .map(|z| {
                    let weights = profiles.iter().zip(&freq).map(|(p, f)| f * p[z]).collect();
                    WeightedAliasIndex::new(weights).map_err(|e| Error::Degenerate(e.to_string()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let sentences: Vec<Sentence> = (0..cfg.n_bins)
        .into_par_iter()
        .flat_map_iter(|bin| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(1 + bin as u64);
            let samplers = &samplers[bin];
            let words = &words;
            let function_words = &function_words;
            let function_sampler = &function_sampler;
            (0..cfg.sentences_per_bin)
                .map(move |_| {
                    let z = rng.random_range(0..k);
                    let len = rng.random_range(cfg.min_sentence_len..=cfg.max_sentence_len);
                    let mut seen: Vec<usize> = Vec::with_capacity(len);
                    let tokens = (0..len)
                        .map(|_| {
                            if rng.random::<f64>() < cfg.function_share {
                                return function_words[function_sampler.sample(&mut rng)].clone();
                            }
                            // Content words rarely repeat within a sentence.
                            let mut w = samplers[z].sample(&mut rng);
                            for _ in 0..MAX_REDRAWS {
                                if !seen.contains(&w) {
                                    break;
                                }
                                w = samplers[z].sample(&mut rng);
                            }
                            seen.push(w);
                            words[w].token.clone()
                        })
                        .collect();
                    Sentence { tokens, bin }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let corpus = Corpus::new(cfg.labels(), sentences, Provenance::Synthetic)?;
    Ok(DeskCorpus { corpus, words, function_words })
}

/// Picks recipient/donor pairs among valid content words whose count lies in
/// `[min_count, max_count]`. Donors occur at least as often as their
/// recipient and at most three times as often. Related donors share the
/// recipient's home topic; unrelated donors share none of its main topics.
/// Apart from a related pair's shared home, no two listed words have the
/// same home topic, so they seldom meet in a sentence.
pub fn sample_pairs(
    desk: &DeskCorpus,
    vocab: &Vocabulary,
    n_related: usize,
    n_unrelated: usize,
    min_count: u64,
    max_count: u64,
    seed: u64,
) -> Result<Vec<InjectionPair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<&DeskWord> = desk
        .words
        .iter()
        .filter(|w| !w.changed && vocab.is_valid(&w.token))
        .collect();
    pool.shuffle(&mut rng);
    let mut used: HashSet<&str> = HashSet::new();
    let mut topics: HashSet<usize> = HashSet::new();
    let (mut related, mut unrelated) = (Vec::new(), Vec::new());
    for r in &pool {
        if related.len() == n_related && unrelated.len() == n_unrelated {
            break;
        }
        let c = vocab.count(&r.token);
        if used.contains(r.token.as_str()) || topics.contains(&r.home) || !(min_count..=max_count).contains(&c)
        {
            continue;
        }
        let want_related = match (related.len() < n_related, unrelated.len() < n_unrelated) {
            (true, true) => related.len() <= unrelated.len(),
            (a, _) => a,
        };
        let fits = |d: &&&DeskWord| {
            let dc = vocab.count(&d.token);
            d.token != r.token
                && !used.contains(d.token.as_str())
                && (c..=3 * c).contains(&dc)
                && if want_related {
                    d.home == r.home && d.secondary != r.secondary
                } else {
                    ![r.home, r.secondary].contains(&d.home)
                        && ![r.home, r.secondary].contains(&d.secondary)
                        && !topics.contains(&d.home)
                }
        };
        let Some(d) = pool.iter().find(fits) else { continue };
        used.insert(&r.token);
        used.insert(&d.token);
        topics.extend([r.home, d.home]);
        let (rel, list) = if want_related {
            (Relation::Related, &mut related)
        } else {
            (Relation::Unrelated, &mut unrelated)
        };
        list.push(InjectionPair::new(r.token.clone(), d.token.clone(), rel)?);
    }
    if related.len() < n_related || unrelated.len() < n_unrelated {
        return Err(Error::Empty(format!(
            "found {} related and {} unrelated pairs, wanted {n_related} and {n_unrelated}",
            related.len(),
            unrelated.len()
        )));
    }
    related.extend(unrelated);
    Ok(related)
}

/// One frequency-matched control per change pair, each with a home topic
/// no pair word and no other control uses.
pub fn sample_controls(desk: &DeskCorpus, vocab: &Vocabulary, pairs: &[InjectionPair], seed: u64) -> Result<Vec<InjectionPair>> {
    let mut topics: HashSet<usize> = pairs
        .iter()
        .flat_map(|p| [&p.recipient, &p.donor])
        .filter_map(|w| desk.word(w))
        .map(|w| w.home)
        .collect();
    let mut candidates: Vec<&DeskWord> = desk
        .words
        .iter()
        .filter(|w| !w.changed && vocab.is_valid(&w.token))
        .collect();
    candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = Vec::new();
    for p in pairs.iter().filter(|p| p.relation != Relation::Control) {
        let target = vocab.count(&p.recipient);
        let best = candidates
            .iter()
            .filter(|w| !topics.contains(&w.home))
            .min_by_key(|w| vocab.count(&w.token).abs_diff(target))
            .ok_or_else(|| Error::Empty("no free topic left for a control word".into()))?;
        topics.insert(best.home);
        out.push(InjectionPair::control(best.token.clone()));
    }
    Ok(out)
}

/// Testset of drifting words (changed) and the least-drifting remaining
/// words (stable, 1.5 per changed word), restricted to valid words with
/// count in `[min_count, max_count]`.
pub fn ground_truth(desk: &DeskCorpus, vocab: &Vocabulary, min_count: u64, max_count: u64) -> Vec<WscEntry> {
    let labels = desk.corpus.labels();
    let years = |i: usize| labels[i].parse::<u32>().unwrap_or(i as u32);
    let span = YearRange { start: years(0), end: years(labels.len() - 1), approximate: false };
    let eligible: Vec<&DeskWord> = desk
        .words
        .iter()
        .filter(|w| vocab.is_valid(&w.token) && (min_count..=max_count).contains(&vocab.count(&w.token)))
        .collect();
    let mut out: Vec<WscEntry> = eligible
        .iter()
        .filter(|w| w.changed)
        .map(|w| WscEntry {
            word: w.token.clone(),
            status: Status::Changed,
            change_years: vec![span],
            description: format!("drifts from topic {} through topics {:?}", w.home, w.drift_path),
        })
        .collect();
    let mut stable: Vec<&&DeskWord> = eligible.iter().filter(|w| !w.changed).collect();
    stable.sort_by(|a, b| a.drift.total_cmp(&b.drift).then_with(|| a.token.cmp(&b.token)));
    let n_stable = out.len() * 3 / 2;
    out.extend(stable.into_iter().take(n_stable).map(|w| WscEntry {
        word: w.token.clone(),
        status: Status::Stable,
        change_years: Vec::new(),
        description: String::new(),
    }));
    out
}
