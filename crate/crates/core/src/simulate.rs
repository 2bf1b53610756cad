//! Synthetic semantic change: donor contexts are moved into a recipient
//! word's later bins on a fixed schedule, with frequency-matched controls.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence, Vocabulary};
use crate::error::{Error, Result};
use crate::evaluate::WordClass;
use crate::io::{read_lines, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Related,
    Unrelated,
    Control,
}

impl Relation {
    pub fn class(self) -> WordClass {
        match self {
            Relation::Related => WordClass::ChangeRelated,
            Relation::Unrelated => WordClass::ChangeUnrelated,
            Relation::Control => WordClass::Stable,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Related => "related",
            Relation::Unrelated => "unrelated",
            Relation::Control => "control",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "related" => Ok(Relation::Related),
            "unrelated" => Ok(Relation::Unrelated),
            "control" => Ok(Relation::Control),
            _ => Err(Error::Config(format!("unknown relation `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectionPair {
    pub recipient: String,
    pub donor: String,
    pub relation: Relation,
}

impl InjectionPair {
    pub fn new(recipient: impl Into<String>, donor: impl Into<String>, relation: Relation) -> Result<Self> {
        let (recipient, donor) = (recipient.into(), donor.into());
        match (relation, recipient == donor) {
            (Relation::Control, false) => Err(Error::Config(format!(
                "control pair must repeat its word, got {recipient} / {donor}"
            ))),
            (Relation::Related | Relation::Unrelated, true) => Err(Error::Config(format!(
                "change pair needs two distinct words, got {recipient} twice"
            ))),
            _ => Ok(InjectionPair { recipient, donor, relation }),
        }
    }

    pub fn control(word: impl Into<String>) -> Self {
        let w = word.into();
        InjectionPair { recipient: w.clone(), donor: w, relation: Relation::Control }
    }
}

/// Injection ratio per bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct InjectionSchedule {
    ratios: Vec<f64>,
}

impl Default for InjectionSchedule {
    fn default() -> Self {
        InjectionSchedule { ratios: vec![0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0] }
    }
}

impl TryFrom<Vec<f64>> for InjectionSchedule {
    type Error = Error;
    fn try_from(ratios: Vec<f64>) -> Result<Self> {
        InjectionSchedule::new(ratios)
    }
}

impl From<InjectionSchedule> for Vec<f64> {
    fn from(s: InjectionSchedule) -> Self {
        s.ratios
    }
}

impl InjectionSchedule {
    pub fn new(ratios: Vec<f64>) -> Result<Self> {
        if ratios.len() < 2 {
            return Err(Error::Config("schedule needs at least two bins".into()));
        }
        if ratios[0] != 0.0 {
            return Err(Error::Config("schedule must start at 0".into()));
        }
        if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::Config("schedule ratios must lie in [0, 1]".into()));
        }
        if ratios.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("schedule must be non-decreasing".into()));
        }
        Ok(InjectionSchedule { ratios })
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn n_bins(&self) -> usize {
        self.ratios.len()
    }

    /// 1-based consecutive-comparison steps across which the ratio changes.
    pub fn gold_steps(&self) -> Vec<usize> {
        (1..self.ratios.len())
            .filter(|&k| self.ratios[k] != self.ratios[k - 1])
            .collect()
    }

    /// `round_half_up(ratio × base)` per bin.
    pub fn quotas(&self, base: f64) -> Vec<usize> {
        self.ratios.iter().map(|r| (r * base + 0.5).floor() as usize).collect()
    }
}

/// Reference volume a ratio of 1 corresponds to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuotaBase {
    /// Recipient's mean per-bin sentence count.
    #[default]
    RecipientMean,
    /// Donor's mean per-bin sentence count.
    DonorMean,
}

/// How held-out recipient sentences are dealt back to bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinAssignment {
    /// Each sentence independently uniform over bins.
    #[default]
    Multinomial,
    /// Shuffled, then dealt round-robin so bin sizes differ by at most one.
    Balanced,
}

/// Where stable control words come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlSource {
    /// An unused valid word of closest frequency, one per change pair.
    #[default]
    FrequencyMatched,
    /// The recipient itself; only usable in a separate control corpus.
    Recipient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InjectionConfig {
    pub schedule: InjectionSchedule,
    pub quota_base: QuotaBase,
    pub assignment: BinAssignment,
    pub controls: ControlSource,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        InjectionConfig {
            schedule: InjectionSchedule::default(),
            quota_base: QuotaBase::RecipientMean,
            assignment: BinAssignment::Multinomial,
            controls: ControlSource::FrequencyMatched,
        }
    }
}

/// Tokenised sentences held out per listed word.
pub type Pools = BTreeMap<String, Vec<Vec<String>>>;

#[derive(Debug, Clone)]
pub struct HeldOut {
    pub corpus: Corpus,
    pub pools: Pools,
    /// Listed words that never occurred.
    pub empty: Vec<String>,
    /// Sentences filed under more than one listed word.
    pub multi_filed: usize,
}

/// Removes every sentence that contains a listed word and files it under
/// each listed word it contains.
pub fn hold_out(corpus: &Corpus, words: &[String]) -> Result<HeldOut> {
    let listed: HashSet<&str> = words.iter().map(String::as_str).collect();
    let mut pools: Pools = words.iter().map(|w| (w.clone(), Vec::new())).collect();
    let mut kept = Vec::with_capacity(corpus.len());
    let mut multi_filed = 0;
    for s in corpus.sentences() {
        let hits: BTreeSet<&str> = s
            .tokens
            .iter()
            .map(String::as_str)
            .filter(|t| listed.contains(t))
            .collect();
        if hits.is_empty() {
            kept.push(s.clone());
            continue;
        }
        if hits.len() > 1 {
            multi_filed += 1;
        }
        for h in hits {
            pools.get_mut(h).expect("listed word").push(s.tokens.clone());
        }
    }
    let empty: Vec<String> = pools
        .iter()
        .filter(|(_, p)| p.is_empty())
        .map(|(w, _)| w.clone())
        .collect();
    for w in &empty {
        warn!("no sentences contain `{w}`");
    }
    Ok(HeldOut {
        corpus: Corpus::new(corpus.labels(), kept, corpus.provenance())?,
        pools,
        empty,
        multi_filed,
    })
}

/// What happened to one pair during injection.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStats {
    pub pair: InjectionPair,
    pub recipient_pool: usize,
    pub donor_pool: usize,
    /// Pool sentences dropped for containing both words.
    pub discarded_shared: usize,
    pub quotas: Vec<usize>,
    /// Quotas had to be scaled down to fit the donor pool.
    pub scaled: bool,
    pub rewritten_tokens: usize,
    /// Recipient sentences placed in each bin.
    pub recipient_per_bin: Vec<usize>,
}

fn deal(n: usize, n_bins: usize, assignment: BinAssignment, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match assignment {
        BinAssignment::Multinomial => (0..n).map(|_| rng.random_range(0..n_bins)).collect(),
        BinAssignment::Balanced => {
            let mut bins: Vec<usize> = (0..n).map(|i| i % n_bins).collect();
            bins.shuffle(rng);
            bins
        }
    }
}

/// Sentences contributed by one pair, plus bookkeeping.
fn pair_sentences(
    pair: &InjectionPair,
    recipient_pool: &[Vec<String>],
    donor_pool: &[Vec<String>],
    cfg: &InjectionConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Sentence>, PairStats)> {
    let n_bins = cfg.schedule.n_bins();
    let has = |s: &Vec<String>, w: &str| s.iter().any(|t| t == w);
    let (recipients, donors): (Vec<&Vec<String>>, Vec<&Vec<String>>) = if pair.relation == Relation::Control {
        (recipient_pool.iter().collect(), Vec::new())
    } else {
        (
            recipient_pool.iter().filter(|s| !has(s, &pair.donor)).collect(),
            donor_pool.iter().filter(|s| !has(s, &pair.recipient)).collect(),
        )
    };
    let discarded_shared = if pair.relation == Relation::Control {
        0
    } else {
        recipient_pool.len() - recipients.len()
    };
    if recipients.is_empty() {
        return Err(Error::Empty(format!("no sentences for recipient `{}`", pair.recipient)));
    }

    let mut out = Vec::new();
    let mut recipient_per_bin = vec![0; n_bins];
    for (s, bin) in recipients.iter().zip(deal(recipients.len(), n_bins, cfg.assignment, rng)) {
        recipient_per_bin[bin] += 1;
        out.push(Sentence { tokens: (*s).clone(), bin });
    }

    let base = match (cfg.quota_base, pair.relation) {
        (QuotaBase::DonorMean, Relation::Related | Relation::Unrelated) => donors.len() as f64 / n_bins as f64,
        _ => recipients.len() as f64 / n_bins as f64,
    };
    let mut quotas = cfg.schedule.quotas(base);
    let mut scaled = false;
    let mut rewritten_tokens = 0;
    if pair.relation == Relation::Control {
        for (bin, &q) in quotas.iter().enumerate() {
            for _ in 0..q {
                let s = recipients.choose(rng).expect("non-empty");
                out.push(Sentence { tokens: (*s).clone(), bin });
            }
        }
    } else {
        let want: usize = quotas.iter().sum();
        if want > donors.len() {
            let f = donors.len() as f64 / want as f64;
            quotas.iter_mut().for_each(|q| *q = (*q as f64 * f).floor() as usize);
            scaled = true;
            warn!(
                "donor `{}` has {} sentences for {want} quota slots; quotas scaled down",
                pair.donor,
                donors.len()
            );
        }
        let mut order: Vec<usize> = (0..donors.len()).collect();
        order.shuffle(rng);
        let mut it = order.into_iter();
        for (bin, &q) in quotas.iter().enumerate() {
            for i in it.by_ref().take(q) {
                let tokens: Vec<String> = donors[i]
                    .iter()
                    .map(|t| {
                        if *t == pair.donor {
                            rewritten_tokens += 1;
                            pair.recipient.clone()
                        } else {
                            t.clone()
                        }
                    })
                    .collect();
                out.push(Sentence { tokens, bin });
            }
        }
    }
    let stats = PairStats {
        pair: pair.clone(),
        recipient_pool: recipients.len(),
        donor_pool: donors.len(),
        discarded_shared,
        quotas,
        scaled,
        rewritten_tokens,
        recipient_per_bin,
    };
    Ok((out, stats))
}

fn pair_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Injects one pair into a corpus from which the pair's sentences were
/// already held out.
pub fn inject(
    corpus: &Corpus,
    pair: &InjectionPair,
    cfg: &InjectionConfig,
    pools: &Pools,
    seed: u64,
) -> Result<(Corpus, PairStats)> {
    check_bins(corpus, cfg)?;
    let pool = |w: &str| {
        pools
            .get(w)
            .ok_or_else(|| Error::UnknownToken(format!("{w} (no held-out pool)")))
    };
    let (added, stats) = pair_sentences(
        pair,
        pool(&pair.recipient)?,
        pool(&pair.donor)?,
        cfg,
        &mut pair_rng(seed, 0),
    )?;
    let mut sentences = corpus.sentences().to_vec();
    sentences.extend(added);
    Ok((Corpus::new(corpus.labels(), sentences, corpus.provenance())?, stats))
}

fn check_bins(corpus: &Corpus, cfg: &InjectionConfig) -> Result<()> {
    if corpus.n_bins() != cfg.schedule.n_bins() {
        return Err(Error::Config(format!(
            "schedule has {} ratios but corpus has {} bins",
            cfg.schedule.n_bins(),
            corpus.n_bins()
        )));
    }
    Ok(())
}

/// `recipient<TAB>donor<TAB>relation`; blank lines and `#` comments skipped.
pub fn load_pairs(path: &Path) -> Result<Vec<InjectionPair>> {
    let mut out = Vec::new();
    for (n, line) in read_lines(path)? {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let [r, d, rel] = f[..] else {
            return Err(Error::parse(path, n, "expected recipient, donor, relation"));
        };
        let rel: Relation = rel.parse().map_err(|e: Error| Error::parse(path, n, e.to_string()))?;
        out.push(InjectionPair::new(r, d, rel).map_err(|e| Error::parse(path, n, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_pairs(path: &Path, pairs: &[InjectionPair]) -> Result<()> {
    write_atomic(path, |w| {
        for p in pairs {
            writeln!(w, "{}\t{}\t{}", p.recipient, p.donor, p.relation)?;
        }
        Ok(())
    })
}

/// One control per change pair: the unused valid word whose count is
/// closest to the recipient's, ties settled by a seeded shuffle.
pub fn frequency_matched_controls(
    pairs: &[InjectionPair],
    vocab: &Vocabulary,
    exclude: &BTreeSet<String>,
    seed: u64,
) -> Result<Vec<InjectionPair>> {
    let mut used: HashSet<&str> = exclude.iter().map(String::as_str).collect();
    for p in pairs {
        used.insert(&p.recipient);
        used.insert(&p.donor);
    }
    let mut candidates: Vec<&str> = vocab.valid_tokens().filter(|t| !used.contains(t)).collect();
    candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut taken = vec![false; candidates.len()];
    let mut out = Vec::new();
    for p in pairs.iter().filter(|p| p.relation != Relation::Control) {
        let target = vocab.count(&p.recipient);
        let best = (0..candidates.len())
            .filter(|&i| !taken[i])
            .min_by_key(|&i| vocab.count(candidates[i]).abs_diff(target))
            .ok_or_else(|| Error::Empty("not enough unused words for controls".into()))?;
        taken[best] = true;
        out.push(InjectionPair::control(candidates[best]));
    }
    Ok(out)
}

/// Manifest row for one evaluated word.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub word: String,
    pub class: WordClass,
    /// Inclusive 1-based step range where a peak counts as correct; `None` for stable words.
    pub gold_peak_range: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub corpus: Corpus,
    pub manifest: Vec<ManifestEntry>,
    pub stats: Vec<PairStats>,
    pub multi_filed: usize,
}

/// Holds out every pair word, drops sentences that mention more than one of
/// them, and injects all pairs into the remaining corpus.
pub fn build_benchmark(
    corpus: &Corpus,
    pairs: &[InjectionPair],
    cfg: &InjectionConfig,
    seed: u64,
) -> Result<Benchmark> {
    check_bins(corpus, cfg)?;
    let mut words: Vec<String> = Vec::new();
    for p in pairs {
        let own: BTreeSet<&String> = [&p.recipient, &p.donor].into_iter().collect();
        for w in own {
            if words.contains(w) {
                return Err(Error::Config(format!("word `{w}` appears in more than one pair")));
            }
            words.push(w.clone());
        }
    }
    let held = hold_out(corpus, &words)?;
    if let Some(w) = held.empty.first() {
        return Err(Error::Empty(format!("no sentences contain `{w}`")));
    }
    let listed: HashSet<&str> = words.iter().map(String::as_str).collect();
    let single = |pool: &[Vec<String>]| -> Vec<Vec<String>> {
        pool.iter()
            .filter(|s| {
                s.iter()
                    .map(String::as_str)
                    .filter(|t| listed.contains(t))
                    .collect::<HashSet<_>>()
                    .len()
                    == 1
            })
            .cloned()
            .collect()
    };
    let pools: Pools = held.pools.iter().map(|(w, p)| (w.clone(), single(p))).collect();
    let results: Vec<(Vec<Sentence>, PairStats)> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, p)| pair_sentences(p, &pools[&p.recipient], &pools[&p.donor], cfg, &mut pair_rng(seed, i)))
        .collect::<Result<_>>()?;

    let gold = cfg.schedule.gold_steps();
    let range = gold.first().map(|&a| (a, *gold.last().unwrap()));
    let mut sentences = held.corpus.into_sentences();
    let mut stats = Vec::with_capacity(pairs.len());
    let mut manifest = Vec::with_capacity(pairs.len());
    for (added, st) in results {
        sentences.extend(added);
        let class = st.pair.relation.class();
        manifest.push(ManifestEntry {
            word: st.pair.recipient.clone(),
            class,
            gold_peak_range: if class == WordClass::Stable { None } else { range },
        });
        stats.push(st);
    }
    Ok(Benchmark {
        corpus: Corpus::new(corpus.labels(), sentences, corpus.provenance())?,
        manifest,
        stats,
        multi_filed: held.multi_filed,
    })
}

/// `word,class,gold_peak_range`, e.g. `rock,change_related,2-5`.
pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "word,class,gold_peak_range")?;
        for e in entries {
            let range = e.gold_peak_range.map(|(a, b)| format!("{a}-{b}")).unwrap_or_default();
            writeln!(w, "{},{},{}", e.word, e.class, range)?;
        }
        Ok(())
    })
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut lines = read_lines(path)?.into_iter();
    match lines.next() {
        Some((_, h)) if h == "word,class,gold_peak_range" => {}
        _ => return Err(Error::parse(path, 1, "expected header word,class,gold_peak_range")),
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let [word, class, range] = f[..] else {
            return Err(Error::parse(path, n, "expected three fields"));
        };
        let class: WordClass = class.parse().map_err(|e: Error| Error::parse(path, n, e.to_string()))?;
        let gold_peak_range = if range.is_empty() {
            None
        } else {
            let (a, b) = range
                .split_once('-')
                .ok_or_else(|| Error::parse(path, n, "range must be `a-b`"))?;
            let p = |x: &str| x.parse::<usize>().map_err(|_| Error::parse(path, n, "bad range bound"));
            Some((p(a)?, p(b)?))
        };
        out.push(ManifestEntry { word: word.into(), class, gold_peak_range });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Provenance;

    fn corpus_of(rows: &[(&str, usize)], n_bins: usize) -> Corpus {
        let labels = (1..=n_bins).map(|i| format!("t{i}")).collect();
        let sentences = rows
            .iter()
            .map(|(s, bin)| Sentence { tokens: s.split(' ').map(String::from).collect(), bin: *bin })
            .collect();
        Corpus::new(labels, sentences, Provenance::Synthetic).unwrap()
    }

    #[test]
    fn default_quotas() {
        let s = InjectionSchedule::default();
        assert_eq!(s.quotas(700.0 / 7.0), vec![0, 0, 25, 50, 75, 100, 100]);
        assert_eq!(s.gold_steps(), vec![2, 3, 4, 5]);
    }

    #[test]
    fn schedule_validation() {
        assert!(InjectionSchedule::new(vec![0.1, 0.2]).is_err());
        assert!(InjectionSchedule::new(vec![0.0, 0.5, 0.2]).is_err());
        assert!(InjectionSchedule::new(vec![0.0, 1.5]).is_err());
        assert!(InjectionSchedule::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn hold_out_is_exhaustive() {
        let rows: Vec<(String, usize)> = (0..12).map(|i| (format!("the rock {i}"), i % 2)).collect();
        let mut rows: Vec<(&str, usize)> = rows.iter().map(|(s, b)| (s.as_str(), *b)).collect();
        rows.push(("no target here", 0));
        rows.push(("rock and stone", 1));
        let c = corpus_of(&rows, 2);
        let h = hold_out(&c, &["rock".into(), "stone".into(), "absent".into()]).unwrap();
        assert_eq!(h.pools["rock"].len(), 13);
        assert_eq!(h.pools["stone"].len(), 1);
        assert_eq!(h.empty, vec!["absent"]);
        assert_eq!(h.multi_filed, 1);
        assert!(h.corpus.sentences().iter().all(|s| !s.tokens.iter().any(|t| t == "rock")));
        let pooled: usize = h.pools.values().map(Vec::len).sum();
        assert_eq!(pooled + h.corpus.len(), c.len() + h.multi_filed);
    }

    #[test]
    fn inject_rewrites_and_removes_donor() {
        let mut rows = vec![("filler words only", 0)];
        let r: Vec<String> = (0..14).map(|i| format!("a rec {i}")).collect();
        let d: Vec<String> = (0..30).map(|i| format!("don x {i} don")).collect();
        rows.extend(r.iter().map(|s| (s.as_str(), 0)));
        rows.extend(d.iter().map(|s| (s.as_str(), 1)));
        rows.push(("rec with don", 0));
        let c = corpus_of(&rows, 7);
        let h = hold_out(&c, &["rec".into(), "don".into()]).unwrap();
        let pair = InjectionPair::new("rec", "don", Relation::Unrelated).unwrap();
        let (out, st) = inject(&h.corpus, &pair, &InjectionConfig::default(), &h.pools, 3).unwrap();
        assert_eq!(st.discarded_shared, 1);
        assert_eq!(st.quotas, vec![0, 0, 1, 1, 2, 2, 2]);
        assert_eq!(st.rewritten_tokens, 16);
        let n = |w: &str| out.sentences().iter().flat_map(|s| &s.tokens).filter(|t| *t == w).count();
        assert_eq!(n("don"), 0);
        assert_eq!(n("rec"), 14 + 16);
        assert_eq!(out.len(), 1 + 14 + 8);
    }

    #[test]
    fn control_duplicates_without_rewrites() {
        let r: Vec<String> = (0..70).map(|i| format!("w ctl {i}")).collect();
        let rows: Vec<(&str, usize)> = r.iter().map(|s| (s.as_str(), 0)).collect();
        let c = corpus_of(&rows, 7);
        let h = hold_out(&c, &["ctl".into()]).unwrap();
        let (out, st) = inject(&h.corpus, &InjectionPair::control("ctl"), &InjectionConfig::default(), &h.pools, 1).unwrap();
        assert_eq!(st.rewritten_tokens, 0);
        assert_eq!(st.quotas, vec![0, 0, 3, 5, 8, 10, 10]);
        assert_eq!(out.len(), 70 + 36);
    }

    #[test]
    fn scarce_donor_scales_quotas() {
        let r: Vec<String> = (0..70).map(|i| format!("rec {i}")).collect();
        let d: Vec<String> = (0..7).map(|i| format!("don {i}")).collect();
        let mut rows: Vec<(&str, usize)> = r.iter().map(|s| (s.as_str(), 0)).collect();
        rows.extend(d.iter().map(|s| (s.as_str(), 0)));
        let c = corpus_of(&rows, 7);
        let h = hold_out(&c, &["rec".into(), "don".into()]).unwrap();
        let pair = InjectionPair::new("rec", "don", Relation::Related).unwrap();
        let (_, st) = inject(&h.corpus, &pair, &InjectionConfig::default(), &h.pools, 1).unwrap();
        assert!(st.scaled);
        assert!(st.quotas.iter().sum::<usize>() <= 7);
    }

    #[test]
    fn pair_construction_rules() {
        assert!(InjectionPair::new("a", "a", Relation::Related).is_err());
        assert!(InjectionPair::new("a", "b", Relation::Control).is_err());
        assert!(InjectionPair::new("a", "a", Relation::Control).is_ok());
    }

    #[test]
    fn pair_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pairs.tsv");
        std::fs::write(&p, "maker\tcreator\trelated\nshoulders\thorde\tunrelated\nrock\trock\tcontrol\n").unwrap();
        let pairs = load_pairs(&p).unwrap();
        assert_eq!(pairs[0].relation, Relation::Related);
        assert_eq!(pairs[1].relation, Relation::Unrelated);
        assert_eq!(pairs[2], InjectionPair::control("rock"));
        std::fs::write(&p, "a\tb\tcousin\n").unwrap();
        assert!(matches!(load_pairs(&p), Err(Error::Parse { line: 1, .. })));
        std::fs::write(&p, "a\tb\n").unwrap();
        assert!(load_pairs(&p).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let m = vec![
            ManifestEntry { word: "rock".into(), class: WordClass::ChangeRelated, gold_peak_range: Some((2, 5)) },
            ManifestEntry { word: "deer".into(), class: WordClass::Stable, gold_peak_range: None },
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_manifest(&p, &m).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().contains("rock,change_related,2-5"));
        assert_eq!(read_manifest(&p).unwrap(), m);
    }
}
