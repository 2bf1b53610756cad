//! Word–context pair extraction, the common training substrate for both
//! model families.
//!
//! In Alignment mode every bin yields its own stream of plain pairs. In
//! Temporal Referencing mode the whole corpus yields one stream in which
//! target words in the *word* slot are replaced by a time-tagged token
//! (`computer_1920`); context slots always hold plain tokens.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::io::{read_lines, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExtractionMode {
    #[serde(rename = "AL")]
    Alignment,
    #[serde(rename = "TR")]
    TemporalReferencing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    /// Symmetric window radius.
    pub window: usize,
    pub mode: ExtractionMode,
    /// When set, filtered tokens keep occupying window positions instead of
    /// being deleted before windowing.
    pub window_before_deletion: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            window: 5,
            mode: ExtractionMode::Alignment,
            window_before_deletion: false,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Words whose occurrences get time-tagged in Temporal Referencing mode.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TargetSet {
    words: BTreeSet<String>,
}

impl TargetSet {
    /// Fails with the list of offenders when some word is not a valid
    /// vocabulary token.
    pub fn new<I, S>(words: I, vocab: &Vocabulary) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let words: BTreeSet<String> = words.into_iter().map(Into::into).collect();
        let bad: Vec<String> = words
            .iter()
            .filter(|w| !vocab.is_valid(w))
            .cloned()
            .collect();
        if !bad.is_empty() {
            return Err(Error::InvalidTargets(bad));
        }
        Ok(TargetSet { words })
    }

    /// Every valid vocabulary token.
    pub fn all_valid(vocab: &Vocabulary) -> Self {
        TargetSet {
            words: vocab.valid_tokens().map(str::to_string).collect(),
        }
    }

    pub fn contains(&self, w: &str) -> bool {
        self.words.contains(w)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Renders and parses time-tagged tokens `base + separator + bin_label`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalTagger {
    separator: String,
    labels: Vec<String>,
}

impl TemporalTagger {
    /// Picks the shortest run of underscores for which no rendered target
    /// token collides with a token already present in the vocabulary.
    pub fn new(vocab: &Vocabulary, targets: &TargetSet, labels: &[String]) -> Self {
        let mut separator = String::from("_");
        loop {
            let collides = targets.iter().any(|t| {
                labels
                    .iter()
                    .any(|l| vocab.contains(&format!("{t}{separator}{l}")))
            });
            if !collides {
                break;
            }
            separator.insert(0, '_');
        }
        TemporalTagger {
            separator,
            labels: labels.to_vec(),
        }
    }

    pub fn with_separator(separator: impl Into<String>, labels: &[String]) -> Self {
        TemporalTagger {
            separator: separator.into(),
            labels: labels.to_vec(),
        }
    }

    pub fn separator(&self) -> &str {
        &self.separator
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn render(&self, base: &str, bin: usize) -> String {
        format!("{base}{}{}", self.separator, self.labels[bin])
    }

    /// Splits a rendered token into its base word and bin ordinal.
    pub fn parse<'a>(&self, token: &'a str) -> Option<(&'a str, usize)> {
        self.labels.iter().enumerate().find_map(|(i, l)| {
            let base = token.strip_suffix(l.as_str())?.strip_suffix(self.separator.as_str())?;
            // Bases never contain underscores, so a longer separator run
            // would mean this is not our rendering.
            (!base.is_empty() && !base.ends_with('_')).then_some((base, i))
        })
    }

    /// Strips the tag if `token` is a rendered temporal token.
    pub fn base<'a>(&self, token: &'a str) -> &'a str {
        self.parse(token).map_or(token, |(b, _)| b)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            writeln!(w, "separator\t{}", self.separator)?;
            writeln!(w, "bins\t{}", self.labels.join(","))
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut separator = None;
        let mut labels = None;
        for (n, line) in read_lines(path)? {
            match line.split_once('\t') {
                Some(("separator", s)) => separator = Some(s.to_string()),
                Some(("bins", b)) => labels = Some(b.split(',').map(str::to_string).collect()),
                _ if line.is_empty() => {}
                _ => return Err(Error::parse(path, n, "expected `separator` or `bins` line")),
            }
        }
        match (separator, labels) {
            (Some(separator), Some(labels)) => Ok(TemporalTagger { separator, labels }),
            _ => Err(Error::parse(path, 0, "tagging file needs separator and bins")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamScope {
    Bin(String),
    Corpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairRecord {
    pub word: u32,
    pub context: u32,
    pub count: u64,
}

/// A counted multiset of (word, context) pairs.
///
/// Word and context names are each sorted lexicographically, and records are
/// sorted by (word, context), so the record order is the lexicographic order
/// of the rendered pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairStream {
    scope: StreamScope,
    words: Vec<String>,
    contexts: Vec<String>,
    records: Vec<PairRecord>,
}

impl PairStream {
    /// Builds a stream from arbitrary (word, context, count) triples,
    /// aggregating duplicates and dropping zero counts.
    pub fn from_counts<I, W, C>(scope: StreamScope, triples: I) -> Self
    where
        I: IntoIterator<Item = (W, C, u64)>,
        W: AsRef<str>,
        C: AsRef<str>,
    {
        let mut agg: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (w, c, n) in triples {
            if n > 0 {
                *agg.entry((w.as_ref().to_string(), c.as_ref().to_string()))
                    .or_default() += n;
            }
        }
        Self::from_sorted_map(scope, agg)
    }

    fn from_sorted_map(scope: StreamScope, agg: BTreeMap<(String, String), u64>) -> Self {
        let words: Vec<String> = agg
            .keys()
            .map(|(w, _)| w.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let contexts: Vec<String> = agg
            .keys()
            .map(|(_, c)| c.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let widx: HashMap<&str, u32> = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), i as u32))
            .collect();
        let cidx: HashMap<&str, u32> = contexts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i as u32))
            .collect();
        let records = agg
            .iter()
            .map(|((w, c), &count)| PairRecord {
                word: widx[w.as_str()],
                context: cidx[c.as_str()],
                count,
            })
            .collect();
        PairStream {
            scope,
            words,
            contexts,
            records,
        }
    }

    pub fn scope(&self) -> &StreamScope {
        &self.scope
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contexts(&self) -> &[String] {
        &self.contexts
    }

    pub fn records(&self) -> &[PairRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Total number of pair occurrences.
    pub fn total(&self) -> u64 {
        self.records.iter().map(|r| r.count).sum()
    }

    /// Occurrences per context token, indexed like [`Self::contexts`].
    pub fn context_marginals(&self) -> Vec<u64> {
        let mut m = vec![0; self.contexts.len()];
        for r in &self.records {
            m[r.context as usize] += r.count;
        }
        m
    }

    /// Iterates over rendered `(word, context, count)` triples in
    /// lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.records.iter().map(|r| {
            (
                self.words[r.word as usize].as_str(),
                self.contexts[r.context as usize].as_str(),
                r.count,
            )
        })
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            for (word, ctx, n) in self.iter() {
                writeln!(w, "{word}\t{ctx}\t{n}")?;
            }
            Ok(())
        })
    }

    pub fn read_tsv(path: &Path, scope: StreamScope) -> Result<Self> {
        let mut agg: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (n, line) in read_lines(path)? {
            if line.is_empty() {
                continue;
            }
            let mut f = line.split('\t');
            let (Some(w), Some(c), Some(k), None) = (f.next(), f.next(), f.next(), f.next())
            else {
                return Err(Error::parse(path, n, "expected word<TAB>context<TAB>count"));
            };
            let k: u64 = k
                .parse()
                .map_err(|_| Error::parse(path, n, "count is not a non-negative integer"))?;
            if k == 0 {
                return Err(Error::parse(path, n, "zero count"));
            }
            *agg.entry((w.to_string(), c.to_string())).or_default() += k;
        }
        Ok(Self::from_sorted_map(scope, agg))
    }
}

type PairCounts = HashMap<(u32, u32), u64>;

/// Extracts pair streams: one per bin in Alignment mode, a single
/// corpus-wide stream in Temporal Referencing mode.
pub fn extract_pairs(
    corpus: &Corpus,
    vocab: &Vocabulary,
    targets: &TargetSet,
    cfg: &ExtractionConfig,
) -> Result<Vec<PairStream>> {
    cfg.validate()?;
    // Re-validate: the caller may have built the set against another vocabulary.
    TargetSet::new(targets.iter(), vocab)?;
    let tagger = TemporalTagger::new(vocab, targets, &corpus.labels());
    extract_pairs_tagged(corpus, vocab, targets, cfg, &tagger)
}

/// Like [`extract_pairs`] with an explicit tagging scheme.
pub fn extract_pairs_tagged(
    corpus: &Corpus,
    vocab: &Vocabulary,
    targets: &TargetSet,
    cfg: &ExtractionConfig,
    tagger: &TemporalTagger,
) -> Result<Vec<PairStream>> {
    cfg.validate()?;
    let n_vocab = vocab.len() as u32;
    let n_bins = corpus.n_bins() as u32;
    // Per-token metadata: Some(is_target) for valid tokens, None otherwise.
    let status: Vec<Option<bool>> = vocab
        .entries()
        .iter()
        .map(|e| e.valid.then(|| targets.contains(&e.token)))
        .collect();
    let tr = cfg.mode == ExtractionMode::TemporalReferencing;

    // Word slots for tagged tokens live above the plain vocabulary range.
    let word_slot = |id: u32, bin: u32| -> u32 {
        if tr && status[id as usize] == Some(true) {
            n_vocab + id * n_bins + bin
        } else {
            id
        }
    };

    let count_sentences = |sentences: &[crate::corpus::Sentence]| -> PairCounts {
        sentences
            .par_chunks(2048)
            .fold(PairCounts::new, |mut acc, chunk| {
                let mut ids: Vec<Option<u32>> = Vec::new();
                for s in chunk {
                    ids.clear();
                    ids.extend(s.tokens.iter().map(|t| {
                        vocab.id(t).filter(|&i| status[i as usize].is_some())
                    }));
                    if !cfg.window_before_deletion {
                        ids.retain(Option::is_some);
                    }
                    let bin = s.bin as u32;
                    for (i, w) in ids.iter().enumerate() {
                        let Some(w) = *w else { continue };
                        let ws = word_slot(w, bin);
                        let lo = i.saturating_sub(cfg.window);
                        let hi = (i + cfg.window + 1).min(ids.len());
                        for (j, c) in ids.iter().enumerate().take(hi).skip(lo) {
                            if j == i {
                                continue;
                            }
                            if let Some(c) = *c {
                                *acc.entry((ws, c)).or_default() += 1;
                            }
                        }
                    }
                }
                acc
            })
            .reduce(PairCounts::new, |a, b| {
                if a.len() >= b.len() {
                    merge(a, b)
                } else {
                    merge(b, a)
                }
            })
    };

    let slot_name = |slot: u32| -> String {
        if slot < n_vocab {
            vocab.entries()[slot as usize].token.clone()
        } else {
            let rel = slot - n_vocab;
            let (id, bin) = (rel / n_bins, rel % n_bins);
            tagger.render(&vocab.entries()[id as usize].token, bin as usize)
        }
    };
    let into_stream = |scope: StreamScope, counts: PairCounts| -> PairStream {
        let mut agg = BTreeMap::new();
        for ((w, c), n) in counts {
            agg.insert((slot_name(w), vocab.entries()[c as usize].token.clone()), n);
        }
        PairStream::from_sorted_map(scope, agg)
    };

    let sentences = corpus.sentences();
    if tr {
        let counts = count_sentences(sentences);
        Ok(vec![into_stream(StreamScope::Corpus, counts)])
    } else {
        let mut out = Vec::with_capacity(corpus.n_bins());
        let mut start = 0;
        for bin in corpus.bins() {
            let end = start + sentences[start..].partition_point(|s| s.bin == bin.ordinal);
            let counts = count_sentences(&sentences[start..end]);
            out.push(into_stream(StreamScope::Bin(bin.label.clone()), counts));
            start = end;
        }
        Ok(out)
    }
}

fn merge(mut a: PairCounts, b: PairCounts) -> PairCounts {
    for (k, v) in b {
        *a.entry(k).or_default() += v;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, PreprocessConfig, Provenance, Sentence};

    fn corpus(bins: &[&[&[&str]]]) -> Corpus {
        let mut sentences = Vec::new();
        for (b, sents) in bins.iter().enumerate() {
            for s in sents.iter() {
                sentences.push(Sentence {
                    tokens: s.iter().map(|t| t.to_string()).collect(),
                    bin: b,
                });
            }
        }
        let labels = (1..=bins.len()).map(|i| format!("t{i}")).collect();
        Corpus::new(labels, sentences, Provenance::Genuine).unwrap()
    }

    fn vocab(c: &Corpus) -> Vocabulary {
        build_vocab(c, &PreprocessConfig { min_count: 1, ..Default::default() })
    }

    fn pairs(s: &PairStream) -> Vec<(String, String, u64)> {
        s.iter().map(|(w, c, n)| (w.to_string(), c.to_string(), n)).collect()
    }

    fn set(items: &[(&str, &str)]) -> Vec<(String, String, u64)> {
        let mut v: Vec<_> = items
            .iter()
            .map(|(w, c)| (w.to_string(), c.to_string(), 1))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn alignment_full_window() {
        let c = corpus(&[&[&["a", "b", "c"]]]);
        let v = vocab(&c);
        let streams = extract_pairs(&c, &v, &TargetSet::default(), &ExtractionConfig::default()).unwrap();
        assert_eq!(streams.len(), 1);
        assert_eq!(streams[0].scope(), &StreamScope::Bin("t1".into()));
        assert_eq!(
            pairs(&streams[0]),
            set(&[("a", "b"), ("a", "c"), ("b", "a"), ("b", "c"), ("c", "a"), ("c", "b")])
        );
    }

    #[test]
    fn temporal_referencing_tags_word_slot_only() {
        let c = corpus(&[&[&["a", "b", "c"]]]);
        let v = vocab(&c);
        let targets = TargetSet::new(["b"], &v).unwrap();
        let cfg = ExtractionConfig {
            mode: ExtractionMode::TemporalReferencing,
            ..Default::default()
        };
        let streams = extract_pairs(&c, &v, &targets, &cfg).unwrap();
        assert_eq!(streams.len(), 1);
        assert_eq!(streams[0].scope(), &StreamScope::Corpus);
        assert_eq!(
            pairs(&streams[0]),
            set(&[("a", "b"), ("a", "c"), ("b_t1", "a"), ("b_t1", "c"), ("c", "a"), ("c", "b")])
        );
    }

    #[test]
    fn window_radius_is_respected() {
        let c = corpus(&[&[&["a", "b", "c", "d"]]]);
        let v = vocab(&c);
        let cfg = ExtractionConfig { window: 1, ..Default::default() };
        let s = &extract_pairs(&c, &v, &TargetSet::default(), &cfg).unwrap()[0];
        assert_eq!(
            pairs(s),
            set(&[("a", "b"), ("b", "a"), ("b", "c"), ("c", "b"), ("c", "d"), ("d", "c")])
        );
    }

    #[test]
    fn invalid_tokens_are_deleted_before_windowing() {
        let c = corpus(&[&[&["a", "x9", "b"]]]);
        let v = vocab(&c);
        let cfg = ExtractionConfig { window: 1, ..Default::default() };
        let s = &extract_pairs(&c, &v, &TargetSet::default(), &cfg).unwrap()[0];
        assert_eq!(pairs(s), set(&[("a", "b"), ("b", "a")]));

        let cfg = ExtractionConfig { window: 1, window_before_deletion: true, ..Default::default() };
        let s = &extract_pairs(&c, &v, &TargetSet::default(), &cfg).unwrap()[0];
        assert!(s.is_empty());
    }

    #[test]
    fn invalid_targets_are_listed() {
        let c = corpus(&[&[&["a", "b9"]]]);
        let v = vocab(&c);
        match TargetSet::new(["a", "b9", "zz"], &v) {
            Err(Error::InvalidTargets(bad)) => assert_eq!(bad, vec!["b9", "zz"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn separator_avoids_collisions() {
        let c = corpus(&[&[&["a", "b", "b_t1"]]]);
        let v = vocab(&c);
        let targets = TargetSet::new(["b"], &v).unwrap();
        let tagger = TemporalTagger::new(&v, &targets, &c.labels());
        assert_eq!(tagger.separator(), "__");
        assert_eq!(tagger.render("b", 0), "b__t1");
        assert_eq!(tagger.parse("b__t1"), Some(("b", 0)));
        assert_eq!(tagger.parse("b_t1"), None);
        assert_eq!(tagger.parse("b"), None);
    }

    #[test]
    fn tagger_file_round_trip() {
        let t = TemporalTagger::with_separator("_", &["1920".into(), "1930".into()]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tagging.tsv");
        t.write(&p).unwrap();
        assert_eq!(TemporalTagger::read(&p).unwrap(), t);
    }

    #[test]
    fn pair_file_round_trip_is_sorted() {
        let s = PairStream::from_counts(
            StreamScope::Corpus,
            [("b", "a", 2), ("a", "c", 1), ("a", "b", 3), ("b", "a", 1)],
        );
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pairs.tsv");
        s.write_tsv(&p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "a\tb\t3\na\tc\t1\nb\ta\t3\n");
        assert_eq!(PairStream::read_tsv(&p, StreamScope::Corpus).unwrap(), s);
    }
}
