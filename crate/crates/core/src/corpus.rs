//! Time-binned corpora: ingestion, vocabulary counting, and the two
//! re-binning procedures (shuffled control and random synthetic bins).

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_lines, write_atomic};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimeBin {
    pub label: String,
    pub ordinal: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub tokens: Vec<String>,
    /// Ordinal of the bin this sentence belongs to.
    pub bin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Genuine,
    Shuffled,
    Synthetic,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Genuine => "genuine",
            Provenance::Shuffled => "shuffled",
            Provenance::Synthetic => "synthetic",
        };
        f.write_str(s)
    }
}

/// An ordered sequence of time bins and their sentences.
///
/// Sentences are kept grouped by bin in chronological order; within a bin
/// their relative order is whatever the constructor received.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    bins: Vec<TimeBin>,
    sentences: Vec<Sentence>,
    provenance: Provenance,
}

impl Corpus {
    pub fn new(
        labels: Vec<String>,
        mut sentences: Vec<Sentence>,
        provenance: Provenance,
    ) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::Config(format!("duplicate bin label `{l}`")));
            }
        }
        for s in &sentences {
            if s.bin >= labels.len() {
                return Err(Error::Config(format!(
                    "sentence refers to bin {} but only {} bins exist",
                    s.bin,
                    labels.len()
                )));
            }
            if s.tokens.is_empty() {
                return Err(Error::Empty("sentence without tokens".into()));
            }
        }
        sentences.sort_by_key(|s| s.bin);
        let bins = labels
            .into_iter()
            .enumerate()
            .map(|(ordinal, label)| TimeBin { label, ordinal })
            .collect();
        Ok(Corpus {
            bins,
            sentences,
            provenance,
        })
    }

    pub fn bins(&self) -> &[TimeBin] {
        &self.bins
    }

    pub fn labels(&self) -> Vec<String> {
        self.bins.iter().map(|b| b.label.clone()).collect()
    }

    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn into_sentences(self) -> Vec<Sentence> {
        self.sentences
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentences_in(&self, bin: usize) -> impl Iterator<Item = &Sentence> {
        self.sentences.iter().filter(move |s| s.bin == bin)
    }

    pub fn bin_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.bins.len()];
        for s in &self.sentences {
            sizes[s.bin] += 1;
        }
        sizes
    }

    pub fn n_tokens(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }

    /// Occurrences of `token` per bin.
    pub fn token_counts_per_bin(&self, token: &str) -> Vec<usize> {
        let mut counts = vec![0; self.bins.len()];
        for s in &self.sentences {
            counts[s.bin] += s.tokens.iter().filter(|t| *t == token).count();
        }
        counts
    }

    /// Writes `<root>/<label>/sentences.txt` for every bin and the bin order
    /// to `<root>/bins.txt`.
    pub fn write_dir(&self, root: &Path) -> Result<()> {
        write_atomic(&root.join(BIN_ORDER_FILE), |w| {
            for bin in &self.bins {
                writeln!(w, "{}", bin.label)?;
            }
            Ok(())
        })?;
        for bin in &self.bins {
            let path = root.join(&bin.label).join("sentences.txt");
            write_atomic(&path, |w| {
                for s in self.sentences_in(bin.ordinal) {
                    writeln!(w, "{}", s.tokens.join(" "))?;
                }
                Ok(())
            })?;
        }
        Ok(())
    }
}

/// File listing a written corpus's bin labels in order.
pub const BIN_ORDER_FILE: &str = "bins.txt";

/// Bin labels recorded by [`Corpus::write_dir`].
pub fn read_bin_order(root: &Path) -> Result<Vec<String>> {
    let labels: Vec<String> = read_lines(&root.join(BIN_ORDER_FILE))?
        .into_iter()
        .map(|(_, l)| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect();
    if labels.is_empty() {
        return Err(Error::Empty(format!("{} lists no bins", root.join(BIN_ORDER_FILE).display())));
    }
    Ok(labels)
}

/// Reads `<root>/<label>/*.txt` for every label in `bin_order`, one sentence
/// per line, whitespace tokenized. Blank lines are skipped.
pub fn ingest(root: &Path, bin_order: &[String], lowercase: bool) -> Result<Corpus> {
    if bin_order.is_empty() {
        return Err(Error::Config("no bin labels given".into()));
    }
    let mut sentences = Vec::new();
    for (ordinal, label) in bin_order.iter().enumerate() {
        let dir = root.join(label);
        if !dir.is_dir() {
            return Err(Error::MissingBin(label.clone()));
        }
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt") && p.is_file())
            .collect();
        files.sort();

        let per_file: Vec<Vec<Sentence>> = files
            .par_iter()
            .map(|f| {
                let lines = read_lines(f)?;
                Ok(lines
                    .into_iter()
                    .filter_map(|(_, line)| {
                        let tokens: Vec<String> = line
                            .split_whitespace()
                            .map(|t| if lowercase { t.to_lowercase() } else { t.to_string() })
                            .collect();
                        (!tokens.is_empty()).then_some(Sentence {
                            tokens,
                            bin: ordinal,
                        })
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        let before = sentences.len();
        sentences.extend(per_file.into_iter().flatten());
        if sentences.len() == before {
            return Err(Error::EmptyBin(label.clone()));
        }
    }
    Corpus::new(bin_order.to_vec(), sentences, Provenance::Genuine)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub min_count: u64,
    pub allow_hyphens: bool,
    pub lowercase: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            min_count: 100,
            allow_hyphens: true,
            lowercase: true,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_count < 1 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        Ok(())
    }
}

/// True when `token` consists of letters, optionally joined by single
/// internal hyphens.
pub fn passes_char_filter(token: &str, allow_hyphens: bool) -> bool {
    if token.is_empty() {
        return false;
    }
    if !allow_hyphens {
        return token.chars().all(char::is_alphabetic);
    }
    token
        .split('-')
        .all(|seg| !seg.is_empty() && seg.chars().all(char::is_alphabetic))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub token: String,
    pub count: u64,
    pub valid: bool,
}

/// Token counts over the whole corpus, with ids assigned by descending
/// count (ties broken lexicographically).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    fn from_entries(entries: Vec<VocabEntry>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.token.clone(), i as u32))
            .collect();
        Vocabulary { entries, index }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn entry(&self, token: &str) -> Option<&VocabEntry> {
        self.id(token).map(|i| &self.entries[i as usize])
    }

    pub fn count(&self, token: &str) -> u64 {
        self.entry(token).map_or(0, |e| e.count)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn is_valid(&self, token: &str) -> bool {
        self.entry(token).is_some_and(|e| e.valid)
    }

    pub fn valid_tokens(&self) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(|e| e.valid)
            .map(|e| e.token.as_str())
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            for (id, e) in self.entries.iter().enumerate() {
                writeln!(w, "{}\t{}\t{}\t{}", e.token, id, e.count, u8::from(e.valid))?;
            }
            Ok(())
        })
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (line_no, line) in read_lines(path)? {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(path, line_no, "expected 4 tab-separated fields"));
            }
            let id: usize = fields[1]
                .parse()
                .map_err(|_| Error::parse(path, line_no, "bad id"))?;
            if id != entries.len() {
                return Err(Error::parse(path, line_no, "ids must be dense and sorted"));
            }
            let count: u64 = fields[2]
                .parse()
                .map_err(|_| Error::parse(path, line_no, "bad count"))?;
            let valid = match fields[3] {
                "0" => false,
                "1" => true,
                _ => return Err(Error::parse(path, line_no, "valid flag must be 0 or 1")),
            };
            entries.push(VocabEntry {
                token: fields[0].to_string(),
                count,
                valid,
            });
        }
        Ok(Vocabulary::from_entries(entries))
    }
}

/// Counts every token over all bins pooled and flags the ones passing the
/// frequency and character filters.
pub fn build_vocab(corpus: &Corpus, cfg: &PreprocessConfig) -> Vocabulary {
    let counts = corpus
        .sentences()
        .par_chunks(4096)
        .fold(HashMap::<&str, u64>::new, |mut acc, chunk| {
            for s in chunk {
                for t in &s.tokens {
                    *acc.entry(t.as_str()).or_default() += 1;
                }
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });
    let mut entries: Vec<VocabEntry> = counts
        .into_iter()
        .map(|(token, count)| VocabEntry {
            valid: count >= cfg.min_count && passes_char_filter(token, cfg.allow_hyphens),
            token: token.to_string(),
            count,
        })
        .collect();
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.token.cmp(&b.token)));
    Vocabulary::from_entries(entries)
}

/// Pools all sentences and deals them back to the bins at random, keeping
/// each bin's size. This is the noise-only control condition.
pub fn shuffle_control(corpus: &Corpus, seed: u64) -> Result<Corpus> {
    if corpus.n_bins() < 2 {
        return Err(Error::Config("shuffling needs at least two bins".into()));
    }
    let sizes = corpus.bin_sizes();
    let mut pool: Vec<Vec<String>> = corpus.sentences.iter().map(|s| s.tokens.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let mut it = pool.into_iter();
    let mut sentences = Vec::with_capacity(corpus.len());
    for (bin, &n) in sizes.iter().enumerate() {
        sentences.extend(it.by_ref().take(n).map(|tokens| Sentence { tokens, bin }));
    }
    Corpus::new(corpus.labels(), sentences, Provenance::Shuffled)
}

/// Randomly partitions all sentences into `n_bins` bins of near-equal size,
/// labelled `t1` … `tn`.
pub fn assign_random_bins(corpus: &Corpus, n_bins: usize, seed: u64) -> Result<Corpus> {
    if n_bins < 2 {
        return Err(Error::Config("need at least two bins".into()));
    }
    if corpus.len() < n_bins {
        return Err(Error::Config(format!(
            "{} sentences cannot fill {n_bins} bins",
            corpus.len()
        )));
    }
    let mut pool: Vec<Vec<String>> = corpus.sentences.iter().map(|s| s.tokens.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let base = pool.len() / n_bins;
    let extra = pool.len() % n_bins;
    let mut it = pool.into_iter();
    let mut sentences = Vec::with_capacity(corpus.len());
    for bin in 0..n_bins {
        let n = base + usize::from(bin < extra);
        sentences.extend(it.by_ref().take(n).map(|tokens| Sentence { tokens, bin }));
    }
    let labels = (1..=n_bins).map(|i| format!("t{i}")).collect();
    Corpus::new(labels, sentences, Provenance::Synthetic)
}
