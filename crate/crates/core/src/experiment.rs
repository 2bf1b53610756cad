//! End-to-end experiment pipelines composed from the library modules, and
//! the report files they emit.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::change::{
    change_report, nearest_neighbors_in, write_change_report, write_neighbor_report, ChangeRow, ChangeSeries,
    ComparisonMode, ModelOutput, NeighborList, Space,
};
use crate::config::{ExperimentConfig, ExtractionSettings, PairSampling};
use crate::corpus::{assign_random_bins, build_vocab, ingest, shuffle_control, Corpus, Vocabulary};
use crate::desk::{generate, ground_truth, sample_controls, sample_pairs, DeskCorpus};
use crate::error::{Error, Result};
use crate::evaluate::{
    acd_values, classify_peak, diff_percent, interval_histograms, mean_variance, peak_histogram, peak_position,
    score, true_change, welch_t_test, write_summary, AcdReport, ClassificationReport, IntervalHistogram, Label,
    TTest, WordClass, HIST_BINS, HIST_WIDTH,
};
use crate::io::{read_lines, write_atomic, write_string_atomic};
use crate::pairgen::{extract_pairs_tagged, ExtractionMode, PairStream, StreamScope, TargetSet, TemporalTagger};
use crate::ppmi::{count_matrix, ppmi_weight, PpmiConfig, SparseMatrix};
use crate::procrustes::DistanceBasis;
use crate::sgns::{train, DenseSpace, SgnsConfig};
use crate::simulate::{
    build_benchmark, frequency_matched_controls, load_pairs, write_manifest, write_pairs, ControlSource,
    InjectionPair, ManifestEntry, PairStats, Relation,
};
use crate::wsc::{bundled, filter_window, load_wsc, write_wsc, Status, WscEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "PPMI_AL")]
    PpmiAl,
    #[serde(rename = "PPMI_TR")]
    PpmiTr,
    #[serde(rename = "SGNS_AL")]
    SgnsAl,
    #[serde(rename = "SGNS_TR")]
    SgnsTr,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::PpmiAl, ModelKind::PpmiTr, ModelKind::SgnsAl, ModelKind::SgnsTr];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::PpmiAl => "PPMI_AL",
            ModelKind::PpmiTr => "PPMI_TR",
            ModelKind::SgnsAl => "SGNS_AL",
            ModelKind::SgnsTr => "SGNS_TR",
        }
    }

    pub fn mode(self) -> ExtractionMode {
        match self {
            ModelKind::PpmiAl | ModelKind::SgnsAl => ExtractionMode::Alignment,
            ModelKind::PpmiTr | ModelKind::SgnsTr => ExtractionMode::TemporalReferencing,
        }
    }

    pub fn is_sgns(self) -> bool {
        matches!(self, ModelKind::SgnsAl | ModelKind::SgnsTr)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown model `{s}`")))
    }
}

/// Training hyperparameters shared by every model of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSettings {
    pub extraction: ExtractionSettings,
    pub sgns: SgnsConfig,
    pub ppmi: PpmiConfig,
    pub basis: DistanceBasis,
}

impl From<&ExperimentConfig> for ModelSettings {
    fn from(c: &ExperimentConfig) -> Self {
        ModelSettings {
            extraction: c.extraction.clone(),
            sgns: c.sgns.clone(),
            ppmi: c.ppmi.clone(),
            basis: c.basis,
        }
    }
}

/// Independent seed for a numbered sub-task of a run.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Extracted pairs ready for training.
#[derive(Debug, Clone)]
pub enum PairSet {
    Tagged { stream: PairStream, tagger: TemporalTagger },
    PerBin { streams: Vec<PairStream>, labels: Vec<String> },
}

pub fn extract_pair_set(
    corpus: &Corpus,
    vocab: &Vocabulary,
    targets: &TargetSet,
    extraction: &ExtractionSettings,
    mode: ExtractionMode,
) -> Result<PairSet> {
    let labels = corpus.labels();
    let tagger = TemporalTagger::new(vocab, targets, &labels);
    let mut streams = extract_pairs_tagged(corpus, vocab, targets, &extraction.with_mode(mode), &tagger)?;
    Ok(match mode {
        ExtractionMode::TemporalReferencing => PairSet::Tagged { stream: streams.remove(0), tagger },
        ExtractionMode::Alignment => PairSet::PerBin { streams, labels },
    })
}

/// Trains SGNS (`sgns`) or PPMI spaces on every stream of a pair set. Each
/// stream gets its own sub-seed.
pub fn fit_pair_set(pairs: &PairSet, sgns: bool, settings: &ModelSettings, seed: u64) -> Result<ModelOutput> {
    let fit = |stream: &PairStream, bin: u64| -> Result<Space> {
        if sgns {
            let cfg = SgnsConfig { seed: sub_seed(seed, bin), ..settings.sgns.clone() };
            Ok(Space::Dense(train(stream, &cfg)?.words))
        } else {
            Ok(Space::Sparse(ppmi_weight(&count_matrix(stream)?, &settings.ppmi)?))
        }
    };
    match pairs {
        PairSet::Tagged { stream, tagger } => Ok(ModelOutput::Tagged { space: fit(stream, 0)?, tagger: tagger.clone() }),
        PairSet::PerBin { streams, labels } => {
            let spaces = streams
                .iter()
                .enumerate()
                .map(|(b, s)| fit(s, b as u64))
                .collect::<Result<_>>()?;
            Ok(ModelOutput::PerBin { spaces, labels: labels.clone() })
        }
    }
}

/// Extracts pairs for `kind` and trains it.
pub fn train_model(
    kind: ModelKind,
    corpus: &Corpus,
    vocab: &Vocabulary,
    targets: &TargetSet,
    settings: &ModelSettings,
    seed: u64,
) -> Result<ModelOutput> {
    let pairs = extract_pair_set(corpus, vocab, targets, &settings.extraction, kind.mode())?;
    fit_pair_set(&pairs, kind.is_sgns(), settings, seed)
}

fn read_meta(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut meta = BTreeMap::new();
    for (n, line) in read_lines(path)? {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| Error::parse(path, n, "expected `key = value`"))?;
        meta.insert(k.to_string(), v.to_string());
    }
    Ok(meta)
}

fn meta_get<'a>(meta: &'a BTreeMap<String, String>, path: &Path, key: &str) -> Result<&'a str> {
    meta.get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::parse(path, 1, format!("missing `{key}`")))
}

/// Persists a pair set: `pairs.txt` describes the layout, streams are
/// `pairs.tsv` (tagged, with `tagging.tsv`) or `<bin-label>.tsv` (per bin).
pub fn save_pair_set(dir: &Path, pairs: &PairSet) -> Result<()> {
    create_dir(dir)?;
    match pairs {
        PairSet::Tagged { stream, tagger } => {
            stream.write_tsv(&dir.join("pairs.tsv"))?;
            tagger.write(&dir.join("tagging.tsv"))?;
            write_string_atomic(&dir.join("pairs.txt"), "layout = tagged\n")
        }
        PairSet::PerBin { streams, labels } => {
            for (s, l) in streams.iter().zip(labels) {
                s.write_tsv(&dir.join(format!("{l}.tsv")))?;
            }
            write_string_atomic(&dir.join("pairs.txt"), &format!("layout = per_bin\nbins = {}\n", labels.join(",")))
        }
    }
}

pub fn load_pair_set(dir: &Path) -> Result<PairSet> {
    let meta_path = dir.join("pairs.txt");
    let meta = read_meta(&meta_path)?;
    match meta_get(&meta, &meta_path, "layout")? {
        "tagged" => Ok(PairSet::Tagged {
            stream: PairStream::read_tsv(&dir.join("pairs.tsv"), StreamScope::Corpus)?,
            tagger: TemporalTagger::read(&dir.join("tagging.tsv"))?,
        }),
        "per_bin" => {
            let labels: Vec<String> = meta_get(&meta, &meta_path, "bins")?.split(',').map(String::from).collect();
            let streams = labels
                .iter()
                .map(|l| PairStream::read_tsv(&dir.join(format!("{l}.tsv")), StreamScope::Bin(l.clone())))
                .collect::<Result<_>>()?;
            Ok(PairSet::PerBin { streams, labels })
        }
        other => Err(Error::parse(&meta_path, 1, format!("unknown layout `{other}`"))),
    }
}

fn space_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.txt"))
}

fn write_space(path: &Path, s: &Space) -> Result<()> {
    match s {
        Space::Dense(d) => d.write(path),
        Space::Sparse(m) => m.write(path),
    }
}

fn read_space(path: &Path, dense: bool) -> Result<Space> {
    Ok(if dense {
        Space::Dense(DenseSpace::read(path)?)
    } else {
        Space::Sparse(SparseMatrix::read(path)?)
    })
}

/// Persists a trained model: `model.txt` describes the layout, spaces are
/// `space.txt` (tagged, with `tagging.tsv`) or `<bin-label>.txt` (per bin).
pub fn save_model(dir: &Path, model: &ModelOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let kind_of = |s: &Space| if matches!(s, Space::Dense(_)) { "dense" } else { "sparse" };
    match model {
        ModelOutput::Tagged { space, tagger } => {
            write_space(&space_file(dir, "space"), space)?;
            tagger.write(&dir.join("tagging.tsv"))?;
            write_string_atomic(&dir.join("model.txt"), &format!("layout = tagged\nspace = {}\n", kind_of(space)))
        }
        ModelOutput::PerBin { spaces, labels } => {
            for (s, l) in spaces.iter().zip(labels) {
                write_space(&space_file(dir, l), s)?;
            }
            let space = spaces.first().map_or("dense", kind_of);
            write_string_atomic(
                &dir.join("model.txt"),
                &format!("layout = per_bin\nspace = {space}\nbins = {}\n", labels.join(",")),
            )
        }
    }
}

pub fn load_model(dir: &Path) -> Result<ModelOutput> {
    let meta_path = dir.join("model.txt");
    let meta = read_meta(&meta_path)?;
    let get = |k: &str| meta_get(&meta, &meta_path, k);
    let dense = match get("space")? {
        "dense" => true,
        "sparse" => false,
        other => return Err(Error::parse(&meta_path, 1, format!("unknown space `{other}`"))),
    };
    match get("layout")? {
        "tagged" => Ok(ModelOutput::Tagged {
            space: read_space(&space_file(dir, "space"), dense)?,
            tagger: TemporalTagger::read(&dir.join("tagging.tsv"))?,
        }),
        "per_bin" => {
            let labels: Vec<String> = get("bins")?.split(',').map(String::from).collect();
            let spaces = labels
                .iter()
                .map(|l| read_space(&space_file(dir, l), dense))
                .collect::<Result<_>>()?;
            Ok(ModelOutput::PerBin { spaces, labels })
        }
        other => Err(Error::parse(&meta_path, 1, format!("unknown layout `{other}`"))),
    }
}

pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub desk: Option<DeskCorpus>,
}

pub fn load_corpus(cfg: &ExperimentConfig) -> Result<LoadedCorpus> {
    match (&cfg.corpus.path, &cfg.corpus.desk) {
        (Some(p), _) => Ok(LoadedCorpus { corpus: ingest(p, &cfg.corpus.bins, cfg.corpus.lowercase)?, desk: None }),
        (None, Some(d)) => {
            let desk = generate(d)?;
            Ok(LoadedCorpus { corpus: desk.corpus.clone(), desk: Some(desk) })
        }
        (None, None) => Err(Error::Config("no corpus source configured".into())),
    }
}

fn read_word_list(path: &Path) -> Result<Vec<String>> {
    Ok(read_lines(path)?
        .into_iter()
        .map(|(_, l)| l.trim().to_string())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

/// Change pairs and their controls, from a file or sampled from a desk corpus.
fn obtain_pairs(
    sampling: &PairSampling,
    controls: ControlSource,
    desk: Option<&DeskCorpus>,
    vocab: &Vocabulary,
    seed: u64,
) -> Result<(Vec<InjectionPair>, Vec<InjectionPair>)> {
    let all = match (&sampling.file, desk) {
        (Some(f), _) => load_pairs(f)?,
        (None, Some(d)) => sample_pairs(
            d,
            vocab,
            sampling.related,
            sampling.unrelated,
            sampling.min_count,
            sampling.max_count,
            sub_seed(seed, 0),
        )?,
        (None, None) => return Err(Error::Config("a pair file is required for directory corpora".into())),
    };
    let (given_controls, change): (Vec<_>, Vec<_>) = all.into_iter().partition(|p| p.relation == Relation::Control);
    let controls = if !given_controls.is_empty() {
        given_controls
    } else {
        match (controls, desk) {
            (ControlSource::FrequencyMatched, Some(d)) if sampling.file.is_none() => {
                sample_controls(d, vocab, &change, sub_seed(seed, 1))?
            }
            (ControlSource::FrequencyMatched, _) => frequency_matched_controls(&change, vocab, &BTreeSet::new(), sub_seed(seed, 1))?,
            (ControlSource::Recipient, _) => change.iter().map(|p| InjectionPair::control(p.recipient.clone())).collect(),
        }
    };
    Ok((change, controls))
}

fn valid_targets(words: &[String], vocab: &Vocabulary) -> (TargetSet, Vec<String>) {
    let (ok, skipped): (Vec<&String>, Vec<&String>) = words.iter().partition(|w| vocab.is_valid(w));
    for w in &skipped {
        warn!("`{w}` is not in the valid vocabulary; skipped");
    }
    let set = TargetSet::new(ok.iter().map(|s| s.as_str()), vocab).expect("filtered to valid words");
    (set, skipped.into_iter().cloned().collect())
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

fn rows_for(series: &[ChangeSeries], class_of: impl Fn(&str) -> String) -> Vec<ChangeRow> {
    series.iter().map(|s| ChangeRow::from_series(s, class_of(&s.word))).collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_file(dir: &Path, header: &str, lines: &[String], name: &str) -> Result<()> {
    let mut text = String::with_capacity(64 * (lines.len() + 1));
    text.push_str(header);
    text.push('\n');
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    write_string_atomic(&dir.join(name), &text)
}

// ---------------------------------------------------------------- exp1

#[derive(Debug, Clone)]
pub struct Exp1Model {
    pub kind: ModelKind,
    pub genuine: Vec<ChangeSeries>,
    pub shuffled: Vec<ChangeSeries>,
    /// Words complete in both conditions; every statistic below uses these.
    pub words: Vec<String>,
    pub acd_genuine: AcdReport,
    pub acd_shuffled: AcdReport,
    pub true_change: Vec<f64>,
    /// Mean true change over all steps.
    pub collapsed: f64,
    /// Per step, genuine against shuffled per-word distances.
    pub tests: Vec<Option<TTest>>,
    /// Genuine distances relative to the first bin.
    pub intervals: Vec<IntervalHistogram>,
}

#[derive(Debug, Clone)]
pub struct Exp1Result {
    pub labels: Vec<String>,
    pub targets: Vec<String>,
    pub injected: Vec<PairStats>,
    pub models: Vec<Exp1Model>,
}

/// Genuine against shuffled comparison of every model on one corpus.
pub fn run_exp1(cfg: &ExperimentConfig) -> Result<Exp1Result> {
    let seed = cfg.seeds[0];
    let settings = ModelSettings::from(cfg);
    let loaded = load_corpus(cfg)?;
    let (corpus, injected) = if cfg.exp1.inject {
        let vocab0 = build_vocab(&loaded.corpus, &cfg.preprocess);
        let (change, controls) =
            obtain_pairs(&cfg.exp2.pairs, cfg.exp2.injection.controls, loaded.desk.as_ref(), &vocab0, sub_seed(seed, 1))?;
        let pairs: Vec<_> = change.into_iter().chain(controls).collect();
        let b = build_benchmark(&loaded.corpus, &pairs, &cfg.exp2.injection, sub_seed(seed, 2))?;
        (b.corpus, b.stats)
    } else {
        (loaded.corpus, Vec::new())
    };
    let vocab = build_vocab(&corpus, &cfg.preprocess);
    let mut words: Vec<String> = match &cfg.exp1.targets {
        Some(p) => read_word_list(p)?,
        None => {
            let mut v: Vec<String> = vocab.valid_tokens().map(String::from).collect();
            v.sort();
            v.shuffle(&mut ChaCha8Rng::seed_from_u64(sub_seed(seed, 3)));
            v.truncate(cfg.exp1.n_targets);
            v
        }
    };
    words.sort();
    let (targets, _) = valid_targets(&words, &vocab);
    let target_list: Vec<String> = targets.iter().map(String::from).collect();
    let shuffled = shuffle_control(&corpus, sub_seed(seed, 4))?;

    let mut models = Vec::new();
    for (k, &kind) in cfg.models.iter().enumerate() {
        info!("exp1: training {kind}");
        let train_seed = sub_seed(seed, 10 + k as u64);
        let g = train_model(kind, &corpus, &vocab, &targets, &settings, train_seed)?;
        let genuine = change_report(&g, &target_list, ComparisonMode::Consecutive, settings.basis)?;
        let relative = change_report(&g, &target_list, ComparisonMode::RelativeToFirst, settings.basis)?;
        drop(g);
        let s = train_model(kind, &shuffled, &vocab, &targets, &settings, train_seed)?;
        let shuf = change_report(&s, &target_list, ComparisonMode::Consecutive, settings.basis)?;
        drop(s);

        let both: Vec<usize> = (0..target_list.len())
            .filter(|&i| genuine[i].is_complete() && shuf[i].is_complete() && relative[i].is_complete())
            .collect();
        let gv: Vec<Vec<f64>> = both.iter().map(|&i| genuine[i].complete_values().unwrap()).collect();
        let sv: Vec<Vec<f64>> = both.iter().map(|&i| shuf[i].complete_values().unwrap()).collect();
        let acd_genuine = acd_values(&gv)?;
        let acd_shuffled = acd_values(&sv)?;
        let tc = true_change(&acd_genuine, &acd_shuffled)?;
        let tests = (0..tc.len())
            .map(|step| {
                let a: Vec<f64> = gv.iter().map(|v| v[step]).collect();
                let b: Vec<f64> = sv.iter().map(|v| v[step]).collect();
                welch_t_test(&a, &b).ok()
            })
            .collect();
        let rel: Vec<ChangeSeries> = both.iter().map(|&i| relative[i].clone()).collect();
        models.push(Exp1Model {
            kind,
            words: both.iter().map(|&i| target_list[i].clone()).collect(),
            collapsed: tc.iter().sum::<f64>() / tc.len() as f64,
            true_change: tc,
            acd_genuine,
            acd_shuffled,
            tests,
            intervals: interval_histograms(&rel)?,
            genuine,
            shuffled: shuf,
        });
    }
    Ok(Exp1Result { labels: corpus.labels(), targets: target_list, injected, models })
}

fn test_cells(t: &Option<TTest>) -> (String, String) {
    t.map_or((String::new(), String::new()), |t| (fmt6(t.t), format!("{:.3e}", t.p)))
}

impl Exp1Result {
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        let by_kind = |k: ModelKind| self.models.iter().find(|m| m.kind == k);
        let mut table = Vec::new();
        for (fam, al, tr) in [("SGNS", ModelKind::SgnsAl, ModelKind::SgnsTr), ("PPMI", ModelKind::PpmiAl, ModelKind::PpmiTr)] {
            if let (Some(a), Some(t)) = (by_kind(al), by_kind(tr)) {
                table.push(format!("{fam},{},{},{}", fmt6(a.collapsed), fmt6(t.collapsed), fmt6(t.collapsed - a.collapsed)));
            }
        }
        csv_file(dir, "model,align,tr,delta", &table, "table1.csv")?;

        let mut lines = Vec::new();
        for m in &self.models {
            for (k, tc) in m.true_change.iter().enumerate() {
                let (t, p) = test_cells(&m.tests[k]);
                lines.push(format!(
                    "{},{},{},{},{},{},{},{},{},{}",
                    m.kind,
                    k + 1,
                    self.labels[k],
                    self.labels[k + 1],
                    fmt6(m.acd_genuine.means[k]),
                    fmt6(m.acd_shuffled.means[k]),
                    fmt6(*tc),
                    t,
                    p,
                    m.words.len()
                ));
            }
        }
        csv_file(dir, "model,step,from,to,acd_genuine,acd_shuffled,true_change,t,p,n_words", &lines, "true_change.csv")?;

        let mut header = String::from("step");
        for m in &self.models {
            header.push_str(&format!(",{0}_genuine,{0}_shuffled", m.kind));
        }
        let steps = self.labels.len() - 1;
        let lines: Vec<String> = (0..steps)
            .map(|k| {
                let mut l = (k + 1).to_string();
                for m in &self.models {
                    l.push_str(&format!(",{},{}", fmt6(m.acd_genuine.means[k]), fmt6(m.acd_shuffled.means[k])));
                }
                l
            })
            .collect();
        csv_file(dir, &header, &lines, "fig2.csv")?;

        let mut means = Vec::new();
        for m in &self.models {
            let mut header = String::from("distance");
            for h in &m.intervals {
                header.push_str(&format!(",{}-{}", h.bins.0, h.bins.1));
                means.push(format!("{},{},{},{},{}", m.kind, h.bins.0, h.bins.1, fmt6(h.mean), h.n));
            }
            let lines: Vec<String> = (0..HIST_BINS)
                .map(|b| {
                    let mut l = format!("{:.2}", b as f64 * HIST_WIDTH);
                    for h in &m.intervals {
                        l.push_str(&format!(",{}", h.counts[b]));
                    }
                    l
                })
                .collect();
            csv_file(dir, &header, &lines, &format!("fig3_{}.csv", m.kind))?;
            let class = |_: &str| "target".to_string();
            write_change_report(&dir.join(format!("change_{}_genuine.csv", m.kind)), &rows_for(&m.genuine, class))?;
            write_change_report(&dir.join(format!("change_{}_shuffled.csv", m.kind)), &rows_for(&m.shuffled, class))?;
        }
        csv_file(dir, "model,from,to,mean,n", &means, "fig3_means.csv")?;
        write_string_atomic(&dir.join("targets.txt"), &(self.targets.join("\n") + "\n"))?;

        let mut summary = vec![
            ("bins".to_string(), self.labels.join(",")),
            ("targets".to_string(), self.targets.len().to_string()),
            ("injected_pairs".to_string(), self.injected.len().to_string()),
        ];
        for m in &self.models {
            summary.push((format!("{}.words", m.kind), m.words.len().to_string()));
            summary.push((format!("{}.true_change_collapsed", m.kind), fmt6(m.collapsed)));
            for (k, t) in m.tests.iter().enumerate() {
                let (tv, p) = test_cells(t);
                let flag = if t.is_some_and(|t| t.p < 0.01) { " (p<.01)" } else { "" };
                summary.push((format!("{}.step{}.true_change", m.kind, k + 1), fmt6(m.true_change[k])));
                summary.push((format!("{}.step{}.welch", m.kind, k + 1), format!("t={tv} p={p}{flag}")));
            }
        }
        write_summary(&dir.join("summary.txt"), &summary)
    }
}

// ---------------------------------------------------------------- exp2

/// Peak-based classification of change series against gold classes.
#[derive(Debug, Clone)]
pub struct PeakEvaluation {
    /// Complete words with their gold class and peak position.
    pub peaks: Vec<(String, WordClass, usize)>,
    /// Words whose series was incomplete.
    pub incomplete: Vec<String>,
    pub report: ClassificationReport,
    pub change_curve: AcdReport,
    pub stable_curve: AcdReport,
    /// Class averages of the per-word mean distance.
    pub ch_acd: f64,
    pub st_acd: f64,
    pub ch_var: f64,
    pub st_var: f64,
}

fn word_means(vs: &[Vec<f64>]) -> Vec<f64> {
    vs.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect()
}

/// Classifies every complete row by its peak; rows of words without a gold
/// class are an error.
pub fn evaluate_peaks(rows: &[ChangeRow], classes: &BTreeMap<String, WordClass>) -> Result<PeakEvaluation> {
    let mut peaks = Vec::new();
    let mut incomplete = Vec::new();
    let mut items = Vec::new();
    let (mut ch, mut st) = (Vec::new(), Vec::new());
    for r in rows {
        let class = *classes
            .get(&r.word)
            .ok_or_else(|| Error::UnknownToken(format!("{} (no gold class)", r.word)))?;
        let Some(v) = r.complete_values() else {
            incomplete.push(r.word.clone());
            continue;
        };
        let pos = peak_position(&v);
        items.push((class, classify_peak(pos, v.len())));
        peaks.push((r.word.clone(), class, pos));
        if class.gold_label() == Label::Changed {
            ch.push(v)
        } else {
            st.push(v)
        }
    }
    let (ch_acd, ch_var) = mean_variance(&word_means(&ch));
    let (st_acd, st_var) = mean_variance(&word_means(&st));
    Ok(PeakEvaluation {
        report: score(&items)?,
        change_curve: acd_values(&ch)?,
        stable_curve: acd_values(&st)?,
        ch_acd,
        st_acd,
        ch_var,
        st_var,
        peaks,
        incomplete,
    })
}

impl PeakEvaluation {
    /// `word,class,peak,prediction,correct` per complete word.
    pub fn write_predictions(&self, path: &Path) -> Result<()> {
        let len = self.change_curve.means.len().max(self.stable_curve.means.len());
        let lines: Vec<String> = self
            .peaks
            .iter()
            .map(|(w, c, p)| {
                let pred = classify_peak(*p, len);
                let label = if pred == Label::Changed { "changed" } else { "stable" };
                format!("{w},{c},{p},{label},{}", pred == c.gold_label())
            })
            .collect();
        write_lines(path, "word,class,peak,prediction,correct", &lines)
    }

    pub fn summary(&self) -> Vec<(String, String)> {
        let r = &self.report;
        let mut out = Vec::new();
        for c in WordClass::ALL {
            if let Some(a) = r.accuracy(c) {
                out.push((format!("accuracy.{c}"), format!("{a:.4}")));
            }
        }
        out.push(("accuracy.mean_word_weighted".into(), format!("{:.4}", r.mean_word_weighted)));
        out.push(("accuracy.mean_class_unweighted".into(), format!("{:.4}", r.mean_class_unweighted)));
        out.push(("f1".into(), format!("{:.4}", r.f1)));
        out.push(("confusion".into(), format!("tp={} fp={} fn={} tn={}", r.true_positive, r.false_positive, r.false_negative, r.true_negative)));
        out.push(("acd.change".into(), fmt6(self.ch_acd)));
        out.push(("acd.stable".into(), fmt6(self.st_acd)));
        out.push(("incomplete".into(), self.incomplete.len().to_string()));
        out
    }
}

/// Per-word mean distance of changed against stable words.
#[derive(Debug, Clone)]
pub struct GroupComparison {
    pub ch: Vec<f64>,
    pub st: Vec<f64>,
    pub ch_acd: f64,
    pub st_acd: f64,
    pub ch_var: f64,
    pub st_var: f64,
    pub diff: Option<f64>,
    pub test: Option<TTest>,
}

/// Splits complete rows by `changed` membership; incomplete rows are skipped.
pub fn compare_groups(rows: &[ChangeRow], changed: &HashSet<&str>) -> GroupComparison {
    let (mut ch, mut st) = (Vec::new(), Vec::new());
    for r in rows {
        if let Some(v) = r.complete_values() {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            if changed.contains(r.word.as_str()) {
                ch.push(m)
            } else {
                st.push(m)
            }
        }
    }
    let (ch_acd, ch_var) = mean_variance(&ch);
    let (st_acd, st_var) = mean_variance(&st);
    GroupComparison {
        diff: diff_percent(ch_acd, st_acd).ok(),
        test: welch_t_test(&ch, &st).ok(),
        ch,
        st,
        ch_acd,
        st_acd,
        ch_var,
        st_var,
    }
}

impl GroupComparison {
    pub fn summary(&self) -> Vec<(String, String)> {
        let (t, p) = test_cells(&self.test);
        let flag = if self.test.is_some_and(|t| t.p < 0.01) { " (p<.01)" } else { "" };
        vec![
            ("acd.changed".into(), format!("{:.4}", self.ch_acd)),
            ("acd.stable".into(), format!("{:.4}", self.st_acd)),
            ("var.changed".into(), format!("{:.4}", self.ch_var)),
            ("var.stable".into(), format!("{:.4}", self.st_var)),
            ("diff_percent".into(), self.diff.map_or(String::new(), |d| format!("{d:.0}"))),
            ("welch".into(), format!("t={t} p={p}{flag}")),
            ("n.changed".into(), self.ch.len().to_string()),
            ("n.stable".into(), self.st.len().to_string()),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Exp2Model {
    pub kind: ModelKind,
    pub series: Vec<ChangeSeries>,
    pub eval: PeakEvaluation,
}

#[derive(Debug, Clone)]
pub struct Exp2Run {
    pub seed: u64,
    pub pairs: Vec<InjectionPair>,
    pub manifest: Vec<ManifestEntry>,
    pub stats: Vec<PairStats>,
    pub skipped: Vec<String>,
    pub models: Vec<Exp2Model>,
}

/// Seed-averaged scores of one model.
#[derive(Debug, Clone)]
pub struct Exp2Average {
    pub kind: ModelKind,
    pub stable: f64,
    pub unrelated: f64,
    pub related: f64,
    pub mean_word_weighted: f64,
    pub mean_class_unweighted: f64,
    pub f1: f64,
    pub change_curve: Vec<f64>,
    pub stable_curve: Vec<f64>,
    pub ch_acd: f64,
    pub st_acd: f64,
    pub ch_var: f64,
    pub st_var: f64,
    pub change_peaks: Vec<usize>,
    pub stable_peaks: Vec<usize>,
}

impl Exp2Average {
    pub fn diff(&self) -> Option<f64> {
        diff_percent(self.ch_acd, self.st_acd).ok()
    }
}

#[derive(Debug, Clone)]
pub struct Exp2Result {
    pub runs: Vec<Exp2Run>,
    pub averages: Vec<Exp2Average>,
}

/// One seed of the synthetic-change benchmark.
pub fn run_exp2_seed(cfg: &ExperimentConfig, loaded: &LoadedCorpus, seed: u64) -> Result<Exp2Run> {
    let settings = ModelSettings::from(cfg);
    let e = &cfg.exp2;
    let binned = assign_random_bins(&loaded.corpus, e.n_bins, sub_seed(seed, 0))?;
    let vocab0 = build_vocab(&binned, &cfg.preprocess);
    let (change, controls) = obtain_pairs(&e.pairs, e.injection.controls, loaded.desk.as_ref(), &vocab0, sub_seed(seed, 1))?;
    // Recipient controls repeat change words, so they live in a corpus of their own.
    let corpora: Vec<Vec<InjectionPair>> = match (controls.iter().any(|c| change.iter().any(|p| p.recipient == c.recipient)), controls.is_empty()) {
        (true, _) => vec![change.clone(), controls.clone()],
        (false, _) => vec![change.iter().chain(&controls).cloned().collect()],
    };
    let mut manifest = Vec::new();
    let mut stats = Vec::new();
    let mut skipped = Vec::new();
    let mut per_model: Vec<Vec<ChangeSeries>> = vec![Vec::new(); cfg.models.len()];
    for (c, pairs) in corpora.iter().enumerate() {
        let bench = build_benchmark(&binned, pairs, &e.injection, sub_seed(seed, 2 + c as u64))?;
        let vocab = build_vocab(&bench.corpus, &cfg.preprocess);
        let words: Vec<String> = bench.manifest.iter().map(|m| m.word.clone()).collect();
        let (targets, skip) = valid_targets(&words, &vocab);
        let list: Vec<String> = words.iter().filter(|w| targets.contains(w)).cloned().collect();
        for (k, &kind) in cfg.models.iter().enumerate() {
            info!("exp2 seed {seed}: training {kind}");
            let model = train_model(kind, &bench.corpus, &vocab, &targets, &settings, sub_seed(seed, 10 + 16 * c as u64 + k as u64))?;
            per_model[k].extend(change_report(&model, &list, ComparisonMode::Consecutive, settings.basis)?);
        }
        manifest.extend(bench.manifest);
        stats.extend(bench.stats);
        skipped.extend(skip);
    }
    let classes: BTreeMap<String, WordClass> = manifest.iter().map(|m| (m.word.clone(), m.class)).collect();
    let models = cfg
        .models
        .iter()
        .zip(per_model)
        .map(|(&kind, series)| {
            let rows = rows_for(&series, |w| classes[w].to_string());
            Ok(Exp2Model { kind, eval: evaluate_peaks(&rows, &classes)?, series })
        })
        .collect::<Result<_>>()?;
    Ok(Exp2Run {
        seed,
        pairs: change.into_iter().chain(controls).collect(),
        manifest,
        stats,
        skipped,
        models,
    })
}

fn average_runs(runs: &[Exp2Run], kinds: &[ModelKind]) -> Vec<Exp2Average> {
    let n = runs.len() as f64;
    kinds
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let ms: Vec<&Exp2Model> = runs.iter().map(|r| &r.models[k]).collect();
            let avg = |f: &dyn Fn(&Exp2Model) -> f64| ms.iter().map(|m| f(m)).sum::<f64>() / n;
            let acc = |c: WordClass| avg(&|m| m.eval.report.accuracy(c).unwrap_or(f64::NAN));
            let curve = |f: &dyn Fn(&Exp2Model) -> &Vec<f64>| {
                let len = f(ms[0]).len();
                (0..len).map(|i| ms.iter().map(|m| f(m)[i]).sum::<f64>() / n).collect()
            };
            let len = ms[0].eval.change_curve.means.len();
            let peaks = |want: Label| {
                let p: Vec<usize> = ms
                    .iter()
                    .flat_map(|m| m.eval.peaks.iter())
                    .filter(|(_, c, _)| c.gold_label() == want)
                    .map(|(_, _, p)| *p)
                    .collect();
                peak_histogram(&p, len)
            };
            Exp2Average {
                kind,
                stable: acc(WordClass::Stable),
                unrelated: acc(WordClass::ChangeUnrelated),
                related: acc(WordClass::ChangeRelated),
                mean_word_weighted: avg(&|m| m.eval.report.mean_word_weighted),
                mean_class_unweighted: avg(&|m| m.eval.report.mean_class_unweighted),
                f1: avg(&|m| m.eval.report.f1),
                change_curve: curve(&|m| &m.eval.change_curve.means),
                stable_curve: curve(&|m| &m.eval.stable_curve.means),
                ch_acd: avg(&|m| m.eval.ch_acd),
                st_acd: avg(&|m| m.eval.st_acd),
                ch_var: avg(&|m| m.eval.ch_var),
                st_var: avg(&|m| m.eval.st_var),
                change_peaks: peaks(Label::Changed),
                stable_peaks: peaks(Label::Stable),
            }
        })
        .collect()
}

/// Synthetic-change benchmark over every configured seed.
pub fn run_exp2(cfg: &ExperimentConfig) -> Result<Exp2Result> {
    let loaded = load_corpus(cfg)?;
    let runs = cfg
        .seeds
        .iter()
        .map(|&s| run_exp2_seed(cfg, &loaded, s))
        .collect::<Result<Vec<_>>>()?;
    let averages = average_runs(&runs, &cfg.models);
    Ok(Exp2Result { runs, averages })
}

/// One row per injected pair: pools, quotas and realised recipient counts.
pub fn write_injection_stats(path: &Path, stats: &[PairStats]) -> Result<()> {
    let lines: Vec<String> = stats
        .iter()
        .map(|s| {
            let q: Vec<String> = s.quotas.iter().map(ToString::to_string).collect();
            let r: Vec<String> = s.recipient_per_bin.iter().map(ToString::to_string).collect();
            format!(
                "{},{},{},{},{},{},{},{},{}",
                s.pair.recipient,
                s.pair.donor,
                s.pair.relation,
                s.recipient_pool,
                s.donor_pool,
                s.discarded_shared,
                q.join(" "),
                r.join(" "),
                s.scaled
            )
        })
        .collect();
    write_lines(
        path,
        "recipient,donor,relation,recipient_pool,donor_pool,discarded_shared,quotas,recipient_per_bin,scaled",
        &lines,
    )
}

fn table2_lines(rows: &[(&str, Vec<f64>)]) -> Vec<String> {
    rows.iter()
        .map(|(name, v)| {
            let cells: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
            format!("{name},{}", cells.join(","))
        })
        .collect()
}

fn model_header(first: &str, kinds: impl Iterator<Item = ModelKind>) -> String {
    let mut h = first.to_string();
    for k in kinds {
        h.push(',');
        h.push_str(k.name());
    }
    h
}

impl Exp2Result {
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        let a = &self.averages;
        let header = model_header("row", a.iter().map(|m| m.kind));
        let col = |f: &dyn Fn(&Exp2Average) -> f64| a.iter().map(f).collect::<Vec<f64>>();
        csv_file(
            dir,
            &header,
            &table2_lines(&[
                ("Stable", col(&|m| m.stable)),
                ("Unrelated", col(&|m| m.unrelated)),
                ("Related", col(&|m| m.related)),
                ("Mean", col(&|m| m.mean_word_weighted)),
                ("F1", col(&|m| m.f1)),
            ]),
            "table2.csv",
        )?;
        csv_file(
            dir,
            &header,
            &table2_lines(&[
                ("CH", col(&|m| m.ch_acd)),
                ("ST", col(&|m| m.st_acd)),
                ("DIFF", col(&|m| m.diff().unwrap_or(f64::NAN))),
                ("var_CH", col(&|m| m.ch_var)),
                ("var_ST", col(&|m| m.st_var)),
            ]),
            "table4.csv",
        )?;
        let steps = a.first().map_or(0, |m| m.change_curve.len());
        for (name, f) in [
            ("fig4_change.csv", (&|m: &Exp2Average| m.change_curve.clone()) as &dyn Fn(&Exp2Average) -> Vec<f64>),
            ("fig4_stable.csv", &|m: &Exp2Average| m.stable_curve.clone()),
        ] {
            let curves: Vec<Vec<f64>> = a.iter().map(f).collect();
            let lines: Vec<String> = (0..steps)
                .map(|s| {
                    let cells: Vec<String> = curves.iter().map(|c| fmt6(c[s])).collect();
                    format!("{},{}", s + 1, cells.join(","))
                })
                .collect();
            csv_file(dir, &model_header("step", a.iter().map(|m| m.kind)), &lines, name)?;
        }
        let sgns: Vec<&Exp2Average> = a.iter().filter(|m| m.kind.is_sgns()).collect();
        if !sgns.is_empty() {
            let lines: Vec<String> = (0..steps)
                .map(|s| {
                    let cells: Vec<String> = sgns.iter().map(|m| fmt6(m.stable_curve[s])).collect();
                    format!("{},{}", s + 1, cells.join(","))
                })
                .collect();
            csv_file(dir, &model_header("step", sgns.iter().map(|m| m.kind)), &lines, "fig5.csv")?;
        }
        for m in a {
            let lines: Vec<String> = (0..steps)
                .map(|s| format!("{},{},{}", s + 1, m.change_peaks[s], m.stable_peaks[s]))
                .collect();
            csv_file(dir, "position,change,stable", &lines, &format!("peaks_{}.csv", m.kind))?;
        }

        let mut summary = vec![("seeds".to_string(), self.runs.iter().map(|r| r.seed.to_string()).collect::<Vec<_>>().join(","))];
        for run in &self.runs {
            let sd = dir.join(format!("seed_{}", run.seed));
            create_dir(&sd)?;
            write_pairs(&sd.join("pairs.tsv"), &run.pairs)?;
            write_manifest(&sd.join("manifest.csv"), &run.manifest)?;
            write_injection_stats(&sd.join("injection.csv"), &run.stats)?;
            let classes: BTreeMap<&str, WordClass> = run.manifest.iter().map(|m| (m.word.as_str(), m.class)).collect();
            for m in &run.models {
                let class = |w: &str| classes[w].to_string();
                write_change_report(&sd.join(format!("change_{}.csv", m.kind)), &rows_for(&m.series, class))?;
            }
            let ms = &run.models;
            let col = |f: &dyn Fn(&Exp2Model) -> f64| ms.iter().map(f).collect::<Vec<f64>>();
            let acc = |c: WordClass| col(&move |m: &Exp2Model| m.eval.report.accuracy(c).unwrap_or(f64::NAN));
            csv_file(
                &sd,
                &model_header("row", ms.iter().map(|m| m.kind)),
                &table2_lines(&[
                    ("Stable", acc(WordClass::Stable)),
                    ("Unrelated", acc(WordClass::ChangeUnrelated)),
                    ("Related", acc(WordClass::ChangeRelated)),
                    ("Mean", col(&|m| m.eval.report.mean_word_weighted)),
                    ("F1", col(&|m| m.eval.report.f1)),
                ]),
                "table2.csv",
            )?;
            summary.push((format!("seed_{}.skipped", run.seed), run.skipped.join(" ")));
            summary.push((format!("seed_{}.scaled_quotas", run.seed), run.stats.iter().filter(|s| s.scaled).count().to_string()));
            for m in ms {
                summary.push((format!("seed_{}.{}.evaluated", run.seed, m.kind), m.eval.report.total().to_string()));
            }
        }
        for m in a {
            let p = |k: &str| format!("{}.{k}", m.kind);
            summary.push((p("mean_word_weighted"), format!("{:.4}", m.mean_word_weighted)));
            summary.push((p("mean_class_unweighted"), format!("{:.4}", m.mean_class_unweighted)));
            summary.push((p("f1"), format!("{:.4}", m.f1)));
            summary.push((p("change_curve_peak"), peak_position(&m.change_curve).to_string()));
        }
        write_summary(&dir.join("summary.txt"), &summary)
    }
}

// ---------------------------------------------------------------- exp3

#[derive(Debug, Clone)]
pub struct Exp3Model {
    pub kind: ModelKind,
    pub series: Vec<ChangeSeries>,
    pub groups: GroupComparison,
    pub neighbors: Vec<NeighborList>,
}

#[derive(Debug, Clone)]
pub struct Exp3Result {
    pub testset: Vec<WscEntry>,
    pub skipped: Vec<String>,
    pub models: Vec<Exp3Model>,
}

fn neighbor_lists(model: &ModelOutput, queries: &[String], n: usize) -> Vec<NeighborList> {
    let mut out = Vec::new();
    for q in queries {
        match model {
            ModelOutput::Tagged { space, tagger } => {
                for b in 0..tagger.labels().len() {
                    if let Ok(l) = nearest_neighbors_in(space, &tagger.render(q, b), n) {
                        out.push(l);
                    }
                }
            }
            ModelOutput::PerBin { spaces, labels } => {
                for (s, l) in spaces.iter().zip(labels) {
                    if let Ok(mut nl) = nearest_neighbors_in(s, q, n) {
                        nl.query = format!("{q}@{l}");
                        out.push(nl);
                    }
                }
            }
        }
    }
    out
}

/// Changed against stable words of a testset on a diachronic corpus.
pub fn run_exp3(cfg: &ExperimentConfig) -> Result<Exp3Result> {
    let seed = cfg.seeds[0];
    let settings = ModelSettings::from(cfg);
    let loaded = load_corpus(cfg)?;
    let vocab = build_vocab(&loaded.corpus, &cfg.preprocess);
    let e = &cfg.exp3;
    let mut testset = match (&e.testset, &loaded.desk) {
        (Some(p), _) => load_wsc(p)?,
        (None, Some(d)) => ground_truth(d, &vocab, e.min_count, e.max_count),
        (None, None) => bundled(),
    };
    if let Some([lo, hi]) = e.window {
        testset = filter_window(&testset, lo, hi);
    }
    let words: Vec<String> = testset.iter().map(|t| t.word.clone()).collect();
    let (targets, skipped) = valid_targets(&words, &vocab);
    testset.retain(|t| targets.contains(&t.word));
    let list: Vec<String> = testset.iter().map(|t| t.word.clone()).collect();
    let changed: HashSet<&str> = testset
        .iter()
        .filter(|t| t.status == Status::Changed)
        .map(|t| t.word.as_str())
        .collect();
    let queries: Vec<String> = if e.neighbors.is_empty() {
        let first = |s: Status| testset.iter().find(|t| t.status == s).map(|t| t.word.clone());
        [first(Status::Changed), first(Status::Stable)].into_iter().flatten().collect()
    } else {
        e.neighbors.clone()
    };

    let mut models = Vec::new();
    for (k, &kind) in cfg.models.iter().enumerate() {
        info!("exp3: training {kind}");
        let model = train_model(kind, &loaded.corpus, &vocab, &targets, &settings, sub_seed(seed, 10 + k as u64))?;
        let series = change_report(&model, &list, ComparisonMode::Consecutive, settings.basis)?;
        let groups = compare_groups(&rows_for(&series, |_| String::new()), &changed);
        models.push(Exp3Model {
            kind,
            groups,
            neighbors: neighbor_lists(&model, &queries, e.n_neighbors),
            series,
        });
    }
    Ok(Exp3Result { testset, skipped, models })
}

impl Exp3Result {
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        let ms = &self.models;
        let col = |f: &dyn Fn(&Exp3Model) -> String| ms.iter().map(f).collect::<Vec<_>>().join(",");
        let opt = |x: Option<f64>, f: &dyn Fn(f64) -> String| x.map_or(String::new(), f);
        let lines = vec![
            format!("CH,{}", col(&|m| format!("{:.4}", m.groups.ch_acd))),
            format!("ST,{}", col(&|m| format!("{:.4}", m.groups.st_acd))),
            format!("DIFF,{}", col(&|m| opt(m.groups.diff, &|d| format!("{d:.0}")))),
            format!("var_CH,{}", col(&|m| format!("{:.4}", m.groups.ch_var))),
            format!("var_ST,{}", col(&|m| format!("{:.4}", m.groups.st_var))),
            format!("t,{}", col(&|m| opt(m.groups.test.map(|t| t.t), &fmt6))),
            format!("p,{}", col(&|m| opt(m.groups.test.map(|t| t.p), &|p| format!("{p:.3e}")))),
            format!("n_CH,{}", col(&|m| m.groups.ch.len().to_string())),
            format!("n_ST,{}", col(&|m| m.groups.st.len().to_string())),
        ];
        csv_file(dir, &model_header("row", ms.iter().map(|m| m.kind)), &lines, "table3.csv")?;
        let status: BTreeMap<&str, &str> = self
            .testset
            .iter()
            .map(|t| (t.word.as_str(), if t.status == Status::Changed { "changed" } else { "stable" }))
            .collect();
        for m in ms {
            write_change_report(&dir.join(format!("change_{}.csv", m.kind)), &rows_for(&m.series, |w| status[w].to_string()))?;
            write_neighbor_report(&dir.join(format!("neighbors_{}.csv", m.kind)), &m.neighbors)?;
        }
        write_wsc(&dir.join("testset.tsv"), &self.testset)?;
        let mut summary = vec![
            ("changed".to_string(), self.testset.iter().filter(|t| t.status == Status::Changed).count().to_string()),
            ("stable".to_string(), self.testset.iter().filter(|t| t.status == Status::Stable).count().to_string()),
            ("skipped".to_string(), self.skipped.join(" ")),
        ];
        for m in ms {
            let flag = if m.groups.test.is_some_and(|t| t.p < 0.01) { " (p<.01)" } else { "" };
            let (t, p) = test_cells(&m.groups.test);
            summary.push((format!("{}.diff_percent", m.kind), opt(m.groups.diff, &|d| format!("{d:.0}"))));
            summary.push((format!("{}.welch", m.kind), format!("t={t} p={p}{flag}")));
        }
        write_summary(&dir.join("summary.txt"), &summary)
    }
}

/// Writes the rows of a report file through the atomic writer; used by
/// callers that assemble their own CSVs.
pub fn write_lines(path: &Path, header: &str, lines: &[String]) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "{header}")?;
        for l in lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
        }
        assert!("SGNS".parse::<ModelKind>().is_err());
    }

    #[test]
    fn sub_seeds_differ() {
        assert_ne!(sub_seed(1, 0), sub_seed(1, 1));
        assert_ne!(sub_seed(1, 0), sub_seed(2, 0));
        assert_eq!(sub_seed(5, 3), sub_seed(5, 3));
    }
}
