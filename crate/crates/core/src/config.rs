//! Declarative experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::PreprocessConfig;
use crate::desk::DeskConfig;
use crate::error::{Error, Result};
use crate::experiment::ModelKind;
use crate::pairgen::{ExtractionConfig, ExtractionMode};
use crate::ppmi::PpmiConfig;
use crate::procrustes::DistanceBasis;
use crate::sgns::SgnsConfig;
use crate::simulate::InjectionConfig;

/// Either a directory of per-bin text files or a generated desk corpus.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSource {
    pub path: Option<PathBuf>,
    pub bins: Vec<String>,
    pub lowercase: bool,
    pub desk: Option<DeskConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionSettings {
    pub window: usize,
    pub window_before_deletion: bool,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        let d = ExtractionConfig::default();
        ExtractionSettings { window: d.window, window_before_deletion: d.window_before_deletion }
    }
}

impl ExtractionSettings {
    pub fn with_mode(&self, mode: ExtractionMode) -> ExtractionConfig {
        ExtractionConfig {
            window: self.window,
            mode,
            window_before_deletion: self.window_before_deletion,
        }
    }
}

/// How change pairs are obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairSampling {
    /// Explicit `recipient<TAB>donor<TAB>relation` file; required for directory corpora.
    pub file: Option<PathBuf>,
    pub related: usize,
    pub unrelated: usize,
    pub min_count: u64,
    pub max_count: u64,
}

impl Default for PairSampling {
    fn default() -> Self {
        PairSampling { file: None, related: 20, unrelated: 20, min_count: 300, max_count: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exp1Config {
    /// Size of the random target sample.
    pub n_targets: usize,
    /// Word list (one per line) used instead of a random sample.
    pub targets: Option<PathBuf>,
    /// Inject change pairs (sampled per `[exp2.pairs]`) before measuring.
    pub inject: bool,
}

impl Default for Exp1Config {
    fn default() -> Self {
        Exp1Config { n_targets: 500, targets: None, inject: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exp2Config {
    pub n_bins: usize,
    pub injection: InjectionConfig,
    pub pairs: PairSampling,
}

impl Default for Exp2Config {
    fn default() -> Self {
        Exp2Config { n_bins: 7, injection: InjectionConfig::default(), pairs: PairSampling::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exp3Config {
    /// Testset file; the bundled one for directory corpora, generated ground truth for desk corpora.
    pub testset: Option<PathBuf>,
    /// Reclassify changed words without an event in `[from, to]` as stable.
    pub window: Option<[u32; 2]>,
    /// Query words for neighbour tables; defaults to the first changed and first stable word.
    pub neighbors: Vec<String>,
    pub n_neighbors: usize,
    /// Count range for generated ground truth.
    pub min_count: u64,
    pub max_count: u64,
}

impl Default for Exp3Config {
    fn default() -> Self {
        Exp3Config {
            testset: None,
            window: None,
            neighbors: Vec::new(),
            n_neighbors: 10,
            min_count: 300,
            max_count: u64::MAX,
        }
    }
}

fn all_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: CorpusSource,
    /// Explicit run seeds; exp2 averages over all of them, exp1 and exp3 use the first.
    pub seeds: Vec<u64>,
    #[serde(default = "all_models")]
    pub models: Vec<ModelKind>,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub extraction: ExtractionSettings,
    #[serde(default)]
    pub sgns: SgnsConfig,
    #[serde(default)]
    pub ppmi: PpmiConfig,
    #[serde(default)]
    pub basis: DistanceBasis,
    #[serde(default)]
    pub exp1: Exp1Config,
    #[serde(default)]
    pub exp2: Exp2Config,
    #[serde(default)]
    pub exp3: Exp3Config,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.corpus.path);
        fix(&mut self.exp1.targets);
        fix(&mut self.exp2.pairs.file);
        fix(&mut self.exp3.testset);
        fix(&mut self.output);
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.corpus.path, &self.corpus.desk) {
            (Some(_), Some(_)) => return Err(Error::Config("corpus: give either `path` or `[corpus.desk]`, not both".into())),
            (None, None) => return Err(Error::Config("corpus: `path` or `[corpus.desk]` is required".into())),
            (Some(p), None) => {
                if !p.is_dir() {
                    return Err(Error::Config(format!("corpus path {} is not a directory", p.display())));
                }
                if self.corpus.bins.is_empty() {
                    return Err(Error::Config("corpus: `bins` must list the bin directories in order".into()));
                }
            }
            (None, Some(d)) => d.validate()?,
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("`seeds` must list at least one seed".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("`models` must not be empty".into()));
        }
        for p in [&self.exp1.targets, &self.exp2.pairs.file, &self.exp3.testset].into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        if self.exp2.injection.schedule.n_bins() != self.exp2.n_bins {
            return Err(Error::Config(format!(
                "exp2: schedule has {} ratios for {} bins",
                self.exp2.injection.schedule.n_bins(),
                self.exp2.n_bins
            )));
        }
        self.preprocess.validate()?;
        self.extraction.with_mode(ExtractionMode::Alignment).validate()?;
        self.sgns.validate()?;
        self.ppmi.validate()?;
        Ok(())
    }
}
