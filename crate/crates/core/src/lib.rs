//! Diachronic distributional models for lexical semantic change: pair
//! extraction, PPMI and SGNS spaces, Temporal Referencing and alignment,
//! change measurement, sense-injection benchmarks and their evaluation.

pub mod change;
pub mod config;
pub mod corpus;
pub mod desk;
pub mod error;
pub mod evaluate;
pub mod experiment;
pub mod io;
pub mod pairgen;
pub mod ppmi;
pub mod procrustes;
pub mod sgns;
pub mod simulate;
pub mod wsc;

pub use change::{ChangeSeries, ComparisonMode, ModelOutput, Space};
pub use config::ExperimentConfig;
pub use corpus::{Corpus, Sentence, Vocabulary};
pub use error::{Error, ErrorKind, Result};
pub use evaluate::{Label, WordClass};
pub use experiment::ModelKind;
pub use pairgen::{ExtractionMode, PairStream, TargetSet};
pub use ppmi::SparseMatrix;
pub use procrustes::DistanceBasis;
pub use sgns::DenseSpace;
pub use simulate::{InjectionPair, Relation};
