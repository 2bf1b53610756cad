mod plot;

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use semshift::change::{
    change_report, nearest_neighbors_in, read_change_report, write_change_report, write_neighbor_report, ChangeRow,
    ComparisonMode, ModelOutput,
};
use semshift::config::ExperimentConfig;
use semshift::corpus::{assign_random_bins, build_vocab, ingest, read_bin_order, shuffle_control, Corpus, PreprocessConfig};
use semshift::error::{Error, ErrorKind};
use semshift::evaluate::write_summary;
use semshift::experiment::{
    compare_groups, evaluate_peaks, extract_pair_set, fit_pair_set, load_corpus, load_model, load_pair_set,
    run_exp1, run_exp2, run_exp3, save_model, save_pair_set, write_injection_stats, ModelSettings,
};
use semshift::io::{read_lines, write_string_atomic};
use semshift::pairgen::{ExtractionMode, TargetSet};
use semshift::procrustes::{align_with, DistanceBasis};
use semshift::sgns::DenseSpace;
use semshift::simulate::{build_benchmark, load_pairs, read_manifest, write_manifest};
use semshift::wsc::{load_wsc, Status};

use plot::ChartKind;

#[derive(Parser)]
#[command(name = "semshift", version, about = "Semantic change detection with aligned and temporally referenced vector spaces")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run seed; overrides the configured seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 gives byte-identical reruns.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CorpusArgs {
    /// Corpus root with one sub-directory of `.txt` files per bin.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Bin directories in temporal order; read from `bins.txt` when omitted.
    #[arg(long, value_delimiter = ',')]
    bins: Vec<String>,
    /// Lowercase tokens while reading.
    #[arg(long)]
    lowercase: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Al,
    Tr,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompareArg {
    Consecutive,
    First,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Centered,
    Uncentered,
}

impl From<BasisArg> for DistanceBasis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Centered => DistanceBasis::Centered,
            BasisArg::Uncentered => DistanceBasis::Uncentered,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Read a corpus (or generate the configured desk corpus) and write it with its vocabulary.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Minimum total count for a valid token.
        #[arg(long)]
        min_count: Option<u64>,
    },
    /// Shuffle sentences across bins, keeping bin sizes.
    Shuffle {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Pool all sentences and split them into random bins `t1..tn`.
    Bins {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = 7)]
        n_bins: usize,
    },
    /// Inject synthetic change for recipient/donor pairs.
    Inject {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// `recipient<TAB>donor<TAB>relation` file.
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Extract word-context pairs.
    Pairs {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Target words, one per line.
        #[arg(long)]
        targets: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Al)]
        mode: ModeArg,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        min_count: Option<u64>,
    },
    /// Train SGNS spaces on an extracted pair directory.
    TrainSgns {
        /// Directory written by `pairs`.
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        negatives: Option<usize>,
    },
    /// Build PPMI spaces from an extracted pair directory.
    TrainPpmi {
        /// Directory written by `pairs`.
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Orthogonal Procrustes alignment of space B onto space A.
    Align {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = BasisArg::Centered)]
        basis: BasisArg,
    },
    /// Change series for target words in a trained model.
    Measure {
        /// Model directory written by `train-sgns` or `train-ppmi`.
        #[arg(long)]
        model: PathBuf,
        /// Target words, one per line.
        #[arg(long)]
        targets: PathBuf,
        #[arg(long, value_enum, default_value_t = CompareArg::Consecutive)]
        compare: CompareArg,
        #[arg(long, value_enum)]
        basis: Option<BasisArg>,
        /// Class written to every row.
        #[arg(long, default_value = "target")]
        class: String,
    },
    /// Nearest neighbours of query words in every bin.
    Neighbors {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "query", required = true)]
        queries: Vec<String>,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// Score a change report against gold classes.
    Evaluate {
        /// Change report written by `measure`.
        #[arg(long)]
        report: PathBuf,
        /// Manifest written by `inject`: peak classification.
        #[arg(long, conflicts_with = "testset")]
        manifest: Option<PathBuf>,
        /// Changed/stable testset: group comparison.
        #[arg(long)]
        testset: Option<PathBuf>,
    },
    /// Render a report CSV as an SVG chart.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum, default_value_t = ChartKind::Line)]
        kind: ChartKind,
        #[arg(long)]
        title: Option<String>,
    },
    /// Genuine against shuffled corpus: true change per step.
    Exp1,
    /// Synthetic change benchmark: peak classification.
    Exp2,
    /// Changed against stable testset words.
    Exp3,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Shuffle { .. } => "shuffle",
            Command::Bins { .. } => "bins",
            Command::Inject { .. } => "inject",
            Command::Pairs { .. } => "pairs",
            Command::TrainSgns { .. } => "train-sgns",
            Command::TrainPpmi { .. } => "train-ppmi",
            Command::Align { .. } => "align",
            Command::Measure { .. } => "measure",
            Command::Neighbors { .. } => "neighbors",
            Command::Evaluate { .. } => "evaluate",
            Command::Plot { .. } => "plot",
            Command::Exp1 => "exp1",
            Command::Exp2 => "exp2",
            Command::Exp3 => "exp3",
        }
    }
}

/// Settings shared by all subcommands, from `--config` and the global flags.
struct Ctx {
    config: Option<ExperimentConfig>,
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn out(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| usage("--out is required"))
    }

    fn seed(&self) -> Result<u64> {
        self.seed
            .or_else(|| self.config.as_ref().map(|c| c.seeds[0]))
            .ok_or_else(|| usage("--seed (or a config with seeds) is required"))
    }

    fn settings(&self) -> ModelSettings {
        let mut s = match &self.config {
            Some(c) => ModelSettings::from(c),
            None => ModelSettings {
                extraction: Default::default(),
                sgns: Default::default(),
                ppmi: Default::default(),
                basis: Default::default(),
            },
        };
        if let Some(t) = self.threads {
            s.sgns.threads = t;
        }
        s
    }

    fn preprocess(&self) -> PreprocessConfig {
        self.config.as_ref().map(|c| c.preprocess.clone()).unwrap_or_default()
    }

    fn corpus(&self, args: &CorpusArgs) -> Result<Corpus> {
        match &args.corpus {
            Some(root) => {
                let bins = if args.bins.is_empty() { read_bin_order(root)? } else { args.bins.clone() };
                Ok(ingest(root, &bins, args.lowercase)?)
            }
            None => match &self.config {
                Some(c) => Ok(load_corpus(c)?.corpus),
                None => Err(usage("--corpus (or a config with a corpus section) is required")),
            },
        }
    }

    /// Config for the `exp*` pipelines with flag overrides applied.
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut c = self.config.clone().ok_or_else(|| usage("--config is required"))?;
        if let Some(s) = self.seed {
            c.seeds = vec![s];
        }
        if let Some(t) = self.threads {
            c.sgns.threads = t;
        }
        if let Some(o) = &self.out {
            c.output = Some(o.clone());
        }
        if c.output.is_none() {
            return Err(usage("--out (or `output` in the config) is required"));
        }
        Ok(c)
    }
}

fn usage(msg: &str) -> anyhow::Error {
    anyhow!(Error::Config(msg.to_string()))
}

fn read_words(path: &Path) -> Result<Vec<String>> {
    Ok(read_lines(path)?
        .into_iter()
        .map(|(_, l)| l.trim().to_string())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn targets_for(path: &Path, vocab: &semshift::corpus::Vocabulary) -> Result<TargetSet> {
    let words = read_words(path)?;
    let valid: Vec<&str> = words
        .iter()
        .map(String::as_str)
        .filter(|w| {
            let ok = vocab.is_valid(w);
            if !ok {
                warn!("target `{w}` is not in the valid vocabulary; skipped");
            }
            ok
        })
        .collect();
    Ok(TargetSet::new(valid, vocab)?)
}

/// Renders every known figure CSV in `dir` to `dir/plots/*.svg`.
fn plot_dir(dir: &Path) -> Result<()> {
    let mut csvs: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| dir.display().to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.ends_with(".csv") && (name.starts_with("fig") || name.starts_with("peaks_"))
        })
        .collect();
    csvs.sort();
    if csvs.is_empty() {
        return Ok(());
    }
    let plots = dir.join("plots");
    std::fs::create_dir_all(&plots).with_context(|| plots.display().to_string())?;
    for csv in csvs {
        let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("plot").to_string();
        let kind = if stem.starts_with("peaks_") || stem.starts_with("fig3_") { ChartKind::Bar } else { ChartKind::Line };
        let table = plot::read_table(&csv)?;
        write_string_atomic(&plots.join(format!("{stem}.svg")), &plot::render(&table, kind, &stem))?;
    }
    Ok(())
}

fn run(cmd: &Command, ctx: &Ctx) -> Result<usize> {
    let mut warnings = 0;
    match cmd {
        Command::Ingest { corpus, min_count } => {
            let out = ctx.out()?;
            let c = ctx.corpus(corpus)?;
            let mut pre = ctx.preprocess();
            if let Some(m) = min_count {
                pre.min_count = *m;
            }
            pre.validate()?;
            c.write_dir(out)?;
            build_vocab(&c, &pre).write_tsv(&out.join("vocab.tsv"))?;
            eprintln!("{} sentences, {} tokens in {} bins", c.len(), c.n_tokens(), c.n_bins());
        }
        Command::Shuffle { corpus } => {
            let c = ctx.corpus(corpus)?;
            shuffle_control(&c, ctx.seed()?)?.write_dir(ctx.out()?)?;
        }
        Command::Bins { corpus, n_bins } => {
            let c = ctx.corpus(corpus)?;
            assign_random_bins(&c, *n_bins, ctx.seed()?)?.write_dir(ctx.out()?)?;
        }
        Command::Inject { corpus, pairs } => {
            let out = ctx.out()?;
            let c = ctx.corpus(corpus)?;
            let injection = ctx.config.as_ref().map(|c| c.exp2.injection.clone()).unwrap_or_default();
            let b = build_benchmark(&c, &load_pairs(pairs)?, &injection, ctx.seed()?)?;
            b.corpus.write_dir(out)?;
            write_manifest(&out.join("manifest.csv"), &b.manifest)?;
            write_injection_stats(&out.join("injection.csv"), &b.stats)?;
            warnings += b.stats.iter().filter(|s| s.scaled).count();
        }
        Command::Pairs { corpus, targets, mode, window, min_count } => {
            let c = ctx.corpus(corpus)?;
            let mut pre = ctx.preprocess();
            if let Some(m) = min_count {
                pre.min_count = *m;
            }
            let vocab = build_vocab(&c, &pre);
            let t = targets_for(targets, &vocab)?;
            let mut settings = ctx.settings();
            if let Some(w) = window {
                settings.extraction.window = *w;
            }
            let mode = match mode {
                ModeArg::Al => ExtractionMode::Alignment,
                ModeArg::Tr => ExtractionMode::TemporalReferencing,
            };
            let set = extract_pair_set(&c, &vocab, &t, &settings.extraction, mode)?;
            save_pair_set(ctx.out()?, &set)?;
        }
        Command::TrainSgns { pairs, dim, epochs, negatives } => {
            let mut settings = ctx.settings();
            if let Some(d) = dim {
                settings.sgns.dim = *d;
            }
            if let Some(e) = epochs {
                settings.sgns.epochs = *e;
            }
            if let Some(k) = negatives {
                settings.sgns.negatives_k = *k;
            }
            settings.sgns.validate()?;
            let model = fit_pair_set(&load_pair_set(pairs)?, true, &settings, ctx.seed()?)?;
            save_model(ctx.out()?, &model)?;
        }
        Command::TrainPpmi { pairs } => {
            let model = fit_pair_set(&load_pair_set(pairs)?, false, &ctx.settings(), 0)?;
            save_model(ctx.out()?, &model)?;
        }
        Command::Align { a, b, basis } => {
            let out = ctx.out()?;
            let r = align_with(&DenseSpace::read(a)?, &DenseSpace::read(b)?, (*basis).into())?;
            std::fs::create_dir_all(out).with_context(|| out.display().to_string())?;
            r.write_w(&out.join("w.txt"))?;
            r.write_shared_vocab(&out.join("shared_vocab.txt"))?;
            let res = r.mapped_residual();
            write_summary(
                &out.join("summary.txt"),
                &[
                    ("shared".to_string(), r.shared_vocab.len().to_string()),
                    ("residual".to_string(), format!("{res:.6}")),
                ],
            )?;
        }
        Command::Measure { model, targets, compare, basis, class } => {
            let m = load_model(model)?;
            let words = read_words(targets)?;
            let mode = match compare {
                CompareArg::Consecutive => ComparisonMode::Consecutive,
                CompareArg::First => ComparisonMode::RelativeToFirst,
            };
            let basis = basis.map_or(ctx.settings().basis, Into::into);
            let series = change_report(&m, &words, mode, basis)?;
            for s in series.iter().filter(|s| !s.is_complete()) {
                warn!("`{}` is missing from at least one bin; row marked incomplete", s.word);
                warnings += 1;
            }
            let rows: Vec<ChangeRow> = series.iter().map(|s| ChangeRow::from_series(s, class.as_str())).collect();
            write_change_report(ctx.out()?, &rows)?;
        }
        Command::Neighbors { model, queries, n } => {
            let m = load_model(model)?;
            let mut lists = Vec::new();
            for q in queries {
                let found = match &m {
                    ModelOutput::Tagged { space, tagger } => (0..tagger.labels().len())
                        .filter_map(|b| nearest_neighbors_in(space, &tagger.render(q, b), *n).ok())
                        .collect::<Vec<_>>(),
                    ModelOutput::PerBin { spaces, labels } => spaces
                        .iter()
                        .zip(labels)
                        .filter_map(|(s, l)| {
                            let mut nl = nearest_neighbors_in(s, q, *n).ok()?;
                            nl.query = format!("{q}@{l}");
                            Some(nl)
                        })
                        .collect(),
                };
                if found.is_empty() {
                    warn!("`{q}` is not present in any bin");
                    warnings += 1;
                }
                lists.extend(found);
            }
            write_neighbor_report(ctx.out()?, &lists)?;
        }
        Command::Evaluate { report, manifest, testset } => {
            let out = ctx.out()?;
            std::fs::create_dir_all(out).with_context(|| out.display().to_string())?;
            let rows = read_change_report(report)?;
            match (manifest, testset) {
                (Some(m), None) => {
                    let classes: BTreeMap<String, _> =
                        read_manifest(m)?.into_iter().map(|e| (e.word, e.class)).collect();
                    let e = evaluate_peaks(&rows, &classes)?;
                    warnings += e.incomplete.len();
                    e.write_predictions(&out.join("predictions.csv"))?;
                    write_summary(&out.join("summary.txt"), &e.summary())?;
                }
                (None, Some(t)) => {
                    let entries = load_wsc(t)?;
                    let changed: HashSet<&str> = entries
                        .iter()
                        .filter(|e| e.status == Status::Changed)
                        .map(|e| e.word.as_str())
                        .collect();
                    let listed: HashSet<&str> = entries.iter().map(|e| e.word.as_str()).collect();
                    let rows: Vec<ChangeRow> = rows.into_iter().filter(|r| listed.contains(r.word.as_str())).collect();
                    warnings += rows.iter().filter(|r| r.complete_values().is_none()).count();
                    write_summary(&out.join("summary.txt"), &compare_groups(&rows, &changed).summary())?;
                }
                _ => bail!(usage("give --manifest or --testset")),
            }
        }
        Command::Plot { csv, kind, title } => {
            let table = plot::read_table(csv)?;
            let title = title.clone().unwrap_or_else(|| {
                csv.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string()
            });
            write_string_atomic(ctx.out()?, &plot::render(&table, *kind, &title))?;
        }
        Command::Exp1 => {
            let c = ctx.experiment()?;
            let out = c.output.clone().expect("checked");
            run_exp1(&c)?.write(&out)?;
            plot_dir(&out)?;
        }
        Command::Exp2 => {
            let c = ctx.experiment()?;
            let out = c.output.clone().expect("checked");
            run_exp2(&c)?.write(&out)?;
            plot_dir(&out)?;
        }
        Command::Exp3 => {
            let c = ctx.experiment()?;
            let out = c.output.clone().expect("checked");
            run_exp3(&c)?.write(&out)?;
        }
    }
    Ok(warnings)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()).map(Error::kind) {
        Some(ErrorKind::Usage) => 1,
        Some(ErrorKind::Numeric) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let name = cli.command.name();
    let outcome = (|| -> Result<usize> {
        if let Some(t) = cli.threads {
            if t == 0 {
                return Err(usage("--threads must be at least 1"));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .context("configuring the thread pool")?;
        }
        if let Some(p) = cli.config.as_deref().filter(|p| !p.is_file()) {
            return Err(usage(&format!("config file {} not found", p.display())));
        }
        let config = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
        let ctx = Ctx { config, seed: cli.seed, threads: cli.threads, out: cli.out.clone() };
        run(&cli.command, &ctx)
    })();
    match outcome {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("semshift {name}: done with {n} warning{}", if n == 1 { "" } else { "s" });
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("semshift {name}: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
