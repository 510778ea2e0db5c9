//! Command-line front end. `run` takes the argument vector and output
//! streams so it can be driven from tests without spawning a process.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::benchgen::{self, SplitCounts, TrainingOptions, TrainingSources};
use crate::corpus::{Corpus, CorpusFormat};
use crate::evalkit;
use crate::llm::{Backend, HttpBackend, HttpConfig, ScriptedOracle};
use crate::pipeline::{Hanrag, PipelineConfig};
use crate::retriever::Index;
use crate::revelator::{QueryClass, Revelator};

type CmdResult<T = ()> = Result<T, Box<dyn std::error::Error + Send + Sync>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    Http(HttpConfig),
    Scripted { oracle_path: PathBuf },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Queries evaluated concurrently; 0 means the default of 4.
    pub concurrency: usize,
    pub report_path: Option<PathBuf>,
}

/// Contents of the `--config` JSON file. Command-line flags override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub corpus_path: Option<PathBuf>,
    pub corpus_format: Option<CorpusFormat>,
    pub index_path: Option<PathBuf>,
    pub backend: Option<BackendConfig>,
    pub pipeline: PipelineConfig,
    pub evaluation: EvaluationConfig,
}

impl AppConfig {
    pub fn load(path: &Path) -> CmdResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()).into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "hanrag", version, about = "Adaptive retrieval-augmented question answering")]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus and write a normalized JSONL snapshot.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a BM25 index and save it.
    Index {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Answer one query.
    Ask {
        query: String,
        /// Print the full result as JSON.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate the pipeline on a dataset.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        /// Where to write the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Disable a pipeline component. Repeatable.
        #[arg(long, value_enum)]
        ablate: Vec<Ablation>,
        #[arg(long)]
        concurrency: Option<usize>,
        /// Row label in the printed table.
        #[arg(long, default_value = "HANRAG")]
        label: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Synthesize a compound-question benchmark from an entity corpus.
    Benchgen {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        train: usize,
        #[arg(long)]
        dev: usize,
        #[arg(long)]
        test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; must exist.
        #[arg(long)]
        out: PathBuf,
        /// JSON file with sources for the router training sets.
        #[arg(long)]
        training_sources: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        negatives_per_positive: usize,
        #[command(flatten)]
        backend: BackendArgs,
    },
}

#[derive(Debug, Args)]
struct CorpusArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    format: Option<CorpusFormat>,
}

#[derive(Debug, Args)]
struct BackendArgs {
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    /// Oracle table for the scripted backend.
    #[arg(long)]
    oracle: Option<PathBuf>,
    /// Chat-completions URL for the HTTP backend.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Skip the router and treat every query as this class.
    #[arg(long)]
    force_class: Option<QueryClass>,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Http,
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Ablation {
    RelevanceFilter,
    EndingCheck,
    Refiner,
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns 0 on success, 1 on runtime failure, 2 on a usage error.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                2
            } else {
                let _ = write!(out, "{}", e.render());
                0
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> CmdResult {
    let config = match &cli.config {
        Some(path) => AppConfig::load(path)?,
        None => AppConfig::default(),
    };
    match cli.command {
        Command::Ingest { corpus, out: path } => {
            let corpus = load_corpus(&corpus, &config)?;
            corpus.save_snapshot(&path)?;
            writeln!(out, "ingested {} passages into {}", corpus.doc_count(), path.display())?;
        }
        Command::Index { corpus, out: path } => {
            let corpus = load_corpus(&corpus, &config)?;
            let index = Index::build(&corpus);
            index.save(&path)?;
            writeln!(
                out,
                "indexed {} passages ({} terms) into {}",
                index.doc_count(),
                index.vocabulary_size(),
                path.display()
            )?;
        }
        Command::Ask { query, trace, run } => {
            let pipeline = build_pipeline(&run, &config, None)?;
            let result = match pipeline.answer(&query) {
                Ok(r) => r,
                Err(e) => {
                    if let (true, Some(partial)) = (trace, e.partial()) {
                        writeln!(out, "{}", partial.to_json())?;
                    }
                    return Err(e.into());
                }
            };
            if trace {
                writeln!(out, "{}", result.to_json())?;
            } else {
                writeln!(out, "answer: {}", result.answer)?;
                writeln!(out, "class: {}", result.query_class)?;
                writeln!(out, "steps: {}", result.steps)?;
                for w in &result.warnings {
                    writeln!(out, "warning: {w}")?;
                }
            }
        }
        Command::Eval {
            dataset,
            out: report_path,
            ablate,
            concurrency,
            label,
            run,
        } => {
            let examples = evalkit::load_dataset(&dataset)?;
            let pipeline = build_pipeline(&run, &config, Some(&ablate))?;
            let concurrency = concurrency
                .or(Some(config.evaluation.concurrency).filter(|&c| c > 0))
                .unwrap_or(4);
            let report = evalkit::evaluate(&examples, &pipeline, concurrency)?;
            if let Some(path) = report_path.or(config.evaluation.report_path.clone()) {
                std::fs::write(&path, report.to_json() + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
            }
            write!(out, "{}", report.table(&label))?;
        }
        Command::Benchgen {
            corpus,
            train,
            dev,
            test,
            seed,
            out: dir,
            training_sources,
            negatives_per_positive,
            backend,
        } => {
            if !dir.is_dir() {
                return Err(format!("output directory {} does not exist", dir.display()).into());
            }
            let sources = match &training_sources {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                    Some(
                        serde_json::from_str::<TrainingSources>(&text)
                            .map_err(|e| format!("{}: {e}", path.display()))?,
                    )
                }
                None => None,
            };
            let corpus = load_corpus(&corpus, &config)?;
            let backend = build_backend(&backend, &config, &corpus)?;
            let counts = SplitCounts { train, dev, test };
            let bench = benchgen::build_benchmark(&corpus, counts, seed, backend.as_ref())?;
            for path in bench.write(&dir)? {
                writeln!(out, "wrote {}", path.display())?;
            }
            writeln!(out, "{}", serde_json::to_string(&bench.stats)?)?;
            if let Some(mut sources) = sources {
                sources.compound.extend(bench.train.iter().cloned());
                let options = TrainingOptions { negatives_per_positive };
                let sets = benchgen::build_training_sets(&sources, Some(&corpus), None, seed, options);
                let (written, failed) = sets.write(&dir)?;
                for path in written {
                    writeln!(out, "wrote {}", path.display())?;
                }
                for f in failed {
                    writeln!(out, "skipped {f}")?;
                }
            }
        }
    }
    Ok(())
}

fn load_corpus(args: &CorpusArgs, config: &AppConfig) -> CmdResult<Corpus> {
    let path = args
        .corpus
        .as_ref()
        .or(config.corpus_path.as_ref())
        .ok_or("no corpus given (use --corpus or corpus_path in the config)")?;
    let format = args.format.or(config.corpus_format).unwrap_or(CorpusFormat::Jsonl);
    Ok(Corpus::load(path, format)?)
}

fn build_backend(args: &BackendArgs, config: &AppConfig, corpus: &Corpus) -> CmdResult<Arc<dyn Backend>> {
    let configured = config.backend.clone();
    let kind = match (args.backend, &configured) {
        (Some(k), _) => k,
        (None, Some(BackendConfig::Http(_))) => BackendKind::Http,
        (None, Some(BackendConfig::Scripted { .. })) => BackendKind::Scripted,
        (None, None) if args.oracle.is_some() => BackendKind::Scripted,
        (None, None) => BackendKind::Http,
    };
    match kind {
        BackendKind::Scripted => {
            let path = match (&args.oracle, configured) {
                (Some(p), _) => p.clone(),
                (None, Some(BackendConfig::Scripted { oracle_path })) => oracle_path,
                _ => return Err("scripted backend needs --oracle or backend.oracle_path".into()),
            };
            Ok(Arc::new(ScriptedOracle::load(&path)?.with_passages(corpus)))
        }
        BackendKind::Http => {
            let mut http = match configured {
                Some(BackendConfig::Http(c)) => c,
                _ => HttpConfig::default(),
            };
            if let Some(url) = &args.endpoint {
                http.endpoint_url = url.clone();
            }
            if let Some(model) = &args.model {
                http.model_name = model.clone();
            }
            Ok(Arc::new(HttpBackend::new(http)?))
        }
    }
}

fn build_pipeline(args: &RunArgs, config: &AppConfig, ablate: Option<&[Ablation]>) -> CmdResult<Hanrag> {
    let corpus = Arc::new(load_corpus(&args.corpus, config)?);
    let index = match args.index.as_ref().or(config.index_path.as_ref()) {
        Some(path) => {
            let index = Index::load(path)?;
            index.check_matches(&corpus)?;
            Some(index)
        }
        None => None,
    };
    let backend = build_backend(&args.backend, config, &corpus)?;
    let mut pipeline_config = config.pipeline.clone();
    if let Some(n) = args.max_steps {
        pipeline_config.max_steps = n;
    }
    if let Some(class) = args.force_class {
        pipeline_config.forced_class = Some(class);
    }
    for a in ablate.unwrap_or_default() {
        match a {
            Ablation::RelevanceFilter => pipeline_config.ablation.relevance_filter_enabled = false,
            Ablation::EndingCheck => pipeline_config.ablation.ending_check_enabled = false,
            Ablation::Refiner => pipeline_config.ablation.refiner_enabled = false,
        }
    }
    let revelator = Revelator::new(backend.clone());
    let generator = crate::pipeline::Generator::new(backend);
    Ok(Hanrag::with_parts(
        corpus,
        index,
        revelator,
        generator,
        pipeline_config,
    )?)
}
