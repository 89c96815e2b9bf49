//! The `negrec` command line: corpus generation, log simulation, training,
//! responsiveness measurement, report merging and self-verification.
//!
//! All randomness flows from explicit `--seed` flags; no command reads the
//! clock or OS entropy, so identical invocations write identical artifacts.
//! Every subcommand drops a run manifest (inputs, outputs, checksums)
//! beside its primary output.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use negrec_core::catalog::{CorpusSpec, ItemId};
use negrec_core::model::{ModelParams, ModelPolicy};
use negrec_core::responsiveness::{MeasureConfig, PreForkPolicy};
use negrec_core::rng::DetRng;
use negrec_core::simenv::{BehaviorConfig, Event, Policy, RandomPolicy};
use negrec_core::train::{train, TrainConfig, Variant};

use crate::error::{AppError, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};
use crate::formats;
use crate::manifest::ManifestBuilder;
use crate::parallel;
use crate::verify;

#[derive(Parser)]
#[command(
    name = "negrec",
    version,
    about = "Sequential retrieval recommender with not-to-recommend training and counterfactual responsiveness measurement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic item corpus with content clusters and creators
    GenCorpus(GenCorpusArgs),
    /// Simulate user interaction logs against a policy
    GenLogs(GenLogsArgs),
    /// Train a model variant on logs
    Train(TrainArgs),
    /// Measure counterfactual responsiveness of a checkpoint
    Measure(MeasureArgs),
    /// Merge measurement reports into one summary CSV
    Report(ReportArgs),
    /// Run the gradient and loss verification suite
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenCorpusArgs {
    #[arg(long)]
    items: usize,
    #[arg(long)]
    clusters: usize,
    #[arg(long)]
    creators: usize,
    #[arg(long = "topic-dim", default_value_t = 8)]
    topic_dim: usize,
    /// Topic spread around each cluster centroid
    #[arg(long, default_value_t = 0.25)]
    sigma: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenLogsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    users: usize,
    #[arg(long)]
    length: usize,
    /// `random` or `model:PATH` (a checkpoint served as the policy)
    #[arg(long, default_value = "random")]
    policy: String,
    /// Slate size the policy produces per step
    #[arg(long, default_value_t = 50)]
    slate: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    logs: PathBuf,
    /// baseline | feature_only | feature_and_label | exclude_heuristic | skip_labels
    #[arg(long)]
    variant: Option<String>,
    /// JSON training configuration; flags override its variant and seed
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint output path
    #[arg(long)]
    out: PathBuf,
    /// Training report (JSON) output path
    #[arg(long)]
    report: PathBuf,
    /// Loss curve (CSV) output path; defaults to the report path with a .csv extension
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long, default_value_t = 2000)]
    sims: usize,
    #[arg(long, default_value_t = 50)]
    k: usize,
    #[arg(long, default_value_t = 50)]
    slate: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Policy for the pre-fork trajectory: `model` (on-policy) or `random`
    #[arg(long, default_value = "model")]
    prefork: String,
    /// Suppress organic skips/dislikes before the fork
    #[arg(long = "clean-prefix", default_value_t = false)]
    clean_prefix: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input_dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses argv and runs the subcommand, returning the process exit code.
pub fn dispatch<I>(args: I) -> i32
where
    I: IntoIterator,
    I::Item: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command, argv) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("negrec: error[{}]: {err}", err.tag());
            err.exit_code()
        }
    }
}

fn run(command: Command, argv: Vec<String>) -> Result<i32, AppError> {
    match command {
        Command::GenCorpus(args) => gen_corpus(args, argv),
        Command::GenLogs(args) => gen_logs(args, argv),
        Command::Train(args) => run_train(args, argv),
        Command::Measure(args) => measure(args, argv),
        Command::Report(args) => report(args, argv),
        Command::Verify(args) => Ok(run_verify(args)),
    }
}

fn gen_corpus(args: GenCorpusArgs, argv: Vec<String>) -> Result<i32, AppError> {
    let mut manifest = ManifestBuilder::new("gen-corpus", argv);
    manifest.seed(args.seed).output(&args.out);

    let spec = CorpusSpec {
        num_items: args.items,
        num_clusters: args.clusters,
        num_creators: args.creators,
        topic_dim: args.topic_dim,
        sigma: args.sigma,
        seed: args.seed,
    };
    let corpus = negrec_core::catalog::generate_corpus(&spec)?;
    formats::save_corpus(&args.out, &spec, &corpus)?;
    manifest.write()?;
    println!(
        "wrote corpus: {} items, {} clusters, {} creators -> {}",
        corpus.len(),
        corpus.num_clusters,
        corpus.num_creators,
        args.out.display()
    );
    Ok(EXIT_OK)
}

/// A policy selected on the command line.
enum CliPolicy {
    Random(RandomPolicy),
    Model { params: ModelParams, slate: usize },
}

impl Policy for CliPolicy {
    fn recommend(&self, history: &[Event], rng: &mut DetRng) -> Vec<ItemId> {
        match self {
            CliPolicy::Random(p) => p.recommend(history, rng),
            CliPolicy::Model { params, slate } => ModelPolicy {
                params,
                slate_size: *slate,
            }
            .recommend(history, rng),
        }
    }
}

fn parse_policy(
    spec: &str,
    corpus_items: usize,
    slate: usize,
    manifest: &mut ManifestBuilder,
) -> Result<CliPolicy, AppError> {
    if spec == "random" {
        return Ok(CliPolicy::Random(RandomPolicy {
            num_items: corpus_items,
            slate_size: slate,
        }));
    }
    if let Some(path) = spec.strip_prefix("model:") {
        let path = Path::new(path);
        manifest.input(path);
        let doc = formats::load_checkpoint_for_corpus(path, corpus_items)?;
        return Ok(CliPolicy::Model {
            params: doc.params,
            slate,
        });
    }
    Err(AppError::Usage(format!(
        "unknown policy `{spec}`; expected `random` or `model:PATH`"
    )))
}

fn gen_logs(args: GenLogsArgs, argv: Vec<String>) -> Result<i32, AppError> {
    let mut manifest = ManifestBuilder::new("gen-logs", argv);
    manifest.seed(args.seed).input(&args.corpus).output(&args.out);

    let corpus = formats::load_corpus(&args.corpus)?.corpus;
    let policy = parse_policy(&args.policy, corpus.len(), args.slate, &mut manifest)?;
    let behavior = BehaviorConfig::default();
    let logs = parallel::generate_logs_parallel(
        &corpus,
        &policy,
        &behavior,
        args.users,
        args.length,
        args.seed,
        args.workers,
    )?;
    formats::save_logs(&args.out, &logs)?;
    manifest.write()?;
    let events: usize = logs.iter().map(|t| t.events.len()).sum();
    println!(
        "wrote logs: {} users, {events} events -> {}",
        logs.len(),
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn resolve_train_config(args: &TrainArgs) -> Result<TrainConfig, AppError> {
    let variant = args
        .variant
        .as_deref()
        .map(|v| v.parse::<Variant>())
        .transpose()
        .map_err(|e| AppError::Usage(e.to_string()))?;

    let mut config = match (&args.config, variant) {
        (Some(path), _) => {
            let raw = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
            serde_json::from_str::<TrainConfig>(&raw).map_err(|e| AppError::Corrupt {
                path: path.clone(),
                detail: e.to_string(),
            })?
        }
        (None, Some(v)) => TrainConfig::new(v, args.seed.unwrap_or(0)),
        (None, None) => {
            return Err(AppError::Usage(
                "train needs --variant, --config, or both".into(),
            ))
        }
    };
    // explicit flags override the config document
    if let Some(v) = variant {
        if config.variant != v {
            config.variant = v;
            config.dislike_labels = v == Variant::FeatureAndLabel;
            config.skip_labels = v == Variant::SkipLabels;
        }
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run_train(args: TrainArgs, argv: Vec<String>) -> Result<i32, AppError> {
    let mut manifest = ManifestBuilder::new("train", argv);
    manifest.input(&args.corpus).input(&args.logs);
    if let Some(cfg) = &args.config {
        manifest.input(cfg);
    }

    let config = resolve_train_config(&args)?;
    manifest.seed(config.seed);

    let corpus = formats::load_corpus(&args.corpus)?.corpus;
    let logs = formats::load_logs(&args.logs)?;
    let (params, train_report) = train(&logs, &config, corpus.len())?;

    let curve_path = args
        .curve
        .clone()
        .unwrap_or_else(|| args.report.with_extension("csv"));

    formats::save_checkpoint(&args.out, config.variant.name(), &params)?;
    formats::save_train_run(
        &args.report,
        &formats::TrainRunDoc {
            version: 1,
            config: config.clone(),
            report: train_report.clone(),
            checkpoint: args.out.display().to_string(),
        },
    )?;
    formats::write_text(&curve_path, &formats::loss_curve_csv(&train_report))?;

    manifest
        .output(&args.out)
        .output(&args.report)
        .output(&curve_path);
    manifest.write()?;

    let last = train_report.epoch_losses.last().expect("at least one epoch");
    println!(
        "trained {} ({} positives, {} negatives, {} steps); final epoch loss {:.4} -> {}",
        config.variant.name(),
        train_report.num_positive_examples,
        train_report.num_negative_examples,
        train_report.steps,
        last.total,
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn measure(args: MeasureArgs, argv: Vec<String>) -> Result<i32, AppError> {
    let mut manifest = ManifestBuilder::new("measure", argv);
    manifest
        .seed(args.seed)
        .input(&args.corpus)
        .input(&args.ckpt)
        .output(&args.out);

    let corpus = formats::load_corpus(&args.corpus)?.corpus;
    let ckpt = formats::load_checkpoint_for_corpus(&args.ckpt, corpus.len())?;

    let prefork = match args.prefork.as_str() {
        "model" => PreForkPolicy::ModelUnderTest,
        "random" => PreForkPolicy::Random,
        other => {
            return Err(AppError::Usage(format!(
                "unknown prefork policy `{other}`; expected `model` or `random`"
            )))
        }
    };
    let mut config = MeasureConfig::new(args.sims, args.k, args.slate, args.seed);
    config.prefork_policy = prefork;
    config.behavior.suppress_negative_feedback = args.clean_prefix;

    let report = parallel::measure_parallel(&ckpt.params, &corpus, &config, args.workers)?;
    let doc = formats::ReportDoc {
        version: formats::REPORT_VERSION,
        variant: ckpt.variant,
        report,
    };
    formats::save_report(&args.out, &doc)?;
    manifest.write()?;

    let fmt = |v: Option<f64>| v.map_or_else(|| "NA".into(), |x| format!("{:+.1}%", 100.0 * x));
    println!(
        "measured {}: content {} / creator {} over {} simulations -> {}",
        doc.variant,
        fmt(doc.report.content.responsiveness),
        fmt(doc.report.creator.responsiveness),
        doc.report.num_simulations,
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn report(args: ReportArgs, argv: Vec<String>) -> Result<i32, AppError> {
    let mut manifest = ManifestBuilder::new("report", argv);
    let paths = formats::list_reports(&args.input_dir)?;
    for p in &paths {
        manifest.input(p);
    }
    let csv = formats::merge_report_paths(&paths)?;
    formats::write_text(&args.out, &csv)?;
    manifest.output(&args.out);
    manifest.write()?;
    println!("merged {} reports -> {}", paths.len(), args.out.display());
    Ok(EXIT_OK)
}

fn run_verify(args: VerifyArgs) -> i32 {
    let results = verify::run_all(args.seed);
    let mut all_ok = true;
    for check in &results {
        let status = if check.passed { "ok  " } else { "FAIL" };
        println!("{status} {} — {}", check.name, check.detail);
        all_ok &= check.passed;
    }
    if all_ok {
        println!("verify: all {} checks passed", results.len());
        EXIT_OK
    } else {
        println!("verify: FAILURES detected");
        EXIT_VERIFY
    }
}
