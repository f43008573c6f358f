//! Argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lsa_core::benchmark::NoiseKind;
use lsa_core::eval::Aggregation;
use lsa_core::losses::GateMode;
use lsa_core::pipeline::PipelineMode;

use crate::config::MockKind;

#[derive(Debug, Parser)]
#[command(name = "lsa", version, about = "Linguistic scene-graph anticipation toolkit")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and inspect benchmark bundles.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Render prompts for inspection.
    #[command(subcommand)]
    Prompt(PromptCmd),
    /// Run the anticipation pipeline.
    #[command(subcommand)]
    Run(RunCmd),
    /// Score predictions.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Loss numerics.
    #[command(subcommand)]
    Loss(LossCmd),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

fn parse_aggregation(s: &str) -> Result<Aggregation, String> {
    match s {
        "macro" => Ok(Aggregation::Macro),
        "micro" => Ok(Aggregation::Micro),
        other => Err(format!("unknown aggregation `{other}` (expected macro or micro)")),
    }
}

fn parse_gate(s: &str) -> Result<GateMode, String> {
    match s {
        "literal" => Ok(GateMode::Literal),
        "disabled" => Ok(GateMode::Disabled),
        other => Err(format!("unknown gate `{other}` (expected literal or disabled)")),
    }
}

/// `lo-hi` with both ends in [0, 1], e.g. `0.6-0.9`.
pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once('-').ok_or_else(|| format!("range `{s}` is not lo-hi"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("range `{s}`: {e}"));
    Ok((num(lo)?, num(hi)?))
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// Cut-offs, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_aggregation)]
    pub aggregation: Option<Aggregation>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Also write the full JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Ten-frame videos with a known continuous-object recall.
    Continuity,
    /// One hundred four-frame videos with a fixed object-change mix.
    Dynamics,
    /// Random vocabulary-valid videos.
    Random,
    /// The bundled broom-sweeping video that has stored model outputs.
    Example,
}

#[derive(Debug, Subcommand)]
pub enum BenchCmd {
    /// Split a corpus into observed/future instances.
    Build {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dataset statistics, object dynamics and oracle ceilings.
    Stats {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[command(flatten)]
        score: ScoreArgs,
    },
    /// Continuous-object oracle ceiling per fraction and K.
    Oracle {
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[command(flatten)]
        score: ScoreArgs,
    },
    /// Perturb observed frames of a bundle.
    Noise {
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[arg(long)]
        kind: NoiseKind,
        /// Fractional range of the observed prefix, e.g. 0.6-0.9.
        #[arg(long, value_parser = parse_range, default_value = "0-1")]
        range: (f64, f64),
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a generated corpus in the interchange format.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long, default_value_t = 20)]
        videos: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Goa,
    Oora,
}

#[derive(Debug, Subcommand)]
pub enum PromptCmd {
    /// Print the prompts the pipeline would send for one instance.
    Render {
        #[arg(long)]
        benchmark: Option<PathBuf>,
        /// Defaults to the first instance.
        #[arg(long)]
        video: Option<String>,
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long, value_enum, default_value = "goa")]
        stage: Stage,
        /// Target objects for OORA; defaults to the last observed frame's objects.
        #[arg(long)]
        object: Vec<String>,
        #[arg(long)]
        one_shot: bool,
        /// Token budget; oldest observed segments are dropped to fit.
        #[arg(long)]
        budget: Option<usize>,
        /// Write one file per prompt instead of printing.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum RunCmd {
    /// Predict future scene graphs for every instance in a bundle.
    Anticipate(AnticipateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct AnticipateArgs {
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<PipelineMode>,
    /// Only instances at this fraction.
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Only these videos.
    #[arg(long)]
    pub video: Vec<String>,
    /// At most this many instances.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mock: Option<MockKind>,
    /// Model whose bundled outputs `--mock fixture` replays.
    #[arg(long)]
    pub fixture_model: Option<String>,
    /// Prompt-hash → completion JSON for `--mock fixture`.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub one_shot: bool,
    #[arg(long)]
    pub request_log: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub top_p: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalInputs {
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    #[command(flatten)]
    pub score: ScoreArgs,
}

#[derive(Debug, Subcommand)]
pub enum EvalCmd {
    /// Recall@K and meanRecall@K.
    Recall(EvalInputs),
    /// Object-set diagnostics of the predicted frames.
    Objects(EvalInputs),
    /// Exact-set relation accuracy per partition.
    Relations(EvalInputs),
    /// R@10/R@50 deltas of noisy runs against a clean run.
    Robustness {
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[arg(long)]
        clean: PathBuf,
        /// `kind:lo-hi:rate=predictions.jsonl`, repeatable.
        #[arg(long, required = true)]
        noisy: Vec<String>,
        #[arg(long, value_parser = parse_aggregation)]
        aggregation: Option<Aggregation>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum LossCmd {
    /// Transition-consistency of predictions against ground truth.
    ScoreTransitions {
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_parser = parse_gate)]
        gate: Option<GateMode>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-token temporal weights for an external trainer.
    ExportWeights {
        /// Index of the last observed graph.
        #[arg(long)]
        n: usize,
        /// Index of the last future graph.
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        beta: Option<f64>,
        /// Tokens per future graph, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        token_counts: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}
