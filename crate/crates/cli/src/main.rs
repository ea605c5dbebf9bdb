//! `icl-lab`: prompt sets, Bayesian and baseline predictors, probes and
//! loss-curve evaluation from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod resolve;

#[derive(Parser)]
#[command(name = "icl-lab", version, about = "In-context regression laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a prompt-set file from a mixture configuration.
    Generate(GenerateArgs),
    /// Closed-form posterior-mean predictions.
    Pme(PmeArgs),
    /// Non-Bayesian baseline predictions.
    Baseline(BaselineArgs),
    /// Posterior-mean predictions by sampling, with a diagnostics sidecar.
    SamplePme(SamplePmeArgs),
    /// Predictions from any predictor, built-in or external.
    Predict(PredictArgs),
    /// Answer bridge-protocol requests on stdin with a built-in predictor.
    Serve(ServeArgs),
    /// Implied linear weights of a predictor.
    Probe(ProbeArgs),
    /// Fourier spectrum of a predictor on a scalar input interval.
    Dft(DftArgs),
    /// Loss curves with bootstrap bands from prediction files.
    Eval(EvalArgs),
    /// In- and out-of-distribution prompt sets for a task-diversity experiment.
    Suite(SuiteArgs),
    /// Per-checkpoint losses and the forgetting summary of a training run.
    Sweep(SweepArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// JSON prompt-set configuration: mixture, input, p, n_queries.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub count: usize,
}

/// Where predictions go and which `(prompt, k, query)` triples are produced.
#[derive(Args)]
pub struct BatchArgs {
    #[arg(long)]
    pub prompts: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Prefix lengths, e.g. `0-19` or `0,5,10`. Defaults to every valid k.
    #[arg(long)]
    pub k_list: Option<String>,
    /// Predict at the held-out probe queries instead of the next context input.
    #[arg(long)]
    pub queries: bool,
    /// Worker threads for concurrent-safe predictors.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Failure manifest path; defaults to `<out>.failures.json`.
    #[arg(long)]
    pub failures: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PmeKind {
    Gaussian,
    Skewed,
    Gmm,
    Dmmse,
    Ridge,
}

#[derive(Args)]
pub struct PmeArgs {
    #[command(flatten)]
    pub batch: BatchArgs,
    #[arg(long, value_enum)]
    pub predictor: PmeKind,
    /// JSON object of predictor parameters; inferred from the prompt set when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum BaselineKind {
    Ols,
    OlsFeatures,
    Ridge,
    Lasso,
    Linf,
    Nuclear,
    Tree,
    Mlp,
}

#[derive(Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub batch: BatchArgs,
    #[arg(long, value_enum)]
    pub name: BaselineKind,
    /// Lasso penalty or ridge noise variance.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// `fourier:N`, `monomial:S`, `monomial-full`, `poly2`, `haar` or `rff`.
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    /// MLP initialization seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct SamplePmeArgs {
    #[command(flatten)]
    pub batch: BatchArgs,
    /// `sign`, `z`, `lowrank:q,r` or `gaussian`.
    #[arg(long)]
    pub prior: String,
    /// Iterations per chain, burn-in included.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 5_000)]
    pub burn: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long)]
    pub eps2: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub step_size: f64,
    /// Diagnostics path; defaults to `<out>.diagnostics.json`.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

/// A predictor given as a built-in JSON description or as a command line.
#[derive(Args)]
#[group(required = true, multiple = false)]
pub struct PredictorArgs {
    /// Built-in name (`ols`), inline JSON spec, `@spec.json`, or a shell command.
    #[arg(long)]
    pub predictor: Option<String>,
    /// Shell command speaking the bridge protocol on stdin/stdout.
    #[arg(long)]
    pub predictor_cmd: Option<String>,
}

#[derive(Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub batch: BatchArgs,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    /// Seconds to wait for each subprocess reply.
    #[arg(long)]
    pub timeout: Option<f64>,
}

#[derive(Args)]
pub struct ServeArgs {
    /// Built-in name, inline JSON spec or `@spec.json`.
    #[arg(long)]
    pub predictor: String,
}

#[derive(Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub predictor: PredictorArgs,
    #[arg(long)]
    pub prompts: PathBuf,
    /// Prefix lengths; defaults to `0..=p`.
    #[arg(long)]
    pub k_list: Option<String>,
    /// Probe queries per context; defaults to twice the input dimension.
    #[arg(long)]
    pub n_queries: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct DftArgs {
    #[command(flatten)]
    pub predictor: PredictorArgs,
    /// Contexts to analyze; an empty context when omitted.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    /// Prefix lengths; defaults to `p`.
    #[arg(long)]
    pub k_list: Option<String>,
    #[arg(long = "N", default_value_t = 10)]
    pub max_freq: usize,
    #[arg(long = "L", default_value_t = 5.0)]
    pub half_width: f64,
    #[arg(long = "m", default_value_t = icl_core::probe::DEFAULT_GRID)]
    pub grid: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Prediction files; each becomes one curve named after its file stem.
    #[arg(long, num_args = 1.., required = true)]
    pub preds: Vec<PathBuf>,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, default_value_t = icl_core::eval::DEFAULT_BOOTSTRAP)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = icl_core::eval::DEFAULT_CI_LEVEL)]
    pub ci: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Prefix lengths; defaults to every k present in each file.
    #[arg(long)]
    pub k_list: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub log_y: bool,
    #[arg(long)]
    pub title: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SuiteKindArg {
    Monomials,
    Fourier,
    Nlr,
}

#[derive(Args)]
pub struct SuiteArgs {
    #[arg(long, value_enum)]
    pub kind: SuiteKindArg,
    /// Task diversity.
    #[arg(long = "K")]
    pub k_tasks: usize,
    #[arg(long)]
    pub p: usize,
    /// Input dimension (monomials: 10, NLR: 8).
    #[arg(long)]
    pub d: Option<usize>,
    /// Monomials or frequencies per family.
    #[arg(long, default_value_t = 10)]
    pub subset_size: usize,
    #[arg(long, default_value_t = 20)]
    pub max_freq: usize,
    #[arg(long, default_value_t = 5.0)]
    pub half_width: f64,
    #[arg(long, default_value_t = 0.25)]
    pub noise_var: f64,
    #[arg(long, default_value_t = icl_core::eval::DEFAULT_PROMPTS)]
    pub n_id: usize,
    #[arg(long, default_value_t = icl_core::eval::DEFAULT_PROMPTS)]
    pub n_ood: usize,
    #[arg(long, default_value_t = 1)]
    pub n_queries: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub id_out: PathBuf,
    #[arg(long)]
    pub ood_out: PathBuf,
    /// Optional JSON summary of the sampled families.
    #[arg(long)]
    pub meta_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Holds one subdirectory per checkpoint step with `id.jsonl` and `ood.jsonl`.
    #[arg(long)]
    pub dumps_dir: PathBuf,
    #[arg(long)]
    pub id_gold: PathBuf,
    #[arg(long)]
    pub ood_gold: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    /// Prefix lengths; defaults to the k values of the first ID dump.
    #[arg(long)]
    pub k_list: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Pme(a) => commands::pme(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::SamplePme(a) => commands::sample_pme(a),
        Command::Predict(a) => commands::predict(a),
        Command::Serve(a) => commands::serve(a),
        Command::Probe(a) => commands::probe(a),
        Command::Dft(a) => commands::dft(a),
        Command::Eval(a) => commands::eval(a),
        Command::Suite(a) => commands::suite(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
