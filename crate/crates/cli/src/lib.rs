//! `wordprune` command line: file formats, run directories and the commands
//! wrapping the library.
//!
//! Every command writes into a run directory (`--out`) that it locks while
//! running. Besides its outputs it writes the effective configuration
//! (`config.toml`) and a `manifest.json` that `wordprune replay` re-executes.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical degeneracy.

pub mod commands;
pub mod error;
pub mod formats;
pub mod jobs;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use error::{CliError, CliResult, Status};
pub use jobs::Job;

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "WORDPRUNE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "wordprune", version, about = "Prune visual words from Bag-of-Words codebooks without re-coding")]
pub struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML key-value file; flags take precedence over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run directory receiving outputs, config.toml and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a descriptor corpus into K words and build the neighbor table.
    BuildCodebook(BuildCodebookArgs),
    /// Code and pool a corpus against a codebook.
    Encode(EncodeArgs),
    /// Anneal a word subset maximizing relevance.
    Select(SelectArgs),
    /// Train on pruned representations and report test accuracy.
    Eval(EvalArgs),
    /// Run a pruning validation experiment on a synthetic mixture.
    Validate(ValidateArgs),
    /// Re-execute a recorded run and check its outputs are byte-identical.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct BuildCodebookArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
    /// Corpus directory or PBW1 file.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Neighbors per word.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// sqeuclidean, euclidean or cityblock.
    #[arg(long)]
    pub metric: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct EncodeArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub codebook: Option<PathBuf>,
    /// hard or soft.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Softness of soft coding.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Also write the per-descriptor coding (coding.json).
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub retain_coding: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SelectArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
    /// hard or soft.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Representation CSV (hard) or coding.json (soft).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub neighbors: Option<PathBuf>,
    #[arg(long)]
    pub target_size: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub tmax: Option<usize>,
    #[arg(long)]
    pub move_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// from_initial or chained.
    #[arg(long)]
    pub derivation: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub subset: Option<PathBuf>,
    /// psi, exact-psi or discard.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub neighbors: Option<PathBuf>,
    #[arg(long)]
    pub codebook: Option<PathBuf>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub lambda_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
    /// prop1, variance, claim2 or heuristic-gap.
    pub experiment: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Pruned word, 0-based.
    #[arg(long)]
    pub word: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub lambda_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub in_cell: Option<usize>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn job_run(command: &str, run: &RunArgs, flags: &impl Serialize) -> CliResult<String> {
    let overrides = serde_json::to_value(flags).expect("flags serialize");
    let job = Job::assemble(command, run.config.as_deref(), overrides)?;
    let (_, summary) = run::run_job(job, &run.out)?;
    Ok(format!("{command}: {summary} -> {}", run.out.display()))
}

/// Runs a parsed command line and returns the message to print.
pub fn dispatch(cli: Cli) -> CliResult<String> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("thread count must be at least 1"));
        }
        // Fails only if a pool already exists, e.g. in-process tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::BuildCodebook(a) => job_run("build-codebook", &a.run, a),
        Command::Encode(a) => job_run("encode", &a.run, a),
        Command::Select(a) => job_run("select", &a.run, a),
        Command::Eval(a) => job_run("eval", &a.run, a),
        Command::Validate(a) => job_run("validate", &a.run, a),
        Command::Replay(a) => {
            let m = run::replay(&a.manifest, &a.out)?;
            Ok(format!("replay: {} outputs identical -> {}", m.outputs.len(), a.out.display()))
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::Usage as i32 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(message) => {
            println!("{message}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
