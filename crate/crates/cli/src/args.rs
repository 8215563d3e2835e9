use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dagtrace::enumerate::DEFAULT_BUDGET;
use dagtrace::mining::VerifyMode;

#[derive(Debug, Parser)]
#[command(name = "dagtrace", version, about = "Frequent traces among the paths of a labeled DAG")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Also write the run manifest as JSON to this file.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a DAG from an event CSV (`t,tag,location`) and print its size.
    Ingest(IngestArgs),
    /// Print every trace of length at most m.
    Enumerate(EnumerateArgs),
    /// Count traces exactly without generating them.
    Count(CountArgs),
    /// Draw an independent Bernoulli sample of the traces.
    Sample(SampleArgs),
    /// Report the traces with relative frequency at least epsilon.
    Mine(MineArgs),
    /// Tabulate trace statistics on a synthetic event stream.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Event CSV with header `t,tag,location`, times in minutes.
    pub events: PathBuf,
    /// Maximum gap in minutes between connected readings.
    #[arg(long, default_value_t = 10.0)]
    pub delta: f64,
    /// Also connect readings separated by a zero gap.
    #[arg(long)]
    pub allow_zero_gap: bool,
    /// Where to save the DAG.
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

/// A graph input: either a saved DAG (`dag v=.. e=..`) or an event CSV,
/// which is ingested with `--delta`.
#[derive(Debug, Args)]
pub struct Source {
    pub input: PathBuf,
    /// Gap bound in minutes when the input is an event CSV.
    #[arg(long, default_value_t = 10.0)]
    pub delta: f64,
    #[arg(long)]
    pub allow_zero_gap: bool,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(short = 'm', long = "max-len", default_value_t = 5)]
    pub max_len: usize,
    /// Refuse to run when there are more traces than this.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// Print trace hashes instead of label sequences.
    #[arg(long)]
    pub hashed_output: bool,
    /// Print each distinct trace once with its count, most frequent first.
    #[arg(long)]
    pub distinct: bool,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    pub input: PathBuf,
    /// One or more gap bounds (comma separated) when the input is an event CSV.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub delta: Vec<f64>,
    #[arg(long)]
    pub allow_zero_gap: bool,
    /// One or more maximum trace lengths, comma separated.
    #[arg(short = 'm', long = "max-len", value_delimiter = ',', default_value = "5")]
    pub max_len: Vec<usize>,
    /// Write the per-vertex count table of the first row as TSV.
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    /// Relative frequency threshold.
    #[arg(long)]
    pub epsilon: f64,
    /// Oversampling constant C; a trace at frequency epsilon is expected C times.
    #[arg(long = "oversample-c", default_value_t = 10.0)]
    pub oversample: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sampling threads [default: available parallelism].
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(short = 'm', long = "max-len", default_value_t = 5)]
    pub max_len: usize,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Write the sampled traces here, one per line.
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub hashed_output: bool,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(short = 'm', long = "max-len", default_value_t = 5)]
    pub max_len: usize,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Verification sample: `same-seed` regenerates the first sample,
    /// `fresh` draws a new one with C + 2.
    #[arg(long, default_value = "same-seed", value_parser = parse_mode)]
    pub mode: VerifyMode,
    #[arg(long)]
    pub hashed_output: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Use this event CSV instead of the generator.
    #[arg(long, value_name = "PATH")]
    pub events: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "20,10,5,3")]
    pub delta: Vec<f64>,
    #[arg(short = 'm', long = "max-len", value_delimiter = ',', default_value = "5,3")]
    pub max_len: Vec<usize>,
    #[arg(long = "oversample-c", default_value_t = 10.0)]
    pub oversample: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest trace multiset the exact columns may materialize.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub allow_zero_gap: bool,
    #[arg(long, default_value_t = 200)]
    pub tags: usize,
    #[arg(long, default_value_t = 50)]
    pub readings_per_tag: usize,
    #[arg(long, default_value_t = 40)]
    pub locations: u32,
    /// Mean minutes between readings of one tag.
    #[arg(long, default_value_t = 6.0)]
    pub mean_gap: f64,
    /// Probability that a tag follows one of the planted routes.
    #[arg(long, default_value_t = 0.3)]
    pub route_prob: f64,
}

fn parse_mode(s: &str) -> Result<VerifyMode, String> {
    s.parse().map_err(|e: dagtrace::Error| e.to_string())
}
