//! `lytnet` — inference, evaluation, guidance replay, and architecture
//! inspection for the pedestrian crossing network.
//!
//! Every command is deterministic given identical files and flags. Error
//! paths exit nonzero and print a single `error: ...` line to stderr; the
//! exit code tells callers which category failed (2 weights, 3 images,
//! 4 labels, 5 streams, 1 anything else).

mod commands;
mod errors;

use clap::{Args, Parser, Subcommand};
use errors::CliError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "lytnet",
    version,
    about = "Pedestrian traffic light and zebra crossing engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the network on images and print per-image predictions.
    Infer(InferArgs),
    /// Score predictions against a label CSV and emit an evaluation report.
    Eval(EvalArgs),
    /// Replay an observation stream through the guidance engine.
    Replay(ReplayArgs),
    /// Print the architecture table with parameter and MAC accounting.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct InferArgs {
    /// Weight file (.lyt2).
    #[arg(long)]
    weights: PathBuf,
    /// Images to classify (binary PPM, 768x576 unless --resize).
    #[arg(required = true)]
    images: Vec<PathBuf>,
    /// Emit one JSON object per image instead of text lines.
    #[arg(long)]
    json: bool,
    /// Bilinearly resize nonconforming images to 768x576.
    #[arg(long)]
    resize: bool,
    /// Worker threads for image processing; output order is input order.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Weight file (.lyt2). Not needed with --probs-from-csv.
    #[arg(
        long,
        required_unless_present = "probs_from_csv",
        conflicts_with = "probs_from_csv"
    )]
    weights: Option<PathBuf>,
    /// Label CSV with header `path,class,xs,ys,xe,ye`.
    #[arg(long)]
    labels: PathBuf,
    /// Stub inference: score the labels against themselves (pipeline check).
    #[arg(long)]
    probs_from_csv: bool,
    /// Remap countdown predictions to `none` before scoring.
    #[arg(long)]
    remap_ptlr: bool,
    /// Bilinearly resize nonconforming images to 768x576.
    #[arg(long)]
    resize: bool,
    /// Worker threads for image processing.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Observation stream (JSON Lines).
    stream: PathBuf,
    /// Guidance config JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Weight file; required when the stream carries image frames.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Bilinearly resize nonconforming images to 768x576.
    #[arg(long)]
    resize: bool,
    /// Write the event log here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    /// Architecture columns only (kernel / expansion / channels / SE / NL / stride).
    #[arg(long)]
    spec: bool,
    /// Parameter counts and total.
    #[arg(long)]
    params: bool,
    /// Multiply-accumulate counts, separable ratios, and total.
    #[arg(long)]
    macs: bool,
    /// Time a single forward pass with seeded random weights.
    #[arg(long)]
    bench: bool,
    /// Emit the full report as JSON.
    #[arg(long)]
    json: bool,
    /// Seed for the --bench weights.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Infer(args) => commands::infer::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Replay(args) => commands::replay::run(args),
        Command::Inspect(args) => commands::inspect::run(args),
    }
}

fn main() {
    // die quietly when a downstream pipe closes instead of panicking
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {}", err.message.replace('\n', "; "));
        std::process::exit(err.code);
    }
}
