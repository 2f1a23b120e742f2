//! `lvo`: the pipeline as batch commands. Each stage reads the files of the
//! previous one and writes its own; all randomness comes from `--seed`.
//!
//! Exit codes: 0 success, 1 usage, 2 file format, 3 validation, 4 internal.

mod exit;
mod files;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "lvo", version, about = "LVO prediction pipeline on synthetic cohorts and head-CT phantoms")]
#[command(after_help = "Environment: LVO_PIPELINE_THREADS caps worker threads (0 or unset = one per core).")]
struct Cli {
    /// Progress messages on stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic inputs.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Skull-strip, register, window and locate the MCA boxes of every scan.
    Preprocess(PreprocessArgs),
    /// Train the segmentation network on preprocessed scans and their masks.
    TrainFcn(TrainFcnArgs),
    /// Segment every preprocessed scan and store its bottleneck features.
    Extract(ExtractArgs),
    /// Split the cohort and fit every level on the training part.
    Train(TrainArgs),
    /// Score the held-out part with the fitted levels.
    Evaluate(EvaluateArgs),
    /// Render the evaluation as a CSV table and an ROC plot.
    Report(ReportArgs),
    /// Print a default settings document, as a starting point for --spec/--config files.
    Defaults(DefaultsArgs),
}

#[derive(Subcommand, Debug)]
enum SynthCommand {
    /// Write a synthetic cohort CSV.
    Cohort(SynthCohortArgs),
    /// Write SVOL phantoms and ground-truth dot masks plus a scans.json manifest.
    Scans(SynthScansArgs),
}

#[derive(Args, Debug)]
struct SynthCohortArgs {
    /// Number of subjects (overrides the spec file's size).
    #[arg(long, default_value_t = 300)]
    size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Cohort spec JSON (see `lvo defaults cohort`) [default: built-in spec].
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output CSV path (required).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["cohort", "aux"]))]
struct SynthScansArgs {
    /// Cohort CSV; one scan per record with a scan id [default: none].
    #[arg(long)]
    cohort: Option<PathBuf>,
    /// Instead of a cohort, this many auxiliary phantoms for network training [default: none].
    #[arg(long)]
    aux: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Scan spec JSON (see `lvo defaults scans`) [default: built-in spec].
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory (required).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    /// Directory written by `synth scans` (required).
    #[arg(long)]
    scans: PathBuf,
    /// Lower HU window bound.
    #[arg(long, default_value_t = 20)]
    window_lo: i16,
    /// Upper HU window bound.
    #[arg(long, default_value_t = 80)]
    window_hi: i16,
    /// Which hemisphere a weak side selects.
    #[arg(long, value_enum, default_value_t = LateralityArg::Contralateral)]
    laterality: LateralityArg,
    /// Output directory (required).
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LateralityArg {
    Contralateral,
    Ipsilateral,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LossArg {
    Bce,
    BceDice,
}

#[derive(Args, Debug)]
struct TrainFcnArgs {
    /// Directory written by `synth scans` (masks) (required).
    #[arg(long)]
    scans: PathBuf,
    /// Directory written by `preprocess` for the same scans (required).
    #[arg(long)]
    prep: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    epochs: usize,
    #[arg(long, default_value_t = 5e-3)]
    lr: f64,
    #[arg(long, default_value_t = 4)]
    batch: usize,
    /// Side of the square training windows.
    #[arg(long, default_value_t = 32)]
    patch: usize,
    /// Training windows cut from each scan.
    #[arg(long, default_value_t = 4)]
    patches_per_crop: usize,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    optimizer: OptimizerArg,
    #[arg(long, value_enum, default_value_t = LossArg::BceDice)]
    loss: LossArg,
    /// Channels of the first encoder stage.
    #[arg(long, default_value_t = 8)]
    base_channels: usize,
    /// Encoder stages.
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Output fcn-v1 model path (required).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// fcn-v1 model written by `train-fcn` (required).
    #[arg(long)]
    model: PathBuf,
    /// Directory written by `preprocess` (required).
    #[arg(long)]
    prep: PathBuf,
    /// Minimum segmented component area for a dot flag, in pixels.
    #[arg(long, default_value_t = lvo_fcn::DEFAULT_AREA_THRESHOLD)]
    area_threshold: f64,
    /// Output feature file (required).
    #[arg(long)]
    out: PathBuf,
    /// Per-scan segmentation summary JSON [default: none].
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Cohort CSV (required).
    #[arg(long)]
    cohort: PathBuf,
    /// Feature file from `extract`, keyed by scan id; needed for level 3 [default: none].
    #[arg(long)]
    features: Option<PathBuf>,
    /// exp-v1 experiment config (see `lvo defaults experiment`) [default: built-in config].
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces the config's seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory (required).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Cohort CSV used for `train` (required).
    #[arg(long)]
    cohort: PathBuf,
    /// Feature file used for `train` [default: none].
    #[arg(long)]
    features: Option<PathBuf>,
    /// Directory written by `train` (required).
    #[arg(long)]
    fit: PathBuf,
    /// Output report-v1 JSON (required).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// report-v1 JSON written by `evaluate` (required).
    #[arg(long)]
    report: PathBuf,
    /// Output directory for report.csv and roc.svg (required).
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DefaultsKind {
    Cohort,
    Scans,
    Experiment,
}

#[derive(Args, Debug)]
struct DefaultsArgs {
    #[arg(value_enum)]
    kind: DefaultsKind,
}

fn init_threads() -> anyhow::Result<()> {
    let n = match std::env::var("LVO_PIPELINE_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| exit::ValidationError(format!("LVO_PIPELINE_THREADS={v:?} is not a count")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads()?;
    let v = cli.verbose;
    match cli.command {
        Command::Synth(SynthCommand::Cohort(a)) => stages::synth_cohort(&a, v),
        Command::Synth(SynthCommand::Scans(a)) => stages::synth_scans(&a, v),
        Command::Preprocess(a) => stages::preprocess(&a, v),
        Command::TrainFcn(a) => stages::train_fcn(&a, v),
        Command::Extract(a) => stages::extract(&a, v),
        Command::Train(a) => stages::train(&a, v),
        Command::Evaluate(a) => stages::evaluate(&a, v),
        Command::Report(a) => stages::report(&a, v),
        Command::Defaults(a) => stages::defaults(a.kind),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(exit::USAGE as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::classify(&e) as u8)
        }
    }
}
