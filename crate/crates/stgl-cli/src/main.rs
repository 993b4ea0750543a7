//! Command-line front end for the graph-learning toolkit: generate
//! synthetic recordings, learn spatial/temporal graphs, run the
//! visibility-graph baseline, analyze learned graphs against labels, and
//! compare methods statistically.

mod manifest;
mod pipeline;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

const EXIT_CODE_HELP: &str = "\
EXIT CODES:
  0  success
  1  internal error (a bug; please report)
  2  command-line usage error
  3  file system error (missing, unreadable, or unwritable file)
  4  invalid input, parameter, or configuration
  5  numerical solver failure

Errors print a single line to standard error in the form
`error[<class>]: <message>` with class io, validation, solver, or
internal. Progress goes to standard error; data only to files.";

#[derive(Parser)]
#[command(
    name = "stgl",
    version,
    about = "Joint spatial/temporal graph learning over windowed multichannel recordings",
    after_help = EXIT_CODE_HELP
)]
pub struct Cli {
    /// Seed for every random choice made by the command
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for parallel spatial updates (jacobi sweep)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Key-value configuration file; command-line flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory (created if missing)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic recording with known ground-truth graphs
    Synth(SynthArgs),
    /// Learn per-window spatial graphs and a cross-window temporal graph
    Learn(LearnArgs),
    /// Classify labeled channels with the visibility-graph baseline
    Baseline(BaselineArgs),
    /// Score electrodes and summarize a finished learning run
    Analyze(AnalyzeArgs),
    /// Compare two metrics files with paired signed-rank tests
    Compare(CompareArgs),
}

#[derive(Args)]
pub struct SynthArgs {
    /// Synthesis spec file with a [synth] section; defaults to the stock
    /// two-regime experiment
    #[arg(long)]
    pub spec: Option<PathBuf>,

    /// Data format to emit: csv | binary
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Args)]
pub struct LearnArgs {
    /// Recording data file
    #[arg(long)]
    pub recording: PathBuf,

    /// Data format: csv | binary (default: binary iff extension is .stgl)
    #[arg(long)]
    pub format: Option<String>,

    /// Annotation sidecar (sample rate, onset, SOZ, bad channels)
    #[arg(long)]
    pub annotations: Option<PathBuf>,

    /// Mains notch frequency in Hz (enables preprocessing)
    #[arg(long)]
    pub notch_hz: Option<f64>,

    /// Bandpass lower edge in Hz
    #[arg(long)]
    pub band_low: Option<f64>,

    /// Bandpass upper edge in Hz
    #[arg(long)]
    pub band_high: Option<f64>,

    /// Decimation target rate in Hz (must divide the sample rate)
    #[arg(long)]
    pub target_rate: Option<f64>,

    /// Window length in milliseconds [default: 512]
    #[arg(long)]
    pub window_ms: Option<f64>,

    /// Window overlap fraction in [0, 1) [default: 0.5]
    #[arg(long)]
    pub overlap: Option<f64>,

    /// Windows before the onset window [default: 3]
    #[arg(long)]
    pub n_pre: Option<usize>,

    /// Windows after the onset window [default: 9]
    #[arg(long)]
    pub n_post: Option<usize>,

    /// Laplacian regularization weight [default: 0.5]
    #[arg(long)]
    pub beta: Option<f64>,

    /// Outer pass cap [default: 100]
    #[arg(long)]
    pub max_outer_iter: Option<usize>,

    /// Relative objective decrease counting as converged [default: 1e-6]
    #[arg(long)]
    pub outer_rel_tol: Option<f64>,

    /// Per-block optimality residual tolerance [default: 1e-7]
    #[arg(long)]
    pub kkt_tol: Option<f64>,

    /// Iteration cap per block solve [default: 5000]
    #[arg(long)]
    pub solver_max_iter: Option<usize>,

    /// Block sweep order: gauss-seidel | jacobi [default: gauss-seidel]
    #[arg(long)]
    pub sweep: Option<String>,

    /// Scale each window to unit mean pairwise distance [default: true]
    #[arg(long)]
    pub normalize_distances: Option<bool>,
}

#[derive(Args)]
pub struct BaselineArgs {
    /// Recording data file
    #[arg(long)]
    pub recording: PathBuf,

    /// Data format: csv | binary (default: binary iff extension is .stgl)
    #[arg(long)]
    pub format: Option<String>,

    /// Annotation sidecar (sample rate, onset, SOZ, bad channels)
    #[arg(long)]
    pub annotations: Option<PathBuf>,

    /// Mains notch frequency in Hz (enables preprocessing)
    #[arg(long)]
    pub notch_hz: Option<f64>,

    /// Bandpass lower edge in Hz
    #[arg(long)]
    pub band_low: Option<f64>,

    /// Bandpass upper edge in Hz
    #[arg(long)]
    pub band_high: Option<f64>,

    /// Decimation target rate in Hz (must divide the sample rate)
    #[arg(long)]
    pub target_rate: Option<f64>,

    /// Window length in milliseconds [default: 512]
    #[arg(long)]
    pub window_ms: Option<f64>,

    /// Window overlap fraction in [0, 1) [default: 0.5]
    #[arg(long)]
    pub overlap: Option<f64>,

    /// Windows before the onset window [default: 3]
    #[arg(long)]
    pub n_pre: Option<usize>,

    /// Windows after the onset window [default: 9]
    #[arg(long)]
    pub n_post: Option<usize>,

    /// Three comma-separated window indices for feature extraction
    /// (default: last pre-onset, onset, first post-onset)
    #[arg(long = "select-windows")]
    pub windows: Option<String>,

    /// Cross-validation fold count [default: 5]
    #[arg(long)]
    pub folds: Option<usize>,

    /// Explained-variance target for automatic PCA sizing [default: 0.95]
    #[arg(long)]
    pub variance_target: Option<f64>,

    /// Fixed PCA component count (overrides --variance-target)
    #[arg(long)]
    pub n_components: Option<usize>,

    /// Ridge strength of the logistic model [default: 0.1]
    #[arg(long)]
    pub l2: Option<f64>,

    /// Newton iteration cap [default: 200]
    #[arg(long)]
    pub max_iter: Option<usize>,

    /// Recording id used in metrics.csv (default: data file stem)
    #[arg(long)]
    pub id: Option<String>,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Output directory of a finished learn run
    #[arg(long)]
    pub learn_out: PathBuf,

    /// Annotation sidecar naming the clinically labeled channels
    #[arg(long)]
    pub annotations: PathBuf,

    /// Electrode score: weighted-degree | degree [default: weighted-degree]
    #[arg(long)]
    pub mode: Option<String>,

    /// Positive count for top-k classification (default: labeled count)
    #[arg(long)]
    pub k: Option<usize>,

    /// Fraction of electrodes forming each window's top set [default: 0.25]
    #[arg(long)]
    pub top_fraction: Option<f64>,

    /// Dominance denominator: group | top [default: group]
    #[arg(long)]
    pub dominance_normalization: Option<String>,

    /// Recording id used in metrics.csv (default: learn-out dir name)
    #[arg(long)]
    pub id: Option<String>,
}

#[derive(Args)]
pub struct CompareArgs {
    /// First method: metrics.csv or an output directory containing one
    #[arg(long)]
    pub a: PathBuf,

    /// Second method: metrics.csv or an output directory containing one
    #[arg(long)]
    pub b: PathBuf,

    /// Report file path [default: <out>/comparison.txt]
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    // A panic is a bug; report it as the internal error class on a
    // single line instead of a raw backtrace.
    std::panic::set_hook(Box::new(|_| {}));
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| pipeline::run(&cli)));
    match outcome {
        Ok(Ok(())) => {}
        Ok(Err(e)) => {
            eprintln!("error[{}]: {}", e.class.name(), e.message);
            std::process::exit(e.class.exit_code());
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unexpected panic".to_owned());
            let internal = pipeline::ErrorClass::Internal;
            eprintln!("error[{}]: {message}", internal.name());
            std::process::exit(internal.exit_code());
        }
    }
}
