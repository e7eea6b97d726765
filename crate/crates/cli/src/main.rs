mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use jtv_fbank::Error;

#[derive(Parser)]
#[command(name = "jtv-fbank", version, about = "Oversampled joint time-vertex filter banks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtendMode {
    Kcolor,
    DoubleCover,
    Ring,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Oversampled,
    Critical,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillArg {
    Zero,
    Copy,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestrictArg {
    Take,
    Average,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    Hard,
    Soft,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalSource {
    Random,
    File,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetArg {
    LowTemp,
    HighTemp,
    LowPerm,
    HighPerm,
}

#[derive(Subcommand)]
enum Command {
    /// Build a bipartite oversampled extension of a graph.
    Extend(ExtendArgs),
    /// Analyze and resynthesize a joint signal and report the error.
    Roundtrip(RoundtripArgs),
    /// Add noise to a joint signal, image pair or video and denoise it.
    Denoise(DenoiseArgs),
    /// Run an SEIRS epidemic and write the infectious fractions.
    Simulate(SimulateArgs),
}

#[derive(clap::Args, Serialize)]
pub struct ExtendArgs {
    /// Edge list file.
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value = "kcolor")]
    pub mode: ExtendMode,
    /// Number of color classes on the low side (kcolor mode); defaults to ceil(K/2).
    #[arg(long)]
    pub split: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub vertical_weight: f64,
    /// Writes PREFIX.edges, PREFIX.json and PREFIX.manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Serialize)]
pub struct RoundtripArgs {
    /// Edge list file for the vertex graph.
    pub graph: PathBuf,
    /// Number of time samples (ring length).
    #[arg(long)]
    pub time_length: usize,
    #[arg(long, value_enum, default_value = "oversampled")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "zero")]
    pub fill: FillArg,
    #[arg(long, value_enum, default_value = "random")]
    pub signal: SignalSource,
    /// CSV signal used with `--signal file`.
    #[arg(long)]
    pub signal_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use the two-term reconstruction instead of the four-subband cascade.
    #[arg(long)]
    pub literal: bool,
    /// Also write the four subbands to this directory (cascade only).
    #[arg(long)]
    pub dump_subbands: Option<PathBuf>,
    /// Metrics JSON path; a manifest is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Serialize)]
pub struct DenoiseArgs {
    /// Clean CSV signal (rows are vertices, columns are time samples).
    #[arg(long, conflicts_with_all = ["images", "video"])]
    pub signal: Option<PathBuf>,
    /// Vertex graph edge list for `--signal`.
    #[arg(long, conflicts_with = "grid")]
    pub graph: Option<PathBuf>,
    /// Grid vertex graph ROWSxCOLS for `--signal`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Two PGM images blended into `--frames` frames.
    #[arg(long, num_args = 2, value_names = ["A", "B"], conflicts_with = "video")]
    pub images: Option<Vec<PathBuf>>,
    #[arg(long, default_value_t = 9)]
    pub frames: usize,
    /// Directory of PGM frames, read in file-name order.
    #[arg(long)]
    pub video: Option<PathBuf>,
    /// Side length frames are resized to.
    #[arg(long, default_value_t = 35)]
    pub side: usize,
    /// Grid connectivity for `--grid`, `--images` and `--video`.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(4..=8))]
    pub connectivity: u32,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Threshold; defaults to 3 sigma.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_enum, default_value = "hard")]
    pub rule: RuleArg,
    /// Threshold the low-low subband as well.
    #[arg(long)]
    pub no_protect_ll: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "oversampled")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "copy")]
    pub fill: FillArg,
    /// Defaults to average for copy fill, take for zero fill.
    #[arg(long, value_enum)]
    pub restrict: Option<RestrictArg>,
    /// Run oversampled and critical modes with the same threshold.
    #[arg(long)]
    pub compare: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(clap::Args, Serialize)]
pub struct SimulateArgs {
    /// Edge list file.
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value = "low-temp")]
    pub preset: PresetArg,
    /// TOML file with any of: beta, te, ti, tr, pop_per_node, t_steps, patient_zero.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub te: Option<f64>,
    #[arg(long)]
    pub ti: Option<f64>,
    /// Immunity period in days, or `inf`.
    #[arg(long)]
    pub tr: Option<f64>,
    #[arg(long)]
    pub pop_per_node: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub patient_zero: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; a manifest is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("JTV_FBANK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidParameter(format!("JTV_FBANK_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Extend(a) => commands::extend(&a),
        Command::Roundtrip(a) => commands::roundtrip(&a),
        Command::Denoise(a) => commands::denoise(&a),
        Command::Simulate(a) => commands::simulate(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
