//! `cellplan` command-line tool.
//!
//! Exit status: 0 on success, 1 for usage or input errors, 2 for internal
//! failures (unwritable outputs, panics).

mod commands;
mod project;

use std::fmt;
use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<cellplan::Error> for CliError {
    fn from(e: cellplan::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "cellplan", version, about = "5G NR cell planning and drive-test analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a link budget: EIRP, required SINR, sensitivity, MAPL and required NRSRP.
    Budget(BudgetArgs),
    /// Predict best-beam NRSRP over the study area and classify it into bands.
    Predict(PredictArgs),
    /// Validate a scanner CSV, report rejected rows and write a cleaned log.
    Ingest(IngestArgs),
    /// Lee local-mean filtering of a drive log into envelope and residual series.
    Lee(LeeArgs),
    /// Compare a predicted NRSRP raster against a measured envelope.
    Compare(CompareArgs),
    /// Fit per-clutter loss offsets to a measured envelope.
    Tune(TuneArgs),
    /// Summary statistics of UE speed-test results.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Budget JSON; defaults to the project's budget.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Project JSON whose `budget` entry names the budget file.
    #[arg(long)]
    pub project: Option<PathBuf>,
    /// Override the target throughput, Mbps.
    #[arg(long)]
    pub throughput: Option<f64>,
    /// Also write the evaluated result as JSON here.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Study-area inputs, given individually or through a project file.
#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Project JSON naming the DTM, clutter and site files; explicit flags override it.
    #[arg(long)]
    pub project: Option<PathBuf>,
    /// DTM raster (ESRI ASCII, meters).
    #[arg(long)]
    pub dtm: Option<PathBuf>,
    /// Clutter class raster (ESRI ASCII, class ids).
    #[arg(long)]
    pub clutter: Option<PathBuf>,
    /// Site JSON: carrier, sectors and clutter table.
    #[arg(long)]
    pub sites: Option<PathBuf>,
    /// UE height above ground, meters.
    #[arg(long, default_value_t = cellplan::propagation::DEFAULT_UE_HEIGHT_M)]
    pub ue_height: f64,
    /// Apply each clutter class's indoor extra loss.
    #[arg(long)]
    pub indoor: bool,
    /// Prediction worker threads (0 = all cores).
    #[arg(long, env = "CELLPLAN_THREADS", default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    /// Output directory; defaults to the project's, else the current directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Band thresholds in dBm, strictly increasing (comma separated).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub thresholds: Option<Vec<f64>>,
    /// Also render coverage.ppm.
    #[arg(long)]
    pub ppm: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Scanner CSV: timestamp_ms,lat,lon,beam_index,nrsrp_dbm,nrsrq_db.
    #[arg(long)]
    pub input: PathBuf,
    /// Write the validated, time-sorted log here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LeeArgs {
    /// Carrier frequency, MHz.
    #[arg(long, default_value_t = 3500.0)]
    pub freq: f64,
    /// Averaging window 2L in wavelengths.
    #[arg(long, default_value_t = 40.0)]
    pub window_wavelengths: f64,
    /// Sample spacing d in wavelengths.
    #[arg(long, default_value_t = 0.8)]
    pub spacing_wavelengths: f64,
    /// Minimum samples per averaging window.
    #[arg(long, default_value_t = 36)]
    pub min_samples: usize,
    /// Scanner CSV to filter; without it only the parameters are printed.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Use a single SSB beam instead of the best beam per position.
    #[arg(long)]
    pub beam: Option<u8>,
    /// Segment length for the fast-fading spread report, meters.
    #[arg(long, default_value_t = cellplan::drive_test::DEFAULT_SEGMENT_M)]
    pub segment_m: f64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Predicted NRSRP raster.
    #[arg(long)]
    pub prediction: PathBuf,
    /// Envelope CSV: distance_m,lat,lon,nrsrp_dbm.
    #[arg(long)]
    pub envelope: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    /// Envelope CSV: distance_m,lat,lon,nrsrp_dbm.
    #[arg(long)]
    pub envelope: PathBuf,
    /// Classes with fewer points keep their current loss.
    #[arg(long, default_value_t = cellplan::calibrate::DEFAULT_MIN_POINTS_PER_CLASS)]
    pub min_points: usize,
    /// Offsets JSON output.
    #[arg(long, default_value = "offsets.json")]
    pub out: PathBuf,
    /// Write the site JSON with the tuned clutter table here.
    #[arg(long)]
    pub tuned_sites: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// UE test CSV: dl_mbps,ul_mbps,latency_ms,nrsrp_dbm.
    #[arg(long)]
    pub input: PathBuf,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Budget(a) => commands::budget(a),
        Command::Predict(a) => commands::predict(a),
        Command::Ingest(a) => commands::ingest(a),
        Command::Lee(a) => commands::lee(a),
        Command::Compare(a) => commands::compare(a),
        Command::Tune(a) => commands::tune(a),
        Command::Stats(a) => commands::stats(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    panic::set_hook(Box::new(|info| eprintln!("internal error: {info}")));
    match panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(2),
    }
}
