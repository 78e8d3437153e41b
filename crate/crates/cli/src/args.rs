use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use irradiance_core::nn::HeadKind;

#[derive(Debug, Parser)]
#[command(name = "irradiance", version, about = "Multi-horizon probabilistic solar irradiance forecasting")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Flat `key = value` file; keys are long flag names, flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic hourly dataset.
    Synth(SynthArgs),
    /// Train a forecasting model and write a checkpoint.
    Train(TrainArgs),
    /// Score checkpoints and baselines on the test year.
    Eval(EvalArgs),
    /// Forecast the next hours from the latest window of data.
    Forecast(ForecastArgs),
}

fn latitude(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(-90.0..=90.0).contains(&v) {
        return Err(format!("latitude {v} outside [-90, 90]"));
    }
    Ok(v)
}

fn head(s: &str) -> Result<HeadKind, String> {
    s.parse::<HeadKind>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 5)]
    pub years: u32,
    /// Site latitude in degrees.
    #[arg(long, default_value_t = 60.0, value_parser = latitude, allow_negative_numbers = true)]
    pub lat: f64,
    /// Day-to-day cloud persistence.
    #[arg(long, default_value_t = 0.7)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.2)]
    pub cloud_floor: f64,
    #[arg(long, default_value_t = 2016)]
    pub start_year: i32,
    /// File name inside the output directory.
    #[arg(long, default_value = "dataset.csv")]
    pub file: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackboneArg {
    Lstm,
    /// Single-station MLP over the target channel and time embeddings.
    Mlp,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// det, qr, mle-g, mle-jsu, mle-jsb or mle-w.
    #[arg(long, default_value = "det", value_parser = head)]
    pub head: HeadKind,
    #[arg(long, value_enum, default_value_t = BackboneArg::Lstm)]
    pub backbone: BackboneArg,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 128)]
    pub hidden: usize,
    /// Input window in hours.
    #[arg(long, default_value_t = 72)]
    pub window: usize,
    #[arg(long, default_value_t = 36)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 20)]
    pub patience: usize,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Comma-separated quantile levels for the qr head.
    #[arg(long)]
    pub quantiles: Option<String>,
    /// Comma-separated input feature names (default: all).
    #[arg(long)]
    pub features: Option<String>,
    #[arg(long)]
    pub no_inject: bool,
    #[arg(long)]
    pub sort_quantiles: bool,
    #[arg(long)]
    pub freeze_alpha: bool,
    #[arg(long)]
    pub no_ace_guard: bool,
    /// Defaults to the last year in the data.
    #[arg(long)]
    pub test_year: Option<i32>,
    /// Defaults to the year before the test year.
    #[arg(long)]
    pub val_year: Option<i32>,
    /// Hours between consecutive training windows.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Site latitude, kept for clear-sky forecasts.
    #[arg(long, default_value_t = 60.0, value_parser = latitude, allow_negative_numbers = true)]
    pub lat: f64,
    /// Base name of the checkpoint and training log.
    #[arg(long, default_value = "model")]
    pub name: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint to score; repeat for several.
    #[arg(long = "checkpoint", required = true)]
    pub checkpoints: Vec<PathBuf>,
    /// Adds a baseline row (smart-persistence).
    #[arg(long, value_parser = ["smart-persistence"])]
    pub baseline: Vec<String>,
    /// Score only hours with positive clear sky.
    #[arg(long)]
    pub daylight_only: bool,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Comma-separated nominal coverages.
    #[arg(long)]
    pub coverages: Option<String>,
    /// Defaults to the test year stored in the first checkpoint.
    #[arg(long)]
    pub test_year: Option<i32>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Recent data; the last `window` rows are used.
    #[arg(long)]
    pub data: PathBuf,
    /// Defaults to the latitude stored in the checkpoint.
    #[arg(long, value_parser = latitude, allow_negative_numbers = true)]
    pub lat: Option<f64>,
    #[arg(long, default_value = "forecast.csv")]
    pub file: String,
}
