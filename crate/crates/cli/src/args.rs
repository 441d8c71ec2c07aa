use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Seed used wherever randomness exists and `--seed` is not given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "hybridcast",
    version,
    about = "Univariate forecasting with ARIMA, SARIMA, ETS and LSTM models"
)]
pub struct Cli {
    /// TOML file with default flag values; keys are long flag names,
    /// at top level or in a table named after the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic dataset as CSV.
    Synth(SynthArgs),
    /// Apply a preprocessing pipeline to a CSV.
    Preprocess(PreprocessArgs),
    /// Fit a model and write it to a file.
    Fit(FitArgs),
    /// Forecast from a fitted model file.
    Forecast(ForecastArgs),
    /// Rank model specs by rolling-origin cross-validation.
    Compare(CompareArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Structured,
    Csv,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input CSV.
    #[arg(long = "in", value_name = "CSV")]
    pub input: PathBuf,
    #[arg(long, default_value = "timestamp")]
    pub timestamp_column: String,
    #[arg(long, default_value = "value")]
    pub value_column: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKindArg {
    Seasonal,
    Traffic,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "seasonal")]
    pub kind: SynthKindArg,
    #[arg(long, default_value_t = 240)]
    pub n: usize,
    /// Season length; traffic series default to 7.
    #[arg(long)]
    pub period: Option<usize>,
    /// Noise standard deviation.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Number of injected spikes (traffic only).
    #[arg(long)]
    pub spikes: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `csv` writes the series; `structured` adds the spike positions.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Pipeline step, repeatable, e.g. `impute:forward_fill`, `log`,
    /// `difference:1`, `normalize:minmax`, `outliers:iqr`, or a JSON object.
    #[arg(long = "step", value_name = "STEP")]
    pub steps: Vec<String>,
    /// JSON file holding an array of steps, applied before any `--step`.
    #[arg(long, value_name = "FILE")]
    pub pipeline: Option<PathBuf>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the transform records needed to invert the pipeline.
    #[arg(long, value_name = "FILE")]
    pub records_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Arima,
    Sarima,
    Ets,
    Lstm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrendArg {
    None,
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeasonalArg {
    None,
    Additive,
    Multiplicative,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// Model family; ignored when `--spec` is given.
    #[arg(long, value_enum, required_unless_present = "spec")]
    pub family: Option<FamilyArg>,
    /// JSON file with a full model spec.
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,

    #[arg(long, default_value_t = 1)]
    pub p: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long = "seasonal-p", default_value_t = 1)]
    pub seasonal_p: usize,
    #[arg(long = "seasonal-d", default_value_t = 1)]
    pub seasonal_d: usize,
    #[arg(long = "seasonal-q", default_value_t = 1)]
    pub seasonal_q: usize,
    /// Season length for SARIMA, seasonal ETS and the LSTM window default.
    #[arg(long)]
    pub period: Option<usize>,
    /// Force the ARIMA intercept on or off.
    #[arg(long)]
    pub intercept: Option<bool>,

    #[arg(long, value_enum, default_value = "none")]
    pub trend: TrendArg,
    #[arg(long, value_enum, default_value = "none")]
    pub seasonal: SeasonalArg,
    /// Hold the ETS level smoothing parameter fixed.
    #[arg(long)]
    pub alpha: Option<f64>,

    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub hidden_units: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,

    /// Preprocessing step applied before fitting, repeatable; same syntax as `preprocess --step`.
    #[arg(long = "preprocess", value_name = "STEP")]
    pub preprocess: Vec<String>,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Where to write the fitted model.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Fitted model file written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 12)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// JSON array of model specs, or TOML with a `specs` array of tables.
    #[arg(long, value_name = "FILE")]
    pub specs: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 12)]
    pub horizon: usize,
    /// Overrides the seed of every ARIMA and LSTM spec.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "HYBRIDCAST_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, env = "HYBRIDCAST_HOST", default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "HYBRIDCAST_DATA_DIR", default_value = "hybridcast-data")]
    pub data_dir: PathBuf,
    #[arg(long, default_value_t = hybridcast_service::DEFAULT_WORKERS)]
    pub workers: usize,
    #[arg(long, default_value_t = hybridcast_service::DEFAULT_MAX_UPLOAD_BYTES)]
    pub max_upload_bytes: usize,
}
