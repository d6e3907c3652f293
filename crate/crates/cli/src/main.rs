//! `amsad`: simulate, inject, featurize, fit, detect and evaluate from the
//! command line. Exit codes: 0 success, 1 usage error, 2 runtime error.
//! Runtime errors are written to stderr as one JSON object.

mod commands;
mod overlay;

use std::path::PathBuf;
use std::process::ExitCode;

use ams_anomaly::bench::{Analysis, Circuit, Experiment};
use ams_anomaly::centroid::SigmaSource;
use ams_anomaly::cluster::Algorithm;
use ams_anomaly::features::FeatureSelection;
use ams_anomaly::waveforms::SignalKind;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

#[derive(Debug, Parser)]
#[command(
    name = "amsad",
    version,
    about = "Unsupervised anomaly detection for analog/mixed-signal circuit signals"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Base RNG seed (unsigned 64-bit); overrides the `seed` config key
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory; every file a command writes goes here
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// TOML config: an experiment for most commands, a suite for `suite`
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a balanced dataset; writes labels.csv and waveforms/<signal>/<id>.csv
    Simulate(ExperimentArgs),
    /// Inject point anomalies into one waveform CSV; writes injected.csv and injections.csv
    Inject(InjectArgs),
    /// Simulate and extract raw features; writes features.csv
    Featurize(ExperimentArgs),
    /// Fit a 2-cluster model on the first observed signal; writes model.json
    Fit(FitArgs),
    /// Refine a model's centroids on a feature CSV; writes model.json and centroids.json
    SelectCentroids(SelectArgs),
    /// Windowed detection on waveform CSVs; writes detections.csv
    Detect(DetectArgs),
    /// Evaluate one experiment; writes report.csv and report.txt
    Experiment(ExperimentArgs),
    /// Evaluate every entry of the suite given by --config; writes report.csv and report.txt
    Suite,
    /// Merge report CSVs; writes report.csv and summary.csv
    Report(ReportArgs),
}

/// Flags that override keys of the experiment config.
#[derive(Debug, Clone, Default, Args)]
struct ExperimentArgs {
    /// Experiment id, e.g. TA, IPTRA, OmPfet, ParFault, KStage
    #[arg(long, value_name = "ID", value_parser = parse_serde::<Experiment>)]
    experiment: Option<Experiment>,
    /// Circuit: vref_blocks, vref_components, opamp or kstage
    #[arg(long, value_name = "NAME", value_parser = parse_serde::<Circuit>)]
    circuit: Option<Circuit>,
    /// Clustering algorithm: kmeans, gmm, birch or spectral
    #[arg(long, value_name = "NAME", value_parser = parse_str::<Algorithm>)]
    algorithm: Option<Algorithm>,
    /// Comma-separated features (mean, variance, slope) or `all`
    #[arg(long, value_name = "LIST", value_parser = parse_str::<FeatureSelection>)]
    features: Option<FeatureSelection>,
    /// Comma-separated observed reference-chain signals: input, pll_frequency, pll_intensity, trig, output
    #[arg(long, value_name = "LIST", value_delimiter = ',', value_parser = parse_str::<SignalKind>)]
    signals: Vec<SignalKind>,
    /// Equal windows per signal (count); omit for whole-signal features
    #[arg(long, value_name = "K")]
    window_k: Option<usize>,
    /// Signals per class (count)
    #[arg(long, value_name = "N")]
    n_per_class: Option<usize>,
    /// Samples per signal (count)
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
    /// Transient duration (seconds)
    #[arg(long, value_name = "SECONDS")]
    duration: Option<f64>,
    /// Component-level stimulus: transient, dc_input or dc_temp
    #[arg(long, value_name = "NAME", value_parser = parse_serde::<Analysis>)]
    analysis: Option<Analysis>,
    /// Also apply centroid selection
    #[arg(long)]
    centroid_select: bool,
    /// Spread used by centroid selection: global or cluster
    #[arg(long, value_name = "NAME", value_parser = parse_serde::<SigmaSource>)]
    sigma_source: Option<SigmaSource>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InjectPattern {
    Random,
    Periodic,
}

#[derive(Debug, Args)]
struct InjectArgs {
    /// Waveform CSV with columns t (seconds), value (volts)
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Injection pattern
    #[arg(long, value_enum, default_value = "random")]
    pattern: InjectPattern,
    /// Random pattern: share of samples to replace (percent, 0 < r <= 100)
    #[arg(long, value_name = "PERCENT", default_value_t = 0.5)]
    rate: f64,
    /// Random pattern: lowest spike magnitude (multiple of max |w|)
    #[arg(long, value_name = "MULT", default_value_t = 2.0)]
    amp_low: f64,
    /// Random pattern: highest spike magnitude (multiple of max |w|)
    #[arg(long, value_name = "MULT", default_value_t = 5.0)]
    amp_high: f64,
    /// Periodic pattern: samples at or above this share of max(w) are raised (fraction)
    #[arg(long, value_name = "FRACTION", default_value_t = 0.9)]
    threshold: f64,
    /// Periodic pattern: raise by this share of max(w) (fraction)
    #[arg(long, value_name = "FRACTION", default_value_t = 0.1)]
    delta: f64,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Fit on a features.csv instead of simulating; features and window_k describe its columns
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Cluster reported as anomalous (0 or 1); default is the minority training cluster
    #[arg(long, value_name = "INDEX")]
    anomalous_cluster: Option<usize>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    /// Model JSON written by `fit`
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Raw feature CSV written by `featurize`
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Spread used by centroid selection: global or cluster
    #[arg(long, value_name = "NAME", value_parser = parse_serde::<SigmaSource>, default_value = "global")]
    sigma_source: SigmaSource,
    /// Cluster reported as anomalous (0 or 1); default is the minority cluster after the refit
    #[arg(long, value_name = "INDEX")]
    anomalous_cluster: Option<usize>,
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// Model JSON written by `fit` or `select-centroids`
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Waveform CSVs (t in seconds, value in volts); sample ids follow argument order
    #[arg(long, value_name = "FILE", required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Equal windows per signal (count); defaults to the model's training windows
    #[arg(long, value_name = "K")]
    windows: Option<usize>,
    /// Stop at the first anomalous window
    #[arg(long)]
    early_stop: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Report CSVs written by `experiment` or `suite`
    #[arg(long, value_name = "FILE", required = true, num_args = 1..)]
    input: Vec<PathBuf>,
}

fn parse_str<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

fn parse_serde<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = serde_json::json!({ "error": e.to_string(), "key": e.key() });
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
