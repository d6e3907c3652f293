//! Config files with command-line overrides applied key by key.

use std::path::Path;

use ams_anomaly::bench::ExperimentConfig;
use ams_anomaly::centroid::SigmaSource;
use ams_anomaly::cluster::{Algorithm, ClusterOptions};
use ams_anomaly::features::FeatureSelection;
use ams_anomaly::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::ExperimentArgs;

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// The config file as a table (empty without one), with every flag that
/// was given written over its key.
pub fn table(config: Option<&Path>, seed: Option<u64>, args: &ExperimentArgs) -> Result<toml::Table> {
    let mut t: toml::Table = match config {
        Some(path) => toml::from_str(&read_text(path)?)?,
        None => toml::Table::new(),
    };
    put(&mut t, "experiment", args.experiment)?;
    put(&mut t, "circuit", args.circuit)?;
    put(&mut t, "algorithm", args.algorithm)?;
    put(&mut t, "features", args.features.clone())?;
    put(&mut t, "signals", (!args.signals.is_empty()).then(|| args.signals.clone()))?;
    put(&mut t, "window_k", args.window_k)?;
    put(&mut t, "n_samples_per_class", args.n_per_class)?;
    put(&mut t, "n_samples", args.samples)?;
    put(&mut t, "duration", args.duration)?;
    put(&mut t, "analysis", args.analysis)?;
    put(&mut t, "centroid_select", args.centroid_select.then_some(true))?;
    put(&mut t, "sigma_source", args.sigma_source)?;
    put(&mut t, "seed", seed)?;
    Ok(t)
}

fn put<T: Serialize>(t: &mut toml::Table, key: &str, value: Option<T>) -> Result<()> {
    if let Some(v) = value {
        let v = toml::Value::try_from(v).map_err(|e| Error::config(key, e.to_string()))?;
        t.insert(key.to_string(), v);
    }
    Ok(())
}

pub fn experiment(config: Option<&Path>, seed: Option<u64>, args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let t = table(config, seed, args)?;
    for key in ["experiment", "circuit"] {
        if !t.contains_key(key) {
            return Err(Error::config(key, format!("set `{key}` in --config or pass --{key}")));
        }
    }
    let cfg: ExperimentConfig = t.try_into()?;
    cfg.validate()?;
    Ok(cfg)
}

/// The keys `fit` reads when training rows come from a file. Other keys
/// of a full experiment config are ignored.
#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct FitKeys {
    pub features: FeatureSelection,
    pub window_k: Option<usize>,
    pub algorithm: Algorithm,
    pub cluster: ClusterOptions,
    pub seed: Option<u64>,
    pub centroid_select: bool,
    pub sigma_source: SigmaSource,
}

impl Default for FitKeys {
    fn default() -> Self {
        FitKeys {
            features: FeatureSelection::all(),
            window_k: None,
            algorithm: Algorithm::Gmm,
            cluster: ClusterOptions::default(),
            seed: None,
            centroid_select: false,
            sigma_source: SigmaSource::Global,
        }
    }
}

impl FitKeys {
    pub fn from_table(t: toml::Table) -> Result<Self> {
        Ok(t.try_into()?)
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        FitKeys {
            features: cfg.features.clone(),
            window_k: cfg.window_k,
            algorithm: cfg.algorithm,
            cluster: cfg.cluster,
            seed: cfg.seed,
            centroid_select: cfg.centroid_select,
            sigma_source: cfg.sigma_source,
        }
    }
}
