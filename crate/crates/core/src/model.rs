//! Versioned JSON model files for fit-once, detect-later flows.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::centroid::CentroidSelection;
use crate::cluster::ClusterModel;
use crate::earlydetect::{detect_windowed, DetectionResult, WindowTiming};
use crate::features::{extract_features, windowed_features, FeatureSelection, NormalizationParams};
use crate::waveforms::Waveform;
use crate::{Error, Result};

pub const MODEL_FILE_VERSION: u32 = 1;

/// A fitted model with everything needed to score new signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    /// Model used for assignment. With centroid selection this is the
    /// nearest-centroid refit.
    pub model: ClusterModel,
    pub normalization: NormalizationParams,
    pub features: FeatureSelection,
    /// Windows per signal used for the training rows, if any.
    pub window_k: Option<usize>,
    /// Cluster reported as anomalous.
    pub anomalous_cluster: usize,
    #[serde(default)]
    pub centroid_selection: Option<CentroidSelection>,
}

impl ModelFile {
    pub fn new(
        model: ClusterModel,
        normalization: NormalizationParams,
        features: FeatureSelection,
        window_k: Option<usize>,
        anomalous_cluster: usize,
    ) -> Result<Self> {
        if anomalous_cluster > 1 {
            return Err(Error::config("anomalous_cluster", "must be 0 or 1"));
        }
        if normalization.dim() != model.dim {
            return Err(Error::Input(format!(
                "normalization has {} dimensions, model has {}",
                normalization.dim(),
                model.dim
            )));
        }
        Ok(ModelFile {
            version: MODEL_FILE_VERSION,
            model,
            normalization,
            features,
            window_k,
            anomalous_cluster,
            centroid_selection: None,
        })
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// Parses a model file, rejecting any version other than the current one.
    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_reader(input)?;
        let version = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Input("model file has no version".into()))?;
        if version != MODEL_FILE_VERSION as u64 {
            return Err(Error::ModelVersion(u32::try_from(version).unwrap_or(u32::MAX)));
        }
        Ok(serde_json::from_value(value)?)
    }

    /// Normalized feature rows for one signal: one row per window, or a
    /// single row when `windows` is `None`.
    pub fn feature_rows(&self, signal: &Waveform, windows: Option<usize>) -> Result<Vec<Vec<f64>>> {
        let raw = match windows {
            Some(k) => windowed_features(signal, k, &self.features)?,
            None => vec![extract_features(signal, &self.features)?],
        };
        raw.iter().map(|r| self.normalization.apply(r)).collect()
    }

    /// Windowed detection on one signal.
    pub fn detect(&self, signal: &Waveform, windows: usize, stop_early: bool) -> Result<DetectionResult> {
        let rows = self.feature_rows(signal, Some(windows))?;
        let timing = WindowTiming::new(signal.len(), windows, signal.sample_period())?;
        detect_windowed(&self.model, &rows, stop_early, timing, self.anomalous_cluster)
    }
}
