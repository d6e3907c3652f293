//! Windowed detection: classify a signal from its first `m` of `k` windows.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterModel;
use crate::{Error, Result};

/// Window timing: `samples_per_window · sample_period` seconds per window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowTiming {
    pub samples_per_window: usize,
    pub sample_period: f64,
}

impl WindowTiming {
    /// Timing for `n` samples split into `k` windows.
    pub fn new(n: usize, k: usize, sample_period: f64) -> Result<Self> {
        if k == 0 || !n.is_multiple_of(k) {
            return Err(Error::Window { len: n, windows: k });
        }
        Ok(WindowTiming {
            samples_per_window: n / k,
            sample_period,
        })
    }

    /// Time to observe `m` windows. Computed as one product so that the
    /// result is exact whenever the arithmetic allows it.
    pub fn latency(&self, m: usize) -> f64 {
        (m * self.samples_per_window) as f64 * self.sample_period
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub per_window_assignment: Vec<usize>,
    /// 0-based index of the first window assigned to the anomalous cluster.
    pub first_anomalous_window: Option<usize>,
    /// Windows consumed before the verdict.
    pub windows_consumed: usize,
    pub total_windows: usize,
    pub latency_seconds: f64,
    pub speedup_factor: f64,
}

impl DetectionResult {
    pub fn is_anomalous(&self) -> bool {
        self.first_anomalous_window.is_some()
    }
}

/// Assigns windows in order. With `stop_early`, stops at the first window
/// in `anomalous_cluster`; the signal is anomalous iff any consumed window is.
pub fn detect_windowed(
    model: &ClusterModel,
    windows: &[Vec<f64>],
    stop_early: bool,
    timing: WindowTiming,
    anomalous_cluster: usize,
) -> Result<DetectionResult> {
    if windows.is_empty() {
        return Err(Error::Input("no windows to detect on".into()));
    }
    if anomalous_cluster > 1 {
        return Err(Error::Input(format!("anomalous cluster {anomalous_cluster} is not 0 or 1")));
    }
    let k = windows.len();
    let mut assigned = Vec::with_capacity(k);
    let mut first = None;
    for (i, w) in windows.iter().enumerate() {
        let c = model.assign(w)?;
        assigned.push(c);
        if c == anomalous_cluster && first.is_none() {
            first = Some(i);
            if stop_early {
                break;
            }
        }
    }
    let m = assigned.len();
    let speedup = match first {
        Some(i) => k as f64 / (i + 1) as f64,
        None => 1.0,
    };
    Ok(DetectionResult {
        per_window_assignment: assigned,
        first_anomalous_window: first,
        windows_consumed: m,
        total_windows: k,
        latency_seconds: timing.latency(m),
        speedup_factor: speedup,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub mean_latency_seconds: f64,
    pub mean_speedup: f64,
    pub detection_rate: f64,
}

pub fn latency_report(results: &[DetectionResult]) -> Result<LatencySummary> {
    if results.is_empty() {
        return Err(Error::Input("no detection results".into()));
    }
    let n = results.len() as f64;
    Ok(LatencySummary {
        mean_latency_seconds: results.iter().map(|r| r.latency_seconds).sum::<f64>() / n,
        mean_speedup: results.iter().map(|r| r.speedup_factor).sum::<f64>() / n,
        detection_rate: results.iter().filter(|r| r.is_anomalous()).count() as f64 / n,
    })
}

/// Writes `sample_id,first_window,m,latency_s,speedup`; `first_window` is
/// 1-based and empty for clean signals.
pub fn write_detections_csv<W: Write>(
    out: W,
    results: &[(u64, DetectionResult)],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample_id", "first_window", "m", "latency_s", "speedup"])?;
    for (id, r) in results {
        w.write_record([
            id.to_string(),
            r.first_anomalous_window.map_or(String::new(), |i| (i + 1).to_string()),
            r.windows_consumed.to_string(),
            format!("{:e}", r.latency_seconds),
            r.speedup_factor.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<detections>", e))?;
    Ok(())
}
