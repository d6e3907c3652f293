use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::dataset::{featurize, simulate_dataset, Dataset};
use crate::centroid::{refit_with_centroids, select_centroids_nd};
use crate::cluster::{self, cluster_stats, ClusterModel};
use crate::earlydetect::{detect_windowed, WindowTiming};
use crate::features::{normalize_dataset, Feature, FeatureRow, FeatureSelection, Label};
use crate::{seed, Error, Result};

/// Confusion counts with "anomalous" as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_verdicts(labels: &[Label], flagged: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (l, &f) in labels.iter().zip(flagged) {
            match (l, f) {
                (Label::Anomalous, true) => c.tp += 1,
                (Label::Anomalous, false) => c.fn_ += 1,
                (Label::Normal, true) => c.fp += 1,
                (Label::Normal, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy_pct(&self) -> f64 {
        100.0 * (self.tp + self.tn) as f64 / self.total().max(1) as f64
    }

    /// Fraction of anomalous samples flagged.
    pub fn detect_rate(&self) -> f64 {
        let pos = self.tp + self.fn_;
        if pos == 0 {
            0.0
        } else {
            self.tp as f64 / pos as f64
        }
    }
}

/// Accuracy under the better of the two cluster-to-label mappings. Returns
/// the percentage, the cluster taken as anomalous (ties favor 1) and the
/// confusion counts under that mapping.
pub fn permutation_accuracy(labels: &[Label], assigned: &[usize]) -> Result<(f64, usize, Confusion)> {
    if labels.len() != assigned.len() || labels.is_empty() {
        return Err(Error::Input("labels and assignments must be non-empty and equal in length".into()));
    }
    let best = [1usize, 0]
        .into_iter()
        .map(|c| {
            let flagged: Vec<bool> = assigned.iter().map(|&a| a == c).collect();
            (c, Confusion::from_verdicts(labels, &flagged))
        })
        .max_by(|a, b| {
            (a.1.tp + a.1.tn)
                .cmp(&(b.1.tp + b.1.tn))
                .then(a.0.cmp(&b.0))
        })
        .expect("two candidates");
    Ok((best.1.accuracy_pct(), best.0, best.1))
}

/// The cluster holding fewer training rows; ties go to cluster 1.
pub fn minority_cluster(assigned: &[usize]) -> usize {
    let ones = assigned.iter().filter(|&&a| a == 1).count();
    if ones <= assigned.len() - ones {
        1
    } else {
        0
    }
}

/// One line of an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub circuit: String,
    pub algorithm: String,
    pub features: String,
    pub signals: String,
    pub window_k: Option<usize>,
    pub centroid_select: bool,
    pub accuracy_pct: f64,
    pub detect_rate: f64,
    pub mean_speedup: f64,
    pub seed: u64,
    pub confusion: Confusion,
    /// Cluster mapped to "anomalous" for scoring.
    pub anomalous_cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub name: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    /// Models are fit and scored on the same generated set.
    pub split: String,
    pub rows: Vec<ReportRow>,
}

/// Feature selections evaluated for a config: each feature alone, then all
/// selected features together when there are several.
pub fn feature_variants(selection: &FeatureSelection) -> Vec<FeatureSelection> {
    let mut out: Vec<FeatureSelection> = selection
        .features()
        .iter()
        .map(|&f: &Feature| FeatureSelection::single(f))
        .collect();
    if selection.len() > 1 {
        out.push(selection.clone());
    }
    out
}

/// Signal subsets evaluated: each signal alone, then all together.
pub fn signal_variants(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    if n > 1 {
        out.push((0..n).collect());
    }
    out
}

/// Scores `model` on normalized `rows`. Whole-signal rows are scored one
/// per signal; windowed rows are grouped per signal and a signal counts as
/// anomalous when any window lands in the anomalous cluster.
pub fn score(
    model: &ClusterModel,
    rows: &[FeatureRow],
    timing: Option<WindowTiming>,
) -> Result<(f64, usize, Confusion, f64)> {
    let Some(timing) = timing else {
        let points: Vec<Vec<f64>> = rows.iter().map(|r| r.values.clone()).collect();
        let labels: Vec<Label> = rows.iter().map(|r| r.label).collect();
        let (acc, c, conf) = permutation_accuracy(&labels, &model.assign_all(&points)?)?;
        return Ok((acc, c, conf, 1.0));
    };
    let mut groups: Vec<(Label, Vec<Vec<f64>>)> = Vec::new();
    let mut last = None;
    for r in rows {
        if last != Some(r.sample_id) {
            groups.push((r.label, Vec::new()));
            last = Some(r.sample_id);
        }
        groups.last_mut().expect("pushed").1.push(r.values.clone());
    }
    let labels: Vec<Label> = groups.iter().map(|g| g.0).collect();
    let mut best: Option<(f64, usize, Confusion, f64)> = None;
    for c in [1usize, 0] {
        let results = groups
            .iter()
            .map(|(_, w)| detect_windowed(model, w, true, timing, c))
            .collect::<Result<Vec<_>>>()?;
        let flagged: Vec<bool> = results.iter().map(|r| r.is_anomalous()).collect();
        let conf = Confusion::from_verdicts(&labels, &flagged);
        let hits: Vec<f64> = results
            .iter()
            .zip(&labels)
            .filter(|(r, l)| r.is_anomalous() && **l == Label::Anomalous)
            .map(|(r, _)| r.speedup_factor)
            .collect();
        let speedup = if hits.is_empty() {
            1.0
        } else {
            hits.iter().sum::<f64>() / hits.len() as f64
        };
        let acc = conf.accuracy_pct();
        if best.as_ref().is_none_or(|b| acc > b.0) {
            best = Some((acc, c, conf, speedup));
        }
    }
    Ok(best.expect("two candidates"))
}

/// Generates the dataset for `cfg`, then fits and scores every feature and
/// signal variant, plus the centroid-selection refit when enabled.
pub fn evaluate(cfg: &ExperimentConfig) -> Result<EvaluationReport> {
    let ds = simulate_dataset(cfg)?;
    evaluate_dataset(cfg, &ds)
}

pub fn evaluate_dataset(cfg: &ExperimentConfig, ds: &Dataset) -> Result<EvaluationReport> {
    let seed = cfg.seed();
    let cluster_seed = seed::derive_seed(seed, u64::MAX);
    let timing = cfg
        .window_k
        .map(|k| WindowTiming::new(ds.n_samples(), k, ds.sample_period()))
        .transpose()?;
    let mut rows = Vec::new();
    for signals in signal_variants(ds.signal_names.len()) {
        let signal_label = signals
            .iter()
            .map(|&i| ds.signal_names[i].as_str())
            .collect::<Vec<_>>()
            .join("+");
        for features in feature_variants(&cfg.features) {
            let raw = featurize(ds, &signals, &features, cfg.window_k)?;
            let (normalized, _) = normalize_dataset(&raw)?;
            let points: Vec<Vec<f64>> = normalized.iter().map(|r| r.values.clone()).collect();
            let context = |e: Error| match e {
                Error::Fit(m) => Error::Fit(format!(
                    "{} on {} ({}): {m}",
                    cfg.name(),
                    signal_label,
                    features.label()
                )),
                other => other,
            };
            let model =
                cluster::fit(cfg.algorithm, &points, &cfg.cluster, cluster_seed).map_err(context)?;
            let row = |model: &ClusterModel, centroid_select: bool| -> Result<ReportRow> {
                let (acc, c, conf, speedup) = score(model, &normalized, timing)?;
                Ok(ReportRow {
                    experiment: cfg.experiment.to_string(),
                    circuit: cfg.circuit.as_str().to_string(),
                    algorithm: cfg.algorithm.to_string(),
                    features: features.label(),
                    signals: signal_label.clone(),
                    window_k: cfg.window_k,
                    centroid_select,
                    accuracy_pct: acc,
                    detect_rate: conf.detect_rate(),
                    mean_speedup: speedup,
                    seed,
                    confusion: conf,
                    anomalous_cluster: c,
                })
            };
            rows.push(row(&model, false)?);
            if cfg.centroid_select {
                let stats = cluster_stats(&model, &points)?;
                let selection = select_centroids_nd(&points, &stats, cfg.sigma_source)?;
                let refit = refit_with_centroids(&points, &selection).map_err(context)?;
                rows.push(row(&refit, true)?);
            }
        }
    }
    Ok(EvaluationReport {
        name: cfg.name(),
        config: cfg.clone(),
        seed,
        split: "fit and scored on the same generated set".into(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[u8]) -> Vec<Label> {
        v.iter().map(|&x| Label::from_u8(x).unwrap()).collect()
    }

    #[test]
    fn swapped_mapping_is_perfect() {
        let (acc, c, conf) = permutation_accuracy(&labels(&[0, 0, 1, 1]), &[1, 1, 0, 0]).unwrap();
        assert_eq!(acc, 100.0);
        assert_eq!(c, 0);
        assert_eq!(conf.total(), 4);
    }

    #[test]
    fn one_cluster_on_balanced_data_is_half() {
        let (acc, _, _) = permutation_accuracy(&labels(&[0, 0, 1, 1]), &[0, 0, 0, 0]).unwrap();
        assert_eq!(acc, 50.0);
    }

    #[test]
    fn minority() {
        assert_eq!(minority_cluster(&[0, 0, 1]), 1);
        assert_eq!(minority_cluster(&[0, 1, 1]), 0);
        assert_eq!(minority_cluster(&[0, 1]), 1);
    }

    #[test]
    fn variants() {
        assert_eq!(feature_variants(&FeatureSelection::all()).len(), 4);
        assert_eq!(feature_variants(&FeatureSelection::single(Feature::Mean)).len(), 1);
        assert_eq!(signal_variants(1), vec![vec![0]]);
        assert_eq!(signal_variants(2), vec![vec![0], vec![1], vec![0, 1]]);
    }
}
