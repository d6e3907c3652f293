//! Two-cluster models behind one fitted-model interface.
//!
//! Every fit canonicalizes cluster ids on its training rows: cluster 0 is the
//! cluster whose members have the lower mean along dimension 0. Distance ties
//! always go to the lower cluster id.

mod birch;
mod gmm;
mod kmeans;
mod spectral;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use birch::{fit_birch, BirchOptions, CfTree, ClusteringFeature};
pub use gmm::{em_step, fit_gmm, fit_gmm_traced, log_likelihood, EmStep, GmmFit, GmmOptions, GmmParams};
pub use kmeans::{
    fit_kmeans, fit_kmeans_from, fit_kmeans_traced, sse, KMeansFit, KMeansOptions,
};
pub use spectral::{fit_spectral, spectral_embedding, SpectralEmbedding, SpectralOptions};

/// Number of clusters: normal and anomalous.
pub const K: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Kmeans,
    Gmm,
    Birch,
    Spectral,
    /// Nearest-centroid model over refined centroids.
    Centroid,
}

impl Algorithm {
    /// The four fittable clustering algorithms.
    pub const FITTABLE: [Algorithm; 4] = [
        Algorithm::Gmm,
        Algorithm::Kmeans,
        Algorithm::Birch,
        Algorithm::Spectral,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Kmeans => "kmeans",
            Algorithm::Gmm => "gmm",
            Algorithm::Birch => "birch",
            Algorithm::Spectral => "spectral",
            Algorithm::Centroid => "centroid",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kmeans" | "k-means" => Ok(Algorithm::Kmeans),
            "gmm" => Ok(Algorithm::Gmm),
            "birch" => Ok(Algorithm::Birch),
            "spectral" => Ok(Algorithm::Spectral),
            "centroid" => Ok(Algorithm::Centroid),
            other => Err(Error::config(
                "algorithm",
                format!("unknown algorithm `{other}`"),
            )),
        }
    }
}

/// Hyperparameters for every algorithm; only the chosen one is used.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterOptions {
    pub kmeans: KMeansOptions,
    pub gmm: GmmOptions,
    pub birch: BirchOptions,
    pub spectral: SpectralOptions,
}

/// Fits `algorithm` on `rows`. `seed` replaces the configured seed of the
/// seeded algorithms.
pub fn fit(
    algorithm: Algorithm,
    rows: &[Vec<f64>],
    opts: &ClusterOptions,
    seed: u64,
) -> Result<ClusterModel> {
    match algorithm {
        Algorithm::Kmeans => fit_kmeans(rows, &KMeansOptions { seed, ..opts.kmeans }),
        Algorithm::Gmm => fit_gmm(rows, &GmmOptions { seed, ..opts.gmm }),
        Algorithm::Birch => fit_birch(rows, &opts.birch),
        Algorithm::Spectral => fit_spectral(rows, &SpectralOptions { seed, ..opts.spectral }),
        Algorithm::Centroid => Err(Error::config(
            "algorithm",
            "centroid models come from centroid selection, not fitting",
        )),
    }
}

/// Per-cluster, per-dimension mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub means: Vec<Vec<f64>>,
    pub stds: Vec<Vec<f64>>,
    pub counts: Vec<usize>,
}

/// Algorithm-specific fitted state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelState {
    Centroids {
        centroids: Vec<Vec<f64>>,
    },
    Gmm(GmmParams),
    Birch {
        centroids: Vec<Vec<f64>>,
        /// Leaf sub-cluster summaries of the CF tree.
        leaves: Vec<ClusteringFeature>,
        branching: usize,
        threshold: f64,
    },
    Spectral {
        sigma: f64,
        training: Vec<Vec<f64>>,
        assignments: Vec<usize>,
    },
}

/// A fitted 2-cluster model. Immutable after fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub algorithm: Algorithm,
    pub dim: usize,
    /// Statistics of the training rows under this model's assignment.
    pub stats: ClusterStats,
    pub state: ModelState,
}

impl ClusterModel {
    /// Builds a model from fitted state, canonicalizing cluster ids against
    /// `training` and recording the training statistics.
    pub(crate) fn finish(
        algorithm: Algorithm,
        training: &[Vec<f64>],
        state: ModelState,
    ) -> Result<Self> {
        let dim = training[0].len();
        let mut model = ClusterModel {
            algorithm,
            dim,
            stats: ClusterStats {
                means: vec![],
                stds: vec![],
                counts: vec![],
            },
            state,
        };
        let labels = model.assign_all(training)?;
        if let Some(j) = (0..K).find(|&j| !labels.contains(&j)) {
            return Err(Error::Fit(format!(
                "{algorithm} left cluster {j} empty on the training rows"
            )));
        }
        let raw = raw_stats(training, &labels)?;
        if raw.means[0][0] > raw.means[1][0] {
            model.swap_clusters();
        }
        let labels = model.assign_all(training)?;
        model.stats = raw_stats(training, &labels)?;
        Ok(model)
    }

    fn swap_clusters(&mut self) {
        match &mut self.state {
            ModelState::Centroids { centroids } => centroids.swap(0, 1),
            ModelState::Gmm(p) => {
                p.weights.swap(0, 1);
                p.means.swap(0, 1);
                p.variances.swap(0, 1);
            }
            ModelState::Birch { centroids, .. } => centroids.swap(0, 1),
            ModelState::Spectral { assignments, .. } => {
                for a in assignments.iter_mut() {
                    *a = 1 - *a;
                }
            }
        }
    }

    /// Cluster id for one row.
    pub fn assign(&self, row: &[f64]) -> Result<usize> {
        if row.len() != self.dim {
            return Err(Error::Input(format!(
                "model expects {} dimensions, row has {}",
                self.dim,
                row.len()
            )));
        }
        Ok(match &self.state {
            ModelState::Centroids { centroids } | ModelState::Birch { centroids, .. } => {
                nearest(centroids, row)
            }
            ModelState::Gmm(p) => p.most_likely(row),
            ModelState::Spectral {
                training,
                assignments,
                ..
            } => assignments[nearest(training, row)],
        })
    }

    pub fn assign_all(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.iter().map(|r| self.assign(r)).collect()
    }

    /// Representative point per cluster (centroid or component mean; for
    /// spectral models, the training-member mean).
    pub fn centers(&self) -> Vec<Vec<f64>> {
        match &self.state {
            ModelState::Centroids { centroids } | ModelState::Birch { centroids, .. } => {
                centroids.clone()
            }
            ModelState::Gmm(p) => p.means.clone(),
            ModelState::Spectral { .. } => self.stats.means.clone(),
        }
    }
}

/// Canonically ordered statistics of `rows` under `model`.
pub fn cluster_stats(model: &ClusterModel, rows: &[Vec<f64>]) -> Result<ClusterStats> {
    let labels = model.assign_all(rows)?;
    stats_from_labels(rows, &labels)
}

/// Per-cluster statistics from explicit labels, ordered so that cluster 0 has
/// the lower mean along dimension 0 (ties keep the given order).
pub fn stats_from_labels(rows: &[Vec<f64>], labels: &[usize]) -> Result<ClusterStats> {
    let mut stats = raw_stats(rows, labels)?;
    if stats.means[0][0] > stats.means[1][0] {
        stats.means.swap(0, 1);
        stats.stds.swap(0, 1);
        stats.counts.swap(0, 1);
    }
    Ok(stats)
}

fn raw_stats(rows: &[Vec<f64>], labels: &[usize]) -> Result<ClusterStats> {
    if rows.len() != labels.len() {
        return Err(Error::Stats("rows and labels differ in length".into()));
    }
    let dim = rows.first().map_or(0, Vec::len);
    let mut counts = vec![0usize; K];
    let mut sums = vec![vec![0.0; dim]; K];
    for (r, &l) in rows.iter().zip(labels) {
        if l >= K {
            return Err(Error::Stats(format!("cluster id {l} out of range")));
        }
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(r) {
            *s += v;
        }
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Stats(format!("cluster {c} has no members")));
    }
    let means: Vec<Vec<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s.iter().map(|v| v / c as f64).collect())
        .collect();
    let mut sq = vec![vec![0.0; dim]; K];
    for (r, &l) in rows.iter().zip(labels) {
        for ((s, v), m) in sq[l].iter_mut().zip(r).zip(&means[l]) {
            *s += (v - m) * (v - m);
        }
    }
    let stds = sq
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s.iter().map(|v| (v / c as f64).sqrt()).collect())
        .collect();
    Ok(ClusterStats {
        means,
        stds,
        counts,
    })
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest point; ties go to the lower index.
pub(crate) fn nearest(points: &[Vec<f64>], row: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = squared_distance(p, row);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Checks rows are non-empty, finite and of one dimensionality.
pub(crate) fn validate_rows(rows: &[Vec<f64>], min_rows: usize) -> Result<usize> {
    if rows.len() < min_rows {
        return Err(Error::Fit(format!(
            "need at least {min_rows} rows, got {}",
            rows.len()
        )));
    }
    let dim = rows[0].len();
    if dim == 0 {
        return Err(Error::Fit("rows have no features".into()));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::Fit(format!("row {i} has {} dimensions, expected {dim}", r.len())));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Fit(format!("row {i} has a non-finite value")));
        }
    }
    Ok(dim)
}

/// Fraction of points equal to the first one is 1: no structure to cluster.
pub(crate) fn count_distinct_up_to(rows: &[Vec<f64>], limit: usize) -> usize {
    let mut seen: Vec<&Vec<f64>> = Vec::new();
    for r in rows {
        if !seen.contains(&r) {
            seen.push(r);
            if seen.len() >= limit {
                break;
            }
        }
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn centroid_model(c: Vec<Vec<f64>>) -> ClusterModel {
        ClusterModel {
            algorithm: Algorithm::Centroid,
            dim: c[0].len(),
            stats: ClusterStats {
                means: vec![],
                stds: vec![],
                counts: vec![],
            },
            state: ModelState::Centroids { centroids: c },
        }
    }

    #[test]
    fn assign_row_at_centroid_and_ties() {
        let m = centroid_model(vec![vec![0.0], vec![1.0]]);
        assert_eq!(m.assign(&[0.0]).unwrap(), 0);
        assert_eq!(m.assign(&[1.0]).unwrap(), 1);
        assert_eq!(m.assign(&[0.5]).unwrap(), 0);
        assert!(matches!(m.assign(&[0.5, 0.1]), Err(Error::Input(_))));
    }

    #[test]
    fn stats_hand_values() {
        let rows = vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]];
        let s = stats_from_labels(&rows, &[0, 0, 1, 1]).unwrap();
        assert_eq!(s.means, vec![vec![0.5], vec![10.5]]);
        assert_eq!(s.stds, vec![vec![0.5], vec![0.5]]);
        // Swapped labels give the same canonical output.
        assert_eq!(stats_from_labels(&rows, &[1, 1, 0, 0]).unwrap(), s);
    }

    #[test]
    fn single_member_has_zero_std() {
        let rows = vec![vec![0.0], vec![1.0], vec![10.0]];
        let s = stats_from_labels(&rows, &[0, 0, 1]).unwrap();
        assert_eq!(s.stds[1], vec![0.0]);
    }

    #[test]
    fn empty_cluster_is_a_stats_error() {
        let rows = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            stats_from_labels(&rows, &[0, 0]),
            Err(Error::Stats(_))
        ));
    }

    #[test]
    fn algorithm_names_parse() {
        for a in Algorithm::FITTABLE {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!("dbscan".parse::<Algorithm>().is_err());
    }
}
