//! Centroid selection from the global feature distribution, and the
//! nearest-centroid refit built on it.
//!
//! For each cluster the selector compares the cluster's own spread,
//! stepped `i` standard deviations toward the global mean, against the
//! global distribution stepped `i` deviations outward, for `i` in `1..=4`.
//! The best-matching step `m` then bounds an interval between the cluster
//! and the global mean; the new centroid is the mean of the feature values
//! inside it.

use serde::{Deserialize, Serialize};

use crate::cluster::{Algorithm, ClusterModel, ClusterStats, ModelState};
use crate::{Error, Result};

/// Tolerance for feature values outside `[0, 1]`.
pub const NORMALIZED_SLACK: f64 = 1e-9;

/// Which deviation scales the `(m + 1)` interval bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSource {
    /// The global feature deviation.
    #[default]
    Global,
    /// The deviation of the cluster on that side.
    Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentroidPair {
    pub low: f64,
    pub high: f64,
    /// Selected step on the low side, in `1..=4`.
    pub m_low: u8,
    pub m_high: u8,
    /// The low side fell back to the cluster mean.
    pub low_fallback: bool,
    pub high_fallback: bool,
}

/// Intermediate values of one selection, for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrace {
    pub mu: f64,
    pub sigma: f64,
    pub var_low: [f64; 4],
    pub var_high: [f64; 4],
    pub low_interval: (f64, f64),
    pub high_interval: (f64, f64),
    /// Feature values averaged into `low` (empty on fallback).
    pub low_members: Vec<f64>,
    pub high_members: Vec<f64>,
}

pub fn select_centroids(feature: &[f64], mu_k: [f64; 2], sigma_k: [f64; 2]) -> Result<CentroidPair> {
    select_centroids_traced(feature, mu_k, sigma_k, SigmaSource::Global).map(|(p, _)| p)
}

pub fn select_centroids_traced(
    feature: &[f64],
    mu_k: [f64; 2],
    sigma_k: [f64; 2],
    source: SigmaSource,
) -> Result<(CentroidPair, SelectionTrace)> {
    if feature.is_empty() {
        return Err(Error::Input("empty feature".into()));
    }
    if let Some(v) = feature
        .iter()
        .find(|v| !(**v >= -NORMALIZED_SLACK && **v <= 1.0 + NORMALIZED_SLACK))
    {
        return Err(Error::Input(format!("feature value {v} is not normalized to [0, 1]")));
    }
    if mu_k.iter().chain(&sigma_k).any(|v| !v.is_finite()) || sigma_k.iter().any(|&s| s < 0.0) {
        return Err(Error::Input("cluster statistics must be finite with sigma >= 0".into()));
    }
    if mu_k[0] > mu_k[1] {
        return Err(Error::Input("cluster means must be ordered low, high".into()));
    }
    let n = feature.len() as f64;
    let mu = feature.iter().sum::<f64>() / n;
    let sigma = (feature.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n).sqrt();
    if (mu_k[0] > mu && mu_k[1] > mu) || (mu_k[0] < mu && mu_k[1] < mu) {
        return Err(Error::Degenerate(format!(
            "both cluster means ({}, {}) lie on one side of the feature mean {mu}",
            mu_k[0], mu_k[1]
        )));
    }

    let steps = [1.0, 2.0, 3.0, 4.0];
    let var_low = steps.map(|i| (mu_k[0] + i * sigma_k[0] - (mu - i * sigma)).abs());
    let var_high = steps.map(|i| (mu_k[1] - i * sigma_k[1] - (mu + i * sigma)).abs());
    let m_low = first_argmin(&var_low) + 1;
    let m_high = first_argmin(&var_high) + 1;
    let (s_low, s_high) = match source {
        SigmaSource::Global => (sigma, sigma),
        SigmaSource::Cluster => (sigma_k[0], sigma_k[1]),
    };
    let low_interval = (mu_k[0] + (m_low as f64 + 1.0) * s_low, mu);
    let high_interval = (mu, mu_k[1] - (m_high as f64 + 1.0) * s_high);

    let side = |cluster_mu: f64, (a, b): (f64, f64)| -> (f64, bool, Vec<f64>) {
        if cluster_mu == mu || a > b {
            return (cluster_mu, true, Vec::new());
        }
        let members: Vec<f64> = feature.iter().copied().filter(|v| *v >= a && *v <= b).collect();
        if members.is_empty() {
            return (cluster_mu, true, members);
        }
        (members.iter().sum::<f64>() / members.len() as f64, false, members)
    };
    let (low, low_fallback, low_members) = side(mu_k[0], low_interval);
    let (high, high_fallback, high_members) = side(mu_k[1], high_interval);
    Ok((
        CentroidPair {
            low,
            high,
            m_low: m_low as u8,
            m_high: m_high as u8,
            low_fallback,
            high_fallback,
        },
        SelectionTrace {
            mu,
            sigma,
            var_low,
            var_high,
            low_interval,
            high_interval,
            low_members,
            high_members,
        },
    ))
}

fn first_argmin(v: &[f64; 4]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] < v[best] {
            best = i;
        }
    }
    best
}

/// Per-dimension selection over multi-dimensional rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidSelection {
    pub pairs: Vec<CentroidPair>,
    /// Dimensions where cluster 1 has the lower mean, so `low` belongs to cluster 1.
    pub flipped: Vec<bool>,
}

impl CentroidSelection {
    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    /// Selected centroid vectors for clusters 0 and 1.
    pub fn centroids(&self) -> [Vec<f64>; 2] {
        let mut c0 = Vec::with_capacity(self.dim());
        let mut c1 = Vec::with_capacity(self.dim());
        for (p, &f) in self.pairs.iter().zip(&self.flipped) {
            let (a, b) = if f { (p.high, p.low) } else { (p.low, p.high) };
            c0.push(a);
            c1.push(b);
        }
        [c0, c1]
    }

    pub fn any_fallback(&self) -> bool {
        self.pairs.iter().any(|p| p.low_fallback || p.high_fallback)
    }
}

impl From<CentroidPair> for CentroidSelection {
    fn from(pair: CentroidPair) -> Self {
        CentroidSelection {
            pairs: vec![pair],
            flipped: vec![false],
        }
    }
}

/// Runs the 1-D selection independently on every dimension of `rows`.
pub fn select_centroids_nd(
    rows: &[Vec<f64>],
    stats: &ClusterStats,
    source: SigmaSource,
) -> Result<CentroidSelection> {
    let dim = rows.first().map_or(0, Vec::len);
    if dim == 0 || stats.means.len() != 2 || stats.means.iter().any(|m| m.len() != dim) {
        return Err(Error::Input("rows and cluster statistics disagree in shape".into()));
    }
    let mut pairs = Vec::with_capacity(dim);
    let mut flipped = Vec::with_capacity(dim);
    for d in 0..dim {
        let column: Vec<f64> = rows.iter().map(|r| r[d]).collect();
        let (m0, m1) = (stats.means[0][d], stats.means[1][d]);
        let (s0, s1) = (stats.stds[0][d], stats.stds[1][d]);
        let flip = m0 > m1;
        let (mu_k, sigma_k) = if flip {
            ([m1, m0], [s1, s0])
        } else {
            ([m0, m1], [s0, s1])
        };
        pairs.push(select_centroids_traced(&column, mu_k, sigma_k, source)?.0);
        flipped.push(flip);
    }
    Ok(CentroidSelection { pairs, flipped })
}

/// Nearest-centroid model over the selected centroids; cluster 0 is the
/// low centroid (along the first dimension).
pub fn refit_with_centroids(rows: &[Vec<f64>], selection: &CentroidSelection) -> Result<ClusterModel> {
    let [c0, c1] = selection.centroids();
    if c0 == c1 {
        return Err(Error::Fit("selected centroids coincide".into()));
    }
    if rows.iter().any(|r| r.len() != c0.len()) {
        return Err(Error::Input(format!(
            "rows must have {} dimensions to match the selection",
            c0.len()
        )));
    }
    let model = ClusterModel {
        algorithm: Algorithm::Centroid,
        dim: c0.len(),
        stats: ClusterStats {
            means: vec![],
            stds: vec![],
            counts: vec![],
        },
        state: ModelState::Centroids {
            centroids: vec![c0, c1],
        },
    };
    let labels = model.assign_all(rows)?;
    let stats = crate::cluster::stats_from_labels(rows, &labels);
    Ok(ClusterModel {
        // Membership may legitimately be one-sided on rows far from one centroid.
        stats: stats.unwrap_or(ClusterStats {
            means: vec![],
            stds: vec![],
            counts: vec![],
        }),
        ..model
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_means_fall_back() {
        let f = [0.2, 0.4, 0.6, 0.8];
        let p = select_centroids(&f, [0.5, 0.5], [0.1, 0.1]).unwrap();
        assert_eq!((p.low, p.high), (0.5, 0.5));
        assert!(p.low_fallback && p.high_fallback);
    }

    #[test]
    fn same_side_is_degenerate() {
        let f = [0.0, 0.1, 0.2, 1.0];
        let err = select_centroids(&f, [0.6, 0.9], [0.1, 0.1]).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn unnormalized_input() {
        let err = select_centroids(&[0.2, 1.1], [0.2, 0.8], [0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
        assert!(select_centroids(&[0.2, 1.0 + 1e-10], [0.2, 0.8], [0.0, 0.0]).is_ok());
    }

    #[test]
    fn symmetric_data_gives_symmetric_centroids() {
        let f = [0.40, 0.42, 0.44, 0.46, 0.48, 0.52, 0.54, 0.56, 0.58, 0.60];
        let (p, t) = select_centroids_traced(&f, [0.2, 0.8], [0.05, 0.05], SigmaSource::Global).unwrap();
        assert_eq!(p.m_low, p.m_high);
        assert!((p.low + p.high - 2.0 * t.mu).abs() < 1e-9);
        assert!(!p.low_fallback && !p.high_fallback);
    }

    #[test]
    fn inverted_interval_falls_back() {
        // Wide global spread pushes the low bound above the mean.
        let f = [0.0, 0.1, 0.9, 1.0];
        let (p, t) = select_centroids_traced(&f, [0.05, 0.95], [0.05, 0.05], SigmaSource::Global).unwrap();
        assert!(t.low_interval.0 > t.low_interval.1);
        assert_eq!((p.low, p.high), (0.05, 0.95));
        assert!(p.low_fallback && p.high_fallback);
    }

    #[test]
    fn refit_nearest_and_tie() {
        let rows: Vec<Vec<f64>> = [0.1, 0.2, 0.8, 0.9, 0.5].iter().map(|&v| vec![v]).collect();
        let pair = CentroidPair {
            low: 0.15,
            high: 0.85,
            m_low: 1,
            m_high: 1,
            low_fallback: false,
            high_fallback: false,
        };
        let m = refit_with_centroids(&rows, &pair.into()).unwrap();
        assert_eq!(m.assign_all(&rows).unwrap(), vec![0, 0, 1, 1, 0]);
    }

    #[test]
    fn refit_rejects_equal_centroids() {
        let pair = CentroidPair {
            low: 0.5,
            high: 0.5,
            m_low: 1,
            m_high: 1,
            low_fallback: true,
            high_fallback: true,
        };
        assert!(matches!(
            refit_with_centroids(&[vec![0.5]], &pair.into()),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn flipped_dimension_maps_back_to_its_cluster() {
        let rows = vec![vec![0.0, 1.0], vec![0.1, 0.9], vec![0.9, 0.1], vec![1.0, 0.0]];
        let stats = crate::cluster::stats_from_labels(&rows, &[0, 0, 1, 1]).unwrap();
        let sel = select_centroids_nd(&rows, &stats, SigmaSource::Global).unwrap();
        assert_eq!(sel.flipped, vec![false, true]);
        let [c0, c1] = sel.centroids();
        assert!(c0[0] < c1[0] && c0[1] > c1[1]);
    }
}
