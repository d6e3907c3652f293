use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    count_distinct_up_to, nearest, squared_distance, validate_rows, Algorithm, ClusterModel,
    ModelState, K,
};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this (Euclidean).
    pub tol: f64,
    pub seed: u64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            max_iter: 300,
            tol: 1e-10,
            seed: 0,
        }
    }
}

/// A k-means fit with its per-iteration within-cluster SSE.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub model: ClusterModel,
    pub sse_history: Vec<f64>,
    pub iterations: usize,
}

pub fn fit_kmeans(rows: &[Vec<f64>], opts: &KMeansOptions) -> Result<ClusterModel> {
    fit_kmeans_traced(rows, opts).map(|f| f.model)
}

/// k-means++ seeding followed by Lloyd iterations.
pub fn fit_kmeans_traced(rows: &[Vec<f64>], opts: &KMeansOptions) -> Result<KMeansFit> {
    validate_rows(rows, K)?;
    require_distinct(rows)?;
    let weights = vec![1.0; rows.len()];
    let init = plus_plus_init(rows, &weights, &mut seed::rng(opts.seed));
    fit_kmeans_from(rows, init, opts.max_iter, opts.tol)
}

/// Lloyd iterations from explicit initial centroids.
pub fn fit_kmeans_from(
    rows: &[Vec<f64>],
    init: Vec<Vec<f64>>,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansFit> {
    let dim = validate_rows(rows, K)?;
    require_distinct(rows)?;
    if init.len() != K || init.iter().any(|c| c.len() != dim) {
        return Err(Error::Fit(format!("need {K} initial centroids of dimension {dim}")));
    }
    let weights = vec![1.0; rows.len()];
    let (centroids, sse_history, iterations) = lloyd(rows, &weights, init, max_iter, tol);
    let model = ClusterModel::finish(Algorithm::Kmeans, rows, ModelState::Centroids { centroids })?;
    Ok(KMeansFit {
        model,
        sse_history,
        iterations,
    })
}

fn require_distinct(rows: &[Vec<f64>]) -> Result<()> {
    if count_distinct_up_to(rows, K) < K {
        return Err(Error::Fit(format!("fewer than {K} distinct points")));
    }
    Ok(())
}

/// Within-cluster sum of squared distances to the nearest centroid.
pub fn sse(rows: &[Vec<f64>], centroids: &[Vec<f64>]) -> f64 {
    rows.iter()
        .map(|r| squared_distance(r, &centroids[nearest(centroids, r)]))
        .sum()
}

/// Weighted k-means++ seeding.
pub(crate) fn plus_plus_init(
    points: &[Vec<f64>],
    weights: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    let first = pick_weighted(weights, total, rng);
    let mut centroids = vec![points[first].clone()];
    while centroids.len() < K {
        let d2: Vec<f64> = points
            .iter()
            .zip(weights)
            .map(|(p, w)| w * squared_distance(p, &centroids[nearest(&centroids, p)]))
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            pick_weighted(&d2, total, rng)
        } else {
            0
        };
        centroids.push(points[next].clone());
    }
    centroids
}

fn pick_weighted(weights: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let mut target = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 && target < w {
            return i;
        }
        target -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Weighted Lloyd iterations. Returns the centroids, the SSE after each
/// update step and the number of iterations run.
pub(crate) fn lloyd(
    points: &[Vec<f64>],
    weights: &[f64],
    mut centroids: Vec<Vec<f64>>,
    max_iter: usize,
    tol: f64,
) -> (Vec<Vec<f64>>, Vec<f64>, usize) {
    let dim = points[0].len();
    let mut history = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let labels: Vec<usize> = points.iter().map(|p| nearest(&centroids, p)).collect();
        let mut sums = vec![vec![0.0; dim]; K];
        let mut mass = [0.0; K];
        for ((p, &w), &l) in points.iter().zip(weights).zip(&labels) {
            mass[l] += w;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += w * v;
            }
        }
        let mut next = centroids.clone();
        for c in 0..K {
            if mass[c] > 0.0 {
                next[c] = sums[c].iter().map(|s| s / mass[c]).collect();
            } else {
                // Re-seed an empty cluster at the point farthest from its centroid.
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        let da = squared_distance(&points[a], &next[labels[a]]);
                        let db = squared_distance(&points[b], &next[labels[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .unwrap_or(0);
                next[c] = points[far].clone();
            }
        }
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        let cost: f64 = points
            .iter()
            .zip(weights)
            .zip(&labels)
            .map(|((p, w), &l)| w * squared_distance(p, &centroids[l]))
            .sum();
        history.push(cost);
        if shift < tol {
            break;
        }
    }
    (centroids, history, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn two_pairs() {
        let rows = pts(&[0.0, 1.0, 10.0, 11.0]);
        let m = fit_kmeans(&rows, &KMeansOptions::default()).unwrap();
        assert_eq!(m.centers(), vec![vec![0.5], vec![10.5]]);
        assert_eq!(m.assign_all(&rows).unwrap(), vec![0, 0, 1, 1]);
    }

    #[test]
    fn identical_points_cannot_be_fit() {
        let rows = pts(&[3.0; 10]);
        assert!(matches!(
            fit_kmeans(&rows, &KMeansOptions::default()),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn sse_never_increases() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![((i * 37) % 17) as f64, ((i * 11) % 7) as f64])
            .collect();
        for s in 0..10 {
            let fit = fit_kmeans_traced(&rows, &KMeansOptions { seed: s, ..Default::default() })
                .unwrap();
            for w in fit.sse_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-9);
            }
            assert!(fit.sse_history.last() <= fit.sse_history.first());
        }
    }

    #[test]
    fn seeded_fits_are_reproducible() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.7).sin()]).collect();
        let opts = KMeansOptions {
            seed: 5,
            ..Default::default()
        };
        assert_eq!(fit_kmeans(&rows, &opts).unwrap(), fit_kmeans(&rows, &opts).unwrap());
    }
}
