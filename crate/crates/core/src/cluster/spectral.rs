use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::kmeans::{fit_kmeans, KMeansOptions};
use super::{squared_distance, validate_rows, Algorithm, ClusterModel, ModelState, K};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralOptions {
    /// Gaussian kernel width, in normalized feature units.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            sigma: 0.1,
            seed: 0,
        }
    }
}

/// Eigen-embedding of the symmetric normalized Laplacian.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    /// All eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// The K eigenvectors of the smallest eigenvalues, one `Vec` per vector.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Row-normalized embedding, one row per input point.
    pub rows: Vec<Vec<f64>>,
}

pub fn spectral_embedding(rows: &[Vec<f64>], sigma: f64) -> Result<SpectralEmbedding> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::config("spectral.sigma", "must be positive"));
    }
    validate_rows(rows, 3)?;
    let n = rows.len();
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut w = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = (-squared_distance(&rows[i], &rows[j]) * inv).exp();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    let degree: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    if let Some(i) = degree.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Fit(format!(
            "row {i} has no similarity to any other row at sigma {sigma}"
        )));
    }
    let scale: Vec<f64> = degree.iter().map(|d| d.sqrt().recip()).collect();
    let mut lap = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                lap[(i, j)] = -w[(i, j)] * scale[i] * scale[j];
            }
        }
    }
    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order[..K]
        .iter()
        .map(|&c| eig.eigenvectors.column(c).iter().copied().collect())
        .collect();
    let embedded = (0..n)
        .map(|i| {
            let r: Vec<f64> = eigenvectors.iter().map(|v| v[i]).collect();
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                r.iter().map(|v| v / norm).collect()
            } else {
                r
            }
        })
        .collect();
    Ok(SpectralEmbedding {
        eigenvalues,
        eigenvectors,
        rows: embedded,
    })
}

/// Spectral clustering; k-means runs in the row-normalized embedding.
pub fn fit_spectral(rows: &[Vec<f64>], opts: &SpectralOptions) -> Result<ClusterModel> {
    let emb = spectral_embedding(rows, opts.sigma)?;
    let km = fit_kmeans(
        &emb.rows,
        &KMeansOptions {
            seed: opts.seed,
            ..KMeansOptions::default()
        },
    )?;
    let assignments = km.assign_all(&emb.rows)?;
    if assignments.iter().all(|&a| a == assignments[0]) {
        return Err(Error::Fit("spectral embedding collapsed to one cluster".into()));
    }
    ClusterModel::finish(
        Algorithm::Spectral,
        rows,
        ModelState::Spectral {
            sigma: opts.sigma,
            training: rows.to_vec(),
            assignments,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Vec<Vec<f64>> {
        (0..30)
            .map(|i| {
                let e = ((i * 13) % 10) as f64 * 0.005;
                if i % 2 == 0 {
                    vec![0.2 + e, 0.3 - e]
                } else {
                    vec![0.8 - e, 0.7 + e]
                }
            })
            .collect()
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let emb = spectral_embedding(&blobs(), 0.3).unwrap();
        let v = &emb.eigenvectors;
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!((dot(&v[0], &v[0]) - 1.0).abs() < 1e-8);
        assert!((dot(&v[1], &v[1]) - 1.0).abs() < 1e-8);
        assert!(dot(&v[0], &v[1]).abs() < 1e-8);
        assert!(emb.eigenvalues[0].abs() < 1e-8);
        assert!(emb.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn separates_blobs_and_assigns_out_of_sample() {
        let rows = blobs();
        let m = fit_spectral(&rows, &SpectralOptions::default()).unwrap();
        for (i, l) in m.assign_all(&rows).unwrap().iter().enumerate() {
            assert_eq!(*l, i % 2);
        }
        assert_eq!(m.assign(&[0.21, 0.29]).unwrap(), 0);
        assert_eq!(m.assign(&[0.95, 0.95]).unwrap(), 1);
    }

    #[test]
    fn isolated_row_is_a_fit_error() {
        let rows = vec![vec![0.0], vec![0.01], vec![100.0]];
        assert!(matches!(
            fit_spectral(&rows, &SpectralOptions { sigma: 0.01, seed: 0 }),
            Err(Error::Fit(_))
        ));
        assert!(matches!(
            fit_spectral(&rows, &SpectralOptions { sigma: 0.0, seed: 0 }),
            Err(Error::Config { .. })
        ));
    }
}
