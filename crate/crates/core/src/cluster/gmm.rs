use serde::{Deserialize, Serialize};

use super::kmeans::{fit_kmeans, KMeansOptions};
use super::{validate_rows, Algorithm, ClusterModel, ModelState, K};
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Diagonal-covariance Gaussian mixture parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl GmmParams {
    /// `ln(w_c) + ln N(x | mu_c, diag(var_c))` for every component.
    pub fn log_joint(&self, row: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((w, mu), var)| {
                let mut lp = w.ln();
                for ((x, m), v) in row.iter().zip(mu).zip(var) {
                    lp -= 0.5 * (LN_2PI + v.ln() + (x - m) * (x - m) / v);
                }
                lp
            })
            .collect()
    }

    /// Component with the highest posterior; ties to the lower id.
    pub fn most_likely(&self, row: &[f64]) -> usize {
        let lj = self.log_joint(row);
        let mut best = 0;
        for (c, &v) in lj.iter().enumerate().skip(1) {
            if v > lj[best] {
                best = c;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmmOptions {
    pub max_iter: usize,
    /// Stop when the log-likelihood improves by less than this.
    pub tol: f64,
    pub var_floor: f64,
    /// Seeds the k-means initialization.
    pub seed: u64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        GmmOptions {
            max_iter: 200,
            tol: 1e-8,
            var_floor: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmmFit {
    pub model: ClusterModel,
    /// Log-likelihood of the initial parameters, then after each EM step.
    pub log_likelihood: Vec<f64>,
}

/// Result of one EM step applied to `params`.
#[derive(Debug, Clone)]
pub struct EmStep {
    /// Posterior responsibilities under the input parameters, one row per point.
    pub responsibilities: Vec<Vec<f64>>,
    /// Log-likelihood of the data under the input parameters.
    pub log_likelihood: f64,
    pub params: GmmParams,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn log_likelihood(rows: &[Vec<f64>], params: &GmmParams) -> f64 {
    rows.iter().map(|r| log_sum_exp(&params.log_joint(r))).sum()
}

/// One expectation-maximization step.
pub fn em_step(rows: &[Vec<f64>], params: &GmmParams, var_floor: f64) -> EmStep {
    let dim = rows[0].len();
    let mut ll = 0.0;
    let resp: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let lj = params.log_joint(r);
            let norm = log_sum_exp(&lj);
            ll += norm;
            lj.iter().map(|v| (v - norm).exp()).collect()
        })
        .collect();
    let n = rows.len() as f64;
    let mut weights = Vec::with_capacity(K);
    let mut means = Vec::with_capacity(K);
    let mut variances = Vec::with_capacity(K);
    for c in 0..K {
        let nk: f64 = resp.iter().map(|r| r[c]).sum();
        if nk <= 0.0 {
            // Dead component: keep it, with negligible weight.
            weights.push(f64::MIN_POSITIVE);
            means.push(params.means[c].clone());
            variances.push(params.variances[c].clone());
            continue;
        }
        let mut mu = vec![0.0; dim];
        for (x, r) in rows.iter().zip(&resp) {
            for (m, v) in mu.iter_mut().zip(x) {
                *m += r[c] * v;
            }
        }
        mu.iter_mut().for_each(|m| *m /= nk);
        let mut var = vec![0.0; dim];
        for (x, r) in rows.iter().zip(&resp) {
            for ((s, v), m) in var.iter_mut().zip(x).zip(&mu) {
                *s += r[c] * (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s = (*s / nk).max(var_floor));
        weights.push(nk / n);
        means.push(mu);
        variances.push(var);
    }
    EmStep {
        responsibilities: resp,
        log_likelihood: ll,
        params: GmmParams {
            weights,
            means,
            variances,
        },
    }
}

pub fn fit_gmm(rows: &[Vec<f64>], opts: &GmmOptions) -> Result<ClusterModel> {
    fit_gmm_traced(rows, opts).map(|f| f.model)
}

/// EM from a k-means initialization.
pub fn fit_gmm_traced(rows: &[Vec<f64>], opts: &GmmOptions) -> Result<GmmFit> {
    validate_rows(rows, K)?;
    if !(opts.var_floor > 0.0) {
        return Err(Error::config("gmm.var_floor", "must be positive"));
    }
    let km = fit_kmeans(
        rows,
        &KMeansOptions {
            seed: opts.seed,
            ..KMeansOptions::default()
        },
    )?;
    let stats = &km.stats;
    let n = rows.len() as f64;
    let mut params = GmmParams {
        weights: stats.counts.iter().map(|&c| c as f64 / n).collect(),
        means: stats.means.clone(),
        variances: stats
            .stds
            .iter()
            .map(|s| s.iter().map(|v| (v * v).max(opts.var_floor)).collect())
            .collect(),
    };
    let mut history = vec![log_likelihood(rows, &params)];
    for _ in 0..opts.max_iter {
        let step = em_step(rows, &params, opts.var_floor);
        params = step.params;
        let ll = log_likelihood(rows, &params);
        let prev = *history.last().unwrap();
        history.push(ll);
        if !ll.is_finite() {
            return Err(Error::Fit("GMM log-likelihood diverged".into()));
        }
        if ll - prev < opts.tol {
            break;
        }
    }
    let model = ClusterModel::finish(Algorithm::Gmm, rows, ModelState::Gmm(params))?;
    Ok(GmmFit {
        model,
        log_likelihood: history,
    })
}
