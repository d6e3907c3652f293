mod common;

use ams_anomaly::bench::permutation_accuracy;
use ams_anomaly::cluster::{
    self, cluster_stats, em_step, fit_birch, fit_gmm, fit_gmm_traced, fit_kmeans,
    fit_kmeans_from, fit_kmeans_traced, spectral_embedding, sse, stats_from_labels, Algorithm,
    BirchOptions, ClusterOptions, ClusteringFeature, GmmOptions, KMeansOptions, ModelState,
};
use ams_anomaly::Error;
use common::*;
use proptest::prelude::*;

const EM_TOL: f64 = 1e-9;
const MONOTONE_TOL: f64 = 1e-9;

#[test]
fn kmeans_splits_two_pairs() {
    let rows = column(&[0.0, 1.0, 10.0, 11.0]);
    let m = fit_kmeans(&rows, &KMeansOptions::default()).unwrap();
    assert_eq!(m.centers(), vec![vec![0.5], vec![10.5]]);
    assert_eq!(m.assign_all(&rows).unwrap(), vec![0, 0, 1, 1]);
    let stats = cluster_stats(&m, &rows).unwrap();
    assert_eq!(stats.means, vec![vec![0.5], vec![10.5]]);
    assert_eq!(stats.stds, vec![vec![0.5], vec![0.5]]);
}

#[test]
fn kmeans_rejects_a_single_repeated_point() {
    let rows = column(&[3.0; 6]);
    assert!(matches!(fit_kmeans(&rows, &KMeansOptions::default()), Err(Error::Fit(_))));
}

#[test]
fn kmeans_from_extremes_reaches_exhaustive_optimum() {
    for x in kmeans_fixtures() {
        let rows = column(&x);
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let fit = fit_kmeans_from(&rows, vec![vec![lo], vec![hi]], 300, 0.0).unwrap();
        let got = sse(&rows, &fit.model.centers());
        let best = exhaustive_sse(&x);
        assert!((got - best).abs() <= 1e-12 * best.max(1.0), "{x:?}: {got} vs {best}");
    }
}

#[test]
fn em_step_matches_oracle() {
    for case in em_cases() {
        let step = em_step(&case.rows, &case.params, 1e-8);
        for (r, want) in step.responsibilities.iter().zip(&case.responsibility_1) {
            assert!((r[1] - want).abs() < EM_TOL, "{} vs {want}", r[1]);
            assert!((r[0] + r[1] - 1.0).abs() < EM_TOL);
        }
        assert!((step.log_likelihood - case.log_likelihood).abs() < EM_TOL);
        for c in 0..2 {
            assert!((step.params.weights[c] - case.weights[c]).abs() < EM_TOL);
            for d in 0..case.rows[0].len() {
                assert!((step.params.means[c][d] - case.means[c][d]).abs() < EM_TOL);
                assert!((step.params.variances[c][d] - case.variances[c][d]).abs() < EM_TOL);
            }
        }
    }
}

#[test]
fn all_algorithms_separate_blobs() {
    let (rows, labels) = blobs(7, 100);
    for a in Algorithm::FITTABLE {
        let m = cluster::fit(a, &rows, &ClusterOptions::default(), 7).unwrap();
        let (acc, _, _) = permutation_accuracy(&labels, &m.assign_all(&rows).unwrap()).unwrap();
        assert_eq!(acc, 100.0, "{a}");
    }
}

#[test]
fn gmm_point_at_component_mean_takes_that_component() {
    let (rows, _) = blobs(7, 100);
    let m = fit_gmm(&rows, &GmmOptions::default()).unwrap();
    let ModelState::Gmm(p) = &m.state else {
        panic!("not a GMM state")
    };
    assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    for c in 0..2 {
        assert_eq!(m.assign(&p.means[c]).unwrap(), c);
    }
}

#[test]
fn gmm_rejects_identical_rows() {
    let rows = column(&[0.5; 8]);
    assert!(matches!(fit_gmm(&rows, &GmmOptions::default()), Err(Error::Fit(_))));
}

#[test]
fn birch_rejects_non_positive_threshold() {
    let rows = column(&[0.0, 1.0, 2.0]);
    let opts = BirchOptions {
        threshold: 0.0,
        ..BirchOptions::default()
    };
    assert_eq!(fit_birch(&rows, &opts).unwrap_err().key(), Some("birch.threshold"));
}

#[test]
fn spectral_smallest_eigenvalue_vanishes_on_blobs() {
    let (rows, _) = blobs(3, 30);
    let e = spectral_embedding(&rows, 0.5).unwrap();
    assert!(e.eigenvalues[0].abs() < 1e-8, "{}", e.eigenvalues[0]);
}

#[test]
fn labels_do_not_influence_fitting() {
    let (rows, labels) = blobs(11, 50);
    let mut shuffled = labels.clone();
    shuffled.reverse();
    // Fitting only ever sees the points; the label vectors differ but the
    // models must not.
    for a in Algorithm::FITTABLE {
        let m1 = cluster::fit(a, &rows, &ClusterOptions::default(), 5).unwrap();
        let m2 = cluster::fit(a, &rows, &ClusterOptions::default(), 5).unwrap();
        assert_eq!(m1, m2);
        let a1 = permutation_accuracy(&labels, &m1.assign_all(&rows).unwrap()).unwrap();
        let a2 = permutation_accuracy(&shuffled, &m2.assign_all(&rows).unwrap()).unwrap();
        assert!(a1.0 >= 50.0 && a2.0 >= 50.0);
    }
}

fn dataset() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=3).prop_flat_map(|d| prop::collection::vec(prop::collection::vec(0.0f64..1.0, d), 6..40))
}

fn dyadic_points() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec((0i32..64).prop_map(|v| v as f64 / 8.0), 2), 1..20)
}

fn distinct(rows: &[Vec<f64>]) -> bool {
    rows.iter().any(|r| r != &rows[0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kmeans_sse_never_increases(rows in dataset(), seed in any::<u64>()) {
        prop_assume!(distinct(&rows));
        let fit = fit_kmeans_traced(&rows, &KMeansOptions { seed, ..KMeansOptions::default() }).unwrap();
        for p in fit.sse_history.windows(2) {
            prop_assert!(p[1] <= p[0] + MONOTONE_TOL, "{:?}", fit.sse_history);
        }
    }

    #[test]
    fn gmm_log_likelihood_never_decreases(rows in dataset(), seed in any::<u64>()) {
        prop_assume!(distinct(&rows));
        let opts = GmmOptions { seed, ..GmmOptions::default() };
        if let Ok(fit) = fit_gmm_traced(&rows, &opts) {
            for p in fit.log_likelihood.windows(2) {
                prop_assert!(p[1] >= p[0] - MONOTONE_TOL, "{:?}", fit.log_likelihood);
            }
        }
    }

    #[test]
    fn assignment_is_pure(rows in dataset(), seed in any::<u64>()) {
        prop_assume!(distinct(&rows));
        for a in Algorithm::FITTABLE {
            let Ok(m) = cluster::fit(a, &rows, &ClusterOptions::default(), seed) else { continue };
            let all = m.assign_all(&rows).unwrap();
            let one: Vec<usize> = rows.iter().map(|r| m.assign(r).unwrap()).collect();
            prop_assert_eq!(&all, &one);
            prop_assert_eq!(all, m.assign_all(&rows).unwrap());
            prop_assert!(m.assign(&vec![0.5; rows[0].len() + 1]).is_err());
        }
    }

    #[test]
    fn stats_ignore_row_order(rows in dataset(), seed in any::<u64>()) {
        prop_assume!(distinct(&rows));
        let m = fit_kmeans(&rows, &KMeansOptions { seed, ..KMeansOptions::default() }).unwrap();
        let labels = m.assign_all(&rows).unwrap();
        let a = stats_from_labels(&rows, &labels).unwrap();
        let n = rows.len();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + seed as usize % n) % n).collect();
        prop_assume!({ let mut p = perm.clone(); p.sort_unstable(); p.dedup(); p.len() == n });
        let rows2: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let labels2: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
        let b = stats_from_labels(&rows2, &labels2).unwrap();
        // Swapping cluster ids must not change canonical output order either.
        let flipped: Vec<usize> = labels2.iter().map(|l| 1 - l).collect();
        let c = stats_from_labels(&rows2, &flipped).unwrap();
        for s in [&b, &c] {
            prop_assert_eq!(&a.counts, &s.counts);
            for k in 0..2 {
                for d in 0..rows[0].len() {
                    prop_assert!((a.means[k][d] - s.means[k][d]).abs() < 1e-9);
                    prop_assert!((a.stds[k][d] - s.stds[k][d]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn cf_merge_is_additive(a in dyadic_points(), b in dyadic_points()) {
        let mut merged = ClusteringFeature::from_points(&a);
        merged.merge(&ClusteringFeature::from_points(&b));
        let all: Vec<Vec<f64>> = a.iter().chain(&b).cloned().collect();
        prop_assert_eq!(merged, ClusteringFeature::from_points(&all));
        let mut grown = ClusteringFeature::from_points(&a);
        for p in &b {
            grown.add_point(p);
        }
        prop_assert_eq!(grown, ClusteringFeature::from_points(&all));
    }

    #[test]
    fn spectral_vectors_are_orthonormal(rows in dataset()) {
        prop_assume!(distinct(&rows));
        let e = spectral_embedding(&rows, 1.0).unwrap();
        for i in 0..e.eigenvectors.len() {
            for j in 0..e.eigenvectors.len() {
                let dot: f64 = e.eigenvectors[i].iter().zip(&e.eigenvectors[j]).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-8);
            }
        }
        prop_assert!(e.eigenvalues[0].abs() < 1e-8);
    }
}
