//! Fixtures and frozen oracle values shared by the integration tests and
//! the acceptance runner.
#![allow(dead_code, clippy::excessive_precision)]

use ams_anomaly::cluster::GmmParams;
use ams_anomaly::features::Label;
use ams_anomaly::seed;
use ams_anomaly::waveforms::Waveform;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Two 2-D Gaussian blobs of `n_per` points each, means (0.25, 0.25) and
/// (0.75, 0.75), per-axis std 0.04: 12.5σ apart along each axis.
pub fn blobs(seed: u64, n_per: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut rng = seed::rng(seed);
    let noise = Normal::new(0.0, 0.04).unwrap();
    let mut rows = Vec::with_capacity(2 * n_per);
    let mut labels = Vec::with_capacity(2 * n_per);
    for (center, label) in [(0.25, Label::Normal), (0.75, Label::Anomalous)] {
        for _ in 0..n_per {
            rows.push(vec![
                center + noise.sample(&mut rng),
                center + noise.sample(&mut rng),
            ]);
            labels.push(label);
        }
    }
    (rows, labels)
}

/// Two overlapping 1-D Gaussians N(0.4, 0.08²) and N(0.6, 0.08²), 100 points
/// each, min-max scaled to [0, 1].
pub fn overlapping(seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut rng = seed::rng(seed);
    let mut xs = Vec::with_capacity(200);
    let mut labels = Vec::with_capacity(200);
    for (mu, label) in [(0.4, Label::Normal), (0.6, Label::Anomalous)] {
        let d = Normal::new(mu, 0.08).unwrap();
        for _ in 0..100 {
            xs.push(d.sample(&mut rng));
            labels.push(label);
        }
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (xs.iter().map(|v| vec![(v - lo) / (hi - lo)]).collect(), labels)
}

pub fn column(x: &[f64]) -> Vec<Vec<f64>> {
    x.iter().map(|&v| vec![v]).collect()
}

/// Minimum 2-partition SSE over every split of `x` into two non-empty sets.
pub fn exhaustive_sse(x: &[f64]) -> f64 {
    let n = x.len();
    let mut best = f64::INFINITY;
    for mask in 1..(1u32 << n) - 1 {
        let mut sum = [0.0; 2];
        let mut count = [0.0; 2];
        for (i, &v) in x.iter().enumerate() {
            let c = ((mask >> i) & 1) as usize;
            sum[c] += v;
            count[c] += 1.0;
        }
        let mean = [sum[0] / count[0], sum[1] / count[1]];
        let sse: f64 = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let d = v - mean[((mask >> i) & 1) as usize];
                d * d
            })
            .sum();
        best = best.min(sse);
    }
    best
}

/// 1-D k-means fixtures of at most 12 points: hand-built sets, then seeded
/// two-clump draws (clumps of width 2 separated by a gap of 3 to 6).
pub fn kmeans_fixtures() -> Vec<Vec<f64>> {
    let mut sets = vec![
        vec![0.0, 1.0, 10.0, 11.0],
        vec![0.0, 1.0, 2.0, 9.0, 10.0],
        vec![1.0, 1.5, 2.0, 8.0],
        vec![-3.0, -2.5, 4.0, 4.5, 5.0, 5.5],
        vec![0.1, 0.2, 0.25, 0.3, 0.8, 0.85, 0.9],
        vec![0.0, 0.0, 0.5, 3.0, 3.0, 3.5],
        vec![2.0, 2.1, 2.2, 2.3, 2.4, 2.5, 7.0, 7.1, 7.2, 7.3, 7.4, 7.5],
        vec![5.0, 0.0, 5.5, 0.5, 6.0, 1.0, 6.5],
    ];
    let mut rng = seed::rng(2024);
    while sets.len() < 58 {
        let a = rng.random_range(1..=6);
        let b = rng.random_range(1..=6);
        let gap = rng.random_range(3.0..6.0);
        let mut x: Vec<f64> = (0..a).map(|_| rng.random::<f64>() * 2.0).collect();
        x.extend((0..b).map(|_| 2.0 + gap + rng.random::<f64>() * 2.0));
        sets.push(x);
    }
    sets
}

/// An EM step from stated initial parameters, with frozen expectations
/// computed at 50 digits by `tools/oracles/em_step.py`.
pub struct EmCase {
    pub rows: Vec<Vec<f64>>,
    pub params: GmmParams,
    pub responsibility_1: Vec<f64>,
    pub log_likelihood: f64,
    pub weights: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

pub fn em_cases() -> Vec<EmCase> {
    vec![
        EmCase {
            rows: column(&[-0.5, 0.3, 1.2, 3.9, 5.1, 6.4]),
            params: GmmParams {
                weights: vec![0.4, 0.6],
                means: vec![vec![0.0], vec![5.0]],
                variances: vec![vec![1.0], vec![2.0]],
            },
            responsibility_1: vec![
                0.000_624_079_523_309_413_903_37,
                0.004_413_743_888_448_222_424,
                0.055_666_099_211_746_852_93,
                0.999_365_089_573_654_933_88,
                0.999_997_874_266_510_388_33,
                0.999_999_998_037_195_501_41,
            ],
            log_likelihood: -12.456_740_542_753_125_571,
            weights: [0.489_988_852_583_189_114_52, 0.510_011_147_416_810_885_48],
            means: [vec![0.317_924_104_150_181_860_09], vec![5.053_917_114_140_487_050_5]],
            variances: [vec![0.480_229_977_930_939_913_57], vec![1.336_746_085_960_137_016_7]],
        },
        EmCase {
            rows: vec![
                vec![0.1, 0.2],
                vec![0.15, 0.1],
                vec![0.3, 0.35],
                vec![0.7, 0.8],
                vec![0.85, 0.75],
                vec![0.9, 0.95],
            ],
            params: GmmParams {
                weights: vec![0.5, 0.5],
                means: vec![vec![0.2, 0.2], vec![0.8, 0.8]],
                variances: vec![vec![0.02, 0.03], vec![0.01, 0.02]],
            },
            responsibility_1: vec![
                0.000_000_000_000_006_284_476_463_724_159_433_6,
                0.000_000_000_000_006_974_420_249_567_949_389_7,
                0.000_000_076_330_447_229_438_348_547,
                0.999_995_445_116_934_345_79,
                0.999_999_883_569_688_495_02,
                0.999_999_999_321_954_109_39,
            ],
            log_likelihood: 5.863_353_741_096_403_460_9,
            weights: [0.500_000_765_943_493_760_24, 0.499_999_234_056_506_239_76],
            means: [
                vec![0.183_334_140_851_153_989_93, 0.216_667_569_808_992_944_58],
                vec![0.816_666_829_342_950_263_52, 0.833_333_374_853_329_449_83],
            ],
            variances: [
                vec![0.007_222_633_476_259_976_319, 0.010_556_066_734_403_641_904],
                vec![0.007_222_219_367_452_962_182_8, 0.007_222_237_270_169_418_307_7],
            ],
        },
    ]
}

/// A centroid-selection trace case with values from
/// `tools/oracles/centroid_trace.py`.
pub struct TraceCase {
    pub name: &'static str,
    pub feature: [f64; 10],
    pub mu_k: [f64; 2],
    pub sigma_k: [f64; 2],
    pub cluster_sigma: bool,
    pub mu: f64,
    pub sigma: f64,
    pub m_low: u8,
    pub m_high: u8,
    pub low: f64,
    pub high: f64,
    pub low_fallback: bool,
    pub high_fallback: bool,
}

const EVEN: [f64; 10] = [0.40, 0.42, 0.44, 0.46, 0.48, 0.52, 0.54, 0.56, 0.58, 0.60];
const OUTER: [f64; 10] = [0.30, 0.45, 0.47, 0.49, 0.50, 0.51, 0.53, 0.55, 0.58, 0.62];
const BIMODAL: [f64; 10] = [0.02, 0.05, 0.10, 0.12, 0.20, 0.55, 0.70, 0.88, 0.95, 1.00];

#[rustfmt::skip]
pub fn trace_cases() -> Vec<TraceCase> {
    let case = |name, feature, mu_k, sigma_k, cluster_sigma, (mu, sigma, m_low, m_high, low, high, low_fallback, high_fallback)| TraceCase {
        name, feature, mu_k, sigma_k, cluster_sigma, mu, sigma, m_low, m_high, low, high, low_fallback, high_fallback,
    };
    vec![
        case("symmetric", EVEN, [0.2, 0.8], [0.05, 0.05], false,
            (0.5, 0.066332495807108, 3, 3, 0.48, 0.52, false, false)),
        case("asymmetric", EVEN, [0.25, 0.85], [0.02, 0.09], false,
            (0.5, 0.066332495807108, 3, 2, 0.25, 0.56, true, false)),
        case("outer", OUTER, [0.05, 0.9], [0.1, 0.02], false,
            (0.5, 0.08234075540095563, 2, 4, 0.442, 0.9, false, true)),
        case("bimodal", BIMODAL, [0.098, 0.816], [0.06, 0.12], false,
            (0.457, 0.38055354419582005, 1, 1, 0.098, 0.816, true, true)),
        case("asymmetric_cluster", EVEN, [0.25, 0.85], [0.02, 0.09], true,
            (0.5, 0.066332495807108, 3, 2, 0.44000000000000006, 0.55, false, false)),
        case("outer_cluster", OUTER, [0.05, 0.9], [0.1, 0.02], true,
            (0.5, 0.08234075540095563, 2, 4, 0.4775, 0.5483333333333333, false, false)),
        case("bimodal_cluster", BIMODAL, [0.098, 0.816], [0.06, 0.12], true,
            (0.457, 0.38055354419582005, 1, 1, 0.098, 0.55, true, false)),
    ]
}

pub const BURST_N: usize = 1500;
pub const BURST_DURATION: f64 = 20e-6;

/// A 250 kHz unit sinusoid with 10 mV noise whose amplitude triples inside
/// window `burst` of 5.
pub fn burst_signal(seed: u64, burst: Option<usize>) -> Waveform {
    let mut rng = seed::rng(seed);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let dt = BURST_DURATION / BURST_N as f64;
    let samples = (0..BURST_N)
        .map(|i| {
            let amp = if burst == Some(i / (BURST_N / 5)) { 3.0 } else { 1.0 };
            amp * (std::f64::consts::TAU * 250e3 * i as f64 * dt).sin() + noise.sample(&mut rng)
        })
        .collect();
    Waveform::new("output", samples, dt).unwrap()
}
