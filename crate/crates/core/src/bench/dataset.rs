use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use super::config::{Analysis, Circuit, Experiment, ExperimentConfig};
use crate::features::{
    aggregate_multisignal, extract_features, windowed_features, FeatureRow, FeatureSelection,
    Label,
};
use crate::inject::{apply_component_fault, inject_multipoint, ComponentFault, LEGAL_TEMP_RANGE};
use crate::waveforms::{
    build_kstage, simulate_kstage, simulate_opamp, simulate_vref, OpampModel, Stimulus,
    SweepSpec, VrefComponentModel, Waveform,
};
use crate::{seed, Error, Result};

/// Std of additive measurement noise on component-level outputs, volts.
pub const MEASUREMENT_NOISE: f64 = 1e-3;
/// Input frequency of component-level transients, Hz.
const TRANSIENT_FREQUENCY: f64 = 250e3;
/// Margin beyond the legal range for parametric-fault temperatures, °C.
const PARAMETRIC_MARGIN: (f64, f64) = (5.0, 50.0);

/// Simulated observations of one signal instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSignals {
    pub sample_id: u64,
    pub label: Label,
    /// One waveform per observed signal, in config order.
    pub signals: Vec<Waveform>,
}

/// Balanced set of simulated signals.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub signal_names: Vec<String>,
    pub samples: Vec<SampleSignals>,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.samples.first().map_or(0, |s| s.signals[0].len())
    }

    pub fn sample_period(&self) -> f64 {
        self.samples.first().map_or(1.0, |s| s.signals[0].sample_period())
    }
}

/// Simulates `n_samples_per_class` clean signals (ids `0..n`) followed by as
/// many anomalous ones (ids `n..2n`). Every sample draws from its own stream
/// derived from the config seed and its id.
pub fn simulate_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    cfg.validate()?;
    let n = cfg.n_samples_per_class;
    let samples = (0..2 * n)
        .into_par_iter()
        .map(|id| {
            let label = if id < n { Label::Normal } else { Label::Anomalous };
            let anomaly_index = (label == Label::Anomalous).then(|| id - n);
            let mut rng = seed::derived_rng(cfg.seed(), id as u64);
            let signals = simulate_sample(cfg, anomaly_index, &mut rng)?;
            Ok(SampleSignals {
                sample_id: id as u64,
                label,
                signals,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        signal_names: cfg
            .observed_signals()
            .iter()
            .map(|s| s.as_str().to_string())
            .collect(),
        samples,
    })
}

fn simulate_sample(
    cfg: &ExperimentConfig,
    anomaly_index: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Waveform>> {
    match cfg.circuit {
        Circuit::VrefBlocks => {
            let clean = simulate_vref(&cfg.vref, cfg.n_samples, cfg.duration, rng.random())?;
            let signals = match anomaly_index {
                None => clean,
                Some(j) => {
                    let seeds: Vec<u64> = (0..3).map(|_| rng.random()).collect();
                    let specs = cfg
                        .experiment
                        .anomaly_specs(j, &seeds)
                        .expect("validated vref experiment");
                    inject_multipoint(&cfg.vref, &clean, &specs)?.0
                }
            };
            Ok(cfg
                .observed_signals()
                .into_iter()
                .map(|k| signals.signal(k).clone())
                .collect())
        }
        Circuit::Opamp | Circuit::VrefComponents => {
            let fault = anomaly_index.map(|_| component_fault(cfg.experiment, rng));
            Ok(vec![simulate_component(cfg, fault, rng)?])
        }
        Circuit::Kstage => Ok(vec![simulate_kstage_sample(cfg, anomaly_index.is_some(), rng)?]),
    }
}

fn component_fault(experiment: Experiment, rng: &mut ChaCha8Rng) -> ComponentFault {
    match experiment {
        Experiment::OmBoth => ComponentFault::OmBoth,
        Experiment::OmPfet => ComponentFault::OmPfet,
        Experiment::OmNfet => ComponentFault::OmNfet,
        Experiment::Open => ComponentFault::Open,
        Experiment::Short => ComponentFault::Short,
        Experiment::ParFault => {
            let margin = rng.random_range(PARAMETRIC_MARGIN.0..PARAMETRIC_MARGIN.1);
            let temperature = if rng.random_bool(0.5) {
                LEGAL_TEMP_RANGE.1 + margin
            } else {
                LEGAL_TEMP_RANGE.0 - margin
            };
            ComponentFault::Parametric { temperature }
        }
        other => unreachable!("{other} is not a component fault"),
    }
}

fn jitter(rng: &mut ChaCha8Rng, rel_std: f64) -> f64 {
    1.0 + Normal::new(0.0, rel_std).expect("finite std").sample(rng)
}

fn add_noise(w: Waveform, std: f64, rng: &mut ChaCha8Rng) -> Result<Waveform> {
    let normal = Normal::new(0.0, std).expect("finite std");
    let samples = w.samples().iter().map(|v| v + normal.sample(rng)).collect();
    w.with_samples(samples)
}

fn sine(n: usize, duration: f64, offset: f64, amplitude: f64, rng: &mut ChaCha8Rng, noise: f64) -> Result<Waveform> {
    let dt = duration / n as f64;
    let normal = Normal::new(0.0, noise).expect("finite std");
    let samples = (0..n)
        .map(|i| offset + amplitude * (TAU * TRANSIENT_FREQUENCY * i as f64 * dt).sin() + normal.sample(rng))
        .collect();
    Waveform::new("input", samples, dt)
}

/// Single opamp or bandgap reference with per-sample process variation.
fn simulate_component(
    cfg: &ExperimentConfig,
    fault: Option<ComponentFault>,
    rng: &mut ChaCha8Rng,
) -> Result<Waveform> {
    let n = cfg.n_samples;
    let out = match cfg.circuit {
        Circuit::Opamp => {
            let base = OpampModel::default();
            let mut model = OpampModel {
                open_loop_gain: base.open_loop_gain * jitter(rng, 0.02),
                offset: 0.5e-3 * rng.sample::<f64, _>(StandardNormal),
                temp_coeff: base.temp_coeff * jitter(rng, 0.05),
                ..base
            };
            if let Some(f) = fault {
                model = apply_component_fault(&model, f)?;
            }
            let stimulus = match cfg.analysis {
                Analysis::Transient => Stimulus::Transient(sine(
                    n,
                    cfg.duration,
                    0.0,
                    0.05 * jitter(rng, 0.02),
                    rng,
                    MEASUREMENT_NOISE,
                )?),
                Analysis::DcInput => Stimulus::DcInputSweep(SweepSpec {
                    start: -0.15,
                    stop: 0.15,
                    n_points: n,
                    bias: 0.0,
                }),
                Analysis::DcTemp => Stimulus::DcTempSweep(SweepSpec {
                    start: LEGAL_TEMP_RANGE.0,
                    stop: LEGAL_TEMP_RANGE.1,
                    n_points: n,
                    bias: 0.02,
                }),
            };
            simulate_opamp(&model, &stimulus)?
        }
        Circuit::VrefComponents => {
            let base = VrefComponentModel::default();
            let mut model = VrefComponentModel {
                nominal_output: base.nominal_output * jitter(rng, 0.005),
                line_regulation: base.line_regulation * jitter(rng, 0.05),
                temp_coeff: base.temp_coeff * jitter(rng, 0.05),
                ..base
            };
            if let Some(f) = fault {
                model = apply_component_fault(&model, f)?;
            }
            let supply = model.supply_nominal;
            let stimulus = match cfg.analysis {
                Analysis::Transient => Stimulus::Transient(sine(
                    n,
                    cfg.duration,
                    supply,
                    0.1 * jitter(rng, 0.05),
                    rng,
                    5e-3,
                )?),
                Analysis::DcInput => Stimulus::DcInputSweep(SweepSpec {
                    start: 2.5,
                    stop: 4.0,
                    n_points: n,
                    bias: 0.0,
                }),
                Analysis::DcTemp => Stimulus::DcTempSweep(SweepSpec {
                    start: LEGAL_TEMP_RANGE.0,
                    stop: LEGAL_TEMP_RANGE.1,
                    n_points: n,
                    bias: supply,
                }),
            };
            model.simulate(&stimulus)?
        }
        _ => unreachable!("not a component circuit"),
    };
    add_noise(out.renamed("output"), MEASUREMENT_NOISE, rng)
}

fn simulate_kstage_sample(cfg: &ExperimentConfig, anomalous: bool, rng: &mut ChaCha8Rng) -> Result<Waveform> {
    let ks = &cfg.kstage;
    let gains = vec![ks.stage_gain; ks.k];
    let amp = if anomalous {
        build_kstage(&OpampModel::default(), ks.k, &gains, &ks.stage_set(), Some(ComponentFault::OmBoth))?
    } else {
        build_kstage(&OpampModel::default(), ks.k, &gains, &Default::default(), None)?
    };
    let input = sine(
        cfg.n_samples,
        cfg.duration,
        0.0,
        ks.input_amplitude * jitter(rng, ks.amplitude_jitter),
        rng,
        MEASUREMENT_NOISE,
    )?;
    let out = simulate_kstage(&amp, &input)?;
    add_noise(out.renamed("output"), MEASUREMENT_NOISE, rng)
}

/// Feature rows from the signals at `signal_indices`, concatenated in that
/// order. With `window_k`, every window of every signal is its own row.
pub fn featurize(
    ds: &Dataset,
    signal_indices: &[usize],
    selection: &FeatureSelection,
    window_k: Option<usize>,
) -> Result<Vec<FeatureRow>> {
    if signal_indices.is_empty() {
        return Err(Error::config("signals", "no signal selected"));
    }
    if let Some(&i) = signal_indices.iter().find(|&&i| i >= ds.signal_names.len()) {
        return Err(Error::config("signals", format!("signal index {i} out of range")));
    }
    let per_sample = ds
        .samples
        .par_iter()
        .map(|s| {
            let per_signal: Vec<Vec<Vec<f64>>> = signal_indices
                .iter()
                .map(|&i| match window_k {
                    Some(k) => windowed_features(&s.signals[i], k, selection),
                    None => extract_features(&s.signals[i], selection).map(|f| vec![f]),
                })
                .collect::<Result<_>>()?;
            let windows = per_signal[0].len();
            (0..windows)
                .map(|w| {
                    let parts: Vec<Vec<f64>> =
                        per_signal.iter().map(|p| p[w].clone()).collect();
                    Ok(FeatureRow {
                        sample_id: s.sample_id,
                        label: s.label,
                        window_index: w,
                        values: aggregate_multisignal(&parts)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_sample.into_iter().flatten().collect())
}

/// Simulates and featurizes with every observed signal and the configured
/// feature selection.
pub fn generate_dataset(cfg: &ExperimentConfig) -> Result<Vec<FeatureRow>> {
    let ds = simulate_dataset(cfg)?;
    let all: Vec<usize> = (0..ds.signal_names.len()).collect();
    featurize(&ds, &all, &cfg.features, cfg.window_k)
}
