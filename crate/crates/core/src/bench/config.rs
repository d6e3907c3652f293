use std::collections::BTreeSet;
use std::fmt;

use serde::de::IntoDeserializer;
use serde::{Deserialize, Serialize};

use crate::centroid::SigmaSource;
use crate::cluster::{Algorithm, ClusterOptions};
use crate::features::FeatureSelection;
use crate::inject::{AnomalyKind, AnomalySpec, Location};
use crate::waveforms::{SignalKind, VrefConfig, DEFAULT_DURATION, DEFAULT_SAMPLES};
use crate::{Error, Result};

/// Random-injection rates, percent of signal length, cycled over anomalous samples.
pub const RANDOM_RATES_PCT: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];
/// Spike amplitude range as multiples of the clean maximum.
pub const RANDOM_AMPLITUDE: (f64, f64) = (2.0, 5.0);
/// Single-block periodic injection: threshold and delta as fractions of the clean maximum.
pub const SINGLE_PERIODIC: (f64, f64) = (0.9, 1.0);
/// Multipoint periodic thresholds and deltas, cycled over anomalous samples.
pub const MULTI_THRESHOLDS: [f64; 2] = [0.1, 0.9];
pub const MULTI_DELTAS: [f64; 2] = [0.05, 0.10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Circuit {
    VrefBlocks,
    VrefComponents,
    Opamp,
    Kstage,
}

impl Circuit {
    pub fn as_str(self) -> &'static str {
        match self {
            Circuit::VrefBlocks => "vref_blocks",
            Circuit::VrefComponents => "vref_components",
            Circuit::Opamp => "opamp",
            Circuit::Kstage => "kstage",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Experiment {
    IA,
    PA,
    TA,
    PPA,
    PRA,
    IPPA,
    ITPA,
    PTPA,
    IPTPA,
    IPRA,
    ITRA,
    PTRA,
    IPTRA,
    OmBoth,
    OmPfet,
    OmNfet,
    ParFault,
    Open,
    Short,
    KStage,
}

/// How an injection is patterned at one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    Random,
    /// Single-block periodic: fixed threshold and delta.
    Periodic,
    /// Multipoint periodic: thresholds and deltas cycled.
    PeriodicSweep,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::IA => "IA",
            Experiment::PA => "PA",
            Experiment::TA => "TA",
            Experiment::PPA => "PPA",
            Experiment::PRA => "PRA",
            Experiment::IPPA => "IPPA",
            Experiment::ITPA => "ITPA",
            Experiment::PTPA => "PTPA",
            Experiment::IPTPA => "IPTPA",
            Experiment::IPRA => "IPRA",
            Experiment::ITRA => "ITRA",
            Experiment::PTRA => "PTRA",
            Experiment::IPTRA => "IPTRA",
            Experiment::OmBoth => "OmBoth",
            Experiment::OmPfet => "OmPfet",
            Experiment::OmNfet => "OmNfet",
            Experiment::ParFault => "ParFault",
            Experiment::Open => "Open",
            Experiment::Short => "Short",
            Experiment::KStage => "KStage",
        }
    }

    /// Injections into the reference chain, by block.
    pub fn injections(self) -> Option<Vec<(Location, Pattern)>> {
        use Location::*;
        use Pattern::*;
        Some(match self {
            Experiment::IA => vec![(InputA, Random)],
            Experiment::PA => vec![(PllB, Periodic)],
            Experiment::TA => vec![(TrigC, Periodic)],
            Experiment::PPA => vec![(PllB, PeriodicSweep)],
            Experiment::PRA => vec![(PllB, Random)],
            Experiment::IPPA => vec![(InputA, Random), (PllB, PeriodicSweep)],
            Experiment::ITPA => vec![(InputA, Random), (TrigC, PeriodicSweep)],
            Experiment::PTPA => vec![(PllB, PeriodicSweep), (TrigC, PeriodicSweep)],
            Experiment::IPTPA => vec![
                (InputA, Random),
                (PllB, PeriodicSweep),
                (TrigC, PeriodicSweep),
            ],
            Experiment::IPRA => vec![(InputA, Random), (PllB, Random)],
            Experiment::ITRA => vec![(InputA, Random), (TrigC, Random)],
            Experiment::PTRA => vec![(PllB, Random), (TrigC, Random)],
            Experiment::IPTRA => vec![(InputA, Random), (PllB, Random), (TrigC, Random)],
            _ => return None,
        })
    }

    /// Anomaly specs for the `j`-th anomalous sample.
    pub fn anomaly_specs(self, j: usize, seeds: &[u64]) -> Option<Vec<AnomalySpec>> {
        let plan = self.injections()?;
        Some(
            plan.into_iter()
                .zip(seeds.iter().copied().chain(std::iter::repeat(0)))
                .map(|((location, pattern), seed)| {
                    let kind = match pattern {
                        Pattern::Random => AnomalyKind::PointRandom {
                            rate_pct: RANDOM_RATES_PCT[j % RANDOM_RATES_PCT.len()],
                            amp_mult_low: RANDOM_AMPLITUDE.0,
                            amp_mult_high: RANDOM_AMPLITUDE.1,
                        },
                        Pattern::Periodic => AnomalyKind::PointPeriodic {
                            threshold_frac: SINGLE_PERIODIC.0,
                            delta_frac: SINGLE_PERIODIC.1,
                        },
                        Pattern::PeriodicSweep => AnomalyKind::PointPeriodic {
                            threshold_frac: MULTI_THRESHOLDS[j % 2],
                            delta_frac: MULTI_DELTAS[(j / 2) % 2],
                        },
                    };
                    AnomalySpec {
                        kind,
                        location,
                        seed,
                    }
                })
                .collect(),
        )
    }

    /// Signal observed when the config names none: the output of the block
    /// right after the last injected one, or the chain output for multipoint
    /// injections.
    pub fn default_signals(self) -> Vec<SignalKind> {
        match self {
            Experiment::IA => vec![SignalKind::PllIntensity],
            Experiment::PA => vec![SignalKind::Trig],
            Experiment::PPA | Experiment::PRA => vec![SignalKind::Trig, SignalKind::Output],
            _ => vec![SignalKind::Output],
        }
    }

    pub fn valid_for(self, circuit: Circuit) -> bool {
        match circuit {
            Circuit::VrefBlocks => self.injections().is_some(),
            Circuit::VrefComponents | Circuit::Opamp => matches!(
                self,
                Experiment::OmBoth
                    | Experiment::OmPfet
                    | Experiment::OmNfet
                    | Experiment::ParFault
                    | Experiment::Open
                    | Experiment::Short
            ),
            Circuit::Kstage => self == Experiment::KStage,
        }
    }

    /// Report section this experiment belongs to.
    pub fn family(self) -> &'static str {
        match self {
            Experiment::IA | Experiment::PA | Experiment::TA => "Single-block point anomalies",
            Experiment::IPPA | Experiment::ITPA | Experiment::PTPA | Experiment::IPTPA => {
                "Multipoint periodic anomalies"
            }
            Experiment::IPRA | Experiment::ITRA | Experiment::PTRA | Experiment::IPTRA => {
                "Multipoint random anomalies"
            }
            Experiment::PPA | Experiment::PRA => "Multipoint observation",
            Experiment::KStage => "k-stage amplifiers",
            _ => "Component faults",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::deserialize(s.into_deserializer()).map_err(|_: serde::de::value::Error| {
            Error::config("experiment", format!("unknown experiment `{s}`"))
        })
    }
}

/// Analysis used to observe component-level circuits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    #[default]
    Transient,
    DcInput,
    DcTemp,
}

impl Analysis {
    pub fn as_str(self) -> &'static str {
        match self {
            Analysis::Transient => "transient",
            Analysis::DcInput => "dc_input",
            Analysis::DcTemp => "dc_temp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KStageConfig {
    pub k: usize,
    /// Closed-loop gain of every stage.
    pub stage_gain: f64,
    /// Stages carrying the fault in anomalous samples; all stages when absent.
    pub anomalous_stages: Option<BTreeSet<usize>>,
    /// Input sinusoid amplitude, volts.
    pub input_amplitude: f64,
    /// Relative std of the per-sample input amplitude.
    pub amplitude_jitter: f64,
}

impl Default for KStageConfig {
    fn default() -> Self {
        KStageConfig {
            k: 3,
            stage_gain: 2.0,
            anomalous_stages: None,
            input_amplitude: 0.1,
            amplitude_jitter: 0.15,
        }
    }
}

impl KStageConfig {
    pub fn stage_set(&self) -> BTreeSet<usize> {
        self.anomalous_stages
            .clone()
            .unwrap_or_else(|| (0..self.k).collect())
    }
}

/// One experiment: circuit, anomaly, observation and clustering setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub experiment: Experiment,
    pub circuit: Circuit,
    /// Observed reference-chain signals; experiment default when empty.
    #[serde(default)]
    pub signals: Vec<SignalKind>,
    #[serde(default = "FeatureSelection::all")]
    pub features: FeatureSelection,
    #[serde(default)]
    pub window_k: Option<usize>,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    /// Also evaluate the centroid-selection refit.
    #[serde(default)]
    pub centroid_select: bool,
    #[serde(default)]
    pub sigma_source: SigmaSource,
    #[serde(default = "default_per_class")]
    pub n_samples_per_class: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Samples per signal.
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    /// Transient duration, seconds.
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub analysis: Analysis,
    #[serde(default)]
    pub kstage: KStageConfig,
    #[serde(default)]
    pub vref: VrefConfig,
    #[serde(default)]
    pub cluster: ClusterOptions,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Gmm
}

fn default_per_class() -> usize {
    100
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_duration() -> f64 {
    DEFAULT_DURATION
}

/// Smallest allowed class size.
pub const MIN_PER_CLASS: usize = 10;

impl ExperimentConfig {
    /// Defaults for `experiment` on `circuit`.
    pub fn new(experiment: Experiment, circuit: Circuit) -> Self {
        ExperimentConfig {
            name: None,
            experiment,
            circuit,
            signals: Vec::new(),
            features: FeatureSelection::all(),
            window_k: None,
            algorithm: Algorithm::Gmm,
            centroid_select: false,
            sigma_source: SigmaSource::Global,
            n_samples_per_class: default_per_class(),
            seed: None,
            n_samples: DEFAULT_SAMPLES,
            duration: DEFAULT_DURATION,
            analysis: Analysis::Transient,
            kstage: KStageConfig::default(),
            vref: VrefConfig::default(),
            cluster: ClusterOptions::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.experiment.as_str().to_ascii_lowercase())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Observed signals, resolved against the experiment default.
    pub fn observed_signals(&self) -> Vec<SignalKind> {
        match self.circuit {
            Circuit::VrefBlocks if self.signals.is_empty() => self.experiment.default_signals(),
            Circuit::VrefBlocks => self.signals.clone(),
            _ => vec![SignalKind::Output],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.experiment.valid_for(self.circuit) {
            return Err(Error::config(
                "experiment",
                format!(
                    "{} is not defined for circuit {}",
                    self.experiment,
                    self.circuit.as_str()
                ),
            ));
        }
        if self.n_samples_per_class < MIN_PER_CLASS {
            return Err(Error::config(
                "n_samples_per_class",
                format!("must be at least {MIN_PER_CLASS}, got {}", self.n_samples_per_class),
            ));
        }
        if self.algorithm == Algorithm::Centroid {
            return Err(Error::config(
                "algorithm",
                "choose kmeans, gmm, birch or spectral; enable centroid_select for the refit",
            ));
        }
        if self.n_samples < 10 {
            return Err(Error::config("n_samples", "at least 10 samples required"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config("duration", "must be positive"));
        }
        if let Some(k) = self.window_k {
            if k == 0 || !self.n_samples.is_multiple_of(k) {
                return Err(Error::config(
                    "window_k",
                    format!("{} samples do not split into {k} equal windows", self.n_samples),
                ));
            }
        }
        match self.circuit {
            Circuit::VrefBlocks => {
                self.vref.validate()?;
                let mut seen = BTreeSet::new();
                if self.signals.iter().any(|s| !seen.insert(*s)) {
                    return Err(Error::config("signals", "duplicate observed signal"));
                }
            }
            _ => {
                if self.signals.iter().any(|s| *s != SignalKind::Output) {
                    return Err(Error::config(
                        "signals",
                        "component circuits expose only `output`",
                    ));
                }
            }
        }
        if self.circuit == Circuit::Kstage {
            let ks = &self.kstage;
            if ks.k == 0 {
                return Err(Error::config("kstage.k", "at least one stage required"));
            }
            if let Some(&i) = ks.stage_set().iter().find(|&&i| i >= ks.k) {
                return Err(Error::config(
                    "kstage.anomalous_stages",
                    format!("stage {i} out of range for k = {}", ks.k),
                ));
            }
            if ks.stage_set().is_empty() {
                return Err(Error::config("kstage.anomalous_stages", "no anomalous stage"));
            }
            if !(ks.input_amplitude > 0.0 && ks.amplitude_jitter >= 0.0) {
                return Err(Error::config(
                    "kstage.input_amplitude",
                    "amplitude must be positive and jitter non-negative",
                ));
            }
            if self.analysis != Analysis::Transient {
                return Err(Error::config("analysis", "k-stage circuits run transient only"));
            }
        }
        Ok(())
    }
}
