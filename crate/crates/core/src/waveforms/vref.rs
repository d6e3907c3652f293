//! Four-block voltage reference chain: Input (A) → PLL (B) → Trig Fun (C) → Output (D).
//!
//! Each downstream block is a pure function of its predecessor's output and
//! the block parameters, so a perturbation injected at one block propagates
//! to every block after it when the chain is re-simulated.

use std::f64::consts::TAU;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Waveform;
use crate::{seed, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VrefConfig {
    /// Input sinusoid amplitude, volts.
    pub amplitude: f64,
    /// Input frequency, Hz.
    pub frequency: f64,
    /// Std of additive Gaussian noise on the input, volts. Zero disables noise.
    pub noise_std: f64,
    /// PLL output frequency as a multiple of the input frequency.
    pub pll_multiplier: f64,
    /// PLL lock time constant, seconds.
    pub pll_lock_tau: f64,
    /// Free-running frequency as a fraction of the locked frequency.
    pub pll_free_run_ratio: f64,
    /// Fractional PLL frequency deviation per unit of normalized input error.
    pub pll_fm_gain: f64,
    /// Fractional PLL amplitude deviation per unit of normalized input error.
    pub pll_am_gain: f64,
    pub trig_gain: f64,
    /// Settled output level, volts.
    pub output_nominal: f64,
    /// Volts of output per unit of Trig signal.
    pub output_scale: f64,
    /// Output low-pass time constant, seconds.
    pub output_tau: f64,
}

impl Default for VrefConfig {
    fn default() -> Self {
        VrefConfig {
            amplitude: 1.0,
            frequency: 250e3,
            noise_std: 0.01,
            pll_multiplier: 2.0,
            pll_lock_tau: 1e-6,
            pll_free_run_ratio: 0.5,
            pll_fm_gain: 0.5,
            pll_am_gain: 0.5,
            trig_gain: 1.0,
            output_nominal: 1.2,
            output_scale: 0.1,
            output_tau: 0.5e-6,
        }
    }
}

impl VrefConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vref.amplitude", self.amplitude),
            ("vref.frequency", self.frequency),
            ("vref.pll_multiplier", self.pll_multiplier),
            ("vref.pll_lock_tau", self.pll_lock_tau),
            ("vref.pll_free_run_ratio", self.pll_free_run_ratio),
            ("vref.trig_gain", self.trig_gain),
            ("vref.output_nominal", self.output_nominal),
            ("vref.output_tau", self.output_tau),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        let finite = [
            ("vref.noise_std", self.noise_std),
            ("vref.pll_fm_gain", self.pll_fm_gain),
            ("vref.pll_am_gain", self.pll_am_gain),
            ("vref.output_scale", self.output_scale),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
        }
        if self.noise_std < 0.0 {
            return Err(Error::config("vref.noise_std", "must be non-negative"));
        }
        Ok(())
    }

    /// The noiseless input the PLL expects at sample time `t`.
    fn reference(&self, t: f64) -> f64 {
        self.amplitude * (TAU * self.frequency * t).sin()
    }
}

/// Observable signals of the reference chain, all sharing length and timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrefBlockSignals {
    pub input: Waveform,
    /// Instantaneous PLL frequency, Hz.
    pub pll_frequency: Waveform,
    pub pll_intensity: Waveform,
    pub trig: Waveform,
    pub output: Waveform,
}

/// A named observable of the reference chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Input,
    PllFrequency,
    PllIntensity,
    Trig,
    Output,
}

impl SignalKind {
    pub const ALL: [SignalKind; 5] = [
        SignalKind::Input,
        SignalKind::PllFrequency,
        SignalKind::PllIntensity,
        SignalKind::Trig,
        SignalKind::Output,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::Input => "input",
            SignalKind::PllFrequency => "pll_frequency",
            SignalKind::PllIntensity => "pll_intensity",
            SignalKind::Trig => "trig",
            SignalKind::Output => "output",
        }
    }
}

impl std::str::FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SignalKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config("signals", format!("unknown signal `{s}`")))
    }
}

impl VrefBlockSignals {
    pub fn signal(&self, kind: SignalKind) -> &Waveform {
        match kind {
            SignalKind::Input => &self.input,
            SignalKind::PllFrequency => &self.pll_frequency,
            SignalKind::PllIntensity => &self.pll_intensity,
            SignalKind::Trig => &self.trig,
            SignalKind::Output => &self.output,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (SignalKind, &Waveform)> {
        SignalKind::ALL.into_iter().map(move |k| (k, self.signal(k)))
    }

    /// Rebuilds the chain from a given input.
    pub fn from_input(config: &VrefConfig, input: Waveform) -> Result<Self> {
        let (pll_frequency, pll_intensity) = pll_block(config, &input)?;
        Self::from_pll(config, input, pll_frequency, pll_intensity)
    }

    /// Rebuilds Trig and Output from given PLL signals.
    pub fn from_pll(
        config: &VrefConfig,
        input: Waveform,
        pll_frequency: Waveform,
        pll_intensity: Waveform,
    ) -> Result<Self> {
        let trig = trig_block(config, &pll_frequency, &pll_intensity)?;
        Self::from_trig(config, input, pll_frequency, pll_intensity, trig)
    }

    /// Rebuilds Output from a given Trig signal.
    pub fn from_trig(
        config: &VrefConfig,
        input: Waveform,
        pll_frequency: Waveform,
        pll_intensity: Waveform,
        trig: Waveform,
    ) -> Result<Self> {
        let output = output_block(config, &trig)?;
        Ok(VrefBlockSignals {
            input,
            pll_frequency,
            pll_intensity,
            trig,
            output,
        })
    }
}

/// Simulates the whole chain for `n_samples` samples spanning `duration` seconds.
pub fn simulate_vref(
    config: &VrefConfig,
    n_samples: usize,
    duration: f64,
    seed: u64,
) -> Result<VrefBlockSignals> {
    config.validate()?;
    if n_samples < 10 {
        return Err(Error::config("n_samples", "at least 10 samples required"));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::config("duration", "must be positive"));
    }
    let dt = duration / n_samples as f64;
    let mut rng = seed::rng(seed);
    let noise = (config.noise_std > 0.0)
        .then(|| Normal::new(0.0, config.noise_std).expect("validated std"));
    let samples = (0..n_samples)
        .map(|i| {
            let clean = config.reference(i as f64 * dt);
            match &noise {
                Some(n) => clean + n.sample(&mut rng),
                None => clean,
            }
        })
        .collect();
    let input = Waveform::new("input", samples, dt)?;
    VrefBlockSignals::from_input(config, input)
}

/// PLL block: returns `(frequency, intensity)`.
///
/// The loop locks to `pll_multiplier·frequency` with a first-order transient.
/// Deviation of the input from the expected reference modulates both the
/// instantaneous frequency and the output amplitude.
pub fn pll_block(config: &VrefConfig, input: &Waveform) -> Result<(Waveform, Waveform)> {
    let dt = input.sample_period();
    let locked = config.pll_multiplier * config.frequency;
    let mut phase = 0.0f64;
    let mut freq = Vec::with_capacity(input.len());
    let mut intensity = Vec::with_capacity(input.len());
    for (i, &x) in input.samples().iter().enumerate() {
        let t = i as f64 * dt;
        let error = (x - config.reference(t)) / config.amplitude;
        let lock = 1.0 - (1.0 - config.pll_free_run_ratio) * (-t / config.pll_lock_tau).exp();
        let f = locked * lock * (1.0 + config.pll_fm_gain * error);
        intensity.push(phase.sin() * (1.0 + config.pll_am_gain * error));
        freq.push(f);
        phase += TAU * f * dt;
    }
    Ok((
        Waveform::new("pll_frequency", freq, dt)?,
        Waveform::new("pll_intensity", intensity, dt)?,
    ))
}

/// Trig Fun block: sine of the PLL phase (integrated from the frequency
/// trace), weighted by the magnitude of the PLL intensity.
pub fn trig_block(
    config: &VrefConfig,
    pll_frequency: &Waveform,
    pll_intensity: &Waveform,
) -> Result<Waveform> {
    if pll_frequency.len() != pll_intensity.len() {
        return Err(Error::Input("PLL signals differ in length".into()));
    }
    let dt = pll_frequency.sample_period();
    let mut phase = 0.0f64;
    let out = pll_frequency
        .samples()
        .iter()
        .zip(pll_intensity.samples())
        .map(|(&f, &a)| {
            let y = config.trig_gain * phase.sin() * a.abs();
            phase += TAU * f * dt;
            y
        })
        .collect();
    Waveform::new("trig", out, dt)
}

/// Output block: first-order low-pass of `output_nominal + output_scale·trig`,
/// starting from 0 V.
pub fn output_block(config: &VrefConfig, trig: &Waveform) -> Result<Waveform> {
    let dt = trig.sample_period();
    let alpha = dt / (config.output_tau + dt);
    let mut y = 0.0;
    let out = trig
        .samples()
        .iter()
        .map(|&v| {
            let target = config.output_nominal + config.output_scale * v;
            y += alpha * (target - y);
            y
        })
        .collect();
    Waveform::new("output", out, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> VrefConfig {
        VrefConfig {
            noise_std: 0.0,
            ..VrefConfig::default()
        }
    }

    #[test]
    fn default_geometry() {
        let s = simulate_vref(&VrefConfig::default(), 1500, 20e-6, 1).unwrap();
        for (_, w) in s.iter() {
            assert_eq!(w.len(), 1500);
            assert!((w.sample_period() - 13.333333333333e-9).abs() < 1e-20);
            assert!(w.samples().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let a = simulate_vref(&VrefConfig::default(), 1500, 20e-6, 7).unwrap();
        let b = simulate_vref(&VrefConfig::default(), 1500, 20e-6, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_vref(&VrefConfig::default(), 1500, 20e-6, 8).unwrap();
        assert_ne!(a.input, c.input);
    }

    #[test]
    fn noiseless_input_peaks_at_amplitude() {
        let cfg = VrefConfig {
            amplitude: 0.7,
            ..quiet()
        };
        let s = simulate_vref(&cfg, 1500, 20e-6, 0).unwrap();
        assert!((s.input.max_abs() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn output_settles_near_reference() {
        let s = simulate_vref(&quiet(), 1500, 20e-6, 0).unwrap();
        let tail = &s.output.samples()[1000..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!((mean - 1.2).abs() < 0.05, "{mean}");
    }

    #[test]
    fn pll_frequency_locks() {
        let s = simulate_vref(&quiet(), 1500, 20e-6, 0).unwrap();
        let last = *s.pll_frequency.samples().last().unwrap();
        assert!((last - 500e3).abs() < 1.0);
        assert!((s.pll_frequency.samples()[0] - 250e3).abs() < 1e-6);
    }

    #[test]
    fn chain_blocks_are_pure_functions_of_predecessor() {
        let cfg = VrefConfig::default();
        let s = simulate_vref(&cfg, 600, 8e-6, 3).unwrap();
        let (f, a) = pll_block(&cfg, &s.input).unwrap();
        assert_eq!(f, s.pll_frequency);
        assert_eq!(a, s.pll_intensity);
        assert_eq!(trig_block(&cfg, &f, &a).unwrap(), s.trig);
        assert_eq!(output_block(&cfg, &s.trig).unwrap(), s.output);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = VrefConfig {
            frequency: 0.0,
            ..VrefConfig::default()
        };
        let err = simulate_vref(&cfg, 100, 1e-6, 0).unwrap_err();
        assert_eq!(err.key(), Some("vref.frequency"));
        let cfg = VrefConfig {
            amplitude: -1.0,
            ..VrefConfig::default()
        };
        assert!(simulate_vref(&cfg, 100, 1e-6, 0).is_err());
        assert!(simulate_vref(&VrefConfig::default(), 9, 1e-6, 0).is_err());
        assert!(simulate_vref(&VrefConfig::default(), 100, 0.0, 0).is_err());
    }
}
