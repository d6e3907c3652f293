//! Behavioral circuit simulation.
//!
//! Every simulator here is a pure function of its inputs and seed; there is no
//! shared state, so calls may run concurrently.

mod device;
mod kstage;
mod opamp;
mod vref;
mod vref_component;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use device::{simulate_device, Device, FaultState, Stimulus, SweepSpec};
pub use kstage::{build_kstage, simulate_kstage, AmplifierStage, KStageAmplifier};
pub use opamp::{simulate_opamp, OpampModel};
pub use vref::{
    output_block, pll_block, simulate_vref, trig_block, SignalKind, VrefBlockSignals, VrefConfig,
};
pub use vref_component::VrefComponentModel;

/// Default record length, matching a 20 µs observation at 75 MS/s.
pub const DEFAULT_SAMPLES: usize = 1500;
/// Default observation duration in seconds.
pub const DEFAULT_DURATION: f64 = 20e-6;

/// A uniformly sampled real-valued signal (volts unless noted otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    name: String,
    samples: Vec<f64>,
    sample_period: f64,
}

impl Waveform {
    pub fn new(name: impl Into<String>, samples: Vec<f64>, sample_period: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Input("waveform has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite sample at index {i}")));
        }
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return Err(Error::Input(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        Ok(Waveform {
            name: name.into(),
            samples,
            sample_period,
        })
    }

    /// Same name and timing, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Waveform::new(self.name.clone(), samples, self.sample_period)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.sample_period
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.sample_period
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    /// Writes `t,value` rows in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["t", "value"])?;
        for (i, v) in self.samples.iter().enumerate() {
            writer.write_record([format!("{:e}", self.time(i)), v.to_string()])?;
        }
        writer.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads a `t,value` CSV with uniform timestamps; at least two rows are
    /// required to recover the sample period.
    pub fn read_csv<R: Read>(name: impl Into<String>, input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            t: f64,
            value: f64,
        }
        let mut reader = csv::Reader::from_reader(input);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for row in reader.deserialize::<Row>() {
            let row = row?;
            times.push(row.t);
            values.push(row.value);
        }
        if values.len() < 2 {
            return Err(Error::Input(
                "waveform CSV needs at least two rows to recover timing".into(),
            ));
        }
        // Round-trip timestamps starting at zero give the period exactly.
        let period = if times[0] == 0.0 {
            times[1]
        } else {
            (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64
        };
        if times.windows(2).any(|p| ((p[1] - p[0]) - period).abs() > 1e-6 * period) {
            return Err(Error::Input("waveform CSV timestamps are not uniform".into()));
        }
        Waveform::new(name, values, period)
    }
}
