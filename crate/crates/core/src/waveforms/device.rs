use serde::{Deserialize, Serialize};

use super::Waveform;
use crate::{Error, Result};

/// Gain multiplier for a PFET driven in triode.
pub const OM_PFET_GAIN: f64 = 0.4;
/// Gain multiplier for an NFET driven in triode.
pub const OM_NFET_GAIN: f64 = 0.6;
/// Offset shift for an operating-mode fault, as a fraction of the rail span.
/// PFET faults shift up, NFET faults shift down.
pub const OM_OFFSET_FRACTION: f64 = 0.05;
/// Gain multiplier for a drain-source short.
pub const SHORT_GAIN: f64 = 0.25;
/// Settling time constant of an open fault, in samples.
pub const OPEN_TAU_SAMPLES: f64 = 10.0;

/// Set of component faults applied to a behavioral model.
///
/// Stored as flags over the pristine parameters, so applying the same fault
/// twice leaves the model unchanged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FaultState {
    #[serde(default)]
    pub om_pfet: bool,
    #[serde(default)]
    pub om_nfet: bool,
    #[serde(default)]
    pub short: bool,
    #[serde(default)]
    pub open: bool,
    /// Out-of-range operating temperature in °C.
    #[serde(default)]
    pub temperature: Option<f64>,
}

impl FaultState {
    pub fn is_clean(&self) -> bool {
        *self == FaultState::default()
    }

    pub fn gain_factor(&self) -> f64 {
        let mut g = 1.0;
        if self.om_pfet {
            g *= OM_PFET_GAIN;
        }
        if self.om_nfet {
            g *= OM_NFET_GAIN;
        }
        if self.short {
            g *= SHORT_GAIN;
        }
        g
    }

    pub fn offset_shift(&self, rail_span: f64) -> f64 {
        let mut shift = 0.0;
        if self.om_pfet {
            shift += OM_OFFSET_FRACTION * rail_span;
        }
        if self.om_nfet {
            shift -= OM_OFFSET_FRACTION * rail_span;
        }
        shift
    }
}

/// DC sweep description. `bias` is the input held constant during a
/// temperature sweep; it is ignored by input sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub start: f64,
    pub stop: f64,
    pub n_points: usize,
    #[serde(default)]
    pub bias: f64,
}

impl SweepSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.n_points == 0 {
            return Err(Error::Input("sweep has no points".into()));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.bias.is_finite()) {
            return Err(Error::Input("sweep bounds must be finite".into()));
        }
        if self.n_points == 1 {
            return Ok(vec![self.start]);
        }
        let step = (self.stop - self.start) / (self.n_points - 1) as f64;
        Ok((0..self.n_points)
            .map(|i| self.start + step * i as f64)
            .collect())
    }
}

/// Analysis to run on a device.
#[derive(Debug, Clone, PartialEq)]
pub enum Stimulus {
    /// Time-domain response to an input waveform.
    Transient(Waveform),
    /// Output against swept input voltage, at the operating temperature.
    DcInputSweep(SweepSpec),
    /// Output against swept ambient temperature (°C), input held at `bias`.
    DcTempSweep(SweepSpec),
}

/// A static transfer with rails, slew limit and fault state.
pub trait Device {
    /// Unclipped static output for input `v_in` at temperature `temp`.
    fn transfer(&self, v_in: f64, temp: f64) -> f64;
    fn rails(&self) -> (f64, f64);
    fn slew_rate(&self) -> f64;
    fn nominal_temp(&self) -> f64;
    fn faults(&self) -> &FaultState;

    fn operating_temp(&self) -> f64 {
        self.faults().temperature.unwrap_or(self.nominal_temp())
    }

    /// Clipped static output. An open device sits at the high rail.
    fn dc_output(&self, v_in: f64, temp: f64) -> f64 {
        let (lo, hi) = self.rails();
        if self.faults().open {
            return hi;
        }
        self.transfer(v_in, temp).clamp(lo, hi)
    }
}

/// Runs `stimulus` through `device`.
///
/// Sweep outputs are indexed by sweep point: their sample period is 1.
pub fn simulate_device<D: Device + ?Sized>(device: &D, stimulus: &Stimulus) -> Result<Waveform> {
    match stimulus {
        Stimulus::Transient(input) => transient(device, input),
        Stimulus::DcInputSweep(spec) => {
            let temp = device.operating_temp();
            let out = spec
                .points()?
                .into_iter()
                .map(|v| device.dc_output(v, temp))
                .collect();
            Waveform::new("dc_input_sweep", out, 1.0)
        }
        Stimulus::DcTempSweep(spec) => {
            let drift = device.operating_temp() - device.nominal_temp();
            let out = spec
                .points()?
                .into_iter()
                .map(|t| device.dc_output(spec.bias, t + drift))
                .collect();
            Waveform::new("dc_temp_sweep", out, 1.0)
        }
    }
}

fn transient<D: Device + ?Sized>(device: &D, input: &Waveform) -> Result<Waveform> {
    let (lo, hi) = device.rails();
    let dt = input.sample_period();
    let temp = device.operating_temp();
    let mut out = Vec::with_capacity(input.len());
    let first = device.transfer(input.samples()[0], temp).clamp(lo, hi);
    out.push(first);
    if device.faults().open {
        let alpha = 1.0 - (-1.0 / OPEN_TAU_SAMPLES).exp();
        let mut y = first;
        for _ in 1..input.len() {
            y += alpha * (hi - y);
            out.push(y);
        }
    } else {
        let max_step = device.slew_rate() * dt;
        let mut y = first;
        for &v in &input.samples()[1..] {
            let target = device.transfer(v, temp).clamp(lo, hi);
            y += (target - y).clamp(-max_step, max_step);
            out.push(y);
        }
    }
    Waveform::new(format!("{}_out", input.name()), out, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_points_are_inclusive() {
        let s = SweepSpec {
            start: -1.0,
            stop: 1.0,
            n_points: 5,
            bias: 0.0,
        };
        assert_eq!(s.points().unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let empty = SweepSpec { n_points: 0, ..s };
        assert!(empty.points().is_err());
    }

    #[test]
    fn fault_factors_compose() {
        let f = FaultState {
            om_pfet: true,
            om_nfet: true,
            ..Default::default()
        };
        assert!((f.gain_factor() - 0.24).abs() < 1e-15);
        assert_eq!(f.offset_shift(5.0), 0.0);
        assert!(FaultState::default().is_clean());
    }
}
