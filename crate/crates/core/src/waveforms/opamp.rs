use serde::{Deserialize, Serialize};

use super::device::{simulate_device, Device, FaultState, Stimulus};
use super::Waveform;
use crate::{Error, Result};

/// Behavioral opamp stage:
/// `V_out = clip(gain·(V_in − offset) + temp_coeff·(T − nominal_temp), rails)`,
/// slew-limited in transient analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpampModel {
    pub open_loop_gain: f64,
    /// Volts.
    pub rail_low: f64,
    /// Volts.
    pub rail_high: f64,
    /// Input-referred offset, volts.
    pub offset: f64,
    /// V/s.
    pub slew_rate: f64,
    /// V/°C, referred to the output.
    pub temp_coeff: f64,
    /// °C.
    pub nominal_temp: f64,
    #[serde(default)]
    pub faults: FaultState,
}

impl Default for OpampModel {
    fn default() -> Self {
        OpampModel {
            open_loop_gain: 20.0,
            rail_low: -2.5,
            rail_high: 2.5,
            offset: 0.0,
            slew_rate: 1e7,
            temp_coeff: 1e-3,
            nominal_temp: 27.0,
            faults: FaultState::default(),
        }
    }
}

impl OpampModel {
    /// A distortion-free model: huge gain, no offset, no drift, fast slew.
    pub fn ideal(gain: f64) -> Self {
        OpampModel {
            open_loop_gain: gain,
            offset: 0.0,
            temp_coeff: 0.0,
            slew_rate: 1e15,
            ..OpampModel::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.open_loop_gain,
            self.rail_low,
            self.rail_high,
            self.offset,
            self.slew_rate,
            self.temp_coeff,
            self.nominal_temp,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("opamp", "parameters must be finite"));
        }
        if self.rail_low >= self.rail_high {
            return Err(Error::config("opamp.rail_low", "rail_low must be below rail_high"));
        }
        if self.open_loop_gain <= 0.0 {
            return Err(Error::config("opamp.open_loop_gain", "gain must be positive"));
        }
        if self.slew_rate <= 0.0 {
            return Err(Error::config("opamp.slew_rate", "slew rate must be positive"));
        }
        Ok(())
    }

    pub fn rail_span(&self) -> f64 {
        self.rail_high - self.rail_low
    }

    /// Gain after fault multipliers.
    pub fn effective_gain(&self) -> f64 {
        self.open_loop_gain * self.faults.gain_factor()
    }

    /// Offset after fault shifts.
    pub fn effective_offset(&self) -> f64 {
        self.offset + self.faults.offset_shift(self.rail_span())
    }
}

impl Device for OpampModel {
    fn transfer(&self, v_in: f64, temp: f64) -> f64 {
        self.effective_gain() * (v_in - self.effective_offset())
            + self.temp_coeff * (temp - self.nominal_temp)
    }

    fn rails(&self) -> (f64, f64) {
        (self.rail_low, self.rail_high)
    }

    fn slew_rate(&self) -> f64 {
        self.slew_rate
    }

    fn nominal_temp(&self) -> f64 {
        self.nominal_temp
    }

    fn faults(&self) -> &FaultState {
        &self.faults
    }
}

/// Transient or DC analysis of a single opamp.
pub fn simulate_opamp(model: &OpampModel, stimulus: &Stimulus) -> Result<Waveform> {
    model.validate()?;
    simulate_device(model, stimulus)
}
