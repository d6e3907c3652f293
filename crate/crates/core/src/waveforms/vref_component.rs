use serde::{Deserialize, Serialize};

use super::device::{simulate_device, Device, FaultState, Stimulus};
use super::Waveform;
use crate::{Error, Result};

/// Component-level bandgap reference.
///
/// The input is the supply voltage. The output is a nominal reference level
/// with finite line regulation and a linear temperature drift, clipped to
/// `[0, supply_nominal]`. Faults scale the reference (operating-mode and
/// short faults), shift it by a fraction of the supply span, or pin it to the
/// supply (open).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrefComponentModel {
    /// Volts.
    pub nominal_output: f64,
    /// Volts.
    pub supply_nominal: f64,
    /// Output change per volt of supply change.
    pub line_regulation: f64,
    /// V/°C.
    pub temp_coeff: f64,
    /// °C.
    pub nominal_temp: f64,
    /// V/s.
    pub slew_rate: f64,
    #[serde(default)]
    pub faults: FaultState,
}

impl Default for VrefComponentModel {
    fn default() -> Self {
        VrefComponentModel {
            nominal_output: 1.2,
            supply_nominal: 3.3,
            line_regulation: 0.02,
            temp_coeff: 2e-4,
            nominal_temp: 27.0,
            slew_rate: 1e7,
            faults: FaultState::default(),
        }
    }
}

impl VrefComponentModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.nominal_output > 0.0 && self.nominal_output.is_finite()) {
            return Err(Error::config(
                "vref.nominal_output",
                "reference level must be positive",
            ));
        }
        if !(self.supply_nominal > self.nominal_output && self.supply_nominal.is_finite()) {
            return Err(Error::config(
                "vref.supply_nominal",
                "supply must exceed the reference level",
            ));
        }
        if !(self.slew_rate > 0.0) {
            return Err(Error::config("vref.slew_rate", "slew rate must be positive"));
        }
        if !(self.line_regulation.is_finite()
            && self.temp_coeff.is_finite()
            && self.nominal_temp.is_finite())
        {
            return Err(Error::config("vref", "parameters must be finite"));
        }
        Ok(())
    }

    pub fn simulate(&self, stimulus: &Stimulus) -> Result<Waveform> {
        self.validate()?;
        simulate_device(self, stimulus)
    }
}

impl Device for VrefComponentModel {
    fn transfer(&self, v_in: f64, temp: f64) -> f64 {
        let reference =
            self.nominal_output + self.line_regulation * (v_in - self.supply_nominal);
        self.faults.gain_factor() * reference
            + self.faults.offset_shift(self.supply_nominal)
            + self.temp_coeff * (temp - self.nominal_temp)
    }

    fn rails(&self) -> (f64, f64) {
        (0.0, self.supply_nominal)
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
