//! k-stage non-inverting amplifiers built by replicating one opamp model.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::device::{FaultState, Stimulus};
use super::opamp::{simulate_opamp, OpampModel};
use super::Waveform;
use crate::inject::{apply_component_fault, ComponentFault};
use crate::{Error, Result};

/// One non-inverting stage: an opamp with feedback setting `closed_loop_gain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplifierStage {
    pub opamp: OpampModel,
    pub closed_loop_gain: f64,
}

impl AmplifierStage {
    /// Single-opamp model equivalent to this stage.
    ///
    /// With finite open-loop gain `A` the closed-loop gain is `G·A/(A + G)`;
    /// the input-referred offset is amplified by the same factor.
    pub fn effective_model(&self) -> OpampModel {
        let a = self.opamp.effective_gain();
        let g = self.closed_loop_gain;
        OpampModel {
            open_loop_gain: g * a / (a + g),
            offset: self.opamp.effective_offset(),
            faults: FaultState {
                open: self.opamp.faults.open,
                temperature: self.opamp.faults.temperature,
                ..FaultState::default()
            },
            ..self.opamp.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KStageAmplifier {
    pub stages: Vec<AmplifierStage>,
    pub anomalous_stages: BTreeSet<usize>,
}

impl KStageAmplifier {
    pub fn k(&self) -> usize {
        self.stages.len()
    }

    pub fn is_anomalous(&self) -> bool {
        !self.anomalous_stages.is_empty()
    }
}

/// Builds a k-stage amplifier from `base`. Stages listed in
/// `anomalous_stages` carry `base` transformed by `anomaly`; with no anomaly
/// every stage is `base`.
pub fn build_kstage(
    base: &OpampModel,
    k: usize,
    gains: &[f64],
    anomalous_stages: &BTreeSet<usize>,
    anomaly: Option<ComponentFault>,
) -> Result<KStageAmplifier> {
    base.validate()?;
    if k == 0 {
        return Err(Error::config("k", "at least one stage required"));
    }
    if gains.len() != k {
        return Err(Error::config(
            "gains",
            format!("expected {k} stage gains, got {}", gains.len()),
        ));
    }
    if let Some(&g) = gains.iter().find(|g| !(g.is_finite() && **g >= 1.0)) {
        return Err(Error::config(
            "gains",
            format!("non-inverting gain must be >= 1, got {g}"),
        ));
    }
    if let Some(&index) = anomalous_stages.iter().find(|&&i| i >= k) {
        return Err(Error::StageIndex { index, stages: k });
    }
    let faulty = anomaly
        .map(|f| apply_component_fault(base, f))
        .transpose()?;
    let stages = gains
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let opamp = match (&faulty, anomalous_stages.contains(&i)) {
                (Some(m), true) => m.clone(),
                _ => base.clone(),
            };
            AmplifierStage {
                opamp,
                closed_loop_gain: g,
            }
        })
        .collect();
    Ok(KStageAmplifier {
        stages,
        anomalous_stages: anomalous_stages.clone(),
    })
}

/// Transient response of the cascade: each stage drives the next, each
/// clipped at its own rails and slew-limited.
pub fn simulate_kstage(amp: &KStageAmplifier, input: &Waveform) -> Result<Waveform> {
    let mut signal = input.clone();
    for stage in &amp.stages {
        signal = simulate_opamp(&stage.effective_model(), &Stimulus::Transient(signal))?;
    }
    Ok(signal.renamed("kstage_out"))
}
