//! Point-anomaly injection into waveforms and component faults into models.

use std::io::Write;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::waveforms::{
    FaultState, OpampModel, SignalKind, VrefBlockSignals, VrefComponentModel, VrefConfig,
    Waveform,
};
use crate::{Error, Result};

/// Specified operating temperature range, °C.
pub const LEGAL_TEMP_RANGE: (f64, f64) = (-40.0, 125.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnomalyKind {
    /// Randomly placed spikes of `u·max|w|`, `u ~ U[amp_mult_low, amp_mult_high]`.
    PointRandom {
        rate_pct: f64,
        amp_mult_low: f64,
        amp_mult_high: f64,
    },
    /// Raise every sample at or above `threshold_frac·max(w)` by `delta_frac·max(w)`.
    PointPeriodic { threshold_frac: f64, delta_frac: f64 },
}

/// Block of the reference chain receiving an injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    /// Block A, the input.
    InputA,
    /// Block B; injected into the PLL intensity output.
    PllB,
    /// Block C, the Trig Fun output.
    TrigC,
}

impl Location {
    pub fn signal(self) -> SignalKind {
        match self {
            Location::InputA => SignalKind::Input,
            Location::PllB => SignalKind::PllIntensity,
            Location::TrigC => SignalKind::Trig,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalySpec {
    #[serde(flatten)]
    pub kind: AnomalyKind,
    pub location: Location,
    #[serde(default)]
    pub seed: u64,
}

impl AnomalySpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            AnomalyKind::PointRandom {
                rate_pct,
                amp_mult_low,
                amp_mult_high,
            } => {
                check_rate(rate_pct)?;
                check_amplitudes(amp_mult_low, amp_mult_high)
            }
            AnomalyKind::PointPeriodic {
                threshold_frac,
                delta_frac,
            } => check_periodic(threshold_frac, delta_frac),
        }
    }
}

/// Audit trail of an injection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InjectionRecord {
    /// Strictly increasing sample indices.
    pub positions: Vec<usize>,
    pub original_values: Vec<f64>,
    pub injected_values: Vec<f64>,
}

impl InjectionRecord {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Writes `index,original,injected` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["index", "original", "injected"])?;
        for ((i, o), v) in self
            .positions
            .iter()
            .zip(&self.original_values)
            .zip(&self.injected_values)
        {
            writer.write_record([i.to_string(), o.to_string(), v.to_string()])?;
        }
        writer.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn check_rate(rate_pct: f64) -> Result<()> {
    if !(rate_pct > 0.0 && rate_pct <= 100.0) {
        return Err(Error::config(
            "rate_pct",
            format!("must be in (0, 100], got {rate_pct}"),
        ));
    }
    Ok(())
}

fn check_amplitudes(low: f64, high: f64) -> Result<()> {
    if !(low > 0.0 && low <= high && high.is_finite()) {
        return Err(Error::config(
            "amp_mult",
            format!("need 0 < low <= high, got [{low}, {high}]"),
        ));
    }
    Ok(())
}

fn check_periodic(threshold_frac: f64, delta_frac: f64) -> Result<()> {
    if !(threshold_frac > 0.0 && threshold_frac <= 1.0) {
        return Err(Error::config(
            "threshold_frac",
            format!("must be in (0, 1], got {threshold_frac}"),
        ));
    }
    if !(delta_frac >= 0.0 && delta_frac.is_finite()) {
        return Err(Error::config(
            "delta_frac",
            format!("must be non-negative, got {delta_frac}"),
        ));
    }
    Ok(())
}

/// Number of random anomalies for a rate: `round(rate_pct/100·n)` with
/// halves rounded up, never less than one.
pub fn anomaly_count(rate_pct: f64, n: usize) -> usize {
    let exact = rate_pct * n as f64 / 100.0;
    ((exact + 0.5).floor() as usize).max(1)
}

/// Replaces `round(rate_pct/100·N)` uniformly chosen samples (at least one)
/// with sign-preserving spikes of `u·max|w|`, `u ~ U[amp_low, amp_high]`.
pub fn inject_point_random(
    w: &Waveform,
    rate_pct: f64,
    amp_low: f64,
    amp_high: f64,
    seed: u64,
) -> Result<(Waveform, InjectionRecord)> {
    inject_point_random_with_reference(w, w.max_abs(), rate_pct, amp_low, amp_high, seed)
}

/// As [`inject_point_random`], scaling spikes by `reference_max` instead of
/// the waveform's own maximum.
pub fn inject_point_random_with_reference(
    w: &Waveform,
    reference_max: f64,
    rate_pct: f64,
    amp_low: f64,
    amp_high: f64,
    seed: u64,
) -> Result<(Waveform, InjectionRecord)> {
    check_rate(rate_pct)?;
    check_amplitudes(amp_low, amp_high)?;
    if !(reference_max > 0.0) {
        return Err(Error::Injection(
            "cannot scale spikes against an all-zero signal".into(),
        ));
    }
    let n = w.len();
    let count = anomaly_count(rate_pct, n);
    if count >= n {
        return Err(Error::Injection(format!(
            "rate {rate_pct}% selects {count} of {n} samples"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut positions = index::sample(&mut rng, n, count).into_vec();
    positions.sort_unstable();

    let mut samples = w.samples().to_vec();
    let mut original_values = Vec::with_capacity(count);
    let mut injected_values = Vec::with_capacity(count);
    for &p in &positions {
        let u = if amp_low == amp_high {
            amp_low
        } else {
            rng.random_range(amp_low..=amp_high)
        };
        let sign = if samples[p] < 0.0 { -1.0 } else { 1.0 };
        let v = sign * u * reference_max;
        original_values.push(samples[p]);
        injected_values.push(v);
        samples[p] = v;
    }
    Ok((
        w.with_samples(samples)?,
        InjectionRecord {
            positions,
            original_values,
            injected_values,
        },
    ))
}

/// Raises every sample with `w[i] >= threshold_frac·max(w)` by `delta_frac·max(w)`.
pub fn inject_point_periodic(
    w: &Waveform,
    threshold_frac: f64,
    delta_frac: f64,
) -> Result<(Waveform, InjectionRecord)> {
    inject_point_periodic_with_reference(w, w.max(), threshold_frac, delta_frac)
}

/// As [`inject_point_periodic`] with threshold and delta relative to
/// `reference_max` (typically the clean signal's maximum).
pub fn inject_point_periodic_with_reference(
    w: &Waveform,
    reference_max: f64,
    threshold_frac: f64,
    delta_frac: f64,
) -> Result<(Waveform, InjectionRecord)> {
    check_periodic(threshold_frac, delta_frac)?;
    if !(reference_max > 0.0) {
        return Err(Error::Injection(
            "periodic injection needs a positive signal maximum".into(),
        ));
    }
    let threshold = threshold_frac * reference_max;
    let delta = delta_frac * reference_max;
    let mut samples = w.samples().to_vec();
    let mut record = InjectionRecord::default();
    for (i, v) in samples.iter_mut().enumerate() {
        if *v >= threshold {
            record.positions.push(i);
            record.original_values.push(*v);
            *v += delta;
            record.injected_values.push(*v);
        }
    }
    if record.is_empty() {
        return Err(Error::Injection(format!(
            "no sample reaches {threshold_frac} of the maximum"
        )));
    }
    Ok((w.with_samples(samples)?, record))
}

/// Applies each spec to its block, upstream first, re-simulating every block
/// downstream of an injection so the anomaly propagates. Thresholds and spike
/// scales refer to the clean signal at each location.
///
/// Records are returned in the order of `specs`.
pub fn inject_multipoint(
    config: &VrefConfig,
    signals: &VrefBlockSignals,
    specs: &[AnomalySpec],
) -> Result<(VrefBlockSignals, Vec<InjectionRecord>)> {
    if specs.is_empty() {
        return Err(Error::config("anomalies", "at least one injection required"));
    }
    let mut order: Vec<usize> = (0..specs.len()).collect();
    order.sort_by_key(|&i| specs[i].location);
    if order
        .windows(2)
        .any(|p| specs[p[0]].location == specs[p[1]].location)
    {
        return Err(Error::config("anomalies", "duplicate injection location"));
    }
    for s in specs {
        s.validate()?;
    }

    let mut current = signals.clone();
    let mut records = vec![InjectionRecord::default(); specs.len()];
    for i in order {
        let spec = &specs[i];
        let kind = spec.location.signal();
        let clean = signals.signal(kind);
        let target = current.signal(kind);
        let (injected, record) = match spec.kind {
            AnomalyKind::PointRandom {
                rate_pct,
                amp_mult_low,
                amp_mult_high,
            } => inject_point_random_with_reference(
                target,
                clean.max_abs(),
                rate_pct,
                amp_mult_low,
                amp_mult_high,
                spec.seed,
            )?,
            AnomalyKind::PointPeriodic {
                threshold_frac,
                delta_frac,
            } => inject_point_periodic_with_reference(
                target,
                clean.max(),
                threshold_frac,
                delta_frac,
            )?,
        };
        records[i] = record;
        current = match spec.location {
            Location::InputA => VrefBlockSignals::from_input(config, injected)?,
            Location::PllB => VrefBlockSignals::from_pll(
                config,
                current.input,
                current.pll_frequency,
                injected,
            )?,
            Location::TrigC => VrefBlockSignals::from_trig(
                config,
                current.input,
                current.pll_frequency,
                current.pll_intensity,
                injected,
            )?,
        };
    }
    Ok((current, records))
}

/// Component-level fault.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentFault {
    /// PFETs and NFETs in triode.
    OmBoth,
    OmPfet,
    OmNfet,
    /// Operation at an out-of-range temperature, °C.
    Parametric { temperature: f64 },
    Open,
    Short,
}

/// A behavioral model that can carry component faults.
pub trait FaultTarget: Clone {
    fn fault_state_mut(&mut self) -> &mut FaultState;
}

impl FaultTarget for OpampModel {
    fn fault_state_mut(&mut self) -> &mut FaultState {
        &mut self.faults
    }
}

impl FaultTarget for VrefComponentModel {
    fn fault_state_mut(&mut self) -> &mut FaultState {
        &mut self.faults
    }
}

/// Returns `model` with `fault` applied. Faults are recorded as flags over
/// the pristine parameters, so re-applying a fault is a no-op.
pub fn apply_component_fault<M: FaultTarget>(model: &M, fault: ComponentFault) -> Result<M> {
    let mut out = model.clone();
    let state = out.fault_state_mut();
    match fault {
        ComponentFault::OmBoth => {
            state.om_pfet = true;
            state.om_nfet = true;
        }
        ComponentFault::OmPfet => state.om_pfet = true,
        ComponentFault::OmNfet => state.om_nfet = true,
        ComponentFault::Parametric { temperature } => {
            let (lo, hi) = LEGAL_TEMP_RANGE;
            if !temperature.is_finite() || (lo..=hi).contains(&temperature) {
                return Err(Error::Fault(format!(
                    "{temperature} °C is inside the specified range [{lo}, {hi}]"
                )));
            }
            state.temperature = Some(temperature);
        }
        ComponentFault::Open => state.open = true,
        ComponentFault::Short => state.short = true,
    }
    Ok(out)
}
