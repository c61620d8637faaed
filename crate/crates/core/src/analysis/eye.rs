use serde::{Deserialize, Serialize};

use crate::modem::{BpskConfig, ReferenceCarrier};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeDiagramData {
    /// Baseband traces, each two symbols (`2 · f_s/R_b` samples) long and
    /// starting on a symbol boundary.
    pub traces: Vec<Vec<f64>>,
    /// Transmitted bit of the first symbol of each trace.
    pub trace_bits: Vec<bool>,
    /// Sample offsets (within a trace) of the decision instants.
    pub decision_offsets: Vec<usize>,
    /// Ideal baseband level, i.e. the signal amplitude.
    pub level: f64,
    /// Smallest class-1 value minus largest class-0 value at the decision
    /// instant. `None` when only one class is present.
    pub eye_height: Option<f64>,
    /// `eye_height / (2 · level)`; 1 for a noiseless rectangular eye.
    pub normalized_eye_height: Option<f64>,
}

/// Baseband recovery: `2 · MA_L(sign · y · sin(ω_c t + φ))` with a trailing
/// moving average over `L` = one carrier period.
fn baseband(signal: &[f64], config: &BpskConfig, reference: &ReferenceCarrier) -> Vec<f64> {
    let fs = config.sample_rate;
    let w = config.angular_frequency();
    let period = (fs / config.carrier_frequency).round().max(1.0) as usize;
    let mixed: Vec<f64> = signal
        .iter()
        .enumerate()
        .map(|(m, y)| y * reference.value(w, m as f64 / fs))
        .collect();
    let mut out = Vec::with_capacity(mixed.len());
    let mut acc = 0.0;
    for m in 0..mixed.len() {
        acc += mixed[m];
        if m >= period {
            acc -= mixed[m - period];
        }
        out.push(2.0 * acc / period as f64);
    }
    out
}

/// Offset within a symbol whose trailing carrier-period window is centred
/// in the symbol (or the last sample when the window exceeds a symbol).
fn decision_offset(samples_per_symbol: usize, period: usize) -> usize {
    if period <= samples_per_symbol {
        (samples_per_symbol + period) / 2 - 1
    } else {
        samples_per_symbol - 1
    }
}

/// Folds the beamformed signal into 2-symbol baseband traces and measures
/// the vertical eye opening against the known transmitted bits.
pub fn eye_diagram(
    signal: &[f64],
    bits: &[bool],
    config: &BpskConfig,
    reference: &ReferenceCarrier,
    amplitude: f64,
    trace_count: usize,
) -> Result<EyeDiagramData> {
    config.validate()?;
    let sps = config.samples_per_symbol();
    if !signal.len().is_multiple_of(sps) || signal.len() / sps != bits.len() {
        return Err(Error::LengthMismatch(format!(
            "{} samples do not hold exactly {} symbols of {sps} samples",
            signal.len(),
            bits.len()
        )));
    }
    if bits.len() < 3 {
        return Err(Error::LengthMismatch(
            "eye diagram needs at least 3 symbols".into(),
        ));
    }
    let base = baseband(signal, config, reference);
    let period = (config.sample_rate / config.carrier_frequency)
        .round()
        .max(1.0) as usize;
    let offset = decision_offset(sps, period);
    let count = trace_count.min(bits.len() - 1);

    let traces: Vec<Vec<f64>> = (0..count)
        .map(|k| base[k * sps..(k + 2) * sps].to_vec())
        .collect();
    let trace_bits: Vec<bool> = bits[..count].to_vec();

    let (mut low_one, mut high_zero) = (f64::INFINITY, f64::NEG_INFINITY);
    for (t, &b) in traces.iter().zip(&trace_bits) {
        let v = t[offset];
        if b {
            low_one = low_one.min(v);
        } else {
            high_zero = high_zero.max(v);
        }
    }
    let eye_height = (low_one.is_finite() && high_zero.is_finite()).then_some(low_one - high_zero);
    let normalized_eye_height = eye_height.map(|h| h / (2.0 * amplitude.abs()));
    Ok(EyeDiagramData {
        traces,
        trace_bits,
        decision_offsets: vec![offset, offset + sps],
        level: amplitude,
        eye_height,
        normalized_eye_height,
    })
}
