//! BPSK drive generation and integrate-and-dump coherent detection.
//!
//! Bits map to polarities `d_k = ±1` and modulate a carrier whose phase is
//! global (`t` is absolute time), so a polarity change is an instantaneous
//! phase inversion. Detection correlates each symbol window with a local
//! reference `sin(ω_c t + φ)` using a plain Riemann sum at the sample rate.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Minimum ratio of sample rate to carrier frequency.
pub const MIN_SAMPLES_PER_CYCLE: f64 = 10.0;

const INTEGER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BpskConfig {
    /// bits/s
    pub bit_rate: f64,
    /// Hz
    pub carrier_frequency: f64,
    /// samples/s
    pub sample_rate: f64,
    /// Peak amplitude of the modulated waveform.
    pub amplitude: f64,
}

impl Default for BpskConfig {
    fn default() -> Self {
        BpskConfig {
            bit_rate: 20.0,
            carrier_frequency: 40.0,
            sample_rate: 2000.0,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsrClass {
    /// Whole number of carrier cycles per symbol (γ ≥ 1).
    Reliable,
    /// At least one cycle per symbol but not a whole number.
    Fractional,
    /// Less than one carrier cycle per symbol.
    Infeasible,
}

/// Cycle-per-symbol ratio `γ = f_c / R_b` and its classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleRatio {
    pub gamma: f64,
    pub class: CsrClass,
}

impl BpskConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.bit_rate) {
            return Err(Error::config(
                "bpsk.bit_rate",
                "must be positive and finite",
            ));
        }
        if !positive(self.carrier_frequency) {
            return Err(Error::config(
                "bpsk.carrier_frequency",
                "must be positive and finite",
            ));
        }
        if !positive(self.sample_rate) {
            return Err(Error::config(
                "bpsk.sample_rate",
                "must be positive and finite",
            ));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::config("bpsk.amplitude", "must be finite"));
        }
        if self.sample_rate < MIN_SAMPLES_PER_CYCLE * self.carrier_frequency {
            return Err(Error::config(
                "bpsk.sample_rate",
                format!(
                    "must be at least {MIN_SAMPLES_PER_CYCLE} x carrier_frequency ({} Hz)",
                    MIN_SAMPLES_PER_CYCLE * self.carrier_frequency
                ),
            ));
        }
        let sps = self.sample_rate / self.bit_rate;
        if sps < 1.0 - INTEGER_TOLERANCE || (sps - sps.round()).abs() > INTEGER_TOLERANCE * sps {
            return Err(Error::config(
                "bpsk.bit_rate",
                format!("sample_rate / bit_rate must be a positive integer (got {sps})"),
            ));
        }
        Ok(())
    }

    /// Samples per symbol `f_s / R_b`. Assumes a validated config.
    pub fn samples_per_symbol(&self) -> usize {
        (self.sample_rate / self.bit_rate).round() as usize
    }

    pub fn symbol_period(&self) -> f64 {
        1.0 / self.bit_rate
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * self.carrier_frequency
    }

    pub fn cycle_per_symbol(&self) -> CycleRatio {
        let gamma = self.carrier_frequency / self.bit_rate;
        let class = if gamma < 1.0 {
            CsrClass::Infeasible
        } else if (gamma - gamma.round()).abs() <= INTEGER_TOLERANCE * gamma {
            CsrClass::Reliable
        } else {
            CsrClass::Fractional
        };
        CycleRatio { gamma, class }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }
}

/// Bit 1 → +1, bit 0 → −1.
pub fn map_bits(bits: &[bool]) -> Vec<i8> {
    bits.iter().map(|&b| if b { 1 } else { -1 }).collect()
}

/// Sampled BPSK waveform `amplitude · d_k · sin(ω_c m / f_s)`.
pub fn modulate(bits: &[bool], config: &BpskConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let sps = config.samples_per_symbol();
    let w = config.angular_frequency();
    let fs = config.sample_rate;
    let mut out = Vec::with_capacity(bits.len() * sps);
    for (k, d) in map_bits(bits).into_iter().enumerate() {
        let level = config.amplitude * f64::from(d);
        out.extend((k * sps..(k + 1) * sps).map(|m| level * (w * m as f64 / fs).sin()));
    }
    Ok(out)
}

/// Second-order low-pass model of a band-limited actuator.
///
/// Continuous prototype `ω_n² / (s² + 2ζω_n s + ω_n²)`, discretised with the
/// bilinear transform pre-warped at `ω_n`. Unity gain at DC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorFilter {
    /// Hz
    pub natural_frequency: f64,
    /// Damping ratio ζ.
    pub damping: f64,
}

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl ActuatorFilter {
    pub fn new(natural_frequency: f64, damping: f64) -> Result<Self> {
        let f = ActuatorFilter {
            natural_frequency,
            damping,
        };
        if !(natural_frequency > 0.0 && natural_frequency.is_finite()) {
            return Err(Error::config(
                "actuator.natural_frequency",
                "must be positive and finite",
            ));
        }
        if !(damping > 0.0 && damping.is_finite()) {
            return Err(Error::config(
                "actuator.damping",
                "must be positive and finite",
            ));
        }
        Ok(f)
    }

    fn biquad(&self, sample_rate: f64) -> Result<Biquad> {
        ActuatorFilter::new(self.natural_frequency, self.damping)?;
        if self.natural_frequency >= sample_rate / 2.0 {
            return Err(Error::config(
                "actuator.natural_frequency",
                "must be below the Nyquist frequency",
            ));
        }
        let wn = 2.0 * PI * self.natural_frequency;
        let k = wn / (wn / (2.0 * sample_rate)).tan();
        let (k2, wn2, zk) = (k * k, wn * wn, 2.0 * self.damping * wn * k);
        let a0 = k2 + zk + wn2;
        Ok(Biquad {
            b: [wn2 / a0, 2.0 * wn2 / a0, wn2 / a0],
            a: [(2.0 * wn2 - 2.0 * k2) / a0, (k2 - zk + wn2) / a0],
        })
    }

    /// Filters `input` from rest (zero initial state).
    pub fn apply(&self, input: &[f64], sample_rate: f64) -> Result<Vec<f64>> {
        let Biquad { b, a } = self.biquad(sample_rate)?;
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        Ok(input
            .iter()
            .map(|&x0| {
                let y0 = b[0] * x0 + b[1] * x1 + b[2] * x2 - a[0] * y1 - a[1] * y2;
                (x2, x1, y2, y1) = (x1, x0, y1, y0);
                y0
            })
            .collect())
    }

    /// Steady-state complex gain of the discrete filter at `frequency`.
    pub fn response(&self, frequency: f64, sample_rate: f64) -> Result<Complex64> {
        let Biquad { b, a } = self.biquad(sample_rate)?;
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * frequency / sample_rate);
        let z2 = z1 * z1;
        Ok((b[0] + z1 * b[1] + z2 * b[2]) / (1.0 + z1 * a[0] + z2 * a[1]))
    }
}

/// Local carrier `sin(ω_c t + phase)` applied to `channel_sign · y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceCarrier {
    pub phase: f64,
    pub channel_sign: f64,
}

impl Default for ReferenceCarrier {
    fn default() -> Self {
        ReferenceCarrier {
            phase: 0.0,
            channel_sign: 1.0,
        }
    }
}

impl ReferenceCarrier {
    pub fn value(&self, omega: f64, t: f64) -> f64 {
        self.channel_sign * (omega * t + self.phase).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    /// Integrated correlation `D_k`.
    pub metric: f64,
    pub bit: bool,
    /// End of the integration window, s.
    pub instant: f64,
}

/// Integrate-and-dump against `sin(ω_c t)` with no sign correction.
pub fn coherent_demodulate(signal: &[f64], config: &BpskConfig) -> Result<Vec<DecisionRecord>> {
    coherent_demodulate_with(signal, config, &ReferenceCarrier::default())
}

pub fn coherent_demodulate_with(
    signal: &[f64],
    config: &BpskConfig,
    reference: &ReferenceCarrier,
) -> Result<Vec<DecisionRecord>> {
    config.validate()?;
    let sps = config.samples_per_symbol();
    if !signal.len().is_multiple_of(sps) {
        return Err(Error::LengthMismatch(format!(
            "{} samples is not a whole number of {sps}-sample symbols",
            signal.len()
        )));
    }
    let fs = config.sample_rate;
    let dt = 1.0 / fs;
    let w = config.angular_frequency();
    Ok(signal
        .chunks_exact(sps)
        .enumerate()
        .map(|(k, window)| {
            let start = k * sps;
            let metric = window
                .iter()
                .enumerate()
                .map(|(j, &y)| y * reference.value(w, (start + j) as f64 / fs) * dt)
                .sum::<f64>();
            DecisionRecord {
                metric,
                bit: metric > 0.0,
                instant: (start + sps) as f64 / fs,
            }
        })
        .collect())
}

pub fn decoded_bits(records: &[DecisionRecord]) -> Vec<bool> {
    records.iter().map(|r| r.bit).collect()
}
