use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_link, LinkConfig, NoiseLevel};
use crate::stats::{wilson_interval, Z_95};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Mean per-sensor input SNR, dB.
    Snr,
    /// Source distance from the array centroid along the base direction, m.
    /// σ_n is held at the base configuration's value.
    Distance,
    /// Bit rate, bits/s.
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
}

fn point_config(base: &LinkConfig, variable: SweepVariable, value: f64) -> Result<LinkConfig> {
    let mut cfg = base.clone();
    match variable {
        SweepVariable::Snr => cfg.noise.level = NoiseLevel::TargetSnrDb(value),
        SweepVariable::Rate => cfg.bpsk.bit_rate = value,
        SweepVariable::Distance => {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config("distance", "must be positive and finite"));
            }
            cfg = base.with_fixed_sigma()?;
            let centre = cfg.array.build()?.centroid();
            let direction = (base.source.position - centre)
                .normalized()
                .ok_or_else(|| {
                    Error::config("source.position", "coincides with the array centroid")
                })?;
            cfg.source.position = centre + direction * value;
        }
    }
    Ok(cfg)
}

/// BER at each sweep value, aggregated over `trials` independent runs.
///
/// Trial `t` uses trial index `t` with the base seed, so every point sees the
/// same bit and noise streams and the result does not depend on scheduling.
pub fn ber_sweep(
    base: &LinkConfig,
    variable: SweepVariable,
    values: &[f64],
    trials: usize,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::config("values", "need at least one sweep value"));
    }
    if trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    values
        .iter()
        .map(|&value| {
            let cfg = point_config(base, variable, value)?;
            cfg.validate()?;
            let counts = (0..trials as u64)
                .into_par_iter()
                .map(|trial| {
                    let c = LinkConfig {
                        trial,
                        ..cfg.clone()
                    };
                    run_link(&c).map(|r| (r.bit_errors as u64, r.bit_count as u64))
                })
                .collect::<Result<Vec<_>>>()?;
            let (errors, bits) = counts
                .into_iter()
                .fold((0, 0), |(e, n), (a, b)| (e + a, n + b));
            let ci = wilson_interval(errors, bits, Z_95);
            Ok(SweepRow {
                value,
                bit_errors: errors,
                bits,
                ber: errors as f64 / bits as f64,
                ci_low: ci.low,
                ci_high: ci.high,
                trials,
            })
        })
        .collect()
}
