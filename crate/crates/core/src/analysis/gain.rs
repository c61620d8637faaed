use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{noise_channel, to_db, NoiseModel, SpatialFingerprint};
use crate::beamformer::{Accumulator, BeamformerWeights};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalGain {
    pub input_snr_db: f64,
    pub output_snr_db: f64,
    pub gain_db: f64,
    pub trials: usize,
    pub samples: usize,
}

/// Monte-Carlo array gain: measured noise power at the sensors and at the
/// beamformer output, pooled over `trials` independent records.
pub fn empirical_array_gain(
    h: &SpatialFingerprint,
    p0: f64,
    noise: &NoiseModel,
    sample_rate: f64,
    trials: usize,
    samples: usize,
) -> Result<EmpiricalGain> {
    noise.validate()?;
    if noise.sigma.is_nan() || noise.sigma <= 0.0 {
        return Err(Error::config(
            "noise.sigma",
            "must be positive to measure a gain",
        ));
    }
    if trials == 0 || samples == 0 {
        return Err(Error::config(
            "trials",
            "trials and samples must be positive",
        ));
    }
    let weights = BeamformerWeights::matched(h)?;
    let (input_energy, output_energy) = (0..trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<(f64, f64)> {
            let mut acc = Accumulator::new(&weights, samples);
            let mut energy = 0.0;
            for i in 0..h.len() {
                let n = noise_channel(noise, i, trial, samples, sample_rate);
                energy += n.iter().map(|v| v * v).sum::<f64>();
                acc.add_channel(i, &n)?;
            }
            let out = acc.finish().iter().map(|v| v * v).sum::<f64>();
            Ok((energy, out))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));

    let total = (trials * samples) as f64;
    let signal = p0 * p0 / 2.0;
    let input =
        signal * h.norm_squared() / h.len() as f64 / (input_energy / (total * h.len() as f64));
    let output = signal / (output_energy / total);
    Ok(EmpiricalGain {
        input_snr_db: to_db(input),
        output_snr_db: to_db(output),
        gain_db: to_db(output / input),
        trials,
        samples,
    })
}
