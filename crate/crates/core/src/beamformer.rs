//! Spatial matched filter: `y_Σ(t) = hᵀ y(t) / ‖h‖²`.
//!
//! With `w = h` every sensor's contribution is multiplied by its own
//! fingerprint sign, so the positive and negative dipole lobes add
//! coherently. The `‖h‖²` normalisation restores the source waveform
//! amplitude exactly in the noiseless case.

use serde::{Deserialize, Serialize};

use crate::array::{to_db, MultiChannelSignal, SpatialFingerprint};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformerWeights {
    pub weights: Vec<f64>,
    pub norm_squared: f64,
}

impl BeamformerWeights {
    pub fn matched(h: &SpatialFingerprint) -> Result<Self> {
        let norm_squared = h.require_nonzero()?;
        Ok(BeamformerWeights {
            weights: h.values.clone(),
            norm_squared,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Fused single-channel signal.
pub fn beamform(y: &MultiChannelSignal, h: &SpatialFingerprint) -> Result<Vec<f64>> {
    let w = BeamformerWeights::matched(h)?;
    if y.channel_count() != w.len() {
        return Err(Error::ChannelCountMismatch {
            expected: w.len(),
            actual: y.channel_count(),
        });
    }
    let mut acc = Accumulator::new(&w, y.len());
    for (i, ch) in y.channels.iter().enumerate() {
        acc.add_channel(i, ch)?;
    }
    Ok(acc.finish())
}

/// Channel-at-a-time beamforming, for records too large to hold as a
/// full `N × T` matrix. Channels must be added in index order to reproduce
/// [`beamform`] bit for bit.
#[derive(Debug, Clone)]
pub struct Accumulator<'a> {
    weights: &'a BeamformerWeights,
    sum: Vec<f64>,
    next: usize,
}

impl<'a> Accumulator<'a> {
    pub fn new(weights: &'a BeamformerWeights, len: usize) -> Self {
        Accumulator {
            weights,
            sum: vec![0.0; len],
            next: 0,
        }
    }

    pub fn add_channel(&mut self, index: usize, samples: &[f64]) -> Result<()> {
        if index != self.next || index >= self.weights.len() {
            return Err(Error::ChannelCountMismatch {
                expected: self.next,
                actual: index,
            });
        }
        if samples.len() != self.sum.len() {
            return Err(Error::LengthMismatch(format!(
                "channel {index} has {} samples, expected {}",
                samples.len(),
                self.sum.len()
            )));
        }
        let w = self.weights.weights[index];
        for (s, v) in self.sum.iter_mut().zip(samples) {
            *s += w * v;
        }
        self.next += 1;
        Ok(())
    }

    pub fn finish(self) -> Vec<f64> {
        let n2 = self.weights.norm_squared;
        self.sum.into_iter().map(|s| s / n2).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGainReport {
    pub output_snr_db: f64,
    pub mean_input_snr_db: f64,
    pub gain_db: f64,
}

/// Theoretical SNR before and after matched beamforming under spatially
/// white noise. The gain is `10·log₁₀ N` for any non-degenerate `h`.
pub fn array_gain_report(h: &SpatialFingerprint, sigma: f64, p0: f64) -> Result<ArrayGainReport> {
    let n2 = h.require_nonzero()?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::config(
            "noise.sigma",
            "must be positive to define an SNR",
        ));
    }
    let signal = p0 * p0 / 2.0;
    let output = signal * n2 / (sigma * sigma);
    let mean_input = signal * (n2 / h.len() as f64) / (sigma * sigma);
    let (output_snr_db, mean_input_snr_db) = (to_db(output), to_db(mean_input));
    Ok(ArrayGainReport {
        output_snr_db,
        mean_input_snr_db,
        gain_db: to_db(output / mean_input),
    })
}
