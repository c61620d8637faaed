//! End-to-end link simulation and the derived analyses.

mod eye;
mod gain;
mod link;
mod spatial;
mod sweep;

pub use eye::{eye_diagram, EyeDiagramData};
pub use gain::{empirical_array_gain, EmpiricalGain};
pub use link::{run_link, simulate_link, LinkReport, LinkRun, LinkTiming};
pub use spatial::{
    attenuation_profile, sensitivity_at, sensitivity_field, AttenuationProfile, AttenuationStatus,
    SensitivityGrid,
};
pub use sweep::{ber_sweep, SweepRow, SweepVariable};

use serde::{Deserialize, Serialize};

use crate::array::{
    calibrate_noise_for_snr, steering_vector, DualLineLayout, NoiseKind, NoiseModel, SensorArray,
};
use crate::modem::{ActuatorFilter, BpskConfig};
use crate::physics::{source_strength_amplitude, DipoleSource, FluidMedium};
use crate::{Error, Result, Vec3};

/// Receiver geometry: either the parametric dual-line layout or explicit positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayConfig {
    DualLine(DualLineLayout),
    Positions(SensorArray),
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig::DualLine(DualLineLayout::default())
    }
}

impl ArrayConfig {
    pub fn build(&self) -> Result<SensorArray> {
        match self {
            ArrayConfig::DualLine(layout) => layout.build(),
            ArrayConfig::Positions(array) => {
                array.validate()?;
                Ok(array.clone())
            }
        }
    }
}

/// How strong the sensor noise is: an absolute σ_n or a mean per-sensor SNR target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    /// Pa
    Sigma(f64),
    TargetSnrDb(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    #[serde(default)]
    pub kind: NoiseKind,
    pub level: NoiseLevel,
    /// Hz, only used by the Kolmogorov spectrum.
    #[serde(default = "default_f_low")]
    pub f_low: f64,
}

fn default_f_low() -> f64 {
    1.0
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            kind: NoiseKind::White,
            level: NoiseLevel::TargetSnrDb(-5.0),
            f_low: default_f_low(),
        }
    }
}

fn default_channel_sign() -> f64 {
    -1.0
}

/// Everything needed for one deterministic end-to-end run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    pub medium: FluidMedium,
    pub source: DipoleSource,
    pub array: ArrayConfig,
    /// Timing; `amplitude` is ignored because the drive is normalised.
    pub bpsk: BpskConfig,
    pub noise: NoiseSpec,
    pub bit_count: usize,
    pub seed: u64,
    /// Monte-Carlo trial index; selects independent bit and noise streams.
    pub trial: u64,
    pub actuator: Option<ActuatorFilter>,
    /// Error added to the true source position when computing the
    /// receiver's steering vector, m.
    pub steering_offset: Vec3,
    /// Known sign of the channel, removed before integration.
    #[serde(default = "default_channel_sign")]
    pub channel_sign: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            medium: FluidMedium::default(),
            source: DipoleSource::default(),
            array: ArrayConfig::default(),
            bpsk: BpskConfig::default(),
            noise: NoiseSpec::default(),
            bit_count: 1000,
            seed: 0,
            trial: 0,
            actuator: None,
            steering_offset: Vec3::ZERO,
            channel_sign: default_channel_sign(),
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        self.source.validate()?;
        self.bpsk.validate()?;
        if self.bit_count == 0 {
            return Err(Error::config("bit_count", "must be at least 1"));
        }
        if self.source.carrier_frequency != self.bpsk.carrier_frequency {
            return Err(Error::config(
                "bpsk.carrier_frequency",
                format!(
                    "must equal source.carrier_frequency ({} Hz)",
                    self.source.carrier_frequency
                ),
            ));
        }
        match self.noise.level {
            NoiseLevel::Sigma(s) if !(s >= 0.0 && s.is_finite()) => {
                return Err(Error::config(
                    "noise.level.sigma",
                    "must be non-negative and finite",
                ))
            }
            NoiseLevel::TargetSnrDb(db) if !db.is_finite() => {
                return Err(Error::config("noise.level.target_snr_db", "must be finite"))
            }
            _ => {}
        }
        if !(self.noise.f_low > 0.0 && self.noise.f_low.is_finite()) {
            return Err(Error::config("noise.f_low", "must be positive and finite"));
        }
        if let Some(a) = &self.actuator {
            ActuatorFilter::new(a.natural_frequency, a.damping)?;
            if a.natural_frequency >= self.bpsk.sample_rate / 2.0 {
                return Err(Error::config(
                    "actuator.natural_frequency",
                    "must be below the Nyquist frequency",
                ));
            }
        }
        if !self.steering_offset.is_finite() {
            return Err(Error::config("steering_offset", "must be finite"));
        }
        if !(self.channel_sign == 1.0 || self.channel_sign == -1.0) {
            return Err(Error::config("channel_sign", "must be +1 or -1"));
        }
        self.array.build()?;
        Ok(())
    }

    /// Dipole strength `P₀` for this configuration.
    pub fn source_strength(&self) -> f64 {
        source_strength_amplitude(&self.medium, &self.source)
    }

    /// Absolute noise standard deviation, calibrating against the true
    /// fingerprint when an SNR target is configured.
    pub fn resolve_sigma(&self) -> Result<f64> {
        match self.noise.level {
            NoiseLevel::Sigma(s) => Ok(s),
            NoiseLevel::TargetSnrDb(db) => {
                let h = steering_vector(&self.array.build()?, &self.source)?;
                calibrate_noise_for_snr(&h, self.source_strength(), db)
            }
        }
    }

    /// The concrete noise model after σ_n has been resolved.
    pub fn noise_model(&self) -> Result<NoiseModel> {
        Ok(NoiseModel {
            kind: self.noise.kind,
            sigma: self.resolve_sigma()?,
            f_low: self.noise.f_low,
            seed: self.seed,
        })
    }

    /// Copy with σ_n fixed at its currently resolved value.
    pub fn with_fixed_sigma(&self) -> Result<LinkConfig> {
        let mut c = self.clone();
        c.noise.level = NoiseLevel::Sigma(self.resolve_sigma()?);
        Ok(c)
    }
}
