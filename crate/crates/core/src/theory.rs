//! Closed-form BER prediction for the discrete-time receiver.
//!
//! Under spatially white noise of variance σ_n², the beamformer output noise
//! has variance `σ_n² / ‖h‖²`. The Riemann-sum decision statistic of symbol
//! `k` is then Gaussian with
//!
//! ```text
//! mean  = P₀ · Σ_m sin²(ω t_m) / f_s
//! var   = (σ_n² / ‖h‖²) · Σ_m sin²(ω t_m) / f_s²
//! ```
//!
//! over the samples of the window, so `P_e,k = Q(mean / std)`.

use serde::{Deserialize, Serialize};

use crate::array::SpatialFingerprint;
use crate::modem::BpskConfig;
use crate::stats::q_function;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerPrediction {
    /// `E_b/N₀` defined so that the symbol error rate is `Q(√(2 E_b/N₀))`,
    /// averaged in the linear domain over symbol positions.
    pub eb_n0_db: f64,
    pub ber: f64,
}

fn window_energy(config: &BpskConfig, k: usize) -> f64 {
    let sps = config.samples_per_symbol();
    let w = config.angular_frequency();
    (k * sps..(k + 1) * sps)
        .map(|m| (w * m as f64 / config.sample_rate).sin().powi(2))
        .sum()
}

/// Predicted BER for an ideal-switching link, averaged over the first
/// `symbols` symbol windows (all windows are identical for integer γ).
pub fn predicted_ber(
    h: &SpatialFingerprint,
    p0: f64,
    sigma: f64,
    config: &BpskConfig,
    symbols: usize,
) -> Result<BerPrediction> {
    config.validate()?;
    let n2 = h.require_nonzero()?;
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::config(
            "noise.sigma",
            "must be positive for a BER prediction",
        ));
    }
    let symbols = symbols.max(1);
    let fused_sigma = sigma / n2.sqrt();
    let (mut ber, mut snr) = (0.0, 0.0);
    for k in 0..symbols {
        let e = window_energy(config, k);
        let ratio = p0.abs() * e.sqrt() / fused_sigma;
        ber += q_function(ratio);
        snr += ratio * ratio / 2.0;
    }
    Ok(BerPrediction {
        eb_n0_db: 10.0 * (snr / symbols as f64).log10(),
        ber: ber / symbols as f64,
    })
}
