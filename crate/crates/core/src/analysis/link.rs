use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LinkConfig;
use crate::array::{noise_channel, per_sensor_snr, source_signal, steering_vector, to_db};
use crate::beamformer::{array_gain_report, Accumulator, BeamformerWeights};
use crate::modem::{
    coherent_demodulate_with, modulate, CycleRatio, DecisionRecord, ReferenceCarrier,
};
use crate::rng::{substream, Stream};
use crate::theory::predicted_ber;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkTiming {
    pub sample_rate: f64,
    pub samples_per_symbol: usize,
    pub symbol_period: f64,
    pub duration: f64,
    /// Phase of the local carrier relative to `sin(ω_c t)`, rad.
    pub carrier_phase: f64,
    pub channel_sign: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    /// Bits as a string of `0`/`1`.
    pub transmitted_bits: String,
    pub decoded_bits: String,
    pub bit_count: usize,
    pub bit_errors: usize,
    pub ber: f64,
    pub cycle_per_symbol: CycleRatio,
    /// Pa·m²
    pub source_strength: f64,
    /// Pa
    pub sigma_n: f64,
    pub mean_input_snr_db: Option<f64>,
    pub output_snr_db: Option<f64>,
    pub array_gain_db: Option<f64>,
    /// Measured from this realisation's noise.
    pub empirical_input_snr_db: Option<f64>,
    pub empirical_output_snr_db: Option<f64>,
    pub empirical_array_gain_db: Option<f64>,
    /// Only for white noise with ideal switching and a matched steering vector.
    pub predicted_ber: Option<f64>,
    pub predicted_eb_n0_db: Option<f64>,
    pub decision_metrics: Vec<f64>,
    pub timing: LinkTiming,
}

/// Report plus the intermediate waveforms of one run.
#[derive(Debug, Clone)]
pub struct LinkRun {
    pub report: LinkReport,
    pub bits: Vec<bool>,
    /// Unit-amplitude transmitter motion after the optional actuator filter.
    pub drive: Vec<f64>,
    /// Physical source strength `s(t)`, Pa·m².
    pub source_signal: Vec<f64>,
    /// Beamformer output `y_Σ(t)` before sign correction.
    pub fused: Vec<f64>,
    pub decisions: Vec<DecisionRecord>,
    pub reference: ReferenceCarrier,
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn run_link(config: &LinkConfig) -> Result<LinkReport> {
    simulate_link(config).map(|run| run.report)
}

/// modulate → actuator (optional) → receive → beamform → sign-correct → demodulate.
///
/// Reception and beamforming are fused channel by channel so the `N × T`
/// record is never materialised; the result is identical to
/// [`crate::array::receive`] followed by [`crate::beamformer::beamform`].
pub fn simulate_link(config: &LinkConfig) -> Result<LinkRun> {
    config.validate()?;
    let array = config.array.build()?;
    let source = &config.source;
    let h = steering_vector(&array, source)?;
    let p0 = config.source_strength();
    let noise = config.noise_model()?;
    let timing = config.bpsk;
    let fs = timing.sample_rate;

    let mut rng = substream(config.seed, config.trial, Stream::Bits);
    let bits: Vec<bool> = (0..config.bit_count).map(|_| rng.random()).collect();

    let mut drive = modulate(&bits, &timing.with_amplitude(1.0))?;
    let mut carrier_phase = 0.0;
    if let Some(filter) = &config.actuator {
        drive = filter.apply(&drive, fs)?;
        // the local carrier is locked to the received carrier, which the
        // actuator has delayed by arg H(f_c)
        carrier_phase = filter.response(timing.carrier_frequency, fs)?.arg();
    }
    let s = source_signal(p0, &drive);

    let h_rx = if config.steering_offset == crate::Vec3::ZERO {
        h.clone()
    } else {
        let assumed = source.at(source.position + config.steering_offset);
        steering_vector(&array, &assumed)?
    };
    let weights = BeamformerWeights::matched(&h_rx)?;

    let len = s.len();
    let mut fused = Accumulator::new(&weights, len);
    let mut fused_noise = Accumulator::new(&weights, len);
    let mut noise_energy = 0.0;
    for (i, &hi) in h.values.iter().enumerate() {
        let n = noise_channel(&noise, i, config.trial, len, fs);
        noise_energy += n.iter().map(|v| v * v).sum::<f64>();
        let y: Vec<f64> = s.iter().zip(&n).map(|(sv, nv)| hi * sv + nv).collect();
        fused.add_channel(i, &y)?;
        fused_noise.add_channel(i, &n)?;
    }
    let fused = fused.finish();
    let fused_noise = fused_noise.finish();

    let reference = ReferenceCarrier {
        phase: carrier_phase,
        channel_sign: config.channel_sign,
    };
    let decisions = coherent_demodulate_with(&fused, &timing, &reference)?;
    let decoded: Vec<bool> = decisions.iter().map(|d| d.bit).collect();
    let bit_errors = bits.iter().zip(&decoded).filter(|(a, b)| a != b).count();

    let sigma = noise.sigma;
    let n_sensors = h.len() as f64;
    let signal_power = p0 * p0 / 2.0;
    let (mean_input_snr_db, output_snr_db, array_gain_db) = if sigma > 0.0 {
        let snr = per_sensor_snr(&h, p0, sigma)?;
        let gain = array_gain_report(&h, sigma, p0)?;
        (
            Some(snr.mean_db),
            Some(gain.output_snr_db),
            Some(gain.gain_db),
        )
    } else {
        (None, None, None)
    };

    let (mut emp_in, mut emp_out, mut emp_gain) = (None, None, None);
    if sigma > 0.0 && len > 0 {
        let input_noise = noise_energy / (n_sensors * len as f64);
        let input = signal_power * h.norm_squared() / n_sensors / input_noise;
        // coherent signal gain of the (possibly mismatched) weights
        let coherence: f64 = h
            .values
            .iter()
            .zip(&h_rx.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / weights.norm_squared;
        let output_noise = fused_noise.iter().map(|v| v * v).sum::<f64>() / len as f64;
        let output = signal_power * coherence * coherence / output_noise;
        emp_in = Some(to_db(input));
        emp_out = Some(to_db(output));
        emp_gain = Some(to_db(output / input));
    }

    let prediction = if sigma > 0.0
        && config.actuator.is_none()
        && config.steering_offset == crate::Vec3::ZERO
        && noise.kind == crate::array::NoiseKind::White
    {
        Some(predicted_ber(&h, p0, sigma, &timing, bits.len().min(1000))?)
    } else {
        None
    };

    let report = LinkReport {
        transmitted_bits: bits_to_string(&bits),
        decoded_bits: bits_to_string(&decoded),
        bit_count: bits.len(),
        bit_errors,
        ber: bit_errors as f64 / bits.len() as f64,
        cycle_per_symbol: timing.cycle_per_symbol(),
        source_strength: p0,
        sigma_n: sigma,
        mean_input_snr_db,
        output_snr_db,
        array_gain_db,
        empirical_input_snr_db: emp_in,
        empirical_output_snr_db: emp_out,
        empirical_array_gain_db: emp_gain,
        predicted_ber: prediction.map(|p| p.ber),
        predicted_eb_n0_db: prediction.map(|p| p.eb_n0_db),
        decision_metrics: decisions.iter().map(|d| d.metric).collect(),
        timing: LinkTiming {
            sample_rate: fs,
            samples_per_symbol: timing.samples_per_symbol(),
            symbol_period: timing.symbol_period(),
            duration: len as f64 / fs,
            carrier_phase,
            channel_sign: config.channel_sign,
        },
    };
    Ok(LinkRun {
        report,
        bits,
        drive,
        source_signal: s,
        fused,
        decisions,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{NoiseLevel, NoiseSpec};
    use crate::array::{receive, NoiseModel};
    use crate::beamformer::beamform;

    fn quiet() -> LinkConfig {
        LinkConfig {
            noise: NoiseSpec {
                level: NoiseLevel::Sigma(0.0),
                ..NoiseSpec::default()
            },
            bit_count: 64,
            ..LinkConfig::default()
        }
    }

    #[test]
    fn noiseless_link_is_error_free_with_closed_form_metrics() {
        let run = simulate_link(&quiet()).unwrap();
        assert_eq!(run.report.bit_errors, 0);
        let p0 = run.report.source_strength;
        let ts = run.report.timing.symbol_period;
        for (d, b) in run.report.decision_metrics.iter().zip(&run.bits) {
            let ideal = if *b { p0 * ts / 2.0 } else { -p0 * ts / 2.0 };
            assert!((d - ideal).abs() < p0 * 1e-4, "{d} vs {ideal}");
        }
        assert!(run.report.mean_input_snr_db.is_none());
    }

    #[test]
    fn fused_path_matches_receive_then_beamform() {
        let cfg = LinkConfig {
            bit_count: 8,
            seed: 3,
            trial: 2,
            ..LinkConfig::default()
        };
        let run = simulate_link(&cfg).unwrap();
        let array = cfg.array.build().unwrap();
        let noise: NoiseModel = cfg.noise_model().unwrap();
        let y = receive(
            &cfg.medium,
            &cfg.source,
            &run.drive,
            2000.0,
            &array,
            &noise,
            2,
        )
        .unwrap();
        let h = steering_vector(&array, &cfg.source).unwrap();
        assert_eq!(beamform(&y, &h).unwrap(), run.fused);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = LinkConfig {
            bit_count: 200,
            seed: 11,
            ..LinkConfig::default()
        };
        assert_eq!(run_link(&cfg).unwrap(), run_link(&cfg).unwrap());
        let other = LinkConfig {
            seed: 12,
            ..cfg.clone()
        };
        assert_ne!(
            run_link(&cfg).unwrap().transmitted_bits,
            run_link(&other).unwrap().transmitted_bits
        );
    }

    #[test]
    fn rejects_zero_bits_and_mismatched_carrier() {
        let cfg = LinkConfig {
            bit_count: 0,
            ..LinkConfig::default()
        };
        assert!(run_link(&cfg).is_err());
        let mut cfg = LinkConfig::default();
        cfg.bpsk.carrier_frequency = 50.0;
        assert!(run_link(&cfg).is_err());
    }

    #[test]
    fn steering_offset_degrades_but_runs() {
        let cfg = LinkConfig {
            bit_count: 50,
            steering_offset: crate::Vec3::new(0.01, 0.0, 0.0),
            ..LinkConfig::default()
        };
        let r = run_link(&cfg).unwrap();
        assert!(r.predicted_ber.is_none());
        assert!(r.empirical_array_gain_db.unwrap() < 10.0 * 24f64.log10() + 0.5);
    }
}
