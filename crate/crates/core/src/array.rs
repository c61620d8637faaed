//! Lateral-line sensor array: geometry, spatial fingerprint, reception and
//! turbulence noise.

use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::physics::{
    dipole_geometric_factor, source_strength_amplitude, DipoleSource, FluidMedium,
};
use crate::rng::{substream, Stream};
use crate::{Error, Result, Vec3};

/// Minimum distance between two sensors, m.
pub const MIN_SENSOR_SEPARATION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SensorArray {
    positions: Vec<Vec3>,
}

impl SensorArray {
    pub fn new(positions: Vec<Vec3>) -> Result<Self> {
        let a = SensorArray { positions };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::config("array", "needs at least one sensor"));
        }
        if let Some(i) = self.positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::config(
                "array",
                format!("sensor {i} has a non-finite coordinate"),
            ));
        }
        for (i, a) in self.positions.iter().enumerate() {
            for (j, b) in self.positions.iter().enumerate().skip(i + 1) {
                if a.distance(*b) <= MIN_SENSOR_SEPARATION {
                    return Err(Error::config(
                        "array",
                        format!("sensors {i} and {j} coincide"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn centroid(&self) -> Vec3 {
        let sum = self.positions.iter().fold(Vec3::ZERO, |a, p| a + *p);
        sum * (1.0 / self.positions.len() as f64)
    }
}

/// Two parallel rows of evenly spaced sensors along x, at `y = ±row_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DualLineLayout {
    /// Row length along x, m.
    pub span: f64,
    /// Half the distance between the rows, m.
    pub row_offset: f64,
    pub n_per_row: usize,
}

impl Default for DualLineLayout {
    fn default() -> Self {
        DualLineLayout {
            span: 0.2,
            row_offset: 0.02,
            n_per_row: 12,
        }
    }
}

/// Sensors `0..n` lie on `y = +row_offset`, sensors `n..2n` on `y = −row_offset`,
/// each row ordered by increasing x.
pub fn build_dual_line_array(span: f64, row_offset: f64, n_per_row: usize) -> Result<SensorArray> {
    if !(span > 0.0 && span.is_finite()) {
        return Err(Error::config("array.span", "must be positive and finite"));
    }
    if !row_offset.is_finite() {
        return Err(Error::config("array.row_offset", "must be finite"));
    }
    if n_per_row < 2 {
        return Err(Error::config("array.n_per_row", "must be at least 2"));
    }
    let last = (n_per_row - 1) as f64;
    // mirrored sensors get exactly negated x coordinates
    let x = move |i: usize| span / 2.0 * ((2.0 * i as f64 - last) / last);
    let positions = [row_offset, -row_offset]
        .into_iter()
        .flat_map(|y| (0..n_per_row).map(move |i| Vec3::new(x(i), y, 0.0)))
        .collect();
    SensorArray::new(positions)
}

impl DualLineLayout {
    pub fn build(&self) -> Result<SensorArray> {
        build_dual_line_array(self.span, self.row_offset, self.n_per_row)
    }
}

/// Per-sensor geometric response `h_i = G(m_i)` to one source, 1/m².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialFingerprint {
    pub values: Vec<f64>,
}

impl SpatialFingerprint {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|h| h * h).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scaled(&self, k: f64) -> SpatialFingerprint {
        SpatialFingerprint {
            values: self.values.iter().map(|h| h * k).collect(),
        }
    }

    pub(crate) fn require_nonzero(&self) -> Result<f64> {
        let n2 = self.norm_squared();
        if n2 > 0.0 && n2.is_finite() {
            Ok(n2)
        } else {
            Err(Error::DegenerateFingerprint)
        }
    }
}

pub fn steering_vector(array: &SensorArray, source: &DipoleSource) -> Result<SpatialFingerprint> {
    let values = array
        .positions()
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            dipole_geometric_factor(source, m).map_err(|e| match e {
                Error::PointInsideSource {
                    distance, radius, ..
                } => Error::PointInsideSource {
                    sensor: Some(i),
                    distance,
                    radius,
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let h = SpatialFingerprint { values };
    h.require_nonzero()?;
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    White,
    /// Gaussian noise with a `f^(−5/3)` spectrum, flat below `f_low`.
    Kolmogorov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default)]
    pub kind: NoiseKind,
    /// Per-sensor standard deviation σ_n, Pa.
    pub sigma: f64,
    /// Flattening cutoff for the Kolmogorov spectrum, Hz.
    #[serde(default = "default_f_low")]
    pub f_low: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_f_low() -> f64 {
    1.0
}

impl NoiseModel {
    pub fn white(sigma: f64, seed: u64) -> Self {
        NoiseModel {
            kind: NoiseKind::White,
            sigma,
            f_low: default_f_low(),
            seed,
        }
    }

    pub fn kolmogorov(sigma: f64, f_low: f64, seed: u64) -> Self {
        NoiseModel {
            kind: NoiseKind::Kolmogorov,
            sigma,
            f_low,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::config(
                "noise.sigma",
                "must be non-negative and finite",
            ));
        }
        if !(self.f_low > 0.0 && self.f_low.is_finite()) {
            return Err(Error::config("noise.f_low", "must be positive and finite"));
        }
        Ok(())
    }
}

/// `N × T` pressure record, Pa.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelSignal {
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: f64,
    pub start_time: f64,
}

impl MultiChannelSignal {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: f64) -> Result<Self> {
        if let Some(first) = channels.first() {
            if let Some(i) = channels.iter().position(|c| c.len() != first.len()) {
                return Err(Error::LengthMismatch(format!(
                    "channel {i} has {} samples, channel 0 has {}",
                    channels[i].len(),
                    first.len()
                )));
            }
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::config("sample_rate", "must be positive and finite"));
        }
        Ok(MultiChannelSignal {
            channels,
            sample_rate,
            start_time: 0.0,
        })
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, m: usize) -> f64 {
        self.start_time + m as f64 / self.sample_rate
    }
}

/// One noise channel drawn from the `(seed, trial, channel)` substream.
pub fn noise_channel(
    model: &NoiseModel,
    channel: usize,
    trial: u64,
    len: usize,
    sample_rate: f64,
) -> Vec<f64> {
    if model.sigma == 0.0 || len == 0 {
        return vec![0.0; len];
    }
    let mut rng = substream(model.seed, trial, Stream::Noise(channel));
    let white: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
    match model.kind {
        NoiseKind::White => white.into_iter().map(|v| v * model.sigma).collect(),
        NoiseKind::Kolmogorov => shape_kolmogorov(white, model.sigma, model.f_low, sample_rate),
    }
}

/// Spectral shaping of unit white noise to `|H(f)|² ∝ max(f, f_low)^(−5/3)`,
/// scaled so the expected per-sample variance is `sigma²`.
fn shape_kolmogorov(white: Vec<f64>, sigma: f64, f_low: f64, sample_rate: f64) -> Vec<f64> {
    let n = white.len();
    let df = sample_rate / n as f64;
    let gain: Vec<f64> = (0..n)
        .map(|k| {
            let f = k.min(n - k) as f64 * df;
            f.max(f_low).powf(-5.0 / 6.0)
        })
        .collect();
    // Expected output variance of unit white noise is mean(|H|²).
    let power = gain.iter().map(|g| g * g).sum::<f64>() / n as f64;
    let scale = sigma / (power.sqrt() * n as f64);

    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = white.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (b, g) in buf.iter_mut().zip(&gain) {
        *b *= g * scale;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

pub fn synthesize_noise(
    model: &NoiseModel,
    channels: usize,
    len: usize,
    sample_rate: f64,
    trial: u64,
) -> Result<MultiChannelSignal> {
    model.validate()?;
    if len == 0 {
        return Err(Error::config("noise.length", "must be positive"));
    }
    let data = (0..channels)
        .map(|ch| noise_channel(model, ch, trial, len, sample_rate))
        .collect();
    MultiChannelSignal::new(data, sample_rate)
}

/// Physical source strength `s(t) = −P₀ · drive(t)` for a unit-amplitude drive.
pub fn source_signal(p0: f64, drive: &[f64]) -> Vec<f64> {
    drive.iter().map(|v| -p0 * v).collect()
}

/// Received record `y_i = h_i · s(t) + n_i(t)`.
///
/// `drive` is the unit-amplitude transmitter motion, e.g. from
/// [`crate::modem::modulate`] with amplitude 1, optionally actuator-filtered.
pub fn receive(
    medium: &FluidMedium,
    source: &DipoleSource,
    drive: &[f64],
    sample_rate: f64,
    array: &SensorArray,
    noise: &NoiseModel,
    trial: u64,
) -> Result<MultiChannelSignal> {
    medium.validate()?;
    source.validate()?;
    noise.validate()?;
    let h = steering_vector(array, source)?;
    let s = source_signal(source_strength_amplitude(medium, source), drive);
    let channels = h
        .values
        .iter()
        .enumerate()
        .map(|(i, &hi)| {
            let n = noise_channel(noise, i, trial, s.len(), sample_rate);
            s.iter().zip(n).map(|(sv, nv)| hi * sv + nv).collect()
        })
        .collect();
    MultiChannelSignal::new(channels, sample_rate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub per_sensor_linear: Vec<f64>,
    pub per_sensor_db: Vec<f64>,
    pub mean_linear: f64,
    pub mean_db: f64,
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Sinusoid-power SNR per sensor, `(h_i² P₀²/2) / σ_n²`, and the array mean.
pub fn per_sensor_snr(h: &SpatialFingerprint, p0: f64, sigma: f64) -> Result<SnrReport> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::config(
            "noise.sigma",
            "must be positive to define an SNR",
        ));
    }
    if h.is_empty() {
        return Err(Error::config("fingerprint", "is empty"));
    }
    let noise_power = sigma * sigma;
    let per_sensor_linear: Vec<f64> = h
        .values
        .iter()
        .map(|g| g * g * p0 * p0 / 2.0 / noise_power)
        .collect();
    let per_sensor_db = per_sensor_linear.iter().map(|&s| to_db(s)).collect();
    let mean_linear = p0 * p0 / 2.0 * h.norm_squared() / h.len() as f64 / noise_power;
    Ok(SnrReport {
        per_sensor_linear,
        per_sensor_db,
        mean_linear,
        mean_db: to_db(mean_linear),
    })
}

/// σ_n giving the requested mean per-sensor SNR.
pub fn calibrate_noise_for_snr(h: &SpatialFingerprint, p0: f64, target_db: f64) -> Result<f64> {
    if !target_db.is_finite() {
        return Err(Error::config("target_snr_db", "must be finite"));
    }
    if h.is_empty() {
        return Err(Error::DegenerateFingerprint);
    }
    let n2 = h.require_nonzero()?;
    let mean_signal = p0 * p0 / 2.0 * n2 / h.len() as f64;
    Ok((mean_signal / from_db(target_db)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn origin_source() -> DipoleSource {
        DipoleSource::new(0.01, 0.015, 40.0, Vec3::ZERO, Vec3::X).unwrap()
    }

    #[test]
    fn default_dual_line() {
        let a = DualLineLayout::default().build().unwrap();
        assert_eq!(a.len(), 24);
        let p = a.positions();
        assert_relative_eq!(p[1].x - p[0].x, 0.2 / 11.0, max_relative = 1e-12);
        assert_eq!(p[0].x, -0.1);
        assert_eq!(p[11].x, 0.1);
        for i in 0..12 {
            assert_eq!(p[i].x, -p[11 - i].x);
        }
        assert!(p[..12].iter().all(|v| v.y == 0.02 && v.z == 0.0));
        assert!(p[12..].iter().all(|v| v.y == -0.02));
        assert_relative_eq!(a.centroid().norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn dual_line_edge_cases() {
        let a = build_dual_line_array(1.0, 0.1, 2).unwrap();
        assert_eq!(a.len(), 4);
        let xs: Vec<f64> = a.positions().iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![-0.5, 0.5, -0.5, 0.5]);
        assert!(build_dual_line_array(0.2, 0.0, 12).is_err());
        assert!(build_dual_line_array(0.0, 0.02, 12).is_err());
        assert!(build_dual_line_array(0.2, 0.02, 1).is_err());
    }

    #[test]
    fn steering_examples() {
        let one = SensorArray::new(vec![Vec3::new(0.1, 0.0, 0.0)]).unwrap();
        let h = steering_vector(&one, &origin_source()).unwrap();
        assert_relative_eq!(h.values[0], 100.0, max_relative = 1e-13);

        let plane =
            SensorArray::new(vec![Vec3::new(0.0, 0.1, 0.0), Vec3::new(0.0, -0.2, 0.3)]).unwrap();
        assert!(matches!(
            steering_vector(&plane, &origin_source()),
            Err(Error::DegenerateFingerprint)
        ));

        let near =
            SensorArray::new(vec![Vec3::new(0.5, 0.0, 0.0), Vec3::new(0.005, 0.0, 0.0)]).unwrap();
        match steering_vector(&near, &origin_source()) {
            Err(Error::PointInsideSource {
                sensor: Some(1), ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn default_fingerprint_is_odd_in_x() {
        let a = DualLineLayout::default().build().unwrap();
        let h = steering_vector(&a, &DipoleSource::default()).unwrap();
        for row in 0..2 {
            for i in 0..12 {
                let (l, r) = (h.values[row * 12 + i], h.values[row * 12 + 11 - i]);
                assert_eq!(l, -r);
            }
        }
        for (hi, &m) in h.values.iter().zip(a.positions()) {
            assert_eq!(
                *hi,
                dipole_geometric_factor(&DipoleSource::default(), m).unwrap()
            );
        }
    }

    #[test]
    fn zero_sigma_noise_is_silent() {
        let n = synthesize_noise(&NoiseModel::white(0.0, 1), 3, 100, 2000.0, 0).unwrap();
        assert!(n.channels.iter().flatten().all(|&v| v == 0.0));
        let k = synthesize_noise(&NoiseModel::kolmogorov(0.0, 1.0, 1), 2, 64, 2000.0, 0).unwrap();
        assert!(k.channels.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_is_reproducible() {
        let m = NoiseModel::kolmogorov(2.0, 1.0, 99);
        let a = synthesize_noise(&m, 3, 1000, 2000.0, 5).unwrap();
        let b = synthesize_noise(&m, 3, 1000, 2000.0, 5).unwrap();
        assert_eq!(a, b);
        let c = synthesize_noise(&m, 3, 1000, 2000.0, 6).unwrap();
        assert_ne!(a, c);
        // a channel does not depend on how many other channels were drawn
        assert_eq!(noise_channel(&m, 2, 5, 1000, 2000.0), a.channels[2]);
    }

    #[test]
    fn snr_examples() {
        let h = SpatialFingerprint { values: vec![1.0] };
        let r = per_sensor_snr(&h, 2f64.sqrt(), 1.0).unwrap();
        assert_relative_eq!(r.mean_linear, 1.0, max_relative = 1e-15);
        assert!(r.mean_db.abs() < 1e-12);

        let h = SpatialFingerprint {
            values: vec![3.0, -1.0, 0.5],
        };
        let a = per_sensor_snr(&h, 10.0, 0.7).unwrap();
        let b = per_sensor_snr(&h, 10.0, 1.4).unwrap();
        for (x, y) in a.per_sensor_db.iter().zip(&b.per_sensor_db) {
            assert!((x - y - 20.0 * 2f64.log10()).abs() < 1e-12);
            assert!((x - y - 6.0206).abs() < 1e-4);
        }
        assert!(per_sensor_snr(&h, 10.0, 0.0).is_err());
    }

    #[test]
    fn calibration_round_trip() {
        let h = SpatialFingerprint { values: vec![1.0] };
        let s0 = calibrate_noise_for_snr(&h, 2f64.sqrt(), 0.0).unwrap();
        assert_relative_eq!(s0, 1.0, max_relative = 1e-15);
        let s5 = calibrate_noise_for_snr(&h, 2f64.sqrt(), -5.0).unwrap();
        assert_relative_eq!(s5 / s0, 10f64.powf(0.25), max_relative = 1e-14);

        let a = DualLineLayout::default().build().unwrap();
        let h = steering_vector(&a, &DipoleSource::default()).unwrap();
        let sigma = calibrate_noise_for_snr(&h, 925.28, -5.0).unwrap();
        let r = per_sensor_snr(&h, 925.28, sigma).unwrap();
        assert!((r.mean_db + 5.0).abs() < 1e-12);
        assert!(matches!(
            calibrate_noise_for_snr(
                &SpatialFingerprint {
                    values: vec![0.0, 0.0]
                },
                1.0,
                0.0
            ),
            Err(Error::DegenerateFingerprint)
        ));
    }

    #[test]
    fn noiseless_reception_is_outer_product() {
        let m = FluidMedium::water();
        let src = DipoleSource::default();
        let a = DualLineLayout::default().build().unwrap();
        let drive: Vec<f64> = (0..200).map(|k| (k as f64 * 0.1).sin()).collect();
        let y = receive(&m, &src, &drive, 2000.0, &a, &NoiseModel::white(0.0, 0), 0).unwrap();
        let h = steering_vector(&a, &src).unwrap();
        let p0 = source_strength_amplitude(&m, &src);
        for (ch, hi) in y.channels.iter().zip(&h.values) {
            for (v, d) in ch.iter().zip(&drive) {
                assert_eq!(*v, hi * (-p0 * d));
            }
        }
        // mirrored sensors 0 and 11 see exact negations
        assert!(y.channels[0]
            .iter()
            .zip(&y.channels[11])
            .all(|(a, b)| (a + b).abs() <= 1e-9 * a.abs().max(1.0)));
    }

    #[test]
    fn single_on_axis_sensor_sample() {
        let m = FluidMedium::water();
        let src = DipoleSource::default().at(Vec3::ZERO);
        let a = SensorArray::new(vec![Vec3::new(0.07, 0.0, 0.0)]).unwrap();
        let cfg = crate::modem::BpskConfig::default();
        let drive = crate::modem::modulate(&[true], &cfg).unwrap();
        let y = receive(&m, &src, &drive, 2000.0, &a, &NoiseModel::white(0.0, 0), 0).unwrap();
        // half a carrier period is sample 25
        assert!(y.channels[0][25].abs() < 1e-9);
        let peak =
            crate::physics::pressure_at(&m, &src, Vec3::new(0.07, 0.0, 0.0), 1.0 / 160.0).unwrap();
        assert!((peak + 1.8883e5).abs() < 10.0);
        let t = 12.0 / 2000.0;
        let expected = crate::physics::pressure_at(&m, &src, Vec3::new(0.07, 0.0, 0.0), t).unwrap();
        assert_relative_eq!(y.channels[0][12], expected, max_relative = 1e-12);
        let empty = receive(&m, &src, &[], 2000.0, &a, &NoiseModel::white(1.0, 0), 0).unwrap();
        assert!(empty.is_empty());
    }
}
