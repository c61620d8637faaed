//! File formats: CSV tables, raw little-endian `f64` records with a JSON
//! sidecar, and deterministic JSON.
//!
//! Raw records are channel-major: all samples of channel 0, then channel 1,
//! and so on. The sidecar is `{"sample_rate", "channels", "length"}`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{AttenuationProfile, EyeDiagramData, SensitivityGrid, SweepRow};
use crate::array::{MultiChannelSignal, SensorArray};
use crate::beamformer::BeamformerWeights;
use crate::physics::FieldGrid;
use crate::{Error, Result};

/// Significant digits for JSON reports.
pub const JSON_SIGNIFICANT_DIGITS: usize = 12;
/// Significant digits for grid CSV exports.
pub const CSV_SIGNIFICANT_DIGITS: usize = 9;

pub fn round_significant(v: f64, digits: usize) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", digits.saturating_sub(1), v)
        .parse()
        .unwrap_or(v)
}

/// Scientific notation with `digits` significant digits; `nan` for missing values.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    format!("{:.*e}", digits.saturating_sub(1), v)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(f) = n.as_f64() {
                if let Some(r) =
                    serde_json::Number::from_f64(round_significant(f, JSON_SIGNIFICANT_DIGITS))
                {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and floats rounded to 12 significant digits.
pub fn to_stable_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    Ok(serde_json::to_string_pretty(&v)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", to_stable_json(value)?)?;
    w.flush()?;
    Ok(())
}

/// `t,value` rows.
pub fn write_waveform_csv<W: Write>(mut w: W, samples: &[f64], sample_rate: f64) -> Result<()> {
    writeln!(w, "t,value")?;
    for (m, v) in samples.iter().enumerate() {
        writeln!(w, "{},{}", m as f64 / sample_rate, v)?;
    }
    Ok(())
}

/// Reads a `t,value` CSV and returns the samples and the sample rate
/// inferred from the first two time stamps.
pub fn read_waveform_csv<R: Read>(r: R) -> Result<(Vec<f64>, f64)> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != "t,value" {
                return Err(Error::Parse(format!(
                    "expected header `t,value`, got `{line}`"
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let mut next = |what: &str| -> Result<f64> {
            parts
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing {what}", i + 1)))?
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {what}: {e}", i + 1)))
        };
        times.push(next("t")?);
        values.push(next("value")?);
    }
    if times.len() < 2 {
        return Err(Error::Parse(
            "need at least two samples to infer the sample rate".into(),
        ));
    }
    Ok((values, 1.0 / (times[1] - times[0])))
}

/// `t,ch0,…,chN-1` rows.
pub fn write_multichannel_csv<W: Write>(mut w: W, signal: &MultiChannelSignal) -> Result<()> {
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..signal.channel_count()).map(|i| format!("ch{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for m in 0..signal.len() {
        write!(w, "{}", signal.time(m))?;
        for ch in &signal.channels {
            write!(w, ",{}", ch[m])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSidecar {
    pub sample_rate: f64,
    pub channels: usize,
    pub length: usize,
}

fn sidecar_path(data: &Path) -> PathBuf {
    let mut p = data.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

/// Writes `path` (raw data) and `path.json` (sidecar).
pub fn write_raw(path: &Path, channels: &[Vec<f64>], sample_rate: f64) -> Result<()> {
    let length = channels.first().map_or(0, Vec::len);
    if channels.iter().any(|c| c.len() != length) {
        return Err(Error::LengthMismatch("channels differ in length".into()));
    }
    let mut w = create(path)?;
    for ch in channels {
        for v in ch {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    let sidecar = RawSidecar {
        sample_rate,
        channels: channels.len(),
        length,
    };
    let mut s = create(&sidecar_path(path))?;
    writeln!(s, "{}", serde_json::to_string_pretty(&sidecar)?)?;
    s.flush()?;
    Ok(())
}

pub fn read_raw(path: &Path) -> Result<MultiChannelSignal> {
    let sidecar: RawSidecar = serde_json::from_reader(File::open(sidecar_path(path))?)?;
    let bytes = fs::read(path)?;
    let expected = sidecar.channels * sidecar.length * 8;
    if bytes.len() != expected {
        return Err(Error::LengthMismatch(format!(
            "{} bytes on disk, sidecar implies {expected}",
            bytes.len()
        )));
    }
    let samples: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let channels = if sidecar.length == 0 {
        vec![Vec::new(); sidecar.channels]
    } else {
        samples
            .chunks(sidecar.length)
            .map(<[f64]>::to_vec)
            .collect()
    };
    MultiChannelSignal::new(channels, sidecar.sample_rate)
}

/// `x,y,z,value` with normalised values; invalid points are `nan`.
pub fn write_field_csv<W: Write>(mut w: W, grid: &FieldGrid) -> Result<()> {
    writeln!(w, "x,y,z,value")?;
    for (p, v) in grid.spec.points().zip(grid.normalized()) {
        let d = CSV_SIGNIFICANT_DIGITS;
        writeln!(
            w,
            "{},{},{},{}",
            format_significant(p.x, d),
            format_significant(p.y, d),
            format_significant(p.z, d),
            format_significant(v.unwrap_or(f64::NAN), d)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMetadata {
    pub quantity: crate::physics::FieldQuantity,
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub counts: [usize; 3],
    pub spacing: [f64; 3],
    /// Divisor applied to the exported values.
    pub normalization: f64,
    pub valid_points: usize,
    pub time: f64,
}

pub fn field_metadata(grid: &FieldGrid, time: f64) -> FieldMetadata {
    FieldMetadata {
        quantity: grid.quantity,
        min: grid.spec.min.to_array(),
        max: grid.spec.max.to_array(),
        counts: grid.spec.counts,
        spacing: grid.spec.spacing(),
        normalization: grid.normalization,
        valid_points: grid.valid_count(),
        time,
    }
}

/// `x,y,z,S`; excluded points are `nan`.
pub fn write_sensitivity_csv<W: Write>(mut w: W, grid: &SensitivityGrid) -> Result<()> {
    writeln!(w, "x,y,z,S")?;
    let d = CSV_SIGNIFICANT_DIGITS;
    for (p, v) in grid.spec.points().zip(&grid.values) {
        writeln!(
            w,
            "{},{},{},{}",
            format_significant(p.x, d),
            format_significant(p.y, d),
            format_significant(p.z, d),
            format_significant(v.unwrap_or(f64::NAN), d)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityMetadata {
    pub min: [f64; 3],
    pub max_corner: [f64; 3],
    pub counts: [usize; 3],
    pub spacing: [f64; 3],
    pub probe_axis: [f64; 3],
    pub probe_radius: f64,
    pub max: f64,
    pub threshold_60: f64,
    pub threshold_30: f64,
    pub valid_points: usize,
}

pub fn sensitivity_metadata(grid: &SensitivityGrid) -> SensitivityMetadata {
    SensitivityMetadata {
        min: grid.spec.min.to_array(),
        max_corner: grid.spec.max.to_array(),
        counts: grid.spec.counts,
        spacing: grid.spec.spacing(),
        probe_axis: grid.probe_axis.to_array(),
        probe_radius: grid.probe_radius,
        max: grid.max,
        threshold_60: grid.threshold_60,
        threshold_30: grid.threshold_30,
        valid_points: grid.values.iter().flatten().count(),
    }
}

/// `value,ber,ci_low,ci_high,trials`
pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "value,ber,ci_low,ci_high,trials")?;
    for r in rows {
        let f = |v: f64| round_significant(v, JSON_SIGNIFICANT_DIGITS);
        writeln!(
            w,
            "{},{},{},{},{}",
            f(r.value),
            f(r.ber),
            f(r.ci_low),
            f(r.ci_high),
            r.trials
        )?;
    }
    Ok(())
}

/// `trace,bit,sample,t,value` rows, one per sample of every trace.
pub fn write_eye_csv<W: Write>(mut w: W, eye: &EyeDiagramData, sample_rate: f64) -> Result<()> {
    writeln!(w, "trace,bit,sample,t,value")?;
    for (k, (trace, bit)) in eye.traces.iter().zip(&eye.trace_bits).enumerate() {
        for (m, v) in trace.iter().enumerate() {
            writeln!(
                w,
                "{k},{},{m},{},{v}",
                u8::from(*bit),
                m as f64 / sample_rate
            )?;
        }
    }
    Ok(())
}

/// `r,amplitude`
pub fn write_attenuation_csv<W: Write>(mut w: W, profile: &AttenuationProfile) -> Result<()> {
    writeln!(w, "r,amplitude")?;
    for (r, a) in profile.radii.iter().zip(&profile.amplitudes) {
        writeln!(w, "{r},{a}")?;
    }
    Ok(())
}

/// Array geometry as a JSON list of `[x, y, z]`.
pub fn save_array(path: &Path, array: &SensorArray) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", serde_json::to_string_pretty(array)?)?;
    w.flush()?;
    Ok(())
}

pub fn load_array(path: &Path) -> Result<SensorArray> {
    let array: SensorArray = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    array.validate()?;
    Ok(array)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsExport {
    pub weights: Vec<f64>,
    pub norm: f64,
    pub norm_squared: f64,
}

impl From<&BeamformerWeights> for WeightsExport {
    fn from(w: &BeamformerWeights) -> Self {
        WeightsExport {
            weights: w.weights.clone(),
            norm: w.norm_squared.sqrt(),
            norm_squared: w.norm_squared,
        }
    }
}
