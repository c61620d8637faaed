use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::SensorArray;
use crate::physics::{
    dipole_geometric_factor, source_strength_amplitude, DipoleSource, FluidMedium, GridSpec,
};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttenuationStatus {
    Decaying,
    /// The ray lies in the nodal plane; amplitude is zero everywhere.
    NodalDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttenuationProfile {
    pub direction: Vec3,
    /// m
    pub radii: Vec<f64>,
    /// Pressure amplitude `P₀ |G|`, Pa.
    pub amplitudes: Vec<f64>,
    /// Least-squares slope of `ln amplitude` against `ln r`.
    pub slope: Option<f64>,
    pub status: AttenuationStatus,
}

const NODAL_TOLERANCE: f64 = 1e-12;

/// Pressure amplitude along a ray from the source centre, at `samples`
/// log-spaced radii in `[r_min, r_max]`.
pub fn attenuation_profile(
    medium: &FluidMedium,
    source: &DipoleSource,
    direction: Vec3,
    r_min: f64,
    r_max: f64,
    samples: usize,
) -> Result<AttenuationProfile> {
    medium.validate()?;
    source.validate()?;
    let direction = direction
        .normalized()
        .ok_or_else(|| Error::config("direction", "must be a non-zero vector"))?;
    if !(r_min > source.radius && r_min.is_finite()) {
        return Err(Error::config("r_min", "must exceed the source radius"));
    }
    if !(r_max > r_min && r_max.is_finite()) {
        return Err(Error::config("r_max", "must exceed r_min"));
    }
    if samples < 2 {
        return Err(Error::config("samples", "need at least two radii"));
    }
    let p0 = source_strength_amplitude(medium, source);
    let (lo, hi) = (r_min.ln(), r_max.ln());
    let radii: Vec<f64> = (0..samples)
        .map(|i| (lo + (hi - lo) * i as f64 / (samples - 1) as f64).exp())
        .collect();
    let amplitudes = radii
        .iter()
        .map(|&r| {
            dipole_geometric_factor(source, source.position + direction * r).map(|g| p0 * g.abs())
        })
        .collect::<Result<Vec<_>>>()?;

    if direction.dot(source.vibration_axis).abs() <= NODAL_TOLERANCE
        || amplitudes.iter().all(|&a| a == 0.0)
    {
        return Ok(AttenuationProfile {
            direction,
            radii,
            amplitudes,
            slope: None,
            status: AttenuationStatus::NodalDirection,
        });
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = amplitudes.iter().map(|a| a.ln()).collect();
    Ok(AttenuationProfile {
        direction,
        radii,
        amplitudes,
        slope: Some(least_squares_slope(&xs, &ys)),
        status: AttenuationStatus::Decaying,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityGrid {
    pub spec: GridSpec,
    pub probe_axis: Vec3,
    /// m; grid points this close to any sensor are excluded.
    pub probe_radius: f64,
    /// `‖h(r)‖` in 1/m², `None` for excluded points.
    pub values: Vec<Option<f64>>,
    pub max: f64,
    pub threshold_60: f64,
    pub threshold_30: f64,
}

/// `S(r) = ‖h(r)‖` for a probe source of the given axis placed at every grid point.
///
/// Squared terms are summed in sorted order, so mirror-image points of a
/// mirror-symmetric array give bit-identical values.
pub fn sensitivity_field(
    array: &SensorArray,
    spec: &GridSpec,
    probe_axis: Vec3,
    probe_radius: f64,
) -> Result<SensitivityGrid> {
    array.validate()?;
    spec.validate()?;
    if !(probe_radius > 0.0 && probe_radius.is_finite()) {
        return Err(Error::config("probe_radius", "must be positive and finite"));
    }
    let probe = DipoleSource {
        radius: probe_radius,
        amplitude: 1.0,
        carrier_frequency: 1.0,
        position: Vec3::ZERO,
        vibration_axis: probe_axis,
        exterior_check: crate::physics::ExteriorCheck::Sphere,
    };
    probe
        .validate()
        .map_err(|_| Error::config("probe_axis", "must have unit norm"))?;

    let values: Vec<Option<f64>> = (0..spec.len())
        .into_par_iter()
        .map(|idx| {
            let at = probe.at(spec.point(idx));
            let mut terms = array
                .positions()
                .iter()
                .map(|&m| dipole_geometric_factor(&at, m).map(|g| g * g).ok())
                .collect::<Option<Vec<f64>>>()?;
            terms.sort_by(f64::total_cmp);
            Some(terms.iter().sum::<f64>().sqrt())
        })
        .collect();
    if values.iter().all(Option::is_none) {
        return Err(Error::EmptyGrid);
    }
    let max = values.iter().flatten().fold(0.0_f64, |a, &v| a.max(v));
    Ok(SensitivityGrid {
        spec: *spec,
        probe_axis,
        probe_radius,
        values,
        max,
        threshold_60: 0.6 * max,
        threshold_30: 0.3 * max,
    })
}

/// Sensitivity at a single candidate source position.
pub fn sensitivity_at(
    array: &SensorArray,
    point: Vec3,
    probe_axis: Vec3,
    probe_radius: f64,
) -> Result<f64> {
    let spec = GridSpec {
        min: point,
        max: point,
        counts: [1, 1, 1],
    };
    let grid = sensitivity_field(array, &spec, probe_axis, probe_radius)?;
    Ok(grid.max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::DualLineLayout;

    #[test]
    fn single_sensor_value() {
        let a = SensorArray::new(vec![Vec3::ZERO]).unwrap();
        let s = sensitivity_at(&a, Vec3::new(0.1, 0.0, 0.0), Vec3::X, 0.01).unwrap();
        assert!((s - 100.0).abs() < 1e-10);
        // sensor on the probe's nodal plane
        let s = sensitivity_at(&a, Vec3::new(0.0, 0.1, 0.0), Vec3::X, 0.01).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn excluded_everywhere_is_empty() {
        let a = SensorArray::new(vec![Vec3::ZERO]).unwrap();
        let spec = GridSpec::cube(Vec3::ZERO, 0.01, 3);
        assert!(matches!(
            sensitivity_field(&a, &spec, Vec3::X, 1.0),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn thresholds_track_the_maximum() {
        let a = DualLineLayout::default().build().unwrap();
        let g = sensitivity_field(&a, &GridSpec::cube(Vec3::ZERO, 0.5, 9), Vec3::X, 0.125).unwrap();
        assert_eq!(g.threshold_60, 0.6 * g.max);
        assert_eq!(g.threshold_30, 0.3 * g.max);
        assert!(g.values.iter().flatten().all(|&v| v >= 0.0 && v <= g.max));
    }

    #[test]
    fn attenuation_examples() {
        let m = FluidMedium::water();
        let s = DipoleSource::new(0.125, 0.015, 40.0, Vec3::ZERO, Vec3::X).unwrap();
        let axial = attenuation_profile(&m, &s, Vec3::X, 0.25, 12.5, 50).unwrap();
        assert!((axial.slope.unwrap() + 2.0).abs() < 1e-6);
        let nodal = attenuation_profile(&m, &s, Vec3::Y, 0.25, 12.5, 10).unwrap();
        assert_eq!(nodal.status, AttenuationStatus::NodalDirection);
        assert!(nodal.slope.is_none() && nodal.amplitudes.iter().all(|&a| a == 0.0));
        let diag = attenuation_profile(&m, &s, Vec3::new(1.0, 1.0, 0.0), 0.25, 12.5, 50).unwrap();
        assert!((diag.slope.unwrap() + 2.0).abs() < 1e-6);
        for (a, d) in axial.amplitudes.iter().zip(&diag.amplitudes) {
            assert!((d / a - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
        assert!(attenuation_profile(&m, &s, Vec3::X, 0.1, 1.0, 10).is_err());
    }
}
