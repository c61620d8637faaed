//! Closed-form pressure field of a sphere oscillating in an unbounded,
//! incompressible, inviscid fluid.
//!
//! Exterior potential flow of a translating sphere is a dipole:
//!
//! ```text
//! φ(r, t) = −(a³ / 2r²) · U(t) · cosθ,         U(t) = Aω cos(ωt)
//! p(r, t) = −ρ ∂φ/∂t = −(ρ A ω² a³ / 2) · G(r) · sin(ωt)
//! G(r)    = (Δ·e) / ‖Δ‖³,                      Δ = r − r₀
//! ```
//!
//! with `e` the unit vibration axis. Every function here is pure.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Tolerance on the norm of a vibration axis.
pub const AXIS_NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluidMedium {
    /// kg/m³
    pub density: f64,
}

impl FluidMedium {
    pub fn new(density: f64) -> Result<Self> {
        let m = FluidMedium { density };
        m.validate()?;
        Ok(m)
    }

    pub fn water() -> Self {
        FluidMedium { density: 1000.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::config(
                "medium.density",
                "must be positive and finite",
            ));
        }
        Ok(())
    }
}

impl Default for FluidMedium {
    fn default() -> Self {
        FluidMedium::water()
    }
}

/// Which region around the source is treated as outside the flow domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExteriorCheck {
    /// Points with `d ≤ radius` are inside the rigid sphere and rejected.
    #[default]
    Sphere,
    /// The radius only sets the dipole strength; only the singular point
    /// `d = 0` is rejected.
    PointDipole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DipoleSource {
    /// Sphere radius `a`, m.
    pub radius: f64,
    /// Displacement amplitude `A`, m.
    pub amplitude: f64,
    /// Carrier frequency `f_c`, Hz.
    pub carrier_frequency: f64,
    /// Sphere centre `r₀`, m.
    pub position: Vec3,
    /// Unit vector along which the sphere oscillates.
    pub vibration_axis: Vec3,
    pub exterior_check: ExteriorCheck,
}

impl DipoleSource {
    /// A source with the strict sphere exterior check.
    pub fn new(
        radius: f64,
        amplitude: f64,
        carrier_frequency: f64,
        position: Vec3,
        vibration_axis: Vec3,
    ) -> Result<Self> {
        let s = DipoleSource {
            radius,
            amplitude,
            carrier_frequency,
            position,
            vibration_axis,
            exterior_check: ExteriorCheck::Sphere,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_exterior_check(mut self, check: ExteriorCheck) -> Self {
        self.exterior_check = check;
        self
    }

    pub fn at(mut self, position: Vec3) -> Self {
        self.position = position;
        self
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * self.carrier_frequency
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.radius) {
            return Err(Error::config(
                "source.radius",
                "must be positive and finite",
            ));
        }
        // A = 0 is a silent source; allowed so the field degenerates cleanly.
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::config(
                "source.amplitude",
                "must be non-negative and finite",
            ));
        }
        if !positive(self.carrier_frequency) {
            return Err(Error::config(
                "source.carrier_frequency",
                "must be positive and finite",
            ));
        }
        if !self.position.is_finite() {
            return Err(Error::config("source.position", "must be finite"));
        }
        if (self.vibration_axis.norm() - 1.0).abs() > AXIS_NORM_TOLERANCE {
            return Err(Error::config(
                "source.vibration_axis",
                format!("must have unit norm (got {})", self.vibration_axis.norm()),
            ));
        }
        Ok(())
    }

    /// Distance from the source centre, rejecting points outside the flow domain.
    pub fn exterior_distance(&self, point: Vec3) -> Result<f64> {
        let d = point.distance(self.position);
        let inside = match self.exterior_check {
            ExteriorCheck::Sphere => d <= self.radius,
            ExteriorCheck::PointDipole => d == 0.0,
        };
        if inside || !d.is_finite() {
            return Err(Error::PointInsideSource {
                sensor: None,
                distance: d,
                radius: self.radius,
            });
        }
        Ok(d)
    }
}

impl Default for DipoleSource {
    /// 0.125 m sphere, 15 mm stroke, 40 Hz carrier, 70 mm off the array
    /// centre along +y, vibrating along x.
    ///
    /// The 70 mm stand-off is smaller than the radius, so the default uses
    /// [`ExteriorCheck::PointDipole`].
    fn default() -> Self {
        DipoleSource {
            radius: 0.125,
            amplitude: 0.015,
            carrier_frequency: 40.0,
            position: Vec3::new(0.0, 0.07, 0.0),
            vibration_axis: Vec3::X,
            exterior_check: ExteriorCheck::PointDipole,
        }
    }
}

/// Spatial term `G = (Δ·e)/‖Δ‖³`, in 1/m².
pub fn dipole_geometric_factor(source: &DipoleSource, point: Vec3) -> Result<f64> {
    let d = source.exterior_distance(point)?;
    let delta = point - source.position;
    Ok(delta.dot(source.vibration_axis) / (d * d * d))
}

/// Dipole strength `P₀ = ρ A ω² a³ / 2`, in Pa·m².
pub fn source_strength_amplitude(medium: &FluidMedium, source: &DipoleSource) -> f64 {
    let w = source.angular_frequency();
    medium.density * source.amplitude * w * w * source.radius.powi(3) / 2.0
}

/// Dynamic pressure `p = −P₀ · G · sin(ωt)`, in Pa.
pub fn pressure_at(
    medium: &FluidMedium,
    source: &DipoleSource,
    point: Vec3,
    time: f64,
) -> Result<f64> {
    let g = dipole_geometric_factor(source, point)?;
    let p0 = source_strength_amplitude(medium, source);
    Ok(-p0 * g * (source.angular_frequency() * time).sin())
}

/// Velocity potential `φ = −(a³/2r²) · Aω cos(ωt) · cosθ`, in m²/s.
pub fn velocity_potential(source: &DipoleSource, point: Vec3, time: f64) -> Result<f64> {
    let r = source.exterior_distance(point)?;
    let cos_theta = (point - source.position).dot(source.vibration_axis) / r;
    let w = source.angular_frequency();
    let velocity = source.amplitude * w * (w * time).cos();
    Ok(-(source.radius.powi(3) / (2.0 * r * r)) * velocity * cos_theta)
}

/// Regular grid; `x` varies fastest, then `y`, then `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: Vec3,
    pub max: Vec3,
    pub counts: [usize; 3],
}

impl GridSpec {
    /// Cube `center ± half_extent` with `resolution` points per axis.
    pub fn cube(center: Vec3, half_extent: f64, resolution: usize) -> Self {
        let h = Vec3::new(half_extent, half_extent, half_extent);
        GridSpec {
            min: center - h,
            max: center + h,
            counts: [resolution; 3],
        }
    }

    /// Square slice perpendicular to axis `normal` (0 = x, 1 = y, 2 = z) at
    /// coordinate `level`, spanning `center ± half_extent` in-plane.
    pub fn plane(
        normal: usize,
        level: f64,
        center: Vec3,
        half_extent: f64,
        resolution: usize,
    ) -> Self {
        let mut min = (center - Vec3::new(half_extent, half_extent, half_extent)).to_array();
        let mut max = (center + Vec3::new(half_extent, half_extent, half_extent)).to_array();
        let mut counts = [resolution; 3];
        min[normal] = level;
        max[normal] = level;
        counts[normal] = 1;
        GridSpec {
            min: min.into(),
            max: max.into(),
            counts,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::config(
                "grid.counts",
                "every axis needs at least one point",
            ));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::config("grid", "bounds must be finite"));
        }
        let (lo, hi) = (self.min.to_array(), self.max.to_array());
        if (0..3).any(|k| hi[k] < lo[k]) {
            return Err(Error::config("grid", "max must not be below min"));
        }
        Ok(())
    }

    pub fn spacing(&self) -> [f64; 3] {
        let (lo, hi) = (self.min.to_array(), self.max.to_array());
        std::array::from_fn(|k| {
            if self.counts[k] > 1 {
                (hi[k] - lo[k]) / (self.counts[k] - 1) as f64
            } else {
                0.0
            }
        })
    }

    fn coordinate(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi) = (self.min.to_array()[axis], self.max.to_array()[axis]);
        let n = self.counts[axis];
        if n == 1 {
            return lo;
        }
        // Centre ± fraction of the half-width keeps mirrored grids exactly mirrored.
        let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
        let frac = (2 * i as i64 - (n as i64 - 1)) as f64 / (n - 1) as f64;
        if i == n - 1 {
            return hi;
        }
        if i == 0 {
            return lo;
        }
        mid + half * frac
    }

    pub fn point(&self, index: usize) -> Vec3 {
        let [nx, ny, _] = self.counts;
        let i = index % nx;
        let j = (index / nx) % ny;
        let k = index / (nx * ny);
        Vec3::new(
            self.coordinate(0, i),
            self.coordinate(1, j),
            self.coordinate(2, k),
        )
    }

    pub fn points(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldQuantity {
    /// Instantaneous pressure in Pa at the requested time.
    Pressure,
    /// Time-independent spatial term `G` in 1/m².
    Geometric,
}

/// Sampled field; `None` marks points outside the flow domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub spec: GridSpec,
    pub quantity: FieldQuantity,
    pub values: Vec<Option<f64>>,
    /// Maximum absolute value over valid points.
    pub normalization: f64,
}

impl FieldGrid {
    /// Values divided by [`FieldGrid::normalization`] (all zero if the field vanishes).
    pub fn normalized(&self) -> Vec<Option<f64>> {
        let scale = if self.normalization > 0.0 {
            1.0 / self.normalization
        } else {
            0.0
        };
        self.values.iter().map(|v| v.map(|v| v * scale)).collect()
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

pub fn pressure_field_grid(
    medium: &FluidMedium,
    source: &DipoleSource,
    spec: &GridSpec,
    quantity: FieldQuantity,
    time: f64,
) -> Result<FieldGrid> {
    spec.validate()?;
    let values: Vec<Option<f64>> = spec
        .points()
        .map(|p| match quantity {
            FieldQuantity::Pressure => pressure_at(medium, source, p, time).ok(),
            FieldQuantity::Geometric => dipole_geometric_factor(source, p).ok(),
        })
        .collect();
    if values.iter().all(Option::is_none) {
        return Err(Error::EmptyGrid);
    }
    let normalization = values.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(FieldGrid {
        spec: *spec,
        quantity,
        values,
        normalization,
    })
}
