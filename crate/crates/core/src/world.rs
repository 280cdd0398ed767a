//! The hidden circle, measurement locations, and sensor models.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of intensity bins used for continuous (disk) sensor predictions.
pub const DISK_BINS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("invalid circle: {0}")]
    InvalidCircle(String),
    #[error("invalid sensor: {0}")]
    InvalidSensor(String),
    #[error("invalid field bounds: {0}")]
    InvalidField(String),
}

/// Axis-aligned rectangle of admissible positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Field {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Field {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, WorldError> {
        let field = Self {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        field.validate()?;
        Ok(field)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(WorldError::InvalidField(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }
}

impl Default for Field {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 100.0,
            y_min: 0.0,
            y_max: 100.0,
        }
    }
}

/// One hypothesis for the hidden circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleState {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

impl CircleState {
    pub fn new(x: f64, y: f64, r: f64) -> Result<Self, WorldError> {
        if !(x.is_finite() && y.is_finite() && r.is_finite()) {
            return Err(WorldError::InvalidCircle(format!("({x}, {y}, {r})")));
        }
        if r <= 0.0 {
            return Err(WorldError::InvalidCircle(format!(
                "radius {r} must be positive"
            )));
        }
        Ok(Self { x, y, r })
    }

    pub fn center_distance(&self, other: &CircleState) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A candidate sensing point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementLocation {
    pub x: f64,
    pub y: f64,
}

impl MeasurementLocation {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// A reading in `[0, 1]`: 0 is black, 1 is white.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Intensity(f64);

impl Intensity {
    pub const BLACK: Intensity = Intensity(0.0);
    pub const WHITE: Intensity = Intensity(1.0);

    /// Clamps into `[0, 1]`; NaN maps to black.
    pub fn new(value: f64) -> Self {
        if value.is_nan() {
            return Self::BLACK;
        }
        Self(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_white(self) -> bool {
        self.0 >= 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SensorModel {
    /// Reads white iff the point lies inside the circle; each reading is
    /// flipped with probability `flip`.
    IdealPoint { flip: f64 },
    /// Reads the fraction of a disk of `radius` covered by the circle, plus
    /// Gaussian noise with standard deviation `sigma`.
    DiskFootprint { radius: f64, sigma: f64 },
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel::IdealPoint { flip: 0.02 }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<(), WorldError> {
        match *self {
            SensorModel::IdealPoint { flip } => {
                if !(0.0..0.5).contains(&flip) {
                    return Err(WorldError::InvalidSensor(format!(
                        "flip probability {flip} outside [0, 0.5)"
                    )));
                }
            }
            SensorModel::DiskFootprint { radius, sigma } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(WorldError::InvalidSensor(format!(
                        "footprint radius {radius} must be positive"
                    )));
                }
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(WorldError::InvalidSensor(format!(
                        "noise sigma {sigma} must be non-negative"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of histogram bins for predicted readings.
    pub fn bin_count(&self) -> usize {
        match self {
            SensorModel::IdealPoint { .. } => 2,
            SensorModel::DiskFootprint { .. } => DISK_BINS,
        }
    }

    /// Histogram bin of a predicted reading. Bin 0 is black.
    pub fn bin(&self, intensity: Intensity) -> usize {
        match self {
            SensorModel::IdealPoint { .. } => usize::from(intensity.is_white()),
            SensorModel::DiskFootprint { .. } => {
                ((intensity.value() * DISK_BINS as f64) as usize).min(DISK_BINS - 1)
            }
        }
    }
}

/// Whether `m` lies inside or on the boundary of `c`.
pub fn contains(c: &CircleState, m: &MeasurementLocation) -> bool {
    let dx = m.x - c.x;
    let dy = m.y - c.y;
    dx * dx + dy * dy <= c.r * c.r
}

/// Area of the intersection of two disks with radii `r1`, `r2` whose centers
/// are `d` apart.
pub fn disk_overlap_area(r1: f64, r2: f64, d: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    let small = r1.min(r2);
    if d <= (r1 - r2).abs() {
        return PI * small * small;
    }
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1))
        .clamp(-1.0, 1.0)
        .acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2))
        .clamp(-1.0, 1.0)
        .acos();
    let k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
    (r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * k.max(0.0).sqrt()).max(0.0)
}

/// Noiseless reading predicted for circle `c` measured at `m`.
pub fn predict(c: &CircleState, m: &MeasurementLocation, s: &SensorModel) -> Intensity {
    match *s {
        SensorModel::IdealPoint { .. } => {
            if contains(c, m) {
                Intensity::WHITE
            } else {
                Intensity::BLACK
            }
        }
        SensorModel::DiskFootprint { radius, .. } => {
            let d = (m.x - c.x).hypot(m.y - c.y);
            let area = disk_overlap_area(c.r, radius, d);
            Intensity::new(area / (PI * radius * radius))
        }
    }
}

/// Noisy reading of the true circle at `m`.
pub fn simulate_measurement<R: Rng + ?Sized>(
    truth: &CircleState,
    m: &MeasurementLocation,
    s: &SensorModel,
    rng: &mut R,
) -> Intensity {
    let clean = predict(truth, m, s);
    match *s {
        SensorModel::IdealPoint { flip } => {
            if flip > 0.0 && rng.random::<f64>() < flip {
                Intensity::new(1.0 - clean.value())
            } else {
                clean
            }
        }
        SensorModel::DiskFootprint { sigma, .. } => {
            if sigma == 0.0 {
                return clean;
            }
            let noise = Normal::new(0.0, sigma).expect("sigma validated non-negative");
            Intensity::new(clean.value() + noise.sample(rng))
        }
    }
}
