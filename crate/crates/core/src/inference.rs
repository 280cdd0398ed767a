//! Grid posterior over circle hypotheses and its Bayesian update.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use thiserror::Error;

use crate::inquiry::{entropy_bits, SUM_TOLERANCE};
use crate::world::{contains, predict, CircleState, Intensity, MeasurementLocation, SensorModel};

/// Readings closer than this to a prediction count as equal for a noiseless
/// continuous sensor.
const EXACT_MATCH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("invalid state grid: {0}")]
    InvalidGrid(String),
    #[error("invalid posterior: {0}")]
    InvalidPosterior(String),
    #[error("observation {obs} at ({x}, {y}) is impossible under every hypothesis")]
    Contradiction { x: f64, y: f64, obs: f64 },
}

/// `count` evenly spaced values from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let step = (max - min) / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i == count - 1 {
                        max
                    } else {
                        min + step * i as f64
                    }
                })
                .collect()
        }
    }
}

fn strictly_increasing(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite()) && values.windows(2).all(|w| w[0] < w[1])
}

/// Cartesian product of center and radius values.
///
/// States are indexed x-major: `(ix * ys.len() + iy) * rs.len() + ir`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    rs: Vec<f64>,
    states: Vec<CircleState>,
}

impl StateGrid {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, rs: Vec<f64>) -> Result<Self, InferenceError> {
        for (name, axis) in [("x", &xs), ("y", &ys), ("r", &rs)] {
            if axis.is_empty() {
                return Err(InferenceError::InvalidGrid(format!("{name} axis is empty")));
            }
            if !strictly_increasing(axis) {
                return Err(InferenceError::InvalidGrid(format!(
                    "{name} axis is not strictly increasing"
                )));
            }
        }
        if rs[0] <= 0.0 {
            return Err(InferenceError::InvalidGrid(format!(
                "radius {} must be positive",
                rs[0]
            )));
        }
        let mut states = Vec::with_capacity(xs.len() * ys.len() * rs.len());
        for &x in &xs {
            for &y in &ys {
                for &r in &rs {
                    states.push(CircleState { x, y, r });
                }
            }
        }
        Ok(Self { xs, ys, rs, states })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn rs(&self) -> &[f64] {
        &self.rs
    }

    pub fn states(&self) -> &[CircleState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of the grid state equal to `c`, if any.
    pub fn index_of(&self, c: &CircleState) -> Option<usize> {
        let ix = self.xs.iter().position(|&v| v == c.x)?;
        let iy = self.ys.iter().position(|&v| v == c.y)?;
        let ir = self.rs.iter().position(|&v| v == c.r)?;
        Some((ix * self.ys.len() + iy) * self.rs.len() + ir)
    }
}

/// Probability mass over the states of a [`StateGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior {
    grid: Arc<StateGrid>,
    mass: Vec<f64>,
}

impl GridPosterior {
    pub fn new(grid: Arc<StateGrid>, mass: Vec<f64>) -> Result<Self, InferenceError> {
        if mass.len() != grid.len() {
            return Err(InferenceError::InvalidPosterior(format!(
                "{} masses for {} states",
                mass.len(),
                grid.len()
            )));
        }
        if mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(InferenceError::InvalidPosterior(
                "masses must be finite and non-negative".into(),
            ));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(InferenceError::InvalidPosterior(format!(
                "masses sum to {total}"
            )));
        }
        Ok(Self { grid, mass })
    }

    /// Renormalizes non-negative weights.
    pub fn from_weights(grid: Arc<StateGrid>, weights: Vec<f64>) -> Result<Self, InferenceError> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(InferenceError::InvalidPosterior(format!(
                "weights sum to {total}"
            )));
        }
        Self::new(grid, weights.into_iter().map(|w| w / total).collect())
    }

    /// All mass on one state.
    pub fn delta(grid: Arc<StateGrid>, index: usize) -> Result<Self, InferenceError> {
        let mut mass = vec![0.0; grid.len()];
        *mass.get_mut(index).ok_or_else(|| {
            InferenceError::InvalidPosterior(format!("state index {index} out of range"))
        })? = 1.0;
        Self::new(grid, mass)
    }

    pub fn grid(&self) -> &StateGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> Arc<StateGrid> {
        Arc::clone(&self.grid)
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// `(state, mass)` pairs with positive mass, in grid order.
    pub fn support(&self) -> impl Iterator<Item = (&CircleState, f64)> + '_ {
        self.grid
            .states()
            .iter()
            .zip(self.mass.iter().copied())
            .filter(|(_, m)| *m > 0.0)
    }

    pub fn mass_of(&self, c: &CircleState) -> Option<f64> {
        self.grid.index_of(c).map(|i| self.mass[i])
    }

    /// One row per state: `x_o,y_o,r_o,mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_o,y_o,r_o,mass\n");
        for (s, m) in self.grid.states().iter().zip(&self.mass) {
            let _ = writeln!(out, "{},{},{},{}", s.x, s.y, s.r, m);
        }
        out
    }
}

/// Uniform mass over every grid state.
pub fn init_prior(grid: Arc<StateGrid>) -> GridPosterior {
    let n = grid.len();
    GridPosterior {
        grid,
        mass: vec![1.0 / n as f64; n],
    }
}

/// Probability (or density) of reading `obs` at `m` when the circle is `c`.
pub fn likelihood(
    c: &CircleState,
    m: &MeasurementLocation,
    obs: Intensity,
    s: &SensorModel,
) -> f64 {
    match *s {
        SensorModel::IdealPoint { flip } => {
            if contains(c, m) == obs.is_white() {
                1.0 - flip
            } else {
                flip
            }
        }
        SensorModel::DiskFootprint { sigma, .. } => {
            let expected = predict(c, m, s).value();
            let o = obs.value();
            if sigma == 0.0 {
                return if (o - expected).abs() <= EXACT_MATCH_TOLERANCE {
                    1.0
                } else {
                    0.0
                };
            }
            let noise = Normal::new(expected, sigma).expect("sigma validated positive");
            // Readings are clamped, so the tails are lumped onto the endpoints.
            if o <= 0.0 {
                noise.cdf(0.0)
            } else if o >= 1.0 {
                noise.sf(1.0)
            } else {
                noise.pdf(o)
            }
        }
    }
}

/// Posterior after observing `obs` at `m`.
pub fn bayes_update(
    p: &GridPosterior,
    m: &MeasurementLocation,
    obs: Intensity,
    s: &SensorModel,
) -> Result<GridPosterior, InferenceError> {
    let weights: Vec<f64> = p
        .grid
        .states()
        .iter()
        .zip(&p.mass)
        .map(|(c, &w)| {
            if w > 0.0 {
                w * likelihood(c, m, obs, s)
            } else {
                0.0
            }
        })
        .collect();
    let evidence: f64 = weights.iter().sum();
    if !(evidence.is_finite() && evidence > 0.0) {
        return Err(InferenceError::Contradiction {
            x: m.x,
            y: m.y,
            obs: obs.value(),
        });
    }
    Ok(GridPosterior {
        grid: Arc::clone(&p.grid),
        mass: weights.into_iter().map(|w| w / evidence).collect(),
    })
}

/// Entropy of the posterior mass in bits.
pub fn posterior_entropy(p: &GridPosterior) -> f64 {
    entropy_bits(&p.mass)
}

/// `n` independent draws proportional to mass.
pub fn draw_samples<R: Rng + ?Sized>(p: &GridPosterior, n: usize, rng: &mut R) -> Vec<CircleState> {
    let dist = WeightedIndex::new(&p.mass).expect("posterior mass is normalized");
    let states = p.grid.states();
    (0..n).map(|_| states[dist.sample(rng)]).collect()
}

/// State of greatest mass; the lowest grid index wins ties.
pub fn map_estimate(p: &GridPosterior) -> CircleState {
    let mut best = 0;
    for (i, &m) in p.mass.iter().enumerate() {
        if m > p.mass[best] {
            best = i;
        }
    }
    p.grid.states()[best]
}
