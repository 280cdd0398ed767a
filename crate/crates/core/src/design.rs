//! Predicted-outcome distributions, entropy maps, and pair selection.
//!
//! Every quantity here is computed from a weighted set of circle hypotheses:
//! either the posterior support (exact mode) or `n` posterior draws with
//! weight `1/n` each (sampled mode). A measurement location's question is the
//! partition of those hypotheses by predicted reading; two locations jointly
//! partition them by the pair of readings, and the relevance of the joint
//! question is the entropy of that finer partition.

use std::cell::OnceCell;
use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::{draw_samples, GridPosterior};
use crate::inquiry::entropy_bits;
use crate::world::{predict, CircleState, MeasurementLocation, SensorModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("invalid map grid: {0}")]
    InvalidMapGrid(String),
    #[error("pair search needs at least one restart")]
    NoRestarts,
    #[error("sampled prediction needs at least one sample")]
    NoSamples,
}

/// How predicted-outcome histograms are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PredictionMode {
    /// Weight every grid state by its posterior mass.
    Exact,
    /// Histogram `samples` posterior draws, seeded by `seed`.
    Sampled { samples: usize, seed: u64 },
}

impl PredictionMode {
    /// Same mode with the sampling seed replaced; exact mode is unchanged.
    pub fn reseeded(self, seed: u64) -> Self {
        match self {
            PredictionMode::Exact => PredictionMode::Exact,
            PredictionMode::Sampled { samples, .. } => PredictionMode::Sampled { samples, seed },
        }
    }
}

/// Rectangular lattice of candidate measurement locations.
///
/// Locations are indexed row by row from the lowest y: `iy * xs.len() + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl MapGrid {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, DesignError> {
        for (name, axis) in [("x", &xs), ("y", &ys)] {
            if axis.is_empty() {
                return Err(DesignError::InvalidMapGrid(format!("{name} axis is empty")));
            }
            if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DesignError::InvalidMapGrid(format!(
                    "{name} axis is not strictly increasing"
                )));
            }
        }
        Ok(Self { xs, ys })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn width(&self) -> usize {
        self.xs.len()
    }

    pub fn height(&self) -> usize {
        self.ys.len()
    }

    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.xs.len() + ix
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.xs.len(), index / self.xs.len())
    }

    pub fn location(&self, index: usize) -> MeasurementLocation {
        let (ix, iy) = self.coords(index);
        MeasurementLocation::new(self.xs[ix], self.ys[iy])
    }

    pub fn locations(&self) -> Vec<MeasurementLocation> {
        (0..self.len()).map(|i| self.location(i)).collect()
    }

    /// Index of the lattice point equal to `m`, if any.
    pub fn index_of(&self, m: &MeasurementLocation) -> Option<usize> {
        let ix = self.xs.iter().position(|&v| v == m.x)?;
        let iy = self.ys.iter().position(|&v| v == m.y)?;
        Some(self.index(ix, iy))
    }

    /// Lattice neighbors of `index`, including diagonals, in ascending index order.
    pub fn neighbors(&self, index: usize) -> Vec<usize> {
        let (ix, iy) = self.coords(index);
        let mut out = Vec::with_capacity(8);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let nx = ix as i64 + dx;
                let ny = iy as i64 + dy;
                if nx >= 0
                    && ny >= 0
                    && (nx as usize) < self.width()
                    && (ny as usize) < self.height()
                {
                    out.push(self.index(nx as usize, ny as usize));
                }
            }
        }
        out
    }
}

/// Probability of each predicted-reading bin at one location.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    bins: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.bins)
    }
}

/// Probability of each pair of predicted-reading bins at two locations.
///
/// Rows index the first location's bin, columns the second's. For the ideal
/// sensor (bin 0 black, bin 1 white) the cells are `d = (0,0)`, `c = (0,1)`,
/// `b = (1,0)` and `a = (1,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcomeDistribution {
    bins: usize,
    table: Vec<f64>,
}

impl JointOutcomeDistribution {
    pub fn bin_count(&self) -> usize {
        self.bins
    }

    pub fn get(&self, first: usize, second: usize) -> f64 {
        self.table[first * self.bins + second]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn first_marginal(&self) -> Vec<f64> {
        self.table
            .chunks(self.bins)
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn second_marginal(&self) -> Vec<f64> {
        (0..self.bins)
            .map(|j| (0..self.bins).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// `[Pr(a), Pr(b), Pr(c), Pr(d)]` for a two-bin sensor: white/white,
    /// white/black, black/white, black/black.
    pub fn quadrants(&self) -> Option<[f64; 4]> {
        (self.bins == 2).then(|| {
            [
                self.get(1, 1),
                self.get(1, 0),
                self.get(0, 1),
                self.get(0, 0),
            ]
        })
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.table)
    }
}

/// A value per map-grid location.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyMap {
    grid: MapGrid,
    values: Vec<f64>,
}

impl EntropyMap {
    pub fn new(grid: MapGrid, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &MapGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Lowest index holding the largest value.
    pub fn argmax(&self) -> usize {
        first_argmax(&self.values)
    }

    /// `x,y,value` per location in index order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let m = self.grid.location(i);
            let _ = writeln!(out, "{},{},{}", m.x, m.y, v);
        }
        out
    }

    /// Binary greyscale PGM; each pixel is `round(255 * value / max)` and the
    /// first row is the largest y.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (w, h) = (self.grid.width(), self.grid.height());
        let max = self.max();
        let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
        out.reserve(w * h);
        for iy in (0..h).rev() {
            for ix in 0..w {
                out.push(pgm_level(self.values[self.grid.index(ix, iy)], max));
            }
        }
        out
    }
}

/// Grey level of `value` on a map whose largest value is `max`.
pub fn pgm_level(value: f64, max: f64) -> u8 {
    if max > 0.0 {
        (255.0 * value / max).round().clamp(0.0, 255.0) as u8
    } else {
        0
    }
}

fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Weighted circle hypotheses that predictions are averaged over.
#[derive(Debug, Clone)]
pub struct Hypotheses {
    states: Vec<CircleState>,
    weights: Vec<f64>,
}

impl Hypotheses {
    /// Explicit hypotheses; weights are expected to sum to one.
    pub fn new(states: Vec<CircleState>, weights: Vec<f64>) -> Self {
        assert_eq!(states.len(), weights.len());
        Self { states, weights }
    }

    pub fn from_posterior(p: &GridPosterior, mode: PredictionMode) -> Result<Self, DesignError> {
        match mode {
            PredictionMode::Exact => {
                let (states, weights) = p.support().map(|(c, w)| (*c, w)).unzip();
                Ok(Self { states, weights })
            }
            PredictionMode::Sampled { samples, seed } => {
                if samples == 0 {
                    return Err(DesignError::NoSamples);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let states = draw_samples(p, samples, &mut rng);
                Ok(Self {
                    weights: vec![1.0 / samples as f64; samples],
                    states,
                })
            }
        }
    }

    pub fn states(&self) -> &[CircleState] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn outcome(&self, m: &MeasurementLocation, s: &SensorModel) -> OutcomeDistribution {
        let mut bins = vec![0.0; s.bin_count()];
        for (c, &w) in self.states.iter().zip(&self.weights) {
            bins[s.bin(predict(c, m, s))] += w;
        }
        OutcomeDistribution { bins }
    }

    pub fn joint_outcome(
        &self,
        m1: &MeasurementLocation,
        m2: &MeasurementLocation,
        s: &SensorModel,
    ) -> JointOutcomeDistribution {
        let bins = s.bin_count();
        let mut table = vec![0.0; bins * bins];
        for (c, &w) in self.states.iter().zip(&self.weights) {
            table[s.bin(predict(c, m1, s)) * bins + s.bin(predict(c, m2, s))] += w;
        }
        JointOutcomeDistribution { bins, table }
    }
}

/// Predicted bin of every hypothesis at every map location.
#[derive(Debug, Clone)]
struct PredictionTable {
    weights: Vec<f64>,
    total: f64,
    bins: usize,
    /// `codes[loc * n_states + state]`
    codes: Vec<u8>,
    n_states: usize,
    n_locs: usize,
}

impl PredictionTable {
    fn new(h: &Hypotheses, s: &SensorModel, locations: &[MeasurementLocation]) -> Self {
        let n_states = h.states.len();
        let mut codes = Vec::with_capacity(n_states * locations.len());
        for m in locations {
            codes.extend(h.states.iter().map(|c| s.bin(predict(c, m, s)) as u8));
        }
        Self {
            total: h.weights.iter().sum(),
            weights: h.weights.clone(),
            bins: s.bin_count(),
            codes,
            n_states,
            n_locs: locations.len(),
        }
    }

    fn row(&self, loc: usize) -> &[u8] {
        &self.codes[loc * self.n_states..(loc + 1) * self.n_states]
    }

    fn outcome(&self, loc: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.bins];
        for (&code, &w) in self.row(loc).iter().zip(&self.weights) {
            out[code as usize] += w;
        }
        out
    }

    fn joint(&self, a: usize, b: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.bins * self.bins];
        for ((&ca, &cb), &w) in self.row(a).iter().zip(self.row(b)).zip(&self.weights) {
            out[ca as usize * self.bins + cb as usize] += w;
        }
        out
    }

    fn is_white(&self, loc: usize, state: usize) -> bool {
        self.codes[loc * self.n_states + state] == 1
    }

    /// `g[i * L + j]` = weight of hypotheses reading white at both `i` and `j`.
    /// Two-bin sensors only.
    fn white_gram(&self) -> Vec<f64> {
        let groups = self.weight_groups();
        let l = self.n_locs;
        let words: usize = groups.iter().map(|(_, m)| m.len().div_ceil(64)).sum();
        let bitset_cost = (l * l / 2) as f64 * words as f64;
        let sparse_cost: f64 = (0..self.n_states)
            .map(|s| {
                let k = (0..l).filter(|&loc| self.is_white(loc, s)).count();
                (k * k / 2) as f64
            })
            .sum();
        if bitset_cost < sparse_cost {
            self.gram_by_bitsets(&groups)
        } else {
            self.gram_by_lists()
        }
    }

    /// Hypotheses grouped by identical weight, in order of first appearance.
    fn weight_groups(&self) -> Vec<(f64, Vec<usize>)> {
        let mut index: HashMap<u64, usize> = HashMap::new();
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for (s, &w) in self.weights.iter().enumerate() {
            let g = *index.entry(w.to_bits()).or_insert_with(|| {
                groups.push((w, Vec::new()));
                groups.len() - 1
            });
            groups[g].1.push(s);
        }
        groups
    }

    /// Counts co-white hypotheses with popcounts, one bitset per weight group.
    fn gram_by_bitsets(&self, groups: &[(f64, Vec<usize>)]) -> Vec<f64> {
        let l = self.n_locs;
        let mut gram = vec![0.0; l * l];
        for (w, states) in groups {
            let nw = states.len().div_ceil(64);
            let mut bits = vec![0u64; l * nw];
            for loc in 0..l {
                for (k, &s) in states.iter().enumerate() {
                    if self.is_white(loc, s) {
                        bits[loc * nw + k / 64] |= 1 << (k % 64);
                    }
                }
            }
            for i in 0..l {
                let bi = &bits[i * nw..(i + 1) * nw];
                if bi.iter().all(|&x| x == 0) {
                    continue;
                }
                for j in i..l {
                    let bj = &bits[j * nw..(j + 1) * nw];
                    let count: u32 = bi.iter().zip(bj).map(|(x, y)| (x & y).count_ones()).sum();
                    if count > 0 {
                        gram[i * l + j] += w * f64::from(count);
                    }
                }
            }
        }
        mirror_upper(&mut gram, l);
        gram
    }

    /// Adds each hypothesis' weight to every pair of locations it covers.
    fn gram_by_lists(&self) -> Vec<f64> {
        let l = self.n_locs;
        let mut gram = vec![0.0; l * l];
        let mut white = Vec::with_capacity(l);
        for s in 0..self.n_states {
            white.clear();
            white.extend((0..l).filter(|&loc| self.is_white(loc, s)));
            let w = self.weights[s];
            for (k, &i) in white.iter().enumerate() {
                for &j in &white[k..] {
                    gram[i * l + j] += w;
                }
            }
        }
        mirror_upper(&mut gram, l);
        gram
    }
}

fn mirror_upper(gram: &mut [f64], l: usize) {
    for i in 0..l {
        for j in 0..i {
            gram[i * l + j] = gram[j * l + i];
        }
    }
}

/// Entropy of the four-way partition given the white/white weight `both`
/// and the white weights `first`, `second` out of `total`.
fn quadrant_entropy(both: f64, first: f64, second: f64, total: f64) -> f64 {
    let cells = [
        both,
        (first - both).max(0.0),
        (second - both).max(0.0),
        (total - first - second + both).max(0.0),
    ];
    entropy_bits(&cells)
}

/// A location pair chosen by one of the selection policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedPair {
    pub first: usize,
    pub second: usize,
    pub first_location: MeasurementLocation,
    pub second_location: MeasurementLocation,
    /// Joint entropy of the pair as scored by the selecting policy.
    pub joint_entropy: f64,
}

/// Predictions for every map location under one posterior snapshot, shared by
/// the map and selection operations.
pub struct CandidateSet<'a> {
    map: &'a MapGrid,
    sensor: SensorModel,
    hypotheses: Hypotheses,
    table: PredictionTable,
    gram: OnceCell<Vec<f64>>,
}

impl<'a> CandidateSet<'a> {
    pub fn new(
        p: &GridPosterior,
        s: &SensorModel,
        map: &'a MapGrid,
        mode: PredictionMode,
    ) -> Result<Self, DesignError> {
        Ok(Self::from_hypotheses(
            Hypotheses::from_posterior(p, mode)?,
            s,
            map,
        ))
    }

    pub fn from_hypotheses(hypotheses: Hypotheses, s: &SensorModel, map: &'a MapGrid) -> Self {
        let table = PredictionTable::new(&hypotheses, s, &map.locations());
        Self {
            map,
            sensor: *s,
            hypotheses,
            table,
            gram: OnceCell::new(),
        }
    }

    pub fn map(&self) -> &MapGrid {
        self.map
    }

    pub fn hypotheses(&self) -> &Hypotheses {
        &self.hypotheses
    }

    pub fn sensor(&self) -> &SensorModel {
        &self.sensor
    }

    pub fn entropy(&self, loc: usize) -> f64 {
        entropy_bits(&self.table.outcome(loc))
    }

    pub fn entropy_map(&self) -> EntropyMap {
        let values = (0..self.map.len()).map(|i| self.entropy(i)).collect();
        EntropyMap::new(self.map.clone(), values)
    }

    /// Joint entropy computed directly from the per-hypothesis predictions.
    pub fn direct_joint_entropy(&self, a: usize, b: usize) -> f64 {
        entropy_bits(&self.table.joint(a, b))
    }

    /// Joint entropy as used by the exhaustive and greedy policies. Two-bin
    /// sensors read it from a precomputed white/white weight matrix.
    pub fn joint_entropy(&self, a: usize, b: usize) -> f64 {
        if self.table.bins != 2 {
            return self.direct_joint_entropy(a, b);
        }
        let gram = self.gram.get_or_init(|| self.table.white_gram());
        let l = self.table.n_locs;
        quadrant_entropy(
            gram[a * l + b],
            gram[a * l + a],
            gram[b * l + b],
            self.table.total,
        )
    }

    fn pair(&self, first: usize, second: usize, joint_entropy: f64) -> SelectedPair {
        SelectedPair {
            first,
            second,
            first_location: self.map.location(first),
            second_location: self.map.location(second),
            joint_entropy,
        }
    }

    /// Both agents take the marginal-entropy peak; a tie sends the second agent
    /// to the next tied location.
    pub fn select_independent(&self) -> SelectedPair {
        let map = self.entropy_map();
        let max = map.max();
        let mut peaks = map
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == max)
            .map(|(i, _)| i);
        let first = peaks.next().unwrap_or(0);
        let second = peaks.next().unwrap_or(first);
        self.pair(first, second, self.joint_entropy(first, second))
    }

    /// First location at the entropy peak; second maximizes joint entropy
    /// with the first held fixed.
    pub fn select_sequential_greedy(&self) -> SelectedPair {
        let first = self.entropy_map().argmax();
        let mut second = 0;
        let mut best = f64::NEG_INFINITY;
        for j in 0..self.map.len() {
            let v = self.joint_entropy(first, j);
            if v > best {
                best = v;
                second = j;
            }
        }
        self.pair(first, second, best)
    }

    /// Best ordered pair over the whole lattice; lexicographically first on ties.
    pub fn select_joint_exhaustive(&self) -> SelectedPair {
        let l = self.map.len();
        let (mut bi, mut bj, mut best) = (0, 0, f64::NEG_INFINITY);
        // Scores are symmetric, so the first maximum always has i <= j.
        for i in 0..l {
            for j in i..l {
                let v = self.joint_entropy(i, j);
                if v > best {
                    (bi, bj, best) = (i, j, v);
                }
            }
        }
        self.pair(bi, bj, best)
    }

    /// Multi-start steepest ascent over location pairs. Each step considers
    /// moving either location to one of its lattice neighbors and stops when
    /// no move increases the joint entropy.
    pub fn hill_climb_pair_search(
        &self,
        restarts: usize,
        seed: u64,
    ) -> Result<SelectedPair, DesignError> {
        if restarts == 0 {
            return Err(DesignError::NoRestarts);
        }
        let l = self.map.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
        let mut score = |a: usize, b: usize| {
            let key = if a <= b { (a, b) } else { (b, a) };
            *cache
                .entry(key)
                .or_insert_with(|| self.direct_joint_entropy(key.0, key.1))
        };

        let mut best: Option<(f64, usize, usize)> = None;
        for _ in 0..restarts {
            let (mut a, mut b) = (rng.random_range(0..l), rng.random_range(0..l));
            let mut current = score(a, b);
            loop {
                let mut step: Option<(f64, usize, usize)> = None;
                let moves = self
                    .map
                    .neighbors(a)
                    .into_iter()
                    .map(|na| (na, b))
                    .chain(self.map.neighbors(b).into_iter().map(|nb| (a, nb)));
                for (na, nb) in moves {
                    let v = score(na, nb);
                    if v > current && step.is_none_or(|(sv, _, _)| v > sv) {
                        step = Some((v, na, nb));
                    }
                }
                match step {
                    Some((v, na, nb)) => (current, a, b) = (v, na, nb),
                    None => break,
                }
            }
            let better = match best {
                None => true,
                Some((bv, ba, bb)) => current > bv || (current == bv && (a, b) < (ba, bb)),
            };
            if better {
                best = Some((current, a, b));
            }
        }
        let (v, a, b) = best.expect("at least one restart");
        Ok(self.pair(a, b, v))
    }
}

/// Predicted-reading histogram at `m`.
pub fn outcome_distribution(
    p: &GridPosterior,
    m: &MeasurementLocation,
    s: &SensorModel,
    mode: PredictionMode,
) -> Result<OutcomeDistribution, DesignError> {
    Ok(Hypotheses::from_posterior(p, mode)?.outcome(m, s))
}

/// Predicted histogram of reading pairs at `m1` and `m2`.
pub fn joint_outcome_distribution(
    p: &GridPosterior,
    m1: &MeasurementLocation,
    m2: &MeasurementLocation,
    s: &SensorModel,
    mode: PredictionMode,
) -> Result<JointOutcomeDistribution, DesignError> {
    Ok(Hypotheses::from_posterior(p, mode)?.joint_outcome(m1, m2, s))
}

pub fn entropy_at(
    p: &GridPosterior,
    m: &MeasurementLocation,
    s: &SensorModel,
    mode: PredictionMode,
) -> Result<f64, DesignError> {
    Ok(outcome_distribution(p, m, s, mode)?.entropy())
}

pub fn joint_entropy_at(
    p: &GridPosterior,
    m1: &MeasurementLocation,
    m2: &MeasurementLocation,
    s: &SensorModel,
    mode: PredictionMode,
) -> Result<f64, DesignError> {
    Ok(joint_outcome_distribution(p, m1, m2, s, mode)?.entropy())
}

/// Entropy of each location plus the joint entropy and mutual information of
/// the pair, all from one set of hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairInformation {
    pub first_entropy: f64,
    pub second_entropy: f64,
    pub joint_entropy: f64,
    pub mutual_information: f64,
}

impl Hypotheses {
    pub fn pair_information(
        &self,
        m1: &MeasurementLocation,
        m2: &MeasurementLocation,
        s: &SensorModel,
    ) -> PairInformation {
        let first_entropy = self.outcome(m1, s).entropy();
        let second_entropy = self.outcome(m2, s).entropy();
        let joint_entropy = self.joint_outcome(m1, m2, s).entropy();
        PairInformation {
            first_entropy,
            second_entropy,
            joint_entropy,
            mutual_information: (first_entropy + second_entropy - joint_entropy).max(0.0),
        }
    }
}

/// `H(m1) + H(m2) - H(m1, m2)`, clamped at zero.
pub fn mutual_information_at(
    p: &GridPosterior,
    m1: &MeasurementLocation,
    m2: &MeasurementLocation,
    s: &SensorModel,
    mode: PredictionMode,
) -> Result<f64, DesignError> {
    Ok(Hypotheses::from_posterior(p, mode)?
        .pair_information(m1, m2, s)
        .mutual_information)
}

pub fn entropy_map(
    p: &GridPosterior,
    s: &SensorModel,
    map: &MapGrid,
    mode: PredictionMode,
) -> Result<EntropyMap, DesignError> {
    let h = Hypotheses::from_posterior(p, mode)?;
    let values = map
        .locations()
        .iter()
        .map(|m| h.outcome(m, s).entropy())
        .collect();
    Ok(EntropyMap::new(map.clone(), values))
}

/// Joint entropy of `fixed` with every map location.
pub fn joint_entropy_map(
    p: &GridPosterior,
    s: &SensorModel,
    fixed: &MeasurementLocation,
    map: &MapGrid,
    mode: PredictionMode,
) -> Result<EntropyMap, DesignError> {
    let h = Hypotheses::from_posterior(p, mode)?;
    let values = map
        .locations()
        .iter()
        .map(|m| h.joint_outcome(fixed, m, s).entropy())
        .collect();
    Ok(EntropyMap::new(map.clone(), values))
}

/// Mutual information of `fixed` with every map location.
pub fn mutual_information_map(
    p: &GridPosterior,
    s: &SensorModel,
    fixed: &MeasurementLocation,
    map: &MapGrid,
    mode: PredictionMode,
) -> Result<EntropyMap, DesignError> {
    let h = Hypotheses::from_posterior(p, mode)?;
    let values = map
        .locations()
        .iter()
        .map(|m| h.pair_information(fixed, m, s).mutual_information)
        .collect();
    Ok(EntropyMap::new(map.clone(), values))
}

pub fn select_independent(
    p: &GridPosterior,
    s: &SensorModel,
    map: &MapGrid,
    mode: PredictionMode,
) -> Result<SelectedPair, DesignError> {
    Ok(CandidateSet::new(p, s, map, mode)?.select_independent())
}

pub fn select_sequential_greedy(
    p: &GridPosterior,
    s: &SensorModel,
    map: &MapGrid,
    mode: PredictionMode,
) -> Result<SelectedPair, DesignError> {
    Ok(CandidateSet::new(p, s, map, mode)?.select_sequential_greedy())
}

pub fn select_joint_exhaustive(
    p: &GridPosterior,
    s: &SensorModel,
    map: &MapGrid,
    mode: PredictionMode,
) -> Result<SelectedPair, DesignError> {
    Ok(CandidateSet::new(p, s, map, mode)?.select_joint_exhaustive())
}

pub fn hill_climb_pair_search(
    p: &GridPosterior,
    s: &SensorModel,
    map: &MapGrid,
    mode: PredictionMode,
    restarts: usize,
    seed: u64,
) -> Result<SelectedPair, DesignError> {
    CandidateSet::new(p, s, map, mode)?.hill_climb_pair_search(restarts, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::inference::{init_prior, StateGrid};

    const IDEAL: SensorModel = SensorModel::IdealPoint { flip: 0.0 };

    fn loc(x: f64, y: f64) -> MeasurementLocation {
        MeasurementLocation::new(x, y)
    }

    fn circle(x: f64, y: f64, r: f64) -> CircleState {
        CircleState { x, y, r }
    }

    /// Four circles realizing each reading pair at (0,0) and (10,0):
    /// both white, first only, second only, neither.
    fn four_circles() -> Vec<CircleState> {
        vec![
            circle(5.0, 0.0, 6.0),
            circle(-3.0, 0.0, 4.0),
            circle(13.0, 0.0, 4.0),
            circle(5.0, 20.0, 2.0),
        ]
    }

    /// The four circles as positive-mass states of a product grid.
    fn four_circle_posterior(weights: [f64; 4]) -> GridPosterior {
        let grid = Arc::new(
            StateGrid::new(vec![-3.0, 5.0, 13.0], vec![0.0, 20.0], vec![2.0, 4.0, 6.0]).unwrap(),
        );
        let mut mass = vec![0.0; grid.len()];
        for (c, w) in four_circles().iter().zip(weights) {
            mass[grid.index_of(c).unwrap()] = w;
        }
        GridPosterior::new(grid, mass).unwrap()
    }

    fn two_point_map() -> MapGrid {
        MapGrid::new(vec![0.0, 10.0], vec![0.0]).unwrap()
    }

    #[test]
    fn outcome_examples() {
        let p = four_circle_posterior([1.0, 0.0, 0.0, 0.0]);
        let d = outcome_distribution(&p, &loc(0.0, 0.0), &IDEAL, PredictionMode::Exact).unwrap();
        assert_eq!(d.bins(), &[0.0, 1.0]);

        let p = four_circle_posterior([0.25; 4]);
        let d = outcome_distribution(&p, &loc(0.0, 0.0), &IDEAL, PredictionMode::Exact).unwrap();
        assert_eq!(d.bins(), &[0.5, 0.5]);
        assert_eq!(d.entropy(), 1.0);
    }

    #[test]
    fn forty_five_sample_histogram() {
        let inside = circle(0.0, 0.0, 5.0);
        let outside = circle(30.0, 0.0, 5.0);
        let states: Vec<_> = (0..45)
            .map(|i| if i < 30 { inside } else { outside })
            .collect();
        let h = Hypotheses::new(states, vec![1.0 / 45.0; 45]);
        let d = h.outcome(&loc(0.0, 0.0), &IDEAL);
        assert!((d.bins()[0] - 15.0 / 45.0).abs() < 1e-12);
        assert!((d.bins()[1] - 30.0 / 45.0).abs() < 1e-12);
        // H(1/3, 2/3) from a 40-digit reference
        assert!((d.entropy() - 0.918_295_834_054_49).abs() < 1e-12);
    }

    #[test]
    fn sampled_mode_returns_requested_count() {
        let p = four_circle_posterior([0.25; 4]);
        let h = Hypotheses::from_posterior(
            &p,
            PredictionMode::Sampled {
                samples: 45,
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(h.states().len(), 45);
        assert!(matches!(
            Hypotheses::from_posterior(
                &p,
                PredictionMode::Sampled {
                    samples: 0,
                    seed: 3
                }
            ),
            Err(DesignError::NoSamples)
        ));
    }

    #[test]
    fn joint_examples() {
        let p = four_circle_posterior([0.25; 4]);
        let (m1, m2) = (loc(0.0, 0.0), loc(10.0, 0.0));
        let j = joint_outcome_distribution(&p, &m1, &m2, &IDEAL, PredictionMode::Exact).unwrap();
        assert_eq!(j.quadrants(), Some([0.25; 4]));
        assert_eq!(j.entropy(), 2.0);

        let same = joint_outcome_distribution(&p, &m1, &m1, &IDEAL, PredictionMode::Exact).unwrap();
        assert_eq!(same.get(0, 1), 0.0);
        assert_eq!(same.get(1, 0), 0.0);
        let h1 = entropy_at(&p, &m1, &IDEAL, PredictionMode::Exact).unwrap();
        assert!(
            (joint_entropy_at(&p, &m1, &m1, &IDEAL, PredictionMode::Exact).unwrap() - h1).abs()
                < 1e-12
        );
        assert!(
            (mutual_information_at(&p, &m1, &m1, &IDEAL, PredictionMode::Exact).unwrap() - h1)
                .abs()
                < 1e-12
        );

        let delta = four_circle_posterior([0.0, 0.0, 1.0, 0.0]);
        let j =
            joint_outcome_distribution(&delta, &m1, &m2, &IDEAL, PredictionMode::Exact).unwrap();
        assert_eq!(j.table().iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(j.table().iter().filter(|&&v| v == 0.0).count(), 3);
    }

    #[test]
    fn independent_pair_adds_entropies() {
        // P(white at m1) = 0.3, P(white at m2) = 0.6, independently.
        let p = four_circle_posterior([0.18, 0.12, 0.42, 0.28]);
        let (m1, m2) = (loc(0.0, 0.0), loc(10.0, 0.0));
        let h1 = entropy_at(&p, &m1, &IDEAL, PredictionMode::Exact).unwrap();
        let h2 = entropy_at(&p, &m2, &IDEAL, PredictionMode::Exact).unwrap();
        let joint = joint_entropy_at(&p, &m1, &m2, &IDEAL, PredictionMode::Exact).unwrap();
        assert!((joint - (h1 + h2)).abs() < 1e-9);
        assert!(mutual_information_at(&p, &m1, &m2, &IDEAL, PredictionMode::Exact).unwrap() < 1e-9);
    }

    #[test]
    fn entropy_map_examples() {
        let grid =
            Arc::new(StateGrid::new(vec![3.0, 5.0], vec![4.0, 6.0], vec![2.0, 3.0]).unwrap());
        let map = MapGrid::new(vec![0.0, 2.5, 5.0, 7.5], vec![0.0, 5.0, 10.0]).unwrap();
        let delta = GridPosterior::delta(Arc::clone(&grid), 3).unwrap();
        let m = entropy_map(&delta, &IDEAL, &map, PredictionMode::Exact).unwrap();
        assert!(m.values().iter().all(|&v| v == 0.0));

        let prior = init_prior(grid);
        let m = entropy_map(&prior, &IDEAL, &map, PredictionMode::Exact).unwrap();
        for (i, &v) in m.values().iter().enumerate() {
            assert!((0.0..=1.0).contains(&v));
            let direct =
                entropy_at(&prior, &map.location(i), &IDEAL, PredictionMode::Exact).unwrap();
            assert_eq!(v, direct);
        }
    }

    #[test]
    fn joint_map_bounds() {
        let grid = Arc::new(
            StateGrid::new(vec![3.0, 5.0, 7.0], vec![4.0, 6.0], vec![2.0, 3.0, 4.0]).unwrap(),
        );
        let prior = init_prior(grid);
        let map = MapGrid::new(
            vec![0.0, 2.5, 5.0, 7.5, 10.0],
            vec![0.0, 2.5, 5.0, 7.5, 10.0],
        )
        .unwrap();
        let fixed = map.location(12);
        let joint = joint_entropy_map(&prior, &IDEAL, &fixed, &map, PredictionMode::Exact).unwrap();
        let single = entropy_map(&prior, &IDEAL, &map, PredictionMode::Exact).unwrap();
        let h_fixed = single.values()[12];
        assert!((joint.values()[12] - h_fixed).abs() < 1e-12);
        for (j, h) in joint.values().iter().zip(single.values()) {
            assert!(*j >= h_fixed - 1e-9);
            assert!(*j <= h_fixed + h + 1e-9);
        }
    }

    #[test]
    fn selection_on_four_circles() {
        let p = four_circle_posterior([0.25; 4]);
        let map = two_point_map();
        let greedy = select_sequential_greedy(&p, &IDEAL, &map, PredictionMode::Exact).unwrap();
        assert_eq!((greedy.first, greedy.second), (0, 1));
        assert_eq!(greedy.joint_entropy, 2.0);
        let best = select_joint_exhaustive(&p, &IDEAL, &map, PredictionMode::Exact).unwrap();
        assert_eq!((best.first, best.second), (0, 1));
        assert_eq!(best.joint_entropy, 2.0);
        let independent = select_independent(&p, &IDEAL, &map, PredictionMode::Exact).unwrap();
        // both locations have 1 bit: a tie, so the agents split
        assert_eq!((independent.first, independent.second), (0, 1));
        let climbed =
            hill_climb_pair_search(&p, &IDEAL, &map, PredictionMode::Exact, 3, 1).unwrap();
        assert_eq!(climbed.joint_entropy, 2.0);
    }

    #[test]
    fn independent_selection_peak_and_delta() {
        // m1 has 1 bit, m2 is white only for one quarter of the mass.
        let p = four_circle_posterior([0.25, 0.25, 0.0, 0.5]);
        let map = two_point_map();
        let pair = select_independent(&p, &IDEAL, &map, PredictionMode::Exact).unwrap();
        let h1 = entropy_at(&p, &loc(0.0, 0.0), &IDEAL, PredictionMode::Exact).unwrap();
        let h2 = entropy_at(&p, &loc(10.0, 0.0), &IDEAL, PredictionMode::Exact).unwrap();
        assert!(h2 < h1);
        assert_eq!((pair.first, pair.second), (0, 0));

        let greedy = select_sequential_greedy(&p, &IDEAL, &map, PredictionMode::Exact).unwrap();
        assert_eq!(greedy.first, 0);
        assert_eq!(greedy.second, 1);

        let delta = four_circle_posterior([0.0, 0.0, 0.0, 1.0]);
        let big = MapGrid::new(vec![0.0, 5.0, 10.0], vec![0.0, 5.0]).unwrap();
        let pair = select_independent(&delta, &IDEAL, &big, PredictionMode::Exact).unwrap();
        assert_eq!((pair.first, pair.second), (0, 1));
        let climbed =
            hill_climb_pair_search(&delta, &IDEAL, &big, PredictionMode::Exact, 4, 9).unwrap();
        assert_eq!(climbed.joint_entropy, 0.0);
    }

    #[test]
    fn hill_climb_needs_restarts() {
        let p = four_circle_posterior([0.25; 4]);
        let map = two_point_map();
        assert_eq!(
            hill_climb_pair_search(&p, &IDEAL, &map, PredictionMode::Exact, 0, 1),
            Err(DesignError::NoRestarts)
        );
    }

    #[test]
    fn gram_strategies_agree_with_direct_counts() {
        let grid = Arc::new(
            StateGrid::new(
                crate::inference::linspace(0.0, 20.0, 7),
                crate::inference::linspace(0.0, 20.0, 7),
                vec![3.0, 5.0, 8.0],
            )
            .unwrap(),
        );
        let n = grid.len();
        // a few repeated weights plus distinct ones
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                if i % 3 == 0 {
                    1.0
                } else {
                    1.0 + (i % 7) as f64
                }
            })
            .collect();
        let p = GridPosterior::from_weights(grid, weights).unwrap();
        let map = MapGrid::new(
            crate::inference::linspace(0.0, 20.0, 6),
            crate::inference::linspace(0.0, 20.0, 6),
        )
        .unwrap();
        let set = CandidateSet::new(&p, &IDEAL, &map, PredictionMode::Exact).unwrap();
        let a = set.table.gram_by_bitsets(&set.table.weight_groups());
        let b = set.table.gram_by_lists();
        let l = map.len();
        for i in 0..l {
            for j in 0..l {
                let direct = set.table.joint(i, j)[3];
                assert!((a[i * l + j] - direct).abs() < 1e-14);
                assert!((b[i * l + j] - direct).abs() < 1e-14);
                assert!((set.joint_entropy(i, j) - set.direct_joint_entropy(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn map_lattice_indexing() {
        let map = MapGrid::new(vec![0.0, 1.0, 2.0], vec![5.0, 6.0]).unwrap();
        assert_eq!(map.len(), 6);
        assert_eq!(map.location(4), loc(1.0, 6.0));
        assert_eq!(map.index_of(&loc(1.0, 6.0)), Some(4));
        assert_eq!(map.neighbors(0), vec![1, 3, 4]);
        assert_eq!(map.neighbors(4), vec![0, 1, 2, 3, 5]);
        assert!(MapGrid::new(vec![], vec![1.0]).is_err());
        assert!(MapGrid::new(vec![1.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn map_files() {
        let map = MapGrid::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let e = EntropyMap::new(map, vec![0.0, 0.5, 1.0, 0.25]);
        assert_eq!(e.to_csv(), "x,y,value\n0,0,0\n1,0,0.5\n0,1,1\n1,1,0.25\n");
        let pgm = e.to_pgm();
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        // top row is the largest y
        assert_eq!(&pgm[header.len()..], &[255, 64, 0, 128]);

        let zeros = EntropyMap::new(MapGrid::new(vec![0.0], vec![0.0]).unwrap(), vec![0.0]);
        assert_eq!(zeros.to_pgm().last(), Some(&0));
    }
}
