//! Two-agent measurement episodes over a shared posterior.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{CandidateSet, DesignError, MapGrid, PredictionMode, SelectedPair};
use crate::inference::{
    bayes_update, init_prior, map_estimate, posterior_entropy, GridPosterior, InferenceError,
    StateGrid,
};
use crate::world::{simulate_measurement, CircleState, MeasurementLocation, SensorModel};

/// Restarts used by `joint-search` when none are given.
pub const DEFAULT_RESTARTS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollabError {
    #[error("invalid stop rule: {0}")]
    InvalidStopRule(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("round {round}: {source}")]
    Round { round: usize, source: RoundError },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoundError {
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// How the two agents choose their measurement pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Policy {
    /// Each agent maximizes its own marginal entropy.
    Independent,
    /// Agent 1 at the entropy peak, agent 2 maximizes joint entropy given agent 1.
    SequentialGreedy,
    /// Joint-entropy argmax over all pairs.
    JointExhaustive,
    /// Multi-start hill climb on joint entropy.
    JointSearch {
        #[serde(default = "default_restarts")]
        restarts: usize,
    },
}

fn default_restarts() -> usize {
    DEFAULT_RESTARTS
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::Independent,
        Policy::SequentialGreedy,
        Policy::JointExhaustive,
        Policy::JointSearch {
            restarts: DEFAULT_RESTARTS,
        },
    ];

    pub fn validate(&self) -> Result<(), CollabError> {
        match self {
            Policy::JointSearch { restarts: 0 } => Err(CollabError::InvalidPolicy(
                "joint-search needs at least one restart".into(),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Independent => f.write_str("independent"),
            Policy::SequentialGreedy => f.write_str("sequential-greedy"),
            Policy::JointExhaustive => f.write_str("joint-exhaustive"),
            Policy::JointSearch { restarts } => write!(f, "joint-search:{restarts}"),
        }
    }
}

impl FromStr for Policy {
    type Err = CollabError;

    /// Accepts `independent`, `sequential-greedy`, `joint-exhaustive`,
    /// `joint-search` and `joint-search:<restarts>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let policy = match s {
            "independent" => Policy::Independent,
            "sequential-greedy" => Policy::SequentialGreedy,
            "joint-exhaustive" => Policy::JointExhaustive,
            "joint-search" => Policy::JointSearch {
                restarts: DEFAULT_RESTARTS,
            },
            other => match other.strip_prefix("joint-search:") {
                Some(n) => Policy::JointSearch {
                    restarts: n.parse().map_err(|_| {
                        CollabError::InvalidPolicy(format!("bad restart count in {other:?}"))
                    })?,
                },
                None => {
                    return Err(CollabError::InvalidPolicy(format!(
                        "unknown policy {other:?}"
                    )))
                }
            },
        };
        policy.validate()?;
        Ok(policy)
    }
}

/// When an episode ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopRule {
    pub max_rounds: usize,
    pub entropy_threshold: f64,
}

impl StopRule {
    pub fn new(max_rounds: usize, entropy_threshold: f64) -> Result<Self, CollabError> {
        let rule = Self {
            max_rounds,
            entropy_threshold,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<(), CollabError> {
        if self.max_rounds == 0 {
            return Err(CollabError::InvalidStopRule(
                "max_rounds must be at least 1".into(),
            ));
        }
        if !(self.entropy_threshold.is_finite() && self.entropy_threshold >= 0.0) {
            return Err(CollabError::InvalidStopRule(format!(
                "entropy_threshold {} must be non-negative",
                self.entropy_threshold
            )));
        }
        Ok(())
    }
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            max_rounds: 25,
            entropy_threshold: 0.1,
        }
    }
}

/// The hidden circle of an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truth {
    /// Drawn uniformly from the hypothesis grid using the episode seed.
    Random,
    Fixed(CircleState),
}

/// Everything an episode needs apart from its seed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: Arc<StateGrid>,
    pub map: MapGrid,
    pub sensor: SensorModel,
    pub policy: Policy,
    pub stop: StopRule,
    pub mode: PredictionMode,
    pub truth: Truth,
}

/// Independent random streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Truth = 0,
    Selection = 1,
    FirstAgent = 2,
    SecondAgent = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for `stream` in `round`: `splitmix64(splitmix64(master ^ (stream << 56)) ^ round)`.
pub fn child_seed(master: u64, round: usize, stream: Stream) -> u64 {
    splitmix64(splitmix64(master ^ ((stream as u64) << 56)) ^ round as u64)
}

/// One line of the episode log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub e1_x: f64,
    pub e1_y: f64,
    pub e2_x: f64,
    pub e2_y: f64,
    pub obs1: f64,
    pub obs2: f64,
    pub entropy_e1: f64,
    pub entropy_e2: f64,
    pub joint_entropy: f64,
    pub mutual_information: f64,
    pub posterior_entropy: f64,
    pub map_x: f64,
    pub map_y: f64,
    pub map_r: f64,
    pub center_error: f64,
    pub radius_error: f64,
}

impl RoundRecord {
    pub fn first_location(&self) -> MeasurementLocation {
        MeasurementLocation::new(self.e1_x, self.e1_y)
    }

    pub fn second_location(&self) -> MeasurementLocation {
        MeasurementLocation::new(self.e2_x, self.e2_y)
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeLog {
    pub truth: CircleState,
    pub seed: u64,
    pub records: Vec<RoundRecord>,
    /// Rounds completed when the posterior entropy first met the threshold.
    pub rounds_to_threshold: Option<usize>,
    pub posterior: GridPosterior,
}

impl EpisodeLog {
    /// One JSON object per round.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

/// Pair chosen by `policy` from a prepared candidate set.
pub fn select_pair(
    candidates: &CandidateSet<'_>,
    policy: Policy,
    seed: u64,
) -> Result<SelectedPair, DesignError> {
    Ok(match policy {
        Policy::Independent => candidates.select_independent(),
        Policy::SequentialGreedy => candidates.select_sequential_greedy(),
        Policy::JointExhaustive => candidates.select_joint_exhaustive(),
        Policy::JointSearch { restarts } => candidates.hill_climb_pair_search(restarts, seed)?,
    })
}

/// Select a pair, simulate both readings, and fold them into the posterior
/// (agent 1 first).
#[allow(clippy::too_many_arguments)]
pub fn run_round(
    p: &GridPosterior,
    truth: &CircleState,
    s: &SensorModel,
    policy: Policy,
    map: &MapGrid,
    mode: PredictionMode,
    round: usize,
    master_seed: u64,
) -> Result<(GridPosterior, RoundRecord), RoundError> {
    let selection_seed = child_seed(master_seed, round, Stream::Selection);
    let candidates = CandidateSet::new(p, s, map, mode.reseeded(selection_seed))?;
    let pair = select_pair(&candidates, policy, selection_seed)?;
    let (e1, e2) = (pair.first_location, pair.second_location);
    let info = candidates.hypotheses().pair_information(&e1, &e2, s);

    let mut rng1 = ChaCha8Rng::seed_from_u64(child_seed(master_seed, round, Stream::FirstAgent));
    let mut rng2 = ChaCha8Rng::seed_from_u64(child_seed(master_seed, round, Stream::SecondAgent));
    let obs1 = simulate_measurement(truth, &e1, s, &mut rng1);
    let obs2 = simulate_measurement(truth, &e2, s, &mut rng2);

    let next = bayes_update(p, &e1, obs1, s)?;
    let next = bayes_update(&next, &e2, obs2, s)?;
    let estimate = map_estimate(&next);
    let record = RoundRecord {
        round,
        e1_x: e1.x,
        e1_y: e1.y,
        e2_x: e2.x,
        e2_y: e2.y,
        obs1: obs1.value(),
        obs2: obs2.value(),
        entropy_e1: info.first_entropy,
        entropy_e2: info.second_entropy,
        joint_entropy: info.joint_entropy,
        mutual_information: info.mutual_information,
        posterior_entropy: posterior_entropy(&next),
        map_x: estimate.x,
        map_y: estimate.y,
        map_r: estimate.r,
        center_error: estimate.center_distance(truth),
        radius_error: (estimate.r - truth.r).abs(),
    };
    Ok((next, record))
}

/// Hidden circle for an episode seeded with `master_seed`.
pub fn resolve_truth(scenario: &Scenario, master_seed: u64) -> CircleState {
    match scenario.truth {
        Truth::Fixed(c) => c,
        Truth::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(child_seed(master_seed, 0, Stream::Truth));
            let states = scenario.grid.states();
            states[rng.random_range(0..states.len())]
        }
    }
}

/// Rounds until the posterior entropy reaches the threshold or the round
/// budget runs out.
pub fn run_episode(scenario: &Scenario, master_seed: u64) -> Result<EpisodeLog, CollabError> {
    scenario.stop.validate()?;
    scenario.policy.validate()?;
    let truth = resolve_truth(scenario, master_seed);
    let mut posterior = init_prior(Arc::clone(&scenario.grid));
    let mut records = Vec::new();
    let mut rounds_to_threshold = None;
    for round in 1..=scenario.stop.max_rounds {
        if posterior_entropy(&posterior) <= scenario.stop.entropy_threshold {
            rounds_to_threshold = Some(round - 1);
            break;
        }
        let (next, record) = run_round(
            &posterior,
            &truth,
            &scenario.sensor,
            scenario.policy,
            &scenario.map,
            scenario.mode,
            round,
            master_seed,
        )
        .map_err(|source| CollabError::Round { round, source })?;
        posterior = next;
        records.push(record);
    }
    if rounds_to_threshold.is_none()
        && posterior_entropy(&posterior) <= scenario.stop.entropy_threshold
    {
        rounds_to_threshold = Some(records.len());
    }
    Ok(EpisodeLog {
        truth,
        seed: master_seed,
        records,
        rounds_to_threshold,
        posterior,
    })
}

/// Aggregate over the episodes of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy: Policy,
    pub episodes: usize,
    /// Episodes that met the entropy threshold.
    pub reached: usize,
    /// Episodes that missed the threshold count as `max_rounds`.
    pub mean_rounds_to_threshold: f64,
    /// Averaged over all rounds of all episodes.
    pub mean_pair_mutual_information: f64,
    pub mean_pair_joint_entropy: f64,
}

pub fn summarize(policy: Policy, max_rounds: usize, logs: &[EpisodeLog]) -> PolicySummary {
    let reached = logs
        .iter()
        .filter(|l| l.rounds_to_threshold.is_some())
        .count();
    let rounds: usize = logs
        .iter()
        .map(|l| l.rounds_to_threshold.unwrap_or(max_rounds))
        .sum();
    let records: Vec<&RoundRecord> = logs.iter().flat_map(|l| &l.records).collect();
    let mean = |f: fn(&RoundRecord) -> f64| {
        if records.is_empty() {
            0.0
        } else {
            records.iter().map(|r| f(r)).sum::<f64>() / records.len() as f64
        }
    };
    PolicySummary {
        policy,
        episodes: logs.len(),
        reached,
        mean_rounds_to_threshold: if logs.is_empty() {
            0.0
        } else {
            rounds as f64 / logs.len() as f64
        },
        mean_pair_mutual_information: mean(|r| r.mutual_information),
        mean_pair_joint_entropy: mean(|r| r.joint_entropy),
    }
}

/// Runs every policy on every seed of `scenario`.
pub fn compare_policies(
    scenario: &Scenario,
    policies: &[Policy],
    seeds: &[u64],
) -> Result<Vec<PolicySummary>, CollabError> {
    policies
        .iter()
        .map(|&policy| {
            let run = Scenario {
                policy,
                ..scenario.clone()
            };
            let logs = seeds
                .iter()
                .map(|&seed| run_episode(&run, seed))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(summarize(policy, scenario.stop.max_rounds, &logs))
        })
        .collect()
}

pub fn summaries_to_csv(rows: &[PolicySummary]) -> String {
    let mut out = String::from(
        "policy,episodes,reached,mean_rounds_to_threshold,mean_pair_mutual_information,mean_pair_joint_entropy\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.policy,
            r.episodes,
            r.reached,
            r.mean_rounds_to_threshold,
            r.mean_pair_mutual_information,
            r.mean_pair_joint_entropy
        );
    }
    out
}
