//! Information-based collaboration of two measurement agents.
//!
//! Two agents locate a hidden circle by taking point measurements. A shared
//! grid posterior over circle hypotheses predicts the reading at every
//! candidate location; each pair of locations is scored by the joint entropy
//! of its predicted readings, which rewards informative locations and
//! penalizes pairs that would answer the same question twice.

pub mod cli;
pub mod collab;
pub mod config;
pub mod design;
pub mod inference;
pub mod inquiry;
pub mod world;

pub use collab::{
    compare_policies, run_episode, run_round, EpisodeLog, Policy, PolicySummary, RoundRecord,
    Scenario, StopRule, Truth,
};
pub use config::{parse_config, RunConfig};
pub use design::{
    CandidateSet, EntropyMap, JointOutcomeDistribution, MapGrid, OutcomeDistribution,
    PredictionMode, SelectedPair,
};
pub use inference::{GridPosterior, StateGrid};
pub use inquiry::{Distribution, Partition};
pub use world::{CircleState, Field, Intensity, MeasurementLocation, SensorModel};
