//! Scenarios, the closed-loop trial runner and batch evaluation.

pub mod batch;
pub mod config;
pub mod trace;
pub mod trial;
pub mod world;

pub use config::{PhaseDurations, Range, ScenarioConfig, ScenarioKind};
pub use trial::{
    run_scene, run_trial, run_trial_indexed, trial_seed, DecisionRecord, DecisionSource, EgoMode, LoopOptions,
    NoOperator, QueryView, SimulatedOperator, Simulation, SourcedAnswer, StepRecord, TrialOutcome, TrialResult,
    WorldView,
};
pub use world::{build_scenario, reference_commands, reference_trajectory, ObstacleScript, Scene};
pub use batch::{report_stem, run_batch, run_paired, write_batch, BatchReport, PairedReport, Reduction};
pub use trace::{first_crossing, perceived_risk_trace, risk_map_sweep, PerceivedSeries, RiskTrace, SweepGrid};
