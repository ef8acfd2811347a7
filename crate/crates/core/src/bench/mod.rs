//! Scenario generation, experiment execution and metric aggregation.

pub mod experiment;
pub mod packing;
pub mod param_search;
pub mod scenario;

pub use experiment::{
    aggregate, run_experiment, run_trial, summary_csv, AggregateReport, AggregateRow, ExperimentConfig,
    ScenarioSource, TrialReport, Variant, SUMMARY_HEADER,
};
pub use packing::greedy_pack;
pub use param_search::{
    fixed_sequence_param_search, fixed_skeleton, HeuristicSampler, LlmSampler, ParamSampler, ParamSearchConfig,
    ParamSearchOutcome, RandomSampler, SamplerKind,
};
pub use scenario::{
    make_setting1, make_setting2, reachable_fraction, scenario_by_name, BasketSize, Difficulty, ObjectSpec,
    ScenarioError, ScenarioSpec, SCENARIO_NAMES,
};
