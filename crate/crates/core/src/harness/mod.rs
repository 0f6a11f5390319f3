//! Experiment orchestration: configuration, per-user evaluation, the named
//! experiments and their output files.

mod config;
mod evaluate;
mod experiments;
mod report;

pub use config::{ExperimentConfig, ExperimentName, Profile, VolumeConfig};
pub use evaluate::{evaluate_task, run_user_evaluation, EvalSettings, UserEvaluationReport};
pub use experiments::{planted_separable_dataset, proposition_two_dataset, run_experiment};
pub use report::{
    aggregate, aggregate_table, emit_report, format_fixed, load_manifest, manifest_text,
    recompute_aggregate, units_from_csv, units_to_csv, AggregateRow, Cell, ExperimentOutput,
    Failure, Table, UnitRow, AGGREGATE_HEADER, UNIT_HEADER,
};
