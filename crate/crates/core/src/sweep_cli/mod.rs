//! Run orchestration: configuration files, the time loop, sweeps,
//! convergence studies and artifact output.

mod config;
mod orchestrate;
mod output;
mod run;
mod tables;
mod units;

pub use config::{
    CaseSelector, FlowOptions, OutputSettings, Resolution, RunConfig, SweepAxes, SweepPlan, SweepPoint, OUT_DIR_ENV,
    WORKERS_ENV,
};
pub use orchestrate::{
    observed_order, parallel_map, run_mesh_convergence, run_single, run_sweep, ConvergenceRow, EpsilonMode, GridInfo,
    Summary, SweepRow,
};
pub use output::{write_diagnostics, write_json, write_rows, write_step_log, write_vtk};
pub use run::{
    channel_pressure_drop, check_oracle, max_divergence, measure, run_case, InkSample, Observer, OracleCheck,
    RunFailure, RunOutcome, RunSettings, StepLog,
};
pub use tables::{golden_tables, render_tables, GoldenRow, GoldenTable, PUBLISHED_IDEAL_AREA};
pub use units::{parse_quantity, Dimension, RawQuantity};
