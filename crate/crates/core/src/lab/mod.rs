//! Configuration, experiment drivers and report emission.

mod config;
mod experiment;
mod fit;
mod report;

pub use config::{
    parse_config, ExperimentKind, ExperimentSpec, InitialData, Mode, ParsedConfig, Preset,
    RunConfig,
};
pub use experiment::{
    run_experiment, BoundSample, Check, EpsOutcome, ExperimentReport, OracleSample, RunStatus,
};
pub use fit::{loglog_fit, ols, riccati_fit, LineFit, RiccatiFit};
pub use report::{emit_report, emit_run, write_ndjson};
