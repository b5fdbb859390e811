//! Experiment harness: TOML configs, named presets, replicated runs with
//! deterministic per-run streams, aggregation and CSV output.

pub mod config;
pub mod experiment;
pub mod output;
pub mod presets;

pub use config::{
    Algorithm, EnvironmentConfig, ExperimentConfig, HorizonMode, Metric, OracleConfig,
    RewardConfig, SlotConfig, SspConfig, TermConfig, TuningConfig,
};
pub use experiment::{
    build_run_env, build_table, mean_and_half_width, prepare_bids, run_experiment, AggregatePoint,
    AggregateResult, EtcRunInfo, ExperimentReport,
};
pub use output::{emit_csv, sidecar_path, summary, write_report};
pub use presets::{preset, PRESETS};
