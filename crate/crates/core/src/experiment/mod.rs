//! Configuration-driven Monte-Carlo experiments.

mod config;
mod report;
mod run;

pub use config::{
    generic_rkhs_settings, parse_config_str, ConfigError, DiagonalSpec, DivergenceConfig, ExperimentConfig,
    ExperimentPlan, ForwardConfig, ForwardKind, IdentitySpec, InitialConfig, InverseConfig, InverseKind, LinearConfig,
    MatrixValue, MetricsConfig, NoiseConfig, RkhsConfig, RkhsFilterConfig,
};
pub use report::{
    aggregate, csv_header, emit_results, render_csv, render_steps_csv, render_summary_json, run_experiment,
    BoundednessSummary, ExperimentResult, FilterSummary, OutputFormat, StepMetrics, STEPS_HEADER,
};
pub use run::{
    execute_runs, forward_label, inverse_label, Divergence, ExperimentError, FilterTrack, RkhsDiagnostics, Role,
    RunRecord,
};
