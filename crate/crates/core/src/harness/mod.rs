//! Configuration, seeding, experiment runs, sweeps and metric files.

pub mod config;
pub mod metrics;
pub mod run;
pub mod sweep;

pub use config::{ExperimentConfig, Preset};
pub use metrics::{parse_metrics, read_metrics, write_metrics, MetricRow, METRICS_HEADER};
pub use run::{eval_checkpoints, execute, gen_data, load_model, run_experiment, RunOutcome};
pub use sweep::{run_sweep, write_sweep, SweepAggregate, SweepOutcome, SweepParam, SweepRow, SweepSpec};
