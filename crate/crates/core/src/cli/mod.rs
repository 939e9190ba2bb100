//! Experiment runner: config handling, the train/evaluate protocol, sweeps
//! and CSV metrics.

mod args;
mod config;
mod metrics;
mod run;

pub use args::{default_fractions, execute, Cli, Command};
pub use config::{parse_pairs, DataFormat, DatasetKind, ExperimentConfig, CONFIG_KEYS};
pub use metrics::{read_records, write_records, write_records_file, MetricsRecord, METRICS_COLUMNS};
pub use run::{load_data, load_split, run_experiment, run_experiment_on, run_sweep, SweepPlan};
