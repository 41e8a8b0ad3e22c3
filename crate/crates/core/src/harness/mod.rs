//! Experiment harness: configuration, scenario grids, replication runs,
//! raw and summary output, plot data and the time-limit study.

pub mod certification;
pub mod config;
pub mod experiment;
pub mod grid;
pub mod plots;
pub mod record;
pub mod replication;
pub mod summary;

pub use certification::{certification_panels, certification_study, write_certification, CertRecord};
pub use config::{ExperimentConfig, Preset, ScenarioFile};
pub use experiment::{run_experiment, ExperimentOutput};
pub use grid::enumerate_grid;
pub use plots::{emit_plot_data, Figure};
pub use record::{load_raw_csv, read_raw_csv, RecordKind, ResultRecord};
pub use replication::{replication_dataset, run_replication, ReplicationOutput};
pub use summary::summarize;
