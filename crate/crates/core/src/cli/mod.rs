pub mod config;
pub mod run;

pub use config::{load_config, parse_config, Experiment, ExperimentConfig};
pub use run::{run, RunSummary};
