//! Configuration, named families, sweeps and CSV output.

pub mod config;
pub mod csv;
pub mod families;
pub mod runs;

pub use config::{parse_config, ConfigErrors, Expectation, ExperimentConfig, ExperimentSection, Mode};
pub use families::{make_family, Amplitude, FamilySpec};
pub use runs::{emit_csv, exit_code, run_single, run_sweep, run_id, RunRecord, RunSummary};
