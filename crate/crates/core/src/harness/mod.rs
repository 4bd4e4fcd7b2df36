//! Experiment grid, seeded execution and reporting.

pub mod grid;
pub mod report;
pub mod run;
pub mod seed;

pub use grid::{enumerate_grid, Cell, ExperimentGrid};
pub use report::{report, spearman, write_runs_csv, Report};
pub use run::{
    cell_config, cell_instance, instance_seed, read_records, read_records_file, run_cell, run_grid, MetricRecord,
    Model, RunOptions, RunRecord, RECORD_SCHEMA_VERSION,
};
