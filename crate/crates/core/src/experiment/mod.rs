//! Experiment grids (main table, alpha sweep, rounds sweep), synthetic data,
//! and result emission.

mod grid;
mod results;
mod spec;
mod synthetic;

pub use grid::{
    ensure_output_dir, load_dataset, plan, prepare_clients, run_alpha_sweep, run_and_emit, run_grid,
    run_job, run_main_grid, run_rounds_sweep, write_outputs, GridKind, GridOutput, Job, JobOutput,
    PreparedClients, SkippedDataset,
};
pub use results::{emit_results, parse_results, RunResult, RunRow, CSV_HEADER};
pub use spec::{
    default_synthetic_datasets, DatasetEntry, DatasetSource, ExperimentSpec, LearningRates,
    RegimeKind, Setting,
};
pub use synthetic::{generate_synthetic, SyntheticSpec};
