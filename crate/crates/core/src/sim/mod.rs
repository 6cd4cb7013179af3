//! Scenario files, the closed-loop runner, CSV logging and batch execution.

mod batch;
mod log;
mod runner;
mod scenario;

pub use batch::{expand, run_batch, run_to_dir};
pub use log::{read_csv, segment_visits, write_csv, LogRecord, SegmentVisit, Summary};
pub use runner::{run_scenario, run_scenario_with, Run, StepView, CONVERGENCE_THRESHOLD_M};
pub use scenario::{
    ControllerSpec, InitialSpec, NoiseSpec, PathSpec, PlantSpec, RacetrackSpec, Scenario, SetpointSpec, SCHEMA_VERSION,
};
