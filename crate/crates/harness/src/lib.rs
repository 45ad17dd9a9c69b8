//! Experiment harness for `viopt-core`: JSON configs describing a problem and a
//! (method × step size × seed) grid, a parallel runner whose output does not
//! depend on scheduling, step-size selection, CSV and SVG emitters, and the
//! closed-form checks behind `viopt verify`.

pub mod config;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod methods;
pub mod plot;
pub mod records;
pub mod verify;

pub use config::{parse_config, parse_config_str, ExperimentConfig, DEFAULT_STEP_GRID};
pub use error::{HarnessError, Result};
pub use experiment::{cell_seed, run_experiment, ExperimentOutput};
pub use grid::{grid_search, Selection};
pub use methods::MethodId;
pub use plot::{emit_plane, emit_plot, render_plane, render_plot, PlotOptions};
pub use records::{emit_csv, emit_trajectories, load_results, load_trajectories, ResultRecord, TrajectoryRecord};
