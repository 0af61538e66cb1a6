//! Configuration, figure datasets and table output behind the CLI.

mod config;
mod figures;
mod table;

pub use config::{load_config, parse_config, ExperimentConfig, OutputFormat, DEFAULT_N_GRID};
pub use figures::{bounds_table, run_figure, run_simulation, sweep_point, FigureId, SimulationTables, SweepPoint};
pub use table::{format_g6, write_table, OutputTable};
