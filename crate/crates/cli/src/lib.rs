//! Scenario files, trace emission, and seed sweeps for the trustworthy
//! averaging simulator. The `trustavg` binary is a thin wrapper over this
//! library.

mod emit;
mod scenario_file;
mod sweep;

pub use emit::{emit_outputs, write_summary, write_table, OutputFormat};
pub use scenario_file::{parse_scenario, reseed, serialize_scenario};
pub use sweep::{run_sweep, DetectionStats, SweepOutcome};
