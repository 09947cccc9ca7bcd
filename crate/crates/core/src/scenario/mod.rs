//! Scenario sweeps, capacity checks and result export.

mod export;
mod gap;
mod sweep;

pub use export::{export_results, read_results_json, results_csv, write_plot_data};
pub use gap::{capacity_gap, CapacityGapReport, GapEntry, GapInput};
pub use sweep::{
    evaluate_chain, plan_cells, recouple_carbon, run_sweep, Cell, ChainParams, FleetSpec,
    RunOptions, ScenarioResult, SiteInput, SiteSelection, SweepInputs, SweepSpec, PARTIAL_LOG,
};
