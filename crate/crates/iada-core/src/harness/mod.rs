//! Benchmark harness: the regime-comparison table and the domain-granularity
//! sweep, with deterministic text/JSON reports and a PNG sweep plot.

pub mod experiment;
pub mod plot;
pub mod report;
pub mod sweep;
pub mod table;

pub use experiment::{prepare_seed, BenchData, CellKind, ExperimentSpec, SeedArtifacts};
pub use plot::{render_sweep_plot, sweep_axis_bounds};
pub use report::{render_report, render_sweep_text, render_table_text};
pub use sweep::{run_subdomain_sweep, sweep_ladder, SweepOutput, SweepPoint};
pub use table::{run_table1, CellStat, ResultTable, TableRow};
