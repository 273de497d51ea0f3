//! Scenario assembly, metrics, sweeps and plot-data extraction.

pub mod config;
pub mod metrics;
pub mod plot;
pub mod scenario;
pub mod sweep;
pub mod trace;

pub use config::{ConfigError, NodeConfig, Role, ScenarioConfig, ScenarioKind};
pub use metrics::{compute_metrics, cross_track_metric, cycle_time_metric, MetricsReport};
pub use plot::{write_plot_data, PlotMetric};
pub use scenario::{run_scenario, RunError, RunOutput};
pub use sweep::{sweep, SweepGrid, SweepReport};
pub use trace::{Trace, TraceEvent, TraceRow};
