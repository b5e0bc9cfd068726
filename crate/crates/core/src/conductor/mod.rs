//! Runtime loop: builds the crisp input snapshot from bus traffic, runs the
//! fuzzy engine each tick, dispatches reminders, alerts and actuator
//! commands, switches between automated and semi-automated operation from
//! the game score, and records run metrics.

mod engine;
mod framelog;
mod mode;
mod registry;
mod runner;

pub use engine::{Conductor, ConductorConfig, RunMetrics, DEFAULT_FRESHNESS_TICKS, DEFAULT_HYSTERESIS};
pub use framelog::{read_frame_log, replay, replay_all, write_frame_log, Divergence, LogLine, ReplayReport, RunHeader};
pub use mode::{evaluate_mode_switch, Mode, ModePolicy, ModeSwitch};
pub use registry::{apply_registry_mode, DeviceRegistry};
pub use runner::{run_scenario, run_suite, RunOptions, RunOutcome};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConductorError {
    #[error(transparent)]
    Fuzzy(#[from] crate::fuzzy::FuzzyError),
    #[error(transparent)]
    Bus(#[from] crate::meshbus::MeshError),
    #[error(transparent)]
    Analytics(#[from] crate::analytics::AnalyticsError),
    #[error("frame log: {0}")]
    FrameLog(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
