//! Scripted smart-home simulator.
//!
//! A scenario file describes the room, anchors, objects, danger zones, the
//! device fleet, a resident trajectory and timed events. A file may hold a
//! suite: shared fields at the top level plus a `runs` array whose entries
//! override them. [`Habitat`] advances one run tick by tick and returns the
//! frames the home would publish.

mod fleet;
mod schema;
mod sim;
mod trajectory;

pub use fleet::{default_fleet, DeviceKind, DeviceSpec, DEFAULT_ENVIRONMENTAL_DEVICES};
pub use schema::{
    load_suite, load_suite_file, EventKind, ObjectSpec, PlayerSpec, ReminderSpec, Scenario, ScenarioEvent, Suite,
};
pub use sim::{Habitat, SimClock};
pub use trajectory::{expand_patrol, Patrol, TrajectoryEntry, Waypoint};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HabitatError {
    #[error("scenario schema error at {path}: {message}")]
    SchemaError { path: String, message: String },
    #[error("cannot read scenario {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl HabitatError {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        HabitatError::SchemaError { path: path.into(), message: message.into() }
    }
}

const TABLE6: &str = include_str!("../../assets/scenarios/table6.json");
const FIG9: &str = include_str!("../../assets/scenarios/fig9.json");
const MODESWITCH: &str = include_str!("../../assets/scenarios/modeswitch.json");

/// Names of the scenario suites shipped with the crate.
pub const BUNDLED: [&str; 3] = ["table6", "fig9", "modeswitch"];

pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "table6" => Some(TABLE6),
        "fig9" => Some(FIG9),
        "modeswitch" => Some(MODESWITCH),
        _ => None,
    }
}
