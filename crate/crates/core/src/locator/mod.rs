//! Indoor positioning: simulated UWB ranging, double-sided two-way ranging,
//! true-range multilateration, object distances, danger-zone checks and the
//! daily movement ledger.

mod geometry;
mod movement;
mod ranging;
mod solver;
mod zones;

pub use geometry::{Anchor, AnchorSet, Position, Range, RangeSet, RoomBox, DEFAULT_TAG_HEIGHT};
pub use movement::{MovementLedger, DEFAULT_SPEED_THRESHOLD};
pub use ranging::{ds_twr_time_of_flight, simulate_ranges, TwrExchange, SPEED_OF_LIGHT};
pub use solver::{solve_position, Fix, FixTrace, MAX_ITERATIONS, STEP_TOLERANCE};
pub use zones::{footprint_distance, object_distance, zone_check, ObjectRegistry, Zone, DEFAULT_NEAR_BAND};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocatorError {
    #[error("need at least 3 anchors with ranges, got {0}")]
    InsufficientAnchors(usize),
    #[error("anchors are collinear in the horizontal plane")]
    CollinearAnchors,
    #[error("range refers to unknown anchor `{0}`")]
    UnknownAnchor(String),
    #[error("degenerate ranging exchange: {0}")]
    DegenerateExchange(String),
    #[error("solver did not converge in {} iterations (residual {:.3e})", .best.iterations, .best.residual_norm)]
    NonConvergence { best: Fix },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("timestamp {got} does not follow {last}")]
    NonMonotonicTimestamp { last: f64, got: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, LocatorError>;
