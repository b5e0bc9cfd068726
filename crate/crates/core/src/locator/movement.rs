use serde::{Deserialize, Serialize};

use super::geometry::Position;
use super::{LocatorError, Result};

/// Speed above which an inter-sample interval counts as movement, m/s.
pub const DEFAULT_SPEED_THRESHOLD: f64 = 0.2;

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Accumulated time in motion for the current day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MovementLedger {
    pub accumulated_hours: f64,
    pub last_position: Option<Position>,
    pub last_timestamp: Option<f64>,
    pub speed_threshold: f64,
    /// Seconds after midnight at timestamp 0; fixes the day boundary.
    pub day_offset: f64,
}

impl Default for MovementLedger {
    fn default() -> Self {
        MovementLedger::new(DEFAULT_SPEED_THRESHOLD)
    }
}

impl MovementLedger {
    pub fn new(speed_threshold: f64) -> Self {
        MovementLedger {
            accumulated_hours: 0.0,
            last_position: None,
            last_timestamp: None,
            speed_threshold,
            day_offset: 0.0,
        }
    }

    pub fn with_day_offset(mut self, seconds_after_midnight: f64) -> Self {
        self.day_offset = seconds_after_midnight;
        self
    }

    fn day_of(&self, t: f64) -> i64 {
        ((self.day_offset + t) / SECONDS_PER_DAY).floor() as i64
    }

    /// Adds the interval since the previous sample when the implied speed
    /// exceeds the threshold. Crossing midnight starts a fresh day.
    pub fn accumulate(&mut self, position: Position, timestamp: f64) -> Result<()> {
        if let (Some(last_p), Some(last_t)) = (self.last_position, self.last_timestamp) {
            if !(timestamp > last_t) {
                return Err(LocatorError::NonMonotonicTimestamp { last: last_t, got: timestamp });
            }
            if self.day_of(timestamp) != self.day_of(last_t) {
                self.accumulated_hours = 0.0;
            } else {
                let dt = timestamp - last_t;
                if position.distance(&last_p) / dt > self.speed_threshold {
                    self.accumulated_hours += dt / 3600.0;
                }
            }
        }
        self.last_position = Some(position);
        self.last_timestamp = Some(timestamp);
        Ok(())
    }
}
