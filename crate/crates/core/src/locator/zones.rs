use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::geometry::Position;
use super::{LocatorError, Result};

/// Default proximity band around a danger zone footprint, meters.
pub const DEFAULT_NEAR_BAND: f64 = 0.1;

/// Axis-aligned danger zone mapped to the image alert shown on entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Zone {
    pub id: u32,
    pub min: Position,
    pub size: [f64; 3],
    pub image_message_id: u32,
}

impl Zone {
    pub fn max(&self) -> Position {
        Position::new(self.min.x + self.size[0], self.min.y + self.size[1], self.min.z + self.size[2])
    }

    pub fn center(&self) -> Position {
        Position::new(self.min.x + self.size[0] / 2.0, self.min.y + self.size[1] / 2.0, self.min.z + self.size[2] / 2.0)
    }
}

/// Horizontal distance from `p` to the zone's floor footprint; 0 inside.
///
/// Zones are low floor-level boxes while the tag is worn at body height, so
/// only the footprint is compared.
pub fn footprint_distance(p: &Position, zone: &Zone) -> f64 {
    let max = zone.max();
    let dx = (zone.min.x - p.x).max(0.0).max(p.x - max.x);
    let dy = (zone.min.y - p.y).max(0.0).max(p.y - max.y);
    dx.hypot(dy)
}

/// First zone whose footprint contains `p` or lies within `band` of it.
pub fn zone_check<'a>(p: &Position, zones: &'a [Zone], band: f64) -> Option<&'a Zone> {
    zones.iter().find(|z| footprint_distance(p, z) <= band)
}

/// Fixed object locations known to the server.
pub type ObjectRegistry = BTreeMap<String, Position>;

pub fn object_distance(p: &Position, objects: &ObjectRegistry, object_id: &str) -> Result<f64> {
    objects.get(object_id).map(|o| p.distance(o)).ok_or_else(|| LocatorError::UnknownObject(object_id.to_string()))
}
