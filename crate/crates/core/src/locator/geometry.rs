use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use super::{LocatorError, Result};

pub const DEFAULT_TAG_HEIGHT: f64 = 1.2;

/// Point in room coordinates, meters. Serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Position { x, y, z }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (*self - *other).norm()
    }

    pub fn horizontal_distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Position {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Position { x, y, z }
    }
}

impl From<Position> for [f64; 3] {
    fn from(p: Position) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Add for Position {
    type Output = Position;
    fn add(self, o: Position) -> Position {
        Position::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Position {
    type Output = Position;
    fn sub(self, o: Position) -> Position {
        Position::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3}, {:.3})", self.x, self.y, self.z)
    }
}

/// Axis-aligned room volume with one corner at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomBox {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
}

impl Default for RoomBox {
    fn default() -> Self {
        RoomBox { width: 8.5, depth: 4.6, height: 2.0 }
    }
}

impl RoomBox {
    pub fn contains(&self, p: &Position) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.depth).contains(&p.y) && (0.0..=self.height).contains(&p.z)
    }

    pub fn clamp(&self, p: Position) -> Position {
        Position::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.depth), p.z.clamp(0.0, self.height))
    }

    pub fn center(&self) -> Position {
        Position::new(self.width / 2.0, self.depth / 2.0, self.height / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub id: String,
    pub position: Position,
}

/// Fixed UWB anchors of one room plus the configured tag wear height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnchorSet {
    pub anchors: Vec<Anchor>,
    #[serde(default)]
    pub room: RoomBox,
    #[serde(default = "default_tag_height")]
    pub tag_height: f64,
}

fn default_tag_height() -> f64 {
    DEFAULT_TAG_HEIGHT
}

impl AnchorSet {
    pub fn new(anchors: Vec<Anchor>, room: RoomBox, tag_height: f64) -> Result<Self> {
        let set = AnchorSet { anchors, room, tag_height };
        set.validate()?;
        Ok(set)
    }

    /// Three anchors at 1.5 m in the corners of the default 8.5 x 4.6 m room.
    pub fn default_room() -> Self {
        let a = |id: &str, x, y| Anchor { id: id.into(), position: Position::new(x, y, 1.5) };
        AnchorSet::new(
            vec![a("A1", 0.0, 0.0), a("A2", 8.5, 0.0), a("A3", 0.0, 4.6)],
            RoomBox::default(),
            DEFAULT_TAG_HEIGHT,
        )
        .expect("default anchors are valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.anchors.len() < 3 {
            return Err(LocatorError::InsufficientAnchors(self.anchors.len()));
        }
        if self.anchors.iter().any(|a| !a.position.is_finite()) {
            return Err(LocatorError::InvalidParameter("anchor position not finite".into()));
        }
        if !self.spans_horizontal_plane() {
            return Err(LocatorError::CollinearAnchors);
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Anchor> {
        self.anchors.iter().find(|a| a.id == id)
    }

    fn spans_horizontal_plane(&self) -> bool {
        let pts: Vec<&Position> = self.anchors.iter().map(|a| &a.position).collect();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                for k in j + 1..pts.len() {
                    let (a, b, c) = (pts[i], pts[j], pts[k]);
                    let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
                    if cross.abs() > 1e-6 {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Whether the vertical coordinate is observable from these anchors.
    /// Three anchors, or any number at one height, leave z ambiguous.
    pub fn resolves_height(&self) -> bool {
        if self.anchors.len() < 4 {
            return false;
        }
        let z0 = self.anchors[0].position.z;
        self.anchors.iter().any(|a| (a.position.z - z0).abs() > 1e-6)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Range {
    pub anchor_id: String,
    pub range: f64,
    pub timestamp: f64,
}

/// One epoch of tag-to-anchor distances.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RangeSet {
    pub ranges: Vec<Range>,
}

impl RangeSet {
    pub fn from_values(anchors: &AnchorSet, values: &[f64], timestamp: f64) -> Self {
        RangeSet {
            ranges: anchors
                .anchors
                .iter()
                .zip(values)
                .map(|(a, &r)| Range { anchor_id: a.id.clone(), range: r, timestamp })
                .collect(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.ranges.iter().map(|r| r.range).collect()
    }
}
