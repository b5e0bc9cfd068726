use serde::{Deserialize, Serialize};

use crate::locator::Position;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Walk a polygon at constant speed between `from` and `until`, looping back
/// to the first vertex after the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Patrol {
    pub from: f64,
    pub until: f64,
    pub path: Vec<[f64; 2]>,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrajectoryEntry {
    Waypoint(Waypoint),
    Patrol { patrol: Patrol },
}

/// Waypoints at every vertex passed plus the stopping point at `until`.
pub fn expand_patrol(p: &Patrol) -> Result<Vec<Waypoint>, String> {
    if p.path.len() < 2 {
        return Err("patrol path needs at least two points".into());
    }
    if !(p.speed.is_finite() && p.speed > 0.0) {
        return Err(format!("patrol speed {} must be positive", p.speed));
    }
    if !(p.until > p.from) {
        return Err("patrol `until` must be after `from`".into());
    }
    let n = p.path.len();
    let lap: f64 = (0..n).map(|i| seg_len(p.path[i], p.path[(i + 1) % n])).sum();
    if lap == 0.0 {
        return Err("patrol path has zero length".into());
    }
    let mut out = vec![Waypoint { t: p.from, x: p.path[0][0], y: p.path[0][1] }];
    let mut t = p.from;
    let mut i = 0;
    loop {
        let (a, b) = (p.path[i % n], p.path[(i + 1) % n]);
        i += 1;
        let len = seg_len(a, b);
        if len == 0.0 {
            continue;
        }
        let dt = len / p.speed;
        if t + dt >= p.until {
            let f = (p.until - t) / dt;
            out.push(Waypoint { t: p.until, x: a[0] + f * (b[0] - a[0]), y: a[1] + f * (b[1] - a[1]) });
            return Ok(out);
        }
        t += dt;
        out.push(Waypoint { t, x: b[0], y: b[1] });
    }
}

fn seg_len(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Piecewise-linear position at `t`; holds the end points outside the span.
pub fn position_at(waypoints: &[Waypoint], spawn: [f64; 2], z: f64, t: f64) -> Position {
    let (Some(first), Some(last)) = (waypoints.first(), waypoints.last()) else {
        return Position::new(spawn[0], spawn[1], z);
    };
    if t <= first.t {
        return Position::new(first.x, first.y, z);
    }
    if t >= last.t {
        return Position::new(last.x, last.y, z);
    }
    let k = waypoints.partition_point(|w| w.t <= t);
    let (a, b) = (waypoints[k - 1], waypoints[k]);
    let f = (t - a.t) / (b.t - a.t);
    Position::new(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), z)
}
