use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::fleet::{default_fleet, DeviceKind, DeviceSpec, DEFAULT_ENVIRONMENTAL_DEVICES};
use super::trajectory::{expand_patrol, TrajectoryEntry, Waypoint};
use super::HabitatError;
use crate::fuzzy::RuleEdit;
use crate::gamescore::{GameSession, PlayerModel};
use crate::locator::{Anchor, AnchorSet, Position, RoomBox, Zone, DEFAULT_NEAR_BAND, DEFAULT_TAG_HEIGHT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: String,
    pub position: Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReminderSpec {
    #[serde(default)]
    pub voice: Option<u32>,
    #[serde(default)]
    pub image: Option<u32>,
}

/// Plays a game session whenever the conductor starts one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PlayerSpec {
    pub ability: f64,
    #[serde(default)]
    pub model: PlayerModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum EventKind {
    /// Sets a device reading from this time on.
    Sensor { device: String, value: Value },
    /// Publishes a score report. Exactly one of the fields is given: a target
    /// score, a recorded session, or a player ability to simulate.
    #[serde(rename_all = "camelCase")]
    GameScore {
        #[serde(default)]
        score100: Option<u8>,
        #[serde(default)]
        session: Option<GameSession>,
        #[serde(default)]
        ability: Option<f64>,
    },
    /// Console action: a mode command, a manual reminder or a rule edit.
    CaregiverOverride {
        #[serde(default)]
        mode: Option<String>,
        #[serde(default)]
        reminder: Option<ReminderSpec>,
        #[serde(default)]
        rules: Option<RuleEdit>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Every field optional: used for both the suite level and each run.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct Fields {
    name: Option<String>,
    description: Option<String>,
    start_hour: Option<f64>,
    tick_seconds: Option<f64>,
    duration_seconds: Option<f64>,
    seed: Option<u64>,
    room: Option<RoomBox>,
    anchors: Option<Vec<Anchor>>,
    tag_height: Option<f64>,
    range_sigma: Option<f64>,
    sensor_sigma: Option<f64>,
    loss_probability: Option<f64>,
    objects: Option<Vec<ObjectSpec>>,
    zones: Option<Vec<Zone>>,
    zone_band: Option<f64>,
    devices: Option<Vec<DeviceSpec>>,
    environmental_devices: Option<u32>,
    spawn: Option<[f64; 2]>,
    trajectory: Option<Vec<TrajectoryEntry>>,
    events: Option<Vec<ScenarioEvent>>,
    player: Option<PlayerSpec>,
    runs: Option<Vec<Fields>>,
}

impl Fields {
    fn overlay(&self, run: &Fields) -> Fields {
        macro_rules! pick {
            ($($f:ident),*) => { Fields { $($f: run.$f.clone().or_else(|| self.$f.clone()),)* runs: None } };
        }
        pick!(
            name,
            description,
            start_hour,
            tick_seconds,
            duration_seconds,
            seed,
            room,
            anchors,
            tag_height,
            range_sigma,
            sensor_sigma,
            loss_probability,
            objects,
            zones,
            zone_band,
            devices,
            environmental_devices,
            spawn,
            trajectory,
            events,
            player
        )
    }
}

/// One fully resolved simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Scenario {
    pub suite: String,
    pub name: String,
    pub description: String,
    /// Clock hour at t = 0.
    pub start_hour: f64,
    pub tick_seconds: f64,
    pub duration_seconds: f64,
    pub seed: u64,
    pub room: RoomBox,
    pub anchors: Vec<Anchor>,
    pub tag_height: f64,
    pub range_sigma: f64,
    pub sensor_sigma: f64,
    pub loss_probability: f64,
    pub objects: Vec<ObjectSpec>,
    pub zones: Vec<Zone>,
    pub zone_band: f64,
    pub devices: Vec<DeviceSpec>,
    pub spawn: [f64; 2],
    pub waypoints: Vec<Waypoint>,
    pub events: Vec<ScenarioEvent>,
    pub player: Option<PlayerSpec>,
}

impl Scenario {
    pub fn anchor_set(&self) -> AnchorSet {
        AnchorSet { anchors: self.anchors.clone(), room: self.room, tag_height: self.tag_height }
    }

    pub fn device(&self, id: &str) -> Option<&DeviceSpec> {
        self.devices.iter().find(|d| d.id == id)
    }

    /// Ticks at t = 0, dt, 2dt, ... up to and including the duration.
    pub fn tick_count(&self) -> u64 {
        (self.duration_seconds / self.tick_seconds + 1e-9).floor() as u64 + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub name: String,
    pub runs: Vec<Scenario>,
}

pub fn default_objects() -> Vec<ObjectSpec> {
    vec![
        ObjectSpec { id: "fridge".into(), position: Position::new(8.0, 4.2, 1.0) },
        ObjectSpec { id: "wardrobe".into(), position: Position::new(0.5, 4.2, 1.0) },
    ]
}

/// Four 0.52 x 0.7 x 0.23 m floor zones along the front wall, images 16-19.
pub fn default_zones() -> Vec<Zone> {
    (0..4)
        .map(|i| Zone {
            id: i + 1,
            min: Position::new(1.0 + 2.0 * f64::from(i), 1.0, 0.0),
            size: [0.52, 0.7, 0.23],
            image_message_id: 16 + i,
        })
        .collect()
}

/// Parses a scenario or suite document.
pub fn load_suite(text: &str) -> Result<Suite, HabitatError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let fields: Fields = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        HabitatError::schema(path, e.into_inner().to_string())
    })?;
    let suite_name = fields.name.clone().ok_or_else(|| HabitatError::schema("name", "missing suite name"))?;
    let runs = match &fields.runs {
        None => vec![resolve(&suite_name, suite_name.clone(), &fields, "")?],
        Some(runs) if runs.is_empty() => return Err(HabitatError::schema("runs", "empty run list")),
        Some(runs) => runs
            .iter()
            .enumerate()
            .map(|(i, run)| {
                if run.runs.is_some() {
                    return Err(HabitatError::schema(format!("runs[{i}].runs"), "runs cannot nest"));
                }
                let name = run.name.clone().unwrap_or_else(|| format!("{suite_name}-{}", i + 1));
                resolve(&suite_name, name, &fields.overlay(run), &format!("runs[{i}]."))
            })
            .collect::<Result<_, _>>()?,
    };
    Ok(Suite { name: suite_name, runs })
}

pub fn load_suite_file(path: &Path) -> Result<Suite, HabitatError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| HabitatError::Io { path: path.display().to_string(), source })?;
    load_suite(&text)
}

fn resolve(suite: &str, name: String, f: &Fields, at: &str) -> Result<Scenario, HabitatError> {
    let err = |field: &str, msg: String| HabitatError::schema(format!("{at}{field}"), msg);
    let positive = |field: &str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(err(field, format!("{v} must be positive")))
        }
    };
    let non_negative = |field: &str, v: f64| {
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(err(field, format!("{v} must be non-negative")))
        }
    };

    let start_hour = f.start_hour.unwrap_or(8.0);
    if !(0.0..24.0).contains(&start_hour) {
        return Err(err("startHour", format!("{start_hour} outside [0, 24)")));
    }
    let tick_seconds = positive("tickSeconds", f.tick_seconds.unwrap_or(1.0))?;
    let duration_seconds =
        non_negative("durationSeconds", f.duration_seconds.ok_or_else(|| err("durationSeconds", "missing".into()))?)?;
    let room = f.room.unwrap_or_default();
    for (field, v) in [("room.width", room.width), ("room.depth", room.depth), ("room.height", room.height)] {
        positive(field, v)?;
    }
    let anchors = f.anchors.clone().unwrap_or_else(|| AnchorSet::default_room().anchors);
    let tag_height = non_negative("tagHeight", f.tag_height.unwrap_or(DEFAULT_TAG_HEIGHT))?;
    let set = AnchorSet { anchors: anchors.clone(), room, tag_height };
    set.validate().map_err(|e| err("anchors", e.to_string()))?;

    let range_sigma = non_negative("rangeSigma", f.range_sigma.unwrap_or(0.0))?;
    let sensor_sigma = non_negative("sensorSigma", f.sensor_sigma.unwrap_or(0.0))?;
    let loss_probability = f.loss_probability.unwrap_or(0.0);
    if !(0.0..=1.0).contains(&loss_probability) {
        return Err(err("lossProbability", format!("{loss_probability} outside [0, 1]")));
    }

    let objects = f.objects.clone().unwrap_or_else(default_objects);
    let mut seen = BTreeSet::new();
    for (i, o) in objects.iter().enumerate() {
        if !seen.insert(o.id.as_str()) {
            return Err(err(&format!("objects[{i}].id"), format!("duplicate object {:?}", o.id)));
        }
        if !o.position.is_finite() {
            return Err(err(&format!("objects[{i}].position"), "non-finite".into()));
        }
    }
    let zones = f.zones.clone().unwrap_or_else(default_zones);
    for (i, z) in zones.iter().enumerate() {
        let max = z.max();
        if z.size.iter().any(|s| !(s.is_finite() && *s > 0.0)) || !room.contains(&z.min) || !room.contains(&max) {
            return Err(err(&format!("zones[{i}]"), "zone box must be non-empty and inside the room".into()));
        }
    }
    let zone_band = non_negative("zoneBand", f.zone_band.unwrap_or(DEFAULT_NEAR_BAND))?;

    let devices = match (&f.devices, f.environmental_devices) {
        (Some(_), Some(_)) => {
            return Err(err("environmentalDevices", "give either `devices` or `environmentalDevices`".into()))
        }
        (Some(d), None) => d.clone(),
        (None, n) => default_fleet(n.unwrap_or(DEFAULT_ENVIRONMENTAL_DEVICES)),
    };
    let mut ids = BTreeSet::new();
    let mut topics = BTreeSet::new();
    for (i, d) in devices.iter().enumerate() {
        if !ids.insert(d.id.clone()) {
            return Err(err(&format!("devices[{i}].id"), format!("duplicate device {:?}", d.id)));
        }
        if d.id.is_empty() || d.id.contains(['/', '+', '#']) {
            return Err(err(&format!("devices[{i}].id"), "ids are single topic levels".into()));
        }
        crate::meshbus::validate_topic(&d.topic()).map_err(|e| err(&format!("devices[{i}].topic"), e.to_string()))?;
        if d.publishes() && !topics.insert(d.topic()) {
            return Err(err(&format!("devices[{i}].topic"), format!("topic {} shared", d.topic())));
        }
        let b = d.baseline();
        let ok = match d.kind {
            k if k.is_periodic() => b.is_number(),
            k if k.is_event_driven() => b.is_boolean(),
            _ => true,
        };
        if !ok {
            return Err(err(
                &format!("devices[{i}].baseline"),
                format!("{b} does not suit a {} device", d.kind.as_str()),
            ));
        }
    }

    let mut waypoints: Vec<Waypoint> = Vec::new();
    for (i, entry) in f.trajectory.iter().flatten().enumerate() {
        let path = format!("trajectory[{i}]");
        let new = match entry {
            TrajectoryEntry::Waypoint(w) => vec![*w],
            TrajectoryEntry::Patrol { patrol } => expand_patrol(patrol).map_err(|m| err(&path, m))?,
        };
        for w in new {
            if ![w.t, w.x, w.y].iter().all(|v| v.is_finite()) {
                return Err(err(&path, "non-finite waypoint".into()));
            }
            if let Some(prev) = waypoints.last() {
                if !(w.t > prev.t) {
                    return Err(err(&format!("{path}.t"), format!("time {} not after {}", w.t, prev.t)));
                }
            }
            waypoints.push(w);
        }
    }
    let spawn = f.spawn.unwrap_or_else(|| {
        let c = room.center();
        [c.x, c.y]
    });

    let events = f.events.clone().unwrap_or_default();
    let mut last_t = f64::NEG_INFINITY;
    for (i, e) in events.iter().enumerate() {
        let path = format!("events[{i}]");
        if !(e.t.is_finite() && e.t >= 0.0) || e.t < last_t {
            return Err(err(&format!("{path}.t"), "event times must be non-negative and non-decreasing".into()));
        }
        last_t = e.t;
        match &e.kind {
            EventKind::Sensor { device, value } => {
                let d = devices
                    .iter()
                    .find(|d| &d.id == device)
                    .ok_or_else(|| err(&format!("{path}.device"), format!("unknown device {device:?}")))?;
                let ok = match d.kind {
                    DeviceKind::Gas | DeviceKind::Flame => value.is_boolean(),
                    DeviceKind::Temperature | DeviceKind::Humidity => value.is_number(),
                    _ => false,
                };
                if !ok {
                    return Err(err(&format!("{path}.value"), format!("{value} is not a {} reading", d.kind.as_str())));
                }
            }
            EventKind::GameScore { score100, session, ability } => {
                let given =
                    usize::from(score100.is_some()) + usize::from(session.is_some()) + usize::from(ability.is_some());
                if given != 1 {
                    return Err(err(&path, "gameScore needs exactly one of score100, session, ability".into()));
                }
                if let Some(s) = score100 {
                    crate::gamescore::report_for_score(*s, 1)
                        .map_err(|e| err(&format!("{path}.score100"), e.to_string()))?;
                }
                if let Some(s) = session {
                    crate::gamescore::score_session(s).map_err(|e| err(&format!("{path}.session"), e.to_string()))?;
                }
                if let Some(a) = ability {
                    if !(0.0..=1.0).contains(a) {
                        return Err(err(&format!("{path}.ability"), format!("{a} outside [0, 1]")));
                    }
                }
            }
            EventKind::CaregiverOverride { mode, reminder, rules } => {
                if mode.is_none() && reminder.is_none() && rules.is_none() {
                    return Err(err(&path, "caregiverOverride carries nothing".into()));
                }
                if let Some(m) = mode {
                    if !["automated", "semiAutomated", "adaptive"].contains(&m.as_str()) {
                        return Err(err(&format!("{path}.mode"), format!("unknown mode {m:?}")));
                    }
                }
            }
        }
    }
    if let Some(p) = &f.player {
        if !(0.0..=1.0).contains(&p.ability) {
            return Err(err("player.ability", format!("{} outside [0, 1]", p.ability)));
        }
    }

    Ok(Scenario {
        suite: suite.to_string(),
        name,
        description: f.description.clone().unwrap_or_default(),
        start_hour,
        tick_seconds,
        duration_seconds,
        seed: f.seed.unwrap_or(0),
        room,
        anchors,
        tag_height,
        range_sigma,
        sensor_sigma,
        loss_probability,
        objects,
        zones,
        zone_band,
        devices,
        spawn,
        waypoints,
        events,
        player: f.player.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_path(text: &str) -> String {
        match load_suite(text) {
            Err(HabitatError::SchemaError { path, .. }) => path,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_document_uses_defaults() {
        let s = load_suite(r#"{"name": "quiet", "durationSeconds": 10}"#).unwrap();
        assert_eq!(s.runs.len(), 1);
        let r = &s.runs[0];
        assert_eq!(r.devices.len(), 22);
        assert_eq!(r.zones.len(), 4);
        assert_eq!(r.start_hour, 8.0);
        assert_eq!(r.tick_count(), 11);
        assert!(r.waypoints.is_empty());
    }

    #[test]
    fn runs_override_suite_fields() {
        let s = load_suite(
            r#"{"name": "s", "durationSeconds": 10, "seed": 3,
                "runs": [{"seed": 4}, {"name": "late", "startHour": 20, "environmentalDevices": 12}]}"#,
        )
        .unwrap();
        assert_eq!(s.runs[0].name, "s-1");
        assert_eq!((s.runs[0].seed, s.runs[1].seed), (4, 3));
        assert_eq!(s.runs[1].name, "late");
        assert_eq!(s.runs[1].start_hour, 20.0);
        assert_eq!(s.runs[1].devices.len(), 26);
    }

    #[test]
    fn schema_errors_carry_paths() {
        assert_eq!(
            err_path(
                r#"{"name": "s", "durationSeconds": 10, "trajectory": [{"t": 5, "x": 1, "y": 1}, {"t": 2, "x": 1, "y": 1}]}"#
            ),
            "trajectory[1].t"
        );
        assert_eq!(
            err_path(r#"{"name": "s", "durationSeconds": 10, "runs": [{}, {"tickSeconds": "x"}]}"#),
            "runs[1].tickSeconds"
        );
        assert_eq!(
            err_path(
                r#"{"name": "s", "durationSeconds": 1, "events": [{"t": 0, "kind": "sensor", "device": "nope", "value": true}]}"#
            ),
            "events[0].device"
        );
        assert_eq!(
            err_path(
                r#"{"name": "s", "durationSeconds": 1, "events": [{"t": 0, "kind": "gameScore", "score100": 5}]}"#
            ),
            "events[0].score100"
        );
        assert_eq!(err_path(r#"{"name": "s", "durationSeconds": 1, "bogus": 1}"#), "bogus");
        assert_eq!(err_path(r#"{"durationSeconds": 1}"#), "name");
        assert_eq!(
            err_path(
                r#"{"name": "s", "durationSeconds": 1, "anchors": [{"id": "a", "position": [0,0,1]}, {"id": "b", "position": [1,1,1]}, {"id": "c", "position": [2,2,1]}]}"#
            ),
            "anchors"
        );
    }

    #[test]
    fn bundled_suites_load() {
        for name in super::super::BUNDLED {
            let suite = load_suite(super::super::bundled(name).unwrap()).unwrap();
            assert!(!suite.runs.is_empty(), "{name}");
        }
        let t6 = load_suite(super::super::bundled("table6").unwrap()).unwrap();
        assert_eq!(t6.runs.len(), 4);
        for r in &t6.runs {
            assert_eq!(r.zones.len(), 4);
            assert_eq!(r.devices.len(), 22);
        }
    }
}
