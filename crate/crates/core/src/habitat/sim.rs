use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::schema::{EventKind, Scenario};
use super::trajectory::position_at;
use crate::gamescore::{report_for_score, score_session, select_series, ScoreReport};
use crate::locator::{simulate_ranges, solve_position, AnchorSet, LocatorError, Position};
use crate::meshbus::{keyed_unit, Frame};

const RANGE_STREAM: u64 = 0x7261_6e67_6573;
const GAME_STREAM: u64 = 0x6761_6d65;

/// Scenario clock; advances only through [`Habitat::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    tick: u64,
    pub tick_interval: f64,
}

impl SimClock {
    pub fn new(tick_interval: f64) -> Self {
        SimClock { tick: 0, tick_interval }
    }

    /// Seconds since scenario start; computed from the tick index so long
    /// runs do not accumulate rounding.
    pub fn now(&self) -> f64 {
        self.tick as f64 * self.tick_interval
    }

    pub fn tick_index(&self) -> u64 {
        self.tick
    }

    fn advance(&mut self) {
        self.tick += 1;
    }
}

#[derive(Debug, Clone)]
struct DeviceState {
    active: bool,
    value: Value,
    dirty: bool,
}

/// One running scenario.
#[derive(Debug)]
pub struct Habitat {
    scenario: Scenario,
    anchors: AnchorSet,
    clock: SimClock,
    range_rng: ChaCha8Rng,
    game_rng: ChaCha8Rng,
    devices: Vec<DeviceState>,
    next_event: usize,
    series_history: Vec<u8>,
    pending_scores: Vec<(f64, ScoreReport)>,
    last_fix: Option<Position>,
}

impl Habitat {
    pub fn new(scenario: Scenario) -> Self {
        let devices = scenario
            .devices
            .iter()
            .map(|d| DeviceState { active: true, value: d.baseline(), dirty: d.kind.is_event_driven() })
            .collect();
        Habitat {
            anchors: scenario.anchor_set(),
            clock: SimClock::new(scenario.tick_seconds),
            range_rng: ChaCha8Rng::seed_from_u64(scenario.seed ^ RANGE_STREAM),
            game_rng: ChaCha8Rng::seed_from_u64(scenario.seed ^ GAME_STREAM),
            devices,
            next_event: 0,
            series_history: Vec::new(),
            pending_scores: Vec::new(),
            last_fix: None,
            scenario,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    pub fn is_finished(&self) -> bool {
        self.clock.tick_index() >= self.scenario.tick_count()
    }

    /// Filters the simulator listens on.
    pub fn subscriptions() -> &'static [&'static str] {
        &["sys/device/+/active", "care/game"]
    }

    pub fn is_active(&self, device: &str) -> Option<bool> {
        self.scenario.devices.iter().position(|d| d.id == device).map(|i| self.devices[i].active)
    }

    /// Ground-truth resident position at `t`, inside the room.
    pub fn truth_at(&self, t: f64) -> Position {
        let s = &self.scenario;
        s.room.clamp(position_at(&s.waypoints, s.spawn, s.tag_height, t))
    }

    /// Reacts to device activation changes and game starts.
    pub fn receive(&mut self, frame: &Frame) {
        let topic = frame.topic();
        if let Some(id) = topic.strip_prefix("sys/device/").and_then(|r| r.strip_suffix("/active")) {
            let active = frame.payload.as_bool().or_else(|| frame.payload.get("active").and_then(Value::as_bool));
            if let (Some(i), Some(active)) = (self.scenario.devices.iter().position(|d| d.id == id), active) {
                self.devices[i].active = active;
            }
        } else if topic == "care/game" && frame.payload.get("start").and_then(Value::as_bool) == Some(true) {
            let Some(player) = self.scenario.player.clone() else { return };
            let series = frame
                .payload
                .get("seriesId")
                .and_then(Value::as_u64)
                .map(|s| s as u8)
                .unwrap_or_else(|| select_series(&self.series_history, &mut self.game_rng));
            match player.model.simulate(player.ability, series, &mut self.game_rng).and_then(|s| score_session(&s)) {
                Ok(report) => {
                    self.series_history.push(series);
                    let due = self.clock.now() + report.total_seconds;
                    self.pending_scores.push((due, report));
                }
                Err(e) => log::warn!("simulated session rejected: {e}"),
            }
        }
    }

    /// Emits everything due at the current tick and advances the clock.
    /// Past the end of the scenario nothing is emitted.
    pub fn step(&mut self) -> Vec<Frame> {
        if self.is_finished() {
            return Vec::new();
        }
        let t = self.clock.now();
        let tick = self.clock.tick_index();
        let mut out = Vec::new();

        while let Some(e) = self.scenario.events.get(self.next_event) {
            if e.t > t + 1e-9 {
                break;
            }
            let kind = e.kind.clone();
            self.next_event += 1;
            self.fire(kind, &mut out);
        }
        let (due, later): (Vec<_>, Vec<_>) = self.pending_scores.drain(..).partition(|(d, _)| *d <= t + 1e-9);
        self.pending_scores = later;
        for (_, report) in due {
            out.push(score_frame(&report));
        }

        if let Some(p) = self.locate(t) {
            out.push(p);
        }
        self.sample_sensors(tick, &mut out);
        self.clock.advance();
        out
    }

    fn fire(&mut self, kind: EventKind, out: &mut Vec<Frame>) {
        match kind {
            EventKind::Sensor { device, value } => {
                if let Some(i) = self.scenario.devices.iter().position(|d| d.id == device) {
                    if self.devices[i].value != value {
                        self.devices[i].value = value;
                        self.devices[i].dirty = true;
                    }
                }
            }
            EventKind::GameScore { score100, session, ability } => {
                let report = if let Some(s) = score100 {
                    let series = select_series(&self.series_history, &mut self.game_rng);
                    report_for_score(s, series)
                } else if let Some(session) = session {
                    score_session(&session)
                } else {
                    let series = select_series(&self.series_history, &mut self.game_rng);
                    crate::gamescore::PlayerModel::default()
                        .simulate(ability.unwrap_or(0.0), series, &mut self.game_rng)
                        .and_then(|s| score_session(&s))
                };
                match report {
                    Ok(r) => {
                        self.series_history.push(r.series_id);
                        out.push(score_frame(&r));
                    }
                    Err(e) => log::warn!("game score event rejected: {e}"),
                }
            }
            EventKind::CaregiverOverride { mode, reminder, rules } => {
                if let Some(mode) = mode {
                    out.push(Frame::publish("care/mode", json!({ "mode": mode, "origin": "caregiver" })));
                }
                if let Some(r) = reminder {
                    out.push(Frame::publish(
                        "care/reminder",
                        json!({ "voice": r.voice, "image": r.image, "origin": "caregiver" }),
                    ));
                }
                if let Some(edit) = rules {
                    let mut payload = serde_json::to_value(edit).expect("rule edits serialize");
                    payload["origin"] = json!("caregiver");
                    out.push(Frame::publish("care/rules", payload));
                }
            }
        }
    }

    fn locate(&mut self, t: f64) -> Option<Frame> {
        let truth = self.truth_at(t);
        let fix = simulate_ranges(&truth, &self.anchors, self.scenario.range_sigma, t, &mut self.range_rng)
            .and_then(|ranges| solve_position(&ranges, &self.anchors, self.last_fix));
        let fix = match fix {
            Ok(fix) => fix,
            Err(LocatorError::NonConvergence { best }) => best,
            Err(e) => {
                log::warn!("no position fix at t={t}: {e}");
                return None;
            }
        };
        let p = self.scenario.room.clamp(fix.position);
        self.last_fix = Some(p);
        Some(Frame::retained(
            "user/position",
            json!({ "t": t, "x": p.x, "y": p.y, "z": p.z, "residual": fix.residual_norm }),
        ))
    }

    fn sample_sensors(&mut self, tick: u64, out: &mut Vec<Frame>) {
        let sigma = self.scenario.sensor_sigma;
        let seed = self.scenario.seed;
        for (spec, state) in self.scenario.devices.iter().zip(self.devices.iter_mut()) {
            if !state.active {
                continue;
            }
            if spec.kind.is_periodic() {
                let base = state.value.as_f64().unwrap_or(0.0);
                let reading = if sigma > 0.0 { base + sigma * keyed_normal(seed, &spec.id, tick) } else { base };
                out.push(Frame::retained(spec.topic(), json!(reading)));
            } else if spec.kind.is_event_driven() && state.dirty {
                state.dirty = false;
                out.push(Frame::retained(spec.topic(), state.value.clone()));
            }
        }
    }
}

fn score_frame(r: &ScoreReport) -> Frame {
    Frame::retained("user/game/score", serde_json::to_value(r).expect("score reports serialize"))
}

/// Standard normal keyed by (seed, device, tick), independent of which other
/// devices are sampling.
fn keyed_normal(seed: u64, device: &str, tick: u64) -> f64 {
    let u1 = keyed_unit(seed, device, 2 * tick).max(f64::MIN_POSITIVE);
    let u2 = keyed_unit(seed, device, 2 * tick + 1);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::habitat::load_suite;

    fn scenario(extra: &str) -> Scenario {
        let duration = if extra.contains("durationSeconds") { "" } else { r#", "durationSeconds": 60"# };
        let text = format!(r#"{{"name": "t", "tickSeconds": 1 {duration} {extra}}}"#);
        load_suite(&text).unwrap().runs.remove(0)
    }

    fn run(h: &mut Habitat) -> Vec<(f64, Frame)> {
        let mut log = vec![];
        while !h.is_finished() {
            let t = h.clock().now();
            log.extend(h.step().into_iter().map(|f| (t, f)));
        }
        log
    }

    #[test]
    fn scripted_gas_event() {
        let mut h = Habitat::new(scenario(
            r#", "events": [{"t": 30, "kind": "sensor", "device": "kitchen-gas", "value": true}]"#,
        ));
        let log = run(&mut h);
        let gas: Vec<_> = log.iter().filter(|(_, f)| f.topic() == "home/kitchen/gas").collect();
        assert_eq!(gas.len(), 2);
        assert_eq!((gas[0].0, &gas[0].1.payload), (0.0, &json!(false)));
        assert_eq!((gas[1].0, &gas[1].1.payload), (30.0, &json!(true)));
        assert_eq!(log.iter().filter(|(_, f)| f.topic() == "user/position").count(), 61);
        assert!(h.step().is_empty());
    }

    #[test]
    fn positions_follow_waypoints_inside_room() {
        let mut h = Habitat::new(scenario(
            r#", "rangeSigma": 0.3, "seed": 5, "trajectory": [{"t": 0, "x": 0.05, "y": 0.05}, {"t": 60, "x": 8.45, "y": 4.55}]"#,
        ));
        let room = h.scenario().room;
        let mid = h.truth_at(30.0);
        assert!((mid.x - 4.25).abs() < 1e-12 && (mid.y - 2.3).abs() < 1e-12);
        for (_, f) in run(&mut h).iter().filter(|(_, f)| f.topic() == "user/position") {
            let p = Position::new(
                f.payload["x"].as_f64().unwrap(),
                f.payload["y"].as_f64().unwrap(),
                f.payload["z"].as_f64().unwrap(),
            );
            assert!(room.contains(&p), "{p:?}");
        }
    }

    #[test]
    fn noiseless_fix_matches_truth() {
        let mut h = Habitat::new(scenario(r#", "trajectory": [{"t": 0, "x": 2, "y": 3}]"#));
        let f = h.step().into_iter().find(|f| f.topic() == "user/position").unwrap();
        assert!((f.payload["x"].as_f64().unwrap() - 2.0).abs() < 1e-6);
        assert!((f.payload["y"].as_f64().unwrap() - 3.0).abs() < 1e-6);
    }

    #[test]
    fn inactive_devices_fall_silent() {
        let mut h = Habitat::new(scenario(r#", "sensorSigma": 0.5"#));
        for _ in 0..10 {
            h.step();
        }
        h.receive(&Frame::retained("sys/device/env-1/active", json!(false)));
        assert_eq!(h.is_active("env-1"), Some(false));
        let log = run(&mut h);
        assert!(log.iter().all(|(_, f)| f.topic() != "home/bedroom/env-1/temperature"));
        assert_eq!(log.iter().filter(|(_, f)| f.topic() == "home/bedroom/env-2/humidity").count(), 51);
    }

    #[test]
    fn deterministic_under_seed() {
        let extra = r#", "seed": 11, "rangeSigma": 0.1, "sensorSigma": 0.2,
            "events": [{"t": 5, "kind": "gameScore", "ability": 0.7}, {"t": 6, "kind": "gameScore", "score100": 55}]"#;
        let a = run(&mut Habitat::new(scenario(extra)));
        let b = run(&mut Habitat::new(scenario(extra)));
        assert_eq!(a, b);
        let scores: Vec<_> = a.iter().filter(|(_, f)| f.topic() == "user/game/score").collect();
        assert_eq!(scores.len(), 2);
        assert_eq!(scores[1].1.payload["score100"], json!(55));
        assert_ne!(scores[0].1.payload["seriesId"], scores[1].1.payload["seriesId"]);
    }

    #[test]
    fn player_answers_game_start() {
        let mut h = Habitat::new(scenario(r#", "durationSeconds": 1000, "player": {"ability": 1.0}"#));
        h.step();
        h.receive(&Frame::publish("care/game", json!({"start": true, "seriesId": 2})));
        let log = run(&mut h);
        let score: Vec<_> = log.iter().filter(|(_, f)| f.topic() == "user/game/score").collect();
        assert_eq!(score.len(), 1);
        assert_eq!(score[0].1.payload["points"], json!(5));
        assert_eq!(score[0].1.payload["seriesId"], json!(2));
    }

    #[test]
    fn caregiver_frames() {
        let mut h = Habitat::new(scenario(
            r#", "events": [{"t": 0, "kind": "caregiverOverride", "mode": "automated", "reminder": {"voice": 5, "image": 4},
                "rules": {"op": "disable", "id": 4}}]"#,
        ));
        let f = h.step();
        assert_eq!(f[0].payload, json!({"mode": "automated", "origin": "caregiver"}));
        assert_eq!(f[1].payload, json!({"voice": 5, "image": 4, "origin": "caregiver"}));
        assert_eq!(f[2].payload, json!({"op": "disable", "id": 4, "origin": "caregiver"}));
    }
}
