use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::mode::{evaluate_mode_switch, Mode, ModePolicy, ModeSwitch};
use super::registry::{apply_registry_mode, DeviceRegistry};
use super::ConductorError;
use crate::analytics::RunEvent;
use crate::fuzzy::{
    fuzzify, infer_decision, CrispInputSnapshot, Origin, RuleBase, RuleClass, RuleDocument, RuleEdit, RuleId,
    RuleStore, DEFAULT_THRESHOLD,
};
use crate::gamescore::select_series;
use crate::habitat::{DeviceKind, DeviceSpec, ObjectSpec, Scenario};
use crate::locator::{zone_check, MovementLedger, Position, Zone};
use crate::meshbus::Frame;

pub const DEFAULT_FRESHNESS_TICKS: u64 = 30;
pub const DEFAULT_HYSTERESIS: u32 = 3;
const MOVEMENT_PUBLISH_SECONDS: f64 = 60.0;
const SERIES_STREAM: u64 = 0x7365_7269_6573;

/// Everything the conductor needs to know about the home.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConductorConfig {
    pub start_hour: f64,
    pub tick_seconds: f64,
    pub objects: Vec<ObjectSpec>,
    pub zones: Vec<Zone>,
    pub zone_band: f64,
    pub devices: Vec<DeviceSpec>,
    pub policy: ModePolicy,
    pub threshold: f64,
    pub freshness_ticks: u64,
    pub hysteresis: u32,
    pub seed: u64,
}

impl ConductorConfig {
    pub fn from_scenario(s: &Scenario, policy: ModePolicy) -> Self {
        ConductorConfig {
            start_hour: s.start_hour,
            tick_seconds: s.tick_seconds,
            objects: s.objects.clone(),
            zones: s.zones.clone(),
            zone_band: s.zone_band,
            devices: s.devices.clone(),
            policy,
            threshold: DEFAULT_THRESHOLD,
            freshness_ticks: DEFAULT_FRESHNESS_TICKS,
            hysteresis: DEFAULT_HYSTERESIS,
            seed: s.seed,
        }
    }
}

/// Counters for one run; all monotone.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunMetrics {
    pub reminder_count: u64,
    pub alarm_count: u64,
    pub dropped_messages: u64,
    pub device_active_seconds: f64,
    /// Rising edges of each rule's activation.
    pub per_rule_fire_counts: BTreeMap<RuleId, u64>,
    /// Reminder dispatches withheld by semi-automated mode.
    pub suppressed_count: u64,
    pub stale_inputs: u64,
    pub rejected_edits: u64,
}

#[derive(Debug, Clone, Default)]
struct Latest {
    position: Option<(Position, u64)>,
    score: Option<u8>,
    /// device index -> (value, tick of arrival)
    readings: BTreeMap<usize, (Value, u64)>,
}

/// A message-bearing winner of this tick's decision.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Emission {
    voice: Option<u32>,
    image: Option<u32>,
}

pub struct Conductor {
    cfg: ConductorConfig,
    store: Arc<RuleStore>,
    registry: DeviceRegistry,
    mode: Mode,
    override_mode: Option<Mode>,
    switch: ModeSwitch,
    ledger: MovementLedger,
    topic_index: BTreeMap<String, usize>,
    latest: Latest,
    stale: BTreeSet<String>,
    prev_emitters: BTreeSet<RuleId>,
    prev_fired: BTreeSet<RuleId>,
    relays_on: Vec<usize>,
    game_running: bool,
    series_history: Vec<u8>,
    series_rng: ChaCha8Rng,
    last_movement_pub: Option<f64>,
    ticks: u64,
    metrics: RunMetrics,
    events: Vec<RunEvent>,
}

impl Conductor {
    pub fn new(cfg: ConductorConfig, store: Arc<RuleStore>) -> Self {
        let mut registry = DeviceRegistry::from_specs(&cfg.devices);
        let mode = cfg.policy.initial_mode();
        apply_registry_mode(&mut registry, mode);
        let topic_index = cfg.devices.iter().enumerate().map(|(i, d)| (d.topic(), i)).collect();
        let ledger = MovementLedger::default().with_day_offset(cfg.start_hour * 3600.0);
        Conductor {
            switch: ModeSwitch::new(cfg.hysteresis),
            series_rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ SERIES_STREAM),
            registry,
            mode,
            override_mode: None,
            ledger,
            topic_index,
            latest: Latest::default(),
            stale: BTreeSet::new(),
            prev_emitters: BTreeSet::new(),
            prev_fired: BTreeSet::new(),
            relays_on: Vec::new(),
            game_running: false,
            series_history: Vec::new(),
            last_movement_pub: None,
            ticks: 0,
            metrics: RunMetrics::default(),
            events: Vec::new(),
            store,
            cfg,
        }
    }

    pub fn config(&self) -> &ConductorConfig {
        &self.cfg
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn registry(&self) -> &DeviceRegistry {
        &self.registry
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    pub fn movement_hours(&self) -> f64 {
        self.ledger.accumulated_hours
    }

    pub fn store(&self) -> &Arc<RuleStore> {
        &self.store
    }

    /// Run events recorded so far.
    pub fn events(&self) -> &[RunEvent] {
        &self.events
    }

    pub fn take_events(&mut self) -> Vec<RunEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn subscriptions() -> &'static [&'static str] {
        &["user/#", "home/#", "care/#"]
    }

    /// Retained state published before the first tick.
    pub fn initial_frames(&self) -> Vec<Frame> {
        let mut out = self.registry.state_frames();
        out.push(self.mode_frame());
        out.push(self.rules_frame(None));
        out
    }

    fn mode_frame(&self) -> Frame {
        Frame::retained(
            "sys/mode",
            json!({
                "mode": self.mode.as_str(),
                "policy": self.cfg.policy.as_str(),
                "override": self.override_mode.map(Mode::as_str),
                "activeDevices": self.registry.active_count(),
            }),
        )
    }

    fn rules_frame(&self, error: Option<String>) -> Frame {
        let (version, base) = self.store.versioned();
        let rules: Vec<Value> = base
            .rules()
            .map(|r| json!({ "id": r.id, "name": r.name, "enabled": r.enabled, "origin": r.origin, "class": r.class }))
            .collect();
        let mut payload = json!({ "version": version, "rules": rules });
        if let Some(e) = error {
            payload["error"] = json!(e);
        }
        Frame::retained("sys/rules", payload)
    }

    /// Broker-side losses observed by the runner.
    pub fn note_dropped(&mut self, t: f64, topics: Vec<String>) {
        for topic in topics {
            self.metrics.dropped_messages += 1;
            self.events.push(RunEvent::Dropped { t, topic });
        }
    }

    fn set_mode(&mut self, t: f64, mode: Mode, out: &mut Vec<Frame>) {
        if mode == self.mode {
            return;
        }
        log::info!("t={t}: mode {} -> {}", self.mode.as_str(), mode.as_str());
        self.mode = mode;
        self.events.push(RunEvent::Mode { t, mode: mode.as_str().to_string() });
        out.extend(apply_registry_mode(&mut self.registry, mode));
        out.push(self.mode_frame());
    }

    /// Applies one delivered frame; may answer with frames of its own.
    pub fn receive(&mut self, t: f64, frame: &Frame) -> Vec<Frame> {
        let mut out = Vec::new();
        let topic = frame.topic();
        let p = &frame.payload;
        let from_system = p.get("origin").and_then(Value::as_str) == Some("system");
        match topic {
            "user/position" => {
                let coord = |k: &str| p.get(k).and_then(Value::as_f64);
                if let (Some(x), Some(y), Some(z)) = (coord("x"), coord("y"), coord("z")) {
                    let pos = Position::new(x, y, z);
                    let at = coord("t").unwrap_or(t);
                    if let Err(e) = self.ledger.accumulate(pos, at) {
                        log::debug!("position ignored: {e}");
                    }
                    self.latest.position = Some((pos, self.ticks));
                }
            }
            "user/game/score" => {
                let Some(score) = p.get("score100").and_then(Value::as_u64).filter(|s| *s <= 100) else {
                    return out;
                };
                let score = score as u8;
                self.latest.score = Some(score);
                self.events.push(RunEvent::Score { t, score100: score });
                if self.cfg.policy == ModePolicy::Adaptive && self.override_mode.is_none() {
                    let base = self.store.snapshot();
                    let target = evaluate_mode_switch(score, self.mode, None, &base);
                    if let Some(m) = self.switch.observe(target, self.mode) {
                        self.set_mode(t, m, &mut out);
                    }
                }
            }
            "care/mode" if !from_system => match p.get("mode").and_then(Value::as_str) {
                Some("adaptive") => {
                    self.override_mode = None;
                    self.switch.reset();
                    out.push(self.mode_frame());
                }
                Some(m) => match Mode::parse(m) {
                    Some(m) => {
                        self.override_mode = Some(m);
                        if m == self.mode {
                            out.push(self.mode_frame());
                        } else {
                            self.set_mode(t, m, &mut out);
                        }
                    }
                    None => log::warn!("unknown mode command {m:?}"),
                },
                None => log::warn!("mode command without a mode"),
            },
            "care/rules" if !from_system => {
                let result = if p.get("op").is_some() {
                    serde_json::from_value::<RuleEdit>(p.clone())
                        .map_err(|e| e.to_string())
                        .and_then(|edit| self.store.apply(&edit).map_err(|e| e.to_string()))
                } else {
                    serde_json::from_value::<RuleDocument>(p.clone())
                        .map_err(|e| e.to_string())
                        .and_then(|doc| RuleBase::from_document(doc).map_err(|e| e.to_string()))
                        .map(|base| self.store.replace(base))
                };
                match result {
                    Ok(v) => {
                        log::info!("rule base now at version {v}");
                        out.push(self.rules_frame(None));
                    }
                    Err(e) => {
                        log::warn!("rule edit rejected: {e}");
                        self.metrics.rejected_edits += 1;
                        out.push(self.rules_frame(Some(e)));
                    }
                }
            }
            t if t.starts_with("home/") && !t.ends_with("/set") => {
                let idx = self.topic_index.get(t).copied();
                if let Some(i) = idx {
                    self.latest.readings.insert(i, (p.clone(), self.ticks));
                }
            }
            _ => {}
        }
        out
    }

    fn devices_of(&self, kind: DeviceKind) -> impl Iterator<Item = (usize, &DeviceSpec)> {
        self.cfg.devices.iter().enumerate().filter(move |(_, d)| d.kind == kind)
    }

    fn readings_of(&self, kind: DeviceKind) -> Vec<(usize, &Value)> {
        self.devices_of(kind).filter_map(|(i, _)| self.latest.readings.get(&i).map(|(v, _)| (i, v))).collect()
    }

    fn snapshot(&self, t: f64, base: &RuleBase) -> CrispInputSnapshot {
        let mut snap = CrispInputSnapshot::at(t);
        snap.set("time", (self.cfg.start_hour + t / 3600.0).rem_euclid(24.0));
        snap.set("movement", self.ledger.accumulated_hours);
        if let Some((pos, _)) = self.latest.position {
            for o in &self.cfg.objects {
                snap.set(&format!("distance_{}", o.id), pos.distance(&o.position));
            }
            let zone = zone_check(&pos, &self.cfg.zones, self.cfg.zone_band).map_or(0, |z| z.id);
            snap.set("danger_zone", f64::from(zone));
        }
        if let Some(s) = self.latest.score {
            snap.set("game_score", f64::from(s));
        }
        for (kind, var) in [(DeviceKind::Gas, "gas"), (DeviceKind::Flame, "flame")] {
            let r = self.readings_of(kind);
            if !r.is_empty() {
                snap.set(var, r.iter().any(|(_, v)| v.as_bool() == Some(true)));
            }
        }
        for (kind, var) in [(DeviceKind::Temperature, "temperature"), (DeviceKind::Humidity, "humidity")] {
            let vals: Vec<f64> = self.readings_of(kind).iter().filter_map(|(_, v)| v.as_f64()).collect();
            if !vals.is_empty() {
                snap.set(var, vals.iter().sum::<f64>() / vals.len() as f64);
            }
        }
        snap.values.retain(|name, _| base.variable(name).is_some_and(|v| v.role == crate::fuzzy::Role::Input));
        snap
    }

    fn check_freshness(&mut self) {
        let window = self.cfg.freshness_ticks;
        let mut sources: Vec<(String, Option<u64>)> =
            vec![("user/position".to_string(), self.latest.position.map(|(_, k)| k))];
        for (i, d) in self.cfg.devices.iter().enumerate() {
            if d.kind.is_periodic() && self.registry.is_active(&d.id) == Some(true) {
                sources.push((d.topic(), self.latest.readings.get(&i).map(|(_, k)| *k)));
            }
        }
        for (name, last) in sources {
            let age = self.ticks - last.unwrap_or(0);
            if age > window {
                if self.stale.insert(name.clone()) {
                    self.metrics.stale_inputs += 1;
                    log::warn!("stale input {name}: no update for {age} ticks");
                }
            } else {
                self.stale.remove(&name);
            }
        }
    }

    /// Runs one decision cycle at scenario time `t`.
    pub fn tick(&mut self, t: f64) -> Result<Vec<Frame>, ConductorError> {
        self.ticks += 1;
        self.check_freshness();
        let base = self.store.snapshot();
        let snap = self.snapshot(t, &base);
        let decision = infer_decision(&base, &fuzzify(&base, &snap)?, self.cfg.threshold)?;
        let mut out = Vec::new();

        let fired: BTreeSet<RuleId> = decision.fired_rules.iter().map(|(id, _)| *id).collect();
        for id in fired.difference(&self.prev_fired) {
            *self.metrics.per_rule_fire_counts.entry(*id).or_insert(0) += 1;
        }
        self.prev_fired = fired;

        let mut emitters: BTreeMap<RuleId, Emission> = BTreeMap::new();
        for sel in &decision.selections {
            let e = emitters.entry(sel.rule);
            match sel.var.as_str() {
                "voice_message" => e.or_insert(Emission { voice: None, image: None }).voice = sel.value.parse().ok(),
                "image_message" => e.or_insert(Emission { voice: None, image: None }).image = sel.value.parse().ok(),
                _ => {}
            }
        }
        for (&id, em) in &emitters {
            if self.prev_emitters.contains(&id) {
                continue;
            }
            let Some(rule) = base.rule(id) else { continue };
            if self.mode == Mode::SemiAutomated && rule.class.suppressible() && rule.origin == Origin::Builtin {
                self.metrics.suppressed_count += 1;
                continue;
            }
            let mut payload = json!({ "voice": em.voice, "image": em.image, "rule": id, "t": t, "origin": "system" });
            match rule.class {
                RuleClass::Alert | RuleClass::Safety => {
                    let kind = rule.alert_kind().to_string();
                    payload["kind"] = json!(kind);
                    out.push(Frame::publish(format!("alert/{kind}"), payload));
                    self.metrics.alarm_count += 1;
                    self.events.push(RunEvent::Alarm {
                        t,
                        kind,
                        voice_message_id: em.voice,
                        image_message_id: em.image,
                    });
                }
                RuleClass::Reminder | RuleClass::Control => {
                    out.push(Frame::publish("care/reminder", payload));
                    self.metrics.reminder_count += 1;
                    self.events.push(RunEvent::Reminder { t, voice_message_id: em.voice, image_message_id: em.image });
                }
            }
        }
        self.prev_emitters = emitters.into_keys().collect();

        self.drive_relays(t, decision.relay_status == Some(true), &mut out);

        let game = decision.game_start == Some(true);
        if game && !self.game_running {
            let series = select_series(&self.series_history, &mut self.series_rng);
            self.series_history.push(series);
            out.push(Frame::publish(
                "care/game",
                json!({ "start": true, "seriesId": series, "t": t, "origin": "system" }),
            ));
        }
        self.game_running = game;

        if self.last_movement_pub.is_none_or(|last| t - last >= MOVEMENT_PUBLISH_SECONDS) {
            self.last_movement_pub = Some(t);
            out.push(Frame::retained("user/movement", json!({ "t": t, "hours": self.ledger.accumulated_hours })));
        }

        let active = self.registry.active_count();
        self.metrics.device_active_seconds += self.cfg.tick_seconds * f64::from(active);
        self.events.push(RunEvent::Tick { t, dt: self.cfg.tick_seconds, active });
        Ok(out)
    }

    /// Relays follow the decision's relay output: on a rising edge the relays
    /// in rooms with an active hazard (all relays if none is known) close;
    /// on the falling edge the same relays open.
    fn drive_relays(&mut self, t: f64, on: bool, out: &mut Vec<Frame>) {
        let was_on = !self.relays_on.is_empty();
        if on && !was_on {
            let hazard_rooms: BTreeSet<&str> = [DeviceKind::Gas, DeviceKind::Flame]
                .into_iter()
                .flat_map(|k| self.readings_of(k))
                .filter(|(_, v)| v.as_bool() == Some(true))
                .map(|(i, _)| self.cfg.devices[i].room.as_str())
                .collect();
            let relays: Vec<usize> = self.devices_of(DeviceKind::Relay).map(|(i, _)| i).collect();
            let mut chosen: Vec<usize> =
                relays.iter().copied().filter(|&i| hazard_rooms.contains(self.cfg.devices[i].room.as_str())).collect();
            if chosen.is_empty() {
                chosen = relays;
            }
            for &i in &chosen {
                out.push(Frame::publish(
                    self.cfg.devices[i].set_topic(),
                    json!({ "on": true, "t": t, "origin": "system" }),
                ));
            }
            self.relays_on = chosen;
        } else if !on && was_on {
            for i in std::mem::take(&mut self.relays_on) {
                out.push(Frame::publish(
                    self.cfg.devices[i].set_topic(),
                    json!({ "on": false, "t": t, "origin": "system" }),
                ));
            }
        }
    }

    /// Closes the run's event log with the final movement reading.
    pub fn finish(&mut self, t: f64) {
        self.events.push(RunEvent::Movement { t, hours: self.ledger.accumulated_hours });
    }
}
