use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKind {
    Temperature,
    Humidity,
    Gas,
    Flame,
    Relay,
    Anchor,
    Tag,
    Coordinator,
}

impl DeviceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviceKind::Temperature => "temperature",
            DeviceKind::Humidity => "humidity",
            DeviceKind::Gas => "gas",
            DeviceKind::Flame => "flame",
            DeviceKind::Relay => "relay",
            DeviceKind::Anchor => "anchor",
            DeviceKind::Tag => "tag",
            DeviceKind::Coordinator => "coordinator",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
    }

    /// Sampled every tick.
    pub fn is_periodic(self) -> bool {
        matches!(self, DeviceKind::Temperature | DeviceKind::Humidity)
    }

    /// Publishes on state change only.
    pub fn is_event_driven(self) -> bool {
        matches!(self, DeviceKind::Gas | DeviceKind::Flame)
    }

    fn default_baseline(self) -> serde_json::Value {
        match self {
            DeviceKind::Temperature => 22.0.into(),
            DeviceKind::Humidity => 45.0.into(),
            DeviceKind::Gas | DeviceKind::Flame => false.into(),
            _ => serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DeviceSpec {
    pub id: String,
    pub kind: DeviceKind,
    pub room: String,
    pub essential: bool,
    /// Defaults to `home/{room}/{id}/{kind}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    /// Resting reading: a number for periodic sensors, a boolean for gas/flame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<serde_json::Value>,
}

impl DeviceSpec {
    pub fn new(id: &str, kind: DeviceKind, room: &str, essential: bool) -> Self {
        DeviceSpec { id: id.into(), kind, room: room.into(), essential, topic: None, baseline: None }
    }

    pub fn topic(&self) -> String {
        self.topic.clone().unwrap_or_else(|| format!("home/{}/{}/{}", self.room, self.id, self.kind.as_str()))
    }

    /// Command topic for relays.
    pub fn set_topic(&self) -> String {
        format!("{}/set", self.topic())
    }

    pub fn baseline(&self) -> serde_json::Value {
        self.baseline.clone().unwrap_or_else(|| self.kind.default_baseline())
    }

    pub fn publishes(&self) -> bool {
        self.kind.is_periodic() || self.kind.is_event_driven()
    }
}

pub const DEFAULT_ENVIRONMENTAL_DEVICES: u32 = 8;

/// 14 essential devices (positioning, gas/flame detection, relays and the
/// kitchen thermometer) plus `environmental` non-essential comfort sensors.
pub fn default_fleet(environmental: u32) -> Vec<DeviceSpec> {
    use DeviceKind::*;
    let mut gas = DeviceSpec::new("kitchen-gas", Gas, "kitchen", true);
    gas.topic = Some("home/kitchen/gas".into());
    let mut fleet = vec![
        DeviceSpec::new("anchor-1", Anchor, "living", true),
        DeviceSpec::new("anchor-2", Anchor, "living", true),
        DeviceSpec::new("anchor-3", Anchor, "living", true),
        DeviceSpec::new("tag", Tag, "living", true),
        DeviceSpec::new("coordinator", Coordinator, "living", true),
        gas,
        DeviceSpec::new("washing-gas", Gas, "washing", true),
        DeviceSpec::new("kitchen-flame", Flame, "kitchen", true),
        DeviceSpec::new("bedroom-flame", Flame, "bedroom", true),
        DeviceSpec::new("washing-flame", Flame, "washing", true),
        DeviceSpec::new("kitchen-relay", Relay, "kitchen", true),
        DeviceSpec::new("bedroom-relay", Relay, "bedroom", true),
        DeviceSpec::new("washing-relay", Relay, "washing", true),
        DeviceSpec::new("kitchen-temperature", Temperature, "kitchen", true),
    ];
    const ROOMS: [&str; 4] = ["bedroom", "washing", "living", "kitchen"];
    for k in 0..environmental as usize {
        let kind = if k % 2 == 0 { Temperature } else { Humidity };
        let room = ROOMS[(k / 2) % ROOMS.len()];
        fleet.push(DeviceSpec::new(&format!("env-{}", k + 1), kind, room, false));
    }
    fleet
}
