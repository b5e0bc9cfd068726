use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use super::frame::{Frame, Op};
use super::loss::LossModel;
use super::topic::matches;
use super::MeshError;

pub type ClientId = u64;

/// A frame addressed to one client.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub to: ClientId,
    pub frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PublishOutcome {
    pub deliveries: Vec<Delivery>,
    pub dropped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BrokerStats {
    pub published: u64,
    pub delivered: u64,
    pub dropped: u64,
}

#[derive(Debug, Default)]
struct Client {
    name: Option<String>,
    connected: bool,
    filters: Vec<String>,
}

const DEVICE_PREFIX: &str = "sys/device/";
const DEVICE_SUFFIX: &str = "/active";

/// Broker state machine. Every frame is handled atomically and yields the
/// deliveries it causes; transports own the actual sockets.
///
/// Frames on `sys/...` are never lost. Retained `sys/device/{id}/active`
/// frames are also watched to keep the loss model's active-device count.
#[derive(Debug)]
pub struct Broker {
    clients: BTreeMap<ClientId, Client>,
    retained: BTreeMap<String, Frame>,
    loss: LossModel,
    publish_counts: BTreeMap<String, u64>,
    inactive_devices: BTreeSet<String>,
    stats: BrokerStats,
    dropped_topics: Vec<String>,
    next_client: ClientId,
}

impl Default for Broker {
    fn default() -> Self {
        Broker::new(LossModel::lossless())
    }
}

impl Broker {
    pub fn new(loss: LossModel) -> Self {
        Broker {
            clients: BTreeMap::new(),
            retained: BTreeMap::new(),
            loss,
            publish_counts: BTreeMap::new(),
            inactive_devices: BTreeSet::new(),
            stats: BrokerStats::default(),
            dropped_topics: Vec::new(),
            next_client: 1,
        }
    }

    pub fn loss_model(&self) -> &LossModel {
        &self.loss
    }

    /// Replaces the loss model; per-topic ordinals carry on.
    pub fn set_loss_model(&mut self, loss: LossModel) -> Result<(), MeshError> {
        loss.validate()?;
        self.loss = loss;
        Ok(())
    }

    pub fn stats(&self) -> BrokerStats {
        self.stats
    }

    /// Topics of frames dropped since the last call.
    pub fn take_dropped(&mut self) -> Vec<String> {
        std::mem::take(&mut self.dropped_topics)
    }

    pub fn retained(&self, topic: &str) -> Option<&Frame> {
        self.retained.get(topic)
    }

    /// Allocates a client slot that must send `connect` before anything else.
    pub fn register(&mut self) -> ClientId {
        let id = self.next_client;
        self.next_client += 1;
        self.clients.insert(id, Client::default());
        id
    }

    /// Registers and connects in one step (in-process clients).
    pub fn connect(&mut self, name: &str) -> ClientId {
        let id = self.register();
        let c = self.clients.get_mut(&id).expect("just registered");
        c.name = Some(name.to_string());
        c.connected = true;
        id
    }

    pub fn disconnect(&mut self, client: ClientId) {
        self.clients.remove(&client);
    }

    pub fn client_name(&self, client: ClientId) -> Option<&str> {
        self.clients.get(&client).and_then(|c| c.name.as_deref())
    }

    fn connected(&self, client: ClientId) -> Result<(), MeshError> {
        match self.clients.get(&client) {
            Some(c) if c.connected => Ok(()),
            _ => Err(MeshError::NotConnected(client)),
        }
    }

    /// Applies one inbound frame. Replies (ack/pong) are addressed back to
    /// `client`.
    pub fn handle(&mut self, client: ClientId, frame: Frame) -> Result<Vec<Delivery>, MeshError> {
        frame.validate()?;
        if frame.op == Op::Connect {
            let c = self.clients.get_mut(&client).ok_or(MeshError::NotConnected(client))?;
            c.connected = true;
            c.name = frame.payload.get("client").and_then(Value::as_str).map(String::from).or(c.name.take());
            return Ok(vec![Delivery { to: client, frame: Frame::ack(frame.id) }]);
        }
        self.connected(client)?;
        let reply = |f: Frame| Delivery { to: client, frame: f };
        Ok(match frame.op {
            Op::Pub => self.publish(client, frame)?.deliveries,
            Op::Sub => {
                let id = frame.id;
                let mut out = vec![reply(Frame::ack(id))];
                out.extend(self.subscribe(client, frame.topic())?);
                out
            }
            Op::Unsub => {
                self.unsubscribe(client, frame.topic())?;
                vec![reply(Frame::ack(frame.id))]
            }
            Op::Ping => vec![reply(Frame::pong(frame.id))],
            Op::Pong | Op::Ack | Op::Connect => vec![],
        })
    }

    /// Adds a filter; returns the retained frames it matches, in topic order.
    pub fn subscribe(&mut self, client: ClientId, filter: &str) -> Result<Vec<Delivery>, MeshError> {
        self.connected(client)?;
        super::topic::validate_filter(filter)?;
        let c = self.clients.get_mut(&client).expect("checked");
        if !c.filters.iter().any(|f| f == filter) {
            c.filters.push(filter.to_string());
        }
        let mut out = Vec::new();
        for (topic, frame) in &self.retained {
            if matches(filter, topic)? {
                out.push(Delivery { to: client, frame: frame.clone() });
            }
        }
        self.stats.delivered += out.len() as u64;
        Ok(out)
    }

    pub fn unsubscribe(&mut self, client: ClientId, filter: &str) -> Result<(), MeshError> {
        self.connected(client)?;
        super::topic::validate_filter(filter)?;
        self.clients.get_mut(&client).expect("checked").filters.retain(|f| f != filter);
        Ok(())
    }

    pub fn publish(&mut self, client: ClientId, frame: Frame) -> Result<PublishOutcome, MeshError> {
        self.connected(client)?;
        if frame.op != Op::Pub {
            return Err(MeshError::MalformedFrame(format!("{:?} is not a publish", frame.op)));
        }
        frame.validate()?;
        let topic = frame.topic().to_string();
        self.stats.published += 1;
        let nth = {
            let n = self.publish_counts.entry(topic.clone()).or_insert(0);
            *n += 1;
            *n
        };
        if !topic.starts_with("sys/") && self.loss.drops(&topic, nth) {
            self.stats.dropped += 1;
            self.dropped_topics.push(topic);
            return Ok(PublishOutcome { deliveries: vec![], dropped: true });
        }
        self.observe_device(&topic, &frame.payload);
        if frame.retain {
            if frame.payload.is_null() {
                self.retained.remove(&topic);
            } else {
                self.retained.insert(topic.clone(), frame.clone());
            }
        }
        let mut deliveries = Vec::new();
        for (&id, c) in &self.clients {
            if !c.connected {
                continue;
            }
            for f in &c.filters {
                if matches(f, &topic)? {
                    deliveries.push(Delivery { to: id, frame: frame.clone() });
                    break;
                }
            }
        }
        self.stats.delivered += deliveries.len() as u64;
        Ok(PublishOutcome { deliveries, dropped: false })
    }

    fn observe_device(&mut self, topic: &str, payload: &Value) {
        let Some(device) = topic.strip_prefix(DEVICE_PREFIX).and_then(|r| r.strip_suffix(DEVICE_SUFFIX)) else {
            return;
        };
        if device.contains('/') {
            return;
        }
        let active = payload.as_bool().or_else(|| payload.get("active").and_then(Value::as_bool));
        match active {
            Some(false) => {
                self.inactive_devices.insert(device.to_string());
            }
            Some(true) => {
                self.inactive_devices.remove(device);
            }
            None => return,
        }
        let inactive = self.inactive_devices.len() as u32;
        self.loss.active_devices = self.loss.max_devices.saturating_sub(inactive);
    }
}
