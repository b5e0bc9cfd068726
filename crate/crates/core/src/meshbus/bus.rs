use std::collections::{BTreeMap, VecDeque};
use std::sync::{mpsc, Arc, Mutex};

use super::broker::{Broker, ClientId, Delivery};
use super::frame::Frame;
use super::MeshError;

/// Where a client's deliveries go.
#[derive(Debug)]
pub enum Sink {
    /// Polled by an in-process client.
    Queue(VecDeque<Frame>),
    /// Forwarded to a transport thread.
    Channel(mpsc::Sender<Frame>),
}

/// A broker plus per-client delivery sinks.
#[derive(Debug)]
pub struct Bus {
    broker: Broker,
    sinks: BTreeMap<ClientId, Sink>,
}

pub type SharedBus = Arc<Mutex<Bus>>;

impl Bus {
    pub fn new(broker: Broker) -> Self {
        Bus { broker, sinks: BTreeMap::new() }
    }

    pub fn shared(self) -> SharedBus {
        Arc::new(Mutex::new(self))
    }

    pub fn broker(&self) -> &Broker {
        &self.broker
    }

    pub fn broker_mut(&mut self) -> &mut Broker {
        &mut self.broker
    }

    /// Connected in-process client with a polled queue.
    pub fn connect_local(&mut self, name: &str) -> ClientId {
        let id = self.broker.connect(name);
        self.sinks.insert(id, Sink::Queue(VecDeque::new()));
        id
    }

    /// Unconnected slot for a remote peer; it must send `connect` first.
    pub fn attach_remote(&mut self, sender: mpsc::Sender<Frame>) -> ClientId {
        let id = self.broker.register();
        self.sinks.insert(id, Sink::Channel(sender));
        id
    }

    pub fn detach(&mut self, client: ClientId) {
        self.broker.disconnect(client);
        self.sinks.remove(&client);
    }

    fn route(&mut self, deliveries: Vec<Delivery>) {
        let mut gone = Vec::new();
        for d in deliveries {
            match self.sinks.get_mut(&d.to) {
                Some(Sink::Queue(q)) => q.push_back(d.frame),
                Some(Sink::Channel(tx)) if tx.send(d.frame).is_err() => gone.push(d.to),
                Some(Sink::Channel(_)) => {}
                None => {}
            }
        }
        for id in gone {
            self.detach(id);
        }
    }

    pub fn handle(&mut self, client: ClientId, frame: Frame) -> Result<(), MeshError> {
        let deliveries = self.broker.handle(client, frame)?;
        self.route(deliveries);
        Ok(())
    }

    /// Publishes; returns whether the frame was dropped by the loss model.
    pub fn publish(&mut self, client: ClientId, frame: Frame) -> Result<bool, MeshError> {
        let out = self.broker.publish(client, frame)?;
        self.route(out.deliveries);
        Ok(out.dropped)
    }

    pub fn subscribe(&mut self, client: ClientId, filter: &str) -> Result<(), MeshError> {
        let d = self.broker.subscribe(client, filter)?;
        self.route(d);
        Ok(())
    }

    pub fn unsubscribe(&mut self, client: ClientId, filter: &str) -> Result<(), MeshError> {
        self.broker.unsubscribe(client, filter)
    }

    /// Takes everything queued for an in-process client.
    pub fn drain(&mut self, client: ClientId) -> Vec<Frame> {
        match self.sinks.get_mut(&client) {
            Some(Sink::Queue(q)) => q.drain(..).collect(),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn local_and_channel_sinks() {
        let mut bus = Bus::new(Broker::default());
        let a = bus.connect_local("a");
        let (tx, rx) = mpsc::channel();
        let r = bus.attach_remote(tx);
        bus.handle(r, Frame::connect("remote")).unwrap();
        bus.handle(r, Frame::subscribe("care/#").with_id(2)).unwrap();
        bus.subscribe(a, "care/+").unwrap();
        bus.publish(a, Frame::publish("care/reminder", json!({"voice": 5, "image": 4}))).unwrap();
        let got: Vec<Frame> = rx.try_iter().collect();
        assert_eq!(got.len(), 3); // connect ack, sub ack, publish
        assert_eq!(got[2].topic(), "care/reminder");
        assert_eq!(bus.drain(a).len(), 1);
        assert!(bus.drain(a).is_empty());
        drop(rx);
        bus.publish(a, Frame::publish("care/mode", json!({"mode": "automated"}))).unwrap();
        // the dead channel is detached on first failed send
        assert!(bus.publish(r, Frame::publish("care/mode", json!(1))).is_err());
    }
}
