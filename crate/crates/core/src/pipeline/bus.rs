use std::collections::BTreeMap;

use crate::beliefs::ClassId;
use crate::controller::SpeedCommand;
use crate::track::ConeScene;

pub mod topics {
    pub const SCENE: &str = "/perception/scene";
    pub const PREDICTION: &str = "/perception/track_class";
    pub const SPEED_REQUEST: &str = "/planner/speed_request";
    pub const SPEED_COMMAND: &str = "/system_controller/speed_command";
    pub const ODOMETRY: &str = "/vehicle/odometry";
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Scene { segment: usize, scene: ConeScene },
    Prediction { class: ClassId, entropy_bits: f64 },
    SpeedRequest { rpm: f64 },
    SpeedCommand(SpeedCommand),
    Odometry { position_m: f64, segment: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub topic: String,
    pub tick: u64,
    /// Global publish order.
    pub seq: u64,
    pub payload: Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subscription(usize);

/// In-process synchronous pub/sub bus.
///
/// Every message is appended to a global log; each subscription keeps a
/// cursor into its topic so a message is delivered exactly once, in publish
/// order.
#[derive(Debug, Default)]
pub struct Bus {
    log: Vec<Message>,
    by_topic: BTreeMap<String, Vec<usize>>,
    cursors: Vec<(String, usize)>,
}

impl Bus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn subscribe(&mut self, topic: &str) -> Subscription {
        let start = self.by_topic.get(topic).map_or(0, Vec::len);
        self.cursors.push((topic.to_string(), start));
        Subscription(self.cursors.len() - 1)
    }

    pub fn publish(&mut self, topic: &str, tick: u64, payload: Payload) {
        let seq = self.log.len() as u64;
        self.by_topic.entry(topic.to_string()).or_default().push(self.log.len());
        self.log.push(Message {
            topic: topic.to_string(),
            tick,
            seq,
            payload,
        });
    }

    /// Messages published on the subscribed topic since the last poll.
    pub fn poll(&mut self, sub: Subscription) -> Vec<Message> {
        let (topic, cursor) = &mut self.cursors[sub.0];
        let Some(indices) = self.by_topic.get(topic.as_str()) else {
            return Vec::new();
        };
        let fresh: Vec<Message> = indices[*cursor..].iter().map(|&i| self.log[i].clone()).collect();
        *cursor = indices.len();
        fresh
    }

    pub fn log(&self) -> &[Message] {
        &self.log
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delivery_is_exactly_once_and_ordered() {
        let mut bus = Bus::new();
        let a = bus.subscribe("/a");
        bus.publish("/a", 0, Payload::SpeedRequest { rpm: 1.0 });
        bus.publish("/b", 0, Payload::SpeedRequest { rpm: 9.0 });
        bus.publish("/a", 0, Payload::SpeedRequest { rpm: 2.0 });
        let got: Vec<u64> = bus.poll(a).iter().map(|m| m.seq).collect();
        assert_eq!(got, vec![0, 2]);
        assert!(bus.poll(a).is_empty());
        let late = bus.subscribe("/a");
        assert!(bus.poll(late).is_empty());
        bus.publish("/a", 1, Payload::SpeedRequest { rpm: 3.0 });
        assert_eq!(bus.poll(late).len(), 1);
        assert_eq!(bus.poll(a).len(), 1);
    }
}
