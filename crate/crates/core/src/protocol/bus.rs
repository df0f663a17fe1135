//! Lossless delayed delivery of protocol messages.

use std::collections::BTreeMap;

use crate::epidemic::Tick;

use super::CtsMessage;

/// The network between endpoints.
///
/// Every sent message is delivered exactly once, `latency` ticks after it
/// was sent; nothing is dropped or reordered within a (sender, receiver)
/// link because messages queued for the same delivery tick drain in send
/// order. Latency zero means same-tick delivery.
#[derive(Debug, Default)]
pub struct MessageBus {
    queue: BTreeMap<Tick, Vec<CtsMessage>>,
    sent: u64,
    delivered: u64,
}

impl MessageBus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn send(&mut self, message: CtsMessage, latency: Tick) {
        let due = message.sent_at.saturating_add(latency);
        self.queue.entry(due).or_default().push(message);
        self.sent += 1;
    }

    /// Removes and returns every message whose delivery tick is `<= now`,
    /// ordered by delivery tick and then by send order.
    pub fn due(&mut self, now: Tick) -> Vec<CtsMessage> {
        let mut out = Vec::new();
        while let Some((&tick, _)) = self.queue.first_key_value() {
            if tick > now {
                break;
            }
            let (_, batch) = self.queue.pop_first().expect("key observed above");
            out.extend(batch);
        }
        self.delivered += out.len() as u64;
        out
    }

    /// Messages still waiting for their delivery tick.
    pub fn in_flight(&self) -> usize {
        self.queue.values().map(Vec::len).sum()
    }

    pub fn sent_count(&self) -> u64 {
        self.sent
    }

    pub fn delivered_count(&self) -> u64 {
        self.delivered
    }
}
