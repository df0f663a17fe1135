//! Per-endpoint contact storage with bounded retention.

use std::collections::VecDeque;

use crate::epidemic::{Tick, TraceEvent};

use super::EndpointId;

/// A time-ordered store of trace events kept by one endpoint.
///
/// Entries older than the retention window are discarded, which is what
/// keeps device storage bounded and, more importantly, limits how far back
/// a diagnosis can reach. Exact duplicate events (same pair, same tick,
/// same kind) collapse to one entry, so a device that both sensed a contact
/// itself and later received the peer's copy of it stores it once.
#[derive(Debug, Clone)]
pub struct ContactLog {
    owner: EndpointId,
    retention: Tick,
    entries: VecDeque<TraceEvent>,
}

impl ContactLog {
    pub fn new(owner: EndpointId, retention: Tick) -> Self {
        Self { owner, retention, entries: VecDeque::new() }
    }

    pub fn owner(&self) -> EndpointId {
        self.owner
    }

    pub fn retention(&self) -> Tick {
        self.retention
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts an event, keeping entries sorted by timestamp, then prunes.
    ///
    /// Returns false when the event was already present or has already aged
    /// out relative to `now`.
    pub fn append(&mut self, event: TraceEvent, now: Tick) -> bool {
        self.prune(now);
        if event.timestamp < now.saturating_sub(self.retention) {
            return false;
        }
        // Events arrive almost always in timestamp order, so scan from the
        // back for the insertion point.
        let mut idx = self.entries.len();
        while idx > 0 && self.entries[idx - 1].timestamp > event.timestamp {
            idx -= 1;
        }
        // Duplicates can only live among equal timestamps, directly before
        // the insertion point.
        let mut probe = idx;
        while probe > 0 && self.entries[probe - 1].timestamp == event.timestamp {
            if self.entries[probe - 1] == event {
                return false;
            }
            probe -= 1;
        }
        self.entries.insert(idx, event);
        true
    }

    /// Drops every entry older than `now - retention`.
    pub fn prune(&mut self, now: Tick) {
        let cutoff = now.saturating_sub(self.retention);
        while let Some(front) = self.entries.front() {
            if front.timestamp < cutoff {
                self.entries.pop_front();
            } else {
                break;
            }
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = &TraceEvent> {
        self.entries.iter()
    }

    /// Entries whose timestamp falls inside the inclusive window.
    pub fn in_window(&self, window: (Tick, Tick)) -> impl Iterator<Item = &TraceEvent> {
        self.entries
            .iter()
            .filter(move |e| e.timestamp >= window.0 && e.timestamp <= window.1)
    }

    /// Entries inside the window that involve the given endpoint on either
    /// side of the contact (kind-aware, see [`super::event_involves`]).
    pub fn involving<'a>(
        &'a self,
        endpoint: EndpointId,
        window: (Tick, Tick),
    ) -> impl Iterator<Item = &'a TraceEvent> {
        self.in_window(window)
            .filter(move |e| super::event_involves(e, endpoint))
    }

    /// Oldest timestamp still stored, if any.
    pub fn oldest(&self) -> Option<Tick> {
        self.entries.front().map(|e| e.timestamp)
    }
}
