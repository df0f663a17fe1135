//! A running deployment: registered endpoints, their stores, and the
//! message traffic between them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::epidemic::{HealthState, Position, Tick, TraceEvent, TraceKind};

use super::{
    ContactLog, CtsMessage, DeliveredNotification, EndpointId, EndpointKind, EndpointWeight,
    FeTree, InteractionModel, MessageBus, MessageKind, ProtocolError, UeOeModel, UeUeModel,
};

/// Static wiring choices for one deployment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeploymentConfig {
    pub model: InteractionModel,
    /// Number of leaf servers under the root.
    pub fe_leaves: usize,
    /// How long any store keeps an entry, in ticks.
    pub retention: Tick,
    /// How far back a diagnosis reaches when searching for contacts.
    pub lookback: Tick,
    /// Transit time of every message, in ticks. Zero is same-tick delivery.
    pub latency: Tick,
    /// How often devices pull diagnoses in the user-centered model. Zero
    /// disables polling entirely.
    pub poll_period: Tick,
    /// Distributed model: devices additionally upload their reports to the
    /// backend.
    pub distributed_fe_upload: bool,
    /// Indirect touch model: the user device uploads the touch record.
    pub indirect_fe_upload: bool,
    /// Direct touch model: heavyweight objects forward records they stored.
    pub direct_fe_forward: bool,
}

impl Default for DeploymentConfig {
    fn default() -> Self {
        Self {
            model: InteractionModel::default(),
            fe_leaves: 1,
            retention: 300,
            lookback: 300,
            latency: 1,
            poll_period: 1,
            distributed_fe_upload: false,
            indirect_fe_upload: false,
            direct_fe_forward: false,
        }
    }
}

/// A diagnosis announcement held by a leaf server.
#[derive(Debug, Clone, Copy, PartialEq)]
struct StatusRecord {
    subject: u64,
    state: HealthState,
    tick: Tick,
}

/// Contact reports held by one leaf server, sharded by the id the report
/// was filed under. Ingesting a report and answering a diagnosis query
/// both touch a single subject's history, so neither grows with the size
/// of the whole shard; at population scale a leaf holds millions of
/// reports and a flat list would make every diagnosis a full scan.
#[derive(Debug)]
struct LeafStore {
    owner: EndpointId,
    retention: Tick,
    buckets: BTreeMap<u64, ContactLog>,
}

impl LeafStore {
    fn new(owner: EndpointId, retention: Tick) -> Self {
        Self { owner, retention, buckets: BTreeMap::new() }
    }

    fn append(&mut self, event: TraceEvent, now: Tick) -> bool {
        let (owner, retention) = (self.owner, self.retention);
        self.buckets
            .entry(event.subject_id)
            .or_insert_with(|| ContactLog::new(owner, retention))
            .append(event, now)
    }

    fn reports_of(&self, subject: u64) -> Option<&ContactLog> {
        self.buckets.get(&subject)
    }

    fn len(&self) -> usize {
        self.buckets.values().map(ContactLog::len).sum()
    }

    fn prune(&mut self, now: Tick) {
        self.buckets.retain(|_, log| {
            log.prune(now);
            !log.is_empty()
        });
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct KindCounts {
    proximity_reports: u64,
    touch_reports: u64,
    status_updates: u64,
    exposure_notifications: u64,
    data_queries: u64,
    data_responses: u64,
}

/// Traffic and outcome counters for one deployment run.
///
/// Message counters tally messages placed on the bus by kind; in the
/// user-centered model exposure knowledge travels inside data responses,
/// so `exposure_notifications` stays zero there by design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolStats {
    pub proximity_reports: u64,
    pub touch_reports: u64,
    pub status_updates: u64,
    pub exposure_notifications: u64,
    pub data_queries: u64,
    pub data_responses: u64,
    pub messages_sent: u64,
    pub messages_delivered: u64,
    /// Distinct devices that ended up holding at least one warning.
    pub devices_notified: u64,
    /// Warnings that reached a living agent and changed its behaviour.
    pub notifications_applied: u64,
    /// Median of (delivery tick - logged contact tick) over all warnings.
    pub median_notification_delay: Option<f64>,
}

/// One deployment: the FE tree, every registered device and object, their
/// contact stores, and the in-flight messages.
///
/// The simulation (or a test) drives it through four entry points:
/// [`on_proximity`](Self::on_proximity) and [`on_touch`](Self::on_touch)
/// for sensed events, [`report_diagnosis`](Self::report_diagnosis) when a
/// subject tests positive, and the per-tick pair of
/// [`poll`](Self::poll) and [`deliver_due`](Self::deliver_due).
#[derive(Debug)]
pub struct Deployment {
    cfg: DeploymentConfig,
    tree: FeTree,
    ue_logs: BTreeMap<u64, ContactLog>,
    oe_weights: BTreeMap<u64, EndpointWeight>,
    oe_logs: BTreeMap<u64, ContactLog>,
    leaf_contacts: BTreeMap<u64, LeafStore>,
    leaf_statuses: BTreeMap<u64, Vec<StatusRecord>>,
    bus: MessageBus,
    /// (subject, peer) pairs already warned, so a pair is notified at most
    /// once per diagnosis.
    notified_pairs: BTreeSet<(u64, u64)>,
    exposed: BTreeSet<u64>,
    delays: Vec<Tick>,
    counts: KindCounts,
    last_poll: Option<Tick>,
}

impl Deployment {
    pub fn new(cfg: DeploymentConfig) -> Result<Self, ProtocolError> {
        let tree = FeTree::new(cfg.fe_leaves)?;
        let mut leaf_contacts = BTreeMap::new();
        let mut leaf_statuses = BTreeMap::new();
        for leaf in tree.leaves() {
            leaf_contacts.insert(leaf.id, LeafStore::new(*leaf, cfg.retention));
            leaf_statuses.insert(leaf.id, Vec::new());
        }
        Ok(Self {
            cfg,
            tree,
            ue_logs: BTreeMap::new(),
            oe_weights: BTreeMap::new(),
            oe_logs: BTreeMap::new(),
            leaf_contacts,
            leaf_statuses,
            bus: MessageBus::new(),
            notified_pairs: BTreeSet::new(),
            exposed: BTreeSet::new(),
            delays: Vec::new(),
            counts: KindCounts::default(),
            last_poll: None,
        })
    }

    pub fn config(&self) -> &DeploymentConfig {
        &self.cfg
    }

    pub fn tree(&self) -> &FeTree {
        &self.tree
    }

    pub fn register_ue(&mut self, id: u64) {
        let retention = self.cfg.retention;
        self.ue_logs
            .entry(id)
            .or_insert_with(|| ContactLog::new(EndpointId::ue(id), retention));
    }

    pub fn register_oe(&mut self, id: u64, weight: EndpointWeight) {
        let retention = self.cfg.retention;
        self.oe_weights.insert(id, weight);
        if weight == EndpointWeight::Heavyweight {
            self.oe_logs
                .entry(id)
                .or_insert_with(|| ContactLog::new(EndpointId::oe(id), retention));
        }
    }

    /// Local contact log of a user device (empty in the centralized model,
    /// where devices report instead of storing).
    pub fn ue_log(&self, id: u64) -> Option<&ContactLog> {
        self.ue_logs.get(&id)
    }

    /// Local log of a heavyweight object. Lightweight objects have none.
    pub fn oe_log(&self, id: u64) -> Option<&ContactLog> {
        self.oe_logs.get(&id)
    }

    /// Number of contact reports held by one leaf server.
    pub fn leaf_report_count(&self, leaf_id: u64) -> Option<usize> {
        self.leaf_contacts.get(&leaf_id).map(LeafStore::len)
    }

    /// Reports a leaf holds under the given subject id, if any.
    pub fn leaf_reports_of(&self, leaf_id: u64, subject: u64) -> Option<&ContactLog> {
        self.leaf_contacts.get(&leaf_id)?.reports_of(subject)
    }

    /// Devices that have received at least one exposure warning.
    pub fn exposed(&self) -> &BTreeSet<u64> {
        &self.exposed
    }

    pub fn bus(&self) -> &MessageBus {
        &self.bus
    }

    fn check_registered_ue(&self, end: EndpointId) -> Result<(), ProtocolError> {
        if end.kind != EndpointKind::Ue {
            return Err(ProtocolError::NotUser(end));
        }
        if !self.ue_logs.contains_key(&end.id) {
            return Err(ProtocolError::Unknown(end));
        }
        Ok(())
    }

    fn send(&mut self, from: EndpointId, to: EndpointId, sent_at: Tick, kind: MessageKind) -> CtsMessage {
        match &kind {
            MessageKind::ProximityReport(_) => self.counts.proximity_reports += 1,
            MessageKind::TouchReport(_) => self.counts.touch_reports += 1,
            MessageKind::StatusUpdate { .. } => self.counts.status_updates += 1,
            MessageKind::ExposureNotification { .. } => self.counts.exposure_notifications += 1,
            MessageKind::DataQuery { .. } => self.counts.data_queries += 1,
            MessageKind::DataResponse { .. } => self.counts.data_responses += 1,
        }
        let msg = CtsMessage { from, to, sent_at, kind };
        self.bus.send(msg.clone(), self.cfg.latency);
        msg
    }

    /// Routes one sensed device-to-device contact according to the UE-UE
    /// interaction model. Returns the messages placed on the bus:
    /// two reports toward leaf servers (centralized), none (user-centered,
    /// both devices store locally), or two device-to-device exchanges
    /// (distributed, plus two uploads when `distributed_fe_upload` is set).
    pub fn on_proximity(
        &mut self,
        a: EndpointId,
        b: EndpointId,
        event: &TraceEvent,
    ) -> Result<Vec<CtsMessage>, ProtocolError> {
        self.check_registered_ue(a)?;
        self.check_registered_ue(b)?;
        if event.kind != TraceKind::Proximity {
            return Err(ProtocolError::EventKindMismatch {
                expected: TraceKind::Proximity,
                got: event.kind,
            });
        }
        debug_assert!(event.involves(a.id) && event.involves(b.id));
        let now = event.timestamp;
        let mut sent = Vec::new();
        match self.cfg.model.ue_ue {
            UeUeModel::Centralized => {
                for end in [a, b] {
                    let leaf = self.tree.leaf_for(end.id);
                    let report = MessageKind::ProximityReport(event.oriented_for(end.id));
                    sent.push(self.send(end, leaf, now, report));
                }
            }
            UeUeModel::UserCentered => {
                for end in [a, b] {
                    let view = event.oriented_for(end.id);
                    self.ue_logs
                        .get_mut(&end.id)
                        .expect("checked above")
                        .append(view, now);
                }
            }
            UeUeModel::Distributed => {
                for (me, peer) in [(a, b), (b, a)] {
                    let my_view = event.oriented_for(me.id);
                    self.ue_logs
                        .get_mut(&me.id)
                        .expect("checked above")
                        .append(my_view, now);
                    // The exchanged copy is pre-oriented for the receiver,
                    // so delivery can store it as is.
                    let exchange = MessageKind::ProximityReport(event.oriented_for(peer.id));
                    sent.push(self.send(me, peer, now, exchange));
                }
                if self.cfg.distributed_fe_upload {
                    for end in [a, b] {
                        let leaf = self.tree.leaf_for(end.id);
                        let report = MessageKind::ProximityReport(event.oriented_for(end.id));
                        sent.push(self.send(end, leaf, now, report));
                    }
                }
            }
        }
        Ok(sent)
    }

    /// Routes one sensed device-to-object touch according to the UE-OE
    /// interaction model. The user device always stores its own copy.
    /// Indirect keeps it there (optionally uploading); direct also involves
    /// the object, which either stores it (heavyweight, optionally
    /// forwarding) or, having no storage, always forwards it (lightweight).
    pub fn on_touch(
        &mut self,
        ue: EndpointId,
        oe: EndpointId,
        event: &TraceEvent,
    ) -> Result<Vec<CtsMessage>, ProtocolError> {
        self.check_registered_ue(ue)?;
        if oe.kind != EndpointKind::Oe {
            return Err(ProtocolError::NotObject(oe));
        }
        let Some(&weight) = self.oe_weights.get(&oe.id) else {
            return Err(ProtocolError::Unknown(oe));
        };
        if event.kind != TraceKind::Touch {
            return Err(ProtocolError::EventKindMismatch {
                expected: TraceKind::Touch,
                got: event.kind,
            });
        }
        let now = event.timestamp;
        let ue_view = event.oriented_for(ue.id);
        self.ue_logs
            .get_mut(&ue.id)
            .expect("checked above")
            .append(ue_view, now);
        let mut sent = Vec::new();
        match self.cfg.model.ue_oe {
            UeOeModel::Indirect => {
                if self.cfg.indirect_fe_upload {
                    let leaf = self.tree.leaf_for(ue.id);
                    sent.push(self.send(ue, leaf, now, MessageKind::TouchReport(ue_view)));
                }
            }
            UeOeModel::Direct => match weight {
                EndpointWeight::Heavyweight => {
                    let oe_view = event.oriented_for(oe.id);
                    self.oe_logs
                        .get_mut(&oe.id)
                        .expect("heavyweight objects are registered with a log")
                        .append(oe_view, now);
                    if self.cfg.direct_fe_forward {
                        // Forwards carry the user-oriented view and route
                        // by the user's id, so the backend files them where
                        // that user's diagnosis will look.
                        let leaf = self.tree.leaf_for(ue.id);
                        sent.push(self.send(oe, leaf, now, MessageKind::TouchReport(ue_view)));
                    }
                }
                EndpointWeight::Lightweight => {
                    let leaf = self.tree.leaf_for(ue.id);
                    sent.push(self.send(oe, leaf, now, MessageKind::TouchReport(ue_view)));
                }
            },
        }
        Ok(sent)
    }

    /// Stored contact reports filed under `subject` inside the inclusive
    /// window. Reports route to the leaf the subject's id hashes to, so
    /// only that leaf is asked and a sharded tree answers exactly like a
    /// single flat server holding the same reports. Only self-filed
    /// reports are visible: with gated sensing a contact the subject never
    /// reported is unknown here, exactly as in upload-based deployments.
    pub fn query_tree(&self, subject: EndpointId, window: (Tick, Tick)) -> Vec<TraceEvent> {
        let leaf = self.tree.leaf_for(subject.id);
        let mut events: Vec<TraceEvent> = self
            .leaf_contacts
            .get(&leaf.id)
            .and_then(|store| store.reports_of(subject.id))
            .map(|log| log.involving(subject, window).copied().collect())
            .unwrap_or_default();
        events.sort_by_key(|e| {
            (e.timestamp, e.subject_id, e.peer_id.unwrap_or(u64::MAX), kind_rank(e.kind))
        });
        events
    }

    /// Handles a positive diagnosis of `subject` announced at `tick`.
    ///
    /// Looks for logged contacts within `lookback` ticks before the
    /// diagnosis and warns each distinct user-device peer at most once per
    /// (subject, peer) pair. Where the contacts live depends on the model:
    /// the backend stores (centralized, answered by the subject's leaf),
    /// the subject's own log (distributed, warned directly), or nowhere yet
    /// (user-centered, where peers find out later by polling the backend
    /// for this announcement). Returns the messages placed on the bus.
    pub fn report_diagnosis(
        &mut self,
        subject: EndpointId,
        tick: Tick,
    ) -> Result<Vec<CtsMessage>, ProtocolError> {
        self.check_registered_ue(subject)?;
        let window = (tick.saturating_sub(self.cfg.lookback), tick);
        let mut sent = Vec::new();
        match self.cfg.model.ue_ue {
            UeUeModel::Centralized => {
                let leaf = self.tree.leaf_for(subject.id);
                sent.push(self.send(
                    subject,
                    leaf,
                    tick,
                    MessageKind::StatusUpdate {
                        subject: subject.id,
                        state: HealthState::Infectious,
                        tick,
                    },
                ));
                let peers = ue_peers_of(subject.id, self.query_tree(subject, window));
                for (peer, exposure_tick) in peers {
                    if self.notified_pairs.insert((subject.id, peer)) {
                        sent.push(self.send(
                            leaf,
                            EndpointId::ue(peer),
                            tick,
                            MessageKind::ExposureNotification {
                                subject: subject.id,
                                exposure_tick,
                            },
                        ));
                    }
                }
            }
            UeUeModel::UserCentered => {
                let leaf = self.tree.leaf_for(subject.id);
                sent.push(self.send(
                    subject,
                    leaf,
                    tick,
                    MessageKind::StatusUpdate {
                        subject: subject.id,
                        state: HealthState::Infectious,
                        tick,
                    },
                ));
            }
            UeUeModel::Distributed => {
                let log = self.ue_logs.get(&subject.id).expect("checked above");
                let local: Vec<TraceEvent> =
                    log.involving(subject, window).copied().collect();
                let peers = ue_peers_of(subject.id, local);
                for (peer, exposure_tick) in peers {
                    if self.notified_pairs.insert((subject.id, peer)) {
                        sent.push(self.send(
                            subject,
                            EndpointId::ue(peer),
                            tick,
                            MessageKind::ExposureNotification {
                                subject: subject.id,
                                exposure_tick,
                            },
                        ));
                    }
                }
            }
        }
        Ok(sent)
    }

    /// User-centered pull: on its polling tick, every device asks its leaf
    /// server for diagnoses announced since the previous poll. No-op in the
    /// other models or when polling is disabled. Returns queries sent.
    pub fn poll(&mut self, now: Tick) -> usize {
        if self.cfg.model.ue_ue != UeUeModel::UserCentered || self.cfg.poll_period == 0 {
            return 0;
        }
        if now % self.cfg.poll_period != 0 {
            return 0;
        }
        let from = match self.last_poll {
            Some(prev) => prev + 1,
            None => now.saturating_sub(self.cfg.lookback),
        };
        self.last_poll = Some(now);
        let window = (from, now);
        let ids: Vec<u64> = self.ue_logs.keys().copied().collect();
        let count = ids.len();
        for id in ids {
            let leaf = self.tree.leaf_for(id);
            self.send(
                EndpointId::ue(id),
                leaf,
                now,
                MessageKind::DataQuery { subject: id, window },
            );
        }
        count
    }

    /// Delivers every message due at `now` and returns the exposure
    /// warnings that reached user devices this tick. Deliveries can send
    /// follow-up messages (query responses); with zero latency those drain
    /// in the same call.
    pub fn deliver_due(&mut self, now: Tick) -> Vec<DeliveredNotification> {
        let mut notes = Vec::new();
        // Response payloads repeat across devices polling the same window;
        // cache the last one built. A newly stored status invalidates it.
        let mut response_cache: Option<((Tick, Tick), Vec<TraceEvent>)> = None;
        // Zero-latency chains settle in two rounds (query then response);
        // the bound only guards against a future accidental message loop.
        for _ in 0..8 {
            let batch = self.bus.due(now);
            if batch.is_empty() {
                break;
            }
            for msg in batch {
                self.handle_delivery(msg, now, &mut notes, &mut response_cache);
            }
        }
        notes
    }

    fn handle_delivery(
        &mut self,
        msg: CtsMessage,
        now: Tick,
        notes: &mut Vec<DeliveredNotification>,
        response_cache: &mut Option<((Tick, Tick), Vec<TraceEvent>)>,
    ) {
        match msg.kind {
            MessageKind::ProximityReport(event) | MessageKind::TouchReport(event) => {
                match msg.to.kind {
                    EndpointKind::Fe => {
                        if let Some(store) = self.leaf_contacts.get_mut(&msg.to.id) {
                            store.append(event, now);
                        }
                    }
                    EndpointKind::Ue => {
                        // Distributed exchange; the payload is already
                        // oriented for the receiver.
                        if let Some(log) = self.ue_logs.get_mut(&msg.to.id) {
                            log.append(event, now);
                        }
                    }
                    EndpointKind::Oe => {}
                }
            }
            MessageKind::StatusUpdate { subject, state, tick } => {
                if let Some(store) = self.leaf_statuses.get_mut(&msg.to.id) {
                    let cutoff = now.saturating_sub(self.cfg.retention);
                    store.retain(|r| r.tick >= cutoff);
                    store.push(StatusRecord { subject, state, tick });
                    *response_cache = None;
                }
            }
            MessageKind::ExposureNotification { subject, exposure_tick } => {
                if msg.to.kind == EndpointKind::Ue && self.ue_logs.contains_key(&msg.to.id) {
                    self.exposed.insert(msg.to.id);
                    self.delays.push(now.saturating_sub(exposure_tick));
                    notes.push(DeliveredNotification {
                        peer: msg.to.id,
                        subject,
                        exposure_tick,
                        delivered_at: now,
                    });
                }
            }
            MessageKind::DataQuery { subject, window } => {
                let events = match response_cache {
                    Some((cached, payload)) if *cached == window => payload.clone(),
                    _ => {
                        let payload = self.status_events_in(window);
                        *response_cache = Some((window, payload.clone()));
                        payload
                    }
                };
                if !events.is_empty() {
                    let requester = EndpointId::ue(subject);
                    self.send(msg.to, requester, now, MessageKind::DataResponse { events });
                }
            }
            MessageKind::DataResponse { events } => {
                if msg.to.kind != EndpointKind::Ue {
                    return;
                }
                self.cross_reference(msg.to.id, &events, now, notes);
            }
        }
    }

    /// Diagnoses announced inside the window, across every leaf, as status
    /// events. Status records carry no location, so the payload pins them
    /// to the origin corner; consumers only read subject and timestamp.
    fn status_events_in(&self, window: (Tick, Tick)) -> Vec<TraceEvent> {
        let origin = Position::new(0.0, 0.0).expect("origin is inside the unit square");
        let mut events: Vec<TraceEvent> = self
            .leaf_statuses
            .values()
            .flatten()
            .filter(|r| r.tick >= window.0 && r.tick <= window.1)
            .map(|r| TraceEvent::status_update(r.subject, origin, r.tick, r.state))
            .collect();
        events.sort_by_key(|e| (e.timestamp, e.subject_id));
        events
    }

    /// User-centered matching on the device: each pulled diagnosis is
    /// checked against the device's own contact log.
    fn cross_reference(
        &mut self,
        ue: u64,
        statuses: &[TraceEvent],
        now: Tick,
        notes: &mut Vec<DeliveredNotification>,
    ) {
        for status in statuses {
            let subject = status.subject_id;
            if subject == ue {
                continue;
            }
            let window = (status.timestamp.saturating_sub(self.cfg.lookback), status.timestamp);
            let Some(log) = self.ue_logs.get(&ue) else { return };
            let exposure_tick = log
                .involving(EndpointId::ue(subject), window)
                .filter(|e| e.kind == TraceKind::Proximity)
                .map(|e| e.timestamp)
                .max();
            if let Some(exposure_tick) = exposure_tick {
                if self.notified_pairs.insert((subject, ue)) {
                    self.exposed.insert(ue);
                    self.delays.push(now.saturating_sub(exposure_tick));
                    notes.push(DeliveredNotification {
                        peer: ue,
                        subject,
                        exposure_tick,
                        delivered_at: now,
                    });
                }
            }
        }
    }

    /// Ages out stale entries from every store. Cheap when nothing expires.
    pub fn prune(&mut self, now: Tick) {
        for log in self.ue_logs.values_mut() {
            log.prune(now);
        }
        for log in self.oe_logs.values_mut() {
            log.prune(now);
        }
        for log in self.leaf_contacts.values_mut() {
            log.prune(now);
        }
        let cutoff = now.saturating_sub(self.cfg.retention);
        for store in self.leaf_statuses.values_mut() {
            store.retain(|r| r.tick >= cutoff);
        }
    }

    pub fn stats(&self) -> ProtocolStats {
        ProtocolStats {
            proximity_reports: self.counts.proximity_reports,
            touch_reports: self.counts.touch_reports,
            status_updates: self.counts.status_updates,
            exposure_notifications: self.counts.exposure_notifications,
            data_queries: self.counts.data_queries,
            data_responses: self.counts.data_responses,
            messages_sent: self.bus.sent_count(),
            messages_delivered: self.bus.delivered_count(),
            devices_notified: self.exposed.len() as u64,
            notifications_applied: 0,
            median_notification_delay: median(&self.delays),
        }
    }
}

/// Distinct user-device peers of `subject` among the events, each with the
/// latest in-window contact tick. Touch peers are objects, not devices, so
/// they produce no entry.
fn ue_peers_of(subject: u64, events: Vec<TraceEvent>) -> BTreeMap<u64, Tick> {
    let mut peers: BTreeMap<u64, Tick> = BTreeMap::new();
    for event in events {
        if event.kind != TraceKind::Proximity {
            continue;
        }
        let peer = if event.subject_id == subject {
            match event.peer_id {
                Some(p) => p,
                None => continue,
            }
        } else {
            event.subject_id
        };
        if peer == subject {
            continue;
        }
        let slot = peers.entry(peer).or_insert(event.timestamp);
        *slot = (*slot).max(event.timestamp);
    }
    peers
}

fn kind_rank(kind: TraceKind) -> u8 {
    match kind {
        TraceKind::Proximity => 0,
        TraceKind::Touch => 1,
        TraceKind::StatusUpdate => 2,
    }
}

fn median(delays: &[Tick]) -> Option<f64> {
    if delays.is_empty() {
        return None;
    }
    let mut sorted = delays.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        Some(sorted[mid] as f64)
    } else {
        Some((sorted[mid - 1] as f64 + sorted[mid] as f64) / 2.0)
    }
}
