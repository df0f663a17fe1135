//! Contact-tracing protocol layer.
//!
//! Models the message plane of a tracing deployment built from three kinds
//! of endpoints: user equipment (UE) carried by agents, fixed equipment (FE)
//! arranged as a one-root tree of servers, and shared objects (OE) that can
//! be touched. The simulator feeds proximity events in; this layer decides,
//! per interaction model, where contact records live, which messages cross
//! the network, and who ends up holding an exposure notification.
//!
//! Submodules split along the natural seams: [`log`] holds the per-endpoint
//! contact store, [`tree`] the FE hierarchy, [`bus`] the delayed message
//! queue, [`deployment`] the wiring between them, and [`harness`] adapts a
//! deployment to the simulator's tick hook.

pub mod bus;
pub mod deployment;
pub mod harness;
pub mod log;
pub mod tree;

pub use bus::MessageBus;
pub use deployment::{Deployment, DeploymentConfig, ProtocolStats};
pub use harness::{ProtocolConfig, ProtocolHarness};
pub use log::ContactLog;
pub use tree::FeTree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::epidemic::{Agent, HealthState, SensingMode, Tick, TraceEvent, TraceKind};
use crate::spatial::SimParams;

/// Errors raised by protocol operations on malformed input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("expected a user endpoint, got {0}")]
    NotUser(EndpointId),
    #[error("expected an object endpoint, got {0}")]
    NotObject(EndpointId),
    #[error("endpoint {0} is not registered with this deployment")]
    Unknown(EndpointId),
    #[error("event kind {got:?} cannot be handled here (expected {expected:?})")]
    EventKindMismatch { expected: TraceKind, got: TraceKind },
    #[error("a deployment needs at least one leaf server")]
    NoLeaves,
    #[error("sensing participation {0} is outside [0, 1]")]
    BadParticipation(f64),
}

/// The three kinds of hardware a deployment is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EndpointKind {
    /// User equipment: the personal device an agent carries.
    Ue,
    /// Fixed equipment: a server in the backend tree.
    Fe,
    /// Object equipment: a shared physical object that can be touched.
    Oe,
}

/// Address of one endpoint. Ids are scoped per kind, so UE 3 and OE 3 are
/// distinct endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EndpointId {
    pub kind: EndpointKind,
    pub id: u64,
}

impl EndpointId {
    pub fn ue(id: u64) -> Self {
        Self { kind: EndpointKind::Ue, id }
    }

    pub fn fe(id: u64) -> Self {
        Self { kind: EndpointKind::Fe, id }
    }

    pub fn oe(id: u64) -> Self {
        Self { kind: EndpointKind::Oe, id }
    }
}

impl std::fmt::Display for EndpointId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            EndpointKind::Ue => "UE",
            EndpointKind::Fe => "FE",
            EndpointKind::Oe => "OE",
        };
        write!(f, "{kind}#{}", self.id)
    }
}

/// How capable an object endpoint is.
///
/// Heavyweight objects keep their own contact log. Lightweight objects have
/// no storage at all and instead forward every touch straight to their
/// assigned server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndpointWeight {
    Lightweight,
    Heavyweight,
}

/// Who talks to whom when two user devices meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UeUeModel {
    /// Both devices report the contact to their assigned servers; the
    /// backend performs matching and pushes notifications down.
    Centralized,
    /// Contacts stay on the devices; after a diagnosis is announced to the
    /// backend, devices pull recent diagnoses and match locally.
    UserCentered,
    /// Devices exchange contact records with each other directly and a
    /// diagnosed device notifies its logged peers itself.
    Distributed,
}

/// Who stores a touch between a user device and an object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UeOeModel {
    /// Only the user device records the touch.
    Indirect,
    /// Both sides record it (subject to the object's [`EndpointWeight`]).
    Direct,
}

/// Full interaction model: one choice per link type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionModel {
    pub ue_ue: UeUeModel,
    pub ue_oe: UeOeModel,
}

impl Default for InteractionModel {
    fn default() -> Self {
        Self { ue_ue: UeUeModel::Centralized, ue_oe: UeOeModel::Indirect }
    }
}

/// Payload of one protocol message.
#[derive(Debug, Clone, PartialEq)]
pub enum MessageKind {
    /// A sensed UE-UE contact, sent toward a server or the peer device.
    ProximityReport(TraceEvent),
    /// A sensed UE-OE touch, sent toward a server.
    TouchReport(TraceEvent),
    /// Announcement that `subject` was diagnosed in state `state` at `tick`.
    StatusUpdate { subject: u64, state: HealthState, tick: Tick },
    /// Warning to the receiver that it met a diagnosed subject.
    ExposureNotification { subject: u64, exposure_tick: Tick },
    /// Pull request: diagnoses announced inside `window` (inclusive ends).
    DataQuery { subject: u64, window: (Tick, Tick) },
    /// Pull response carrying matching status records.
    DataResponse { events: Vec<TraceEvent> },
}

impl MessageKind {
    /// Short label used by counters and event dumps.
    pub fn label(&self) -> &'static str {
        match self {
            MessageKind::ProximityReport(_) => "proximity_report",
            MessageKind::TouchReport(_) => "touch_report",
            MessageKind::StatusUpdate { .. } => "status_update",
            MessageKind::ExposureNotification { .. } => "exposure_notification",
            MessageKind::DataQuery { .. } => "data_query",
            MessageKind::DataResponse { .. } => "data_response",
        }
    }
}

/// One message in flight between two endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct CtsMessage {
    pub from: EndpointId,
    pub to: EndpointId,
    pub sent_at: Tick,
    pub kind: MessageKind,
}

/// An exposure warning that reached a user device and is ready to be
/// applied to the owning agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeliveredNotification {
    /// Receiving device (same id as the agent that carries it).
    pub peer: u64,
    /// The diagnosed subject the receiver was in contact with.
    pub subject: u64,
    /// When the logged contact happened.
    pub exposure_tick: Tick,
    /// When the warning arrived at the device.
    pub delivered_at: Tick,
}

/// Kind-aware test of whether an event touches the given endpoint.
///
/// Trace events store raw ids; which namespace the peer id lives in is
/// implied by the event kind. Subjects are always user devices, proximity
/// peers are user devices, and touch peers are objects. Servers never
/// appear inside an event.
pub fn event_involves(event: &TraceEvent, endpoint: EndpointId) -> bool {
    match endpoint.kind {
        EndpointKind::Ue => {
            event.subject_id == endpoint.id
                || (event.kind == TraceKind::Proximity
                    && event.peer_id == Some(endpoint.id))
        }
        EndpointKind::Oe => {
            event.kind == TraceKind::Touch && event.peer_id == Some(endpoint.id)
        }
        EndpointKind::Fe => false,
    }
}

/// Decides whether a sensed event is actually recorded by the devices.
///
/// Passive hardware never misses. Proactive hardware requires the user to
/// act, so each event is kept only with the configured participation
/// probability. Hybrid hardware senses proximity passively but leaves touch
/// interactions to the user. Diagnosis announcements are never gated; only
/// sensing is optional.
pub fn sensing_gate(
    event: &TraceEvent,
    mode: SensingMode,
    rng: &mut impl rand::Rng,
) -> bool {
    match (mode, event.kind) {
        (SensingMode::Passive, _) => true,
        (_, TraceKind::StatusUpdate) => true,
        (SensingMode::Proactive { participation }, _)
        | (SensingMode::Hybrid { participation }, TraceKind::Touch) => {
            rng.random_bool(participation.clamp(0.0, 1.0))
        }
        (SensingMode::Hybrid { .. }, TraceKind::Proximity) => true,
    }
}

/// Applies a delivered exposure warning to the agent carrying the device.
///
/// Dead agents are skipped: the device may still receive the message but
/// there is no behaviour left to change. A living agent enters (or extends)
/// its cautious window, which lasts `notified_duration` ticks from now.
pub fn apply_notification(
    agent: &mut Agent,
    note: &DeliveredNotification,
    params: &SimParams,
    now: Tick,
) -> bool {
    debug_assert_eq!(agent.id, note.peer, "notification routed to the wrong agent");
    if !agent.is_alive() {
        return false;
    }
    agent.notified_until = Some(now + params.notified_duration);
    true
}
