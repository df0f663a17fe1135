//! Shared vocabulary for the simulator: positions on the unit square, agent
//! health states, trace events sensed by endpoints, and the seeded RNG that
//! every stochastic component draws from.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Discrete simulation time. One tick is the unit of movement, transmission
/// and message latency alike.
pub type Tick = u64;

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("position ({x}, {y}) outside the unit square")]
    OutOfBounds { x: f64, y: f64 },
    #[error("position coordinate is not finite")]
    NotFinite,
}

/// A point in the unit square. Coordinates are guaranteed to stay within
/// `[0, 1]`; construction rejects anything else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    x: f64,
    y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Result<Self, DomainError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(DomainError::NotFinite);
        }
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(DomainError::OutOfBounds { x, y });
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Compartment an agent currently occupies. The only legal transitions are
/// susceptible to infectious, and infectious to recovered or dead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HealthState {
    Susceptible,
    Infectious,
    Recovered,
    Dead,
}

impl HealthState {
    /// Terminal states never change again.
    pub fn is_terminal(self) -> bool {
        matches!(self, HealthState::Recovered | HealthState::Dead)
    }

    pub fn can_transition_to(self, next: HealthState) -> bool {
        use HealthState::*;
        matches!(
            (self, next),
            (Susceptible, Infectious) | (Infectious, Recovered) | (Infectious, Dead)
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HealthState::Susceptible => "susceptible",
            HealthState::Infectious => "infectious",
            HealthState::Recovered => "recovered",
            HealthState::Dead => "dead",
        }
    }
}

/// One individual in the population. Identifiers are opaque and assigned
/// sequentially at spawn, so they double as indices into the population
/// vector and as user-endpoint ids on the protocol side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: u64,
    pub pos: Position,
    /// Movement heading in radians.
    pub heading: f64,
    /// Base movement speed in units per tick.
    pub speed: f64,
    pub state: HealthState,
    /// Tick at which the agent became infectious.
    pub infected_at: Option<Tick>,
    /// Tick at which the current infection resolves (recovery or death).
    pub resolution_at: Option<Tick>,
    /// Whether the agent currently occupies a hospital bed.
    pub hospitalized: bool,
    /// Compliant agents stop moving once a lockdown is declared.
    pub lockdown_compliant: bool,
    /// End of the active exposure-notification window, inclusive.
    pub notified_until: Option<Tick>,
}

impl Agent {
    pub fn susceptible(id: u64, pos: Position, heading: f64, speed: f64) -> Self {
        Self {
            id,
            pos,
            heading,
            speed,
            state: HealthState::Susceptible,
            infected_at: None,
            resolution_at: None,
            hospitalized: false,
            lockdown_compliant: false,
            notified_until: None,
        }
    }

    /// Moves the agent into the infectious compartment. `resolution_at` is
    /// the pre-drawn tick at which the infection will resolve.
    pub fn infect(&mut self, tick: Tick, resolution_at: Tick) {
        assert!(
            self.state.can_transition_to(HealthState::Infectious),
            "agent {} cannot become infectious from {:?}",
            self.id,
            self.state
        );
        self.state = HealthState::Infectious;
        self.infected_at = Some(tick);
        self.resolution_at = Some(resolution_at);
    }

    /// Ends the infection, either in recovery or in death.
    pub fn resolve(&mut self, died: bool) {
        let next = if died {
            HealthState::Dead
        } else {
            HealthState::Recovered
        };
        assert!(
            self.state.can_transition_to(next),
            "agent {} cannot resolve from {:?}",
            self.id,
            self.state
        );
        self.state = next;
        self.hospitalized = false;
    }

    pub fn is_alive(&self) -> bool {
        self.state != HealthState::Dead
    }

    /// True while an exposure notification window is active.
    pub fn notified_at(&self, tick: Tick) -> bool {
        self.notified_until.is_some_and(|until| tick <= until)
    }
}

/// What a sensing endpoint observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TraceKind {
    /// Two user endpoints within sensing range of each other.
    Proximity,
    /// A user endpoint touching an object endpoint.
    Touch,
    /// A self-reported health-state change.
    StatusUpdate,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Proximity => "proximity",
            TraceKind::Touch => "touch",
            TraceKind::StatusUpdate => "status_update",
        }
    }
}

/// A single sensed observation. Proximity events carry the peer user
/// endpoint, touch events the peer object endpoint, status updates a health
/// state instead of a peer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub subject_id: u64,
    pub peer_id: Option<u64>,
    pub location: Position,
    pub timestamp: Tick,
    pub kind: TraceKind,
    /// Self-reported health state; only status updates disclose one.
    pub state: Option<HealthState>,
}

impl TraceEvent {
    pub fn proximity(subject_id: u64, peer_id: u64, location: Position, timestamp: Tick) -> Self {
        Self {
            subject_id,
            peer_id: Some(peer_id),
            location,
            timestamp,
            kind: TraceKind::Proximity,
            state: None,
        }
    }

    pub fn touch(subject_id: u64, object_id: u64, location: Position, timestamp: Tick) -> Self {
        Self {
            subject_id,
            peer_id: Some(object_id),
            location,
            timestamp,
            kind: TraceKind::Touch,
            state: None,
        }
    }

    pub fn status_update(
        subject_id: u64,
        location: Position,
        timestamp: Tick,
        state: HealthState,
    ) -> Self {
        Self {
            subject_id,
            peer_id: None,
            location,
            timestamp,
            kind: TraceKind::StatusUpdate,
            state: Some(state),
        }
    }

    /// Pair events are stored once with subject = lower id; this yields the
    /// view from `endpoint`'s side regardless of storage orientation.
    pub fn oriented_for(&self, endpoint: u64) -> Self {
        if self.subject_id == endpoint || self.peer_id.is_none() {
            *self
        } else {
            Self {
                subject_id: endpoint,
                peer_id: Some(self.subject_id),
                ..*self
            }
        }
    }

    /// True when `endpoint` is either side of the event.
    pub fn involves(&self, endpoint: u64) -> bool {
        self.subject_id == endpoint || self.peer_id == Some(endpoint)
    }
}

/// How an endpoint decides whether to sense and report an event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SensingMode {
    /// Everything is sensed automatically.
    Passive,
    /// The user opts in per event with the given participation probability.
    Proactive { participation: f64 },
    /// Proximity is sensed passively; touch events require opt-in.
    Hybrid { participation: f64 },
}

/// Transmission route a contact event represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransmissionMode {
    PersonToPerson,
    ObjectToPerson,
}

/// The RNG used across the workspace. ChaCha8 keeps draws identical across
/// platforms and exposes independent substreams for decoupled components.
pub type SimRng = ChaCha8Rng;

/// Substream for the simulation core (movement, infection, resolution).
pub const SIM_RNG_STREAM: u64 = 0;
/// Substream for the protocol layer, so sensing draws never shift the
/// simulation's sequence.
pub const PROTOCOL_RNG_STREAM: u64 = 1;

/// RNG seeded for the main simulation stream.
pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// RNG on an independent substream of the same seed. Components that must
/// not perturb each other's draw sequences (simulation core vs. protocol
/// layer) take distinct streams.
pub fn seeded_stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
