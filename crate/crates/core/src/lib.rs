//! Discrete-time agent-based epidemic simulator on the unit square, coupled
//! with a simulated contact-tracing network (user, fixed and object endpoints)
//! and a classical SIR ODE baseline.
//!
//! Modules build on each other bottom-up:
//!
//! * [`epidemic`]: shared vocabulary types (positions, health states, agents,
//!   trace events) and the seeded RNG everything else draws from.
//! * [`sir`]: the compartmental ODE baseline with a fixed-step RK4 integrator.
//! * [`spatial`]: the agent-based simulation itself (movement, range-based
//!   transmission, hospitalization, lockdown) on a uniform spatial hash grid.
//! * [`protocol`]: the contact-tracing message layer (contact logs, a server
//!   tree, exposure notification) that can be attached to a running
//!   simulation through [`spatial::TickHook`].
//! * [`scenario`]: named parameter sets, multi-seed execution and cross-seed
//!   aggregation.
//! * [`io`]: the plain-text config format plus CSV/JSON writers with atomic
//!   file replacement.

pub mod epidemic;
pub mod io;
pub mod protocol;
pub mod scenario;
pub mod sir;
pub mod spatial;

pub use epidemic::{seeded_rng, Agent, HealthState, Position, SimRng, Tick, TraceEvent};
