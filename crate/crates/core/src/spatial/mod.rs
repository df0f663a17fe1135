//! The discrete-time agent-based simulation: random movement on the unit
//! square, range-based transmission, resolution to recovery or death under a
//! hospital-bed constraint, and a latched lockdown trigger.
//!
//! One run is strictly single-threaded and deterministic for a given
//! `(params, seed)`; parallelism across runs belongs to [`crate::scenario`].
//! A [`TickHook`] attached to the run observes every tick's proximity events
//! and newly infectious agents, and may mutate agents (that is how the
//! protocol layer applies exposure notifications).

mod grid;

pub use grid::UniformGrid;

use crate::epidemic::{
    seeded_stream, Agent, HealthState, Position, SimRng, Tick, TraceEvent, SIM_RNG_STREAM,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Half-width of the per-tick uniform heading perturbation, radians.
pub const HEADING_PERTURBATION: f64 = 0.3;

/// Alternate tabulated default for `infection_prob` (3%), kept as a named
/// constant for sensitivity runs; [`SimParams::default`] and the built-in
/// scenarios use the 5% narrative default.
pub const ALTERNATE_INFECTION_PROB: f64 = 0.03;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("population must be at least 1")]
    EmptyPopulation,
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("{name} = {value} outside {bounds}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        bounds: &'static str,
    },
    #[error("recovery_min {min} exceeds recovery_max {max}")]
    RecoveryOrder { min: Tick, max: Tick },
    #[error("horizon {horizon} is before first_case_tick {first_case}")]
    HorizonBeforeFirstCase { horizon: Tick, first_case: Tick },
}

/// Lockdown trigger and population compliance. The lockdown latches the
/// first tick the cumulative infected fraction reaches the trigger and never
/// releases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockdownPolicy {
    pub trigger_fraction: f64,
    pub compliance: f64,
}

/// Full parameterization of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub n: u64,
    /// Movement speed in units per tick; every agent gets exactly this.
    pub avg_speed: f64,
    pub infection_range: f64,
    /// Per-tick transmission probability per in-range infectious neighbor.
    pub infection_prob: f64,
    pub mortality_rate: f64,
    pub beds_per_1000: f64,
    pub first_case_tick: Tick,
    pub recovery_min: Tick,
    pub recovery_max: Tick,
    pub lockdown: Option<LockdownPolicy>,
    pub notified_speed_factor: f64,
    pub notified_prob_factor: f64,
    pub notified_duration: Tick,
    pub horizon: Tick,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            n: 5000,
            avg_speed: 0.0042,
            infection_range: 0.01,
            infection_prob: 0.05,
            mortality_rate: 0.034,
            beds_per_1000: 4.7,
            first_case_tick: 53,
            recovery_min: 200,
            recovery_max: 450,
            lockdown: None,
            notified_speed_factor: 1.0,
            notified_prob_factor: 1.0,
            notified_duration: 0,
            horizon: 20_000,
            seed: 1,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n == 0 {
            return Err(SimError::EmptyPopulation);
        }
        let fields = [
            ("avg_speed", self.avg_speed, 0.0, 1.0, "[0, 1]"),
            ("infection_prob", self.infection_prob, 0.0, 1.0, "[0, 1]"),
            ("mortality_rate", self.mortality_rate, 0.0, 1.0, "[0, 1]"),
            ("beds_per_1000", self.beds_per_1000, 0.0, 1000.0, "[0, 1000]"),
            (
                "notified_speed_factor",
                self.notified_speed_factor,
                0.0,
                1.0,
                "[0, 1]",
            ),
            (
                "notified_prob_factor",
                self.notified_prob_factor,
                0.0,
                1.0,
                "[0, 1]",
            ),
        ];
        for (name, value, lo, hi, bounds) in fields {
            if !value.is_finite() {
                return Err(SimError::NotFinite { name, value });
            }
            if value < lo || value > hi {
                return Err(SimError::OutOfRange {
                    name,
                    value,
                    bounds,
                });
            }
        }
        if !self.infection_range.is_finite() {
            return Err(SimError::NotFinite {
                name: "infection_range",
                value: self.infection_range,
            });
        }
        if self.infection_range <= 0.0 || self.infection_range > 1.0 {
            return Err(SimError::OutOfRange {
                name: "infection_range",
                value: self.infection_range,
                bounds: "(0, 1]",
            });
        }
        if let Some(policy) = &self.lockdown {
            for (name, value) in [
                ("lockdown_trigger", policy.trigger_fraction),
                ("lockdown_compliance", policy.compliance),
            ] {
                if !value.is_finite() {
                    return Err(SimError::NotFinite { name, value });
                }
                if !(0.0..=1.0).contains(&value) {
                    return Err(SimError::OutOfRange {
                        name,
                        value,
                        bounds: "[0, 1]",
                    });
                }
            }
        }
        if self.recovery_min > self.recovery_max {
            return Err(SimError::RecoveryOrder {
                min: self.recovery_min,
                max: self.recovery_max,
            });
        }
        if self.horizon < self.first_case_tick {
            return Err(SimError::HorizonBeforeFirstCase {
                horizon: self.horizon,
                first_case: self.first_case_tick,
            });
        }
        Ok(())
    }

    /// Whole beds available; fractional beds round down.
    pub fn hospital_capacity(&self) -> u64 {
        (self.n as f64 * self.beds_per_1000 / 1000.0).floor() as u64
    }
}

/// Per-tick population snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickReport {
    pub tick: Tick,
    pub susceptible: u64,
    pub infectious: u64,
    pub recovered: u64,
    pub dead: u64,
    pub hospitalized: u64,
    pub lockdown_active: bool,
    pub notifications_active: u64,
}

/// What one tick's infection phase produced.
#[derive(Debug, Clone, Default)]
pub struct StepOutcome {
    /// One proximity event per in-range living pair, subject = lower id.
    pub events: Vec<TraceEvent>,
    /// Ids that entered the infectious state this tick (seeding included).
    pub newly_infectious: Vec<u64>,
}

/// Everything a per-tick observer gets to see (and touch).
pub struct TickContext<'a> {
    pub tick: Tick,
    pub events: &'a [TraceEvent],
    pub newly_infectious: &'a [u64],
    pub agents: &'a mut [Agent],
    pub params: &'a SimParams,
}

/// Observer invoked after each tick's state transitions, before the tick
/// report is taken. Mutating agents here is how notifications feed back.
pub trait TickHook {
    fn after_tick(&mut self, ctx: TickContext<'_>);
}

/// Complete run result. `events` is empty unless recording was requested;
/// at full population size the log runs to hundreds of megabytes.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub reports: Vec<TickReport>,
    pub events: Vec<TraceEvent>,
}

/// Uniformly placed susceptible agents with random headings; ids are the
/// spawn indices. When a lockdown policy is present, ⌊compliance·n⌋ agents
/// chosen uniformly get the compliant flag.
pub fn spawn_population(params: &SimParams, rng: &mut SimRng) -> Vec<Agent> {
    let n = params.n as usize;
    let mut agents = Vec::with_capacity(n);
    for id in 0..n {
        let pos = Position::new(rng.random(), rng.random())
            .expect("uniform draws lie inside the unit square");
        let heading = rng.random_range(0.0..TAU);
        agents.push(Agent::susceptible(id as u64, pos, heading, params.avg_speed));
    }
    if let Some(policy) = &params.lockdown {
        let k = (policy.compliance * n as f64).floor() as usize;
        for idx in rand::seq::index::sample(rng, n, k) {
            agents[idx].lockdown_compliant = true;
        }
    }
    agents
}

/// Straight-line advance along the agent's heading with reflective
/// boundaries; each reflection mirrors the position and flips the heading.
pub fn advance_agent(agent: &mut Agent, distance: f64) {
    if distance <= 0.0 {
        return;
    }
    let mut x = agent.pos.x() + distance * agent.heading.cos();
    let mut y = agent.pos.y() + distance * agent.heading.sin();
    let mut heading = agent.heading;
    loop {
        if x < 0.0 {
            x = -x;
            heading = PI - heading;
        } else if x > 1.0 {
            x = 2.0 - x;
            heading = PI - heading;
        } else if y < 0.0 {
            y = -y;
            heading = -heading;
        } else if y > 1.0 {
            y = 2.0 - y;
            heading = -heading;
        } else {
            break;
        }
    }
    agent.pos = Position::new(x, y).expect("reflection lands inside the unit square");
    agent.heading = heading;
}

/// Speed the agent actually moves at this tick: zero for the dead and for
/// compliant agents under lockdown, damped inside a notification window.
pub fn effective_speed(agent: &Agent, params: &SimParams, lockdown_active: bool, tick: Tick) -> f64 {
    if !agent.is_alive() || (lockdown_active && agent.lockdown_compliant) {
        0.0
    } else if agent.notified_at(tick) {
        agent.speed * params.notified_speed_factor
    } else {
        agent.speed
    }
}

/// Per-contact transmission probability for a susceptible agent, damped
/// inside a notification window.
pub fn effective_infection_prob(agent: &Agent, params: &SimParams, tick: Tick) -> f64 {
    if agent.notified_at(tick) {
        params.infection_prob * params.notified_prob_factor
    } else {
        params.infection_prob
    }
}

pub struct Simulation {
    params: SimParams,
    agents: Vec<Agent>,
    rng: SimRng,
    grid: UniformGrid,
    positions: Vec<Position>,
    pairs: Vec<(u32, u32)>,
    snapshot: Vec<HealthState>,
    bed_queue: Vec<(Tick, u64)>,
    tick: Tick,
    lockdown_active: bool,
    lockdown_tick: Option<Tick>,
    finished: bool,
}

impl Simulation {
    pub fn new(params: SimParams) -> Result<Self, SimError> {
        params.validate()?;
        let mut rng = seeded_stream(params.seed, SIM_RNG_STREAM);
        let agents = spawn_population(&params, &mut rng);
        let grid = UniformGrid::new(params.infection_range);
        Ok(Self {
            params,
            agents,
            rng,
            grid,
            positions: Vec::new(),
            pairs: Vec::new(),
            snapshot: Vec::new(),
            bed_queue: Vec::new(),
            tick: 0,
            lockdown_active: false,
            lockdown_tick: None,
            finished: false,
        })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn tick(&self) -> Tick {
        self.tick
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    /// Direct agent access for hooks and tests; ids still index the slice.
    pub fn agents_mut(&mut self) -> &mut [Agent] {
        &mut self.agents
    }

    pub fn lockdown_active(&self) -> bool {
        self.lockdown_active
    }

    /// Tick at which the lockdown latched, if it has.
    pub fn lockdown_tick(&self) -> Option<Tick> {
        self.lockdown_tick
    }

    pub fn finished(&self) -> bool {
        self.finished
    }

    /// Moves every living, mobile agent one tick: uniform heading jitter,
    /// then a straight advance at the effective speed.
    pub fn step_movement(&mut self) {
        let tick = self.tick;
        for agent in &mut self.agents {
            let speed = effective_speed(agent, &self.params, self.lockdown_active, tick);
            if speed <= 0.0 {
                continue;
            }
            let jitter = self
                .rng
                .random_range(-HEADING_PERTURBATION..=HEADING_PERTURBATION);
            agent.heading = (agent.heading + jitter).rem_euclid(TAU);
            advance_agent(agent, speed);
        }
    }

    /// Range search over living agents, one proximity event per in-range
    /// pair, then transmission draws against the tick-start health states.
    /// An agent converts at most once per tick.
    pub fn step_infection(&mut self) -> StepOutcome {
        let tick = self.tick;
        self.positions.clear();
        self.positions.extend(self.agents.iter().map(|a| a.pos));
        self.grid.rebuild(
            self.agents
                .iter()
                .filter(|a| a.is_alive())
                .map(|a| (a.id as u32, a.pos)),
        );
        self.grid
            .in_range_pairs(&self.positions, self.params.infection_range, &mut self.pairs);

        let mut events = Vec::with_capacity(self.pairs.len());
        for &(i, j) in &self.pairs {
            events.push(TraceEvent::proximity(
                i as u64,
                j as u64,
                self.positions[i as usize],
                tick,
            ));
        }

        self.snapshot.clear();
        self.snapshot.extend(self.agents.iter().map(|a| a.state));
        let mut newly_infectious = Vec::new();
        for &(i, j) in &self.pairs {
            use HealthState::*;
            let s_idx = match (self.snapshot[i as usize], self.snapshot[j as usize]) {
                (Susceptible, Infectious) => i as usize,
                (Infectious, Susceptible) => j as usize,
                _ => continue,
            };
            if self.agents[s_idx].state != Susceptible {
                continue; // converted earlier this tick
            }
            let p = effective_infection_prob(&self.agents[s_idx], &self.params, tick);
            if self.rng.random_bool(p) {
                let duration = self
                    .rng
                    .random_range(self.params.recovery_min..=self.params.recovery_max);
                self.agents[s_idx].infect(tick, tick + duration);
                newly_infectious.push(s_idx as u64);
            }
        }
        StepOutcome {
            events,
            newly_infectious,
        }
    }

    /// Reassigns hospital beds (earliest infection first), then resolves
    /// every infection that is due: death with the base mortality rate when
    /// hospitalized, doubled without a bed.
    pub fn step_resolution(&mut self) {
        let tick = self.tick;
        let capacity = self.params.hospital_capacity() as usize;
        self.bed_queue.clear();
        for a in &self.agents {
            if a.state == HealthState::Infectious {
                self.bed_queue
                    .push((a.infected_at.expect("infectious implies infected_at"), a.id));
            }
        }
        if self.bed_queue.len() > capacity && capacity > 0 {
            self.bed_queue.select_nth_unstable(capacity - 1);
        }
        let assigned = capacity.min(self.bed_queue.len());
        for a in &mut self.agents {
            if a.state == HealthState::Infectious {
                a.hospitalized = false;
            }
        }
        if capacity > 0 {
            for k in 0..assigned {
                let (_, id) = self.bed_queue[k];
                self.agents[id as usize].hospitalized = true;
            }
        }

        for idx in 0..self.agents.len() {
            let a = &self.agents[idx];
            if a.state != HealthState::Infectious
                || a.resolution_at.expect("infectious implies resolution_at") > tick
            {
                continue;
            }
            let risk = if a.hospitalized {
                self.params.mortality_rate
            } else {
                (2.0 * self.params.mortality_rate).min(1.0)
            };
            let died = self.rng.random_bool(risk);
            self.agents[idx].resolve(died);
        }
    }

    /// Latches the lockdown the first tick cumulative infections reach the
    /// trigger fraction. Returns the current flag.
    pub fn step_lockdown(&mut self) -> bool {
        let Some(policy) = &self.params.lockdown else {
            return false;
        };
        if !self.lockdown_active {
            let cumulative = self
                .agents
                .iter()
                .filter(|a| a.state != HealthState::Susceptible)
                .count();
            if cumulative as f64 >= policy.trigger_fraction * self.params.n as f64 {
                self.lockdown_active = true;
                self.lockdown_tick = Some(self.tick);
            }
        }
        self.lockdown_active
    }

    fn seed_first_case(&mut self) -> Option<u64> {
        let candidates: Vec<usize> = self
            .agents
            .iter()
            .enumerate()
            .filter(|(_, a)| a.state == HealthState::Susceptible)
            .map(|(i, _)| i)
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let pick = candidates[self.rng.random_range(0..candidates.len())];
        let duration = self
            .rng
            .random_range(self.params.recovery_min..=self.params.recovery_max);
        self.agents[pick].infect(self.tick, self.tick + duration);
        Some(pick as u64)
    }

    pub fn report(&self) -> TickReport {
        let mut r = TickReport {
            tick: self.tick,
            susceptible: 0,
            infectious: 0,
            recovered: 0,
            dead: 0,
            hospitalized: 0,
            lockdown_active: self.lockdown_active,
            notifications_active: 0,
        };
        for a in &self.agents {
            match a.state {
                HealthState::Susceptible => r.susceptible += 1,
                HealthState::Infectious => {
                    r.infectious += 1;
                    if a.hospitalized {
                        r.hospitalized += 1;
                    }
                }
                HealthState::Recovered => r.recovered += 1,
                HealthState::Dead => r.dead += 1,
            }
            if a.is_alive() && a.notified_at(self.tick) {
                r.notifications_active += 1;
            }
        }
        r
    }

    /// One full tick: seeding (on the first-case tick), movement, infection,
    /// resolution, lockdown check, then the hook. The report reflects the
    /// state after all of those. Sets `finished` once the infection is over.
    pub fn step(&mut self, mut hook: Option<&mut (dyn TickHook + '_)>) -> (TickReport, StepOutcome) {
        debug_assert!(!self.finished, "stepping a finished simulation");
        let tick = self.tick;

        let mut newly_infectious = Vec::new();
        if tick == self.params.first_case_tick {
            if let Some(id) = self.seed_first_case() {
                newly_infectious.push(id);
            }
        }
        self.step_movement();
        let outcome = self.step_infection();
        newly_infectious.extend_from_slice(&outcome.newly_infectious);
        self.step_resolution();
        self.step_lockdown();

        if let Some(h) = hook.as_deref_mut() {
            h.after_tick(TickContext {
                tick,
                events: &outcome.events,
                newly_infectious: &newly_infectious,
                agents: &mut self.agents,
                params: &self.params,
            });
        }

        let report = self.report();
        if tick >= self.params.first_case_tick && report.infectious == 0 {
            self.finished = true;
        }
        self.tick += 1;
        (
            report,
            StepOutcome {
                events: outcome.events,
                newly_infectious,
            },
        )
    }
}

/// Runs ticks 0..horizon (stopping early once the infection dies out after
/// the first case), streaming each tick through `hook` if one is attached.
/// Event recording is opt-in because full logs are large.
pub fn run_with(
    params: &SimParams,
    mut hook: Option<&mut (dyn TickHook + '_)>,
    record_events: bool,
) -> Result<RunOutput, SimError> {
    let mut sim = Simulation::new(params.clone())?;
    let mut reports = Vec::new();
    let mut events = Vec::new();
    while sim.tick < params.horizon && !sim.finished {
        let (report, outcome) = sim.step(hook.as_deref_mut());
        reports.push(report);
        if record_events {
            events.extend(outcome.events);
        }
    }
    Ok(RunOutput { reports, events })
}

/// [`run_with`] without a hook or event recording.
pub fn run(params: &SimParams) -> Result<RunOutput, SimError> {
    run_with(params, None, false)
}
