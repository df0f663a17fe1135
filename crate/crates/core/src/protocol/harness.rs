//! Couples a deployment to the running simulation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::epidemic::{seeded_stream, SensingMode, SimRng, Tick, PROTOCOL_RNG_STREAM};
use crate::spatial::{TickContext, TickHook};

use super::{
    apply_notification, sensing_gate, Deployment, DeploymentConfig, EndpointId, InteractionModel,
    ProtocolError, ProtocolStats,
};

/// Full description of a tracing deployment attached to a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub model: InteractionModel,
    pub fe_leaves: usize,
    /// How far back a diagnosis searches for contacts, in ticks.
    pub lookback: Tick,
    /// How long stores keep entries, in ticks. Should not be shorter than
    /// the lookback or old contacts expire before a diagnosis can reach
    /// them.
    pub retention: Tick,
    /// Transit time of every message, in ticks.
    pub latency: Tick,
    /// Ticks between an agent turning infectious and its device announcing
    /// the diagnosis.
    pub detection_delay: Tick,
    /// Pull cadence in the user-centered model; zero disables polling.
    pub poll_period: Tick,
    pub sensing: SensingMode,
    pub distributed_fe_upload: bool,
    pub indirect_fe_upload: bool,
    pub direct_fe_forward: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            model: InteractionModel::default(),
            fe_leaves: 1,
            lookback: 300,
            retention: 300,
            latency: 1,
            detection_delay: 0,
            poll_period: 1,
            sensing: SensingMode::Passive,
            distributed_fe_upload: false,
            indirect_fe_upload: false,
            direct_fe_forward: false,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.fe_leaves == 0 {
            return Err(ProtocolError::NoLeaves);
        }
        match self.sensing {
            SensingMode::Proactive { participation }
            | SensingMode::Hybrid { participation } => {
                if !(0.0..=1.0).contains(&participation) || participation.is_nan() {
                    return Err(ProtocolError::BadParticipation(participation));
                }
            }
            SensingMode::Passive => {}
        }
        Ok(())
    }

    pub fn deployment_config(&self) -> DeploymentConfig {
        DeploymentConfig {
            model: self.model,
            fe_leaves: self.fe_leaves,
            retention: self.retention,
            lookback: self.lookback,
            latency: self.latency,
            poll_period: self.poll_period,
            distributed_fe_upload: self.distributed_fe_upload,
            indirect_fe_upload: self.indirect_fe_upload,
            direct_fe_forward: self.direct_fe_forward,
        }
    }
}

/// Drives a [`Deployment`] from simulation ticks.
///
/// Each tick it pushes the sensed proximity events through the sensing
/// gate into the deployment, announces diagnoses of agents that turned
/// infectious `detection_delay` ticks ago, runs the user-centered poll,
/// delivers due messages, and applies arriving warnings to the agents.
///
/// The gate's randomness comes from a dedicated RNG stream, so attaching
/// (or reconfiguring) the protocol never changes the epidemic's own random
/// sequence for a given seed.
pub struct ProtocolHarness {
    cfg: ProtocolConfig,
    deployment: Deployment,
    pending_diagnoses: BTreeMap<Tick, Vec<u64>>,
    rng: SimRng,
    notifications_applied: u64,
}

impl ProtocolHarness {
    /// Builds the deployment and registers one device per agent id.
    pub fn new(cfg: ProtocolConfig, n_agents: u64, seed: u64) -> Result<Self, ProtocolError> {
        cfg.validate()?;
        let mut deployment = Deployment::new(cfg.deployment_config())?;
        for id in 0..n_agents {
            deployment.register_ue(id);
        }
        Ok(Self {
            cfg,
            deployment,
            pending_diagnoses: BTreeMap::new(),
            rng: seeded_stream(seed, PROTOCOL_RNG_STREAM),
            notifications_applied: 0,
        })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    pub fn deployment(&self) -> &Deployment {
        &self.deployment
    }

    pub fn deployment_mut(&mut self) -> &mut Deployment {
        &mut self.deployment
    }

    /// Deployment counters plus harness-level outcomes.
    pub fn stats(&self) -> ProtocolStats {
        let mut stats = self.deployment.stats();
        stats.notifications_applied = self.notifications_applied;
        stats
    }
}

impl TickHook for ProtocolHarness {
    fn after_tick(&mut self, ctx: TickContext<'_>) {
        let now = ctx.tick;
        for event in ctx.events {
            if !sensing_gate(event, self.cfg.sensing, &mut self.rng) {
                continue;
            }
            let a = EndpointId::ue(event.subject_id);
            let b = EndpointId::ue(event.peer_id.expect("proximity events carry a peer"));
            self.deployment
                .on_proximity(a, b, event)
                .expect("simulation events reference registered devices");
        }
        for &id in ctx.newly_infectious {
            self.pending_diagnoses
                .entry(now + self.cfg.detection_delay)
                .or_default()
                .push(id);
        }
        while let Some(entry) = self.pending_diagnoses.first_entry() {
            if *entry.key() > now {
                break;
            }
            for id in entry.remove() {
                self.deployment
                    .report_diagnosis(EndpointId::ue(id), now)
                    .expect("diagnosed agents are registered devices");
            }
        }
        self.deployment.poll(now);
        for note in self.deployment.deliver_due(now) {
            let agent = &mut ctx.agents[note.peer as usize];
            if apply_notification(agent, &note, ctx.params, now) {
                self.notifications_applied += 1;
            }
        }
        self.deployment.prune(now);
    }
}
