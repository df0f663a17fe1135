//! Named experiment configurations and multi-seed execution.
//!
//! A scenario couples one simulation parameterization (optionally with a
//! tracing deployment) to a list of seeds. Running it produces one full
//! tick series per seed plus per-run summaries, which can then be averaged
//! into scenario-level statistics and mean curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::epidemic::{Tick, TraceEvent};
use crate::protocol::{ProtocolConfig, ProtocolError, ProtocolHarness, ProtocolStats};
use crate::spatial::{run_with, LockdownPolicy, SimError, SimParams, TickReport};

/// How a scenario models the intervention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunMode {
    /// Behaviour differences are baked into the population-wide parameters
    /// (movement speed, transmission probability, lockdown policy).
    #[serde(rename = "global")]
    GlobalParameters,
    /// The population starts from baseline behaviour and only individually
    /// warned agents become cautious, driven by the tracing deployment.
    #[serde(rename = "protocol")]
    ProtocolDriven,
}

impl RunMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunMode::GlobalParameters => "global",
            RunMode::ProtocolDriven => "protocol",
        }
    }
}

/// One named experiment: parameters, optional deployment, seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub sim: SimParams,
    pub protocol: Option<ProtocolConfig>,
    pub mode: RunMode,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario {name}: protocol-driven mode needs a protocol section")]
    MissingProtocol { name: String },
    #[error("scenario {name}, seed {seed}: {source}")]
    Sim { name: String, seed: u64, source: SimError },
    #[error("scenario {name}, seed {seed}: {source}")]
    Protocol { name: String, seed: u64, source: ProtocolError },
}

/// Digest of one seed's run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    /// Largest simultaneous infectious count, and the first tick it was
    /// reached.
    pub peak_infectious: u64,
    pub peak_tick: Tick,
    /// Everyone who ever left the susceptible state.
    pub total_infected: u64,
    pub total_recovered: u64,
    pub total_dead: u64,
    /// Last tick the cumulative infected count grew.
    pub last_infection_tick: Option<Tick>,
    /// Last tick anyone recovered or died.
    pub last_resolution_tick: Option<Tick>,
    /// First tick movement restrictions were in force, if they ever were.
    pub lockdown_tick: Option<Tick>,
    /// Simulated ticks before the run ended (early when the infection died
    /// out).
    pub duration: Tick,
}

/// One seed's full output. `events` stays empty unless recording was
/// requested; at full population size it is enormous.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub seed: u64,
    pub reports: Vec<TickReport>,
    pub summary: RunSummary,
    pub protocol_stats: Option<ProtocolStats>,
    pub events: Vec<TraceEvent>,
}

/// Everything a scenario produced, runs ordered as the seeds were given.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub runs: Vec<ScenarioRun>,
}

/// Reduces one run's tick series to its summary.
pub fn summarize(params: &SimParams, seed: u64, reports: &[TickReport]) -> RunSummary {
    let mut peak_infectious = 0;
    let mut peak_tick = 0;
    let mut last_infection_tick = None;
    let mut last_resolution_tick = None;
    let mut lockdown_tick = None;
    let mut prev_infected = 0u64;
    let mut prev_resolved = 0u64;
    for r in reports {
        if r.infectious > peak_infectious {
            peak_infectious = r.infectious;
            peak_tick = r.tick;
        }
        let infected = params.n - r.susceptible;
        if infected > prev_infected {
            last_infection_tick = Some(r.tick);
            prev_infected = infected;
        }
        let resolved = r.recovered + r.dead;
        if resolved > prev_resolved {
            last_resolution_tick = Some(r.tick);
            prev_resolved = resolved;
        }
        if r.lockdown_active && lockdown_tick.is_none() {
            lockdown_tick = Some(r.tick);
        }
    }
    let last = reports.last();
    RunSummary {
        seed,
        peak_infectious,
        peak_tick,
        total_infected: last.map_or(0, |r| params.n - r.susceptible),
        total_recovered: last.map_or(0, |r| r.recovered),
        total_dead: last.map_or(0, |r| r.dead),
        last_infection_tick,
        last_resolution_tick,
        lockdown_tick,
        duration: reports.len() as Tick,
    }
}

/// Runs every seed of a scenario (in parallel where the host allows).
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult, ScenarioError> {
    run_scenario_recording(config, false)
}

/// [`run_scenario`], optionally keeping every run's raw trace events.
pub fn run_scenario_recording(
    config: &ScenarioConfig,
    record_events: bool,
) -> Result<ScenarioResult, ScenarioError> {
    if config.mode == RunMode::ProtocolDriven && config.protocol.is_none() {
        return Err(ScenarioError::MissingProtocol { name: config.name.clone() });
    }
    let runs: Result<Vec<ScenarioRun>, ScenarioError> = config
        .seeds
        .par_iter()
        .map(|&seed| run_one(config, seed, record_events))
        .collect();
    Ok(ScenarioResult { config: config.clone(), runs: runs? })
}

fn run_one(
    config: &ScenarioConfig,
    seed: u64,
    record_events: bool,
) -> Result<ScenarioRun, ScenarioError> {
    let params = SimParams { seed, ..config.sim.clone() };
    let wrap_sim = |source| ScenarioError::Sim {
        name: config.name.clone(),
        seed,
        source,
    };
    let (out, protocol_stats) = match (config.mode, &config.protocol) {
        (RunMode::ProtocolDriven, Some(proto)) => {
            let mut harness = ProtocolHarness::new(*proto, params.n, seed).map_err(|source| {
                ScenarioError::Protocol { name: config.name.clone(), seed, source }
            })?;
            let out = run_with(&params, Some(&mut harness), record_events).map_err(wrap_sim)?;
            (out, Some(harness.stats()))
        }
        _ => (run_with(&params, None, record_events).map_err(wrap_sim)?, None),
    };
    let summary = summarize(&params, seed, &out.reports);
    Ok(ScenarioRun {
        seed,
        reports: out.reports,
        summary,
        protocol_stats,
        events: out.events,
    })
}

/// Mean, sample standard deviation (n-1), and range of one summary field
/// across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl FieldStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1.0)).sqrt()
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { mean, std, min, max })
    }
}

/// Cross-seed statistics of the summary fields. Optional tick fields are
/// aggregated over the runs where they occurred; `None` means they never
/// did.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub runs: usize,
    pub peak_infectious: FieldStats,
    pub peak_tick: FieldStats,
    pub total_infected: FieldStats,
    pub total_recovered: FieldStats,
    pub total_dead: FieldStats,
    pub last_infection_tick: Option<FieldStats>,
    pub last_resolution_tick: Option<FieldStats>,
    pub lockdown_tick: Option<FieldStats>,
    pub duration: FieldStats,
}

/// Aggregates per-run summaries. `None` when there are no runs.
pub fn aggregate(summaries: &[RunSummary]) -> Option<AggregateSummary> {
    if summaries.is_empty() {
        return None;
    }
    let field = |f: &dyn Fn(&RunSummary) -> f64| {
        let values: Vec<f64> = summaries.iter().map(f).collect();
        FieldStats::from_values(&values).expect("non-empty by the guard above")
    };
    let opt_field = |f: &dyn Fn(&RunSummary) -> Option<Tick>| {
        let values: Vec<f64> = summaries.iter().filter_map(f).map(|t| t as f64).collect();
        FieldStats::from_values(&values)
    };
    Some(AggregateSummary {
        runs: summaries.len(),
        peak_infectious: field(&|s| s.peak_infectious as f64),
        peak_tick: field(&|s| s.peak_tick as f64),
        total_infected: field(&|s| s.total_infected as f64),
        total_recovered: field(&|s| s.total_recovered as f64),
        total_dead: field(&|s| s.total_dead as f64),
        last_infection_tick: opt_field(&|s| s.last_infection_tick),
        last_resolution_tick: opt_field(&|s| s.last_resolution_tick),
        lockdown_tick: opt_field(&|s| s.lockdown_tick),
        duration: field(&|s| s.duration as f64),
    })
}

/// One tick of the cross-seed mean curve. Counts become means; the two
/// flags become fractions of runs (lockdown) and mean headcounts
/// (notifications).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanTick {
    pub tick: Tick,
    pub susceptible: f64,
    pub infectious: f64,
    pub recovered: f64,
    pub dead: f64,
    pub hospitalized: f64,
    pub lockdown_active: f64,
    pub notifications_active: f64,
}

/// Averages tick series of different lengths. A run that ended early holds
/// its final state, so it keeps contributing those values until the
/// longest run finishes.
pub fn average_curves(runs: &[ScenarioRun]) -> Vec<MeanTick> {
    let longest = runs.iter().map(|r| r.reports.len()).max().unwrap_or(0);
    if longest == 0 {
        return Vec::new();
    }
    let n = runs.len() as f64;
    (0..longest)
        .map(|idx| {
            let mut acc = MeanTick {
                tick: idx as Tick,
                susceptible: 0.0,
                infectious: 0.0,
                recovered: 0.0,
                dead: 0.0,
                hospitalized: 0.0,
                lockdown_active: 0.0,
                notifications_active: 0.0,
            };
            for run in runs {
                let r = run.reports[idx.min(run.reports.len() - 1)];
                acc.susceptible += r.susceptible as f64;
                acc.infectious += r.infectious as f64;
                acc.recovered += r.recovered as f64;
                acc.dead += r.dead as f64;
                acc.hospitalized += r.hospitalized as f64;
                acc.lockdown_active += if r.lockdown_active { 1.0 } else { 0.0 };
                acc.notifications_active += r.notifications_active as f64;
            }
            acc.susceptible /= n;
            acc.infectious /= n;
            acc.recovered /= n;
            acc.dead /= n;
            acc.hospitalized /= n;
            acc.lockdown_active /= n;
            acc.notifications_active /= n;
            acc
        })
        .collect()
}

/// The standard seed list used by the built-in scenarios.
pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// The seven built-in experiments.
///
/// Three severity levels sweep transmissibility and movement globally; two
/// lockdown variants add a triggered movement restriction on top of the
/// milder levels; and two traced variants keep the baseline population but
/// let exposure warnings impose the milder behaviour individually, for as
/// long as a warning is active.
pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    let seeds = DEFAULT_SEEDS.to_vec();
    let base = SimParams::default();

    let s1 = ScenarioConfig {
        name: "s1".into(),
        sim: base.clone(),
        protocol: None,
        mode: RunMode::GlobalParameters,
        seeds: seeds.clone(),
    };
    let s2 = ScenarioConfig {
        name: "s2".into(),
        sim: SimParams { infection_prob: 0.02, avg_speed: 0.002, ..base.clone() },
        protocol: None,
        mode: RunMode::GlobalParameters,
        seeds: seeds.clone(),
    };
    let s3 = ScenarioConfig {
        name: "s3".into(),
        sim: SimParams { infection_prob: 0.02, avg_speed: 0.001, ..base.clone() },
        protocol: None,
        mode: RunMode::GlobalParameters,
        seeds: seeds.clone(),
    };
    let lockdown = Some(LockdownPolicy { trigger_fraction: 0.10, compliance: 0.92 });
    let s2_lockdown = ScenarioConfig {
        name: "s2_lockdown".into(),
        sim: SimParams { lockdown, ..s2.sim.clone() },
        ..s2.clone()
    };
    let s3_lockdown = ScenarioConfig {
        name: "s3_lockdown".into(),
        sim: SimParams { lockdown, ..s3.sim.clone() },
        ..s3.clone()
    };

    // Traced variants: baseline spread, but a warned agent temporarily
    // behaves like the corresponding globally-damped population. The
    // factors are exact quotients of the target and baseline values.
    let traced_protocol = ProtocolConfig {
        fe_leaves: 4,
        lookback: 450,
        retention: 450,
        latency: 0,
        detection_delay: 0,
        ..ProtocolConfig::default()
    };
    let s2_traced = ScenarioConfig {
        name: "s2_traced".into(),
        sim: SimParams {
            notified_prob_factor: 0.02 / 0.05,
            notified_speed_factor: 0.002 / 0.0042,
            notified_duration: 900,
            ..base.clone()
        },
        protocol: Some(traced_protocol),
        mode: RunMode::ProtocolDriven,
        seeds: seeds.clone(),
    };
    let s3_traced = ScenarioConfig {
        name: "s3_traced".into(),
        sim: SimParams {
            notified_prob_factor: 0.02 / 0.05,
            notified_speed_factor: 0.001 / 0.0042,
            notified_duration: 900,
            ..base
        },
        protocol: Some(traced_protocol),
        mode: RunMode::ProtocolDriven,
        seeds,
    };

    vec![s1, s2, s3, s2_lockdown, s3_lockdown, s2_traced, s3_traced]
}
