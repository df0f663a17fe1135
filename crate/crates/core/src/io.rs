//! Config files, CSV curves, and JSON summaries.
//!
//! The config format is line oriented: `[scenario.NAME]` headers open a
//! section, `key = value` lines fill it, `#` starts a full-line comment.
//! Every key is checked; unknown keys, duplicate keys, and out-of-range
//! values are hard errors that name the offending line. An input with no
//! sections at all selects the built-in scenario set.
//!
//! All file writers go through an atomic temp-plus-rename, so a crash
//! mid-write never leaves a truncated artifact behind.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::epidemic::{SensingMode, TraceEvent};
use crate::protocol::{ProtocolConfig, ProtocolError, ProtocolStats, UeOeModel, UeUeModel};
use crate::scenario::{
    aggregate, builtin_scenarios, AggregateSummary, MeanTick, RunMode, RunSummary,
    ScenarioConfig, ScenarioResult, DEFAULT_SEEDS,
};
use crate::sir::SirState;
use crate::spatial::{LockdownPolicy, SimError, SimParams, TickReport};

/// Column header shared by per-run and mean curve files.
pub const CURVE_HEADER: &str =
    "tick,susceptible,infectious,recovered,dead,hospitalized,lockdown_active,notifications_active";

/// Column header of event dumps.
pub const EVENT_HEADER: &str = "timestamp,kind,subject,peer,x,y,state";

/// Column header of the ODE baseline curve.
pub const SIR_HEADER: &str = "t,s,i,r";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("scenario {scenario}: {source}")]
    InvalidSim { scenario: String, source: SimError },
    #[error("scenario {scenario}: {source}")]
    InvalidProtocol { scenario: String, source: ProtocolError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("summary document: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// Config parsing

struct SectionBuilder {
    name: String,
    header_line: usize,
    sim: SimParams,
    seeds: Option<Vec<u64>>,
    mode: RunMode,
    lockdown_on: Option<bool>,
    lockdown_trigger: Option<f64>,
    lockdown_compliance: Option<f64>,
    protocol: Option<ProtocolConfig>,
    seen: Vec<String>,
}

impl SectionBuilder {
    fn new(name: String, header_line: usize) -> Self {
        Self {
            name,
            header_line,
            sim: SimParams::default(),
            seeds: None,
            mode: RunMode::GlobalParameters,
            lockdown_on: None,
            lockdown_trigger: None,
            lockdown_compliance: None,
            protocol: None,
            seen: Vec::new(),
        }
    }

    /// Every protocol-family key materializes the block with defaults.
    fn protocol_mut(&mut self) -> &mut ProtocolConfig {
        self.protocol.get_or_insert_with(ProtocolConfig::default)
    }

    fn finish(mut self) -> Result<ScenarioConfig, IoError> {
        let wants_lockdown = self.lockdown_on.unwrap_or(
            self.lockdown_trigger.is_some() || self.lockdown_compliance.is_some(),
        );
        self.sim.lockdown = wants_lockdown.then(|| LockdownPolicy {
            trigger_fraction: self.lockdown_trigger.unwrap_or(0.10),
            compliance: self.lockdown_compliance.unwrap_or(0.92),
        });
        self.sim
            .validate()
            .map_err(|source| IoError::InvalidSim { scenario: self.name.clone(), source })?;
        if let Some(proto) = &self.protocol {
            proto.validate().map_err(|source| IoError::InvalidProtocol {
                scenario: self.name.clone(),
                source,
            })?;
        }
        if self.mode == RunMode::ProtocolDriven && self.protocol.is_none() {
            return Err(IoError::Parse {
                line: self.header_line,
                message: format!(
                    "scenario {} sets mode = protocol but has no protocol keys",
                    self.name
                ),
            });
        }
        Ok(ScenarioConfig {
            name: self.name,
            sim: self.sim,
            protocol: self.protocol,
            mode: self.mode,
            seeds: self.seeds.unwrap_or_else(|| DEFAULT_SEEDS.to_vec()),
        })
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse { line, message: message.into() }
}

fn parse_u64(key: &str, value: &str, line: usize) -> Result<u64, IoError> {
    value
        .parse()
        .map_err(|_| parse_err(line, format!("{key} expects a non-negative integer, got {value:?}")))
}

fn parse_f64(key: &str, value: &str, line: usize) -> Result<f64, IoError> {
    value
        .parse()
        .map_err(|_| parse_err(line, format!("{key} expects a number, got {value:?}")))
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool, IoError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(parse_err(line, format!("{key} expects true or false, got {value:?}"))),
    }
}

fn parse_switch(key: &str, value: &str, line: usize) -> Result<bool, IoError> {
    match value {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(parse_err(line, format!("{key} expects on or off, got {value:?}"))),
    }
}

fn parse_seeds(value: &str, line: usize) -> Result<Vec<u64>, IoError> {
    value
        .split(',')
        .map(|part| {
            let part = part.trim();
            if part.is_empty() {
                return Err(parse_err(line, "seeds expects a comma-separated list of integers"));
            }
            parse_u64("seeds", part, line)
        })
        .collect()
}

fn parse_sensing(value: &str, line: usize) -> Result<SensingMode, IoError> {
    let (kind, arg) = match value.split_once(':') {
        Some((k, a)) => (k.trim(), Some(a.trim())),
        None => (value, None),
    };
    match (kind, arg) {
        ("passive", None) => Ok(SensingMode::Passive),
        ("proactive", Some(p)) => {
            Ok(SensingMode::Proactive { participation: parse_f64("sensing", p, line)? })
        }
        ("hybrid", Some(p)) => {
            Ok(SensingMode::Hybrid { participation: parse_f64("sensing", p, line)? })
        }
        _ => Err(parse_err(
            line,
            format!("sensing expects passive, proactive:P, or hybrid:P, got {value:?}"),
        )),
    }
}

fn apply_key(b: &mut SectionBuilder, key: &str, value: &str, line: usize) -> Result<(), IoError> {
    match key {
        // Run shape.
        "mode" => {
            b.mode = match value {
                "global" => RunMode::GlobalParameters,
                "protocol" => RunMode::ProtocolDriven,
                _ => {
                    return Err(parse_err(
                        line,
                        format!("mode expects global or protocol, got {value:?}"),
                    ))
                }
            }
        }
        "seeds" => b.seeds = Some(parse_seeds(value, line)?),
        // Population and disease.
        "n" => b.sim.n = parse_u64(key, value, line)?,
        "avg_speed" => b.sim.avg_speed = parse_f64(key, value, line)?,
        "infection_range" => b.sim.infection_range = parse_f64(key, value, line)?,
        "infection_prob" => b.sim.infection_prob = parse_f64(key, value, line)?,
        "mortality_rate" => b.sim.mortality_rate = parse_f64(key, value, line)?,
        "beds_per_1000" => b.sim.beds_per_1000 = parse_f64(key, value, line)?,
        "first_case_tick" => b.sim.first_case_tick = parse_u64(key, value, line)?,
        "recovery_min" => b.sim.recovery_min = parse_u64(key, value, line)?,
        "recovery_max" => b.sim.recovery_max = parse_u64(key, value, line)?,
        "horizon" => b.sim.horizon = parse_u64(key, value, line)?,
        // Warned-agent behaviour.
        "notified_speed_factor" => b.sim.notified_speed_factor = parse_f64(key, value, line)?,
        "notified_prob_factor" => b.sim.notified_prob_factor = parse_f64(key, value, line)?,
        "notified_duration" => b.sim.notified_duration = parse_u64(key, value, line)?,
        // Lockdown.
        "lockdown" => b.lockdown_on = Some(parse_switch(key, value, line)?),
        "lockdown_trigger" => b.lockdown_trigger = Some(parse_f64(key, value, line)?),
        "lockdown_compliance" => b.lockdown_compliance = Some(parse_f64(key, value, line)?),
        // Tracing deployment.
        "protocol" => {
            b.protocol_mut().model.ue_ue = match value {
                "centralized" => UeUeModel::Centralized,
                "user_centered" => UeUeModel::UserCentered,
                "distributed" => UeUeModel::Distributed,
                _ => {
                    return Err(parse_err(
                        line,
                        format!(
                            "protocol expects centralized, user_centered, or distributed, got {value:?}"
                        ),
                    ))
                }
            }
        }
        "protocol_touch" => {
            b.protocol_mut().model.ue_oe = match value {
                "indirect" => UeOeModel::Indirect,
                "direct" => UeOeModel::Direct,
                _ => {
                    return Err(parse_err(
                        line,
                        format!("protocol_touch expects indirect or direct, got {value:?}"),
                    ))
                }
            }
        }
        "fe_leaves" => b.protocol_mut().fe_leaves = parse_u64(key, value, line)? as usize,
        "lookback" => b.protocol_mut().lookback = parse_u64(key, value, line)?,
        "retention" => b.protocol_mut().retention = parse_u64(key, value, line)?,
        "latency" => b.protocol_mut().latency = parse_u64(key, value, line)?,
        "detection_delay" => b.protocol_mut().detection_delay = parse_u64(key, value, line)?,
        "poll_period" => b.protocol_mut().poll_period = parse_u64(key, value, line)?,
        "sensing" => b.protocol_mut().sensing = parse_sensing(value, line)?,
        "distributed_fe_upload" => {
            b.protocol_mut().distributed_fe_upload = parse_bool(key, value, line)?
        }
        "indirect_fe_upload" => {
            b.protocol_mut().indirect_fe_upload = parse_bool(key, value, line)?
        }
        "direct_fe_forward" => b.protocol_mut().direct_fe_forward = parse_bool(key, value, line)?,
        _ => return Err(parse_err(line, format!("unknown key {key:?}"))),
    }
    Ok(())
}

/// Parses a scenario config file. No sections means the built-in set.
pub fn parse_config(text: &str) -> Result<Vec<ScenarioConfig>, IoError> {
    let mut configs: Vec<ScenarioConfig> = Vec::new();
    let mut current: Option<SectionBuilder> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(header) = trimmed.strip_prefix('[') {
            let Some(header) = header.strip_suffix(']') else {
                return Err(parse_err(line, "unterminated section header"));
            };
            let Some(name) = header.strip_prefix("scenario.") else {
                return Err(parse_err(
                    line,
                    format!("section header must look like [scenario.NAME], got [{header}]"),
                ));
            };
            let name = name.trim();
            if name.is_empty()
                || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(parse_err(
                    line,
                    format!("scenario name {name:?} may only use letters, digits, _ and -"),
                ));
            }
            if let Some(done) = current.take() {
                configs.push(done.finish()?);
            }
            if configs.iter().any(|c| c.name == name) {
                return Err(parse_err(line, format!("duplicate scenario name {name:?}")));
            }
            current = Some(SectionBuilder::new(name.to_string(), line));
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(parse_err(line, format!("expected key = value, got {trimmed:?}")));
        };
        let key = key.trim();
        let value = value.trim();
        let Some(builder) = current.as_mut() else {
            return Err(parse_err(
                line,
                format!("key {key:?} appears before any [scenario.NAME] section"),
            ));
        };
        if builder.seen.iter().any(|k| k == key) {
            return Err(parse_err(line, format!("duplicate key {key:?} in this section")));
        }
        builder.seen.push(key.to_string());
        apply_key(builder, key, value, line)?;
    }
    if let Some(done) = current.take() {
        configs.push(done.finish()?);
    }
    if configs.is_empty() {
        return Ok(builtin_scenarios());
    }
    Ok(configs)
}

// ---------------------------------------------------------------------------
// Config serialization

fn push_sensing(out: &mut String, sensing: SensingMode) {
    match sensing {
        SensingMode::Passive => out.push_str("sensing = passive\n"),
        SensingMode::Proactive { participation } => {
            let _ = writeln!(out, "sensing = proactive:{participation}");
        }
        SensingMode::Hybrid { participation } => {
            let _ = writeln!(out, "sensing = hybrid:{participation}");
        }
    }
}

/// Renders configs back to the file format. Every value is written
/// explicitly, so `parse_config(serialize_config(x)) == x` regardless of
/// how the defaults evolve.
pub fn serialize_config(configs: &[ScenarioConfig]) -> String {
    let mut out = String::new();
    for (i, c) in configs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "[scenario.{}]", c.name);
        let _ = writeln!(out, "mode = {}", c.mode.as_str());
        let seeds: Vec<String> = c.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "seeds = {}", seeds.join(","));
        let s = &c.sim;
        let _ = writeln!(out, "n = {}", s.n);
        let _ = writeln!(out, "avg_speed = {}", s.avg_speed);
        let _ = writeln!(out, "infection_range = {}", s.infection_range);
        let _ = writeln!(out, "infection_prob = {}", s.infection_prob);
        let _ = writeln!(out, "mortality_rate = {}", s.mortality_rate);
        let _ = writeln!(out, "beds_per_1000 = {}", s.beds_per_1000);
        let _ = writeln!(out, "first_case_tick = {}", s.first_case_tick);
        let _ = writeln!(out, "recovery_min = {}", s.recovery_min);
        let _ = writeln!(out, "recovery_max = {}", s.recovery_max);
        let _ = writeln!(out, "horizon = {}", s.horizon);
        let _ = writeln!(out, "notified_speed_factor = {}", s.notified_speed_factor);
        let _ = writeln!(out, "notified_prob_factor = {}", s.notified_prob_factor);
        let _ = writeln!(out, "notified_duration = {}", s.notified_duration);
        if let Some(ld) = s.lockdown {
            out.push_str("lockdown = on\n");
            let _ = writeln!(out, "lockdown_trigger = {}", ld.trigger_fraction);
            let _ = writeln!(out, "lockdown_compliance = {}", ld.compliance);
        }
        if let Some(p) = &c.protocol {
            let model = match p.model.ue_ue {
                UeUeModel::Centralized => "centralized",
                UeUeModel::UserCentered => "user_centered",
                UeUeModel::Distributed => "distributed",
            };
            let _ = writeln!(out, "protocol = {model}");
            let touch = match p.model.ue_oe {
                UeOeModel::Indirect => "indirect",
                UeOeModel::Direct => "direct",
            };
            let _ = writeln!(out, "protocol_touch = {touch}");
            let _ = writeln!(out, "fe_leaves = {}", p.fe_leaves);
            let _ = writeln!(out, "lookback = {}", p.lookback);
            let _ = writeln!(out, "retention = {}", p.retention);
            let _ = writeln!(out, "latency = {}", p.latency);
            let _ = writeln!(out, "detection_delay = {}", p.detection_delay);
            let _ = writeln!(out, "poll_period = {}", p.poll_period);
            push_sensing(&mut out, p.sensing);
            let _ = writeln!(out, "distributed_fe_upload = {}", p.distributed_fe_upload);
            let _ = writeln!(out, "indirect_fe_upload = {}", p.indirect_fe_upload);
            let _ = writeln!(out, "direct_fe_forward = {}", p.direct_fe_forward);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// File writers

/// Writes via a sibling temp file and rename, so readers never observe a
/// partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(parent)?;
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let tmp = parent.join(format!(".{file_name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// One run's tick series as CSV. Booleans are 0/1.
pub fn write_curves(path: &Path, reports: &[TickReport]) -> Result<(), IoError> {
    let mut out = String::with_capacity(reports.len() * 40 + CURVE_HEADER.len() + 1);
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.tick,
            r.susceptible,
            r.infectious,
            r.recovered,
            r.dead,
            r.hospitalized,
            u8::from(r.lockdown_active),
            r.notifications_active,
        );
    }
    write_atomic(path, &out)
}

/// Reads a file produced by [`write_curves`].
pub fn read_curves(path: &Path) -> Result<Vec<TickReport>, IoError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CURVE_HEADER => {}
        _ => return Err(parse_err(1, format!("expected header {CURVE_HEADER:?}"))),
    }
    let mut reports = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 8 {
            return Err(parse_err(line, format!("expected 8 columns, got {}", fields.len())));
        }
        let num =
            |i: usize| parse_u64(CURVE_HEADER.split(',').nth(i).unwrap_or("column"), fields[i], line);
        reports.push(TickReport {
            tick: num(0)?,
            susceptible: num(1)?,
            infectious: num(2)?,
            recovered: num(3)?,
            dead: num(4)?,
            hospitalized: num(5)?,
            lockdown_active: match fields[6] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(parse_err(line, format!("lockdown_active expects 0 or 1, got {other:?}")))
                }
            },
            notifications_active: num(7)?,
        });
    }
    Ok(reports)
}

/// Cross-seed mean curve as CSV: means, with lockdown as a fraction of
/// runs.
pub fn write_mean_curve(path: &Path, curve: &[MeanTick]) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for m in curve {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            m.tick,
            m.susceptible,
            m.infectious,
            m.recovered,
            m.dead,
            m.hospitalized,
            m.lockdown_active,
            m.notifications_active,
        );
    }
    write_atomic(path, &out)
}

/// Raw trace events as CSV. Empty peer/state columns mean "not carried by
/// this event kind".
pub fn write_events(path: &Path, events: &[TraceEvent]) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(EVENT_HEADER);
    out.push('\n');
    for e in events {
        let peer = e.peer_id.map(|p| p.to_string()).unwrap_or_default();
        let state = e.state.map(|s| s.as_str()).unwrap_or("");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.timestamp,
            e.kind.as_str(),
            e.subject_id,
            peer,
            e.location.x(),
            e.location.y(),
            state,
        );
    }
    write_atomic(path, &out)
}

/// Sampled ODE trajectory as CSV.
pub fn write_sir_curve(path: &Path, states: &[SirState]) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(SIR_HEADER);
    out.push('\n');
    for st in states {
        let _ = writeln!(out, "{},{},{},{}", st.t, st.s, st.i, st.r);
    }
    write_atomic(path, &out)
}

// ---------------------------------------------------------------------------
// Summary documents

/// Scenario-level result document written next to the curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDoc {
    pub scenario: String,
    pub mode: RunMode,
    pub runs: Vec<RunSummary>,
    pub aggregate: Option<AggregateSummary>,
    /// Per-run deployment statistics, `null` for global-parameter runs.
    pub protocol: Option<Vec<ProtocolStats>>,
}

impl SummaryDoc {
    pub fn from_result(result: &ScenarioResult) -> Self {
        let summaries: Vec<RunSummary> = result.runs.iter().map(|r| r.summary).collect();
        let protocol: Option<Vec<ProtocolStats>> = result
            .runs
            .iter()
            .map(|r| r.protocol_stats.clone())
            .collect();
        Self {
            scenario: result.config.name.clone(),
            mode: result.config.mode,
            aggregate: aggregate(&summaries),
            runs: summaries,
            protocol,
        }
    }
}

pub fn write_summary(path: &Path, doc: &SummaryDoc) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    write_atomic(path, &text)
}

pub fn read_summary(path: &Path) -> Result<SummaryDoc, IoError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
