//! Command-line front end for the simulator.
//!
//! `run` executes scenarios (built-in or from a config file) and writes
//! per-seed curves, a mean curve, and a JSON summary per scenario. `ode`
//! integrates the deterministic baseline. `scenarios` prints the built-in
//! definitions in config-file form, and `validate` checks a config without
//! running it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ctsim_core::io::{
    parse_config, serialize_config, write_curves, write_events, write_mean_curve,
    write_sir_curve, write_summary, SummaryDoc, SIR_HEADER,
};
use ctsim_core::scenario::{
    average_curves, builtin_scenarios, run_scenario_recording, RunMode, ScenarioConfig,
};
use ctsim_core::sir::{integrate, SirParams, SirState};

/// Output directory used when neither `--out` nor `CTSIM_OUT_DIR` is set.
const DEFAULT_OUT_DIR: &str = "runs";

#[derive(Parser)]
#[command(
    name = "ctsim",
    version,
    about = "Agent-based epidemic simulator with a contact-tracing protocol layer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeFilter {
    Global,
    Protocol,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios and write curves plus summaries.
    Run {
        /// Scenario config file. Omitted: the built-in scenario set.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory. Default: $CTSIM_OUT_DIR, then "runs".
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run only the named scenarios (repeatable).
        #[arg(long)]
        scenario: Vec<String>,
        /// Run only scenarios of this mode.
        #[arg(long, value_enum)]
        mode: Option<ModeFilter>,
        /// Replace every scenario's seed list (comma separated).
        #[arg(long)]
        seeds: Option<String>,
        /// Also write raw trace events per run (large files).
        #[arg(long)]
        events: bool,
    },
    /// Integrate the deterministic SIR baseline and emit its curve.
    Ode {
        /// Transmission rate.
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        /// Recovery rate.
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        /// Population size.
        #[arg(long, default_value_t = 5000.0)]
        n: f64,
        /// Initially infectious count.
        #[arg(long, default_value_t = 1.0)]
        i0: f64,
        /// Integration horizon in time units.
        #[arg(long, default_value_t = 1000.0)]
        horizon: f64,
        /// Integration step size.
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        /// Write the curve here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in scenario definitions in config-file form.
    Scenarios,
    /// Parse and check a config file without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<(), String> {
    match command {
        Command::Run { config, out, scenario, mode, seeds, events } => {
            cmd_run(config, out, scenario, mode, seeds, events)
        }
        Command::Ode { beta, gamma, n, i0, horizon, step, out } => {
            cmd_ode(beta, gamma, n, i0, horizon, step, out)
        }
        Command::Scenarios => {
            print!("{}", serialize_config(&builtin_scenarios()));
            Ok(())
        }
        Command::Validate { config } => cmd_validate(&config),
    }
}

fn load_configs(path: Option<&Path>) -> Result<Vec<ScenarioConfig>, String> {
    match path {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
        }
        None => Ok(builtin_scenarios()),
    }
}

fn cmd_run(
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    names: Vec<String>,
    mode: Option<ModeFilter>,
    seeds: Option<String>,
    events: bool,
) -> Result<(), String> {
    let mut configs = load_configs(config.as_deref())?;
    if let Some(filter) = mode {
        let wanted = match filter {
            ModeFilter::Global => RunMode::GlobalParameters,
            ModeFilter::Protocol => RunMode::ProtocolDriven,
        };
        configs.retain(|c| c.mode == wanted);
    }
    if !names.is_empty() {
        for name in &names {
            if !configs.iter().any(|c| &c.name == name) {
                return Err(format!("no scenario named {name:?} in the selection"));
            }
        }
        configs.retain(|c| names.contains(&c.name));
    }
    if configs.is_empty() {
        return Err("nothing to run after filtering".into());
    }
    if let Some(list) = seeds {
        let seeds: Vec<u64> = list
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<u64>()
                    .map_err(|_| format!("--seeds expects integers, got {part:?}"))
            })
            .collect::<Result<_, _>>()?;
        if seeds.is_empty() {
            return Err("--seeds expects at least one seed".into());
        }
        for c in &mut configs {
            c.seeds = seeds.clone();
        }
    }
    let out_dir = out
        .or_else(|| std::env::var_os("CTSIM_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    for cfg in &configs {
        let result = run_scenario_recording(cfg, events).map_err(|e| e.to_string())?;
        let dir = out_dir.join(&cfg.name);
        for run in &result.runs {
            let curve = dir.join(format!("curve_seed{}.csv", run.seed));
            write_curves(&curve, &run.reports).map_err(|e| e.to_string())?;
            if events {
                let dump = dir.join(format!("events_seed{}.csv", run.seed));
                write_events(&dump, &run.events).map_err(|e| e.to_string())?;
            }
        }
        write_mean_curve(&dir.join("mean_curve.csv"), &average_curves(&result.runs))
            .map_err(|e| e.to_string())?;
        let doc = SummaryDoc::from_result(&result);
        write_summary(&dir.join("summary.json"), &doc).map_err(|e| e.to_string())?;
        let peak = doc
            .aggregate
            .map(|a| a.peak_infectious.mean)
            .unwrap_or(0.0);
        println!(
            "{}: {} runs, mean peak {:.1}, wrote {}",
            cfg.name,
            result.runs.len(),
            peak,
            dir.display()
        );
    }
    Ok(())
}

fn cmd_ode(
    beta: f64,
    gamma: f64,
    n: f64,
    i0: f64,
    horizon: f64,
    step: f64,
    out: Option<PathBuf>,
) -> Result<(), String> {
    let params = SirParams::rates(beta, gamma, n);
    let initial = SirState::new(n - i0, i0, 0.0);
    let curve = integrate(&initial, &params, horizon, step).map_err(|e| e.to_string())?;
    match out {
        Some(path) => write_sir_curve(&path, &curve).map_err(|e| e.to_string()),
        None => {
            let mut text = String::new();
            text.push_str(SIR_HEADER);
            text.push('\n');
            for st in &curve {
                let _ = writeln!(text, "{},{},{},{}", st.t, st.s, st.i, st.r);
            }
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_validate(path: &Path) -> Result<(), String> {
    let configs = load_configs(Some(path))?;
    println!("ok: {} scenarios", configs.len());
    for c in &configs {
        println!(
            "  {} ({}, {} seeds{})",
            c.name,
            c.mode.as_str(),
            c.seeds.len(),
            if c.protocol.is_some() { ", protocol" } else { "" }
        );
    }
    Ok(())
}
