//! Command-line front end: `validate`, `solve`, `stress` and `report`.
//!
//! Infeasible plans are results and exit 0. Invalid inputs exit 2; I/O and
//! internal failures exit 1.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::analysis::{
    cost_comparison, headroom_delta, stress_sweep, write_costs, write_solution_reports, write_stress, StressConfig,
    StressTable,
};
use crate::bnb::{solve_miqcp, MipOptions, MipSolution};
use crate::model::{build, BuildOptions, Mode, PlanningModel};
use crate::network::{load_case, NetworkCase};
use crate::scenario::{load_scenarios, ScenarioSet};

#[derive(Debug, Parser)]
#[command(name = "ess-planner", version, about = "Storage sizing and siting on radial feeders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the case and scenario files.
    Validate(RunArgs),
    /// Solve one configuration and write its reports.
    Solve(RunArgs),
    /// Sweep evening load upward until the plan becomes infeasible.
    Stress(RunArgs),
    /// Solve the none, rpc and ess configurations and compare them.
    Report(RunArgs),
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunArgs {
    /// JSON file with any of the options below; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub case: Option<PathBuf>,
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    /// none, rpc or ess. `stress` runs rpc and ess when omitted.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub max_sites: Option<usize>,
    /// Relative optimality gap.
    #[arg(long)]
    pub gap: Option<f64>,
    /// Seconds per branch-and-bound run.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long)]
    pub lifetime_years: Option<f64>,
    /// Hour window as `first-last`, 1-based and inclusive.
    #[arg(long)]
    pub stress_window: Option<String>,
    /// Load factor increment.
    #[arg(long)]
    pub stress_step: Option<f64>,
    /// Largest load factor tried.
    #[arg(long)]
    pub stress_max: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: PathBuf,
    pub scenarios: PathBuf,
    pub mode: Option<Mode>,
    pub build: BuildOptions,
    pub mip: MipOptions,
    pub stress_window: (usize, usize),
    pub stress_step: f64,
    pub stress_max: f64,
    pub out: PathBuf,
}

/// Error for invalid user input (exit code 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn parse_window(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once('-')
        .ok_or_else(|| usage(format!("stress window {s:?} is not of the form first-last")))?;
    let a: usize = a.trim().parse().map_err(|_| usage(format!("bad window start {a:?}")))?;
    let b: usize = b.trim().parse().map_err(|_| usage(format!("bad window end {b:?}")))?;
    Ok((a, b))
}

impl RunArgs {
    /// Merges the optional config file under the flags and applies
    /// defaults.
    pub fn resolve(&self) -> Result<RunConfig> {
        let file: RunArgs = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", p.display())))?
            }
            None => RunArgs::default(),
        };
        macro_rules! pick {
            ($f:ident) => {
                self.$f.clone().or(file.$f.clone())
            };
        }
        let case = pick!(case).ok_or_else(|| usage("--case is required"))?;
        let scenarios = pick!(scenarios).ok_or_else(|| usage("--scenarios is required"))?;
        let defaults = BuildOptions::default();
        let build = BuildOptions {
            mode: pick!(mode).unwrap_or(defaults.mode),
            max_sites: pick!(max_sites).unwrap_or(defaults.max_sites),
            lifetime_years: pick!(lifetime_years).unwrap_or(defaults.lifetime_years),
        };
        let mut mip = MipOptions::default();
        mip.gap_tol = pick!(gap).unwrap_or(mip.gap_tol);
        mip.time_limit = pick!(time_limit);
        let stress_window = match pick!(stress_window) {
            Some(s) => parse_window(&s)?,
            None => (17, 24),
        };
        let cfg = RunConfig {
            case,
            scenarios,
            mode: pick!(mode),
            build,
            mip,
            stress_window,
            stress_step: pick!(stress_step).unwrap_or(0.01),
            stress_max: pick!(stress_max).unwrap_or(1.5),
            out: pick!(out).unwrap_or_else(|| PathBuf::from("out")),
        };
        if !(cfg.mip.gap_tol > 0.0) {
            return Err(usage("--gap must be positive"));
        }
        if !(cfg.build.lifetime_years > 0.0) {
            return Err(usage("--lifetime-years must be positive"));
        }
        if cfg.build.max_sites == 0 {
            return Err(usage("--max-sites must be at least 1"));
        }
        if let Some(t) = cfg.mip.time_limit {
            if !(t > 0.0) {
                return Err(usage("--time-limit must be positive"));
            }
        }
        if !(cfg.stress_step > 0.0) {
            return Err(usage("--stress-step must be positive"));
        }
        Ok(cfg)
    }
}

fn load_inputs(cfg: &RunConfig) -> Result<(NetworkCase, ScenarioSet)> {
    let case = load_case(&cfg.case).map_err(|e| usage(format!("{}: {e}", cfg.case.display())))?;
    let scen = load_scenarios(&cfg.scenarios).map_err(|e| usage(format!("{}: {e}", cfg.scenarios.display())))?;
    Ok((case, scen))
}

fn solve_mode(case: &NetworkCase, scen: &ScenarioSet, cfg: &RunConfig, mode: Mode) -> Result<(PlanningModel, MipSolution)> {
    let opts = BuildOptions { mode, ..cfg.build };
    let model = build(case, scen, &opts).map_err(|e| usage(e.to_string()))?;
    let sol = solve_miqcp(&model, &cfg.mip);
    Ok((model, sol))
}

/// Appends a line to `run.log` in `dir`; timings live only there.
fn log_run(dir: &Path, line: &str) -> Result<()> {
    use std::io::Write;
    let mut f = fs::OpenOptions::new().create(true).append(true).open(dir.join("run.log"))?;
    writeln!(f, "{line}")?;
    Ok(())
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<()> {
    let (case, scen) = load_inputs(cfg)?;
    println!(
        "ok: {} buses, {} branches, {} generators, {} storage candidates; {} scenarios of {} hours",
        case.buses.len(),
        case.branches.len(),
        case.generators.len(),
        case.ess_candidates.len(),
        scen.scenarios.len(),
        scen.hours_per_day
    );
    Ok(())
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<()> {
    let (case, scen) = load_inputs(cfg)?;
    let mode = cfg.mode.unwrap_or(cfg.build.mode);
    let start = Instant::now();
    let (model, sol) = solve_mode(&case, &scen, cfg, mode)?;
    let summary = write_solution_reports(&cfg.out, &mode.to_string(), &model, &sol)?;
    log_run(&cfg.out, &format!("solve mode={mode} status={:?} nodes={} seconds={:.3}", sol.status, sol.nodes, start.elapsed().as_secs_f64()))?;
    for line in &sol.progress {
        log_run(&cfg.out, line)?;
    }
    match summary.objective {
        Some(obj) => println!(
            "{mode}: {:?}, {:.4} $/h, gap {:.4}%, sited {:?}, {:.1} kWh",
            sol.status,
            obj,
            100.0 * sol.gap,
            summary.sited_buses,
            summary.capacity_kwh
        ),
        None => println!("{mode}: {:?}", sol.status),
    }
    Ok(())
}

pub fn cmd_stress(cfg: &RunConfig) -> Result<()> {
    let (case, scen) = load_inputs(cfg)?;
    let modes = match cfg.mode {
        Some(m) => vec![m],
        None => vec![Mode::Rpc, Mode::Ess],
    };
    fs::create_dir_all(&cfg.out)?;
    let mut tables: Vec<StressTable> = Vec::new();
    for mode in modes {
        let sc = StressConfig {
            mode,
            window: cfg.stress_window,
            step: cfg.stress_step,
            max_factor: cfg.stress_max,
        };
        let start = Instant::now();
        let table = stress_sweep(&case, &scen, &sc, &cfg.build, &cfg.mip).map_err(|e| usage(e.to_string()))?;
        log_run(&cfg.out, &format!("stress mode={mode} rows={} seconds={:.3}", table.rows.len(), start.elapsed().as_secs_f64()))?;
        match table.first_infeasible() {
            Some(f) => println!("{mode}: first infeasible load factor {f:.2}"),
            None => println!("{mode}: feasible up to factor {:.2}", cfg.stress_max),
        }
        tables.push(table);
    }
    if let (Some(e), Some(r)) = (
        tables.iter().find(|t| t.mode == Mode::Ess),
        tables.iter().find(|t| t.mode == Mode::Rpc),
    ) {
        if let Some(d) = headroom_delta(e, r) {
            println!("storage headroom over compensators: {:+.1}%", 100.0 * d);
        }
    }
    write_stress(&cfg.out.join("stress_frontier.csv"), &tables)
}

pub fn cmd_report(cfg: &RunConfig) -> Result<()> {
    let (case, scen) = load_inputs(cfg)?;
    let mut solved = Vec::new();
    for mode in [Mode::None, Mode::Rpc, Mode::Ess] {
        if mode == Mode::Ess && case.ess_candidates.is_empty() {
            continue;
        }
        let start = Instant::now();
        let (model, sol) = solve_mode(&case, &scen, cfg, mode)?;
        let dir = cfg.out.join(mode.to_string());
        write_solution_reports(&dir, &mode.to_string(), &model, &sol)?;
        log_run(&cfg.out_dir_created()?, &format!("report mode={mode} status={:?} seconds={:.3}", sol.status, start.elapsed().as_secs_f64()))?;
        solved.push((mode.to_string(), model, sol));
    }
    let refs: Vec<(String, &PlanningModel, &MipSolution)> = solved.iter().map(|(l, m, s)| (l.clone(), m, s)).collect();
    let rows = cost_comparison(&refs);
    write_costs(&cfg.out.join("costs.csv"), &rows)?;
    for r in &rows {
        match r.cost {
            Some(c) => println!("{:<5} {:?} {:.4} $/h sited {:?}", r.label, r.status, c.total, r.location),
            None => println!("{:<5} {:?}", r.label, r.status),
        }
    }
    Ok(())
}

impl RunConfig {
    fn out_dir_created(&self) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        Ok(self.out.clone())
    }
}

/// Runs the parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (args, f): (&RunArgs, fn(&RunConfig) -> Result<()>) = match &cli.command {
        Command::Validate(a) => (a, cmd_validate),
        Command::Solve(a) => (a, cmd_solve),
        Command::Stress(a) => (a, cmd_stress),
        Command::Report(a) => (a, cmd_report),
    };
    let result = args.resolve().and_then(|cfg| f(&cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}
