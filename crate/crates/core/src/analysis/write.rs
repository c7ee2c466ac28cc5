//! Report files. Every writer is deterministic: identical inputs give
//! byte-identical files.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use super::{
    arbitrage_profile, congested_branches, congestion_report, cost_comparison, exactness, sited_candidates,
    voltage_report, CostRow, ExactnessSummary, StressTable, EXACTNESS_TOL,
};
use crate::bnb::{MipSolution, MipStatus};
use crate::model::{CostBreakdown, Mode, PlanningModel};

/// File-name-safe form of a scenario id.
pub fn scenario_label(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakestBus {
    pub bus: usize,
    pub voltage: f64,
    pub scenario: String,
    /// 1-based hour.
    pub hour: usize,
}

/// Machine-readable result of one solve, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: Mode,
    pub status: MipStatus,
    pub scenarios: usize,
    pub hours: usize,
    pub binaries: usize,
    /// Expected cost in $/h; absent when infeasible.
    pub objective: Option<f64>,
    pub cost: Option<CostBreakdown>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub nodes: usize,
    pub sited_buses: Vec<usize>,
    pub capacity_kwh: f64,
    pub capacity_pu: f64,
    pub lifetime_years: f64,
    pub amortization: String,
    pub weakest_bus: Option<WeakestBus>,
    pub congested_branches: Vec<usize>,
    pub exactness: Option<ExactnessSummary>,
    pub incumbent_residual: Option<f64>,
}

impl Summary {
    pub fn new(model: &PlanningModel, sol: &MipSolution) -> Self {
        let lay = &model.layout;
        let h = lay.hours as f64;
        let feasible = sol.has_incumbent();
        let x = &sol.x;
        let sites = if feasible { sited_candidates(model, x) } else { Vec::new() };
        let capacity_pu: f64 = sites.iter().fold(0.0, |a, &c| a + x[lay.capacity(c)]);
        let weakest_bus = feasible.then(|| {
            let mut best: Option<WeakestBus> = None;
            for s in 0..lay.scenarios {
                for t in 0..lay.hours {
                    let v = voltage_report(model, x, s, t);
                    if best.as_ref().map_or(true, |b| v.min_voltage < b.voltage) {
                        best = Some(WeakestBus {
                            bus: v.min_bus,
                            voltage: v.min_voltage,
                            scenario: model.scenarios.scenarios[s].id.clone(),
                            hour: t + 1,
                        });
                    }
                }
            }
            best.expect("at least one period")
        });
        Summary {
            mode: model.options.mode,
            status: sol.status,
            scenarios: lay.scenarios,
            hours: lay.hours,
            binaries: model.num_binaries(),
            objective: feasible.then(|| sol.objective / h),
            cost: feasible.then(|| model.cost_breakdown(x)),
            bound: feasible.then(|| sol.bound / h),
            gap: feasible.then_some(sol.gap),
            nodes: sol.nodes,
            sited_buses: sites.iter().map(|&c| model.case.ess_candidates[c].bus).collect(),
            capacity_kwh: capacity_pu * model.case.s_base * 1000.0,
            capacity_pu,
            lifetime_years: model.options.lifetime_years,
            amortization: format!(
                "capacity cost per hour = f / (365 * {} * 24) per kWh",
                model.options.lifetime_years
            ),
            weakest_bus,
            congested_branches: if feasible { congested_branches(model, x) } else { Vec::new() },
            exactness: feasible.then(|| exactness(model, x, EXACTNESS_TOL)),
            incumbent_residual: feasible.then_some(sol.incumbent_residual),
        }
    }
}

#[derive(Serialize)]
struct CostCsv<'a> {
    label: &'a str,
    status: &'a str,
    count: usize,
    location: String,
    capacity_kwh: f64,
    total_cost: String,
    generation_cost: String,
    investment_cost: String,
    operation_cost: String,
    gap_percent: String,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn status_name(s: MipStatus) -> &'static str {
    match s {
        MipStatus::Optimal => "optimal",
        MipStatus::Infeasible => "infeasible",
        MipStatus::TimeLimit => "time_limit",
        MipStatus::NumericalFailure => "numerical_failure",
    }
}

/// `costs.csv`: one row per configuration, costs in $/h.
pub fn write_costs(path: &Path, rows: &[CostRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(CostCsv {
            label: &r.label,
            status: status_name(r.status),
            count: r.count,
            location: r.location.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" "),
            capacity_kwh: r.capacity_kwh,
            total_cost: opt(r.cost.map(|c| c.total)),
            generation_cost: opt(r.cost.map(|c| c.generation)),
            investment_cost: opt(r.cost.map(|c| c.investment)),
            operation_cost: opt(r.cost.map(|c| c.operation)),
            gap_percent: opt(r.gap.map(|g| 100.0 * g)),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct VoltageCsv {
    bus: usize,
    voltage: f64,
    v_min: f64,
    v_max: f64,
}

#[derive(Serialize)]
struct LoadingCsv {
    branch: usize,
    from_bus: usize,
    to_bus: usize,
    apparent: f64,
    s_max: f64,
    loading: f64,
    congested: u8,
}

/// Writes `summary.json`, `costs.csv` and, for feasible solutions, the
/// per-scenario arbitrage files and per-period voltage and loading files
/// into `dir`.
pub fn write_solution_reports(dir: &Path, label: &str, model: &PlanningModel, sol: &MipSolution) -> Result<Summary> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let summary = Summary::new(model, sol);
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(dir.join("summary.json"), json + "\n")?;
    write_costs(&dir.join("costs.csv"), &cost_comparison(&[(label.to_string(), model, sol)]))?;
    if !sol.has_incumbent() {
        return Ok(summary);
    }
    let x = &sol.x;
    let lay = &model.layout;
    for s in 0..lay.scenarios {
        let name = scenario_label(&model.scenarios.scenarios[s].id);
        if let Ok(series) = arbitrage_profile(model, x, s, None) {
            let mut w = csv::Writer::from_path(dir.join(format!("arbitrage_{name}.csv")))?;
            for h in series {
                w.serialize(h)?;
            }
            w.flush()?;
        }
        for t in 0..lay.hours {
            let v = voltage_report(model, x, s, t);
            let mut w = csv::Writer::from_path(dir.join(format!("voltage_{name}_{:02}.csv", t + 1)))?;
            for &(bus, voltage) in &v.buses {
                let b = &model.case.buses[bus - 1];
                w.serialize(VoltageCsv {
                    bus,
                    voltage,
                    v_min: b.v_min_sq.sqrt(),
                    v_max: b.v_max_sq.sqrt(),
                })?;
            }
            w.flush()?;
            let mut w = csv::Writer::from_path(dir.join(format!("loading_{name}_{:02}.csv", t + 1)))?;
            for r in congestion_report(model, x, s, t) {
                w.serialize(LoadingCsv {
                    branch: r.branch,
                    from_bus: r.from_bus,
                    to_bus: r.to_bus,
                    apparent: r.apparent,
                    s_max: r.s_max,
                    loading: r.loading,
                    congested: r.congested as u8,
                })?;
            }
            w.flush()?;
        }
    }
    Ok(summary)
}

#[derive(Serialize)]
struct StressCsv {
    mode: String,
    factor: f64,
    status: &'static str,
    cost: String,
    congested: String,
}

/// `stress_frontier.csv`: one row per mode and factor.
pub fn write_stress(path: &Path, tables: &[StressTable]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for t in tables {
        for r in &t.rows {
            w.serialize(StressCsv {
                mode: t.mode.to_string(),
                factor: r.factor,
                status: status_name(r.status),
                cost: opt(r.cost),
                congested: r.congested.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" "),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
