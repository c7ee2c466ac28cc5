//! Reports read off a solved plan: costs, storage schedules, voltages,
//! branch loading, relaxation exactness and load-stress sweeps.
//!
//! Reports copy values from the solution vector; nothing is re-solved
//! except in [`stress_sweep`].

mod write;

use serde::{Deserialize, Serialize};

use crate::bnb::{solve_miqcp, MipOptions, MipSolution, MipStatus};
use crate::model::{build, BuildError, BuildOptions, CostBreakdown, Mode, PlanningModel};
use crate::network::NetworkCase;
use crate::scenario::{stress_load, ScenarioError, ScenarioSet};

pub use write::{scenario_label, write_costs, write_solution_reports, write_stress, Summary};

/// Branches at or above this fraction of their rating count as congested.
pub const CONGESTION_THRESHOLD: f64 = 0.99;

/// Default bound on `l·w − p² − q²` for calling a branch cone tight.
pub const EXACTNESS_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("the solution has no storage")]
    NoStorage,
    #[error("the solution has no incumbent")]
    NoSolution,
    #[error("stress step must be positive, got {0}")]
    Step(f64),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Build(#[from] BuildError),
}

/// Candidate indices with `y = 1`, ascending.
pub fn sited_candidates(model: &PlanningModel, x: &[f64]) -> Vec<usize> {
    (0..model.layout.ess).filter(|&c| x[model.layout.site(c)] > 0.5).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArbitrageHour {
    /// 1-based hour.
    pub hour: usize,
    pub charge: f64,
    pub discharge: f64,
    /// Stored energy at the start of the hour.
    pub soe_start: f64,
    /// Stored energy at the end of the hour.
    pub soe_end: f64,
}

/// Hourly charge, discharge and stored energy of candidate `c` in scenario
/// `s`; `c` defaults to the first sited candidate.
pub fn arbitrage_profile(
    model: &PlanningModel,
    x: &[f64],
    s: usize,
    c: Option<usize>,
) -> Result<Vec<ArbitrageHour>, AnalysisError> {
    if x.is_empty() {
        return Err(AnalysisError::NoSolution);
    }
    let c = match c {
        Some(c) if c < model.layout.ess => c,
        Some(_) => return Err(AnalysisError::NoStorage),
        None => *sited_candidates(model, x).first().ok_or(AnalysisError::NoStorage)?,
    };
    let lay = &model.layout;
    Ok((0..lay.hours)
        .map(|t| ArbitrageHour {
            hour: t + 1,
            charge: x[lay.pch(s, t, c)],
            discharge: x[lay.pdis(s, t, c)],
            soe_start: x[lay.soe(s, t, c)],
            soe_end: x[lay.soe(s, t + 1, c)],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageReport {
    /// `(bus id, |V|)` for every bus.
    pub buses: Vec<(usize, f64)>,
    pub min_bus: usize,
    pub min_voltage: f64,
    pub max_bus: usize,
    pub max_voltage: f64,
}

/// Voltage magnitudes `√w` in scenario `s`, hour index `t`.
pub fn voltage_report(model: &PlanningModel, x: &[f64], s: usize, t: usize) -> VoltageReport {
    let lay = &model.layout;
    let buses: Vec<(usize, f64)> = (0..lay.buses).map(|b| (b + 1, x[lay.w(s, t, b)].max(0.0).sqrt())).collect();
    let mut min = buses[0];
    let mut max = buses[0];
    for &(id, v) in &buses {
        if v < min.1 {
            min = (id, v);
        }
        if v > max.1 {
            max = (id, v);
        }
    }
    VoltageReport {
        buses,
        min_bus: min.0,
        min_voltage: min.1,
        max_bus: max.0,
        max_voltage: max.1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchLoading {
    /// 1-based branch number in case order.
    pub branch: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    pub apparent: f64,
    pub s_max: f64,
    pub loading: f64,
    pub congested: bool,
}

/// Branch loading `√(p² + q²)/s_max` in `(s, t)`, sorted by descending
/// loading then branch number.
pub fn congestion_report(model: &PlanningModel, x: &[f64], s: usize, t: usize) -> Vec<BranchLoading> {
    let lay = &model.layout;
    let mut rows: Vec<BranchLoading> = model
        .case
        .branches
        .iter()
        .enumerate()
        .map(|(k, br)| {
            let p = x[lay.p(s, t, k)];
            let q = x[lay.q(s, t, k)];
            let apparent = p.hypot(q);
            let loading = apparent / br.s_max;
            BranchLoading {
                branch: k + 1,
                from_bus: br.from_bus,
                to_bus: br.to_bus,
                apparent,
                s_max: br.s_max,
                loading,
                congested: loading >= CONGESTION_THRESHOLD,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.loading.total_cmp(&a.loading).then(a.branch.cmp(&b.branch)));
    rows
}

/// Branch numbers congested in any `(s, t)`, ascending.
pub fn congested_branches(model: &PlanningModel, x: &[f64]) -> Vec<usize> {
    let lay = &model.layout;
    let mut out = Vec::new();
    for (k, br) in model.case.branches.iter().enumerate() {
        let hit = (0..lay.scenarios).any(|s| {
            (0..lay.hours).any(|t| x[lay.p(s, t, k)].hypot(x[lay.q(s, t, k)]) / br.s_max >= CONGESTION_THRESHOLD)
        });
        if hit {
            out.push(k + 1);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactnessSummary {
    /// Largest `l·w − p² − q²` over all branches and periods.
    pub max_residual: f64,
    /// Smallest residual (negative values are cone violations).
    pub min_residual: f64,
    /// Branch-periods above the tolerance.
    pub loose: usize,
    pub tol: f64,
}

impl ExactnessSummary {
    pub fn is_tight(&self) -> bool {
        self.loose == 0
    }
}

/// `l_ij·w_i − p_ij² − q_ij²` for every branch and period.
pub fn exactness(model: &PlanningModel, x: &[f64], tol: f64) -> ExactnessSummary {
    let lay = &model.layout;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let mut loose = 0;
    for s in 0..lay.scenarios {
        for t in 0..lay.hours {
            for k in 0..lay.branches {
                let (i, _) = model.orientation.ends[k];
                let (p, q) = (x[lay.p(s, t, k)], x[lay.q(s, t, k)]);
                let r = x[lay.l(s, t, k)] * x[lay.w(s, t, i)] - p * p - q * q;
                max = max.max(r);
                min = min.min(r);
                if r > tol {
                    loose += 1;
                }
            }
        }
    }
    if lay.branches == 0 {
        max = 0.0;
        min = 0.0;
    }
    ExactnessSummary {
        max_residual: max,
        min_residual: min,
        loose,
        tol,
    }
}

/// One row of a configuration comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub label: String,
    pub status: MipStatus,
    /// Number of sited storage units.
    pub count: usize,
    /// Sited bus ids.
    pub location: Vec<usize>,
    pub capacity_kwh: f64,
    pub cost: Option<CostBreakdown>,
    pub gap: Option<f64>,
    #[serde(skip)]
    pub seconds: f64,
}

/// Table of configurations; storage rows carry the sited buses and
/// capacity in kWh.
pub fn cost_comparison(cases: &[(String, &PlanningModel, &MipSolution)]) -> Vec<CostRow> {
    cases
        .iter()
        .map(|(label, model, sol)| {
            let feasible = sol.has_incumbent();
            let sites = if feasible { sited_candidates(model, &sol.x) } else { Vec::new() };
            let capacity: f64 = sites.iter().fold(0.0, |a, &c| a + sol.x[model.layout.capacity(c)]);
            CostRow {
                label: label.clone(),
                status: sol.status,
                count: sites.len(),
                location: sites.iter().map(|&c| model.case.ess_candidates[c].bus).collect(),
                capacity_kwh: capacity * model.case.s_base * 1000.0,
                cost: feasible.then(|| model.cost_breakdown(&sol.x)),
                gap: feasible.then_some(sol.gap),
                seconds: sol.seconds,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressConfig {
    pub mode: Mode,
    /// 1-based inclusive hour window.
    pub window: (usize, usize),
    pub step: f64,
    pub max_factor: f64,
}

impl Default for StressConfig {
    fn default() -> Self {
        StressConfig {
            mode: Mode::Rpc,
            window: (17, 24),
            step: 0.01,
            max_factor: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressRow {
    pub factor: f64,
    pub status: MipStatus,
    /// $/h, absent when infeasible.
    pub cost: Option<f64>,
    pub congested: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressTable {
    pub mode: Mode,
    pub window: (usize, usize),
    pub rows: Vec<StressRow>,
    /// Sited bus and capacity (per unit) held fixed during the sweep.
    pub plan: Option<(usize, f64)>,
}

impl StressTable {
    /// First factor without a feasible solution.
    pub fn first_infeasible(&self) -> Option<f64> {
        self.rows.iter().find(|r| r.cost.is_none()).map(|r| r.factor)
    }

    /// Largest factor with a feasible solution.
    pub fn last_feasible(&self) -> Option<f64> {
        self.rows.iter().take_while(|r| r.cost.is_some()).last().map(|r| r.factor)
    }
}

/// Factors `1, 1 + step, …` up to `max_factor` (inclusive within 1e−9).
pub fn stress_factors(step: f64, max_factor: f64) -> Vec<f64> {
    let mut out = vec![1.0];
    let mut k = 1;
    loop {
        let f = 1.0 + k as f64 * step;
        if f > max_factor + 1e-9 {
            break;
        }
        out.push((f * 1e9).round() / 1e9);
        k += 1;
    }
    out
}

/// Fixes siting and capacity of a storage model to the values in `x`.
pub fn fix_plan(model: &PlanningModel, x: &[f64]) -> PlanningModel {
    let mut m = model.clone();
    for c in 0..m.layout.ess {
        let (y, e) = (m.layout.site(c), m.layout.capacity(c));
        let yv = x[y].round();
        m.problem.lower[y] = yv;
        m.problem.upper[y] = yv;
        let ev = if yv == 0.0 { 0.0 } else { x[e].max(0.0) };
        m.problem.lower[e] = ev;
        m.problem.upper[e] = ev;
    }
    m
}

/// Scales load inside `config.window` by increasing factors and solves
/// each level, stopping after the first level without a feasible solution.
///
/// In storage mode the site and capacity come from the unstressed solve and
/// stay fixed; only operation is re-optimized at each level.
pub fn stress_sweep(
    case: &NetworkCase,
    scenarios: &ScenarioSet,
    config: &StressConfig,
    build_opts: &BuildOptions,
    mip: &MipOptions,
) -> Result<StressTable, AnalysisError> {
    if !(config.step > 0.0) {
        return Err(AnalysisError::Step(config.step));
    }
    let opts = BuildOptions {
        mode: config.mode,
        ..*build_opts
    };
    let mut table = StressTable {
        mode: config.mode,
        window: config.window,
        rows: Vec::new(),
        plan: None,
    };
    let mut plan_x: Option<Vec<f64>> = None;
    for f in stress_factors(config.step, config.max_factor) {
        let stressed = stress_load(scenarios, f, config.window)?;
        let mut model = build(case, &stressed, &opts)?;
        if let Some(x) = &plan_x {
            model = fix_plan(&model, x);
        }
        let sol = solve_miqcp(&model, mip);
        log::info!("stress mode={} factor={:.4} status={:?}", config.mode, f, sol.status);
        let row = StressRow {
            factor: f,
            status: sol.status,
            cost: sol.has_incumbent().then(|| sol.objective / model.layout.hours as f64),
            congested: if sol.has_incumbent() { congested_branches(&model, &sol.x) } else { Vec::new() },
        };
        let stop = row.cost.is_none();
        table.rows.push(row);
        if stop {
            break;
        }
        if plan_x.is_none() && model.layout.ess > 0 {
            let sites = sited_candidates(&model, &sol.x);
            table.plan = sites
                .first()
                .map(|&c| (model.case.ess_candidates[c].bus, sol.x[model.layout.capacity(c)]));
            plan_x = Some(sol.x);
        }
    }
    Ok(table)
}

/// Ratio of the largest feasible stress factor with storage to that with
/// compensators, minus one.
pub fn headroom_delta(with_storage: &StressTable, baseline: &StressTable) -> Option<f64> {
    Some(with_storage.last_feasible()? / baseline.last_feasible()? - 1.0)
}
