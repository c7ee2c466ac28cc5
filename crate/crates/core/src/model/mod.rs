//! Assembly of the planning program: DistFlow with the branch cone relaxed,
//! nodal balances, storage operation and siting, and the expected cost.
//!
//! Columns are laid out period by period, `(ω, t)` in lexicographic order,
//! followed by the state-of-energy trajectories and the per-candidate
//! capacity and siting columns. Rows follow the same `(ω, t)` order; within
//! a period the equalities come first, then inequalities, then cones.

mod rows;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::conic::{ConicBuilder, ConicProblem};
use crate::network::{validate_radial, CaseError, NetworkCase, Topology};
use crate::scenario::ScenarioSet;

pub use rows::{build_distflow_rows, build_ess_rows, build_nodal_rows, build_objective};

/// Which voltage-support devices the model includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Generators and PV only.
    None,
    /// Reactive power compensators, no storage.
    Rpc,
    /// Storage candidates, no compensators.
    Ess,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::None => "none",
            Mode::Rpc => "rpc",
            Mode::Ess => "ess",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub mode: Mode,
    /// Upper limit on the number of sited storage units.
    pub max_sites: usize,
    /// Investment lifetime used to spread capacity cost over hours.
    pub lifetime_years: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            mode: Mode::Ess,
            max_sites: 1,
            lifetime_years: 10.0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("storage mode requested but the case has no storage candidates")]
    NoCandidates,
    #[error("PV unit at bus {bus} refers to unknown profile {key:?}")]
    UnknownProfile { bus: usize, key: String },
    #[error("lifetime must be positive, got {0}")]
    Lifetime(f64),
    #[error(transparent)]
    Case(#[from] CaseError),
}

/// Converts an investment cost in $/kWh into the per-unit, per-hour
/// coefficient applied to capacity: `f·1000·s_base / (365·lifetime·24)`.
pub fn amortized_capacity_cost(f_cost: f64, s_base: f64, lifetime_years: f64) -> f64 {
    f_cost * 1000.0 * s_base / (365.0 * lifetime_years * 24.0)
}

/// Column offsets of the variable space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub scenarios: usize,
    pub hours: usize,
    pub gens: usize,
    pub branches: usize,
    pub buses: usize,
    pub rpcs: usize,
    pub ess: usize,
    stride: usize,
    off_pg: usize,
    off_qg: usize,
    off_p: usize,
    off_q: usize,
    off_l: usize,
    off_w: usize,
    off_pn: usize,
    off_qn: usize,
    off_rpc: usize,
    off_pch: usize,
    off_pdis: usize,
    off_qinv: usize,
    off_xch: usize,
    off_xdis: usize,
    soe_start: usize,
    cap_start: usize,
    site_start: usize,
    total: usize,
}

impl Layout {
    pub fn new(scenarios: usize, hours: usize, gens: usize, buses: usize, rpcs: usize, ess: usize) -> Self {
        let branches = buses.saturating_sub(1);
        let mut o = 0;
        let mut take = |n: usize| {
            let s = o;
            o += n;
            s
        };
        let off_pg = take(gens);
        let off_qg = take(gens);
        let off_p = take(branches);
        let off_q = take(branches);
        let off_l = take(branches);
        let off_w = take(buses);
        let off_pn = take(branches);
        let off_qn = take(branches);
        let off_rpc = take(rpcs);
        let off_pch = take(ess);
        let off_pdis = take(ess);
        let off_qinv = take(ess);
        let off_xch = take(ess);
        let off_xdis = take(ess);
        let stride = o;
        let soe_start = stride * scenarios * hours;
        let cap_start = soe_start + if ess > 0 { scenarios * (hours + 1) * ess } else { 0 };
        let site_start = cap_start + ess;
        let total = site_start + ess;
        Layout {
            scenarios,
            hours,
            gens,
            branches,
            buses,
            rpcs,
            ess,
            stride,
            off_pg,
            off_qg,
            off_p,
            off_q,
            off_l,
            off_w,
            off_pn,
            off_qn,
            off_rpc,
            off_pch,
            off_pdis,
            off_qinv,
            off_xch,
            off_xdis,
            soe_start,
            cap_start,
            site_start,
            total,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.total
    }

    fn base(&self, s: usize, t: usize) -> usize {
        (s * self.hours + t) * self.stride
    }

    pub fn pg(&self, s: usize, t: usize, g: usize) -> usize {
        self.base(s, t) + self.off_pg + g
    }
    pub fn qg(&self, s: usize, t: usize, g: usize) -> usize {
        self.base(s, t) + self.off_qg + g
    }
    /// Active flow on branch `k` (parent to child).
    pub fn p(&self, s: usize, t: usize, k: usize) -> usize {
        self.base(s, t) + self.off_p + k
    }
    pub fn q(&self, s: usize, t: usize, k: usize) -> usize {
        self.base(s, t) + self.off_q + k
    }
    /// Squared current on branch `k`.
    pub fn l(&self, s: usize, t: usize, k: usize) -> usize {
        self.base(s, t) + self.off_l + k
    }
    /// Squared voltage at 0-based bus index `b`.
    pub fn w(&self, s: usize, t: usize, b: usize) -> usize {
        self.base(s, t) + self.off_w + b
    }
    /// Net active withdrawal at non-root bus index `b ≥ 1`.
    pub fn pn(&self, s: usize, t: usize, b: usize) -> usize {
        self.base(s, t) + self.off_pn + b - 1
    }
    pub fn qn(&self, s: usize, t: usize, b: usize) -> usize {
        self.base(s, t) + self.off_qn + b - 1
    }
    pub fn rpc(&self, s: usize, t: usize, r: usize) -> usize {
        self.base(s, t) + self.off_rpc + r
    }
    pub fn pch(&self, s: usize, t: usize, c: usize) -> usize {
        self.base(s, t) + self.off_pch + c
    }
    pub fn pdis(&self, s: usize, t: usize, c: usize) -> usize {
        self.base(s, t) + self.off_pdis + c
    }
    pub fn qinv(&self, s: usize, t: usize, c: usize) -> usize {
        self.base(s, t) + self.off_qinv + c
    }
    pub fn xch(&self, s: usize, t: usize, c: usize) -> usize {
        self.base(s, t) + self.off_xch + c
    }
    pub fn xdis(&self, s: usize, t: usize, c: usize) -> usize {
        self.base(s, t) + self.off_xdis + c
    }
    /// Stored energy of candidate `c` at the start of hour `t`, `t = 0..=T`.
    pub fn soe(&self, s: usize, t: usize, c: usize) -> usize {
        self.soe_start + (s * (self.hours + 1) + t) * self.ess + c
    }
    pub fn capacity(&self, c: usize) -> usize {
        self.cap_start + c
    }
    pub fn site(&self, c: usize) -> usize {
        self.site_start + c
    }

    /// Human-readable name of a column.
    pub fn describe(&self, col: usize) -> String {
        if col >= self.site_start {
            return format!("y[c{}]", col - self.site_start);
        }
        if col >= self.cap_start {
            return format!("E[c{}]", col - self.cap_start);
        }
        if col >= self.soe_start {
            let r = col - self.soe_start;
            let c = r % self.ess;
            let st = r / self.ess;
            return format!("e[c{},s{},t{}]", c, st / (self.hours + 1), st % (self.hours + 1));
        }
        let period = col / self.stride;
        let (s, t) = (period / self.hours, period % self.hours);
        let o = col % self.stride;
        let groups = [
            ("p_g", self.off_pg, "g"),
            ("q_g", self.off_qg, "g"),
            ("p", self.off_p, "k"),
            ("q", self.off_q, "k"),
            ("l", self.off_l, "k"),
            ("w", self.off_w, "b"),
            ("p_net", self.off_pn, "b"),
            ("q_net", self.off_qn, "b"),
            ("q_rpc", self.off_rpc, "r"),
            ("p_ch", self.off_pch, "c"),
            ("p_dis", self.off_pdis, "c"),
            ("q_inv", self.off_qinv, "c"),
            ("x_ch", self.off_xch, "c"),
            ("x_dis", self.off_xdis, "c"),
        ];
        let mut name = ("?", 0, "?");
        for g in groups {
            if o >= g.1 {
                name = g;
            }
        }
        let mut idx = o - name.1;
        if name.0 == "p_net" || name.0 == "q_net" {
            idx += 1;
        }
        format!("{}[{}{},s{},t{}]", name.0, name.2, idx, s, t)
    }
}

/// Parent-to-child orientation of every branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Orientation {
    /// `(parent index, child index)` per branch, 0-based bus indices.
    pub ends: Vec<(usize, usize)>,
    /// Branches leaving each bus toward its children.
    pub out: Vec<Vec<usize>>,
    /// Branch whose child is the given bus.
    pub incoming: Vec<Option<usize>>,
}

impl Orientation {
    pub fn new(case: &NetworkCase, topo: &Topology) -> Self {
        let n = case.buses.len();
        let mut ends = vec![(0, 0); case.branches.len()];
        let mut out = vec![Vec::new(); n];
        let mut incoming = vec![None; n];
        for b in 0..n {
            if let (Some(p), Some(k)) = (topo.parent[b], topo.parent_branch[b]) {
                ends[k] = (p - 1, b);
                incoming[b] = Some(k);
            }
        }
        for (k, &(p, _)) in ends.iter().enumerate() {
            out[p].push(k);
        }
        Orientation { ends, out, incoming }
    }
}

/// The assembled program together with everything needed to read a
/// solution back.
#[derive(Debug, Clone)]
pub struct PlanningModel {
    pub case: NetworkCase,
    pub scenarios: ScenarioSet,
    pub options: BuildOptions,
    pub layout: Layout,
    pub orientation: Orientation,
    pub problem: ConicProblem,
    /// Binary columns: all `x_ch`, `x_dis` in period order, then `y`.
    pub binaries: Vec<usize>,
    /// Capacity cost per unit of `E`, already multiplied by the number of
    /// hours in the horizon, per candidate.
    pub capacity_cost: Vec<f64>,
    /// Throughput cost per unit of `p_ch + p_dis`, per candidate.
    pub throughput_cost: Vec<f64>,
}

/// Builds the planning program.
pub fn build(case: &NetworkCase, scenarios: &ScenarioSet, options: &BuildOptions) -> Result<PlanningModel, BuildError> {
    let topo = validate_radial(case)?;
    if !(options.lifetime_years > 0.0 && options.lifetime_years.is_finite()) {
        return Err(BuildError::Lifetime(options.lifetime_years));
    }
    if options.mode == Mode::Ess && case.ess_candidates.is_empty() {
        return Err(BuildError::NoCandidates);
    }
    for pv in &case.pv_units {
        if pv.profile_key != "pv_output" {
            return Err(BuildError::UnknownProfile {
                bus: pv.bus,
                key: pv.profile_key.clone(),
            });
        }
    }
    let orientation = Orientation::new(case, &topo);
    let rpcs = if options.mode == Mode::Rpc { case.rpcs.len() } else { 0 };
    let ess = if options.mode == Mode::Ess { case.ess_candidates.len() } else { 0 };
    let layout = Layout::new(
        scenarios.scenarios.len(),
        scenarios.hours_per_day,
        case.generators.len(),
        case.buses.len(),
        rpcs,
        ess,
    );
    let hours = scenarios.hours_per_day as f64;
    let capacity_cost: Vec<f64> = case.ess_candidates[..ess]
        .iter()
        .map(|c| hours * amortized_capacity_cost(c.params.f_cost, case.s_base, options.lifetime_years))
        .collect();
    let throughput_cost: Vec<f64> = case.ess_candidates[..ess]
        .iter()
        .map(|c| c.params.h_cost * 1000.0 * case.s_base)
        .collect();

    let mut model = PlanningModel {
        case: case.clone(),
        scenarios: scenarios.clone(),
        options: *options,
        layout,
        orientation,
        problem: ConicBuilder::new().build(),
        binaries: Vec::new(),
        capacity_cost,
        throughput_cost,
    };
    let mut b = ConicBuilder::new();
    declare_variables(&model, &mut b);
    for s in 0..model.layout.scenarios {
        for t in 0..model.layout.hours {
            rows::period_rows(&model, &mut b, s, t);
        }
        rows::scenario_rows(&model, &mut b, s);
    }
    rows::global_rows(&model, &mut b);
    build_objective(&model, &mut b);
    model.problem = b.build();
    model.binaries = binary_columns(&model.layout);
    Ok(model)
}

fn declare_variables(model: &PlanningModel, b: &mut ConicBuilder) {
    let lay = &model.layout;
    let case = &model.case;
    let inf = f64::INFINITY;
    for _ in 0..lay.num_vars() {
        b.add_var(-inf, inf);
    }
    for s in 0..lay.scenarios {
        for t in 0..lay.hours {
            for (g, gen) in case.generators.iter().enumerate() {
                b.set_bounds(lay.pg(s, t, g), gen.p_min, gen.p_max);
                b.set_bounds(lay.qg(s, t, g), gen.q_min, gen.q_max);
            }
            for k in 0..lay.branches {
                b.set_bounds(lay.l(s, t, k), 0.0, inf);
            }
            for (i, bus) in case.buses.iter().enumerate() {
                if bus.is_slack {
                    b.set_bounds(lay.w(s, t, i), 1.0, 1.0);
                } else {
                    b.set_bounds(lay.w(s, t, i), bus.v_min_sq, bus.v_max_sq);
                }
            }
            for (r, rpc) in case.rpcs[..lay.rpcs].iter().enumerate() {
                b.set_bounds(lay.rpc(s, t, r), rpc.q_min, rpc.q_max);
            }
            for (c, cand) in case.ess_candidates[..lay.ess].iter().enumerate() {
                let p = &cand.params;
                b.set_bounds(lay.pch(s, t, c), 0.0, p.p_ch_max);
                b.set_bounds(lay.pdis(s, t, c), 0.0, p.p_dis_max);
                b.set_bounds(lay.qinv(s, t, c), -p.q_inv_min, p.q_inv_max);
                b.set_bounds(lay.xch(s, t, c), 0.0, 1.0);
                b.set_bounds(lay.xdis(s, t, c), 0.0, 1.0);
            }
        }
        for t in 0..=lay.hours {
            for (c, cand) in case.ess_candidates[..lay.ess].iter().enumerate() {
                b.set_bounds(lay.soe(s, t, c), 0.0, cand.params.e_max);
            }
        }
    }
    for (c, cand) in case.ess_candidates[..lay.ess].iter().enumerate() {
        b.set_bounds(lay.capacity(c), 0.0, cand.params.e_max);
        b.set_bounds(lay.site(c), 0.0, 1.0);
    }
}

fn binary_columns(lay: &Layout) -> Vec<usize> {
    let mut out = Vec::with_capacity(2 * lay.ess * lay.hours * lay.scenarios + lay.ess);
    for s in 0..lay.scenarios {
        for t in 0..lay.hours {
            for c in 0..lay.ess {
                out.push(lay.xch(s, t, c));
                out.push(lay.xdis(s, t, c));
            }
        }
    }
    for c in 0..lay.ess {
        out.push(lay.site(c));
    }
    out
}

/// Expected cost split into its parts, per hour of the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub generation: f64,
    pub investment: f64,
    pub operation: f64,
    pub total: f64,
}

impl PlanningModel {
    pub fn num_binaries(&self) -> usize {
        self.binaries.len()
    }

    /// Active and reactive base-load withdrawal at bus index `b` in `(s, t)`.
    pub fn load(&self, s: usize, t: usize, b: usize) -> (f64, f64) {
        let m = self.scenarios.scenarios[s].load_scale[t];
        let bus = &self.case.buses[b];
        (bus.load_p_base * m, bus.load_q_base * m)
    }

    /// PV output injected at bus index `b` in `(s, t)`.
    pub fn pv(&self, s: usize, t: usize, b: usize) -> f64 {
        let n = self.case.pv_units.iter().filter(|u| u.bus == b + 1).count();
        n as f64 * self.scenarios.scenarios[s].pv_output[t]
    }

    /// Splits the objective at `x` into generation, investment and storage
    /// operation, each divided by the number of hours.
    pub fn cost_breakdown(&self, x: &[f64]) -> CostBreakdown {
        let lay = &self.layout;
        let mut gen = 0.0;
        let mut op = 0.0;
        for s in 0..lay.scenarios {
            let rho = self.scenarios.scenarios[s].weight;
            for t in 0..lay.hours {
                for (g, gd) in self.case.generators.iter().enumerate() {
                    let p = x[lay.pg(s, t, g)];
                    gen += rho * (gd.a + gd.b * p + gd.c * p * p);
                }
                for c in 0..lay.ess {
                    op += rho * self.throughput_cost[c] * (x[lay.pch(s, t, c)] + x[lay.pdis(s, t, c)]);
                }
            }
        }
        let inv: f64 = (0..lay.ess).fold(0.0, |a, c| a + self.capacity_cost[c] * x[lay.capacity(c)]);
        let h = lay.hours as f64;
        CostBreakdown {
            generation: gen / h,
            investment: inv / h,
            operation: op / h,
            total: (gen + inv + op) / h,
        }
    }

    /// Self-contained interchange form of the program.
    pub fn interchange(&self) -> Interchange {
        Interchange {
            format: "ess-planner-conic-v1".into(),
            columns: (0..self.layout.num_vars()).map(|j| self.layout.describe(j)).collect(),
            binaries: self.binaries.clone(),
            problem: self.problem.clone(),
        }
    }
}

/// Model dump for cross-checking against external solvers. Rows satisfy
/// `A x + row_const ∈ K` where `K` is the product of `problem.cones` in
/// order; the objective is `½ Σ quad_j x_j² + lin·x + constant`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Interchange {
    pub format: String,
    pub columns: Vec<String>,
    pub binaries: Vec<usize>,
    pub problem: ConicProblem,
}

#[cfg(test)]
mod tests;
