//! Branch-and-bound over the storage binaries with conic relaxations, and an
//! exhaustive enumeration oracle for small instances.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::conic::{primal_residual, solve_conic, ConicProblem, ContinuousSolution, SolveStatus, Tolerances};
use crate::model::PlanningModel;

/// Largest primal residual of a stalled relaxation that is still used for
/// branching; its bound is the Lagrangian value of its duals.
const INEXACT_RESIDUAL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MipOptions {
    /// Relative gap `(obj − bound)/max(1, |obj|)` at which to stop.
    pub gap_tol: f64,
    /// Wall-clock limit in seconds.
    pub time_limit: Option<f64>,
    /// A relaxation value this close to 0 or 1 counts as integral.
    pub int_tol: f64,
    pub conic: Tolerances,
}

impl Default for MipOptions {
    fn default() -> Self {
        MipOptions {
            gap_tol: 1e-4,
            time_limit: None,
            int_tol: 1e-6,
            conic: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MipStatus {
    /// Incumbent within the gap tolerance of the bound.
    Optimal,
    /// Every branch is infeasible.
    Infeasible,
    /// Stopped by the time limit; incumbent (if any) and gap are as found.
    TimeLimit,
    /// The root relaxation could not be solved, or relaxations that failed
    /// numerically keep the gap above tolerance.
    NumericalFailure,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MipSolution {
    pub status: MipStatus,
    /// Incumbent point; empty without an incumbent.
    pub x: Vec<f64>,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    /// Conic solves performed, including incumbent polishing.
    pub solves: usize,
    /// Largest constraint violation of the incumbent.
    pub incumbent_residual: f64,
    /// Progress lines `node=<n> bound=<b> incumbent=<o> gap=<g%>` and
    /// presolve notes.
    pub progress: Vec<String>,
    #[serde(skip)]
    pub seconds: f64,
}

impl MipSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.x.is_empty()
    }

    fn empty(status: MipStatus) -> Self {
        MipSolution {
            status,
            x: Vec::new(),
            objective: f64::INFINITY,
            bound: f64::INFINITY,
            gap: f64::INFINITY,
            nodes: 0,
            solves: 0,
            incumbent_residual: f64::NAN,
            progress: Vec::new(),
            seconds: 0.0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MipError {
    #[error("{count} free binaries exceed the enumeration limit {limit}")]
    TooManyBinaries { count: usize, limit: usize },
}

pub fn relative_gap(objective: f64, bound: f64) -> f64 {
    ((objective - bound) / objective.abs().max(1.0)).max(0.0)
}

/// Picks the binary to branch on: siting columns before operating columns,
/// then the value closest to one half, then the lowest column id. Returns
/// `None` when every binary is integral within `int_tol`.
pub fn branching_rule(binaries: &[usize], is_site: impl Fn(usize) -> bool, x: &[f64], int_tol: f64) -> Option<usize> {
    let mut best: Option<(bool, f64, usize)> = None;
    for &j in binaries {
        let v = x[j];
        let frac = (v - v.round()).abs();
        if frac <= int_tol {
            continue;
        }
        let key = (!is_site(j), (v - 0.5).abs(), j);
        let better = match best {
            None => true,
            Some(b) => key.0 < b.0 || (key.0 == b.0 && (key.1 < b.1 || (key.1 == b.1 && key.2 < b.2))),
        };
        if better {
            best = Some(key);
        }
    }
    best.map(|b| b.2)
}

/// Binary structure of a model: which columns are siting variables and
/// which operating columns belong to each candidate.
struct BinaryMap {
    sites: Vec<usize>,
    /// Per candidate, its `(x_ch, x_dis)` columns over all periods.
    pairs: Vec<Vec<(usize, usize)>>,
    /// Per candidate, its `(p_ch, p_dis)` columns over all periods.
    powers: Vec<Vec<(usize, usize)>>,
}

impl BinaryMap {
    fn new(model: &PlanningModel) -> Self {
        let lay = &model.layout;
        let mut pairs = vec![Vec::new(); lay.ess];
        let mut powers = vec![Vec::new(); lay.ess];
        for s in 0..lay.scenarios {
            for t in 0..lay.hours {
                for c in 0..lay.ess {
                    pairs[c].push((lay.xch(s, t, c), lay.xdis(s, t, c)));
                    powers[c].push((lay.pch(s, t, c), lay.pdis(s, t, c)));
                }
            }
        }
        BinaryMap {
            sites: (0..lay.ess).map(|c| lay.site(c)).collect(),
            pairs,
            powers,
        }
    }
}

type Fixing = Vec<(usize, f64)>;

struct Node {
    id: usize,
    fixings: Fixing,
    parent_bound: f64,
    depth: usize,
}

struct Search<'a> {
    model: &'a PlanningModel,
    opts: &'a MipOptions,
    map: BinaryMap,
    site_set: BTreeSet<usize>,
    base_fixings: Fixing,
    incumbent: Option<(f64, Vec<f64>)>,
    solves: usize,
    progress: Vec<String>,
}

impl<'a> Search<'a> {
    /// Problem with the given binaries fixed, plus fixings they imply: an
    /// unsited candidate cannot operate, and once `max_sites` candidates
    /// are sited the rest are not.
    fn restricted(&self, fixings: &Fixing) -> ConicProblem {
        let mut p = self.model.problem.clone();
        let apply = |p: &mut ConicProblem, j: usize, v: f64| {
            p.lower[j] = v;
            p.upper[j] = v;
        };
        for &(j, v) in self.base_fixings.iter().chain(fixings) {
            apply(&mut p, j, v);
        }
        let sited = self.map.sites.iter().filter(|&&j| p.lower[j] == 1.0).count();
        let full = sited >= self.model.options.max_sites;
        for (c, &yj) in self.map.sites.iter().enumerate() {
            if full && p.lower[yj] != 1.0 {
                apply(&mut p, yj, 0.0);
            }
            if p.upper[yj] == 0.0 {
                for &(a, b) in &self.map.pairs[c] {
                    apply(&mut p, a, 0.0);
                    apply(&mut p, b, 0.0);
                }
            }
        }
        p
    }

    fn solve(&mut self, fixings: &Fixing) -> ContinuousSolution {
        self.solves += 1;
        let p = self.restricted(fixings);
        solve_conic(&p, &self.opts.conic)
    }

    /// Rounds a relaxation point to a full binary assignment.
    fn round(&self, x: &[f64]) -> Fixing {
        let lay = &self.model.layout;
        let mut order: Vec<usize> = (0..lay.ess).collect();
        let score = |c: usize| x[lay.capacity(c)].max(0.0) + 1e-3 * x[lay.site(c)];
        order.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
        let chosen: BTreeSet<usize> = order
            .into_iter()
            .take(self.model.options.max_sites)
            .filter(|&c| score(c) > 1e-9)
            .collect();
        let mut out = Vec::with_capacity(self.model.binaries.len());
        for c in 0..lay.ess {
            let on = chosen.contains(&c);
            out.push((self.map.sites[c], if on { 1.0 } else { 0.0 }));
            for (&(xc, xd), &(pc, pd)) in self.map.pairs[c].iter().zip(&self.map.powers[c]) {
                let (ch, dis) = if !on {
                    (0.0, 0.0)
                } else if x[pc] > x[pd] && x[pc] > 1e-9 {
                    (1.0, 0.0)
                } else if x[pd] > x[pc] && x[pd] > 1e-9 {
                    (0.0, 1.0)
                } else {
                    (0.0, 0.0)
                };
                out.push((xc, ch));
                out.push((xd, dis));
            }
        }
        out
    }

    /// Solves with every binary fixed; updates the incumbent on
    /// improvement.
    fn try_assignment(&mut self, assignment: &Fixing) -> bool {
        let sol = self.solve(assignment);
        if sol.status != SolveStatus::Optimal {
            return false;
        }
        let mut x = sol.x;
        for &(j, v) in assignment {
            x[j] = v;
        }
        // a direction switched off carries exactly zero power
        for (pairs, powers) in self.map.pairs.iter().zip(&self.map.powers) {
            for (&(xc, xd), &(pc, pd)) in pairs.iter().zip(powers) {
                if x[xc] == 0.0 {
                    x[pc] = 0.0;
                }
                if x[xd] == 0.0 {
                    x[pd] = 0.0;
                }
            }
        }
        let obj = self.model.problem.objective(&x);
        let better = match &self.incumbent {
            None => true,
            Some((best, _)) => obj < *best,
        };
        if better {
            self.incumbent = Some((obj, x));
        }
        better
    }

    /// Siting is integral and no candidate charges and discharges in the
    /// same period, so rounding the operating binaries keeps the point
    /// feasible.
    fn complementary(&self, x: &[f64]) -> bool {
        let tol = self.opts.int_tol;
        self.map.sites.iter().all(|&j| (x[j] - x[j].round()).abs() <= tol)
            && self
                .map
                .powers
                .iter()
                .flatten()
                .all(|&(pc, pd)| x[pc].min(x[pd]) <= tol)
    }

    fn integral(&self, x: &[f64]) -> bool {
        self.model
            .binaries
            .iter()
            .all(|&j| (x[j] - x[j].round()).abs() <= self.opts.int_tol)
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            None => f64::INFINITY,
            Some((obj, _)) => obj - self.opts.gap_tol * obj.abs().max(1.0),
        }
    }
}

/// Branch-and-bound over all binaries of `model`.
pub fn solve_miqcp(model: &PlanningModel, opts: &MipOptions) -> MipSolution {
    let start = Instant::now();
    let map = BinaryMap::new(model);
    let mut search = Search {
        model,
        opts,
        site_set: map.sites.iter().copied().collect(),
        map,
        base_fixings: Vec::new(),
        incumbent: None,
        solves: 0,
        progress: Vec::new(),
    };
    for (c, cand) in model.case.ess_candidates[..model.layout.ess].iter().enumerate() {
        if cand.params.e_max * cand.params.eta_dis <= 1e-12 {
            let fixed: Vec<(usize, f64)> = search.map.pairs[c].iter().map(|&(_, d)| (d, 0.0)).collect();
            search
                .progress
                .push(format!("presolve: candidate at bus {} cannot discharge, fixed {} x_dis to 0", cand.bus, fixed.len()));
            search.base_fixings.extend(fixed);
        }
    }

    let mut open: Vec<Node> = vec![Node {
        id: 0,
        fixings: Vec::new(),
        parent_bound: f64::NEG_INFINITY,
        depth: 0,
    }];
    let mut next_id = 1;
    let mut nodes = 0;
    // bounds of nodes whose relaxation failed numerically
    let mut unresolved = f64::INFINITY;
    // bounds of nodes pruned within the gap tolerance of the incumbent
    let mut pruned = f64::INFINITY;
    let mut timed_out = false;

    while !open.is_empty() {
        if let Some(limit) = opts.time_limit {
            if start.elapsed().as_secs_f64() > limit {
                timed_out = true;
                break;
            }
        }
        let pick = if search.incumbent.is_none() {
            open.len() - 1
        } else {
            let mut best = 0;
            for (k, n) in open.iter().enumerate() {
                let b = &open[best];
                if n.parent_bound < b.parent_bound || (n.parent_bound == b.parent_bound && n.id < b.id) {
                    best = k;
                }
            }
            best
        };
        let node = open.swap_remove(pick);
        if node.parent_bound >= search.cutoff() {
            pruned = pruned.min(node.parent_bound);
            continue;
        }
        nodes += 1;
        let sol = search.solve(&node.fixings);
        let usable = sol.status == SolveStatus::NumericalLimit
            && sol.dual_objective.is_finite()
            && sol.residuals.primal <= INEXACT_RESIDUAL
            && sol.x.iter().all(|v| v.is_finite());
        if usable {
            search.progress.push(format!(
                "node {} relaxation inexact (gap {:.1e}); using its Lagrangian bound",
                node.id, sol.residuals.gap
            ));
        }
        match sol.status {
            SolveStatus::Optimal => {}
            SolveStatus::NumericalLimit if usable => {}
            SolveStatus::Infeasible => {
                if node.id == 0 {
                    let mut out = MipSolution::empty(MipStatus::Infeasible);
                    out.nodes = nodes;
                    out.solves = search.solves;
                    out.progress = search.progress;
                    out.seconds = start.elapsed().as_secs_f64();
                    return out;
                }
                continue;
            }
            _ => {
                if node.id == 0 {
                    let mut out = MipSolution::empty(MipStatus::NumericalFailure);
                    out.nodes = nodes;
                    out.solves = search.solves;
                    out.progress = search.progress;
                    out.seconds = start.elapsed().as_secs_f64();
                    return out;
                }
                // the Lagrangian value of any dual in K* is still a valid bound
                let bound = if sol.dual_objective.is_finite() {
                    sol.dual_objective.max(node.parent_bound)
                } else {
                    node.parent_bound
                };
                if bound >= search.cutoff() {
                    pruned = pruned.min(bound);
                    continue;
                }
                let fixed: Vec<String> = node
                    .fixings
                    .iter()
                    .map(|&(j, v)| format!("{}={v}", model.layout.describe(j)))
                    .collect();
                search.progress.push(format!(
                    "node {} relaxation failed ({:?}) with {}; bound kept",
                    node.id,
                    sol.status,
                    fixed.join(" ")
                ));
                unresolved = unresolved.min(bound);
                continue;
            }
        }
        let bound = sol.dual_objective.min(sol.objective).max(node.parent_bound);
        if bound >= search.cutoff() {
            pruned = pruned.min(bound);
            continue;
        }
        if search.integral(&sol.x) {
            let assignment: Fixing = model.binaries.iter().map(|&j| (j, sol.x[j].round())).collect();
            search.try_assignment(&assignment);
        } else if search.incumbent.is_none() || node.id == 0 || search.complementary(&sol.x) {
            let assignment = search.round(&sol.x);
            search.try_assignment(&assignment);
        }
        if !search.integral(&sol.x) && bound >= search.cutoff() {
            pruned = pruned.min(bound);
        }
        if !search.integral(&sol.x) && bound < search.cutoff() {
            let site_set = &search.site_set;
            let j = branching_rule(&model.binaries, |c| site_set.contains(&c), &sol.x, opts.int_tol)
                .expect("a fractional binary exists");
            let up_first = sol.x[j] >= 0.5;
            let mut children = Vec::with_capacity(2);
            for v in [0.0, 1.0] {
                let mut f = node.fixings.clone();
                f.push((j, v));
                children.push(Node {
                    id: 0,
                    fixings: f,
                    parent_bound: bound,
                    depth: node.depth + 1,
                });
            }
            // the child to dive into goes on top of the stack
            if !up_first {
                children.reverse();
            }
            for mut c in children {
                c.id = next_id;
                next_id += 1;
                open.push(c);
            }
        }
        let global = open
            .iter()
            .map(|n| n.parent_bound)
            .fold(unresolved.min(pruned), f64::min)
            .min(search.incumbent.as_ref().map_or(f64::INFINITY, |i| i.0));
        let (inc, gap) = match &search.incumbent {
            Some((o, _)) => (*o, relative_gap(*o, global)),
            None => (f64::INFINITY, f64::INFINITY),
        };
        let line = format!("node={} bound={:.6} incumbent={:.6} gap={:.4}%", nodes, global, inc, 100.0 * gap);
        log::info!("{line}");
        search.progress.push(line);
    }

    let global_bound = open
        .iter()
        .map(|n| n.parent_bound)
        .fold(unresolved.min(pruned), f64::min);
    let mut out = MipSolution::empty(MipStatus::Infeasible);
    out.nodes = nodes;
    out.solves = search.solves;
    out.seconds = start.elapsed().as_secs_f64();
    let progress = std::mem::take(&mut search.progress);
    match search.incumbent.take() {
        Some((obj, x)) => {
            let bound = global_bound.min(obj);
            out.gap = relative_gap(obj, bound);
            out.status = if out.gap <= opts.gap_tol {
                MipStatus::Optimal
            } else if timed_out {
                MipStatus::TimeLimit
            } else {
                MipStatus::NumericalFailure
            };
            out.incumbent_residual = primal_residual(&model.problem, &x);
            out.objective = obj;
            out.bound = bound;
            out.x = x;
        }
        None => {
            out.status = if timed_out || unresolved.is_finite() {
                MipStatus::TimeLimit
            } else {
                MipStatus::Infeasible
            };
        }
    }
    out.progress = progress;
    out
}

/// Exhaustive enumeration of every binary assignment that respects
/// `x_ch + x_dis ≤ 1` and `Σ y ≤ max_sites`, in lexicographic order of the
/// binary vector; the first strictly best objective wins.
pub fn brute_force(model: &PlanningModel, limit: usize, opts: &MipOptions) -> Result<MipSolution, MipError> {
    let count = model.binaries.len();
    if count > limit {
        return Err(MipError::TooManyBinaries { count, limit });
    }
    let start = Instant::now();
    // binaries are laid out as (x_ch, x_dis) pairs followed by the y block
    let pairs = (count - model.layout.ess) / 2;
    let ess = model.layout.ess;
    let pair_choices: [(f64, f64); 3] = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut solves = 0;
    let mut digits = vec![0usize; pairs];
    let mut sites = vec![0usize; ess];
    let total_pairs = 3usize.pow(pairs as u32);
    for _ in 0..total_pairs {
        sites.iter_mut().for_each(|v| *v = 0);
        for _ in 0..(1usize << ess) {
            if sites.iter().sum::<usize>() <= model.options.max_sites {
                let mut p = model.problem.clone();
                let mut values = Vec::with_capacity(count);
                for (k, &d) in digits.iter().enumerate() {
                    let (a, b) = pair_choices[d];
                    values.push((model.binaries[2 * k], a));
                    values.push((model.binaries[2 * k + 1], b));
                }
                for (c, &v) in sites.iter().enumerate() {
                    values.push((model.binaries[2 * pairs + c], v as f64));
                }
                for &(j, v) in &values {
                    p.lower[j] = v;
                    p.upper[j] = v;
                }
                solves += 1;
                let sol = solve_conic(&p, &opts.conic);
                if sol.status == SolveStatus::Optimal {
                    let mut x = sol.x;
                    for &(j, v) in &values {
                        x[j] = v;
                    }
                    let obj = model.problem.objective(&x);
                    if best.as_ref().map_or(true, |b| obj < b.0) {
                        best = Some((obj, x));
                    }
                }
            }
            // next site pattern, last position fastest
            for v in sites.iter_mut().rev() {
                if *v == 0 {
                    *v = 1;
                    break;
                }
                *v = 0;
            }
        }
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < 3 {
                break;
            }
            *d = 0;
        }
    }
    let mut out = MipSolution::empty(MipStatus::Infeasible);
    out.nodes = solves;
    out.solves = solves;
    out.seconds = start.elapsed().as_secs_f64();
    if let Some((obj, x)) = best {
        out.status = MipStatus::Optimal;
        out.objective = obj;
        out.bound = obj;
        out.gap = 0.0;
        out.incumbent_residual = primal_residual(&model.problem, &x);
        out.x = x;
    }
    Ok(out)
}
