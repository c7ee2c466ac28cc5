//! Radial distribution network case: buses, branches and devices, loaded
//! from a JSON case file and validated.
//!
//! All quantities are per-unit on `s_base` (MVA) and `v_base` (kV). Voltage
//! limits are given as magnitudes in the file and stored squared.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CaseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid case: {0}")]
    Invalid(String),
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("disconnected component: buses {0:?} are not reachable from the slack bus")]
    Disconnected(Vec<usize>),
}

impl From<serde_json::Error> for CaseError {
    fn from(e: serde_json::Error) -> Self {
        CaseError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    /// 1-based id.
    pub id: usize,
    pub load_p_base: f64,
    pub load_q_base: f64,
    pub v_min_sq: f64,
    pub v_max_sq: f64,
    pub is_slack: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from_bus: usize,
    pub to_bus: usize,
    pub r: f64,
    pub x: f64,
    pub s_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    /// Fixed cost, $/h.
    pub a: f64,
    /// Linear cost, $/(pu·h).
    pub b: f64,
    /// Quadratic cost, $/(pu²·h).
    pub c: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvUnit {
    pub bus: usize,
    /// Name of the scenario profile giving this unit's hourly output.
    #[serde(default = "default_profile")]
    pub profile_key: String,
}

fn default_profile() -> String {
    "pv_output".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rpc {
    pub bus: usize,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssParams {
    pub e_max: f64,
    pub p_ch_max: f64,
    pub p_dis_max: f64,
    /// Magnitude of the inverter's reactive lower limit.
    pub q_inv_min: f64,
    pub q_inv_max: f64,
    pub eta_ch: f64,
    pub eta_dis: f64,
    /// Investment cost, $/kWh.
    #[serde(default = "default_f_cost")]
    pub f_cost: f64,
    /// Throughput cost, $/kWh.
    #[serde(default = "default_h_cost")]
    pub h_cost: f64,
}

fn default_f_cost() -> f64 {
    250.0
}

fn default_h_cost() -> f64 {
    0.005
}

#[derive(Debug, Clone, PartialEq)]
pub struct EssCandidate {
    pub bus: usize,
    pub params: EssParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub name: String,
    pub s_base: f64,
    pub v_base: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    pub pv_units: Vec<PvUnit>,
    pub rpcs: Vec<Rpc>,
    pub ess_candidates: Vec<EssCandidate>,
}

// ---- file schema ----

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub base: BaseRecord,
    pub buses: Vec<BusRecord>,
    pub branches: Vec<BranchRecord>,
    #[serde(default)]
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub pv_units: Vec<PvUnit>,
    #[serde(default)]
    pub rpcs: Vec<Rpc>,
    #[serde(default)]
    pub ess_candidates: Option<CandidateRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseRecord {
    /// MVA.
    pub s_base: f64,
    /// kV.
    pub v_base: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusRecord {
    pub id: usize,
    #[serde(default)]
    pub p_load: f64,
    #[serde(default)]
    pub q_load: f64,
    pub v_min: f64,
    pub v_max: f64,
    #[serde(default)]
    pub slack: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchRecord {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub s_max: f64,
}

/// Either `"all"` (every non-slack bus) or an explicit list of bus ids,
/// sharing one parameter set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateRecord {
    pub buses: CandidateBuses,
    pub params: EssParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CandidateBuses {
    All(AllMarker),
    List(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllMarker {
    All,
}

/// Reads and validates a case file.
pub fn load_case(path: impl AsRef<Path>) -> Result<NetworkCase, CaseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_case(&text)
}

pub fn parse_case(text: &str) -> Result<NetworkCase, CaseError> {
    let file: CaseFile = serde_json::from_str(text)?;
    NetworkCase::from_file(file)
}

impl NetworkCase {
    pub fn from_file(file: CaseFile) -> Result<Self, CaseError> {
        let buses: Vec<Bus> = file
            .buses
            .iter()
            .map(|b| Bus {
                id: b.id,
                load_p_base: b.p_load,
                load_q_base: b.q_load,
                v_min_sq: b.v_min * b.v_min,
                v_max_sq: b.v_max * b.v_max,
                is_slack: b.slack,
            })
            .collect();
        let branches = file
            .branches
            .iter()
            .map(|b| Branch {
                from_bus: b.from,
                to_bus: b.to,
                r: b.r,
                x: b.x,
                s_max: b.s_max,
            })
            .collect();
        let ess_candidates = match file.ess_candidates {
            None => Vec::new(),
            Some(rec) => {
                let ids: Vec<usize> = match rec.buses {
                    CandidateBuses::All(_) => buses.iter().filter(|b| !b.is_slack).map(|b| b.id).collect(),
                    CandidateBuses::List(v) => v,
                };
                ids.into_iter()
                    .map(|bus| EssCandidate {
                        bus,
                        params: rec.params.clone(),
                    })
                    .collect()
            }
        };
        let case = NetworkCase {
            name: file.name,
            s_base: file.base.s_base,
            v_base: file.base.v_base,
            buses,
            branches,
            generators: file.generators,
            pv_units: file.pv_units,
            rpcs: file.rpcs,
            ess_candidates,
        };
        case.validate()?;
        Ok(case)
    }

    /// The case back in file form (candidate parameters taken from the
    /// first candidate).
    pub fn to_file(&self) -> CaseFile {
        CaseFile {
            name: self.name.clone(),
            description: String::new(),
            base: BaseRecord {
                s_base: self.s_base,
                v_base: self.v_base,
            },
            buses: self
                .buses
                .iter()
                .map(|b| BusRecord {
                    id: b.id,
                    p_load: b.load_p_base,
                    q_load: b.load_q_base,
                    v_min: b.v_min_sq.sqrt(),
                    v_max: b.v_max_sq.sqrt(),
                    slack: b.is_slack,
                })
                .collect(),
            branches: self
                .branches
                .iter()
                .map(|b| BranchRecord {
                    from: b.from_bus,
                    to: b.to_bus,
                    r: b.r,
                    x: b.x,
                    s_max: b.s_max,
                })
                .collect(),
            generators: self.generators.clone(),
            pv_units: self.pv_units.clone(),
            rpcs: self.rpcs.clone(),
            ess_candidates: self.ess_candidates.first().map(|c| CandidateRecord {
                buses: CandidateBuses::List(self.ess_candidates.iter().map(|c| c.bus).collect()),
                params: c.params.clone(),
            }),
        }
    }

    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    /// 0-based index of a 1-based bus id.
    pub fn bus_index(&self, id: usize) -> usize {
        id - 1
    }

    pub fn slack_bus(&self) -> usize {
        self.buses.iter().find(|b| b.is_slack).map(|b| b.id).unwrap_or(1)
    }

    /// Checks every field invariant and the radial topology.
    pub fn validate(&self) -> Result<(), CaseError> {
        let bad = |msg: String| Err(CaseError::Invalid(msg));
        if !(self.s_base > 0.0) || !(self.v_base > 0.0) {
            return bad("base quantities must be positive".into());
        }
        if self.buses.is_empty() {
            return bad("case has no buses".into());
        }
        for (k, b) in self.buses.iter().enumerate() {
            if b.id != k + 1 {
                return bad(format!("bus ids must be dense from 1; position {} has id {}", k + 1, b.id));
            }
            if !(0.0 < b.v_min_sq && b.v_min_sq < b.v_max_sq) {
                return bad(format!("bus {}: need 0 < v_min < v_max", b.id));
            }
            if !b.load_p_base.is_finite() || !b.load_q_base.is_finite() {
                return bad(format!("bus {}: non-finite load", b.id));
            }
        }
        let slack: Vec<usize> = self.buses.iter().filter(|b| b.is_slack).map(|b| b.id).collect();
        if slack.len() != 1 {
            return bad(format!("exactly one slack bus required, found {}", slack.len()));
        }
        if slack[0] != 1 {
            return bad(format!("the slack bus must be bus 1, found bus {}", slack[0]));
        }
        let n = self.buses.len();
        let exists = |id: usize| id >= 1 && id <= n;
        for (k, br) in self.branches.iter().enumerate() {
            if !exists(br.from_bus) || !exists(br.to_bus) {
                return bad(format!("branch {}: unknown bus {}-{}", k + 1, br.from_bus, br.to_bus));
            }
            if br.from_bus == br.to_bus {
                return bad(format!("branch {}: self loop at bus {}", k + 1, br.from_bus));
            }
            if !(br.r >= 0.0 && br.x >= 0.0) || (br.r == 0.0 && br.x == 0.0) {
                return bad(format!("branch {}-{}: need r, x >= 0, not both zero", br.from_bus, br.to_bus));
            }
            if !(br.s_max > 0.0) {
                return bad(format!("branch {}-{}: s_max must be positive", br.from_bus, br.to_bus));
            }
        }
        for g in &self.generators {
            if !exists(g.bus) {
                return bad(format!("generator at unknown bus {}", g.bus));
            }
            if !(g.p_min <= g.p_max) || !(g.q_min <= g.q_max) {
                return bad(format!("generator at bus {}: limits out of order", g.bus));
            }
            if !(g.c >= 0.0) {
                return bad(format!("generator at bus {}: quadratic cost must be nonnegative", g.bus));
            }
        }
        for pv in &self.pv_units {
            if !exists(pv.bus) {
                return bad(format!("PV unit at unknown bus {}", pv.bus));
            }
        }
        for r in &self.rpcs {
            if !exists(r.bus) {
                return bad(format!("RPC at unknown bus {}", r.bus));
            }
            if !(r.q_min <= 0.0 && 0.0 <= r.q_max) {
                return bad(format!("RPC at bus {}: need q_min <= 0 <= q_max", r.bus));
            }
        }
        let mut seen = vec![false; n + 1];
        for c in &self.ess_candidates {
            if !exists(c.bus) {
                return bad(format!("ESS candidate at unknown bus {}", c.bus));
            }
            if seen[c.bus] {
                return bad(format!("ESS candidate bus {} listed twice", c.bus));
            }
            seen[c.bus] = true;
            let p = &c.params;
            if !(p.e_max > 0.0 && p.p_ch_max > 0.0 && p.p_dis_max > 0.0) {
                return bad(format!("ESS candidate {}: e_max, p_ch_max, p_dis_max must be positive", c.bus));
            }
            if !(p.eta_ch > 0.0 && p.eta_ch <= 1.0 && p.eta_dis > 0.0 && p.eta_dis <= 1.0) {
                return bad(format!("ESS candidate {}: efficiencies must lie in (0, 1]", c.bus));
            }
            if !(p.q_inv_min >= 0.0 && p.q_inv_max >= 0.0) {
                return bad(format!("ESS candidate {}: inverter limits are magnitudes, must be >= 0", c.bus));
            }
            if !(p.f_cost >= 0.0 && p.h_cost >= 0.0) {
                return bad(format!("ESS candidate {}: costs must be nonnegative", c.bus));
            }
        }
        validate_radial(self)?;
        Ok(())
    }

    /// Converts to physical units (MW, MVAr, MWh, ohm, kV).
    pub fn to_physical(&self) -> PhysicalCase {
        let sb = self.s_base;
        let zb = self.v_base * self.v_base / sb;
        PhysicalCase {
            s_base: sb,
            v_base: self.v_base,
            bus_load_mw: self.buses.iter().map(|b| (b.load_p_base * sb, b.load_q_base * sb)).collect(),
            bus_v_kv: self
                .buses
                .iter()
                .map(|b| (b.v_min_sq.sqrt() * self.v_base, b.v_max_sq.sqrt() * self.v_base))
                .collect(),
            branch_ohm: self.branches.iter().map(|b| (b.r * zb, b.x * zb, b.s_max * sb)).collect(),
            gen_physical: self
                .generators
                .iter()
                .map(|g| {
                    [
                        g.a,
                        g.b / sb,
                        g.c / (sb * sb),
                        g.p_min * sb,
                        g.p_max * sb,
                        g.q_min * sb,
                        g.q_max * sb,
                    ]
                })
                .collect(),
            rpc_mvar: self.rpcs.iter().map(|r| (r.q_min * sb, r.q_max * sb)).collect(),
            ess_physical: self
                .ess_candidates
                .iter()
                .map(|c| {
                    let p = &c.params;
                    [
                        p.e_max * sb,
                        p.p_ch_max * sb,
                        p.p_dis_max * sb,
                        p.q_inv_min * sb,
                        p.q_inv_max * sb,
                    ]
                })
                .collect(),
        }
    }

    /// Inverse of [`NetworkCase::to_physical`]; topology and non-numeric
    /// fields come from `self`.
    pub fn with_physical(&self, ph: &PhysicalCase) -> NetworkCase {
        let sb = ph.s_base;
        let zb = ph.v_base * ph.v_base / sb;
        let mut out = self.clone();
        out.s_base = sb;
        out.v_base = ph.v_base;
        for (b, (&(p, q), &(vmin, vmax))) in out.buses.iter_mut().zip(ph.bus_load_mw.iter().zip(&ph.bus_v_kv)) {
            b.load_p_base = p / sb;
            b.load_q_base = q / sb;
            let (lo, hi) = (vmin / ph.v_base, vmax / ph.v_base);
            b.v_min_sq = lo * lo;
            b.v_max_sq = hi * hi;
        }
        for (br, &(r, x, s)) in out.branches.iter_mut().zip(&ph.branch_ohm) {
            br.r = r / zb;
            br.x = x / zb;
            br.s_max = s / sb;
        }
        for (g, v) in out.generators.iter_mut().zip(&ph.gen_physical) {
            g.a = v[0];
            g.b = v[1] * sb;
            g.c = v[2] * sb * sb;
            g.p_min = v[3] / sb;
            g.p_max = v[4] / sb;
            g.q_min = v[5] / sb;
            g.q_max = v[6] / sb;
        }
        for (r, &(lo, hi)) in out.rpcs.iter_mut().zip(&ph.rpc_mvar) {
            r.q_min = lo / sb;
            r.q_max = hi / sb;
        }
        for (c, v) in out.ess_candidates.iter_mut().zip(&ph.ess_physical) {
            c.params.e_max = v[0] / sb;
            c.params.p_ch_max = v[1] / sb;
            c.params.p_dis_max = v[2] / sb;
            c.params.q_inv_min = v[3] / sb;
            c.params.q_inv_max = v[4] / sb;
        }
        out
    }
}

/// Numeric case data in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalCase {
    pub s_base: f64,
    pub v_base: f64,
    /// (MW, MVAr) per bus.
    pub bus_load_mw: Vec<(f64, f64)>,
    /// (min, max) kV per bus.
    pub bus_v_kv: Vec<(f64, f64)>,
    /// (r ohm, x ohm, s_max MVA) per branch.
    pub branch_ohm: Vec<(f64, f64, f64)>,
    /// a $/h, b $/MWh, c $/MW²h, p_min, p_max MW, q_min, q_max MVAr.
    pub gen_physical: Vec<[f64; 7]>,
    pub rpc_mvar: Vec<(f64, f64)>,
    /// e_max MWh, p_ch_max MW, p_dis_max MW, q_inv_min, q_inv_max MVAr.
    pub ess_physical: Vec<[f64; 5]>,
}

/// Parent-pointer tree rooted at the slack bus. Vectors are indexed by
/// 0-based bus index.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    /// 1-based id of the root.
    pub root: usize,
    /// Parent bus id, `None` for the root.
    pub parent: Vec<Option<usize>>,
    /// Index into `case.branches` of the branch to the parent.
    pub parent_branch: Vec<Option<usize>>,
    pub depth: Vec<usize>,
    /// Children bus ids, ascending.
    pub children: Vec<Vec<usize>>,
    /// Bus ids in breadth-first order from the root.
    pub order: Vec<usize>,
}

/// Builds the tree rooted at the slack bus, orienting every branch away
/// from the root.
pub fn validate_radial(case: &NetworkCase) -> Result<Topology, CaseError> {
    let n = case.buses.len();
    let root = case.buses.iter().find(|b| b.is_slack).map(|b| b.id).unwrap_or(1);
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n + 1];
    for (k, br) in case.branches.iter().enumerate() {
        adj[br.from_bus].push((br.to_bus, k));
        adj[br.to_bus].push((br.from_bus, k));
    }
    for a in adj.iter_mut() {
        a.sort();
    }
    let mut parent = vec![None; n];
    let mut parent_branch = vec![None; n];
    let mut depth = vec![0; n];
    let mut visited = vec![false; n + 1];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    visited[root] = true;
    queue.push_back(root);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &(v, k) in &adj[u] {
            if Some(k) == parent_branch[u - 1] {
                continue;
            }
            if visited[v] {
                return Err(CaseError::NotATree(format!(
                    "branch {}-{} closes a cycle through buses {} and {}",
                    case.branches[k].from_bus, case.branches[k].to_bus, u, v
                )));
            }
            visited[v] = true;
            parent[v - 1] = Some(u);
            parent_branch[v - 1] = Some(k);
            depth[v - 1] = depth[u - 1] + 1;
            queue.push_back(v);
        }
    }
    let missing: Vec<usize> = (1..=n).filter(|&b| !visited[b]).collect();
    if !missing.is_empty() {
        return Err(CaseError::Disconnected(missing));
    }
    if case.branches.len() != n - 1 {
        return Err(CaseError::NotATree(format!(
            "{} branches for {} buses",
            case.branches.len(),
            n
        )));
    }
    let mut children = vec![Vec::new(); n];
    for b in 1..=n {
        if let Some(p) = parent[b - 1] {
            children[p - 1].push(b);
        }
    }
    Ok(Topology {
        root,
        parent,
        parent_branch,
        depth,
        children,
        order,
    })
}

/// Children of every bus under the root orientation, keyed by bus id.
pub fn downstream_sets(case: &NetworkCase) -> Result<BTreeMap<usize, Vec<usize>>, CaseError> {
    let topo = validate_radial(case)?;
    Ok((1..=case.buses.len()).map(|b| (b, topo.children[b - 1].clone())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bus() -> &'static str {
        r#"{
          "base": {"s_base": 1.0, "v_base": 12.66},
          "buses": [
            {"id": 1, "v_min": 1.0, "v_max": 1.05, "slack": true},
            {"id": 2, "p_load": 1.0, "q_load": 0.5, "v_min": 0.9, "v_max": 1.1}
          ],
          "branches": [{"from": 1, "to": 2, "r": 0.01, "x": 0.01, "s_max": 5.0}],
          "generators": [{"bus": 1, "a": 0, "b": 10, "c": 1, "p_min": -5, "p_max": 5, "q_min": -5, "q_max": 5}]
        }"#
    }

    #[test]
    fn minimal_two_bus_case() {
        let case = parse_case(two_bus()).unwrap();
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.branches.len(), 1);
        assert!((case.buses[1].v_min_sq - 0.81).abs() < 1e-15);
    }

    #[test]
    fn single_bus_is_a_trivial_tree() {
        let text = r#"{"base": {"s_base": 1, "v_base": 1},
            "buses": [{"id": 1, "v_min": 0.9, "v_max": 1.1, "slack": true}], "branches": []}"#;
        let case = parse_case(text).unwrap();
        let topo = validate_radial(&case).unwrap();
        assert_eq!(topo.order, vec![1]);
        assert!(topo.children[0].is_empty());
    }

    #[test]
    fn cycle_is_rejected() {
        let text = r#"{"base": {"s_base": 1, "v_base": 1},
            "buses": [{"id": 1, "v_min": 0.9, "v_max": 1.1, "slack": true},
                      {"id": 2, "v_min": 0.9, "v_max": 1.1},
                      {"id": 3, "v_min": 0.9, "v_max": 1.1}],
            "branches": [{"from": 1, "to": 2, "r": 0.1, "x": 0.1, "s_max": 1},
                         {"from": 2, "to": 3, "r": 0.1, "x": 0.1, "s_max": 1},
                         {"from": 3, "to": 1, "r": 0.1, "x": 0.1, "s_max": 1}]}"#;
        match parse_case(text) {
            Err(CaseError::NotATree(_)) => {}
            other => panic!("expected NotATree, got {other:?}"),
        }
    }

    #[test]
    fn two_feeders_without_a_link_are_disconnected() {
        let text = r#"{"base": {"s_base": 1, "v_base": 1},
            "buses": [{"id": 1, "v_min": 0.9, "v_max": 1.1, "slack": true},
                      {"id": 2, "v_min": 0.9, "v_max": 1.1},
                      {"id": 3, "v_min": 0.9, "v_max": 1.1},
                      {"id": 4, "v_min": 0.9, "v_max": 1.1}],
            "branches": [{"from": 1, "to": 2, "r": 0.1, "x": 0.1, "s_max": 1},
                         {"from": 3, "to": 4, "r": 0.1, "x": 0.1, "s_max": 1}]}"#;
        match parse_case(text) {
            Err(CaseError::Disconnected(b)) => assert_eq!(b, vec![3, 4]),
            other => panic!("expected Disconnected, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_a_location() {
        let text = "{\n  \"base\": {\"s_base\": 1, \"v_base\": }\n}";
        match parse_case(text) {
            Err(CaseError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn invariant_violations_are_named() {
        let text = two_bus().replace("\"r\": 0.01, \"x\": 0.01", "\"r\": 0.0, \"x\": 0.0");
        let err = parse_case(&text).unwrap_err().to_string();
        assert!(err.contains("not both zero"), "{err}");
        let text = two_bus().replace("\"c\": 1", "\"c\": -1");
        let err = parse_case(&text).unwrap_err().to_string();
        assert!(err.contains("quadratic cost"), "{err}");
    }

    #[test]
    fn reversed_branch_is_oriented_from_the_root() {
        let text = two_bus().replace("\"from\": 1, \"to\": 2", "\"from\": 2, \"to\": 1");
        let case = parse_case(&text).unwrap();
        let topo = validate_radial(&case).unwrap();
        assert_eq!(topo.parent[1], Some(1));
        assert_eq!(downstream_sets(&case).unwrap()[&1], vec![2]);
    }
}
