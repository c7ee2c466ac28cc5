//! Row generators. Each returns its rows grouped by cone type so the
//! caller can emit a period's equalities, inequalities and cones as
//! contiguous blocks.

use crate::conic::{ConeKind, ConicBuilder};

use super::PlanningModel;

/// Linear form `Σ coef·x + constant`.
pub type Row = (Vec<(usize, f64)>, f64);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowSet {
    /// Rows equal to zero.
    pub eq: Vec<Row>,
    /// Rows that are nonnegative.
    pub ineq: Vec<Row>,
    pub cones: Vec<(ConeKind, Vec<Row>)>,
}

impl RowSet {
    fn extend(&mut self, other: RowSet) {
        self.eq.extend(other.eq);
        self.ineq.extend(other.ineq);
        self.cones.extend(other.cones);
    }

    fn emit(self, b: &mut ConicBuilder) {
        for (terms, c) in self.eq {
            b.add_row(ConeKind::Zero, &terms, c);
        }
        for (terms, c) in self.ineq {
            b.add_row(ConeKind::NonNeg, &terms, c);
        }
        for (kind, rows) in self.cones {
            b.add_block(kind, rows);
        }
    }
}

/// Branch flow equations for every branch `(i, j)` in `(s, t)`:
///
/// ```text
///   p_ij = p_j + r·l_ij + Σ_k p_jk
///   q_ij = q_j + x·l_ij + Σ_k q_jk
///   w_j  = w_i + (r² + x²)·l_ij − 2(r·p_ij + x·q_ij)
///   p_ij² + q_ij² ≤ l_ij·w_i
///   p_ij² + q_ij² ≤ s_max²
/// ```
pub fn build_distflow_rows(model: &PlanningModel, s: usize, t: usize) -> RowSet {
    let lay = &model.layout;
    let or = &model.orientation;
    let mut out = RowSet::default();
    let mut p_rows = Vec::new();
    let mut q_rows = Vec::new();
    let mut v_rows = Vec::new();
    for (k, br) in model.case.branches.iter().enumerate() {
        let (i, j) = or.ends[k];
        let mut p = vec![(lay.p(s, t, k), 1.0), (lay.pn(s, t, j), -1.0), (lay.l(s, t, k), -br.r)];
        let mut q = vec![(lay.q(s, t, k), 1.0), (lay.qn(s, t, j), -1.0), (lay.l(s, t, k), -br.x)];
        for &c in &or.out[j] {
            p.push((lay.p(s, t, c), -1.0));
            q.push((lay.q(s, t, c), -1.0));
        }
        p_rows.push((p, 0.0));
        q_rows.push((q, 0.0));
        v_rows.push((
            vec![
                (lay.w(s, t, j), 1.0),
                (lay.w(s, t, i), -1.0),
                (lay.l(s, t, k), -(br.r * br.r + br.x * br.x)),
                (lay.p(s, t, k), 2.0 * br.r),
                (lay.q(s, t, k), 2.0 * br.x),
            ],
            0.0,
        ));
    }
    out.eq.extend(p_rows);
    out.eq.extend(q_rows);
    out.eq.extend(v_rows);
    for (k, _) in model.case.branches.iter().enumerate() {
        let (i, _) = or.ends[k];
        out.cones.push((
            ConeKind::RotatedSoc,
            vec![
                (vec![(lay.l(s, t, k), 1.0)], 0.0),
                (vec![(lay.w(s, t, i), 1.0)], 0.0),
                (vec![(lay.p(s, t, k), 1.0)], 0.0),
                (vec![(lay.q(s, t, k), 1.0)], 0.0),
            ],
        ));
    }
    for (k, br) in model.case.branches.iter().enumerate() {
        out.cones.push((
            ConeKind::Soc,
            vec![
                (vec![], br.s_max),
                (vec![(lay.p(s, t, k), 1.0)], 0.0),
                (vec![(lay.q(s, t, k), 1.0)], 0.0),
            ],
        ));
    }
    out
}

/// Net withdrawal at every bus in `(s, t)`:
///
/// ```text
///   p_i = p_D − p_G − p_PV − p_dis + p_ch
///   q_i = q_D − q_G − q_RPC + q_inv
/// ```
///
/// For the root, the withdrawal is the negated sum of its outgoing flows.
pub fn build_nodal_rows(model: &PlanningModel, s: usize, t: usize) -> RowSet {
    let lay = &model.layout;
    let case = &model.case;
    let n = case.buses.len();
    let mut p_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut q_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for b in 0..n {
        if b == 0 {
            for &k in &model.orientation.out[0] {
                p_terms[0].push((lay.p(s, t, k), -1.0));
                q_terms[0].push((lay.q(s, t, k), -1.0));
            }
        } else {
            p_terms[b].push((lay.pn(s, t, b), 1.0));
            q_terms[b].push((lay.qn(s, t, b), 1.0));
        }
    }
    for (g, gen) in case.generators.iter().enumerate() {
        p_terms[gen.bus - 1].push((lay.pg(s, t, g), 1.0));
        q_terms[gen.bus - 1].push((lay.qg(s, t, g), 1.0));
    }
    for (r, rpc) in case.rpcs[..lay.rpcs].iter().enumerate() {
        q_terms[rpc.bus - 1].push((lay.rpc(s, t, r), 1.0));
    }
    for (c, cand) in case.ess_candidates[..lay.ess].iter().enumerate() {
        let b = cand.bus - 1;
        p_terms[b].push((lay.pdis(s, t, c), 1.0));
        p_terms[b].push((lay.pch(s, t, c), -1.0));
        q_terms[b].push((lay.qinv(s, t, c), -1.0));
    }
    let mut out = RowSet::default();
    for (b, terms) in p_terms.into_iter().enumerate() {
        let (pd, _) = model.load(s, t, b);
        out.eq.push((terms, -(pd - model.pv(s, t, b))));
    }
    for (b, terms) in q_terms.into_iter().enumerate() {
        let (_, qd) = model.load(s, t, b);
        out.eq.push((terms, -qd));
    }
    out
}

/// Storage rows for `(s, t)` of every candidate:
///
/// ```text
///   x_ch + x_dis ≤ 1
///   p_ch ≤ p_ch_max·x_ch,  p_dis ≤ p_dis_max·x_dis
///   −q_inv_min·y ≤ q_inv ≤ q_inv_max·y
///   e(t+1) = e(t) + η_ch·p_ch − p_dis/η_dis
///   e(t) ≤ E
/// ```
pub fn build_ess_rows(model: &PlanningModel, s: usize, t: usize) -> RowSet {
    let lay = &model.layout;
    let mut out = RowSet::default();
    for (c, cand) in model.case.ess_candidates[..lay.ess].iter().enumerate() {
        let p = &cand.params;
        let (pch, pdis, xch, xdis) = (lay.pch(s, t, c), lay.pdis(s, t, c), lay.xch(s, t, c), lay.xdis(s, t, c));
        let (qinv, y, cap) = (lay.qinv(s, t, c), lay.site(c), lay.capacity(c));
        let (e0, e1) = (lay.soe(s, t, c), lay.soe(s, t + 1, c));
        out.eq.push((
            vec![(e1, 1.0), (e0, -1.0), (pch, -p.eta_ch), (pdis, 1.0 / p.eta_dis)],
            0.0,
        ));
        out.ineq.push((vec![(xch, -1.0), (xdis, -1.0)], 1.0));
        out.ineq.push((vec![(xch, p.p_ch_max), (pch, -1.0)], 0.0));
        out.ineq.push((vec![(xdis, p.p_dis_max), (pdis, -1.0)], 0.0));
        out.ineq.push((vec![(y, p.q_inv_max), (qinv, -1.0)], 0.0));
        out.ineq.push((vec![(qinv, 1.0), (y, p.q_inv_min)], 0.0));
        out.ineq.push((vec![(cap, 1.0), (e0, -1.0)], 0.0));
    }
    out
}

pub(super) fn period_rows(model: &PlanningModel, b: &mut ConicBuilder, s: usize, t: usize) {
    let mut set = RowSet::default();
    let flow = build_distflow_rows(model, s, t);
    set.eq.extend(flow.eq);
    set.extend(build_nodal_rows(model, s, t));
    set.extend(build_ess_rows(model, s, t));
    set.cones.extend(flow.cones);
    set.emit(b);
}

/// Cyclic state of energy: `e(0) = e(T)`.
pub(super) fn scenario_rows(model: &PlanningModel, b: &mut ConicBuilder, s: usize) {
    let lay = &model.layout;
    for c in 0..lay.ess {
        b.add_row(
            ConeKind::Zero,
            &[(lay.soe(s, 0, c), 1.0), (lay.soe(s, lay.hours, c), -1.0)],
            0.0,
        );
    }
}

/// `E ≤ E_max·y` per candidate and `Σ y ≤ max_sites`.
pub(super) fn global_rows(model: &PlanningModel, b: &mut ConicBuilder) {
    let lay = &model.layout;
    if lay.ess == 0 {
        return;
    }
    for (c, cand) in model.case.ess_candidates[..lay.ess].iter().enumerate() {
        b.add_row(
            ConeKind::NonNeg,
            &[(lay.site(c), cand.params.e_max), (lay.capacity(c), -1.0)],
            0.0,
        );
    }
    let sites: Vec<(usize, f64)> = (0..lay.ess).map(|c| (lay.site(c), -1.0)).collect();
    b.add_row(ConeKind::NonNeg, &sites, model.options.max_sites as f64);
}

/// Expected generation cost, capacity cost and throughput cost:
///
/// ```text
///   Σ_ω ρ_ω Σ_t Σ_g (a + b·p_G + c·p_G²)
///     + T·amort(f)·Σ_i E_i
///     + Σ_ω ρ_ω Σ_t Σ_i h·(p_ch + p_dis)
/// ```
pub fn build_objective(model: &PlanningModel, b: &mut ConicBuilder) {
    let lay = &model.layout;
    for s in 0..lay.scenarios {
        let rho = model.scenarios.scenarios[s].weight;
        for t in 0..lay.hours {
            for (g, gen) in model.case.generators.iter().enumerate() {
                b.set_cost(lay.pg(s, t, g), 2.0 * rho * gen.c, rho * gen.b);
                b.add_constant(rho * gen.a);
            }
            for c in 0..lay.ess {
                let h = rho * model.throughput_cost[c];
                b.set_cost(lay.pch(s, t, c), 0.0, h);
                b.set_cost(lay.pdis(s, t, c), 0.0, h);
            }
        }
    }
    for c in 0..lay.ess {
        b.set_cost(lay.capacity(c), 0.0, model.capacity_cost[c]);
    }
}
