use proptest::prelude::*;

use super::*;
use crate::conic::{primal_residual, solve_conic, ConeKind, SolveStatus, Tolerances};
use crate::network::{BaseRecord, BranchRecord, BusRecord, CaseFile, EssParams, Generator};
use crate::powerflow::forward_backward_sweep;
use crate::scenario::{normalize_weights, Scenario, ScenarioSet};

/// Radial case from `(parent, r, x)` per non-root bus and per-bus loads,
/// with one generator at the root.
fn tree_case(links: &[(usize, f64, f64)], loads: &[(f64, f64)], gen: Generator) -> NetworkCase {
    let n = links.len() + 1;
    let buses = (1..=n)
        .map(|id| BusRecord {
            id,
            p_load: if id == 1 { 0.0 } else { loads[id - 2].0 },
            q_load: if id == 1 { 0.0 } else { loads[id - 2].1 },
            v_min: 0.5,
            v_max: 1.5,
            slack: id == 1,
        })
        .collect();
    let branches = links
        .iter()
        .enumerate()
        .map(|(k, &(parent, r, x))| BranchRecord {
            from: parent,
            to: k + 2,
            r,
            x,
            s_max: 100.0,
        })
        .collect();
    NetworkCase::from_file(CaseFile {
        name: "tree".into(),
        description: String::new(),
        base: BaseRecord { s_base: 1.0, v_base: 1.0 },
        buses,
        branches,
        generators: vec![gen],
        pv_units: vec![],
        rpcs: vec![],
        ess_candidates: None,
    })
    .unwrap()
}

fn slack_gen(a: f64, b: f64, c: f64) -> Generator {
    Generator {
        bus: 1,
        a,
        b,
        c,
        p_min: -50.0,
        p_max: 50.0,
        q_min: -50.0,
        q_max: 50.0,
    }
}

fn ess_params() -> EssParams {
    EssParams {
        e_max: 1.2,
        p_ch_max: 2.0,
        p_dis_max: 2.0,
        q_inv_min: 0.5,
        q_inv_max: 0.5,
        eta_ch: 0.85,
        eta_dis: 0.9,
        f_cost: 250.0,
        h_cost: 0.005,
    }
}

fn with_candidates(mut case: NetworkCase, buses: &[usize]) -> NetworkCase {
    case.ess_candidates = buses
        .iter()
        .map(|&bus| crate::network::EssCandidate {
            bus,
            params: ess_params(),
        })
        .collect();
    case
}

fn scenarios(weights: &[f64], hours: usize) -> ScenarioSet {
    ScenarioSet {
        hours_per_day: hours,
        scenarios: weights
            .iter()
            .enumerate()
            .map(|(k, &weight)| Scenario {
                id: format!("s{k}"),
                weight,
                load_scale: (0..hours).map(|t| 0.6 + 0.1 * ((t + k) % 4) as f64).collect(),
                pv_output: vec![0.0; hours],
            })
            .collect(),
    }
}

#[test]
fn single_line_optimum_matches_the_closed_form() {
    let (r, x, pd, qd) = (0.01, 0.01, 1.0, 0.5);
    let (b, c) = (10.0, 1.0);
    let case = tree_case(&[(1, r, x)], &[(pd, qd)], slack_gen(0.0, b, c));
    let scen = ScenarioSet::flat(1, 1.0, 0.0);
    let m = build(&case, &scen, &BuildOptions { mode: Mode::None, ..Default::default() }).unwrap();
    let sol = solve_conic(&m.problem, &Tolerances::default());
    assert_eq!(sol.status, SolveStatus::Optimal);

    // l = (pd + r l)² + (qd + x l)²  with w_1 = 1, smallest root
    let qa = r * r + x * x;
    let qb = 2.0 * (r * pd + x * qd) - 1.0;
    let qc = pd * pd + qd * qd;
    let l = (-qb - (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
    let p = pd + r * l;
    let q = qd + x * l;
    let w2 = 1.0 + qa * l - 2.0 * (r * p + x * q);

    let lay = &m.layout;
    assert!((sol.x[lay.l(0, 0, 0)] - l).abs() < 1e-6);
    assert!((sol.x[lay.p(0, 0, 0)] - p).abs() < 1e-6);
    assert!((sol.x[lay.w(0, 0, 1)] - w2).abs() < 1e-6);
    assert!((sol.objective - (b * p + c * p * p)).abs() < 1e-6);
}

#[test]
fn zero_load_leaves_only_fixed_costs() {
    let case = tree_case(&[(1, 0.02, 0.01), (2, 0.01, 0.03)], &[(0.0, 0.0); 2], slack_gen(7.0, 10.0, 1.0));
    let scen = normalize_weights(&scenarios(&[1.0, 3.0], 3)).unwrap();
    let m = build(&case, &scen, &BuildOptions { mode: Mode::None, ..Default::default() }).unwrap();
    let sol = solve_conic(&m.problem, &Tolerances::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective - 3.0 * 7.0).abs() < 1e-7);
    for s in 0..2 {
        for t in 0..3 {
            for b in 0..3 {
                assert!((sol.x[m.layout.w(s, t, b)] - 1.0).abs() < 1e-7);
            }
        }
    }
}

#[test]
fn row_and_binary_counts_follow_the_formula() {
    let case = tree_case(&[(1, 0.01, 0.01), (2, 0.01, 0.01), (2, 0.02, 0.01)], &[(0.1, 0.05); 3], slack_gen(0.0, 1.0, 1.0));
    let case = with_candidates(case, &[2, 3, 4]);
    let scen = normalize_weights(&scenarios(&[1.0, 1.0], 4)).unwrap();
    let m = build(&case, &scen, &BuildOptions::default()).unwrap();
    let (nb, n, ess, periods) = (3, 4, 3, 8);
    assert_eq!(m.num_binaries(), 2 * ess * 4 * 2 + ess);
    let count = |kind: ConeKind| m.problem.cones.iter().filter(|c| c.kind == kind).count();
    assert_eq!(count(ConeKind::RotatedSoc), nb * periods);
    assert_eq!(count(ConeKind::Soc), nb * periods);
    let zero_rows: usize = m.problem.cones.iter().filter(|c| c.kind == ConeKind::Zero).map(|c| c.dim).sum();
    // flow and nodal equalities, SoE recursion, cyclic condition
    assert_eq!(zero_rows, periods * (3 * nb + 2 * n + ess) + 2 * ess);
    let ineq: usize = m.problem.cones.iter().filter(|c| c.kind == ConeKind::NonNeg).map(|c| c.dim).sum();
    assert_eq!(ineq, periods * 6 * ess + ess + 1);
}

#[test]
fn storage_mode_without_candidates_is_rejected() {
    let case = tree_case(&[(1, 0.01, 0.01)], &[(0.1, 0.0)], slack_gen(0.0, 1.0, 1.0));
    let scen = ScenarioSet::flat(2, 1.0, 0.0);
    assert!(matches!(build(&case, &scen, &BuildOptions::default()), Err(BuildError::NoCandidates)));
}

#[test]
fn builds_are_deterministic_and_weight_scale_free() {
    let case = tree_case(&[(1, 0.01, 0.02), (2, 0.03, 0.01)], &[(0.2, 0.1), (0.3, 0.1)], slack_gen(1.0, 2.0, 3.0));
    let case = with_candidates(case, &[2, 3]);
    let raw = scenarios(&[1.0, 2.0, 5.0], 3);
    let a = build(&case, &normalize_weights(&raw).unwrap(), &BuildOptions::default()).unwrap();
    let b = build(&case, &normalize_weights(&raw).unwrap(), &BuildOptions::default()).unwrap();
    let dump = |m: &PlanningModel| serde_json::to_string(&m.interchange()).unwrap();
    assert_eq!(dump(&a), dump(&b));
    for alpha in [0.25, 2.0, 1024.0] {
        let mut scaled = raw.clone();
        for s in &mut scaled.scenarios {
            s.weight *= alpha;
        }
        let c = build(&case, &normalize_weights(&scaled).unwrap(), &BuildOptions::default()).unwrap();
        assert_eq!(dump(&a), dump(&c));
    }
}

#[test]
fn column_names_cover_every_kind() {
    let case = tree_case(&[(1, 0.01, 0.02)], &[(0.2, 0.1)], slack_gen(1.0, 2.0, 3.0));
    let case = with_candidates(case, &[2]);
    let m = build(&case, &ScenarioSet::flat(2, 1.0, 0.0), &BuildOptions::default()).unwrap();
    let lay = &m.layout;
    assert_eq!(lay.describe(lay.pg(0, 1, 0)), "p_g[g0,s0,t1]");
    assert_eq!(lay.describe(lay.pn(0, 0, 1)), "p_net[b1,s0,t0]");
    assert_eq!(lay.describe(lay.xdis(0, 1, 0)), "x_dis[c0,s0,t1]");
    assert_eq!(lay.describe(lay.soe(0, 2, 0)), "e[c0,s0,t2]");
    assert_eq!(lay.describe(lay.capacity(0)), "E[c0]");
    assert_eq!(lay.describe(lay.site(0)), "y[c0]");
    let names: std::collections::BTreeSet<String> = (0..lay.num_vars()).map(|j| lay.describe(j)).collect();
    assert_eq!(names.len(), lay.num_vars());
}

#[test]
fn generator_cost_is_the_quadratic_polynomial() {
    let case = tree_case(&[(1, 0.01, 0.02)], &[(0.2, 0.1)], slack_gen(3.0, 5.0, 7.0));
    let m = build(&case, &ScenarioSet::flat(1, 1.0, 0.0), &BuildOptions { mode: Mode::None, ..Default::default() }).unwrap();
    let mut x = vec![0.0; m.layout.num_vars()];
    x[m.layout.pg(0, 0, 0)] = 2.0;
    assert_eq!(m.problem.objective(&x), 3.0 + 2.0 * 5.0 + 4.0 * 7.0);
    assert_eq!(m.cost_breakdown(&x).total, 3.0 + 2.0 * 5.0 + 4.0 * 7.0);
}

#[test]
fn amortization_spreads_capacity_cost_over_hours() {
    assert!((amortized_capacity_cost(250.0, 1.0, 10.0) - 250_000.0 / 87_600.0).abs() < 1e-12);
}

/// Random tree: parent of bus k+2 is drawn among buses 1..=k+1.
fn random_tree() -> impl Strategy<Value = (Vec<(usize, f64, f64)>, Vec<(f64, f64)>)> {
    (2usize..7).prop_flat_map(|n| {
        let links = (0..n - 1)
            .map(|k| (1usize..=k + 1, 0.001f64..0.03, 0.001f64..0.03))
            .collect::<Vec<_>>();
        let loads = prop::collection::vec((-0.2f64..0.4, -0.2f64..0.3), n - 1);
        (links, loads)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// AC power flow points satisfy every row of the relaxed model.
    #[test]
    fn ac_solutions_are_feasible_for_the_relaxation((links, loads) in random_tree()) {
        let case = tree_case(&links, &loads, slack_gen(0.0, 1.0, 1.0));
        let m = build(&case, &ScenarioSet::flat(1, 1.0, 0.0), &BuildOptions { mode: Mode::None, ..Default::default() }).unwrap();
        let n = case.buses.len();
        let (p, q): (Vec<f64>, Vec<f64>) = (0..n).map(|b| m.load(0, 0, b)).unzip();
        let pf = forward_backward_sweep(&case, &m.orientation, &p, &q, 1e-14, 500);
        prop_assert!(pf.converged);
        let lay = &m.layout;
        let mut x = vec![0.0; lay.num_vars()];
        for b in 0..n {
            x[lay.w(0, 0, b)] = pf.w[b];
            if b > 0 {
                x[lay.pn(0, 0, b)] = p[b];
                x[lay.qn(0, 0, b)] = q[b];
            }
        }
        for k in 0..case.branches.len() {
            x[lay.p(0, 0, k)] = pf.sending[k].re;
            x[lay.q(0, 0, k)] = pf.sending[k].im;
            x[lay.l(0, 0, k)] = pf.l[k];
        }
        let root: Vec<usize> = m.orientation.out[0].clone();
        x[lay.pg(0, 0, 0)] = root.iter().map(|&k| pf.sending[k].re).sum();
        x[lay.qg(0, 0, 0)] = root.iter().map(|&k| pf.sending[k].im).sum();
        prop_assert!(primal_residual(&m.problem, &x) <= 1e-8);
        for k in 0..case.branches.len() {
            let (i, _) = m.orientation.ends[k];
            let gap = pf.l[k] * pf.w[i] - pf.sending[k].norm_sqr();
            prop_assert!(gap.abs() <= 1e-8 * (1.0 + pf.l[k]));
        }
    }
}
