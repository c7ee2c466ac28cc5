//! The bundled 33-bus case and its twelve representative days.

mod common;

use common::{bundled_case_path, bundled_scenarios_path};
use ess_planner::analysis::{congestion_report, exactness, voltage_report, Summary};
use ess_planner::bnb::{solve_miqcp, MipOptions, MipSolution, MipStatus};
use ess_planner::model::{build, BuildOptions, Mode, PlanningModel};
use ess_planner::network::{downstream_sets, load_case, validate_radial, NetworkCase};
use ess_planner::powerflow::ac_mismatch;
use ess_planner::scenario::{load_scenarios, stress_load, ScenarioSet};

/// Weakest bus of the compensator baseline, frozen from the reference run.
const RPC_WEAKEST_BUS: usize = 30;
const RPC_WEAKEST_VOLTAGE: f64 = 0.952476;

fn inputs() -> (NetworkCase, ScenarioSet) {
    (load_case(bundled_case_path()).unwrap(), load_scenarios(bundled_scenarios_path()).unwrap())
}

fn solve(case: &NetworkCase, scen: &ScenarioSet, mode: Mode) -> (PlanningModel, MipSolution) {
    let m = build(case, scen, &BuildOptions { mode, ..Default::default() }).unwrap();
    let sol = solve_miqcp(&m, &MipOptions::default());
    (m, sol)
}

#[test]
fn case_has_thirty_three_buses_on_a_tree() {
    let (case, _) = inputs();
    assert_eq!(case.buses.len(), 33);
    assert_eq!(case.branches.len(), 32);
    let topo = validate_radial(&case).unwrap();
    assert_eq!(topo.root, 1);
    assert_eq!(topo.depth[case.bus_index(18)], 17);
    assert_eq!(topo.depth[case.bus_index(33)], 13);
}

#[test]
fn downstream_sets_follow_the_feeder() {
    let (case, _) = inputs();
    let down = downstream_sets(&case).unwrap();
    assert_eq!(down[&1], vec![2]);
    assert_eq!(down[&2], vec![3, 19]);
    assert_eq!(down[&6], vec![7, 26]);
    assert!(down[&18].is_empty());
    assert!(down[&33].is_empty());
}

#[test]
fn twelve_equiprobable_days() {
    let (_, scen) = inputs();
    assert_eq!(scen.num_scenarios(), 12);
    assert_eq!(scen.hours_per_day, 24);
    for s in &scen.scenarios {
        assert!((s.weight - 1.0 / 12.0).abs() < 1e-15);
    }
}

#[test]
fn evening_stress_scales_only_hours_17_to_24() {
    let (_, scen) = inputs();
    let up = stress_load(&scen, 1.10, (17, 24)).unwrap();
    for (a, b) in scen.scenarios.iter().zip(&up.scenarios) {
        for t in 0..24 {
            let want = if t >= 16 { a.load_scale[t] * 1.10 } else { a.load_scale[t] };
            assert_eq!(b.load_scale[t], want);
        }
    }
    assert_eq!(stress_load(&scen, 1.0, (17, 24)).unwrap(), scen);
}

#[test]
fn storage_model_has_the_expected_binaries() {
    let (case, scen) = inputs();
    let m = build(&case, &scen, &BuildOptions { mode: Mode::Ess, ..Default::default() }).unwrap();
    let cands = case.ess_candidates.len();
    assert_eq!(cands, 32);
    assert_eq!(m.num_binaries(), 2 * cands * 24 * 12 + cands);
    let rpc = build(&case, &scen, &BuildOptions { mode: Mode::Rpc, ..Default::default() }).unwrap();
    assert_eq!(rpc.num_binaries(), 0);
}

#[test]
fn no_support_is_infeasible() {
    let (case, scen) = inputs();
    let (_, sol) = solve(&case, &scen, Mode::None);
    assert_eq!(sol.status, MipStatus::Infeasible);
    assert!(!sol.has_incumbent());
}

#[test]
fn compensator_baseline_is_tight_and_ac_consistent() {
    let (case, scen) = inputs();
    let (m, sol) = solve(&case, &scen, Mode::Rpc);
    assert_eq!(sol.status, MipStatus::Optimal);
    assert_eq!(sol.nodes, 1);
    let ex = exactness(&m, &sol.x, 1e-6);
    assert!(ex.is_tight(), "{ex:?}");
    for s in 0..m.layout.scenarios {
        for t in 0..m.layout.hours {
            let mm = ac_mismatch(&m, &sol.x, s, t);
            assert!(mm.converged);
            assert!(mm.max_dw <= 1e-5 && mm.max_dl <= 1e-5, "({s}, {t}): {mm:?}");
        }
    }
}

#[test]
fn compensator_baseline_weakest_bus_is_a_feeder_end() {
    let (case, scen) = inputs();
    let (m, sol) = solve(&case, &scen, Mode::Rpc);
    let w = Summary::new(&m, &sol).weakest_bus.unwrap();
    assert_eq!(w.bus, RPC_WEAKEST_BUS);
    assert!((w.voltage - RPC_WEAKEST_VOLTAGE).abs() < 1e-5, "{}", w.voltage);
    let (_, again) = solve(&case, &scen, Mode::Rpc);
    assert_eq!(again.x, sol.x);
    for s in 0..m.layout.scenarios {
        for t in 0..m.layout.hours {
            let v = voltage_report(&m, &sol.x, s, t);
            assert_eq!(v.buses[0], (1, 1.0));
            assert!(v.min_voltage >= 0.95 - 1e-6);
        }
    }
}

#[test]
fn withdrawals_net_out_pv_and_nothing_else() {
    let (case, scen) = inputs();
    let (m, sol) = solve(&case, &scen, Mode::Rpc);
    let lay = &m.layout;
    let (s, t) = (6, 11);
    let pv_bus = case.bus_index(4);
    let pv = m.pv(s, t, pv_bus);
    assert!(pv > 0.3);
    let (pd, qd) = m.load(s, t, pv_bus);
    assert!((sol.x[lay.pn(s, t, pv_bus)] - (pd - pv)).abs() < 1e-9);
    assert!((sol.x[lay.qn(s, t, pv_bus)] - qd).abs() < 1e-9);
    let plain = case.bus_index(10);
    let (pd, _) = m.load(s, t, plain);
    assert!((sol.x[lay.pn(s, t, plain)] - pd).abs() < 1e-9);
}

#[test]
fn evening_peak_congests_feeder_head_lines_before_failure() {
    // at +10 % the compensator case is already infeasible; its last feasible
    // level shows the congestion that ends the sweep
    let (case, scen) = inputs();
    let (_, over) = solve(&case, &stress_load(&scen, 1.10, (17, 24)).unwrap(), Mode::Rpc);
    assert_eq!(over.status, MipStatus::Infeasible);
    let stressed = stress_load(&scen, 1.05, (17, 24)).unwrap();
    let (m, sol) = solve(&case, &stressed, Mode::Rpc);
    assert_eq!(sol.status, MipStatus::Optimal);
    let hour20 = 19;
    let congested: Vec<usize> = (0..m.layout.scenarios)
        .flat_map(|s| congestion_report(&m, &sol.x, s, hour20))
        .filter(|b| b.congested)
        .map(|b| b.branch)
        .collect();
    assert!(!congested.is_empty());
    assert!(congested.iter().all(|&k| k <= 5), "{congested:?}");
    let report = congestion_report(&m, &sol.x, 0, hour20);
    assert!(report.windows(2).all(|w| w[0].loading >= w[1].loading));
}
