//! Branch-and-bound against exhaustive enumeration and other independent
//! references on small derived feeders.

mod common;

use common::{days, feeder, four_bus_two_days, oracle_instances};
use ess_planner::analysis::{arbitrage_profile, sited_candidates};
use ess_planner::bnb::{brute_force, solve_miqcp, MipOptions, MipStatus};
use ess_planner::conic::solve_conic;
use ess_planner::model::{build, BuildOptions, Mode};

fn ess() -> BuildOptions {
    BuildOptions { mode: Mode::Ess, ..Default::default() }
}

#[test]
fn branch_and_bound_matches_enumeration() {
    let opts = MipOptions::default();
    for inst in oracle_instances() {
        let m = build(&inst.case, &inst.scenarios, &ess()).unwrap();
        assert!(m.num_binaries() <= 24, "{}", inst.name);
        let bnb = solve_miqcp(&m, &opts);
        let bf = brute_force(&m, 24, &opts).unwrap();
        assert_eq!(bnb.status, MipStatus::Optimal, "{}", inst.name);
        assert_eq!(bf.status, MipStatus::Optimal, "{}", inst.name);
        let tol = f64::max(1e-6, opts.gap_tol * bf.objective.abs());
        assert!(
            (bnb.objective - bf.objective).abs() <= tol,
            "{}: bnb {} brute force {}",
            inst.name,
            bnb.objective,
            bf.objective
        );
    }
}

#[test]
fn four_bus_two_day_instance_matches_enumeration() {
    let inst = four_bus_two_days();
    let m = build(&inst.case, &inst.scenarios, &ess()).unwrap();
    assert_eq!(m.num_binaries(), 17);
    let opts = MipOptions::default();
    let bnb = solve_miqcp(&m, &opts);
    let bf = brute_force(&m, 17, &opts).unwrap();
    assert_eq!(bnb.status, MipStatus::Optimal);
    assert!((bnb.objective - bf.objective).abs() <= 1e-6 * (1.0 + bf.objective.abs()));
    assert_eq!(sited_candidates(&m, &bnb.x), sited_candidates(&m, &bf.x));
}

#[test]
fn one_period_enumerates_at_most_six_patterns() {
    let case = feeder(&[1], &[(0.5, 0.2)], 2, 20.0);
    let m = build(&case, &days(&[&[1.0]]), &ess()).unwrap();
    assert_eq!(m.num_binaries(), 3);
    let bf = brute_force(&m, 3, &MipOptions::default()).unwrap();
    assert!(bf.solves <= 6);
}

#[test]
fn enumeration_refuses_large_models() {
    let case = feeder(&[1], &[(0.5, 0.2)], 2, 20.0);
    let m = build(&case, &days(&[&[1.0; 24]]), &ess()).unwrap();
    assert!(brute_force(&m, 24, &MipOptions::default()).is_err());
}

#[test]
fn models_without_binaries_return_the_conic_optimum() {
    let case = feeder(&[1, 2], &[(0.4, 0.2), (0.5, 0.2)], 3, 20.0);
    let scen = days(&[&[0.5, 1.0, 0.8]]);
    let m = build(&case, &scen, &BuildOptions { mode: Mode::Rpc, ..Default::default() }).unwrap();
    assert_eq!(m.num_binaries(), 0);
    let mip = solve_miqcp(&m, &MipOptions::default());
    let direct = solve_conic(&m.problem, &MipOptions::default().conic);
    assert_eq!(mip.status, MipStatus::Optimal);
    assert_eq!(mip.nodes, 1);
    assert!((mip.objective - direct.objective).abs() <= 1e-9 * (1.0 + direct.objective.abs()));
}

#[test]
fn storage_charges_in_cheap_hours_and_discharges_in_dear_ones() {
    let case = feeder(&[1, 2, 3], &[(0.3, 0.1), (0.3, 0.15), (0.4, 0.2)], 4, 20.0);
    let profile = [0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 1.3, 1.4, 1.4, 1.3];
    let m = build(&case, &days(&[&profile]), &ess()).unwrap();
    let sol = solve_miqcp(&m, &MipOptions::default());
    assert_eq!(sol.status, MipStatus::Optimal);
    assert_eq!(sited_candidates(&m, &sol.x), vec![0]);
    let prof = arbitrage_profile(&m, &sol.x, 0, None).unwrap();
    let charged: f64 = prof[..6].iter().map(|h| h.charge).sum();
    let discharged: f64 = prof[6..].iter().map(|h| h.discharge).sum();
    assert!(charged > 0.1, "charged {charged}");
    assert!(discharged > 0.1, "discharged {discharged}");
    assert!(prof[6..].iter().all(|h| h.charge <= 1e-9));
    assert!(prof[..6].iter().all(|h| h.discharge <= 1e-9));
}

#[test]
fn flat_prices_leave_a_lossy_store_idle() {
    let case = feeder(&[1, 2], &[(0.4, 0.2), (0.5, 0.2)], 3, 20.0);
    let m = build(&case, &days(&[&[0.8; 4]]), &ess()).unwrap();
    let sol = solve_miqcp(&m, &MipOptions::default());
    assert_eq!(sol.status, MipStatus::Optimal);
    let lay = &m.layout;
    for t in 0..lay.hours {
        assert!(sol.x[lay.pch(0, t, 0)] <= 1e-7);
        assert!(sol.x[lay.pdis(0, t, 0)] <= 1e-7);
    }
}

#[test]
fn adding_a_candidate_never_raises_the_optimum() {
    for inst in oracle_instances() {
        let with = solve_miqcp(&build(&inst.case, &inst.scenarios, &ess()).unwrap(), &MipOptions::default());
        let none = BuildOptions { mode: Mode::None, ..Default::default() };
        let without = solve_miqcp(&build(&inst.case, &inst.scenarios, &none).unwrap(), &MipOptions::default());
        assert!(with.objective <= without.objective + 1e-6 * (1.0 + without.objective.abs()), "{}", inst.name);
    }
}
