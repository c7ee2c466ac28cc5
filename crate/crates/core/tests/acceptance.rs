//! Acceptance run: prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::conic::{random_feasible, random_infeasible};
use common::{bundled_case_path, bundled_scenarios_path, oracle_instances};
use ess_planner::analysis::{exactness, stress_sweep, StressConfig, StressTable, Summary};
use ess_planner::bnb::{brute_force, solve_miqcp, MipOptions, MipSolution, MipStatus};
use ess_planner::conic::{solve_conic, verify_certificate, ConeKind, ConicBuilder, SolveStatus, Tolerances};
use ess_planner::model::{build, BuildOptions, Mode, PlanningModel};
use ess_planner::network::load_case;
use ess_planner::powerflow::ac_mismatch;
use ess_planner::scenario::{load_scenarios, normalize_weights, ScenarioSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Storage site of the bundled case, frozen from the reference run.
const BUNDLED_SITE: usize = 30;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: usize, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("[{}] {id} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn opts(mode: Mode) -> BuildOptions {
    BuildOptions { mode, ..Default::default() }
}

fn oracle_equivalence(r: &mut Report, solved: &mut Vec<(PlanningModel, MipSolution)>) {
    let start = Instant::now();
    let mip = MipOptions::default();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut count = 0;
    for inst in oracle_instances() {
        let m = build(&inst.case, &inst.scenarios, &opts(Mode::Ess)).unwrap();
        let bnb = solve_miqcp(&m, &mip);
        let bf = brute_force(&m, 24, &mip).unwrap();
        let tol = f64::max(1e-6, mip.gap_tol * bf.objective.abs());
        let diff = (bnb.objective - bf.objective).abs();
        ok &= bnb.status == MipStatus::Optimal && bf.status == MipStatus::Optimal && diff <= tol;
        ok &= m.num_binaries() <= 24 && m.layout.ess == 1 && (2..=5).contains(&m.layout.buses);
        worst = worst.max(diff / tol);
        count += 1;
        solved.push((m, bnb));
    }
    let secs = start.elapsed().as_secs_f64();
    r.line(
        1,
        "oracle equivalence",
        ok && count >= 5 && secs < 60.0,
        format!("{count} instances, worst |bnb - enumeration| at {worst:.3} of tolerance, {secs:.1} s"),
    );
}

fn ac_consistency(r: &mut Report, solved: &[(&str, &PlanningModel, &MipSolution)]) {
    let mut ok = true;
    let mut checked = 0;
    let (mut dw, mut dl): (f64, f64) = (0.0, 0.0);
    for (label, m, sol) in solved {
        if !sol.has_incumbent() {
            ok = false;
            println!("    {label}: no solution");
            continue;
        }
        let ex = exactness(m, &sol.x, 1e-6);
        if !ex.is_tight() {
            println!("    {label}: relaxation not tight ({:.2e}), skipped", ex.max_residual);
            continue;
        }
        for s in 0..m.layout.scenarios {
            for t in 0..m.layout.hours {
                let mm = ac_mismatch(m, &sol.x, s, t);
                ok &= mm.converged;
                dw = dw.max(mm.max_dw);
                dl = dl.max(mm.max_dl);
                checked += 1;
            }
        }
    }
    r.line(
        2,
        "AC consistency",
        ok && checked > 0 && dw <= 1e-5 && dl <= 1e-5,
        format!("{checked} periods, max |dw| {dw:.2e}, max |dl| {dl:.2e}"),
    );
}

fn storage_invariants(r: &mut Report, solved: &[(&PlanningModel, &MipSolution)]) {
    let mut product: f64 = 0.0;
    let mut exclusive = true;
    let mut soe: f64 = 0.0;
    let mut cyclic: f64 = 0.0;
    let mut periods = 0;
    for (m, sol) in solved {
        let lay = &m.layout;
        let x = &sol.x;
        for c in 0..lay.ess {
            let p = &m.case.ess_candidates[c].params;
            for s in 0..lay.scenarios {
                for t in 0..lay.hours {
                    let (pc, pd) = (x[lay.pch(s, t, c)], x[lay.pdis(s, t, c)]);
                    product = product.max((pc * pd).abs());
                    let (xc, xd) = (x[lay.xch(s, t, c)], x[lay.xdis(s, t, c)]);
                    let integral = [xc, xd].iter().all(|v| *v == 0.0 || *v == 1.0);
                    exclusive &= integral && xc + xd <= 1.0;
                    let step = x[lay.soe(s, t + 1, c)] - x[lay.soe(s, t, c)] - p.eta_ch * pc + pd / p.eta_dis;
                    soe = soe.max(step.abs());
                    periods += 1;
                }
                cyclic = cyclic.max((x[lay.soe(s, 0, c)] - x[lay.soe(s, lay.hours, c)]).abs());
            }
        }
    }
    r.line(
        3,
        "complementarity",
        product == 0.0 && exclusive,
        format!("{periods} candidate periods, max p_ch*p_dis {product:e}, x_ch + x_dis <= 1: {exclusive}"),
    );
    r.line(
        4,
        "SoE conservation",
        soe <= 1e-9 && cyclic <= 1e-9,
        format!("max recursion error {soe:.2e}, max cyclic error {cyclic:.2e}"),
    );
}

fn protocol_table(r: &mut Report, none: &MipSolution, rpc: (&PlanningModel, &MipSolution), ess: (&PlanningModel, &MipSolution), gap: f64) {
    let rpc_sum = Summary::new(rpc.0, rpc.1);
    let ess_sum = Summary::new(ess.0, ess.1);
    let weakest = rpc_sum.weakest_bus.as_ref().map(|w| w.bus);
    let (ro, eo) = (rpc_sum.objective.unwrap_or(f64::NAN), ess_sum.objective.unwrap_or(f64::NAN));
    let sites = ess_sum.sited_buses.clone();
    let ok = none.status == MipStatus::Infeasible
        && rpc.1.status == MipStatus::Optimal
        && ess.1.status == MipStatus::Optimal
        && eo <= ro + gap * ro.abs()
        && sites.len() == 1
        && Some(sites[0]) == weakest
        && sites[0] == BUNDLED_SITE;
    r.line(
        5,
        "protocol direction, cost table",
        ok,
        format!(
            "none {:?}; rpc {:?} {ro:.4} $/h, weakest bus {weakest:?}; ess {:?} {eo:.4} $/h at {sites:?} ({:.1} kWh, gap {:.2e})",
            none.status, rpc.1.status, ess.1.status, ess_sum.capacity_kwh, ess.1.gap
        ),
    );
}

fn frontier(r: &mut Report, case: &ess_planner::network::NetworkCase, scen: &ScenarioSet) {
    let start = Instant::now();
    let mip = MipOptions::default();
    let sweep = |mode| {
        let cfg = StressConfig { mode, ..Default::default() };
        stress_sweep(case, scen, &cfg, &opts(mode), &mip).unwrap()
    };
    let rpc: StressTable = sweep(Mode::Rpc);
    let ess: StressTable = sweep(Mode::Ess);
    let secs = start.elapsed().as_secs_f64();
    let (rf, ef) = (rpc.last_feasible(), ess.last_feasible());
    let common = rf.zip(ef).map(|(a, b)| a.min(b));
    let at = |t: &StressTable, f: f64| -> BTreeSet<usize> {
        t.rows
            .iter()
            .find(|row| (row.factor - f).abs() < 1e-9)
            .map(|row| row.congested.iter().copied().collect())
            .unwrap_or_default()
    };
    let (subset, detail) = match common {
        Some(f) => {
            let (cr, ce) = (at(&rpc, f), at(&ess, f));
            (ce.is_subset(&cr), format!("at {f:.2} ess congests {ce:?}, rpc {cr:?}"))
        }
        None => (false, "no commonly feasible factor".into()),
    };
    let ok = matches!((rf, ef), (Some(a), Some(b)) if b >= a) && subset && secs < 1800.0;
    r.line(
        6,
        "protocol direction, stress frontier",
        ok,
        format!(
            "rpc first fails at {:?}, ess at {:?}; {detail}; {secs:.0} s",
            rpc.first_infeasible(),
            ess.first_infeasible()
        ),
    );
}

fn conic_suite(r: &mut Report) {
    let tol = Tolerances { record_dual_bound: true, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut kkt, mut duality_ok, mut solved) = (0.0f64, true, 0);
    for _ in 0..20 {
        let p = random_feasible(&mut rng);
        let sol = solve_conic(&p, &tol);
        if sol.status == SolveStatus::Optimal {
            solved += 1;
        }
        kkt = kkt.max(sol.residuals.max());
        let slack = 1e-7 * (1.0 + sol.objective.abs());
        duality_ok &= sol.log.iter().all(|rec| !rec.dual_bound.is_finite() || rec.dual_bound <= sol.objective + slack);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut certified = 0;
    for _ in 0..20 {
        let p = random_infeasible(&mut rng);
        let sol = solve_conic(&p, &Tolerances::default());
        if sol.status == SolveStatus::Infeasible
            && sol.certificate.as_ref().is_some_and(|y| verify_certificate(&p, y).is_valid(1e-6))
        {
            certified += 1;
        }
    }
    let mut b = ConicBuilder::new();
    let x = b.add_var(f64::NEG_INFINITY, f64::INFINITY);
    b.set_cost(x, 1.0, 0.0);
    b.add_row(ConeKind::NonNeg, &[(x, 1.0)], -2.0);
    b.add_row(ConeKind::NonNeg, &[(x, -1.0)], 1.0);
    let p = b.build();
    let sol = solve_conic(&p, &Tolerances::default());
    let bounds_ok = sol.status == SolveStatus::Infeasible
        && sol.certificate.as_ref().is_some_and(|y| verify_certificate(&p, y).is_valid(1e-6));
    r.line(
        7,
        "conic kernel suite",
        solved == 20 && kkt <= 1e-8 && duality_ok && certified == 20 && bounds_ok,
        format!(
            "{solved}/20 optimal, max KKT residual {kkt:.1e}, weak duality on every iterate: {duality_ok}; \
             {certified}/20 certificates verified; contradictory bounds certified: {bounds_ok}"
        ),
    );
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().is_some_and(|n| n != "run.log"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism(r: &mut Report, scen_subset: &Path) {
    let bin = env!("CARGO_BIN_EXE_ess-planner");
    let tmp = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut files = 0;
    for (mode, scen) in [("rpc", bundled_scenarios_path()), ("ess", scen_subset.to_path_buf())] {
        let mut runs = Vec::new();
        for k in 0..2 {
            let out = tmp.path().join(format!("{mode}-{k}"));
            let status = Command::new(bin)
                .args(["solve", "--mode", mode, "--case"])
                .arg(bundled_case_path())
                .arg("--scenarios")
                .arg(&scen)
                .arg("--out")
                .arg(&out)
                .output()
                .unwrap()
                .status;
            ok &= status.success();
            runs.push(read_outputs(&out));
        }
        ok &= runs[0] == runs[1] && runs[0].iter().any(|(n, _)| n == "summary.json");
        files += runs[0].len();
    }
    r.line(8, "determinism", ok, format!("{files} report files byte-identical across repeated solve runs"));
}

fn main() {
    let mut r = Report { failed: 0 };
    let mut small = Vec::new();
    oracle_equivalence(&mut r, &mut small);

    let case = load_case(bundled_case_path()).unwrap();
    let scen = load_scenarios(bundled_scenarios_path()).unwrap();
    let mip = MipOptions::default();
    let solve = |mode| {
        let m = build(&case, &scen, &opts(mode)).unwrap();
        let s = solve_miqcp(&m, &mip);
        (m, s)
    };
    let (_, none) = solve(Mode::None);
    let (rpc_m, rpc) = solve(Mode::Rpc);
    let (ess_m, ess) = solve(Mode::Ess);

    ac_consistency(&mut r, &[("rpc", &rpc_m, &rpc), ("ess", &ess_m, &ess)]);
    let mut fixtures: Vec<(&PlanningModel, &MipSolution)> = small.iter().map(|(m, s)| (m, s)).collect();
    fixtures.push((&ess_m, &ess));
    fixtures.retain(|(_, s)| s.has_incumbent());
    storage_invariants(&mut r, &fixtures);
    protocol_table(&mut r, &none, (&rpc_m, &rpc), (&ess_m, &ess), mip.gap_tol);
    frontier(&mut r, &case, &scen);
    conic_suite(&mut r);

    let tmp = tempfile::tempdir().unwrap();
    let subset = tmp.path().join("two-days.json");
    let two = normalize_weights(&ScenarioSet {
        hours_per_day: scen.hours_per_day,
        scenarios: vec![scen.scenarios[2].clone(), scen.scenarios[7].clone()],
    })
    .unwrap();
    fs::write(&subset, serde_json::to_string(&two).unwrap()).unwrap();
    determinism(&mut r, &subset);

    println!("{} of 8 criteria passed", 8 - r.failed);
    if r.failed > 0 {
        std::process::exit(1);
    }
}
