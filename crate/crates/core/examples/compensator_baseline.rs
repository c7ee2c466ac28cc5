//! Solves the bundled feeder with compensators only and checks the relaxed
//! solution against an AC power flow.

use ess_planner::analysis::{exactness, voltage_report, Summary};
use ess_planner::bnb::{solve_miqcp, MipOptions};
use ess_planner::model::{build, BuildOptions, Mode};
use ess_planner::network::load_case;
use ess_planner::powerflow::ac_mismatch;
use ess_planner::scenario::load_scenarios;

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let case = load_case(format!("{dir}/case33.json"))?;
    let days = load_scenarios(format!("{dir}/scenarios12.json"))?;
    let m = build(&case, &days, &BuildOptions { mode: Mode::Rpc, ..Default::default() })?;
    let sol = solve_miqcp(&m, &MipOptions::default());
    println!("status {:?}, {:.4} $/h in {:.1} s", sol.status, sol.objective / m.layout.hours as f64, sol.seconds);
    if !sol.has_incumbent() {
        return Ok(());
    }
    let summary = Summary::new(&m, &sol);
    if let Some(w) = &summary.weakest_bus {
        println!("weakest bus {} at {:.4} pu", w.bus, w.voltage);
    }
    let ex = exactness(&m, &sol.x, 1e-6);
    println!("cone tightness: {ex:?}");
    let (mut dw, mut dl) = (0.0f64, 0.0f64);
    for s in 0..m.layout.scenarios {
        for t in 0..m.layout.hours {
            let mm = ac_mismatch(&m, &sol.x, s, t);
            dw = dw.max(mm.max_dw);
            dl = dl.max(mm.max_dl);
        }
    }
    println!("largest gap to the AC power flow: |dw| {dw:.2e}, |dl| {dl:.2e}");
    let v = voltage_report(&m, &sol.x, 0, 19);
    println!(
        "{} at 20:00: lowest {:.4} pu at bus {}, highest {:.4} pu at bus {}",
        days.scenarios[0].id, v.min_voltage, v.min_bus, v.max_voltage, v.max_bus
    );
    Ok(())
}
