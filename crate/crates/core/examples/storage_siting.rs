//! Sites and sizes storage on the five-bus feeder and prints the dispatch.
//!
//! RUST_LOG=info shows branch-and-bound progress.

use ess_planner::analysis::{arbitrage_profile, cost_comparison, sited_candidates};
use ess_planner::bnb::{solve_miqcp, MipOptions};
use ess_planner::model::{build, BuildOptions, Mode};
use ess_planner::network::load_case;
use ess_planner::scenario::load_scenarios;

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let case = load_case(format!("{dir}/feeder5.json"))?;
    let days = load_scenarios(format!("{dir}/days6.json"))?;
    let mut models = Vec::new();
    for mode in [Mode::None, Mode::Rpc, Mode::Ess] {
        let m = build(&case, &days, &BuildOptions { mode, ..Default::default() })?;
        let sol = solve_miqcp(&m, &MipOptions::default());
        models.push((mode.to_string(), m, sol));
    }
    let rows: Vec<_> = models.iter().map(|(l, m, s)| (l.clone(), m, s)).collect();
    for row in cost_comparison(&rows) {
        let total = row.cost.map(|c| format!("{:.4} $/h", c.total)).unwrap_or_else(|| "-".into());
        println!("{:<4} {:?}  {total}  sited {:?}  {:.1} kWh", row.label, row.status, row.location, row.capacity_kwh);
    }
    let (_, m, sol) = &models[2];
    for c in sited_candidates(m, &sol.x) {
        println!("\nbus {} dispatch", m.case.ess_candidates[c].bus);
        for (s, day) in days.scenarios.iter().enumerate() {
            println!("  {} (weight {:.3})", day.id, day.weight);
            for h in arbitrage_profile(m, &sol.x, s, Some(c))? {
                println!(
                    "    hour {}  charge {:.4}  discharge {:.4}  energy {:.4} -> {:.4}",
                    h.hour, h.charge, h.discharge, h.soe_start, h.soe_end
                );
            }
        }
    }
    for line in &sol.progress {
        println!("{line}");
    }
    Ok(())
}
