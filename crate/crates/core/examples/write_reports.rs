//! Solves the five-bus feeder in all three configurations and writes the
//! report files.
//!
//! cargo run --example write_reports [-- out_dir]

use std::path::PathBuf;

use ess_planner::analysis::{cost_comparison, write_costs, write_solution_reports};
use ess_planner::bnb::{solve_miqcp, MipOptions};
use ess_planner::model::{build, BuildOptions, Mode};
use ess_planner::network::load_case;
use ess_planner::scenario::load_scenarios;

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "feeder5_reports".into()));
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let case = load_case(format!("{dir}/feeder5.json"))?;
    let days = load_scenarios(format!("{dir}/days6.json"))?;
    let mut runs = Vec::new();
    for mode in [Mode::None, Mode::Rpc, Mode::Ess] {
        let m = build(&case, &days, &BuildOptions { mode, ..Default::default() })?;
        let sol = solve_miqcp(&m, &MipOptions::default());
        let summary = write_solution_reports(&out.join(mode.to_string()), &mode.to_string(), &m, &sol)?;
        println!("{mode}: {}", serde_json::to_string(&summary)?);
        runs.push((mode.to_string(), m, sol));
    }
    let rows: Vec<_> = runs.iter().map(|(l, m, s)| (l.clone(), m, s)).collect();
    write_costs(&out.join("costs.csv"), &cost_comparison(&rows))?;
    println!("reports in {}", out.display());
    Ok(())
}
