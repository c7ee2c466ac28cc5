//! Checks branch-and-bound against exhaustive enumeration of the binaries
//! on a three-hour cut of the five-bus feeder.

use ess_planner::bnb::{brute_force, solve_miqcp, MipOptions};
use ess_planner::model::{build, BuildOptions, Mode};
use ess_planner::network::load_case;
use ess_planner::scenario::{load_scenarios, ScenarioSet};

fn main() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let case = load_case(format!("{dir}/feeder5.json"))?;
    let full = load_scenarios(format!("{dir}/days6.json"))?;
    let mut day = full.scenarios[0].clone();
    day.load_scale = day.load_scale[3..6].to_vec();
    day.pv_output = day.pv_output[3..6].to_vec();
    day.weight = 1.0;
    let cut = ScenarioSet { hours_per_day: 3, scenarios: vec![day] };
    let m = build(&case, &cut, &BuildOptions { mode: Mode::Ess, ..Default::default() })?;
    let opts = MipOptions::default();
    let bnb = solve_miqcp(&m, &opts);
    let bf = brute_force(&m, 24, &opts)?;
    println!("{} binaries", m.num_binaries());
    println!("branch-and-bound {:?} {:.8} in {} nodes, {} solves", bnb.status, bnb.objective, bnb.nodes, bnb.solves);
    println!("enumeration      {:?} {:.8} in {} solves", bf.status, bf.objective, bf.solves);
    println!("difference {:.2e}", (bnb.objective - bf.objective).abs());
    Ok(())
}
