//! Assembles the planning program for each configuration and prints its
//! size.

use ess_planner::model::{build, BuildOptions, Mode};
use ess_planner::network::load_case;
use ess_planner::scenario::load_scenarios;

fn main() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let case = load_case(format!("{dir}/case33.json"))?;
    let days = load_scenarios(format!("{dir}/scenarios12.json"))?;
    for mode in [Mode::None, Mode::Rpc, Mode::Ess] {
        let m = build(&case, &days, &BuildOptions { mode, ..Default::default() })?;
        let cones = m.problem.cones.len();
        println!(
            "{mode:<4} columns {:>7}  rows {:>7}  cone blocks {:>6}  binaries {:>6}",
            m.problem.num_vars(),
            m.problem.num_rows(),
            cones,
            m.num_binaries()
        );
        if mode == Mode::Ess {
            let lay = &m.layout;
            for col in [lay.w(0, 19, 29), lay.l(0, 19, 0), lay.pch(0, 19, 28), lay.soe(0, 24, 28), lay.site(28)] {
                println!("  column {col:>6} is {}", lay.describe(col));
            }
            println!("  capacity cost per pu over the horizon: {:.3} $", m.capacity_cost[0]);
        }
    }
    Ok(())
}
