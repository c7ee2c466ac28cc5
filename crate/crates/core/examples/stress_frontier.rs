//! Raises the evening load of the five-bus feeder step by step until the
//! compensator and storage configurations fail.

use ess_planner::analysis::{headroom_delta, stress_sweep, StressConfig};
use ess_planner::bnb::MipOptions;
use ess_planner::model::{BuildOptions, Mode};
use ess_planner::network::load_case;
use ess_planner::scenario::load_scenarios;

fn main() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let case = load_case(format!("{dir}/feeder5.json"))?;
    let days = load_scenarios(format!("{dir}/days6.json"))?;
    let mut tables = Vec::new();
    for mode in [Mode::Rpc, Mode::Ess] {
        let cfg = StressConfig { mode, window: (4, 6), step: 0.05, max_factor: 2.0 };
        let table = stress_sweep(&case, &days, &cfg, &BuildOptions::default(), &MipOptions::default())?;
        println!("{mode}: plan {:?}", table.plan);
        for r in &table.rows {
            let cost = r.cost.map(|c| format!("{c:.4}")).unwrap_or_else(|| "-".into());
            println!("  factor {:.2}  {:?}  {cost}  congested {:?}", r.factor, r.status, r.congested);
        }
        tables.push(table);
    }
    match headroom_delta(&tables[1], &tables[0]) {
        Some(d) => println!("storage adds {:.1} % of evening headroom", 100.0 * d),
        None => println!("no feasible level in one of the configurations"),
    }
    Ok(())
}
