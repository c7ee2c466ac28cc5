//! Loads the representative days and raises the evening load by 10 %.

use ess_planner::scenario::{load_scenarios, stress_load};

fn main() -> anyhow::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/scenarios12.json");
    let set = load_scenarios(path)?;
    let stressed = stress_load(&set, 1.10, (17, 24))?;
    println!("{} days of {} hours", set.num_scenarios(), set.hours_per_day);
    for (a, b) in set.scenarios.iter().zip(&stressed.scenarios) {
        let peak = a.load_scale.iter().cloned().fold(0.0, f64::max);
        let stressed_peak = b.load_scale.iter().cloned().fold(0.0, f64::max);
        let pv = a.pv_output.iter().cloned().fold(0.0, f64::max);
        println!(
            "{:<10} weight {:.4}  peak load {:.3} -> {:.3}  peak pv {:.3}",
            a.id, a.weight, peak, stressed_peak, pv
        );
    }
    Ok(())
}
