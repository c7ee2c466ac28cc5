//! Loads a case, checks that it is radial and prints its tree.
//!
//! cargo run --example inspect_case [-- path/to/case.json]

use ess_planner::network::{downstream_sets, load_case, validate_radial};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/case33.json").into());
    let case = load_case(&path)?;
    let topo = validate_radial(&case)?;
    let down = downstream_sets(&case)?;
    println!("{}", case.name);
    println!(
        "{} buses, {} branches, root {}, depth {}",
        case.buses.len(),
        case.branches.len(),
        topo.root,
        topo.depth.iter().max().unwrap_or(&0)
    );
    for id in &topo.order {
        let b = &case.buses[case.bus_index(*id)];
        println!(
            "bus {:>2}  depth {:>2}  load {:.3}+j{:.3}  children {:?}",
            id,
            topo.depth[case.bus_index(*id)],
            b.load_p_base,
            b.load_q_base,
            down[id]
        );
    }
    let gens: Vec<usize> = case.generators.iter().map(|g| g.bus).collect();
    let rpcs: Vec<usize> = case.rpcs.iter().map(|r| r.bus).collect();
    println!("generators at {gens:?}, compensators at {rpcs:?}, {} storage candidates", case.ess_candidates.len());
    Ok(())
}
