//! Runs an AC power flow on the bundled feeder at peak base load.

use ess_planner::model::Orientation;
use ess_planner::network::{load_case, validate_radial};
use ess_planner::powerflow::forward_backward_sweep;

fn main() -> anyhow::Result<()> {
    let case = load_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/case33.json"))?;
    let topo = validate_radial(&case)?;
    let orient = Orientation::new(&case, &topo);
    let p: Vec<f64> = case.buses.iter().map(|b| b.load_p_base).collect();
    let q: Vec<f64> = case.buses.iter().map(|b| b.load_q_base).collect();
    let res = forward_backward_sweep(&case, &orient, &p, &q, 1e-10, 100);
    println!("converged {} in {} iterations", res.converged, res.iterations);
    let (worst, w) = res
        .w
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("case has buses");
    println!("lowest voltage {:.4} pu at bus {}", w.sqrt(), case.buses[worst].id);
    let losses: f64 = case.branches.iter().zip(&res.l).map(|(br, l)| br.r * l).sum();
    let head = res.sending[orient.out[case.bus_index(case.slack_bus())][0]];
    println!("substation supplies {:.4} + j{:.4} pu, losses {:.4} pu", head.re, head.im, losses);
    Ok(())
}
