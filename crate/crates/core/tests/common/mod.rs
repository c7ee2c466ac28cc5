//! Small derived feeders shared by the integration tests.

#![allow(dead_code)]

pub mod conic;

use std::path::PathBuf;

use ess_planner::network::{parse_case, NetworkCase};
use ess_planner::scenario::{parse_scenarios, ScenarioSet};
use serde_json::json;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn bundled_case_path() -> PathBuf {
    data_dir().join("case33.json")
}

pub fn bundled_scenarios_path() -> PathBuf {
    data_dir().join("scenarios12.json")
}

/// One derived planning instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: &'static str,
    pub case: NetworkCase,
    pub scenarios: ScenarioSet,
}

/// Feeder with `parents[k]` as the parent bus id of bus `k + 2`, one
/// quadratic-cost slack unit and one storage candidate.
pub fn feeder(parents: &[usize], loads: &[(f64, f64)], candidate: usize, f_cost: f64) -> NetworkCase {
    let n = parents.len() + 1;
    assert_eq!(loads.len(), n - 1);
    let mut buses = vec![json!({"id": 1, "v_min": 0.95, "v_max": 1.05, "slack": true})];
    for (k, &(p, q)) in loads.iter().enumerate() {
        buses.push(json!({"id": k + 2, "p_load": p, "q_load": q, "v_min": 0.9, "v_max": 1.1}));
    }
    let branches: Vec<_> = parents
        .iter()
        .enumerate()
        .map(|(k, &f)| json!({"from": f, "to": k + 2, "r": 0.01 + 0.004 * k as f64, "x": 0.008 + 0.003 * k as f64, "s_max": 3.0}))
        .collect();
    let text = json!({
        "name": "derived",
        "base": {"s_base": 1.0, "v_base": 12.66},
        "buses": buses,
        "branches": branches,
        "generators": [{"bus": 1, "a": 1.0, "b": 10.0, "c": 80.0, "p_min": 0.0, "p_max": 5.0, "q_min": -3.0, "q_max": 3.0}],
        "ess_candidates": {"buses": [candidate], "params": {
            "e_max": 1.0, "p_ch_max": 0.5, "p_dis_max": 0.5, "q_inv_min": 0.3, "q_inv_max": 0.3,
            "eta_ch": 0.95, "eta_dis": 0.95, "f_cost": f_cost, "h_cost": 0.002}}
    })
    .to_string();
    parse_case(&text).expect("derived case is valid")
}

/// Equiprobable scenarios with the given hourly load multipliers and no PV.
pub fn days(profiles: &[&[f64]]) -> ScenarioSet {
    let hours = profiles[0].len();
    let scen: Vec<_> = profiles
        .iter()
        .enumerate()
        .map(|(i, lp)| json!({"id": format!("d{}", i + 1), "weight": 1.0, "load_scale": lp, "pv_output": vec![0.0; hours]}))
        .collect();
    parse_scenarios(&json!({"hours_per_day": hours, "scenarios": scen}).to_string()).expect("derived scenarios are valid")
}

/// The oracle-equivalence instances: 2 to 5 buses, one candidate and at
/// most 13 binaries each.
pub fn oracle_instances() -> Vec<Instance> {
    vec![
        Instance {
            name: "two-bus, one day of four hours",
            case: feeder(&[1], &[(0.8, 0.3)], 2, 20.0),
            scenarios: days(&[&[0.3, 0.5, 1.2, 1.0]]),
        },
        Instance {
            name: "three-bus line, six hours",
            case: feeder(&[1, 2], &[(0.4, 0.2), (0.5, 0.2)], 3, 20.0),
            scenarios: days(&[&[0.2, 0.3, 0.6, 1.1, 1.3, 0.7]]),
        },
        Instance {
            name: "four-bus fork, two days of three hours",
            case: feeder(&[1, 2, 2], &[(0.3, 0.1), (0.4, 0.2), (0.3, 0.2)], 4, 20.0),
            scenarios: days(&[&[0.3, 1.0, 1.3], &[0.2, 0.9, 1.1]]),
        },
        Instance {
            name: "five-bus feeder, five hours, costly storage",
            case: feeder(&[1, 2, 3, 2], &[(0.2, 0.1), (0.3, 0.1), (0.3, 0.2), (0.2, 0.1)], 4, 2000.0),
            scenarios: days(&[&[0.4, 0.6, 1.2, 1.4, 0.8]]),
        },
        Instance {
            name: "four-bus line, candidate mid-feeder",
            case: feeder(&[1, 2, 3], &[(0.3, 0.1), (0.3, 0.15), (0.4, 0.2)], 3, 20.0),
            scenarios: days(&[&[0.2, 0.5, 1.3], &[0.3, 1.2, 0.9]]),
        },
    ]
}

/// Four buses, two days of four hours: 17 binaries.
pub fn four_bus_two_days() -> Instance {
    Instance {
        name: "four-bus line, two days of four hours",
        case: feeder(&[1, 2, 3], &[(0.3, 0.1), (0.3, 0.15), (0.4, 0.2)], 4, 20.0),
        scenarios: days(&[&[0.2, 0.4, 1.2, 1.0], &[0.3, 0.3, 1.0, 1.3]]),
    }
}
