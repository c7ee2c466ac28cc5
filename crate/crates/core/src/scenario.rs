//! Weighted representative days with hourly load multipliers and PV output.

use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("scenario {id}: {field} has {len} hourly values, expected {expected} (first missing hour index {len})")]
    Shape {
        id: String,
        field: &'static str,
        len: usize,
        expected: usize,
    },
    #[error("scenario {id}, hour index {hour}: {message}")]
    Value { id: String, hour: usize, message: String },
    #[error("scenario {id}: weight must be finite and nonnegative")]
    Weight { id: String },
    #[error("scenario weights are all zero")]
    ZeroWeights,
    #[error("scenario set is empty")]
    Empty,
    #[error("invalid stress window {first}-{last} for {hours} hours")]
    Window { first: usize, last: usize, hours: usize },
    #[error("stress factor must be positive and finite, got {0}")]
    Factor(f64),
}

impl From<serde_json::Error> for ScenarioError {
    fn from(e: serde_json::Error) -> Self {
        ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub weight: f64,
    /// Multiplier on every bus's base load, per hour.
    pub load_scale: Vec<f64>,
    /// Per-unit PV output, per hour.
    pub pv_output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSet {
    #[serde(default = "default_hours")]
    pub hours_per_day: usize,
    pub scenarios: Vec<Scenario>,
}

fn default_hours() -> usize {
    24
}

/// Reads, validates and normalizes a scenario file.
pub fn load_scenarios(path: impl AsRef<Path>) -> Result<ScenarioSet, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenarios(&text)
}

pub fn parse_scenarios(text: &str) -> Result<ScenarioSet, ScenarioError> {
    let set: ScenarioSet = serde_json::from_str(text)?;
    set.validate()?;
    normalize_weights(&set)
}

impl ScenarioSet {
    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.scenarios.is_empty() {
            return Err(ScenarioError::Empty);
        }
        let h = self.hours_per_day;
        for s in &self.scenarios {
            if !(s.weight.is_finite() && s.weight >= 0.0) {
                return Err(ScenarioError::Weight { id: s.id.clone() });
            }
            for (field, v) in [("load_scale", &s.load_scale), ("pv_output", &s.pv_output)] {
                if v.len() != h {
                    return Err(ScenarioError::Shape {
                        id: s.id.clone(),
                        field,
                        len: v.len(),
                        expected: h,
                    });
                }
                if let Some(t) = v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(ScenarioError::Value {
                        id: s.id.clone(),
                        hour: t,
                        message: format!("{field} must be finite and nonnegative"),
                    });
                }
            }
        }
        Ok(())
    }

    /// One scenario with every multiplier equal to `load` and PV equal to
    /// `pv`.
    pub fn flat(hours: usize, load: f64, pv: f64) -> Self {
        ScenarioSet {
            hours_per_day: hours,
            scenarios: vec![Scenario {
                id: "flat".into(),
                weight: 1.0,
                load_scale: vec![load; hours],
                pv_output: vec![pv; hours],
            }],
        }
    }
}

/// Scales weights to sum to one.
pub fn normalize_weights(set: &ScenarioSet) -> Result<ScenarioSet, ScenarioError> {
    let total: f64 = set.scenarios.iter().map(|s| s.weight).sum();
    if !(total > 0.0) {
        return Err(ScenarioError::ZeroWeights);
    }
    let mut out = set.clone();
    for s in &mut out.scenarios {
        s.weight /= total;
    }
    Ok(out)
}

/// Multiplies `load_scale` by `factor` for hours `first..=last` (1-based).
pub fn stress_load(set: &ScenarioSet, factor: f64, window: (usize, usize)) -> Result<ScenarioSet, ScenarioError> {
    let (first, last) = window;
    let hours = set.hours_per_day;
    if first < 1 || first > last || last > hours {
        return Err(ScenarioError::Window { first, last, hours });
    }
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(ScenarioError::Factor(factor));
    }
    let mut out = set.clone();
    for s in &mut out.scenarios {
        for v in &mut s.load_scale[first - 1..last] {
            *v *= factor;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set_with_weights(w: &[f64]) -> ScenarioSet {
        ScenarioSet {
            hours_per_day: 2,
            scenarios: w
                .iter()
                .enumerate()
                .map(|(k, &weight)| Scenario {
                    id: format!("s{k}"),
                    weight,
                    load_scale: vec![1.0, 0.5],
                    pv_output: vec![0.0, 0.2],
                })
                .collect(),
        }
    }

    #[test]
    fn uniform_weights_normalize_to_a_twelfth() {
        let s = normalize_weights(&set_with_weights(&[2.0; 12])).unwrap();
        for sc in &s.scenarios {
            assert!((sc.weight - 1.0 / 12.0).abs() < 1e-15);
        }
    }

    #[test]
    fn proportional_weights() {
        let s = normalize_weights(&set_with_weights(&[1.0, 3.0])).unwrap();
        assert_eq!(s.scenarios[0].weight, 0.25);
        assert_eq!(s.scenarios[1].weight, 0.75);
    }

    #[test]
    fn zero_weights_are_rejected() {
        assert!(matches!(
            normalize_weights(&set_with_weights(&[0.0, 0.0])),
            Err(ScenarioError::ZeroWeights)
        ));
    }

    #[test]
    fn short_profile_names_scenario_and_hour() {
        let load: Vec<String> = (0..23).map(|_| "1.0".to_string()).collect();
        let pv: Vec<String> = (0..24).map(|_| "0.0".to_string()).collect();
        let text = format!(
            r#"{{"scenarios": [{{"id": "winter-1", "weight": 1, "load_scale": [{}], "pv_output": [{}]}}]}}"#,
            load.join(","),
            pv.join(",")
        );
        let err = parse_scenarios(&text).unwrap_err();
        match &err {
            ScenarioError::Shape { id, len, .. } => {
                assert_eq!(id, "winter-1");
                assert_eq!(*len, 23);
            }
            other => panic!("expected a shape error, got {other:?}"),
        }
        assert!(err.to_string().contains("hour index 23"));
    }

    #[test]
    fn missing_weight_is_a_parse_error() {
        let text = r#"{"scenarios": [{"id": "a", "load_scale": [1], "pv_output": [0]}]}"#;
        assert!(matches!(parse_scenarios(text), Err(ScenarioError::Parse { .. })));
    }

    #[test]
    fn stress_touches_only_the_window() {
        let set = ScenarioSet::flat(24, 1.0, 0.0);
        let s = stress_load(&set, 1.10, (17, 24)).unwrap();
        let v = &s.scenarios[0].load_scale;
        assert!(v[..16].iter().all(|&x| x == 1.0));
        assert!(v[16..].iter().all(|&x| x == 1.10));
        assert_eq!(stress_load(&set, 1.0, (17, 24)).unwrap(), set);
        assert!(stress_load(&set, 1.1, (0, 24)).is_err());
        assert!(stress_load(&set, 1.1, (17, 25)).is_err());
        assert!(stress_load(&set, 0.0, (17, 24)).is_err());
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(w in prop::collection::vec(0.0f64..10.0, 1..8)) {
            prop_assume!(w.iter().sum::<f64>() > 1e-6);
            let once = normalize_weights(&set_with_weights(&w)).unwrap();
            let twice = normalize_weights(&once).unwrap();
            for (a, b) in once.scenarios.iter().zip(&twice.scenarios) {
                prop_assert!((a.weight - b.weight).abs() <= 1e-15);
            }
            let total: f64 = once.scenarios.iter().map(|s| s.weight).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn stress_composes_multiplicatively(f1 in 0.5f64..2.0, f2 in 0.5f64..2.0, a in 1usize..=24, len in 0usize..24) {
            let b = (a + len).min(24);
            let mut set = ScenarioSet::flat(24, 1.0, 0.0);
            set.scenarios[0].load_scale = (0..24).map(|t| 0.5 + 0.03 * t as f64).collect();
            let two = stress_load(&stress_load(&set, f1, (a, b)).unwrap(), f2, (a, b)).unwrap();
            let one = stress_load(&set, f1 * f2, (a, b)).unwrap();
            for (x, y) in two.scenarios[0].load_scale.iter().zip(&one.scenarios[0].load_scale) {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
    }
}
