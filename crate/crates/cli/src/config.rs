//! Run configuration: scenario, solver settings, and output options.

use std::path::{Path, PathBuf};

use hierlqr::sim::{FormationScenario, SolverSettings};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const PRESETS: [&str; 2] = ["paper-4groups", "paper-4groups-10x"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub scenario: FormationScenario,
    pub solver: SolverSettings,
    /// Coupling scales evaluated in the cost-ratio table of `compare`.
    pub compare_scales: Vec<f64>,
    /// 1-based `(group, agent)` pairs whose inputs are plotted.
    pub input_traces: Vec<[usize; 2]>,
    pub out_dir: PathBuf,
}

impl ScenarioConfig {
    pub fn preset(name: &str) -> Result<Self, CliError> {
        let scale = match name {
            "paper-4groups" => 0.1,
            "paper-4groups-10x" => 1.0,
            _ => {
                return Err(CliError::Config(format!(
                    "unknown preset `{name}` (available: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(ScenarioConfig {
            name: name.to_string(),
            scenario: FormationScenario::paper(scale),
            solver: SolverSettings::default(),
            compare_scales: vec![0.1, 1.0],
            input_traces: vec![[1, 1], [3, 3]],
            out_dir: PathBuf::from("out"),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.scenario
            .check()
            .map_err(|e| CliError::Config(format!("scenario: {e}")))?;
        let s = &self.solver;
        if !(s.care_tol > 0.0) || !(s.adp_eps > 0.0) || s.max_iters == 0 {
            return Err(CliError::Config(
                "solver: care_tol and adp_eps must be positive and max_iters at least 1".into(),
            ));
        }
        if self.compare_scales.is_empty() || self.compare_scales.iter().any(|x| !(*x >= 0.0)) {
            return Err(CliError::Config("compare_scales: need at least one non-negative scale".into()));
        }
        for &[g, a] in &self.input_traces {
            let ok = g >= 1 && g <= self.scenario.groups.len() && a >= 1 && a <= self.scenario.groups[g - 1].size;
            if !ok {
                return Err(CliError::Config(format!(
                    "input_traces: no agent {a} in group {g} (indices are 1-based)"
                )));
            }
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, seed: Option<u64>, q_tilde_scale: Option<f64>, out: Option<PathBuf>) -> Result<(), CliError> {
        if let Some(seed) = seed {
            self.scenario.seed = seed;
        }
        if let Some(scale) = q_tilde_scale {
            self.scenario.q_tilde_scale = scale;
        }
        if let Some(out) = out {
            self.out_dir = out;
        }
        self.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in PRESETS {
            let cfg = ScenarioConfig::preset(name).unwrap();
            cfg.validate().unwrap();
            let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(ScenarioConfig::from_json(&back.to_json()).unwrap(), back);
        }
        assert_eq!(ScenarioConfig::preset("paper-4groups-10x").unwrap().scenario.q_tilde_scale, 1.0);
        assert!(ScenarioConfig::preset("nope").is_err());
    }

    #[test]
    fn unknown_and_missing_fields_are_named() {
        let cfg = ScenarioConfig::preset("paper-4groups").unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
        v["scenario"]["horizn"] = serde_json::json!(40.0);
        let err = ScenarioConfig::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("horizn"), "{err}");

        let mut v: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
        v["solver"].as_object_mut().unwrap().remove("adp_eps");
        let err = ScenarioConfig::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("adp_eps"), "{err}");

        let err = ScenarioConfig::from_json("{ \"name\": 3 }").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut cfg = ScenarioConfig::preset("paper-4groups").unwrap();
        cfg.input_traces.push([2, 5]);
        assert!(cfg.validate().unwrap_err().to_string().contains("input_traces"));

        let mut cfg = ScenarioConfig::preset("paper-4groups").unwrap();
        cfg.scenario.sample_period = 0.0123;
        assert!(cfg.validate().is_err());

        let mut cfg = ScenarioConfig::preset("paper-4groups").unwrap();
        assert!(cfg.apply_overrides(None, Some(-1.0), None).is_err());
        let mut cfg = ScenarioConfig::preset("paper-4groups").unwrap();
        cfg.apply_overrides(Some(9), Some(0.5), Some("x".into())).unwrap();
        assert_eq!((cfg.scenario.seed, cfg.scenario.q_tilde_scale), (9, 0.5));
        assert_eq!(cfg.out_dir, PathBuf::from("x"));
    }
}
