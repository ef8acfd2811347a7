//! On-disk formats: scenario files, replay scripts and run configs.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tamp_core::bench::ScenarioSpec;
use tamp_core::llm::ScriptedBackend;

use crate::http::HttpSettings;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub format: u32,
    pub scenario: ScenarioSpec,
}

pub fn scenario_to_toml(spec: &ScenarioSpec) -> Result<String> {
    let file = ScenarioFile {
        format: FORMAT_VERSION,
        scenario: spec.clone(),
    };
    Ok(toml::to_string(&file)?)
}

pub fn scenario_from_toml(text: &str) -> Result<ScenarioSpec> {
    let file: ScenarioFile = toml::from_str(text).context("parsing scenario file")?;
    if file.format != FORMAT_VERSION {
        bail!("unsupported scenario format {} (expected {FORMAT_VERSION})", file.format);
    }
    file.scenario.validate()?;
    Ok(file.scenario)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    scenario_from_toml(&text).with_context(|| format!("in {}", path.display()))
}

/// One completion per non-empty line. A JSON string line is the raw
/// completion; any other JSON value is re-serialized as the completion.
pub fn parse_replay(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(line).with_context(|| format!("replay line {}", i + 1))?;
        out.push(match v {
            Value::String(s) => s,
            other => other.to_string(),
        });
    }
    Ok(out)
}

pub fn load_replay(path: &Path) -> Result<ScriptedBackend> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ScriptedBackend::new(parse_replay(&text)?))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RrtSection {
    pub step_size: Option<f64>,
    pub goal_bias: Option<f64>,
    pub max_iterations: Option<usize>,
}

/// Run configuration file. Every field is optional; command-line flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub format: Option<u32>,
    pub scenarios: Option<Vec<String>>,
    pub variants: Option<Vec<String>>,
    pub backend: Option<String>,
    pub trials: Option<u32>,
    pub seed: Option<u64>,
    pub n_max: Option<u32>,
    pub trace_k: Option<usize>,
    pub out: Option<String>,
    pub rrt: RrtSection,
    pub http: Option<HttpSettings>,
}

pub fn config_from_toml(text: &str) -> Result<ConfigFile> {
    let cfg: ConfigFile = toml::from_str(text).context("parsing config file")?;
    match cfg.format {
        Some(FORMAT_VERSION) | None => Ok(cfg),
        Some(v) => bail!("unsupported config format {v} (expected {FORMAT_VERSION})"),
    }
}

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    config_from_toml(&text).with_context(|| format!("in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tamp_core::bench::{make_setting2, BasketSize};

    #[test]
    fn scenario_round_trips_through_toml() {
        let spec = make_setting2(BasketSize::Large, 7).unwrap();
        let text = scenario_to_toml(&spec).unwrap();
        assert!(text.starts_with("format = 1"));
        assert_eq!(scenario_from_toml(&text).unwrap(), spec);
    }

    #[test]
    fn rejects_other_versions() {
        let spec = make_setting2(BasketSize::Small, 7).unwrap();
        let text = scenario_to_toml(&spec).unwrap().replacen("format = 1", "format = 2", 1);
        assert!(scenario_from_toml(&text).is_err());
        assert!(config_from_toml("format = 3").is_err());
    }

    #[test]
    fn replay_lines() {
        let text = "\"raw text\"\n\n{\"Reasoning\": \"r\", \"Full Plan\": []}\n";
        let lines = parse_replay(text).unwrap();
        assert_eq!(lines, ["raw text", r#"{"Full Plan":[],"Reasoning":"r"}"#]);
        assert!(parse_replay("not json").is_err());
    }

    #[test]
    fn config_fields() {
        let cfg = config_from_toml(
            "format = 1\nscenarios = [\"setting1-easy\"]\ntrials = 3\n[rrt]\nstep_size = 0.02\n[http]\nmodel = \"m\"\n",
        )
        .unwrap();
        assert_eq!(cfg.trials, Some(3));
        assert_eq!(cfg.rrt.step_size, Some(0.02));
        let http = cfg.http.unwrap();
        assert_eq!(http.model, "m");
        assert_eq!(http.max_attempts, 3);
        assert!(config_from_toml("tirals = 3").is_err());
    }
}
