//! JSON scenario configuration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controllers::ControllerConfig;
use crate::error::{Error, Result};

pub const CONTROLLERS: [&str; 7] =
    ["oen_ftrl", "oen_ftrl_ap", "oen_ftrl_uap", "probing_oco", "nested_bco", "state_targeting", "linear_policy"];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossSpec {
    /// The scenario's own loss stream.
    #[default]
    Default,
    Distance {
        point: Vec<f64>,
        #[serde(default = "one")]
        scale: f64,
    },
    SquaredDistance {
        point: Vec<f64>,
        lipschitz: f64,
    },
    Linear {
        c: Vec<f64>,
    },
    /// Linear costs circling `base`.
    Drifting {
        base: Vec<f64>,
        amplitude: f64,
        period: f64,
    },
    /// Linear costs with seeded random directions of norm `scale`.
    Adversarial {
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversarySpec {
    #[default]
    None,
    RadialPush {
        alpha: f64,
        rho: f64,
        budget: f64,
    },
    BoundaryPush {
        beta: f64,
        rho: f64,
    },
    Pin1d {
        target: f64,
        budget: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    /// Numeric model parameters; unset keys take the scenario's defaults.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub controller: String,
    #[serde(default)]
    pub controller_config: ControllerConfig,
    #[serde(default)]
    pub losses: LossSpec,
    #[serde(default)]
    pub adversary: AdversarySpec,
    /// Gain matrix rows for `linear_policy`.
    #[serde(default)]
    pub linear_gain: Option<Vec<Vec<f64>>>,
    pub horizon: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output: Option<String>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ScenarioConfig {
    pub fn new(scenario: &str, controller: &str, horizon: usize) -> Self {
        Self {
            scenario: scenario.into(),
            params: BTreeMap::new(),
            controller: controller.into(),
            controller_config: ControllerConfig::default(),
            losses: LossSpec::Default,
            adversary: AdversarySpec::None,
            linear_gain: None,
            horizon,
            seeds: default_seeds(),
            output: None,
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config { key: offending_key(&e), reason: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !CONTROLLERS.contains(&self.controller.as_str()) {
            return Err(Error::Config {
                key: "controller".into(),
                reason: format!("unknown controller '{}'; expected one of {}", self.controller, CONTROLLERS.join(", ")),
            });
        }
        if self.seeds.is_empty() {
            return Err(Error::Config { key: "seeds".into(), reason: "need at least one seed".into() });
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON (sorted keys, defaults filled in).
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex(&Sha256::digest(canonical.as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

// serde_json reports unknown fields as "unknown field `name`, expected ...".
fn offending_key(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for marker in ["unknown field `", "missing field `", "unknown variant `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(key) = rest.split('`').next() {
                return key.to_string();
            }
        }
    }
    "<document>".into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err = ScenarioConfig::from_json(r#"{"scenario":"prop2","controller":"oen_ftrl","horizon":5,"bogus":1}"#)
            .unwrap_err();
        match err {
            Error::Config { key, .. } => assert_eq!(key, "bogus"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn defaults_hash_like_explicit_values() {
        let a = ScenarioConfig::from_json(r#"{"scenario":"prop2","controller":"oen_ftrl","horizon":5}"#).unwrap();
        let b = ScenarioConfig::from_json(
            r#"{"horizon":5,"controller":"oen_ftrl","scenario":"prop2","seeds":[0],"losses":{"type":"default"}}"#,
        )
        .unwrap();
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn unknown_controller_rejected() {
        let err = ScenarioConfig::from_json(r#"{"scenario":"prop2","controller":"mpc","horizon":5}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "controller"));
    }
}
