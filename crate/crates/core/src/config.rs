//! JSON system description shared by the library and the command line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::MapSpec;
use crate::rds::{PerturbationSpec, RdsConfig};

/// `{"f": MapSpec, "g": MapSpec, "p": 0.5, "perturbation": {...}, "b": ...}`.
/// Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfigFile {
    pub f: MapSpec,
    pub g: MapSpec,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

impl SystemConfigFile {
    /// Parses a document; serde's message carries the line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is serializable")
    }

    pub fn build(&self) -> Result<RdsConfig> {
        RdsConfig::new(self.f.clone(), self.g.clone(), self.p, self.perturbation, self.b)
    }

    /// The fully resolved description of `config` (explicit common bound).
    pub fn resolved(config: &RdsConfig) -> Result<Self> {
        let strip = |m: &MapSpec| -> Result<MapSpec> {
            // serialize the shared bound once at the top level
            let v = serde_json::to_value(m).map_err(|e| Error::Serialization(e.to_string()))?;
            let mut v = v;
            v["b"] = serde_json::Value::Null;
            serde_json::from_value(v).map_err(|e| Error::Serialization(e.to_string()))
        };
        Ok(Self {
            f: strip(config.f())?,
            g: strip(config.g())?,
            p: config.p(),
            perturbation: config.perturbation().copied(),
            b: Some(config.bound()),
        })
    }
}
