//! Optional TOML configuration: shared keys at the top level plus one table
//! per subcommand.  Unknown keys are rejected.  Command-line flags override
//! file values; file values override built-in defaults.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Option<String>,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub sphere: SphereSection,
    #[serde(default)]
    pub pvclust: PvclustSection,
    #[serde(default, rename = "mixture-sim")]
    pub mixture_sim: MixtureSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub k: Option<usize>,
    pub tau2_h: Option<f64>,
    pub tau2_s: Option<f64>,
    pub models: Option<Vec<String>>,
    pub complement: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub region: Option<String>,
    pub sign: Option<i8>,
    pub a: Option<f64>,
    pub alpha: Option<f64>,
    pub methods: Option<Vec<String>>,
    pub theta_max: Option<f64>,
    pub theta_step: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereSection {
    pub gammas: Option<Vec<f64>>,
    pub dims: Option<Vec<u32>>,
    pub alpha: Option<f64>,
    pub methods: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvclustSection {
    pub metric: Option<String>,
    pub b: Option<u64>,
    pub k: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSection {
    pub a: Option<f64>,
    pub n: Option<usize>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}
