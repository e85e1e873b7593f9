use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::{ComponentCountPrior, ConcentrationSpec};
use crate::sampler::SamplerConfig;

/// Component family selected in a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelTag {
    #[serde(rename = "uvn-rg")]
    UnivariateNormal,
    #[serde(rename = "mvn-hier")]
    MultivariateNormal,
    #[serde(rename = "lca")]
    LatentClass,
}

impl KernelTag {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uvn-rg" => Ok(Self::UnivariateNormal),
            "mvn-hier" => Ok(Self::MultivariateNormal),
            "lca" => Ok(Self::LatentClass),
            other => Err(Error::Config(format!(
                "unknown kernel '{other}' (expected uvn-rg, mvn-hier or lca)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::UnivariateNormal => "uvn-rg",
            Self::MultivariateNormal => "mvn-hier",
            Self::LatentClass => "lca",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    pub kernel: KernelTag,
    /// Column with reference labels, excluded from the observations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_column: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Write `alloc.bin` with the allocations of every retained draw.
    pub allocations: bool,
    /// Write `theta.csv` with the filled-component parameters of every
    /// retained draw.
    pub parameters: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            allocations: true,
            parameters: true,
        }
    }
}

/// Complete description of a sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub prior_k: ComponentCountPrior,
    pub concentration: ConcentrationSpec,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default = "one")]
    pub chains: usize,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        self.concentration
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        if self.data.kernel == KernelTag::LatentClass && self.data.truth_column.is_some() {
            return Err(Error::Config(
                "reference labels are not supported for categorical data".into(),
            ));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses either a bare configuration or a run manifest (whose `config`
    /// field holds the resolved configuration).
    pub fn from_json_str(s: &str) -> Result<Self> {
        let mut v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(inner) = v.get_mut("config") {
            v = inner.take();
        }
        let cfg: Self = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a `.toml` configuration or a `.json` configuration/manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let res = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        };
        res.map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
chains = 1

[data]
path = "galaxy.csv"
kernel = "uvn-rg"

[prior_k]
family = "uniform"
params = [30]

[concentration]
mode = "static_fixed"
gamma = 1.0

[sampler]
iterations = 500
burn_in = 50
seed = 3
"#;

    #[test]
    fn parses_toml() {
        let cfg = RunConfig::from_toml_str(EXAMPLE).unwrap();
        assert_eq!(cfg.data.kernel, KernelTag::UnivariateNormal);
        assert_eq!(cfg.prior_k, ComponentCountPrior::uniform(30).unwrap());
        assert_eq!(cfg.sampler.iterations, 500);
        assert_eq!(cfg.sampler.k_max, 100);
        assert!(cfg.output.allocations);
    }

    #[test]
    fn json_round_trip_and_manifest_form() {
        let cfg = RunConfig::from_toml_str(EXAMPLE).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json_str(&json).unwrap(), cfg);
        let manifest = format!(r#"{{"version":"x","config":{json}}}"#);
        assert_eq!(RunConfig::from_json_str(&manifest).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let bad_prior = EXAMPLE.replace("params = [30]", "params = [0]");
        assert!(matches!(RunConfig::from_toml_str(&bad_prior), Err(Error::Config(_))));
        let bad_kernel = EXAMPLE.replace("uvn-rg", "gauss");
        assert!(RunConfig::from_toml_str(&bad_kernel).is_err());
        let bad_thin = EXAMPLE.replace("seed = 3", "thin = 0");
        assert!(RunConfig::from_toml_str(&bad_thin).is_err());
        let unknown = EXAMPLE.replace("seed = 3", "sed = 3");
        assert!(RunConfig::from_toml_str(&unknown).is_err());
    }
}
