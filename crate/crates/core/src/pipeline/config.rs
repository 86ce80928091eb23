use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithm::{AlgorithmConfig, LagChoice};
use crate::changepoint::{ShiftCriterion, DEFAULT_MIN_SIZE_I2};
use crate::error::{Error, Result};
use crate::hmml::{GeneticConfig, Search};
use crate::panel::Aggregation;
use crate::synth::ScenarioSpec;

/// `lag = 2` or `lag = "auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LagSetting {
    Fixed(usize),
    Named(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendName {
    #[default]
    Exhaustive,
    Genetic,
}

impl std::str::FromStr for BackendName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(BackendName::Exhaustive),
            "genetic" => Ok(BackendName::Genetic),
            other => Err(Error::InvalidConfig(format!("unknown backend `{other}`"))),
        }
    }
}

/// The `[algorithm]` table of a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmSection {
    pub lag: LagSetting,
    /// Largest lag tried when `lag = "auto"`.
    pub max_lag: usize,
    pub min_size_i2: usize,
    pub threshold_y: f64,
    pub threshold_x: f64,
    pub alpha: f64,
    pub aggregation: Aggregation,
    pub backend: BackendName,
    pub shift_criterion: ShiftCriterion,
    pub all_causes: bool,
    pub genetic: GeneticConfig,
}

impl Default for AlgorithmSection {
    fn default() -> Self {
        Self {
            lag: LagSetting::Fixed(2),
            max_lag: 6,
            min_size_i2: DEFAULT_MIN_SIZE_I2,
            threshold_y: 0.0,
            threshold_x: 0.0,
            alpha: 0.05,
            aggregation: Aggregation::Unit,
            backend: BackendName::Exhaustive,
            shift_criterion: ShiftCriterion::Signed,
            all_causes: false,
            genetic: GeneticConfig::default(),
        }
    }
}

impl AlgorithmSection {
    /// The algorithm settings; the genetic search is seeded with `seed`.
    pub fn resolve(&self, seed: u64) -> Result<AlgorithmConfig> {
        let lag = match &self.lag {
            LagSetting::Fixed(d) => LagChoice::Fixed(*d),
            LagSetting::Named(s) if s == "auto" => LagChoice::Auto { max: self.max_lag },
            LagSetting::Named(s) => return Err(Error::InvalidConfig(format!("lag must be a number or \"auto\", got `{s}`"))),
        };
        let backend = match self.backend {
            BackendName::Exhaustive => Search::Exhaustive,
            BackendName::Genetic => Search::Genetic(GeneticConfig {
                seed,
                ..self.genetic.clone()
            }),
        };
        let config = AlgorithmConfig {
            lag,
            min_size_i2: self.min_size_i2,
            threshold_y: self.threshold_y,
            threshold_x: self.threshold_x,
            alpha: self.alpha,
            aggregation: self.aggregation,
            backend,
            shift_criterion: self.shift_criterion,
            all_causes: self.all_causes,
        };
        config.validate()?;
        Ok(config)
    }
}

/// A batch run read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub target: String,
    /// Analysis variables; `None` uses every input column except raw `u`, `v`
    /// and `wd` once the wind variables are derived.
    pub variables: Option<Vec<String>>,
    pub workers: Option<usize>,
    pub seed: u64,
    pub algorithm: AlgorithmSection,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            input: None,
            output_dir: PathBuf::from("out"),
            target: "ws".to_string(),
            variables: None,
            workers: None,
            seed: 0,
            algorithm: AlgorithmSection::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        // relative paths are taken from the config file's directory
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(input) = &config.input {
            config.input = Some(base.join(input));
        }
        config.output_dir = base.join(&config.output_dir);
        Ok(config)
    }
}

pub fn scenario_from_toml(text: &str) -> Result<ScenarioSpec> {
    let spec: ScenarioSpec = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec> {
    let path = path.as_ref();
    scenario_from_toml(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}
