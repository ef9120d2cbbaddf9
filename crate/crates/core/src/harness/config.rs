use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::hjprox::{DeltaSchedule, DEFAULT_SAMPLES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Lasso,
    Multitask,
    Fused,
    SparseGroup,
    Tv,
}

impl Experiment {
    pub const ALL: [Experiment; 5] =
        [Experiment::Lasso, Experiment::Multitask, Experiment::Fused, Experiment::SparseGroup, Experiment::Tv];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Lasso => "lasso",
            Experiment::Multitask => "multitask",
            Experiment::Fused => "fused",
            Experiment::SparseGroup => "sparse_group",
            Experiment::Tv => "tv",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::Lasso => "LASSO via proximal gradient descent",
            Experiment::Multitask => "multitask regression (nuclear + row/column group penalties) via Douglas-Rachford",
            Experiment::Fused => "third-order fused LASSO on a Doppler signal via Douglas-Rachford",
            Experiment::SparseGroup => "sparse group LASSO via Davis-Yin three-operator splitting",
            Experiment::Tv => "isotropic TV deblurring via PDHG",
        }
    }

    pub fn solver(self) -> &'static str {
        match self {
            Experiment::Lasso => "pgd",
            Experiment::Multitask | Experiment::Fused => "drs",
            Experiment::SparseGroup => "dys",
            Experiment::Tv => "pdhg",
        }
    }

    pub fn default_iters(self) -> usize {
        match self {
            Experiment::Lasso => 5000,
            Experiment::Multitask => 300,
            Experiment::Fused => 2000,
            Experiment::SparseGroup => 3000,
            Experiment::Tv => 1000,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}' (expected one of lasso, multitask, fused, sparse_group, tv)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Exact,
    Hj,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Exact => "exact",
            Arm::Hj => "hj",
        }
    }
}

/// How the HJ sampler treats a penalty that splits into independent blocks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Sample each block separately (same limit operator, lower variance).
    #[default]
    Separable,
    /// Sample all coordinates jointly.
    Joint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HjConfig {
    pub n_samples: usize,
    pub delta0: f64,
    pub exponent: f64,
    pub sampling: Sampling,
}

impl Default for HjConfig {
    fn default() -> Self {
        let s = DeltaSchedule::default();
        Self { n_samples: DEFAULT_SAMPLES, delta0: s.delta0, exponent: s.exponent, sampling: Sampling::Separable }
    }
}

impl HjConfig {
    pub fn schedule(&self) -> DeltaSchedule {
        DeltaSchedule { delta0: self.delta0, exponent: self.exponent }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmSettings {
    /// Constant relaxation `λ`.
    pub relaxation: f64,
    pub gamma: f64,
    pub stop_residual: f64,
}

impl Default for KmSettings {
    fn default() -> Self {
        Self { relaxation: 1.0, gamma: 0.5, stop_residual: 0.0 }
    }
}

/// Step sizes; missing entries are filled with experiment defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    pub t: Option<f64>,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
}

/// One experiment run. Serialized as a single JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default = "one")]
    pub size_scale: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub iters: Option<usize>,
    #[serde(default = "both_arms")]
    pub arms: Vec<Arm>,
    #[serde(default)]
    pub steps: StepConfig,
    #[serde(default)]
    pub km: KmSettings,
    #[serde(default)]
    pub hj: HjConfig,
    /// Overrides of the experiment's generator settings.
    #[serde(default = "empty_object")]
    pub problem: Value,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

fn both_arms() -> Vec<Arm> {
    vec![Arm::Exact, Arm::Hj]
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            size_scale: 1.0,
            seed: 0,
            iters: None,
            arms: both_arms(),
            steps: StepConfig::default(),
            km: KmSettings::default(),
            hj: HjConfig::default(),
            problem: empty_object(),
            output_dir: None,
        }
    }

    pub fn iterations(&self) -> usize {
        self.iters.unwrap_or_else(|| self.experiment.default_iters())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        Self::from_value(value)
    }

    /// Accepts a run configuration or a manifest written by a previous run
    /// (its `config` entry is used).
    pub fn from_value(value: Value) -> Result<Self> {
        let value = match value {
            Value::Object(mut m) if m.contains_key("config") && m.contains_key("artifact") => {
                m.remove("config").unwrap_or(Value::Null)
            }
            v => v,
        };
        serde_json::from_value(value).map_err(|e| Error::Config(format!("invalid run configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Parses the `problem` overrides into the experiment's settings type.
    pub fn problem_spec<T: serde::de::DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.problem.clone())
            .map_err(|e| Error::Config(format!("invalid problem settings for {}: {e}", self.experiment)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::from_json(r#"{"experiment": "sparse_group"}"#).unwrap();
        assert_eq!(cfg.experiment, Experiment::SparseGroup);
        assert_eq!(cfg.arms, vec![Arm::Exact, Arm::Hj]);
        assert_eq!(cfg.hj.exponent, 2.00001);
        assert_eq!(cfg.size_scale, 1.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(RunConfig::from_json(r#"{"experiment": "tv", "sead": 3}"#).is_err());
        assert!(RunConfig::from_json(r#"{"experiment": "svm"}"#).is_err());
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
    }
}
