use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{Algorithm, TrainConfig};
use crate::error::{Error, Result};
use crate::synth::{default_sd_grid, PopulationSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    PerUserAr,
    RocCurves,
    IsolatedVariance,
    PopulationVariance,
    DistanceClassifier,
    VaryUsers,
    Mitigation,
    Propositions,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 8] = [
        ExperimentName::PerUserAr,
        ExperimentName::RocCurves,
        ExperimentName::IsolatedVariance,
        ExperimentName::PopulationVariance,
        ExperimentName::DistanceClassifier,
        ExperimentName::VaryUsers,
        ExperimentName::Mitigation,
        ExperimentName::Propositions,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::PerUserAr => "per-user-ar",
            ExperimentName::RocCurves => "roc-curves",
            ExperimentName::IsolatedVariance => "isolated-variance",
            ExperimentName::PopulationVariance => "population-variance",
            ExperimentName::DistanceClassifier => "distance-classifier",
            ExperimentName::VaryUsers => "vary-users",
            ExperimentName::Mitigation => "mitigation",
            ExperimentName::Propositions => "propositions",
        }
    }

    /// Whether the experiment sweeps a grid of population settings.
    pub fn is_sweep(self) -> bool {
        matches!(
            self,
            ExperimentName::IsolatedVariance
                | ExperimentName::PopulationVariance
                | ExperimentName::VaryUsers
        )
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown experiment {s:?}")))
    }
}

/// Scale presets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Quick,
    Paper,
}

impl Profile {
    pub fn mc_samples(self) -> u64 {
        match self {
            Profile::Quick => 10_000,
            Profile::Paper => 1_000_000,
        }
    }

    pub fn repetitions(self) -> usize {
        match self {
            Profile::Quick => 5,
            Profile::Paper => 50,
        }
    }

    pub fn users(self) -> usize {
        match self {
            Profile::Quick => 20,
            Profile::Paper => 50,
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Profile::Quick),
            "paper" => Ok(Profile::Paper),
            _ => Err(Error::invalid(format!("unknown profile {s:?}"))),
        }
    }
}

fn default_bins() -> usize {
    100
}

/// Binning used for the true-region volumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeConfig {
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub cutoff: usize,
}

impl Default for VolumeConfig {
    fn default() -> Self {
        VolumeConfig {
            bins: default_bins(),
            cutoff: 0,
        }
    }
}

/// Everything a run depends on. Serialized as TOML; the manifest written
/// next to the outputs is this structure and can be fed back in.
///
/// ```toml
/// experiment = "isolated-variance"
/// seed = 7
/// classifiers = ["linsvm", "rbfsvm"]
/// repetitions = 10
/// mc_samples = 10000
/// thresholds = 100
/// fixed_threshold = 0.5
/// users = 20
/// train_fraction = 0.7
/// grid = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35]
///
/// [population]      # synthetic source; ignored when `dataset` is set
/// user_count = 50
/// ...
/// [train]           # classifier hyperparameters
/// svm_c = 10000.0
/// [volume]
/// bins = 100
/// cutoff = 0
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    pub seed: u64,
    pub classifiers: Vec<Algorithm>,
    pub repetitions: usize,
    pub mc_samples: u64,
    /// Size of the uniform threshold grid.
    pub thresholds: usize,
    /// Evaluate at this single threshold instead of locating the EER.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_threshold: Option<f64>,
    /// Number of target users evaluated (the first ones by id).
    pub users: usize,
    /// Non-isolated users evaluated in the population-variance sweep;
    /// defaults to `users - 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_users: Option<usize>,
    pub train_fraction: f64,
    /// Grid of the swept quantity (SD values or user counts).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    /// CSV population to use instead of a synthetic one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub population: PopulationSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub volume: VolumeConfig,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentName, profile: Profile) -> Self {
        use ExperimentName::*;
        let classifiers = match experiment {
            DistanceClassifier => vec![
                Algorithm::Cosine,
                Algorithm::LinearSvm,
                Algorithm::RbfSvm,
                Algorithm::RandomForest,
                Algorithm::Mlp,
            ],
            Propositions => vec![Algorithm::Perceptron, Algorithm::LinearSvm, Algorithm::RandomForest],
            _ => Algorithm::ML.to_vec(),
        };
        let population = match experiment {
            DistanceClassifier | VaryUsers => PopulationSpec::distance_study(50),
            _ => PopulationSpec::default(),
        };
        let grid = match experiment {
            IsolatedVariance | PopulationVariance => Some(default_sd_grid()),
            VaryUsers => Some((1..=6).map(|k| f64::from(k) * 25.0).collect()),
            _ => None,
        };
        ExperimentConfig {
            experiment,
            seed: 0,
            classifiers,
            repetitions: profile.repetitions(),
            mc_samples: profile.mc_samples(),
            thresholds: if experiment == DistanceClassifier { 1000 } else { 100 },
            fixed_threshold: matches!(experiment, IsolatedVariance | PopulationVariance).then_some(0.5),
            users: profile.users(),
            system_users: None,
            train_fraction: 0.7,
            grid,
            dataset: None,
            output: None,
            population,
            train: TrainConfig::default(),
            volume: VolumeConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if self.mc_samples == 0 {
            return Err(Error::invalid("Monte Carlo sample count must be at least 1"));
        }
        if self.thresholds == 0 {
            return Err(Error::invalid("threshold grid must have at least one value"));
        }
        if self.users == 0 {
            return Err(Error::invalid("at least one user must be evaluated"));
        }
        if self.classifiers.is_empty() {
            return Err(Error::invalid("no classifiers selected"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid("train fraction must lie strictly between 0 and 1"));
        }
        if let Some(t) = self.fixed_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid("fixed threshold must lie in [0, 1]"));
            }
        }
        if self.volume.bins == 0 {
            return Err(Error::invalid("bin count must be positive"));
        }
        if let Some(grid) = &self.grid {
            if grid.is_empty() || grid.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::invalid("sweep grid values must be positive"));
            }
        }
        self.train.validate()?;
        self.population.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in ExperimentName::ALL {
            assert_eq!(e.as_str().parse::<ExperimentName>().unwrap(), e);
        }
        assert!("fig-6".parse::<ExperimentName>().is_err());
    }

    #[test]
    fn profiles() {
        let quick = ExperimentConfig::new(ExperimentName::RocCurves, Profile::Quick);
        assert_eq!((quick.mc_samples, quick.repetitions, quick.users), (10_000, 5, 20));
        let paper = ExperimentConfig::new(ExperimentName::RocCurves, Profile::Paper);
        assert_eq!((paper.mc_samples, paper.repetitions, paper.users), (1_000_000, 50, 50));
        let cos = ExperimentConfig::new(ExperimentName::DistanceClassifier, Profile::Quick);
        assert_eq!(cos.thresholds, 1000);
    }

    #[test]
    fn toml_round_trip() {
        for e in ExperimentName::ALL {
            let config = ExperimentConfig::new(e, Profile::Quick);
            let text = config.to_toml().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), config);
        }
    }

    #[test]
    fn rejects_zero_counts() {
        let mut config = ExperimentConfig::new(ExperimentName::Mitigation, Profile::Quick);
        config.repetitions = 0;
        assert!(config.validate().is_err());
        config.repetitions = 1;
        config.mc_samples = 0;
        assert!(config.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut text = ExperimentConfig::new(ExperimentName::Mitigation, Profile::Quick)
            .to_toml()
            .unwrap();
        text.insert_str(0, "colour = 3\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }
}
