//! Hierarchical Gaussian synthetic populations.
//!
//! Generation runs in three layers: per-feature population distributions
//! `N(mu_i, sigma_i^2)` are drawn first, then each user's per-feature mean is
//! drawn from its feature's distribution, and finally each user's samples
//! are i.i.d. normal around those means with a standard deviation chosen by
//! the [`VariancePolicy`].
//!
//! Each layer reads its own derived stream, and samples are produced as
//! `mean + sd * z` from a standard-normal stream that does not depend on the
//! standard deviation. Two specs that differ only in one user's standard
//! deviation therefore produce identical samples for every other user, and
//! that user's samples differ only by scale.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureVector, Population, UserId, UserPool};
use crate::error::{Error, Result};
use crate::seed::{self, purpose};

/// Standard deviation shared by non-isolated users in the variance sweeps.
pub const POPULATION_SD: f64 = 0.2;

/// How each user's per-feature standard deviation is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VariancePolicy {
    /// Every user and feature uses `sd`.
    Fixed { sd: f64 },
    /// `sigma_{u,i} ~ N(mean, sd^2)` independently per user and feature.
    PerUserSampled { mean: f64, sd: f64 },
    /// Per feature a center `c_i ~ N(center, center_spread^2)` and a spread
    /// `s_i ~ N(spread_mean, spread_sd^2)` are drawn; then
    /// `sigma_{u,i} ~ N(c_i, s_i^2)`.
    Hierarchical {
        center: f64,
        center_spread: f64,
        spread_mean: f64,
        spread_sd: f64,
    },
}

/// A single user whose standard deviation is pinned regardless of policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsolatedUser {
    pub user: u32,
    pub sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub user_count: usize,
    pub feature_count: usize,
    pub mean_of_means: f64,
    pub sd_of_means: f64,
    pub mean_of_sds: f64,
    pub sd_of_sds: f64,
    pub samples_per_user: usize,
    pub user_variance: VariancePolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isolated: Option<IsolatedUser>,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        PopulationSpec {
            user_count: 50,
            feature_count: 50,
            mean_of_means: 0.5,
            sd_of_means: 0.1,
            mean_of_sds: 0.1,
            sd_of_sds: 0.07,
            samples_per_user: 200,
            user_variance: VariancePolicy::Fixed { sd: POPULATION_SD },
            isolated: None,
        }
    }
}

impl PopulationSpec {
    /// Tightly clustered features used for the distance-classifier and
    /// user-count studies.
    pub fn distance_study(user_count: usize) -> Self {
        PopulationSpec {
            user_count,
            mean_of_means: 0.2,
            sd_of_means: 0.05,
            mean_of_sds: 0.03,
            sd_of_sds: 0.02,
            user_variance: VariancePolicy::PerUserSampled {
                mean: 0.03,
                sd: 0.02,
            },
            ..PopulationSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.user_count < 2 {
            return Err(Error::invalid("population needs at least 2 users"));
        }
        if self.feature_count < 1 {
            return Err(Error::invalid("population needs at least 1 feature"));
        }
        if self.samples_per_user < 2 {
            return Err(Error::invalid("each user needs at least 2 samples"));
        }
        let reals = [
            self.mean_of_means,
            self.sd_of_means,
            self.mean_of_sds,
            self.sd_of_sds,
        ];
        if reals.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("population parameters must be finite"));
        }
        if self.sd_of_means < 0.0 || self.sd_of_sds < 0.0 {
            return Err(Error::invalid("spread parameters must be non-negative"));
        }
        let policy_ok = match self.user_variance {
            VariancePolicy::Fixed { sd } => sd.is_finite() && sd >= 0.0,
            VariancePolicy::PerUserSampled { mean, sd } => {
                mean.is_finite() && sd.is_finite() && sd >= 0.0
            }
            VariancePolicy::Hierarchical {
                center,
                center_spread,
                spread_mean,
                spread_sd,
            } => {
                [center, center_spread, spread_mean, spread_sd]
                    .iter()
                    .all(|v| v.is_finite())
                    && center_spread >= 0.0
                    && spread_sd >= 0.0
            }
        };
        if !policy_ok {
            return Err(Error::invalid("invalid user variance policy"));
        }
        if let Some(iso) = self.isolated {
            if iso.user as usize >= self.user_count || !(iso.sd.is_finite() && iso.sd >= 0.0) {
                return Err(Error::invalid("invalid isolated user"));
            }
        }
        Ok(())
    }
}

/// Per-feature population distribution of user means.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureDistribution {
    pub means: Vec<f64>,
    pub spreads: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserProfile {
    pub user: UserId,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

fn normal(rng: &mut seed::Rng, mean: f64, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mean + sd * z
}

pub fn sample_feature_distributions(spec: &PopulationSpec, seed: u64) -> Result<FeatureDistribution> {
    spec.validate()?;
    let mut rng = seed::derived_rng(seed, &[purpose::FEATURES, 0]);
    let mut means = Vec::with_capacity(spec.feature_count);
    let mut spreads = Vec::with_capacity(spec.feature_count);
    for _ in 0..spec.feature_count {
        means.push(normal(&mut rng, spec.mean_of_means, spec.sd_of_means));
        spreads.push(normal(&mut rng, spec.mean_of_sds, spec.sd_of_sds).max(0.0));
    }
    Ok(FeatureDistribution { means, spreads })
}

/// Per-feature `(center, spread)` pairs for the hierarchical policy.
fn hierarchical_centers(
    n: usize,
    seed: u64,
    center: f64,
    center_spread: f64,
    spread_mean: f64,
    spread_sd: f64,
) -> Vec<(f64, f64)> {
    let mut rng = seed::derived_rng(seed, &[purpose::FEATURES, 1]);
    (0..n)
        .map(|_| {
            let c = normal(&mut rng, center, center_spread);
            let s = normal(&mut rng, spread_mean, spread_sd).max(0.0);
            (c, s)
        })
        .collect()
}

pub fn generate_profiles(
    spec: &PopulationSpec,
    features: &FeatureDistribution,
    seed: u64,
) -> Result<Vec<UserProfile>> {
    spec.validate()?;
    let n = spec.feature_count;
    let centers = match spec.user_variance {
        VariancePolicy::Hierarchical {
            center,
            center_spread,
            spread_mean,
            spread_sd,
        } => hierarchical_centers(n, seed, center, center_spread, spread_mean, spread_sd),
        _ => Vec::new(),
    };
    let profiles = (0..spec.user_count as u32)
        .map(|u| {
            let mut mean_rng = seed::derived_rng(seed, &[purpose::USERS, u64::from(u), 0]);
            let means: Vec<f64> = features
                .means
                .iter()
                .zip(&features.spreads)
                .map(|(&m, &s)| normal(&mut mean_rng, m, s))
                .collect();
            let mut sd_rng = seed::derived_rng(seed, &[purpose::USERS, u64::from(u), 1]);
            let sds: Vec<f64> = match spec.isolated {
                Some(iso) if iso.user == u => vec![iso.sd; n],
                _ => match spec.user_variance {
                    VariancePolicy::Fixed { sd } => vec![sd; n],
                    VariancePolicy::PerUserSampled { mean, sd } => (0..n)
                        .map(|_| normal(&mut sd_rng, mean, sd).max(0.0))
                        .collect(),
                    VariancePolicy::Hierarchical { .. } => centers
                        .iter()
                        .map(|&(c, s)| normal(&mut sd_rng, c, s).max(0.0))
                        .collect(),
                },
            };
            UserProfile {
                user: UserId(u),
                means,
                sds,
            }
        })
        .collect();
    Ok(profiles)
}

/// Generates raw (unclipped) samples for every user.
pub fn generate_population_with_profiles(
    spec: &PopulationSpec,
    seed: u64,
) -> Result<(Population, Vec<UserProfile>)> {
    let features = sample_feature_distributions(spec, seed)?;
    let profiles = generate_profiles(spec, &features, seed)?;
    let users = profiles
        .iter()
        .map(|p| {
            let mut rng = seed::derived_rng(seed, &[purpose::USERS, u64::from(p.user.0), 2]);
            let samples = (0..spec.samples_per_user)
                .map(|_| {
                    let values = p
                        .means
                        .iter()
                        .zip(&p.sds)
                        .map(|(&m, &s)| normal(&mut rng, m, s))
                        .collect();
                    FeatureVector::new(values)
                })
                .collect();
            UserPool {
                user: p.user,
                samples,
            }
        })
        .collect();
    Ok((Population::new(spec.feature_count, users)?, profiles))
}

pub fn generate_population(spec: &PopulationSpec, seed: u64) -> Result<Population> {
    generate_population_with_profiles(spec, seed).map(|(pop, _)| pop)
}

/// One point of a variance sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub grid_value: f64,
    /// Grid value relative to the reference SD of 0.2.
    pub relative_sd: f64,
    pub spec: PopulationSpec,
}

/// Isolated user identifier used by the sweep builders.
pub const ISOLATED_USER: u32 = 0;

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("sweep grid is empty"));
    }
    if grid.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(Error::invalid("sweep grid values must be positive"));
    }
    Ok(())
}

/// `{0.05, 0.10, ..., 0.35}`.
pub fn default_sd_grid() -> Vec<f64> {
    (1..=7).map(|k| f64::from(k) * 0.05).collect()
}

/// Isolated user's SD takes each grid value; everyone else stays at 0.2.
pub fn make_isolated_variance_config(user_sd_grid: &[f64]) -> Result<Vec<SweepPoint>> {
    check_grid(user_sd_grid)?;
    Ok(user_sd_grid
        .iter()
        .map(|&sd| SweepPoint {
            grid_value: sd,
            relative_sd: sd / POPULATION_SD,
            spec: PopulationSpec {
                isolated: Some(IsolatedUser {
                    user: ISOLATED_USER,
                    sd,
                }),
                ..PopulationSpec::default()
            },
        })
        .collect())
}

/// Isolated user's SD fixed at 0.2; the rest of the population draws its
/// SDs hierarchically around each grid value.
pub fn make_population_variance_config(mean_sd_grid: &[f64]) -> Result<Vec<SweepPoint>> {
    check_grid(mean_sd_grid)?;
    Ok(mean_sd_grid
        .iter()
        .map(|&center| SweepPoint {
            grid_value: center,
            relative_sd: center / POPULATION_SD,
            spec: PopulationSpec {
                user_variance: VariancePolicy::Hierarchical {
                    center,
                    center_spread: 0.05,
                    spread_mean: 0.03,
                    spread_sd: 0.02,
                },
                isolated: Some(IsolatedUser {
                    user: ISOLATED_USER,
                    sd: POPULATION_SD,
                }),
                ..PopulationSpec::default()
            },
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    fn sample_sd(v: &[f64]) -> f64 {
        let m = mean(v);
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    }

    #[test]
    fn feature_means_center_on_half() {
        let spec = PopulationSpec {
            feature_count: 10_000,
            ..PopulationSpec::default()
        };
        let dist = sample_feature_distributions(&spec, 3).unwrap();
        assert!((mean(&dist.means) - 0.5).abs() < 0.01);
        assert!(dist.spreads.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn degenerate_feature_distributions() {
        let spec = PopulationSpec {
            sd_of_means: 0.0,
            sd_of_sds: 0.0,
            ..PopulationSpec::default()
        };
        let dist = sample_feature_distributions(&spec, 9).unwrap();
        assert!(dist.means.iter().all(|&m| m == 0.5));
        assert!(dist.spreads.iter().all(|&s| s == 0.1));
    }

    #[test]
    fn feature_distributions_are_deterministic() {
        let spec = PopulationSpec::default();
        assert_eq!(
            sample_feature_distributions(&spec, 5).unwrap(),
            sample_feature_distributions(&spec, 5).unwrap()
        );
    }

    #[test]
    fn fixed_sd_is_recovered() {
        let spec = PopulationSpec::default();
        let pop = generate_population(&spec, 21).unwrap();
        let mut sds = Vec::new();
        for pool in pop.users() {
            for i in 0..spec.feature_count {
                let column: Vec<f64> = pool.samples.iter().map(|v| v[i]).collect();
                sds.push(sample_sd(&column));
            }
        }
        assert!((mean(&sds) - 0.2).abs() < 0.03);
    }

    #[test]
    fn zero_sd_repeats_the_mean() {
        let spec = PopulationSpec {
            user_count: 3,
            feature_count: 4,
            user_variance: VariancePolicy::Fixed { sd: 0.0 },
            ..PopulationSpec::default()
        };
        let (pop, profiles) = generate_population_with_profiles(&spec, 2).unwrap();
        for (pool, profile) in pop.users().iter().zip(&profiles) {
            assert!(pool.samples.iter().all(|v| v.as_slice() == profile.means.as_slice()));
        }
    }

    #[test]
    fn same_seed_same_population() {
        let spec = PopulationSpec {
            user_count: 5,
            feature_count: 7,
            ..PopulationSpec::default()
        };
        assert_eq!(
            generate_population(&spec, 4).unwrap(),
            generate_population(&spec, 4).unwrap()
        );
        assert_ne!(
            generate_population(&spec, 4).unwrap(),
            generate_population(&spec, 5).unwrap()
        );
    }

    #[test]
    fn isolated_sd_only_rescales_that_user() {
        let points = make_isolated_variance_config(&[0.1, 0.3]).unwrap();
        let small = generate_population(&points[0].spec, 8).unwrap();
        let large = generate_population(&points[1].spec, 8).unwrap();
        assert_eq!(small.users()[1..], large.users()[1..]);
        assert_ne!(small.users()[0], large.users()[0]);
    }

    #[test]
    fn isolated_sweep_defaults() {
        let points = make_isolated_variance_config(&default_sd_grid()).unwrap();
        assert_eq!(points.len(), 7);
        for (k, p) in points.iter().enumerate() {
            let expected = 0.05 * (k + 1) as f64;
            assert!((p.grid_value - expected).abs() < 1e-12);
            assert_eq!(p.relative_sd, p.grid_value / 0.2);
            assert_eq!(p.spec.isolated.unwrap().sd, p.grid_value);
            assert_eq!(p.spec.user_variance, VariancePolicy::Fixed { sd: 0.2 });
        }
    }

    #[test]
    fn symmetric_isolated_point_matches_population() {
        let points = make_isolated_variance_config(&[0.2]).unwrap();
        let (_, profiles) = generate_population_with_profiles(&points[0].spec, 1).unwrap();
        assert!(profiles.iter().all(|p| p.sds.iter().all(|&s| s == 0.2)));
    }

    #[test]
    fn population_sweep_defaults() {
        let points = make_population_variance_config(&default_sd_grid()).unwrap();
        assert_eq!(points.len(), 7);
        for p in &points {
            assert_eq!(p.spec.isolated.unwrap().sd, 0.2);
            assert_eq!(p.relative_sd, p.grid_value / 0.2);
        }
        let sym = make_population_variance_config(&[0.2]).unwrap();
        assert!(matches!(
            sym[0].spec.user_variance,
            VariancePolicy::Hierarchical { center, .. } if center == 0.2
        ));
    }

    #[test]
    fn empty_or_nonpositive_grid_rejected() {
        assert!(make_isolated_variance_config(&[]).is_err());
        assert!(make_population_variance_config(&[0.1, -0.2]).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        let bad = [
            PopulationSpec {
                user_count: 1,
                ..PopulationSpec::default()
            },
            PopulationSpec {
                samples_per_user: 1,
                ..PopulationSpec::default()
            },
            PopulationSpec {
                sd_of_means: -0.1,
                ..PopulationSpec::default()
            },
        ];
        for spec in bad {
            assert!(generate_population(&spec, 0).is_err());
        }
    }
}
