//! Beta-noise negatives.
//!
//! For a target user with per-feature mean `mu_i`, feature `i` of a noise
//! vector is drawn from `Beta(|0.5 - mu_i| + 0.5, 0.5)`, reflected as
//! `1 - b` when `mu_i > 0.5`. The density piles up on the side of the unit
//! interval away from the user, so the noise fills the empty part of the
//! cube that a classifier would otherwise be free to accept.

use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureVector, Label, LabeledDataset, LabeledSample, UserId};
use crate::error::{Error, Result};
use crate::seed::{self, purpose};

/// Owner recorded on generated beta-noise samples.
pub const BETA_NOISE_USER: UserId = UserId(u32::MAX);
/// Owner recorded on auxiliary negatives.
pub const AUX_NEGATIVE_USER: UserId = UserId(u32::MAX - 1);

/// The fixed second shape parameter.
pub const BETA_SHAPE_B: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaNoiseSpec {
    pub means: Vec<f64>,
    pub alphas: Vec<f64>,
    pub mirrored: Vec<bool>,
}

impl BetaNoiseSpec {
    pub fn new(means: &[f64]) -> Result<Self> {
        if let Some(m) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(Error::invalid(format!("user mean {m} lies outside [0, 1]")));
        }
        Ok(BetaNoiseSpec {
            means: means.to_vec(),
            alphas: means.iter().map(|m| (0.5 - m).abs() + 0.5).collect(),
            mirrored: means.iter().map(|&m| m > 0.5).collect(),
        })
    }

    pub fn feature_count(&self) -> usize {
        self.means.len()
    }

    /// `count` vectors; feature `i` reads only stream `[BETA, i]` of `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<FeatureVector>> {
        let mut rows = vec![vec![0.0; self.feature_count()]; count];
        for (i, (&alpha, &mirror)) in self.alphas.iter().zip(&self.mirrored).enumerate() {
            let dist = Beta::new(alpha, BETA_SHAPE_B)
                .map_err(|e| Error::invalid(format!("beta shape for feature {i}: {e}")))?;
            let mut rng = seed::derived_rng(seed, &[purpose::BETA, i as u64]);
            for row in &mut rows {
                let b: f64 = dist.sample(&mut rng);
                row[i] = if mirror { 1.0 - b } else { b };
            }
        }
        Ok(rows.into_iter().map(FeatureVector::new).collect())
    }
}

pub fn beta_noise(user_means: &[f64], count: usize, seed: u64) -> Result<Vec<FeatureVector>> {
    BetaNoiseSpec::new(user_means)?.sample(count, seed)
}

/// Per-feature mean of the positive samples.
pub fn positive_means(dataset: &LabeledDataset) -> Result<Vec<f64>> {
    let count = dataset.positive_count();
    if count == 0 {
        return Err(Error::invalid("no positive samples to take means from"));
    }
    let mut sums = vec![0.0; dataset.feature_count()];
    for s in dataset.positives() {
        for (acc, v) in sums.iter_mut().zip(s.vector.iter()) {
            *acc += v;
        }
    }
    Ok(sums.into_iter().map(|s| s / count as f64).collect())
}

/// Appends `beta_count` beta-noise negatives (default: the positive count)
/// around the mean of `base`'s positives, then any auxiliary negatives.
/// A balanced base with default counts becomes thirds, or quarters once an
/// auxiliary set of the same size is supplied.
pub fn augment_training_set(
    base: &LabeledDataset,
    beta_count: Option<usize>,
    aux_negatives: Option<&[FeatureVector]>,
    seed: u64,
) -> Result<LabeledDataset> {
    let n = base.feature_count();
    if let Some(aux) = aux_negatives {
        if let Some(bad) = aux.iter().find(|v| v.len() != n) {
            return Err(Error::invalid(format!(
                "auxiliary vector has {} features, expected {n}",
                bad.len()
            )));
        }
    }
    let beta_count = beta_count.unwrap_or_else(|| base.positive_count());
    let mut out = base.clone();
    if beta_count > 0 {
        let noise = beta_noise(&positive_means(base)?, beta_count, seed)?;
        out.extend(
            noise
                .into_iter()
                .map(|v| LabeledSample::new(v, Label::Negative, BETA_NOISE_USER)),
        )?;
    }
    if let Some(aux) = aux_negatives {
        out.extend(
            aux.iter()
                .map(|v| LabeledSample::new(v.clone(), Label::Negative, AUX_NEGATIVE_USER)),
        )?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(positives: usize, n: usize) -> LabeledDataset {
        let mut samples = Vec::new();
        for k in 0..positives {
            let v = 0.2 + 0.001 * k as f64;
            samples.push(LabeledSample::new(vec![v; n], Label::Positive, UserId(0)));
            samples.push(LabeledSample::new(vec![0.8; n], Label::Negative, UserId(1 + k as u32 % 3)));
        }
        LabeledDataset::new(n, samples).unwrap()
    }

    #[test]
    fn shape_parameters() {
        let spec = BetaNoiseSpec::new(&[0.1, 0.5, 0.9, 0.0, 1.0]).unwrap();
        assert_eq!(spec.alphas[0], 0.9);
        assert_eq!(spec.alphas[1], 0.5);
        assert!((spec.alphas[2] - 0.9).abs() < 1e-15);
        assert_eq!(spec.alphas[3], 1.0);
        assert_eq!(spec.mirrored, vec![false, false, true, false, true]);
    }

    #[test]
    fn out_of_range_mean_rejected() {
        assert!(beta_noise(&[0.2, 1.2], 3, 0).is_err());
        assert!(beta_noise(&[-0.1], 3, 0).is_err());
    }

    #[test]
    fn arcsine_mean_at_one_half() {
        let noise = beta_noise(&[0.5], 100_000, 17).unwrap();
        let mean = noise.iter().map(|v| v[0]).sum::<f64>() / noise.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn low_mean_draws_are_direct() {
        // Beta(0.9, 0.5) has mean 0.9 / 1.4; the mirrored law would sit near 0.36.
        let noise = beta_noise(&[0.1], 100_000, 5).unwrap();
        let mean = noise.iter().map(|v| v[0]).sum::<f64>() / noise.len() as f64;
        assert!((mean - 0.9 / 1.4).abs() < 0.01, "{mean}");
    }

    #[test]
    fn mirrored_means_mirror_the_noise() {
        let means = [0.125, 0.25, 0.375, 0.0];
        let flipped: Vec<f64> = means.iter().map(|m| 1.0 - m).collect();
        let a = beta_noise(&means, 50, 11).unwrap();
        let b = beta_noise(&flipped, 50, 11).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for (p, q) in x.iter().zip(y.iter()) {
                assert_eq!(1.0 - p, *q);
            }
        }
    }

    #[test]
    fn thirds_composition() {
        let base = balanced(90, 4);
        let out = augment_training_set(&base, None, None, 3).unwrap();
        assert_eq!(out.len(), 270);
        assert_eq!(out.positive_count(), 90);
        let beta = out.iter().filter(|s| s.user == BETA_NOISE_USER).count();
        assert_eq!(beta, 90);
        assert_eq!(out.negative_count() - beta, 90);
    }

    #[test]
    fn quarters_composition() {
        let base = balanced(90, 4);
        let aux: Vec<FeatureVector> = (0..90).map(|_| FeatureVector::new(vec![0.5; 4])).collect();
        let out = augment_training_set(&base, None, Some(&aux), 3).unwrap();
        assert_eq!(out.len(), 360);
        assert_eq!(out.iter().filter(|s| s.user == AUX_NEGATIVE_USER).count(), 90);
        assert_eq!(out.iter().filter(|s| s.user == BETA_NOISE_USER).count(), 90);
    }

    #[test]
    fn zero_beta_without_aux_is_identity() {
        let base = balanced(10, 3);
        assert_eq!(augment_training_set(&base, Some(0), None, 3).unwrap(), base);
    }

    #[test]
    fn wrong_aux_dimension_rejected() {
        let base = balanced(10, 3);
        let aux = vec![FeatureVector::new(vec![0.5; 2])];
        assert!(augment_training_set(&base, None, Some(&aux), 3).is_err());
    }
}
