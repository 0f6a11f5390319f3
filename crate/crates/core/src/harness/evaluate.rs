//! One user, one classifier: the full methodology.

use serde::{Deserialize, Serialize};

use crate::classifiers::{train, Algorithm, TrainConfig};
use crate::dataset::{assemble_from_split, Population, SplitPopulation, UserId, UserTask};
use crate::error::Result;
use crate::mitigation::augment_training_set;
use crate::region::{
    estimate_acceptance_region, evaluate_curves, measure_region_volume, EerPoint, ThresholdCurve,
    ThresholdGrid, VolumeMode,
};
use crate::seed::{self, purpose};

use super::config::VolumeConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSettings {
    pub grid: ThresholdGrid,
    pub mc_samples: u64,
    pub train_fraction: f64,
    pub train: TrainConfig,
    pub volume: VolumeConfig,
    /// Add beta-noise negatives (thirds composition) before training.
    pub mitigate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserEvaluationReport {
    pub user: UserId,
    pub classifier: Algorithm,
    /// Pointwise mean of the per-repetition curves.
    pub curve: ThresholdCurve,
    pub eer: EerPoint,
    /// AR at the mean curve's EER threshold, per repetition.
    pub repetition_ar: Vec<f64>,
    /// log10 R+ of the target's training samples.
    pub log10_positive_region: f64,
    /// log10 R- of everyone else's training samples.
    pub log10_negative_region: f64,
}

/// Train and score one balanced task. The seed feeds training, the beta
/// noise and the Monte Carlo stream.
pub fn evaluate_task(
    task: &UserTask,
    algorithm: Algorithm,
    settings: &EvalSettings,
    seed: u64,
) -> Result<ThresholdCurve> {
    let config = settings.train.with_seed(seed::derive(seed, &[purpose::TRAIN]));
    let model = if settings.mitigate {
        let augmented = augment_training_set(&task.train, None, None, seed::derive(seed, &[purpose::BETA]))?;
        train(algorithm, &augmented, &config)?
    } else {
        train(algorithm, &task.train, &config)?
    };
    let ar = estimate_acceptance_region(
        &model,
        settings.mc_samples,
        seed::derive(seed, &[purpose::MONTE_CARLO]),
        &settings.grid,
    )?;
    evaluate_curves(&model, &task.test, &ar, &settings.grid)
}

fn true_regions(split: &SplitPopulation, target: UserId, volume: VolumeConfig) -> Result<(f64, f64)> {
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for pool in split.train.users() {
        let side = if pool.user == target {
            &mut positives
        } else {
            &mut negatives
        };
        side.extend(pool.samples.iter().map(|v| v.as_slice()));
    }
    let measure = |rows: &[&[f64]]| -> Result<f64> {
        Ok(measure_region_volume(rows, volume.bins, volume.cutoff, VolumeMode::Binned)?.log10_volume)
    };
    Ok((measure(&positives)?, measure(&negatives)?))
}

/// Normalize, split once, then per repetition draw fresh negatives, train,
/// and estimate the region with a fresh Monte Carlo stream.
pub fn run_user_evaluation(
    population: &Population,
    target: UserId,
    algorithm: Algorithm,
    settings: &EvalSettings,
    repetitions: usize,
    seed: u64,
) -> Result<UserEvaluationReport> {
    let (normalized, _) = population.normalize()?;
    let split = normalized.split(settings.train_fraction, seed::derive(seed, &[purpose::SPLIT]))?;
    let curves = (0..repetitions as u64)
        .map(|rep| {
            let rep_seed = seed::derive(seed, &[rep]);
            let task = assemble_from_split(&split, target, seed::derive(rep_seed, &[purpose::NEGATIVES]))?;
            evaluate_task(&task, algorithm, settings, rep_seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let curve = ThresholdCurve::average(&curves)?;
    let eer = curve.eer;
    let (log10_positive_region, log10_negative_region) = true_regions(&split, target, settings.volume)?;
    Ok(UserEvaluationReport {
        user: target,
        classifier: algorithm,
        repetition_ar: curves.iter().map(|c| c.ar[eer.index]).collect(),
        curve,
        eer,
        log10_positive_region,
        log10_negative_region,
    })
}
