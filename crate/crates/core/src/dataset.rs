//! Labeled feature datasets, per-user sample pools and the per-user task
//! assembly used by every evaluation: normalize, stratified split, then
//! balanced negative sampling from the other users.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;

use rand::seq::index;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, purpose};

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct UserId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "+1",
            Label::Negative => "-1",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "+1" | "1" => Ok(Label::Positive),
            "-1" => Ok(Label::Negative),
            other => Err(Error::Parse(format!("label must be +1 or -1, got {other:?}"))),
        }
    }
}

/// A point in the normalized feature space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        FeatureVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(values: Vec<f64>) -> Self {
        FeatureVector(values)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub vector: FeatureVector,
    pub label: Label,
    pub user: UserId,
}

impl LabeledSample {
    pub fn new(vector: impl Into<FeatureVector>, label: Label, user: UserId) -> Self {
        LabeledSample {
            vector: vector.into(),
            label,
            user,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    feature_count: usize,
    samples: Vec<LabeledSample>,
}

impl LabeledDataset {
    pub fn new(feature_count: usize, samples: Vec<LabeledSample>) -> Result<Self> {
        if feature_count == 0 {
            return Err(Error::invalid("feature count must be positive"));
        }
        if let Some(bad) = samples.iter().find(|s| s.vector.len() != feature_count) {
            return Err(Error::invalid(format!(
                "sample of user {} has {} features, expected {feature_count}",
                bad.user,
                bad.vector.len()
            )));
        }
        Ok(LabeledDataset {
            feature_count,
            samples,
        })
    }

    pub fn empty(feature_count: usize) -> Self {
        LabeledDataset {
            feature_count,
            samples: Vec::new(),
        }
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<LabeledSample> {
        self.samples
    }

    pub fn iter(&self) -> impl Iterator<Item = &LabeledSample> {
        self.samples.iter()
    }

    pub fn push(&mut self, sample: LabeledSample) -> Result<()> {
        if sample.vector.len() != self.feature_count {
            return Err(Error::invalid(format!(
                "sample has {} features, expected {}",
                sample.vector.len(),
                self.feature_count
            )));
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn extend(&mut self, samples: impl IntoIterator<Item = LabeledSample>) -> Result<()> {
        for sample in samples {
            self.push(sample)?;
        }
        Ok(())
    }

    pub fn positive_count(&self) -> usize {
        self.samples.iter().filter(|s| s.label.is_positive()).count()
    }

    pub fn negative_count(&self) -> usize {
        self.len() - self.positive_count()
    }

    pub fn has_both_classes(&self) -> bool {
        let pos = self.positive_count();
        pos > 0 && pos < self.len()
    }

    pub fn positives(&self) -> impl Iterator<Item = &LabeledSample> {
        self.samples.iter().filter(|s| s.label.is_positive())
    }

    pub fn negatives(&self) -> impl Iterator<Item = &LabeledSample> {
        self.samples.iter().filter(|s| !s.label.is_positive())
    }
}

/// Fitted per-feature min/max of a min-max normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationParams {
    pub fn fit<'a>(feature_count: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut min = vec![f64::INFINITY; feature_count];
        let mut max = vec![f64::NEG_INFINITY; feature_count];
        let mut seen = false;
        for row in rows {
            seen = true;
            for ((lo, hi), &v) in min.iter_mut().zip(max.iter_mut()).zip(row) {
                if !v.is_finite() {
                    return Err(Error::invalid("non-finite feature value"));
                }
                *lo = lo.min(v);
                *hi = hi.max(v);
            }
        }
        if !seen {
            return Err(Error::invalid("cannot normalize an empty dataset"));
        }
        Ok(NormalizationParams { min, max })
    }

    pub fn feature_count(&self) -> usize {
        self.min.len()
    }

    /// Maps the fitted min to 0 and max to 1; constant features map to 0.
    /// Values outside the fitted range are clamped into [0, 1].
    pub fn apply(&self, values: &mut [f64]) {
        for ((v, &lo), &hi) in values.iter_mut().zip(&self.min).zip(&self.max) {
            let span = hi - lo;
            *v = if span > 0.0 {
                ((*v - lo) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }

    pub fn transform(&self, vector: &FeatureVector) -> FeatureVector {
        let mut out = vector.clone();
        self.apply(out.as_mut_slice());
        out
    }
}

pub fn min_max_normalize(dataset: &LabeledDataset) -> Result<(LabeledDataset, NormalizationParams)> {
    let params = NormalizationParams::fit(
        dataset.feature_count(),
        dataset.iter().map(|s| s.vector.as_slice()),
    )?;
    let samples = dataset
        .iter()
        .map(|s| LabeledSample {
            vector: params.transform(&s.vector),
            label: s.label,
            user: s.user,
        })
        .collect();
    Ok((
        LabeledDataset {
            feature_count: dataset.feature_count(),
            samples,
        },
        params,
    ))
}

fn validate_fraction(train_fraction: f64) -> Result<()> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    Ok(())
}

/// Number of a user's samples that go to training: floor(fraction * count).
pub fn train_quota(count: usize, train_fraction: f64) -> usize {
    // The epsilon keeps 0.7 * 10 from flooring to 6.
    ((train_fraction * count as f64) + 1e-9).floor() as usize
}

/// Picks which of `count` indices go to training, returned in ascending order.
fn choose_train_indices(count: usize, train_fraction: f64, rng: &mut seed::Rng) -> Vec<bool> {
    let quota = train_quota(count, train_fraction);
    let mut mask = vec![false; count];
    for i in index::sample(rng, count, quota) {
        mask[i] = true;
    }
    mask
}

/// Stratified split: each user's samples are divided at `train_fraction`
/// (floor to train), so every user contributes to both halves.
pub fn train_test_split(
    dataset: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    validate_fraction(train_fraction)?;
    let mut by_user: BTreeMap<UserId, Vec<usize>> = BTreeMap::new();
    for (i, s) in dataset.iter().enumerate() {
        by_user.entry(s.user).or_default().push(i);
    }
    let mut to_train = vec![false; dataset.len()];
    for (user, indices) in &by_user {
        let mut rng = seed::derived_rng(seed, &[purpose::SPLIT, u64::from(user.0)]);
        let mask = choose_train_indices(indices.len(), train_fraction, &mut rng);
        for (&i, keep) in indices.iter().zip(mask) {
            to_train[i] = keep;
        }
    }
    let mut train = LabeledDataset::empty(dataset.feature_count());
    let mut test = LabeledDataset::empty(dataset.feature_count());
    for (sample, keep) in dataset.iter().zip(to_train) {
        if keep {
            train.samples.push(sample.clone());
        } else {
            test.samples.push(sample.clone());
        }
    }
    Ok((train, test))
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserPool {
    pub user: UserId,
    pub samples: Vec<FeatureVector>,
}

/// Unlabeled per-user sample pools.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    feature_count: usize,
    users: Vec<UserPool>,
}

impl Population {
    pub fn new(feature_count: usize, users: Vec<UserPool>) -> Result<Self> {
        if feature_count == 0 {
            return Err(Error::invalid("feature count must be positive"));
        }
        let mut ids: Vec<UserId> = users.iter().map(|u| u.user).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate user id in population"));
        }
        for pool in &users {
            if pool.samples.iter().any(|v| v.len() != feature_count) {
                return Err(Error::invalid(format!(
                    "user {} has a sample with the wrong feature count",
                    pool.user
                )));
            }
        }
        Ok(Population {
            feature_count,
            users,
        })
    }

    /// Groups a labeled dataset by user, keeping first-appearance order.
    /// Labels are discarded.
    pub fn from_dataset(dataset: &LabeledDataset) -> Self {
        let mut order: Vec<UserId> = Vec::new();
        let mut pools: BTreeMap<UserId, Vec<FeatureVector>> = BTreeMap::new();
        for s in dataset.iter() {
            pools
                .entry(s.user)
                .or_insert_with(|| {
                    order.push(s.user);
                    Vec::new()
                })
                .push(s.vector.clone());
        }
        let users = order
            .into_iter()
            .map(|user| UserPool {
                user,
                samples: pools.remove(&user).unwrap_or_default(),
            })
            .collect();
        Population {
            feature_count: dataset.feature_count(),
            users,
        }
    }

    /// Flattens into a dataset where every row is labeled +1 (a genuine
    /// sample of its own user).
    pub fn to_dataset(&self) -> LabeledDataset {
        let samples = self
            .users
            .iter()
            .flat_map(|pool| {
                pool.samples
                    .iter()
                    .map(move |v| LabeledSample::new(v.clone(), Label::Positive, pool.user))
            })
            .collect();
        LabeledDataset {
            feature_count: self.feature_count,
            samples,
        }
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn users(&self) -> &[UserPool] {
        &self.users
    }

    pub fn user_ids(&self) -> Vec<UserId> {
        self.users.iter().map(|u| u.user).collect()
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn sample_count(&self) -> usize {
        self.users.iter().map(|u| u.samples.len()).sum()
    }

    pub fn pool(&self, user: UserId) -> Option<&UserPool> {
        self.users.iter().find(|u| u.user == user)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.users
            .iter()
            .flat_map(|u| u.samples.iter().map(|v| v.as_slice()))
    }

    /// Min-max normalizes every feature over all users' samples.
    pub fn normalize(&self) -> Result<(Population, NormalizationParams)> {
        let params = NormalizationParams::fit(self.feature_count, self.rows())?;
        let users = self
            .users
            .iter()
            .map(|pool| UserPool {
                user: pool.user,
                samples: pool.samples.iter().map(|v| params.transform(v)).collect(),
            })
            .collect();
        Ok((
            Population {
                feature_count: self.feature_count,
                users,
            },
            params,
        ))
    }

    /// Per-user stratified split of every pool.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<SplitPopulation> {
        validate_fraction(train_fraction)?;
        let mut train = Vec::with_capacity(self.users.len());
        let mut test = Vec::with_capacity(self.users.len());
        for pool in &self.users {
            let mut rng = seed::derived_rng(seed, &[purpose::SPLIT, u64::from(pool.user.0)]);
            let mask = choose_train_indices(pool.samples.len(), train_fraction, &mut rng);
            let (mut tr, mut te) = (Vec::new(), Vec::new());
            for (v, keep) in pool.samples.iter().zip(mask) {
                if keep {
                    tr.push(v.clone());
                } else {
                    te.push(v.clone());
                }
            }
            train.push(UserPool {
                user: pool.user,
                samples: tr,
            });
            test.push(UserPool {
                user: pool.user,
                samples: te,
            });
        }
        Ok(SplitPopulation {
            train: Population {
                feature_count: self.feature_count,
                users: train,
            },
            test: Population {
                feature_count: self.feature_count,
                users: test,
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitPopulation {
    pub train: Population,
    pub test: Population,
}

/// Draws about `required_count` negatives spread evenly over every user
/// except `target_user`.
///
/// Each other user contributes up to `ceil(required / (U - 1))` samples drawn
/// without replacement. The surplus is then trimmed one sample at a time
/// from seeded-random users among those currently contributing the most, so
/// contributions stay within one of each other.
pub fn balanced_negative_sample(
    population: &Population,
    target_user: UserId,
    required_count: usize,
    seed: u64,
) -> Result<Vec<LabeledSample>> {
    let others: Vec<&UserPool> = population
        .users
        .iter()
        .filter(|u| u.user != target_user && !u.samples.is_empty())
        .collect();
    if others.is_empty() {
        return Err(Error::invalid(format!(
            "no users other than {target_user} have samples to draw negatives from"
        )));
    }
    let quota = required_count.div_ceil(others.len());

    let mut picks: Vec<Vec<usize>> = others
        .iter()
        .map(|pool| {
            let mut rng =
                seed::derived_rng(seed, &[purpose::NEGATIVES, u64::from(pool.user.0)]);
            let take = quota.min(pool.samples.len());
            index::sample(&mut rng, pool.samples.len(), take).into_vec()
        })
        .collect();

    let total: usize = picks.iter().map(Vec::len).sum();
    let mut excess = total.saturating_sub(required_count);
    let mut trim_rng = seed::derived_rng(seed, &[purpose::TRIM]);
    while excess > 0 {
        let largest = picks.iter().map(Vec::len).max().unwrap_or(0);
        let mut heaviest: Vec<usize> = (0..picks.len())
            .filter(|&k| picks[k].len() == largest)
            .collect();
        heaviest.shuffle(&mut trim_rng);
        for k in heaviest.into_iter().take(excess) {
            picks[k].pop();
            excess -= 1;
        }
    }

    let mut negatives = Vec::with_capacity(required_count.min(total));
    for (pool, chosen) in others.iter().zip(picks) {
        let mut chosen = chosen;
        chosen.sort_unstable();
        negatives.extend(
            chosen
                .into_iter()
                .map(|i| LabeledSample::new(pool.samples[i].clone(), Label::Negative, pool.user)),
        );
    }
    Ok(negatives)
}

/// A balanced one-vs-rest train/test task for a single target user.
#[derive(Clone, Debug, PartialEq)]
pub struct UserTask {
    pub target: UserId,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

fn positives_of(population: &Population, target: UserId) -> Result<Vec<LabeledSample>> {
    let pool = population
        .pool(target)
        .ok_or_else(|| Error::invalid(format!("target user {target} not in population")))?;
    Ok(pool
        .samples
        .iter()
        .map(|v| LabeledSample::new(v.clone(), Label::Positive, target))
        .collect())
}

/// Builds the balanced task from an already split population. Train
/// negatives come only from the train partition, test negatives only from
/// the test partition.
pub fn assemble_from_split(split: &SplitPopulation, target: UserId, seed: u64) -> Result<UserTask> {
    let n = split.train.feature_count();
    let build = |part: &Population, phase: u64| -> Result<LabeledDataset> {
        let mut samples = positives_of(part, target)?;
        if samples.is_empty() {
            return Err(Error::invalid(format!("target user {target} has no samples")));
        }
        let negatives =
            balanced_negative_sample(part, target, samples.len(), seed::derive(seed, &[phase]))?;
        samples.extend(negatives);
        LabeledDataset::new(n, samples)
    };
    Ok(UserTask {
        target,
        train: build(&split.train, 0)?,
        test: build(&split.test, 1)?,
    })
}

/// Split, then balance. The population is expected to be normalized.
pub fn assemble_user_task(
    population: &Population,
    target: UserId,
    train_fraction: f64,
    seed: u64,
) -> Result<UserTask> {
    if population.pool(target).is_none() {
        return Err(Error::invalid(format!("target user {target} not in population")));
    }
    let split = population.split(train_fraction, seed::derive(seed, &[purpose::SPLIT]))?;
    assemble_from_split(&split, target, seed::derive(seed, &[purpose::NEGATIVES]))
}
