//! Acceptance-region estimation and error-rate curves.
//!
//! The acceptance region of a model is the set of points of `[0, 1]^n` it
//! accepts; its volume is the probability that a uniformly random vector
//! is accepted. It is estimated by Monte Carlo with a single pass that
//! histograms scores against the threshold grid, so every threshold's
//! estimate comes from the same draws and no scores are stored.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::ScoringModel;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::seed::{self, purpose};

/// Monte Carlo draws per RNG block. Blocks are the unit of parallel work
/// and each reads its own derived stream.
pub const MC_BLOCK: usize = 4096;

/// Sorted thresholds in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid(Vec<f64>);

impl ThresholdGrid {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::invalid("threshold grid is empty"));
        }
        if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::invalid("thresholds must lie in [0, 1]"));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("thresholds must be strictly increasing"));
        }
        Ok(ThresholdGrid(thresholds))
    }

    /// `{0, 1/count, ..., (count - 1)/count}`.
    pub fn uniform(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("threshold grid needs at least one value"));
        }
        Self::new((0..count).map(|k| k as f64 / count as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of thresholds `t` with `t <= score`; the score is accepted at
    /// exactly the first that many thresholds.
    pub fn accepted_prefix(&self, score: f64) -> usize {
        self.0.partition_point(|&t| t <= score)
    }

    /// Tally of [`ThresholdGrid::accepted_prefix`] values, length `len + 1`.
    pub fn histogram(&self, scores: impl IntoIterator<Item = f64>) -> Vec<u64> {
        let mut hist = vec![0u64; self.len() + 1];
        for s in scores {
            hist[self.accepted_prefix(s)] += 1;
        }
        hist
    }

    /// Per-threshold count of scores `>= t` from a prefix histogram.
    pub fn accepted_counts(hist: &[u64]) -> Vec<u64> {
        let t = hist.len() - 1;
        let mut out = vec![0u64; t];
        let mut running = 0;
        for k in (0..t).rev() {
            running += hist[k + 1];
            out[k] = running;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionEstimate {
    pub threshold: f64,
    pub accept_fraction: f64,
    pub samples: u64,
    pub std_error: f64,
    pub seed: u64,
}

impl RegionEstimate {
    fn new(threshold: f64, accepted: u64, samples: u64, seed: u64) -> Self {
        let p = accepted as f64 / samples as f64;
        RegionEstimate {
            threshold,
            accept_fraction: p,
            samples,
            std_error: (p * (1.0 - p) / samples as f64).sqrt(),
            seed,
        }
    }

    /// Estimated volume of the rejection region.
    pub fn reject_fraction(&self) -> f64 {
        1.0 - self.accept_fraction
    }
}

/// Monte Carlo acceptance estimate for an arbitrary score function over
/// `[0, 1]^feature_count`. Results do not depend on the number of worker
/// threads.
pub fn estimate_region_with<F>(
    feature_count: usize,
    n_samples: u64,
    seed: u64,
    grid: &ThresholdGrid,
    score: F,
) -> Result<Vec<RegionEstimate>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n_samples == 0 {
        return Err(Error::invalid("Monte Carlo needs at least one sample"));
    }
    let blocks = n_samples.div_ceil(MC_BLOCK as u64);
    let hist = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed::derived_rng(seed, &[purpose::MONTE_CARLO, b]);
            let start = b * MC_BLOCK as u64;
            let size = (n_samples - start).min(MC_BLOCK as u64);
            let mut x = vec![0.0; feature_count];
            let mut hist = vec![0u64; grid.len() + 1];
            for _ in 0..size {
                for v in &mut x {
                    *v = rng.random::<f64>();
                }
                hist[grid.accepted_prefix(score(&x))] += 1;
            }
            hist
        })
        .reduce(
            || vec![0u64; grid.len() + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(ThresholdGrid::accepted_counts(&hist)
        .into_iter()
        .zip(grid.values())
        .map(|(accepted, &t)| RegionEstimate::new(t, accepted, n_samples, seed))
        .collect())
}

pub fn estimate_acceptance_region(
    model: &ScoringModel,
    n_samples: u64,
    seed: u64,
    grid: &ThresholdGrid,
) -> Result<Vec<RegionEstimate>> {
    estimate_region_with(model.feature_count(), n_samples, seed, grid, |x| {
        model.score_unchecked(x)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EerPoint {
    pub index: usize,
    pub threshold: f64,
    pub frr: f64,
    pub fpr: f64,
    pub ar: f64,
    /// `|FRR - FPR|` at the chosen grid point.
    pub discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCurve {
    pub thresholds: Vec<f64>,
    pub frr: Vec<f64>,
    pub fpr: Vec<f64>,
    pub ar: Vec<f64>,
    pub eer: EerPoint,
}

impl ThresholdCurve {
    pub fn new(thresholds: Vec<f64>, frr: Vec<f64>, fpr: Vec<f64>, ar: Vec<f64>) -> Result<Self> {
        let t = thresholds.len();
        if t == 0 || frr.len() != t || fpr.len() != t || ar.len() != t {
            return Err(Error::invalid("curve columns must be nonempty and equally long"));
        }
        let eer = locate_eer(&thresholds, &frr, &fpr, &ar);
        Ok(ThresholdCurve {
            thresholds,
            frr,
            fpr,
            ar,
            eer,
        })
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// Pointwise mean of curves on a shared grid; the EER is relocated on
    /// the averaged curve.
    pub fn average(curves: &[ThresholdCurve]) -> Result<Self> {
        let first = curves
            .first()
            .ok_or_else(|| Error::invalid("nothing to average"))?;
        if curves.iter().any(|c| c.thresholds != first.thresholds) {
            return Err(Error::invalid("curves use different threshold grids"));
        }
        let k = curves.len() as f64;
        let mean = |pick: fn(&ThresholdCurve) -> &Vec<f64>| -> Vec<f64> {
            (0..first.len())
                .map(|i| curves.iter().map(|c| pick(c)[i]).sum::<f64>() / k)
                .collect()
        };
        Self::new(
            first.thresholds.clone(),
            mean(|c| &c.frr),
            mean(|c| &c.fpr),
            mean(|c| &c.ar),
        )
    }
}

fn locate_eer(thresholds: &[f64], frr: &[f64], fpr: &[f64], ar: &[f64]) -> EerPoint {
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for (i, (a, b)) in frr.iter().zip(fpr).enumerate() {
        let gap = (a - b).abs();
        if gap < best_gap {
            best = i;
            best_gap = gap;
        }
    }
    EerPoint {
        index: best,
        threshold: thresholds[best],
        frr: frr[best],
        fpr: fpr[best],
        ar: ar[best],
        discrepancy: best_gap,
    }
}

/// Grid point minimizing `|FRR - FPR|`, ties to the lowest threshold.
pub fn find_eer(curve: &ThresholdCurve) -> EerPoint {
    locate_eer(&curve.thresholds, &curve.frr, &curve.fpr, &curve.ar)
}

/// FRR/FPR curves from raw scores. FRR(t) is the fraction of positive
/// scores below `t`, FPR(t) the fraction of negative scores at or above it.
pub fn curve_from_scores(
    positive_scores: &[f64],
    negative_scores: &[f64],
    ar: &[f64],
    grid: &ThresholdGrid,
) -> Result<ThresholdCurve> {
    if positive_scores.is_empty() || negative_scores.is_empty() {
        return Err(Error::invalid("test set must contain both classes"));
    }
    if ar.len() != grid.len() {
        return Err(Error::invalid("acceptance estimates do not match the threshold grid"));
    }
    let pos_accept = ThresholdGrid::accepted_counts(&grid.histogram(positive_scores.iter().copied()));
    let neg_accept = ThresholdGrid::accepted_counts(&grid.histogram(negative_scores.iter().copied()));
    let p = positive_scores.len() as f64;
    let q = negative_scores.len() as f64;
    let frr = pos_accept.iter().map(|&a| (p - a as f64) / p).collect();
    let fpr = neg_accept.iter().map(|&a| a as f64 / q).collect();
    ThresholdCurve::new(grid.values().to_vec(), frr, fpr, ar.to_vec())
}

/// Scores of the positive and negative test samples.
pub fn split_scores(model: &ScoringModel, test: &LabeledDataset) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for s in test.iter() {
        let score = model.score(&s.vector)?;
        if s.label.is_positive() {
            pos.push(score);
        } else {
            neg.push(score);
        }
    }
    Ok((pos, neg))
}

pub fn evaluate_curves(
    model: &ScoringModel,
    test: &LabeledDataset,
    ar: &[RegionEstimate],
    grid: &ThresholdGrid,
) -> Result<ThresholdCurve> {
    if !test.has_both_classes() {
        return Err(Error::invalid("test set must contain both classes"));
    }
    if ar.iter().zip(grid.values()).any(|(e, &t)| e.threshold != t) {
        return Err(Error::invalid("acceptance estimates use a different grid"));
    }
    let (pos, neg) = split_scores(model, test)?;
    let ar_values: Vec<f64> = ar.iter().map(|e| e.accept_fraction).collect();
    curve_from_scores(&pos, &neg, &ar_values, grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeMode {
    /// A bin counts when it holds more than the cutoff number of values.
    Binned,
    /// Every bin between the minimum and maximum value counts.
    Span,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedRegionReport {
    pub bins: usize,
    pub cutoff: usize,
    pub mode: VolumeMode,
    pub alphas: Vec<usize>,
    pub log10_volume: f64,
}

/// Bin of a value in `[0, 1]` split into `bins` equal parts; out-of-range
/// values clamp to the end bins.
pub fn bin_index(value: f64, bins: usize) -> usize {
    let b = (value * bins as f64).floor();
    if b < 0.0 {
        0
    } else {
        (b as usize).min(bins - 1)
    }
}

/// `sum_i log10(alpha_i / bins)`; negative infinity once any count is zero.
pub fn log10_volume(alphas: &[usize], bins: usize) -> f64 {
    alphas
        .iter()
        .map(|&a| (a as f64 / bins as f64).log10())
        .sum()
}

fn validate_samples<V: AsRef<[f64]>>(samples: &[V], bins: usize) -> Result<usize> {
    if bins == 0 {
        return Err(Error::invalid("bin count must be positive"));
    }
    let first = samples
        .first()
        .ok_or_else(|| Error::invalid("no samples to bin"))?;
    let n = first.as_ref().len();
    if samples.iter().any(|s| s.as_ref().len() != n) {
        return Err(Error::invalid("samples have different feature counts"));
    }
    Ok(n)
}

/// Per-feature membership of each bin.
fn filled_bins<V: AsRef<[f64]>>(samples: &[V], n: usize, bins: usize, cutoff: usize) -> Vec<Vec<bool>> {
    (0..n)
        .map(|i| {
            let mut counts = vec![0usize; bins];
            for s in samples {
                counts[bin_index(s.as_ref()[i], bins)] += 1;
            }
            counts.into_iter().map(|c| c > cutoff).collect()
        })
        .collect()
}

pub fn measure_region_volume<V: AsRef<[f64]>>(
    samples: &[V],
    bins: usize,
    cutoff: usize,
    mode: VolumeMode,
) -> Result<BinnedRegionReport> {
    let n = validate_samples(samples, bins)?;
    let alphas: Vec<usize> = match mode {
        VolumeMode::Binned => filled_bins(samples, n, bins, cutoff)
            .into_iter()
            .map(|filled| filled.into_iter().filter(|&f| f).count())
            .collect(),
        VolumeMode::Span => (0..n)
            .map(|i| {
                let (lo, hi) = samples.iter().fold((usize::MAX, 0), |(lo, hi), s| {
                    let b = bin_index(s.as_ref()[i], bins);
                    (lo.min(b), hi.max(b))
                });
                hi - lo + 1
            })
            .collect(),
    };
    Ok(BinnedRegionReport {
        bins,
        cutoff,
        mode,
        log10_volume: log10_volume(&alphas, bins),
        alphas,
    })
}

/// log10 volume of the bins filled by both sample sets.
pub fn region_overlap<A: AsRef<[f64]>, B: AsRef<[f64]>>(
    a: &[A],
    b: &[B],
    bins: usize,
    cutoff: usize,
) -> Result<f64> {
    let na = validate_samples(a, bins)?;
    let nb = validate_samples(b, bins)?;
    if na != nb {
        return Err(Error::invalid(format!(
            "sample sets have {na} and {nb} features"
        )));
    }
    let fa = filled_bins(a, na, bins, cutoff);
    let fb = filled_bins(b, nb, bins, cutoff);
    let shared: Vec<usize> = fa
        .iter()
        .zip(&fb)
        .map(|(x, y)| x.iter().zip(y).filter(|(p, q)| **p && **q).count())
        .collect();
    Ok(log10_volume(&shared, bins))
}
