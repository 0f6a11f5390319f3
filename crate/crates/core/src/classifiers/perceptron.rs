use serde::{Deserialize, Serialize};

use super::{dot, Scorer, TrainConfig};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Mistake-driven linear classifier with a hard 0/1 score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perceptron {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub epochs: usize,
    pub updates: usize,
}

impl Perceptron {
    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

impl Scorer for Perceptron {
    fn feature_count(&self) -> usize {
        self.weights.len()
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        if self.margin(x) > 0.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// Classic perceptron learning: sweep the samples in order and add
/// `y * x` (and `y` to the bias) on every sample with `y * margin <= 0`,
/// until an epoch passes without mistakes or the epoch cap is reached.
pub fn train_perceptron(
    train: &LabeledDataset,
    config: &TrainConfig,
    initial: Option<(Vec<f64>, f64)>,
) -> Result<Perceptron> {
    if train.is_empty() {
        return Err(Error::invalid("perceptron needs at least one training sample"));
    }
    let n = train.feature_count();
    let (mut weights, mut bias) = initial.unwrap_or_else(|| (vec![0.0; n], 0.0));
    if weights.len() != n {
        return Err(Error::invalid(format!(
            "initial weights have {} entries, expected {n}",
            weights.len()
        )));
    }
    let mut updates = 0;
    for epoch in 1..=config.perceptron_epochs {
        let mut mistakes = 0;
        for s in train.iter() {
            let y = s.label.sign();
            if y * (dot(&weights, &s.vector) + bias) <= 0.0 {
                for (w, &v) in weights.iter_mut().zip(s.vector.iter()) {
                    *w += y * v;
                }
                bias += y;
                mistakes += 1;
            }
        }
        updates += mistakes;
        if mistakes == 0 {
            return Ok(Perceptron {
                weights,
                bias,
                converged: true,
                epochs: epoch,
                updates,
            });
        }
    }
    Ok(Perceptron {
        weights,
        bias,
        converged: false,
        epochs: config.perceptron_epochs,
        updates,
    })
}
