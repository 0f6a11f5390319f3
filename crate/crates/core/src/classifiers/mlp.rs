//! Fully connected network: ReLU hidden layers, one logistic output unit,
//! mean binary cross-entropy loss, Adagrad updates on fixed-size minibatches.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{logistic, Scorer, TrainConfig};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::seed::{self, purpose};

/// Adagrad's starting accumulator value.
const INITIAL_ACCUMULATOR: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `inputs x outputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn glorot(inputs: usize, outputs: usize, rng: &mut seed::Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Dense {
            inputs,
            outputs,
            weights: (0..inputs * outputs)
                .map(|_| rng.random_range(-limit..limit))
                .collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        for (k, &xk) in x.iter().enumerate() {
            if xk == 0.0 {
                continue;
            }
            let row = &self.weights[k * self.outputs..(k + 1) * self.outputs];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += xk * w;
            }
        }
    }

    fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    pub fn new(inputs: usize, hidden: &[usize], seed: u64) -> Self {
        let mut rng = seed::derived_rng(seed, &[purpose::TRAIN, 0]);
        let mut widths = vec![inputs];
        widths.extend_from_slice(hidden);
        widths.push(1);
        let layers = widths
            .windows(2)
            .map(|w| Dense::glorot(w[0], w[1], &mut rng))
            .collect();
        Mlp { layers }
    }

    /// Activations of every layer; the last entry holds the output logit.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = vec![0.0; layer.outputs];
            layer.forward(&acts[l], &mut out);
            if l < last {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            acts.push(out);
        }
        acts
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut current = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = vec![0.0; layer.outputs];
            layer.forward(&current, &mut out);
            if l < last {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            current = out;
        }
        current[0]
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Dense::parameter_count).sum()
    }

    /// Flattened parameters: each layer's weights then its bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.parameter_count());
        let mut at = 0;
        for layer in &mut self.layers {
            let w = layer.weights.len();
            layer.weights.copy_from_slice(&params[at..at + w]);
            at += w;
            let b = layer.bias.len();
            layer.bias.copy_from_slice(&params[at..at + b]);
            at += b;
        }
    }

    /// Mean binary cross-entropy over the batch (targets in {0, 1}) and its
    /// gradient in [`Mlp::parameters`] layout.
    pub fn loss_and_gradient(&self, xs: &[&[f64]], targets: &[f64]) -> (f64, Vec<f64>) {
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
            .collect();
        let scale = 1.0 / xs.len() as f64;
        let mut loss = 0.0;
        for (x, &t) in xs.iter().zip(targets) {
            let acts = self.activations(x);
            let z = acts[self.layers.len()][0];
            loss += z.max(0.0) - z * t + (-z.abs()).exp().ln_1p();
            let mut delta = vec![(logistic(z) - t) * scale];
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let input = &acts[l];
                let (gw, gb) = &mut grads[l];
                for (g, &d) in gb.iter_mut().zip(&delta) {
                    *g += d;
                }
                for (k, &a) in input.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let row = &mut gw[k * layer.outputs..(k + 1) * layer.outputs];
                    for (g, &d) in row.iter_mut().zip(&delta) {
                        *g += a * d;
                    }
                }
                if l > 0 {
                    let mut prev = vec![0.0; layer.inputs];
                    for (k, p) in prev.iter_mut().enumerate() {
                        if input[k] > 0.0 {
                            let row = &layer.weights[k * layer.outputs..(k + 1) * layer.outputs];
                            *p = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
                        }
                    }
                    delta = prev;
                }
            }
        }
        let mut flat = Vec::with_capacity(self.parameter_count());
        for (gw, gb) in grads {
            flat.extend(gw);
            flat.extend(gb);
        }
        (loss * scale, flat)
    }
}

impl Scorer for Mlp {
    fn feature_count(&self) -> usize {
        self.layers[0].inputs
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        logistic(self.logit(x))
    }
}

/// Endless reshuffled pass over `0..m`; each pass is a fresh permutation.
struct BatchStream {
    order: Vec<usize>,
    at: usize,
    rng: seed::Rng,
}

impl BatchStream {
    fn next_batch(&mut self, size: usize) -> Vec<usize> {
        (0..size)
            .map(|_| {
                if self.at == self.order.len() {
                    self.order.shuffle(&mut self.rng);
                    self.at = 0;
                }
                self.at += 1;
                self.order[self.at - 1]
            })
            .collect()
    }
}

pub fn train_mlp(train: &LabeledDataset, config: &TrainConfig) -> Result<Mlp> {
    if train.is_empty() {
        return Err(Error::invalid("MLP needs at least one training sample"));
    }
    let mut model = Mlp::new(train.feature_count(), &config.mlp_hidden, config.seed);
    let x: Vec<&[f64]> = train.iter().map(|s| s.vector.as_slice()).collect();
    let y: Vec<f64> = train
        .iter()
        .map(|s| if s.label.is_positive() { 1.0 } else { 0.0 })
        .collect();
    let mut stream = BatchStream {
        order: (0..x.len()).collect(),
        at: x.len(),
        rng: seed::derived_rng(config.seed, &[purpose::TRAIN, 1]),
    };
    let mut params = model.parameters();
    let mut accumulator = vec![INITIAL_ACCUMULATOR; params.len()];
    let mut xs: Vec<&[f64]> = Vec::with_capacity(config.mlp_batch);
    let mut ys: Vec<f64> = Vec::with_capacity(config.mlp_batch);
    for step in 0..config.mlp_steps {
        xs.clear();
        ys.clear();
        for i in stream.next_batch(config.mlp_batch) {
            xs.push(x[i]);
            ys.push(y[i]);
        }
        let (loss, grad) = model.loss_and_gradient(&xs, &ys);
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged(format!(
                "loss became {loss} at step {step}"
            )));
        }
        for ((p, acc), g) in params.iter_mut().zip(&mut accumulator).zip(&grad) {
            *acc += g * g;
            *p -= config.mlp_learning_rate * g / acc.sqrt();
        }
        model.set_parameters(&params);
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::TrainingDiverged("non-finite weights".into()));
    }
    Ok(model)
}
