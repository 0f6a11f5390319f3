//! Soft-margin SVMs trained by sequential minimal optimization on the dual
//!
//! ```text
//! min 1/2 a'Qa - e'a   s.t.  0 <= a_i <= C,  y'a = 0,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! using second-order working-set selection. The bias is not regularized.
//! The decision value `sum_i a_i y_i K(x_i, x) - rho` is squashed through the
//! logistic function to give a score; the map is strictly increasing, so
//! threshold sweeps trace the same ROC as the raw margin.

use serde::{Deserialize, Serialize};

use super::{dot, logistic, require_both_classes, Scorer, TrainConfig};
use crate::dataset::LabeledDataset;
use crate::error::Result;

const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => (-gamma * squared_distance(a, b)).exp(),
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the dual for points `x` with labels `y` in {-1, +1}.
pub fn solve_smo(
    x: &[&[f64]],
    y: &[f64],
    kernel: Kernel,
    c: f64,
    tolerance: f64,
    max_iterations: usize,
) -> SmoSolution {
    let m = x.len();
    let mut gram = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let k = kernel.eval(x[i], x[j]);
            gram[i * m + j] = k;
            gram[j * m + i] = k;
        }
    }
    let diag: Vec<f64> = (0..m).map(|i| gram[i * m + i]).collect();

    let mut alpha = vec![0.0; m];
    let mut grad = vec![-1.0; m];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        // i: maximal violating index from the "up" set.
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax_idx = usize::MAX;
        for t in 0..m {
            let v = -y[t] * grad[t];
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up && v >= gmax {
                gmax = v;
                gmax_idx = t;
            }
        }
        // j: second-order choice from the "low" set.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut gmin_idx = usize::MAX;
        let mut obj_min = f64::INFINITY;
        if gmax_idx != usize::MAX {
            let i = gmax_idx;
            let row_i = &gram[i * m..(i + 1) * m];
            for t in 0..m {
                let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
                if !in_low {
                    continue;
                }
                let v = y[t] * grad[t];
                if v >= gmax2 {
                    gmax2 = v;
                }
                let grad_diff = gmax + v;
                if grad_diff > 0.0 {
                    let quad = diag[i] + diag[t] - 2.0 * row_i[t];
                    let quad = if quad > 0.0 { quad } else { TAU };
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj <= obj_min {
                        obj_min = obj;
                        gmin_idx = t;
                    }
                }
            }
        }
        if gmax + gmax2 < tolerance || gmax_idx == usize::MAX || gmin_idx == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        let (i, j) = (gmax_idx, gmin_idx);
        let kij = gram[i * m + j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = diag[i] + diag[j] - 2.0 * kij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = diag[i] + diag[j] - 2.0 * kij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let di = (alpha[i] - old_i) * y[i];
        let dj = (alpha[j] - old_j) * y[j];
        let (row_i, row_j) = (&gram[i * m..(i + 1) * m], &gram[j * m..(j + 1) * m]);
        for t in 0..m {
            grad[t] += y[t] * (row_i[t] * di + row_j[t] * dj);
        }
    }

    // rho: average over free multipliers, else midpoint of the feasible range.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..m {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    };
    SmoSolution {
        alpha,
        rho,
        iterations,
        converged,
    }
}

/// `1/2 |w|^2 + C * sum max(0, 1 - y (w.x + b))`.
pub fn hinge_objective(weights: &[f64], bias: f64, data: &LabeledDataset, c: f64) -> f64 {
    let hinge: f64 = data
        .iter()
        .map(|s| (1.0 - s.label.sign() * (dot(weights, &s.vector) + bias)).max(0.0))
        .sum();
    0.5 * dot(weights, weights) + c * hinge
}

fn split_xy(train: &LabeledDataset) -> (Vec<&[f64]>, Vec<f64>) {
    train
        .iter()
        .map(|s| (s.vector.as_slice(), s.label.sign()))
        .unzip()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LinearSvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

impl Scorer for LinearSvm {
    fn feature_count(&self) -> usize {
        self.weights.len()
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        logistic(self.decision(x))
    }
}

pub fn train_linear_svm(train: &LabeledDataset, config: &TrainConfig) -> Result<LinearSvm> {
    require_both_classes(train, "linear SVM")?;
    let (x, y) = split_xy(train);
    let sol = solve_smo(
        &x,
        &y,
        Kernel::Linear,
        config.svm_c,
        config.svm_tolerance,
        config.svm_max_iterations,
    );
    let mut weights = vec![0.0; train.feature_count()];
    for ((xi, &yi), &ai) in x.iter().zip(&y).zip(&sol.alpha) {
        if ai > 0.0 {
            for (w, &v) in weights.iter_mut().zip(xi.iter()) {
                *w += ai * yi * v;
            }
        }
    }
    Ok(LinearSvm {
        weights,
        bias: -sol.rho,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbfSvm {
    pub gamma: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl RbfSvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, &coef)| coef * (-self.gamma * squared_distance(sv, x)).exp())
            .sum();
        sum - self.rho
    }
}

impl Scorer for RbfSvm {
    fn feature_count(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        logistic(self.decision(x))
    }
}

pub fn train_rbf_svm(train: &LabeledDataset, config: &TrainConfig) -> Result<RbfSvm> {
    require_both_classes(train, "RBF SVM")?;
    let gamma = config
        .rbf_gamma
        .unwrap_or(1.0 / train.feature_count() as f64);
    let (x, y) = split_xy(train);
    let sol = solve_smo(
        &x,
        &y,
        Kernel::Rbf { gamma },
        config.svm_c,
        config.svm_tolerance,
        config.svm_max_iterations,
    );
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for ((xi, &yi), &ai) in x.iter().zip(&y).zip(&sol.alpha) {
        if ai > 0.0 {
            support_vectors.push(xi.to_vec());
            coefficients.push(ai * yi);
        }
    }
    Ok(RbfSvm {
        gamma,
        support_vectors,
        coefficients,
        rho: sol.rho,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Label, LabeledSample, UserId};
    use crate::seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn dataset(points: Vec<(Vec<f64>, bool)>) -> LabeledDataset {
        let n = points[0].0.len();
        let samples = points
            .into_iter()
            .map(|(x, pos)| {
                let label = if pos { Label::Positive } else { Label::Negative };
                LabeledSample::new(x, label, UserId(0))
            })
            .collect();
        LabeledDataset::new(n, samples).unwrap()
    }

    fn accuracy(model: &dyn Scorer, data: &LabeledDataset) -> f64 {
        let correct = data
            .iter()
            .filter(|s| (model.score_unchecked(&s.vector) >= 0.5) == s.label.is_positive())
            .count();
        correct as f64 / data.len() as f64
    }

    fn xor_clusters(rng: &mut seed::Rng) -> LabeledDataset {
        let centers = [(0.25, 0.25, true), (0.75, 0.75, true), (0.25, 0.75, false), (0.75, 0.25, false)];
        let mut points = Vec::new();
        for &(cx, cy, pos) in &centers {
            for _ in 0..25 {
                let dx: f64 = rng.sample(StandardNormal);
                let dy: f64 = rng.sample(StandardNormal);
                points.push((vec![cx + 0.05 * dx, cy + 0.05 * dy], pos));
            }
        }
        dataset(points)
    }

    #[test]
    fn single_class_rejected() {
        let ds = dataset(vec![(vec![0.1], true), (vec![0.2], true)]);
        assert!(train_linear_svm(&ds, &TrainConfig::default()).is_err());
        assert!(train_rbf_svm(&ds, &TrainConfig::default()).is_err());
    }

    #[test]
    fn separable_threshold_data() {
        let mut rng = seed::rng(4);
        let points = (0..200)
            .map(|k| {
                let pos = k % 2 == 0;
                let x1 = if pos {
                    rng.random_range(0.55..1.0)
                } else {
                    rng.random_range(0.0..0.45)
                };
                let mut x = vec![x1];
                x.extend((0..4).map(|_| rng.random::<f64>()));
                (x, pos)
            })
            .collect();
        let ds = dataset(points);
        let svm = train_linear_svm(&ds, &TrainConfig::default()).unwrap();
        assert!(svm.converged);
        assert_eq!(accuracy(&svm, &ds), 1.0);
    }

    #[test]
    fn xor_needs_the_kernel() {
        let mut rng = seed::rng(12);
        let ds = xor_clusters(&mut rng);
        let config = TrainConfig {
            rbf_gamma: Some(10.0),
            ..TrainConfig::default()
        };
        let rbf = train_rbf_svm(&ds, &config).unwrap();
        let lin = train_linear_svm(&ds, &config).unwrap();
        assert!(accuracy(&rbf, &ds) >= 0.95, "rbf {}", accuracy(&rbf, &ds));
        // A line can isolate at most one of the four clusters.
        assert!(accuracy(&lin, &ds) <= 0.76, "lin {}", accuracy(&lin, &ds));
    }

    #[test]
    fn small_gamma_behaves_linearly() {
        let mut rng = seed::rng(31);
        let points: Vec<(Vec<f64>, bool)> = (0..120)
            .map(|_| {
                let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
                let m = x[0] + 0.5 * x[1] - 0.8;
                (x, m > 0.0)
            })
            .filter(|(x, _)| (x[0] + 0.5 * x[1] - 0.8).abs() > 0.05)
            .collect();
        let ds = dataset(points);
        let config = TrainConfig {
            svm_c: 1e4,
            rbf_gamma: Some(1e-3),
            ..TrainConfig::default()
        };
        let rbf = train_rbf_svm(&ds, &config).unwrap();
        let lin = train_linear_svm(&ds, &config).unwrap();
        let probes: Vec<Vec<f64>> = (0..2000)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let agree = probes
            .iter()
            .filter(|x| (rbf.score_unchecked(x) >= 0.5) == (lin.score_unchecked(x) >= 0.5))
            .count();
        assert!(agree as f64 / probes.len() as f64 >= 0.9);
    }

    #[test]
    fn support_vector_outscores_far_point() {
        let mut rng = seed::rng(3);
        let mut points = Vec::new();
        for _ in 0..30 {
            points.push((vec![0.5 + 0.02 * rng.random::<f64>(), 0.5 + 0.02 * rng.random::<f64>()], true));
        }
        for _ in 0..30 {
            points.push((vec![rng.random::<f64>() * 0.3, rng.random::<f64>()], false));
        }
        let ds = dataset(points);
        let config = TrainConfig {
            rbf_gamma: Some(20.0),
            ..TrainConfig::default()
        };
        let rbf = train_rbf_svm(&ds, &config).unwrap();
        let far = [0.0, 0.0];
        for sv in &rbf.support_vectors {
            if sv[0] >= 0.5 {
                assert!(rbf.score_unchecked(sv) >= rbf.score_unchecked(&far));
            }
        }
    }

    #[test]
    fn hinge_objective_matches_grid_oracle() {
        let mut rng = seed::rng(77);
        let c = 1.0;
        for _ in 0..5 {
            let points: Vec<(Vec<f64>, bool)> = (0..20)
                .map(|k| {
                    let pos = k % 2 == 0;
                    let shift = if pos { 0.6 } else { 0.4 };
                    let x = vec![
                        shift + 0.15 * rng.sample::<f64, _>(StandardNormal),
                        rng.random::<f64>(),
                    ];
                    (x, pos)
                })
                .collect();
            let ds = dataset(points);
            let config = TrainConfig {
                svm_c: c,
                svm_tolerance: 1e-6,
                ..TrainConfig::default()
            };
            let svm = train_linear_svm(&ds, &config).unwrap();
            let ours = hinge_objective(&svm.weights, svm.bias, &ds, c);

            let steps: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.25).collect();
            let mut best = f64::INFINITY;
            for &w1 in &steps {
                for &w2 in &steps {
                    for &b in &steps {
                        best = best.min(hinge_objective(&[w1, w2], b, &ds, c));
                    }
                }
            }
            assert!(ours <= best * 1.05, "smo {ours} vs grid {best}");
        }
    }
}
