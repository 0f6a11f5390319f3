use serde::{Deserialize, Serialize};

use super::{dot, Scorer, TrainConfig};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Distance matcher: cosine similarity to the mean of the positive
/// training vectors, mapped from [-1, 1] onto [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosineTemplate {
    pub template: Vec<f64>,
}

impl CosineTemplate {
    pub fn similarity(&self, x: &[f64]) -> Option<f64> {
        let xx = dot(x, x);
        if xx == 0.0 {
            return None;
        }
        let tt = dot(&self.template, &self.template);
        Some((dot(x, &self.template) / (xx * tt).sqrt()).clamp(-1.0, 1.0))
    }
}

impl Scorer for CosineTemplate {
    fn feature_count(&self) -> usize {
        self.template.len()
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        self.similarity(x).map_or(0.0, |c| (c + 1.0) / 2.0)
    }
}

/// Negative samples do not influence the template.
pub fn build_cosine_template(train: &LabeledDataset, _config: &TrainConfig) -> Result<CosineTemplate> {
    let mut template = vec![0.0; train.feature_count()];
    let mut count = 0usize;
    for s in train.positives() {
        for (t, &v) in template.iter_mut().zip(s.vector.iter()) {
            *t += v;
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::invalid("cosine template needs at least one positive sample"));
    }
    for t in &mut template {
        *t /= count as f64;
    }
    if template.iter().all(|&t| t == 0.0) {
        return Err(Error::invalid("cosine template is the zero vector"));
    }
    Ok(CosineTemplate { template })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Label, LabeledSample, UserId};

    fn data(with_negatives: bool) -> LabeledDataset {
        let mut samples = vec![
            LabeledSample::new(vec![0.2, 0.4, 0.0], Label::Positive, UserId(0)),
            LabeledSample::new(vec![0.4, 0.2, 0.0], Label::Positive, UserId(0)),
        ];
        if with_negatives {
            samples.push(LabeledSample::new(vec![0.9, 0.1, 0.7], Label::Negative, UserId(1)));
        }
        LabeledDataset::new(3, samples).unwrap()
    }

    #[test]
    fn template_scores_one() {
        let model = build_cosine_template(&data(true), &TrainConfig::default()).unwrap();
        assert_eq!(model.template, vec![0.30000000000000004, 0.30000000000000004, 0.0]);
        assert_eq!(model.score_unchecked(&model.template.clone()), 1.0);
    }

    #[test]
    fn orthogonal_scores_half() {
        let model = build_cosine_template(&data(true), &TrainConfig::default()).unwrap();
        assert_eq!(model.score_unchecked(&[0.0, 0.0, 0.8]), 0.5);
    }

    #[test]
    fn zero_vector_scores_zero() {
        let model = build_cosine_template(&data(true), &TrainConfig::default()).unwrap();
        assert_eq!(model.score_unchecked(&[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn negatives_are_ignored() {
        let a = build_cosine_template(&data(true), &TrainConfig::default()).unwrap();
        let b = build_cosine_template(&data(false), &TrainConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_template_rejected() {
        let ds = LabeledDataset::new(
            2,
            vec![LabeledSample::new(vec![0.0, 0.0], Label::Positive, UserId(0))],
        )
        .unwrap();
        assert!(build_cosine_template(&ds, &TrainConfig::default()).is_err());
    }
}
