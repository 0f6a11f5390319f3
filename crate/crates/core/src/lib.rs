//! Acceptance-region auditing for biometric authentication classifiers.
//!
//! A trained model accepts a region of the normalized feature space
//! `[0, 1]^n`; its volume is the success probability of an attacker who
//! submits uniformly random feature vectors. This crate trains the usual
//! one-vs-rest authenticators on labeled populations, estimates that volume
//! by Monte Carlo next to the classical FRR/FPR curves, generates synthetic
//! populations for controlled studies, and implements beta-noise
//! augmentation that shrinks the region.

pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod interchange;
pub mod mitigation;
pub mod model_file;
pub mod region;
pub mod seed;
pub mod synth;

pub use classifiers::{train, Algorithm, ScoringModel, TrainConfig};
pub use dataset::{FeatureVector, Label, LabeledDataset, LabeledSample, Population, UserId};
pub use error::{Error, Result};
