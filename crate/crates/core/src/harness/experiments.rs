//! The named experiments.
//!
//! Seeds: with `key = label_key(experiment name)`, synthetic populations of
//! repetition `r` come from `derive(seed, [key, POPULATION, r])` and are
//! shared by every grid point, so sweeps compare grid values on common
//! random numbers. The train/test split of repetition `r` uses
//! `derive(seed, [key, SPLIT, r])`, a user's negatives
//! `derive(seed, [key, NEGATIVES, user, r])`, and training, beta noise and
//! Monte Carlo read `derive(seed, [key, user, r])`. Experiments on a fixed
//! population hand `derive(seed, [key, user])` to
//! [`run_user_evaluation`], which keys repetitions below it.

use rand::Rng as _;
use rayon::prelude::*;

use crate::classifiers::{train, train_perceptron, Algorithm, ScoringModel};
use crate::dataset::{
    assemble_from_split, train_test_split, Label, LabeledDataset, LabeledSample, Population, UserId,
};
use crate::error::{Error, Result};
use crate::interchange::load_population;
use crate::region::{
    estimate_acceptance_region, split_scores, EerPoint, ThresholdCurve, ThresholdGrid,
};
use crate::seed::{self, purpose};
use crate::synth::{
    generate_population, make_isolated_variance_config, make_population_variance_config,
    PopulationSpec, ISOLATED_USER,
};

use super::config::{ExperimentConfig, ExperimentName};
use super::evaluate::{evaluate_task, run_user_evaluation, EvalSettings, UserEvaluationReport};
use super::report::{aggregate, Cell, ExperimentOutput, Failure, Table, UnitRow};

const NORMAL: &str = "normal";
const MITIGATED: &str = "mitigated";

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    match config.experiment {
        ExperimentName::PerUserAr | ExperimentName::RocCurves | ExperimentName::Mitigation => {
            fixed_population(config)
        }
        ExperimentName::IsolatedVariance
        | ExperimentName::PopulationVariance
        | ExperimentName::DistanceClassifier
        | ExperimentName::VaryUsers => synthetic_sweep(config),
        ExperimentName::Propositions => propositions(config),
    }
}

fn experiment_key(config: &ExperimentConfig) -> u64 {
    seed::label_key(config.experiment.as_str())
}

fn threshold_grid(config: &ExperimentConfig) -> Result<ThresholdGrid> {
    match config.fixed_threshold {
        Some(t) => ThresholdGrid::new(vec![t]),
        None => ThresholdGrid::uniform(config.thresholds),
    }
}

fn settings(config: &ExperimentConfig, mitigate: bool) -> Result<EvalSettings> {
    Ok(EvalSettings {
        grid: threshold_grid(config)?,
        mc_samples: config.mc_samples,
        train_fraction: config.train_fraction,
        train: config.train.clone(),
        volume: config.volume,
        mitigate,
    })
}

fn unit_row(
    grid_value: f64,
    user: UserId,
    role: &str,
    classifier: Algorithm,
    condition: &str,
    eer: &EerPoint,
) -> UnitRow {
    UnitRow {
        grid_value,
        user_id: user.0,
        role: role.to_string(),
        classifier: classifier.name().to_string(),
        condition: condition.to_string(),
        eer_index: eer.index,
        threshold: eer.threshold,
        frr: eer.frr,
        fpr: eer.fpr,
        ar: eer.ar,
        discrepancy: eer.discrepancy,
    }
}

fn curve_tables(name: &str, curve: &ThresholdCurve) -> [Table; 2] {
    let mut c = Table::new(format!("curve_{name}.csv"), &["threshold", "frr", "fpr", "ar"]);
    for i in 0..curve.len() {
        c.push(vec![
            curve.thresholds[i].into(),
            curve.frr[i].into(),
            curve.fpr[i].into(),
            curve.ar[i].into(),
        ]);
    }
    let mut s = Table::new(
        format!("summary_{name}.csv"),
        &["eer_index", "frr_at_eer", "fpr_at_eer", "ar_at_eer", "eer_discrepancy"],
    );
    let e = curve.eer;
    s.push(vec![
        e.index.into(),
        e.frr.into(),
        e.fpr.into(),
        e.ar.into(),
        e.discrepancy.into(),
    ]);
    [c, s]
}

fn source_population(config: &ExperimentConfig) -> Result<Population> {
    match &config.dataset {
        Some(path) => load_population(path),
        None => generate_population(
            &config.population,
            seed::derive(config.seed, &[experiment_key(config), purpose::POPULATION]),
        ),
    }
}

/// Per-user evaluations on one population: per-user-ar, roc-curves and
/// mitigation.
fn fixed_population(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let population = source_population(config)?;
    let key = experiment_key(config);
    let targets: Vec<UserId> = population.user_ids().into_iter().take(config.users).collect();
    let conditions: &[&str] = if config.experiment == ExperimentName::Mitigation {
        &[NORMAL, MITIGATED]
    } else {
        &[NORMAL]
    };
    let plain = settings(config, false)?;
    let mitigated = settings(config, true)?;
    let mut jobs = Vec::new();
    for &user in &targets {
        for &clf in &config.classifiers {
            for &cond in conditions {
                jobs.push((user, clf, cond));
            }
        }
    }
    let results: Vec<Result<UserEvaluationReport>> = jobs
        .par_iter()
        .map(|&(user, clf, cond)| {
            let s = if cond == MITIGATED { &mitigated } else { &plain };
            run_user_evaluation(
                &population,
                user,
                clf,
                s,
                config.repetitions,
                seed::derive(config.seed, &[key, u64::from(user.0)]),
            )
        })
        .collect();

    let mut units = Vec::new();
    let mut failures = Vec::new();
    let mut reports = Vec::new();
    for (&(user, clf, cond), result) in jobs.iter().zip(results) {
        match result {
            Ok(r) => {
                units.push(unit_row(0.0, user, "all", clf, cond, &r.eer));
                reports.push((cond, r));
            }
            Err(e) => failures.push(Failure {
                unit: format!("user {user} {clf} {cond}"),
                error: e.to_string(),
            }),
        }
    }

    let mut tables = Vec::new();
    let mut summary = Vec::new();
    match config.experiment {
        ExperimentName::PerUserAr => {
            let mut scatter = Table::new(
                "scatter.csv",
                &["user_id", "classifier", "fpr_at_eer", "ar_at_eer"],
            );
            let mut regions = Table::new(
                "regions.csv",
                &["user_id", "classifier", "log10_positive_region", "log10_negative_region"],
            );
            for (_, r) in &reports {
                scatter.push(vec![
                    r.user.0.into(),
                    r.classifier.name().into(),
                    r.eer.fpr.into(),
                    r.eer.ar.into(),
                ]);
                regions.push(vec![
                    r.user.0.into(),
                    r.classifier.name().into(),
                    r.log10_positive_region.into(),
                    r.log10_negative_region.into(),
                ]);
            }
            for clf in &config.classifiers {
                let rows: Vec<&UserEvaluationReport> =
                    reports.iter().map(|(_, r)| r).filter(|r| r.classifier == *clf).collect();
                let above = rows.iter().filter(|r| r.eer.ar > r.eer.fpr).count();
                summary.push(format!(
                    "{clf}: AR above FPR at EER for {above} of {} users",
                    rows.len()
                ));
            }
            tables.push(scatter);
            tables.push(regions);
        }
        ExperimentName::RocCurves => {
            for clf in &config.classifiers {
                let curves: Vec<ThresholdCurve> = reports
                    .iter()
                    .filter(|(_, r)| r.classifier == *clf)
                    .map(|(_, r)| r.curve.clone())
                    .collect();
                if curves.is_empty() {
                    continue;
                }
                let mean = ThresholdCurve::average(&curves)?;
                summary.push(format!(
                    "{clf}: EER {:.4} (FRR {:.4}, FPR {:.4}), AR at EER {:.4}",
                    (mean.eer.frr + mean.eer.fpr) / 2.0,
                    mean.eer.frr,
                    mean.eer.fpr,
                    mean.eer.ar
                ));
                tables.extend(curve_tables(clf.name(), &mean));
            }
        }
        ExperimentName::Mitigation => {
            let mut table = Table::new(
                "mitigation.csv",
                &[
                    "classifier",
                    "normal_frr",
                    "normal_fpr",
                    "normal_ar",
                    "mitigated_frr",
                    "mitigated_fpr",
                    "mitigated_ar",
                ],
            );
            let agg = aggregate(&units);
            for clf in &config.classifiers {
                let find = |cond: &str| agg.iter().find(|a| a.classifier == clf.name() && a.condition == cond);
                let (Some(n), Some(m)) = (find(NORMAL), find(MITIGATED)) else {
                    continue;
                };
                table.push(vec![
                    clf.name().into(),
                    n.frr.into(),
                    n.fpr.into(),
                    n.ar.into(),
                    m.frr.into(),
                    m.fpr.into(),
                    m.ar.into(),
                ]);
                summary.push(format!(
                    "{clf}: AR at EER {:.4} -> {:.4}, FPR {:.4} -> {:.4}",
                    n.ar, m.ar, n.fpr, m.fpr
                ));
            }
            tables.push(table);
        }
        _ => unreachable!(),
    }
    Ok(ExperimentOutput {
        config: config.clone(),
        units,
        failures,
        tables,
        summary,
    })
}

struct SweepGridPoint {
    value: f64,
    /// Column printed in the plot tables (relative SD or user count).
    label: f64,
    spec: PopulationSpec,
    targets: Vec<(UserId, &'static str)>,
}

fn sweep_points(config: &ExperimentConfig) -> Result<Vec<SweepGridPoint>> {
    let base = &config.population;
    let grid = config.grid.clone();
    let isolated_targets = |users: usize, extra: usize| -> Vec<(UserId, &'static str)> {
        let mut t = vec![(UserId(ISOLATED_USER), "isolated")];
        t.extend((1..=extra.min(users - 1)).map(|u| (UserId(u as u32), "system")));
        t
    };
    Ok(match config.experiment {
        ExperimentName::IsolatedVariance => {
            make_isolated_variance_config(&grid.unwrap_or_else(crate::synth::default_sd_grid))?
                .into_iter()
                .map(|pt| SweepGridPoint {
                    value: pt.grid_value,
                    label: pt.relative_sd,
                    targets: isolated_targets(base.user_count, config.users.saturating_sub(1)),
                    spec: PopulationSpec {
                        isolated: pt.spec.isolated,
                        ..base.clone()
                    },
                })
                .collect()
        }
        ExperimentName::PopulationVariance => {
            let system = config.system_users.unwrap_or(config.users.saturating_sub(1));
            make_population_variance_config(&grid.unwrap_or_else(crate::synth::default_sd_grid))?
                .into_iter()
                .map(|pt| SweepGridPoint {
                    value: pt.grid_value,
                    label: pt.relative_sd,
                    targets: isolated_targets(base.user_count, system),
                    spec: PopulationSpec {
                        user_variance: pt.spec.user_variance,
                        isolated: pt.spec.isolated,
                        ..base.clone()
                    },
                })
                .collect()
        }
        ExperimentName::DistanceClassifier => vec![SweepGridPoint {
            value: 0.0,
            label: 0.0,
            targets: (0..config.users.min(base.user_count) as u32)
                .map(|u| (UserId(u), "all"))
                .collect(),
            spec: base.clone(),
        }],
        ExperimentName::VaryUsers => grid
            .unwrap_or_else(|| (1..=6).map(|k| f64::from(k) * 25.0).collect())
            .into_iter()
            .map(|g| {
                if g.fract() != 0.0 || g < 2.0 {
                    return Err(Error::invalid(format!("user count {g} is not an integer >= 2")));
                }
                let count = g as usize;
                Ok(SweepGridPoint {
                    value: g,
                    label: g,
                    targets: (0..config.users.min(count) as u32)
                        .map(|u| (UserId(u), "all"))
                        .collect(),
                    spec: PopulationSpec {
                        user_count: count,
                        ..base.clone()
                    },
                })
            })
            .collect::<Result<_>>()?,
        _ => unreachable!(),
    })
}

/// Synthetic experiments that regenerate the population every repetition.
fn synthetic_sweep(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    if config.dataset.is_some() {
        return Err(Error::invalid(format!(
            "{} runs on synthetic populations only",
            config.experiment
        )));
    }
    let key = experiment_key(config);
    let points = sweep_points(config)?;
    let settings = settings(config, false)?;
    let mut units = Vec::new();
    let mut failures = Vec::new();
    let mut mean_curves: Vec<(usize, Algorithm, ThresholdCurve)> = Vec::new();

    for (gi, point) in points.iter().enumerate() {
        // (target, classifier) -> per-repetition curves
        let jobs: Vec<(UserId, &str, Algorithm)> = point
            .targets
            .iter()
            .flat_map(|&(u, role)| config.classifiers.iter().map(move |&c| (u, role, c)))
            .collect();
        let mut curves: Vec<Result<Vec<ThresholdCurve>>> = jobs.iter().map(|_| Ok(Vec::new())).collect();
        for rep in 0..config.repetitions as u64 {
            let population = generate_population(
                &point.spec,
                seed::derive(config.seed, &[key, purpose::POPULATION, rep]),
            )?;
            let (normalized, _) = population.normalize()?;
            let split = normalized.split(
                config.train_fraction,
                seed::derive(config.seed, &[key, purpose::SPLIT, rep]),
            )?;
            let results: Vec<Result<ThresholdCurve>> = jobs
                .par_iter()
                .map(|&(user, _, clf)| {
                    let u = u64::from(user.0);
                    let task = assemble_from_split(
                        &split,
                        user,
                        seed::derive(config.seed, &[key, purpose::NEGATIVES, u, rep]),
                    )?;
                    evaluate_task(&task, clf, &settings, seed::derive(config.seed, &[key, u, rep]))
                })
                .collect();
            for (slot, result) in curves.iter_mut().zip(results) {
                match (slot.as_mut(), result) {
                    (Ok(list), Ok(c)) => list.push(c),
                    (Ok(_), Err(e)) => *slot = Err(e),
                    (Err(_), _) => {}
                }
            }
        }
        for (&(user, role, clf), result) in jobs.iter().zip(curves) {
            match result.and_then(|c| ThresholdCurve::average(&c)) {
                Ok(curve) => {
                    units.push(unit_row(point.value, user, role, clf, NORMAL, &curve.eer));
                    if config.experiment == ExperimentName::DistanceClassifier {
                        mean_curves.push((gi, clf, curve));
                    }
                }
                Err(e) => failures.push(Failure {
                    unit: format!("grid {} user {user} {clf}", point.value),
                    error: e.to_string(),
                }),
            }
        }
    }

    let agg = aggregate(&units);
    let lookup = |value: f64, role: &str, clf: Algorithm| {
        agg.iter()
            .find(|a| a.grid_value == value && a.role == role && a.classifier == clf.name())
    };
    let mut tables = Vec::new();
    let mut summary = Vec::new();
    match config.experiment {
        ExperimentName::IsolatedVariance | ExperimentName::PopulationVariance => {
            for &clf in &config.classifiers {
                let mut t = Table::new(
                    format!("series_{clf}.csv"),
                    &[
                        "relative_sd",
                        "system_frr",
                        "system_fpr",
                        "system_ar",
                        "isolated_frr",
                        "isolated_fpr",
                        "isolated_ar",
                    ],
                );
                for p in &points {
                    let mut row: Vec<Cell> = vec![p.label.into()];
                    for role in ["system", "isolated"] {
                        match lookup(p.value, role, clf) {
                            Some(a) => row.extend([a.frr.into(), a.fpr.into(), a.ar.into()]),
                            None => row.extend([f64::NAN.into(), f64::NAN.into(), f64::NAN.into()]),
                        }
                    }
                    if let Some(a) = lookup(p.value, "isolated", clf) {
                        summary.push(format!(
                            "{clf} relative SD {:.2}: isolated AR {:.4} FPR {:.4} FRR {:.4}",
                            p.label, a.ar, a.fpr, a.frr
                        ));
                    }
                    t.push(row);
                }
                tables.push(t);
            }
        }
        ExperimentName::DistanceClassifier => {
            let mut t = Table::new(
                "comparison.csv",
                &["classifier", "eer", "frr_at_eer", "fpr_at_eer", "ar_at_eer"],
            );
            for &clf in &config.classifiers {
                let Some(a) = lookup(0.0, "all", clf) else { continue };
                let eer = (a.frr + a.fpr) / 2.0;
                t.push(vec![
                    clf.name().into(),
                    eer.into(),
                    a.frr.into(),
                    a.fpr.into(),
                    a.ar.into(),
                ]);
                summary.push(format!("{clf}: EER {eer:.4}, AR at EER {:.4}", a.ar));
                let curves: Vec<ThresholdCurve> = mean_curves
                    .iter()
                    .filter(|(_, c, _)| *c == clf)
                    .map(|(_, _, curve)| curve.clone())
                    .collect();
                if !curves.is_empty() {
                    tables.extend(curve_tables(clf.name(), &ThresholdCurve::average(&curves)?));
                }
            }
            tables.insert(0, t);
        }
        ExperimentName::VaryUsers => {
            for &clf in &config.classifiers {
                let mut t = Table::new(
                    format!("series_{clf}.csv"),
                    &["users", "frr_at_eer", "fpr_at_eer", "ar_at_eer"],
                );
                for p in &points {
                    if let Some(a) = lookup(p.value, "all", clf) {
                        t.push(vec![(p.label as usize).into(), a.frr.into(), a.fpr.into(), a.ar.into()]);
                        summary.push(format!(
                            "{clf} with {} users: FPR {:.4}, AR {:.4}",
                            p.label, a.fpr, a.ar
                        ));
                    }
                }
                tables.push(t);
            }
        }
        _ => unreachable!(),
    }
    Ok(ExperimentOutput {
        config: config.clone(),
        units,
        failures,
        tables,
        summary,
    })
}

/// Positives have `x_1` in `(0.5, 1]`, negatives in `[0, 0.5)`; the other
/// features are uniform. Positives belong to user 0, negatives to user 1.
pub fn proposition_two_dataset(feature_count: usize, per_class: usize, seed: u64) -> Result<LabeledDataset> {
    if feature_count == 0 || per_class == 0 {
        return Err(Error::invalid("need at least one feature and one sample per class"));
    }
    let mut rng = seed::rng(seed);
    let mut samples = Vec::with_capacity(2 * per_class);
    for label in [Label::Positive, Label::Negative] {
        for _ in 0..per_class {
            let mut x: Vec<f64> = (0..feature_count).map(|_| rng.random::<f64>()).collect();
            let u: f64 = rng.random();
            x[0] = if label.is_positive() { 1.0 - 0.5 * u } else { 0.5 * u };
            let user = if label.is_positive() { UserId(0) } else { UserId(1) };
            samples.push(LabeledSample::new(x, label, user));
        }
    }
    LabeledDataset::new(feature_count, samples)
}

/// Points labeled by a random hyperplane through the cube, keeping only
/// those at least `margin` away from it.
pub fn planted_separable_dataset(
    feature_count: usize,
    per_class: usize,
    margin: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if feature_count == 0 || per_class == 0 {
        return Err(Error::invalid("need at least one feature and one sample per class"));
    }
    let mut rng = seed::rng(seed);
    let w: Vec<f64> = (0..feature_count).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = -w.iter().sum::<f64>() / 2.0;
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    while pos.len() < per_class || neg.len() < per_class {
        let x: Vec<f64> = (0..feature_count).map(|_| rng.random::<f64>()).collect();
        let m = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b;
        if m >= margin && pos.len() < per_class {
            pos.push(LabeledSample::new(x, Label::Positive, UserId(0)));
        } else if m <= -margin && neg.len() < per_class {
            neg.push(LabeledSample::new(x, Label::Negative, UserId(1)));
        }
    }
    pos.extend(neg);
    LabeledDataset::new(feature_count, pos)
}

/// Fraction of positives rejected and negatives accepted at `threshold`.
fn rates_at(model: &ScoringModel, data: &LabeledDataset, threshold: f64) -> Result<(f64, f64)> {
    let (pos, neg) = split_scores(model, data)?;
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::invalid("evaluation set must contain both classes"));
    }
    let frr = pos.iter().filter(|&&s| s < threshold).count() as f64 / pos.len() as f64;
    let fpr = neg.iter().filter(|&&s| s >= threshold).count() as f64 / neg.len() as f64;
    Ok((frr, fpr))
}

fn propositions(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    const N: usize = 10;
    const PER_CLASS: usize = 200;
    const THRESHOLD: f64 = 0.5;
    let key = experiment_key(config);
    let grid = ThresholdGrid::new(vec![THRESHOLD])?;
    let mut table = Table::new(
        "propositions.csv",
        &[
            "proposition",
            "classifier",
            "updates",
            "converged",
            "train_frr",
            "train_fpr",
            "test_frr",
            "test_fpr",
            "ar",
            "ar_stderr",
        ],
    );
    let mut units = Vec::new();
    let mut failures = Vec::new();
    let mut summary = Vec::new();

    for prop in [1u32, 2] {
        let data_seed = seed::derive(config.seed, &[key, u64::from(prop)]);
        let data = if prop == 1 {
            planted_separable_dataset(N, PER_CLASS, 0.05, data_seed)?
        } else {
            proposition_two_dataset(N, PER_CLASS, data_seed)?
        };
        let (train_set, test_set) =
            train_test_split(&data, config.train_fraction, seed::derive(data_seed, &[purpose::SPLIT]))?;
        for &clf in &config.classifiers {
            let train_config = config.train.with_seed(seed::derive(data_seed, &[purpose::TRAIN]));
            let outcome = (|| -> Result<Vec<Cell>> {
                let (model, updates, converged) = if clf == Algorithm::Perceptron {
                    let initial = (prop == 2).then(|| {
                        let mut w = vec![0.0; N];
                        w[0] = 1.0;
                        (w, -0.5)
                    });
                    let p = train_perceptron(&train_set, &train_config, initial)?;
                    let (u, c) = (p.updates, p.converged);
                    (ScoringModel::Perceptron(p), Cell::from(u), Cell::from(usize::from(c)))
                } else {
                    (train(clf, &train_set, &train_config)?, Cell::from("-"), Cell::from("-"))
                };
                let (train_frr, train_fpr) = rates_at(&model, &train_set, THRESHOLD)?;
                let (test_frr, test_fpr) = rates_at(&model, &test_set, THRESHOLD)?;
                let est = estimate_acceptance_region(
                    &model,
                    config.mc_samples,
                    seed::derive(data_seed, &[purpose::MONTE_CARLO]),
                    &grid,
                )?[0];
                units.push(UnitRow {
                    grid_value: f64::from(prop),
                    user_id: 0,
                    role: "all".into(),
                    classifier: clf.name().into(),
                    condition: NORMAL.into(),
                    eer_index: 0,
                    threshold: THRESHOLD,
                    frr: test_frr,
                    fpr: test_fpr,
                    ar: est.accept_fraction,
                    discrepancy: (test_frr - test_fpr).abs(),
                });
                summary.push(format!(
                    "proposition {prop} {clf}: train FRR {train_frr:.4} FPR {train_fpr:.4}, test FRR {test_frr:.4} FPR {test_fpr:.4}, AR {:.4} +- {:.4}",
                    est.accept_fraction, est.std_error
                ));
                Ok(vec![
                    prop.into(),
                    clf.name().into(),
                    updates,
                    converged,
                    train_frr.into(),
                    train_fpr.into(),
                    test_frr.into(),
                    test_fpr.into(),
                    est.accept_fraction.into(),
                    est.std_error.into(),
                ])
            })();
            match outcome {
                Ok(row) => table.push(row),
                Err(e) => failures.push(Failure {
                    unit: format!("proposition {prop} {clf}"),
                    error: e.to_string(),
                }),
            }
        }
    }
    Ok(ExperimentOutput {
        config: config.clone(),
        units,
        failures,
        tables: vec![table],
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Profile;

    fn tiny(name: ExperimentName) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(name, Profile::Quick);
        c.repetitions = 1;
        c.mc_samples = 500;
        c.users = 3;
        c.population.user_count = 6;
        c.population.feature_count = 5;
        c.population.samples_per_user = 30;
        c.classifiers = vec![Algorithm::LinearSvm, Algorithm::Cosine];
        c
    }

    #[test]
    fn proposition_two_layout() {
        let d = proposition_two_dataset(10, 200, 1).unwrap();
        assert_eq!(d.len(), 400);
        assert!(d.positives().all(|s| s.vector[0] > 0.5));
        assert!(d.negatives().all(|s| s.vector[0] < 0.5));
    }

    #[test]
    fn planted_layout() {
        let d = planted_separable_dataset(4, 30, 0.05, 2).unwrap();
        assert_eq!(d.positive_count(), 30);
        assert_eq!(d.negative_count(), 30);
    }

    #[test]
    fn every_experiment_runs_small() {
        for name in ExperimentName::ALL {
            let mut c = tiny(name);
            match name {
                ExperimentName::VaryUsers => c.grid = Some(vec![4.0, 6.0]),
                ExperimentName::IsolatedVariance | ExperimentName::PopulationVariance => {
                    c.grid = Some(vec![0.1, 0.3])
                }
                ExperimentName::Propositions => c.classifiers = vec![Algorithm::Perceptron],
                _ => {}
            }
            let out = run_experiment(&c).unwrap();
            assert!(out.failures.is_empty(), "{name}: {:?}", out.failures);
            assert!(!out.units.is_empty(), "{name}");
            assert!(!out.tables.is_empty(), "{name}");
        }
    }

    #[test]
    fn mitigation_pairs_conditions() {
        let out = run_experiment(&tiny(ExperimentName::Mitigation)).unwrap();
        assert_eq!(out.units.len(), 3 * 2 * 2);
        assert_eq!(out.table("mitigation.csv").unwrap().rows.len(), 2);
    }

    #[test]
    fn user_failures_are_recorded() {
        let mut pop = generate_population(&tiny(ExperimentName::PerUserAr).population, 4).unwrap();
        let mut users = pop.users().to_vec();
        // One sample cannot be split into train and test.
        users[1].samples.truncate(1);
        pop = Population::new(5, users).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pop.csv");
        crate::interchange::save_population(&path, &pop).unwrap();
        let mut c = tiny(ExperimentName::PerUserAr);
        c.dataset = Some(path);
        c.classifiers = vec![Algorithm::LinearSvm];
        let out = run_experiment(&c).unwrap();
        assert_eq!(out.units.len(), 2);
        assert_eq!(out.failures.len(), 1);
        assert!(out.failures[0].unit.contains("user 1"));
    }

    #[test]
    fn synthetic_only_sweeps_reject_datasets() {
        let mut c = tiny(ExperimentName::VaryUsers);
        c.dataset = Some("x.csv".into());
        assert!(run_experiment(&c).is_err());
    }
}
