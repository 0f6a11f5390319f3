use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use arscope::harness::{
    emit_report, load_manifest, recompute_aggregate, run_experiment, ExperimentConfig,
    ExperimentName, ExperimentOutput, Profile,
};
use arscope::Algorithm;

fn tiny(name: ExperimentName) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(name, Profile::Quick);
    c.repetitions = 2;
    c.mc_samples = 9000;
    c.users = 3;
    c.population.user_count = 6;
    c.population.feature_count = 5;
    c.population.samples_per_user = 30;
    c.classifiers = vec![Algorithm::LinearSvm, Algorithm::RandomForest, Algorithm::Mlp];
    c.train.tree_count = 7;
    c.train.mlp_hidden = vec![6];
    c.train.mlp_steps = 60;
    match name {
        ExperimentName::VaryUsers => c.grid = Some(vec![4.0, 6.0]),
        ExperimentName::IsolatedVariance | ExperimentName::PopulationVariance => {
            c.grid = Some(vec![0.1, 0.3])
        }
        ExperimentName::Propositions => {
            c.classifiers = vec![Algorithm::Perceptron, Algorithm::RandomForest]
        }
        _ => {}
    }
    c
}

fn run_with_threads(config: &ExperimentConfig, threads: usize) -> ExperimentOutput {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| run_experiment(config).unwrap())
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    for name in ExperimentName::ALL {
        let c = tiny(name);
        let one = tempfile::tempdir().unwrap();
        let three = tempfile::tempdir().unwrap();
        emit_report(&run_with_threads(&c, 1), one.path()).unwrap();
        emit_report(&run_with_threads(&c, 3), three.path()).unwrap();
        let a = read_dir(one.path());
        assert!(a.len() >= 6, "{name}: {:?}", a.keys());
        assert_eq!(a, read_dir(three.path()), "{name}");
    }
}

#[test]
fn manifest_reruns_byte_identically() {
    for name in [ExperimentName::RocCurves, ExperimentName::PopulationVariance, ExperimentName::Mitigation] {
        let first = tempfile::tempdir().unwrap();
        emit_report(&run_experiment(&tiny(name)).unwrap(), first.path()).unwrap();
        let config = load_manifest(&first.path().join("manifest.toml")).unwrap();
        let second = tempfile::tempdir().unwrap();
        emit_report(&run_experiment(&config).unwrap(), second.path()).unwrap();
        assert_eq!(read_dir(first.path()), read_dir(second.path()), "{name}");
    }
}

#[test]
fn aggregates_recompute_from_unit_rows() {
    for name in ExperimentName::ALL {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&run_experiment(&tiny(name)).unwrap(), dir.path()).unwrap();
        let stored = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
        assert_eq!(recompute_aggregate(dir.path()).unwrap(), stored, "{name}");
    }
}

#[test]
fn seeds_change_results() {
    let mut c = tiny(ExperimentName::PerUserAr);
    let a = run_experiment(&c).unwrap();
    c.seed += 1;
    let b = run_experiment(&c).unwrap();
    assert_ne!(a.units, b.units);
}
