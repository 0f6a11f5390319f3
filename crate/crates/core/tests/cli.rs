use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use arscope::harness::{ExperimentConfig, ExperimentName, Profile};
use arscope::Algorithm;

fn arscope(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arscope"))
        .current_dir(dir)
        .env_remove("ARSCOPE_OUT")
        .env_remove("ARSCOPE_THREADS")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = arscope(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn generate_train_measure_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--users", "5", "--features", "4", "--samples-per-user", "20", "--seed", "3", "--out", "pop.csv"]);
    assert_eq!(first_line(&d.join("pop.csv")), "user_id,label,f0,f1,f2,f3");

    ok(d, &["train", "--data", "pop.csv", "--user", "1", "--normalize", "--classifier", "rbfsvm", "--out", "m.json"]);
    let stdout = ok(d, &["measure-ar", "--model", "m.json", "--mc-samples", "5000", "--thresholds", "20", "--out", "r.csv"]);
    assert!(stdout.contains("AR at threshold 0.500"), "{stdout}");
    let region = fs::read_to_string(d.join("r.csv")).unwrap();
    assert_eq!(region.lines().count(), 21);
    assert!(region.starts_with("threshold,ar,std_error,samples\n0.000000,"));

    ok(d, &["region-volume", "--data", "pop.csv", "--user", "0", "--bins", "10", "--mode", "span", "--out", "v.csv"]);
    let volume = fs::read_to_string(d.join("v.csv")).unwrap();
    assert!(volume.starts_with("feature_index,alpha\n0,"));
    assert!(volume.lines().last().unwrap().starts_with("log10_volume,-"));

    ok(d, &["evaluate", "--data", "pop.csv", "--user", "2", "--classifier", "linsvm", "--reps", "2", "--mc-samples", "2000", "--out", "ev"]);
    assert_eq!(first_line(&d.join("ev/curve_linsvm.csv")), "threshold,frr,fpr,ar");
    assert_eq!(fs::read_to_string(d.join("ev/curve_linsvm.csv")).unwrap().lines().count(), 101);
}

#[test]
fn repeated_commands_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["a.csv", "b.csv"] {
        ok(d, &["generate", "--users", "3", "--features", "2", "--samples-per-user", "5", "--seed", "9", "--out", out]);
    }
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
}

fn write_config(d: &Path) {
    let mut c = ExperimentConfig::new(ExperimentName::RocCurves, Profile::Quick);
    c.repetitions = 1;
    c.mc_samples = 3000;
    c.users = 3;
    c.population.user_count = 6;
    c.population.feature_count = 5;
    c.population.samples_per_user = 30;
    c.classifiers = vec![Algorithm::LinearSvm, Algorithm::Cosine];
    fs::write(d.join("roc.toml"), c.to_toml().unwrap()).unwrap();
}

#[test]
fn experiment_manifest_rerun_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_config(d);
    ok(d, &["experiment", "--config", "roc.toml", "--out", "run1"]);
    ok(d, &["experiment", "--config", "run1/manifest.toml", "--out", "run2"]);
    for f in ["units.csv", "aggregate.csv", "curve_linsvm.csv", "summary_cosine.csv", "manifest.toml"] {
        assert_eq!(fs::read(d.join("run1").join(f)).unwrap(), fs::read(d.join("run2").join(f)).unwrap(), "{f}");
    }

    let agg = d.join("run1/aggregate.csv");
    let original = fs::read_to_string(&agg).unwrap();
    fs::write(&agg, "stale\n").unwrap();
    let stdout = ok(d, &["report", "run1"]);
    assert!(stdout.contains("rewritten"));
    assert_eq!(fs::read_to_string(&agg).unwrap(), original);
    assert!(stdout.contains("3 units") || stdout.contains("6 units"), "{stdout}");
}

#[test]
fn thread_setting_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_config(d);
    for (threads, out) in [("1", "t1"), ("2", "t2")] {
        let result = Command::new(env!("CARGO_BIN_EXE_arscope"))
            .current_dir(d)
            .env("ARSCOPE_THREADS", threads)
            .env("ARSCOPE_OUT", out)
            .args(["experiment", "--config", "roc.toml"])
            .output()
            .unwrap();
        assert!(result.status.success());
    }
    for f in ["units.csv", "aggregate.csv", "curve_linsvm.csv"] {
        assert_eq!(fs::read(d.join("t1").join(f)).unwrap(), fs::read(d.join("t2").join(f)).unwrap());
    }
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = arscope(d, &["experiment", "no-such-thing"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown experiment"));

    let out = arscope(d, &["measure-ar", "--model", "missing.json"]);
    assert!(!out.status.success());

    fs::write(d.join("bad.csv"), "user_id,label,f0\n0,maybe,0.5\n").unwrap();
    let out = arscope(d, &["train", "--data", "bad.csv", "--classifier", "linsvm"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("arscope: "));

    let out = arscope(d, &["train", "--data", "bad.csv"]);
    assert!(!out.status.success());
}
