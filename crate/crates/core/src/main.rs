use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use arscope::dataset::{assemble_user_task, min_max_normalize, UserId};
use arscope::harness::{
    emit_report, load_manifest, recompute_aggregate, run_experiment, run_user_evaluation,
    units_from_csv, EvalSettings, ExperimentConfig, ExperimentName, Profile, Table, VolumeConfig,
};
use arscope::interchange::{load_dataset, load_population, save_population};
use arscope::model_file::ModelFile;
use arscope::region::{estimate_acceptance_region, measure_region_volume, ThresholdGrid, VolumeMode};
use arscope::synth::{generate_population, PopulationSpec};
use arscope::{train, Algorithm, Error, Result, TrainConfig};

#[derive(Parser)]
#[command(name = "arscope", version, about = "Acceptance-region audits for biometric classifiers")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true, env = "ARSCOPE_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileArg>,
    #[arg(long, global = true)]
    mc_samples: Option<u64>,
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Threshold grid size.
    #[arg(long, global = true)]
    thresholds: Option<usize>,
    /// Classifier; repeat for several.
    #[arg(long, global = true, value_enum)]
    classifier: Vec<ClassifierArg>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "ARSCOPE_THREADS")]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Quick,
    Paper,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ClassifierArg {
    Perceptron,
    Linsvm,
    Rbfsvm,
    Rndf,
    Mlp,
    Cosine,
}

impl From<ClassifierArg> for Algorithm {
    fn from(c: ClassifierArg) -> Self {
        match c {
            ClassifierArg::Perceptron => Algorithm::Perceptron,
            ClassifierArg::Linsvm => Algorithm::LinearSvm,
            ClassifierArg::Rbfsvm => Algorithm::RbfSvm,
            ClassifierArg::Rndf => Algorithm::RandomForest,
            ClassifierArg::Mlp => Algorithm::Mlp,
            ClassifierArg::Cosine => Algorithm::Cosine,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Binned,
    Span,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic population as CSV.
    Generate {
        /// TOML population spec; defaults to the standard 50 x 50 setup.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Tight features and per-user SDs (distance-classifier setup).
        #[arg(long)]
        distance_study: bool,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        features: Option<usize>,
        #[arg(long)]
        samples_per_user: Option<usize>,
    },
    /// Train one classifier on a labeled CSV and write a model file.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Treat the data as a population and train this user against the rest.
        #[arg(long)]
        user: Option<u32>,
        #[arg(long, default_value_t = 0.7)]
        train_fraction: f64,
        /// Min-max normalize first and store the parameters in the model.
        #[arg(long)]
        normalize: bool,
        /// TOML hyperparameters.
        #[arg(long)]
        train_config: Option<PathBuf>,
    },
    /// Monte Carlo acceptance region of a model, one row per threshold.
    MeasureAr {
        #[arg(long)]
        model: PathBuf,
    },
    /// Full methodology for one user of a population CSV.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        user: u32,
        #[arg(long, default_value_t = 0.7)]
        train_fraction: f64,
    },
    /// Run a named experiment.
    Experiment {
        /// per-user-ar, roc-curves, isolated-variance, population-variance,
        /// distance-classifier, vary-users, mitigation or propositions.
        name: Option<String>,
        /// Configuration or manifest to run instead of the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Recompute aggregates of a finished run and print its summary.
    Report { dir: PathBuf },
    /// Filled-bin volume of a sample set.
    RegionVolume {
        #[arg(long)]
        data: PathBuf,
        /// Only this user's samples.
        #[arg(long)]
        user: Option<u32>,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        #[arg(long, default_value_t = 0)]
        cutoff: usize,
        #[arg(long, value_enum, default_value = "binned")]
        mode: ModeArg,
    },
}

fn out_path(global: &Global, fallback: &str) -> PathBuf {
    global.out.clone().unwrap_or_else(|| PathBuf::from(fallback))
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, body)?;
    Ok(())
}

fn single_classifier(global: &Global) -> Result<Algorithm> {
    match global.classifier.as_slice() {
        [c] => Ok((*c).into()),
        [] => Err(Error::InvalidInput("--classifier is required".into())),
        _ => Err(Error::InvalidInput("exactly one --classifier expected".into())),
    }
}

fn threshold_grid(global: &Global) -> Result<ThresholdGrid> {
    ThresholdGrid::uniform(global.thresholds.unwrap_or(100))
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(t) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    let seed = g.seed.unwrap_or(0);
    let profile = match g.profile {
        Some(ProfileArg::Paper) => Profile::Paper,
        _ => Profile::Quick,
    };
    match cli.command {
        Command::Generate {
            spec,
            distance_study,
            users,
            features,
            samples_per_user,
        } => {
            let mut spec = match spec {
                Some(path) => toml::from_str(&fs::read_to_string(path)?)?,
                None if distance_study => PopulationSpec::distance_study(50),
                None => PopulationSpec::default(),
            };
            if let Some(u) = users {
                spec.user_count = u;
            }
            if let Some(n) = features {
                spec.feature_count = n;
            }
            if let Some(s) = samples_per_user {
                spec.samples_per_user = s;
            }
            let pop = generate_population(&spec, seed)?;
            let path = out_path(g, "population.csv");
            save_population(&path, &pop)?;
            println!(
                "wrote {} users x {} samples to {}",
                pop.user_count(),
                spec.samples_per_user,
                path.display()
            );
        }
        Command::Train {
            data,
            user,
            train_fraction,
            normalize,
            train_config,
        } => {
            let algorithm = single_classifier(g)?;
            let mut params = None;
            let dataset = match user {
                Some(u) => {
                    let mut pop = load_population(&data)?;
                    if normalize {
                        let (p, n) = pop.normalize()?;
                        pop = p;
                        params = Some(n);
                    }
                    assemble_user_task(&pop, UserId(u), train_fraction, seed)?.train
                }
                None => {
                    let dataset = load_dataset(&data)?;
                    if normalize {
                        let (d, n) = min_max_normalize(&dataset)?;
                        params = Some(n);
                        d
                    } else {
                        dataset
                    }
                }
            };
            let config: TrainConfig = match train_config {
                Some(path) => toml::from_str(&fs::read_to_string(path)?)?,
                None => TrainConfig::default(),
            };
            let model = train(algorithm, &dataset, &config.with_seed(seed))?;
            let path = out_path(g, "model.json");
            ModelFile::new(model, params).save(&path)?;
            println!("wrote {algorithm} model to {}", path.display());
        }
        Command::MeasureAr { model } => {
            let file = ModelFile::load(&model)?;
            let mc = g.mc_samples.unwrap_or(profile.mc_samples());
            let est = estimate_acceptance_region(&file.model, mc, seed, &threshold_grid(g)?)?;
            let mut t = Table::new("", &["threshold", "ar", "std_error", "samples"]);
            for e in &est {
                t.push(vec![e.threshold.into(), e.accept_fraction.into(), e.std_error.into(), (e.samples as usize).into()]);
            }
            let path = out_path(g, "region.csv");
            write_file(&path, &t.to_csv()?)?;
            let mid = est.partition_point(|e| e.threshold < 0.5).min(est.len() - 1);
            println!(
                "AR at threshold {:.3}: {:.6} +/- {:.6}",
                est[mid].threshold, est[mid].accept_fraction, est[mid].std_error
            );
        }
        Command::Evaluate {
            data,
            user,
            train_fraction,
        } => {
            let pop = load_population(&data)?;
            let settings = EvalSettings {
                grid: threshold_grid(g)?,
                mc_samples: g.mc_samples.unwrap_or(profile.mc_samples()),
                train_fraction,
                train: TrainConfig::default(),
                volume: VolumeConfig::default(),
                mitigate: false,
            };
            let dir = out_path(g, "evaluation");
            fs::create_dir_all(&dir)?;
            let classifiers: Vec<Algorithm> = if g.classifier.is_empty() {
                Algorithm::ML.to_vec()
            } else {
                g.classifier.iter().map(|&c| c.into()).collect()
            };
            for clf in classifiers {
                let reps = g.reps.unwrap_or(profile.repetitions());
                let r = run_user_evaluation(&pop, UserId(user), clf, &settings, reps, seed)?;
                let mut curve = Table::new("", &["threshold", "frr", "fpr", "ar"]);
                for i in 0..r.curve.len() {
                    curve.push(vec![
                        r.curve.thresholds[i].into(),
                        r.curve.frr[i].into(),
                        r.curve.fpr[i].into(),
                        r.curve.ar[i].into(),
                    ]);
                }
                write_file(&dir.join(format!("curve_{clf}.csv")), &curve.to_csv()?)?;
                let mut summary = Table::new(
                    "",
                    &["eer_index", "frr_at_eer", "fpr_at_eer", "ar_at_eer", "eer_discrepancy"],
                );
                summary.push(vec![
                    r.eer.index.into(),
                    r.eer.frr.into(),
                    r.eer.fpr.into(),
                    r.eer.ar.into(),
                    r.eer.discrepancy.into(),
                ]);
                write_file(&dir.join(format!("summary_{clf}.csv")), &summary.to_csv()?)?;
                println!(
                    "user {user} {clf}: EER index {} FRR {:.4} FPR {:.4} AR {:.4} log10 R+ {:.3}",
                    r.eer.index, r.eer.frr, r.eer.fpr, r.eer.ar, r.log10_positive_region
                );
            }
        }
        Command::Experiment {
            name,
            config,
            users,
            dataset,
        } => {
            let mut cfg = match (config, name) {
                (Some(path), _) => load_manifest(&path)?,
                (None, Some(name)) => ExperimentConfig::new(name.parse::<ExperimentName>()?, profile),
                (None, None) => {
                    return Err(Error::InvalidInput(
                        "give an experiment name or --config".into(),
                    ))
                }
            };
            if let Some(s) = g.seed {
                cfg.seed = s;
            }
            if let Some(m) = g.mc_samples {
                cfg.mc_samples = m;
            }
            if let Some(r) = g.reps {
                cfg.repetitions = r;
            }
            if let Some(t) = g.thresholds {
                cfg.thresholds = t;
            }
            if !g.classifier.is_empty() {
                cfg.classifiers = g.classifier.iter().map(|&c| c.into()).collect();
            }
            if let Some(u) = users {
                cfg.users = u;
            }
            if dataset.is_some() {
                cfg.dataset = dataset;
            }
            if g.out.is_some() {
                cfg.output = g.out.clone();
            }
            let dir = cfg
                .output
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("arscope-{}", cfg.experiment)));
            let output = run_experiment(&cfg)?;
            emit_report(&output, &dir)?;
            for line in &output.summary {
                println!("{line}");
            }
            println!("outputs in {}", dir.display());
        }
        Command::Report { dir } => {
            let fresh = recompute_aggregate(&dir)?;
            let path = dir.join("aggregate.csv");
            let stored = fs::read_to_string(&path).unwrap_or_default();
            if stored != fresh {
                fs::write(&path, &fresh)?;
                println!("aggregate.csv rewritten from units.csv");
            }
            let units = units_from_csv(&fs::read_to_string(dir.join("units.csv"))?)?;
            println!("{} units", units.len());
            print!("{fresh}");
            if let Ok(summary) = fs::read_to_string(dir.join("summary.txt")) {
                print!("{summary}");
            }
        }
        Command::RegionVolume {
            data,
            user,
            bins,
            cutoff,
            mode,
        } => {
            let dataset = load_dataset(&data)?;
            let rows: Vec<&[f64]> = dataset
                .iter()
                .filter(|s| user.is_none_or(|u| s.user == UserId(u)))
                .map(|s| s.vector.as_slice())
                .collect();
            let mode = match mode {
                ModeArg::Binned => VolumeMode::Binned,
                ModeArg::Span => VolumeMode::Span,
            };
            let report = measure_region_volume(&rows, bins, cutoff, mode)?;
            let mut t = Table::new("", &["feature_index", "alpha"]);
            for (i, &a) in report.alphas.iter().enumerate() {
                t.push(vec![i.into(), a.into()]);
            }
            let mut body = t.to_csv()?;
            body.push_str(&format!(
                "log10_volume,{}\n",
                arscope::harness::format_fixed(report.log10_volume)
            ));
            write_file(&out_path(g, "region_volume.csv"), &body)?;
            println!("log10 volume {:.6}", report.log10_volume);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("arscope: {e}");
            ExitCode::FAILURE
        }
    }
}
