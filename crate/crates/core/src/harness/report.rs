//! Output files.
//!
//! Every run directory holds:
//!
//! * `units.csv`: one row per (grid value, user, classifier, condition),
//!   `grid_value,user_id,role,classifier,condition,eer_index,threshold,frr,fpr,ar,discrepancy`,
//!   reals in round-trip scientific notation
//! * `aggregate.csv`: means of the unit rows grouped by
//!   `grid_value,role,classifier,condition`
//! * experiment tables such as `curve_<classifier>.csv`
//!   (`threshold,frr,fpr,ar`), `summary_<classifier>.csv`
//!   (`eer_index,frr_at_eer,fpr_at_eer,ar_at_eer,eer_discrepancy`) and
//!   `scatter.csv` (`user_id,classifier,fpr_at_eer,ar_at_eer`)
//! * `failures.csv`: units that errored, `unit,error`
//! * `manifest.toml`: the configuration plus a `[run]` table
//! * `summary.txt`
//!
//! Table reals are printed with six decimals.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interchange::format_real;

use super::config::ExperimentConfig;

pub const UNIT_HEADER: [&str; 11] = [
    "grid_value",
    "user_id",
    "role",
    "classifier",
    "condition",
    "eer_index",
    "threshold",
    "frr",
    "fpr",
    "ar",
    "discrepancy",
];

pub const AGGREGATE_HEADER: [&str; 8] = [
    "grid_value",
    "role",
    "classifier",
    "condition",
    "units",
    "frr",
    "fpr",
    "ar",
];

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format_fixed(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

pub fn format_fixed(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        let s = format!("{v:.6}");
        // No negative zero in the output.
        if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
            s.trim_start_matches('-').to_string()
        } else {
            s
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(file: impl Into<String>, header: &[&str]) -> Self {
        Table {
            file: file.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Result of one evaluation unit, averaged over repetitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitRow {
    pub grid_value: f64,
    pub user_id: u32,
    /// `isolated`, `system` or `all`.
    pub role: String,
    pub classifier: String,
    /// `normal` or `mitigated`.
    pub condition: String,
    pub eer_index: usize,
    pub threshold: f64,
    pub frr: f64,
    pub fpr: f64,
    pub ar: f64,
    pub discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub unit: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub grid_value: f64,
    pub role: String,
    pub classifier: String,
    pub condition: String,
    pub units: usize,
    pub frr: f64,
    pub fpr: f64,
    pub ar: f64,
}

/// Group means of unit rows, groups in order of first appearance.
pub fn aggregate(units: &[UnitRow]) -> Vec<AggregateRow> {
    let mut out: Vec<AggregateRow> = Vec::new();
    for u in units {
        let existing = out.iter_mut().find(|a| {
            a.grid_value == u.grid_value
                && a.role == u.role
                && a.classifier == u.classifier
                && a.condition == u.condition
        });
        match existing {
            Some(a) => {
                a.units += 1;
                a.frr += u.frr;
                a.fpr += u.fpr;
                a.ar += u.ar;
            }
            None => out.push(AggregateRow {
                grid_value: u.grid_value,
                role: u.role.clone(),
                classifier: u.classifier.clone(),
                condition: u.condition.clone(),
                units: 1,
                frr: u.frr,
                fpr: u.fpr,
                ar: u.ar,
            }),
        }
    }
    for a in &mut out {
        let k = a.units as f64;
        a.frr /= k;
        a.fpr /= k;
        a.ar /= k;
    }
    out
}

pub fn aggregate_table(rows: &[AggregateRow]) -> Table {
    let mut t = Table::new("aggregate.csv", &AGGREGATE_HEADER);
    for a in rows {
        t.push(vec![
            a.grid_value.into(),
            a.role.as_str().into(),
            a.classifier.as_str().into(),
            a.condition.as_str().into(),
            a.units.into(),
            a.frr.into(),
            a.fpr.into(),
            a.ar.into(),
        ]);
    }
    t
}

pub fn units_to_csv(units: &[UnitRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(UNIT_HEADER)?;
    for u in units {
        w.write_record([
            format_real(u.grid_value),
            u.user_id.to_string(),
            u.role.clone(),
            u.classifier.clone(),
            u.condition.clone(),
            u.eer_index.to_string(),
            format_real(u.threshold),
            format_real(u.frr),
            format_real(u.fpr),
            format_real(u.ar),
            format_real(u.discrepancy),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn units_from_csv(text: &str) -> Result<Vec<UnitRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(UNIT_HEADER.iter().copied()) {
        return Err(Error::Parse("unexpected units.csv header".into()));
    }
    reader
        .deserialize::<UnitRow>()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn failures_table(failures: &[Failure]) -> Table {
    let mut t = Table::new("failures.csv", &["unit", "error"]);
    for f in failures {
        t.push(vec![f.unit.as_str().into(), f.error.as_str().into()]);
    }
    t
}

/// Everything a finished experiment wants written.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub units: Vec<UnitRow>,
    pub failures: Vec<Failure>,
    pub tables: Vec<Table>,
    pub summary: Vec<String>,
}

impl ExperimentOutput {
    pub fn table(&self, file: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.file == file)
    }
}

/// Manifest text: the configuration without its output path, then `[run]`.
pub fn manifest_text(output: &ExperimentOutput) -> Result<String> {
    let mut config = output.config.clone();
    config.output = None;
    let mut text = config.to_toml()?;
    text.push_str(&format!(
        "\n[run]\ntool = \"arscope {}\"\nexperiment_key = \"{:016x}\"\nunits = {}\nfailures = {}\n",
        env!("CARGO_PKG_VERSION"),
        crate::seed::label_key(output.config.experiment.as_str()),
        output.units.len(),
        output.failures.len(),
    ));
    Ok(text)
}

/// Reads a manifest (or a plain configuration file) back into a config.
pub fn load_manifest(path: &Path) -> Result<ExperimentConfig> {
    let mut table: toml::Table = toml::from_str(&fs::read_to_string(path)?)?;
    table.remove("run");
    let config: ExperimentConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Writes every file of the run into `dir` and returns their paths.
pub fn emit_report(output: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files: Vec<(String, String)> = vec![
        ("units.csv".into(), units_to_csv(&output.units)?),
        ("aggregate.csv".into(), aggregate_table(&aggregate(&output.units)).to_csv()?),
        ("failures.csv".into(), failures_table(&output.failures).to_csv()?),
    ];
    for t in &output.tables {
        files.push((t.file.clone(), t.to_csv()?));
    }
    files.push(("manifest.toml".into(), manifest_text(output)?));
    let mut summary = format!(
        "arscope {} experiment {} (seed {})\n",
        env!("CARGO_PKG_VERSION"),
        output.config.experiment,
        output.config.seed
    );
    for line in &output.summary {
        summary.push_str(line);
        summary.push('\n');
    }
    if !output.failures.is_empty() {
        summary.push_str(&format!("{} unit(s) failed, see failures.csv\n", output.failures.len()));
    }
    files.push(("summary.txt".into(), summary));

    let mut paths = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        let mut f = fs::File::create(&path)?;
        f.write_all(body.as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}

/// Recomputes `aggregate.csv` content from a run directory's `units.csv`.
pub fn recompute_aggregate(dir: &Path) -> Result<String> {
    let units = units_from_csv(&fs::read_to_string(dir.join("units.csv"))?)?;
    aggregate_table(&aggregate(&units)).to_csv()
}
