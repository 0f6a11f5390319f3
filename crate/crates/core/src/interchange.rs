//! Dataset CSV interchange.
//!
//! Header `user_id,label,f0,f1,...,f{n-1}`, one row per sample, labels
//! written as `+1` / `-1`. Reals are written in scientific notation with 17
//! significant digits, which round-trips every `f64` exactly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::dataset::{FeatureVector, Label, LabeledDataset, LabeledSample, Population, UserId};
use crate::error::{Error, Result};

pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn header(feature_count: usize) -> String {
    let mut line = String::from("user_id,label");
    for i in 0..feature_count {
        line.push_str(&format!(",f{i}"));
    }
    line
}

pub fn write_dataset<W: Write>(mut out: W, dataset: &LabeledDataset) -> Result<()> {
    writeln!(out, "{}", header(dataset.feature_count()))?;
    for s in dataset.iter() {
        write!(out, "{},{}", s.user, s.label.as_str())?;
        for &v in s.vector.iter() {
            write!(out, ",{}", format_real(v))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "user_id" || &headers[1] != "label" {
        return Err(Error::Parse(
            "expected header `user_id,label,f0,...`".to_string(),
        ));
    }
    let feature_count = headers.len() - 2;
    for (i, name) in headers.iter().skip(2).enumerate() {
        if name != format!("f{i}") {
            return Err(Error::Parse(format!("column {} should be f{i}, got {name:?}", i + 2)));
        }
    }
    let mut samples = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = line + 2;
        let user = record[0]
            .parse::<u32>()
            .map_err(|e| Error::Parse(format!("row {row}: bad user_id: {e}")))?;
        let label = Label::parse(&record[1])?;
        let values = record
            .iter()
            .skip(2)
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {row}: bad value {field:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        samples.push(LabeledSample::new(
            FeatureVector::new(values),
            label,
            UserId(user),
        ));
    }
    LabeledDataset::new(feature_count, samples)
}

pub fn save_dataset(path: &Path, dataset: &LabeledDataset) -> Result<()> {
    let file = File::create(path)?;
    write_dataset(BufWriter::new(file), dataset)
}

pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    read_dataset(File::open(path)?)
}

pub fn save_population(path: &Path, population: &Population) -> Result<()> {
    save_dataset(path, &population.to_dataset())
}

pub fn load_population(path: &Path) -> Result<Population> {
    Ok(Population::from_dataset(&load_dataset(path)?))
}

/// Loads vectors from an interchange file, ignoring users and labels.
pub fn load_vectors(path: &Path) -> Result<Vec<FeatureVector>> {
    Ok(load_dataset(path)?
        .into_samples()
        .into_iter()
        .map(|s| s.vector)
        .collect())
}
