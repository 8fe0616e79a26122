//! Result files: `records.json`, `summary.json` and per-curve CSVs.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::aggregate::{Summary, SCHEMA_VERSION};
use crate::bench::experiment::{file_safe, ExperimentConfig, ExperimentRecord};

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    Schema { path: String, found: u32 },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordsFile {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub records: Vec<ExperimentRecord>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ResultsError + '_ {
    move |source| ResultsError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), ResultsError> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    serde_json::to_writer_pretty(&mut out, value).map_err(|source| ResultsError::Json {
        path: path.display().to_string(),
        source,
    })?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(io_err(path))
}

/// Writes `records.json`, `summary.json` and `curves/<dataset>__<strategy>.csv` under `dir`.
pub fn write_results(
    dir: &Path,
    config: &ExperimentConfig,
    records: &[ExperimentRecord],
    summary: &Summary,
) -> Result<(), ResultsError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let file = RecordsFile {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        records: records.to_vec(),
    };
    write_json(&dir.join("records.json"), &file)?;
    write_summary(dir, summary)?;
    write_curves(&dir.join("curves"), records)
}

pub fn write_summary(dir: &Path, summary: &Summary) -> Result<(), ResultsError> {
    write_json(&dir.join("summary.json"), summary)
}

fn write_curves(dir: &Path, records: &[ExperimentRecord]) -> Result<(), ResultsError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut i = 0;
    while i < records.len() {
        let (ds, st) = (&records[i].dataset, &records[i].strategy);
        let mut j = i;
        while j < records.len() && &records[j].dataset == ds && &records[j].strategy == st {
            j += 1;
        }
        let group: Vec<&ExperimentRecord> = records[i..j].iter().filter(|r| r.ok()).collect();
        let path = dir.join(format!("{}__{}.csv", file_safe(ds), file_safe(st)));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["step", "labeled_count", "mean_accuracy", "std_accuracy"])?;
        let seed = group.first().map_or(0, |r| r.initial_labeled.len());
        let steps = group.iter().map(|r| r.curve.len()).max().unwrap_or(0);
        for step in 0..steps {
            let acc: Vec<f64> = group
                .iter()
                .filter_map(|r| r.curve.get(step).copied())
                .collect();
            let n = acc.len() as f64;
            let mean = acc.iter().sum::<f64>() / n;
            let std = if acc.len() > 1 {
                (acc.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            w.write_record(&[
                step.to_string(),
                (seed + step).to_string(),
                mean.to_string(),
                std.to_string(),
            ])?;
        }
        w.flush().map_err(io_err(&path))?;
        i = j;
    }
    Ok(())
}

pub fn read_records(dir: &Path) -> Result<RecordsFile, ResultsError> {
    let path = dir.join("records.json");
    let reader = BufReader::new(File::open(&path).map_err(io_err(&path))?);
    let file: RecordsFile =
        serde_json::from_reader(reader).map_err(|source| ResultsError::Json {
            path: path.display().to_string(),
            source,
        })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(ResultsError::Schema {
            path: path.display().to_string(),
            found: file.schema_version,
        });
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::aggregate::aggregate;

    fn rec(s: &str, rep: usize, curve: Vec<f64>) -> ExperimentRecord {
        ExperimentRecord {
            dataset: "d".into(),
            strategy: s.into(),
            repetition: rep,
            seed: 7 + rep as u64,
            initial_labeled: vec![4, 9],
            alc: curve.iter().sum::<f64>() / curve.len() as f64,
            curve,
            queries: vec![1, 2],
            wall_time_secs: 0.125,
            warnings: vec!["w".into()],
            error: None,
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![
            rec("mval:v1", 0, vec![0.1, 0.2 + 1e-17, 1.0 / 3.0]),
            rec("mval:v1", 1, vec![0.3, 0.4, 0.7]),
        ];
        let cfg = ExperimentConfig::default();
        write_results(dir.path(), &cfg, &recs, &aggregate(&recs, None, 0.05)).unwrap();
        let back = read_records(dir.path()).unwrap();
        assert_eq!(back.records, recs);
        assert_eq!(back.config, cfg);
        let csv = fs::read_to_string(dir.path().join("curves/d__mval-v1.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "step,labeled_count,mean_accuracy,std_accuracy");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,2,0.2,"));
    }

    #[test]
    fn empty_summary_is_valid_json() {
        let dir = tempfile::tempdir().unwrap();
        write_results(
            dir.path(),
            &ExperimentConfig::default(),
            &[],
            &aggregate(&[], None, 0.05),
        )
        .unwrap();
        let text = fs::read_to_string(dir.path().join("summary.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert!(v["strategies"].as_array().unwrap().is_empty());
    }

    #[test]
    fn unwritable_path_errors() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_results(
            &blocker.join("out"),
            &ExperimentConfig::default(),
            &[],
            &aggregate(&[], None, 0.05),
        );
        assert!(matches!(err, Err(ResultsError::Io { .. })));
    }
}
