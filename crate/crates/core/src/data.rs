//! Dataset ingestion, train/test splitting and initial labeled-set seeding.
//!
//! Two on-disk formats are accepted:
//!
//! * **LIBSVM**: one instance per line, `<label> <idx>:<val> ...` with 1-based
//!   feature indices. Missing indices are zero; the feature count is the
//!   largest index seen in the file.
//! * **CSV**: comma separated. The first line is a header if it names a
//!   `label` column or if any of its fields besides the last is non-numeric.
//!   The label column is the one named `label`, or the last column otherwise.
//!
//! Raw labels are mapped onto `0..K` by sorted order of the distinct raw
//! values (numeric order if every label parses as a number, lexicographic
//! otherwise), so `-1/+1` files become `0/1` with `+1` mapped to class 1.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Matrix, Scalar};

/// Stream used for initial seeding; split uses stream 0.
const SEED_STREAM: u64 = 1;
/// Offset applied to a seed when a split misses a class and is rolled again.
const REROLL_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dataset is empty")]
    Empty,
    #[error("dataset has a single class; at least two are required")]
    SingleClass,
    #[error("feature value at row {row}, column {col} is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("class {0} has no instance in the training subset")]
    ClassAbsent(usize),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Libsvm,
    Csv,
}

impl Format {
    /// `.csv` files are CSV; everything else is treated as LIBSVM.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Libsvm,
        }
    }
}

/// Feature matrix, integer class labels and class count.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    features: Matrix<T>,
    labels: Vec<usize>,
    n_classes: usize,
    name: String,
}

impl<T: Scalar> Dataset<T> {
    /// Validates and wraps the parts of a dataset.
    pub fn new(
        name: impl Into<String>,
        features: Matrix<T>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self, DataError> {
        if labels.is_empty() {
            return Err(DataError::Empty);
        }
        if features.rows() != labels.len() {
            return Err(DataError::Invalid(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if n_classes < 2 {
            return Err(DataError::SingleClass);
        }
        let mut seen = vec![false; n_classes];
        for &y in &labels {
            if y >= n_classes {
                return Err(DataError::Invalid(format!(
                    "label {y} outside 0..{n_classes}"
                )));
            }
            seen[y] = true;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(DataError::Invalid(format!("class {k} has no instance")));
        }
        for (r, row) in features.iter_rows().enumerate() {
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { row: r, col: c });
            }
        }
        Ok(Self {
            features,
            labels,
            n_classes,
            name: name.into(),
        })
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.features.row(i)
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Features and labels of the given rows, in the given order.
    pub fn subset(&self, idx: &[usize]) -> (Matrix<T>, Vec<usize>) {
        (
            self.features.select_rows(idx),
            idx.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

pub fn load_dataset<T: Scalar>(path: &Path, format: Format) -> Result<Dataset<T>, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    match format {
        Format::Libsvm => parse_libsvm(&name, &text),
        Format::Csv => parse_csv(&name, &text),
    }
}

pub fn parse_libsvm<T: Scalar>(name: &str, text: &str) -> Result<Dataset<T>, DataError> {
    let mut raw_labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut dim = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = tokens.next().expect("non-empty line has a token");
        raw_labels.push(label.to_string());
        let mut entries = Vec::new();
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| DataError::Parse {
                line: lineno + 1,
                msg: format!("expected <index>:<value>, got {tok:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| DataError::Parse {
                line: lineno + 1,
                msg: format!("bad feature index {idx:?}"),
            })?;
            if idx == 0 {
                return Err(DataError::Parse {
                    line: lineno + 1,
                    msg: "feature indices are 1-based".into(),
                });
            }
            let val: f64 = val.parse().map_err(|_| DataError::Parse {
                line: lineno + 1,
                msg: format!("bad feature value {val:?}"),
            })?;
            dim = dim.max(idx);
            entries.push((idx - 1, val));
        }
        rows.push(entries);
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    let mut features = Matrix::zeros(rows.len(), dim);
    for (r, entries) in rows.iter().enumerate() {
        for &(c, v) in entries {
            features[(r, c)] = T::lit(v);
        }
    }
    let (labels, n_classes) = encode_labels(&raw_labels)?;
    Dataset::new(name, features, labels, n_classes)
}

pub fn parse_csv<T: Scalar>(name: &str, text: &str) -> Result<Dataset<T>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| DataError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(DataError::Empty);
    }

    let first = &records[0];
    let named_label = first.iter().position(|f| f.eq_ignore_ascii_case("label"));
    let has_header = named_label.is_some()
        || first
            .iter()
            .take(first.len().saturating_sub(1))
            .any(|f| f.parse::<f64>().is_err());
    let width = first.len();
    if width < 2 {
        return Err(DataError::Parse {
            line: 1,
            msg: "need at least one feature and a label column".into(),
        });
    }
    let label_col = named_label.unwrap_or(width - 1);
    let body = if has_header {
        &records[1..]
    } else {
        &records[..]
    };
    if body.is_empty() {
        return Err(DataError::Empty);
    }

    let mut raw_labels = Vec::with_capacity(body.len());
    let mut features = Matrix::zeros(body.len(), width - 1);
    let line_offset = if has_header { 2 } else { 1 };
    for (r, rec) in body.iter().enumerate() {
        if rec.len() != width {
            return Err(DataError::Parse {
                line: r + line_offset,
                msg: format!("expected {width} columns, found {}", rec.len()),
            });
        }
        let mut c = 0;
        for (j, field) in rec.iter().enumerate() {
            if j == label_col {
                raw_labels.push(field.to_string());
                continue;
            }
            let v: f64 = field.parse().map_err(|_| DataError::Parse {
                line: r + line_offset,
                msg: format!("bad feature value {field:?}"),
            })?;
            features[(r, c)] = T::lit(v);
            c += 1;
        }
    }
    let (labels, n_classes) = encode_labels(&raw_labels)?;
    Dataset::new(name, features, labels, n_classes)
}

/// Maps raw label strings onto `0..K` by sorted order of distinct values.
fn encode_labels(raw: &[String]) -> Result<(Vec<usize>, usize), DataError> {
    let numeric: Option<Vec<f64>> = raw.iter().map(|s| s.parse::<f64>().ok()).collect();
    let (labels, k) = match numeric {
        Some(values) => {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(DataError::Invalid("non-finite label".into()));
            }
            let mut distinct = values.clone();
            distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            distinct.dedup();
            let labels = values
                .iter()
                .map(|v| distinct.iter().position(|d| d == v).expect("present"))
                .collect();
            (labels, distinct.len())
        }
        None => {
            let distinct: Vec<&String> = raw.iter().collect::<BTreeSet<_>>().into_iter().collect();
            let labels = raw
                .iter()
                .map(|s| distinct.iter().position(|d| *d == s).expect("present"))
                .collect();
            (labels, distinct.len())
        }
    };
    if k < 2 {
        return Err(DataError::SingleClass);
    }
    Ok((labels, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub rng_seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, rng_seed: u64) -> Self {
        Self {
            train_fraction,
            rng_seed,
        }
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.5,
            rng_seed: 0,
        }
    }
}

/// Uniform (unstratified) random split into sorted train and test index sets.
pub fn split(n_rows: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0) {
        return Err(DataError::InvalidSplit(format!(
            "train fraction {} outside (0, 1]",
            spec.train_fraction
        )));
    }
    let n_train = (spec.train_fraction * n_rows as f64).round() as usize;
    if n_train == 0 || n_train >= n_rows {
        return Err(DataError::InvalidSplit(format!(
            "{n_rows} rows at fraction {} leaves an empty side",
            spec.train_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut order: Vec<usize> = (0..n_rows).collect();
    order.shuffle(&mut rng);
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Result of [`split_covering`].
#[derive(Debug, Clone)]
pub struct CoveringSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Seed that produced the accepted split.
    pub seed: u64,
    pub rerolled: bool,
}

/// Splits so that every class appears in the training subset. A split
/// missing a class is rolled once with a derived seed; a second miss is an error.
pub fn split_covering<T: Scalar>(
    ds: &Dataset<T>,
    spec: &SplitSpec,
) -> Result<CoveringSplit, DataError> {
    let reroll_seed = spec.rng_seed.wrapping_add(REROLL_OFFSET);
    for (seed, rerolled) in [(spec.rng_seed, false), (reroll_seed, true)] {
        let (train, test) = split(
            ds.len(),
            &SplitSpec {
                rng_seed: seed,
                ..*spec
            },
        )?;
        match missing_class(ds, &train) {
            None => {
                return Ok(CoveringSplit {
                    train,
                    test,
                    seed,
                    rerolled,
                })
            }
            Some(k) if rerolled => return Err(DataError::ClassAbsent(k)),
            Some(k) => log::warn!("split with seed {seed} misses class {k}; rolling again"),
        }
    }
    unreachable!("second attempt always returns")
}

fn missing_class<T: Scalar>(ds: &Dataset<T>, idx: &[usize]) -> Option<usize> {
    let mut seen = vec![false; ds.n_classes()];
    for &i in idx {
        seen[ds.label(i)] = true;
    }
    seen.iter().position(|s| !s)
}

/// One answered query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub index: usize,
    pub label: usize,
    pub step: usize,
}

/// Partition of the training subset into labeled set and unlabeled pool.
///
/// The pool is kept in ascending dataset-index order; every row/column index
/// produced by the RIM and variance code refers to a position in this order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveState {
    labeled: Vec<usize>,
    unlabeled: Vec<usize>,
    history: Vec<Query>,
    seed_size: usize,
}

impl ActiveState {
    /// Builds a state from explicit sets. The pool is sorted; the sets must be disjoint.
    pub fn new(labeled: Vec<usize>, mut unlabeled: Vec<usize>) -> Result<Self, DataError> {
        unlabeled.sort_unstable();
        let set: BTreeSet<usize> = labeled.iter().copied().collect();
        if set.len() != labeled.len() {
            return Err(DataError::Invalid("duplicate labeled index".into()));
        }
        if unlabeled.windows(2).any(|w| w[0] == w[1]) {
            return Err(DataError::Invalid("duplicate pool index".into()));
        }
        if unlabeled.iter().any(|i| set.contains(i)) {
            return Err(DataError::Invalid(
                "labeled and unlabeled sets overlap".into(),
            ));
        }
        let seed_size = labeled.len();
        Ok(Self {
            labeled,
            unlabeled,
            history: Vec::new(),
            seed_size,
        })
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }

    pub fn history(&self) -> &[Query] {
        &self.history
    }

    pub fn seed_size(&self) -> usize {
        self.seed_size
    }

    /// Moves `index` from the pool to the labeled set, revealing its true label.
    pub fn reveal<T: Scalar>(&mut self, ds: &Dataset<T>, index: usize) -> Result<Query, DataError> {
        let pos = self.unlabeled.binary_search(&index).map_err(|_| {
            DataError::Invalid(format!("index {index} is not in the unlabeled pool"))
        })?;
        self.unlabeled.remove(pos);
        self.labeled.push(index);
        let q = Query {
            index,
            label: ds.label(index),
            step: self.history.len() + 1,
        };
        self.history.push(q);
        Ok(q)
    }
}

/// Labels one uniformly drawn training instance per class; the rest form the pool.
pub fn seed_initial<T: Scalar>(
    ds: &Dataset<T>,
    train: &[usize],
    rng_seed: u64,
) -> Result<ActiveState, DataError> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    let mut sorted = train.to_vec();
    sorted.sort_unstable();
    for &i in &sorted {
        by_class[ds.label(i)].push(i);
    }
    if let Some(k) = by_class.iter().position(Vec::is_empty) {
        return Err(DataError::ClassAbsent(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(SEED_STREAM);
    let labeled: Vec<usize> = by_class
        .iter()
        .map(|members| members[rng.gen_range(0..members.len())])
        .collect();
    let unlabeled = sorted
        .into_iter()
        .filter(|i| !labeled.contains(i))
        .collect();
    ActiveState::new(labeled, unlabeled)
}
