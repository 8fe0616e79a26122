//! Paired-design experiment runner.
//!
//! For every dataset and repetition `r`, one split and one initial labeled
//! set are drawn from seed `base_seed + r` and shared by every strategy, so
//! the per-repetition ALC values of two strategies form matched pairs.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::stats::alc;
use crate::data::{seed_initial, split_covering, ActiveState};
use crate::linmodels::{predict, ModelKind, TrainConfig};
use crate::rim::{dump_binary_rims, dump_multiclass_rims, Trainer};
use crate::strategies::{select_traced, RimTrace, StrategySpec};
use crate::{Dataset, Scalar, SplitSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub strategies: Vec<StrategySpec>,
    pub classifier: ModelKind,
    pub budget: usize,
    pub reps: usize,
    pub base_seed: u64,
    pub train_fraction: f64,
    /// Overrides the classifier's default regularisation constant.
    pub reg_c: Option<f64>,
    /// Strategy label used as the W/T/L reference in summaries.
    pub reference: Option<String>,
    pub alpha: f64,
    /// When set, MVAL rounds write their RIMs and scores here.
    pub dump_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            strategies: Vec::new(),
            classifier: ModelKind::Logreg,
            budget: 100,
            reps: 10,
            base_seed: 0,
            train_fraction: 0.5,
            reg_c: None,
            reference: None,
            alpha: 0.05,
            dump_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn train_config<T: Scalar>(&self) -> TrainConfig<T> {
        let cfg = TrainConfig::for_kind(self.classifier);
        match self.reg_c {
            Some(c) => cfg.with_c(T::lit(c)),
            None => cfg,
        }
    }
}

/// One (dataset, strategy, repetition) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub dataset: String,
    pub strategy: String,
    pub repetition: usize,
    pub seed: u64,
    pub initial_labeled: Vec<usize>,
    /// Test accuracy after the initial seed and after each query.
    pub curve: Vec<f64>,
    pub alc: f64,
    pub queries: Vec<usize>,
    pub wall_time_secs: f64,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl ExperimentRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    fn sort_key(&self) -> (&str, &str, usize) {
        (&self.dataset, &self.strategy, self.repetition)
    }
}

/// Runs every strategy on every dataset for `cfg.reps` repetitions.
///
/// Failures are confined to their cell: the record carries the error and the
/// curve up to the failure. Records come back sorted by dataset, strategy
/// and repetition.
pub fn run_experiment<T: Scalar>(
    cfg: &ExperimentConfig,
    datasets: &[Dataset<T>],
) -> Vec<ExperimentRecord> {
    let train_cfg = cfg.train_config::<T>();
    let cells: Vec<(usize, usize, usize)> = (0..datasets.len())
        .flat_map(|d| {
            (0..cfg.reps).flat_map(move |r| (0..cfg.strategies.len()).map(move |s| (d, r, s)))
        })
        .collect();
    let mut records: Vec<ExperimentRecord> = cells
        .into_par_iter()
        .map(|(d, r, s)| run_cell(cfg, &train_cfg, &datasets[d], r, &cfg.strategies[s]))
        .collect();
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    records
}

fn run_cell<T: Scalar>(
    cfg: &ExperimentConfig,
    train_cfg: &TrainConfig<T>,
    ds: &Dataset<T>,
    rep: usize,
    spec: &StrategySpec,
) -> ExperimentRecord {
    let seed = cfg.base_seed.wrapping_add(rep as u64);
    let mut rec = ExperimentRecord {
        dataset: ds.name().to_string(),
        strategy: spec.label(),
        repetition: rep,
        seed,
        initial_labeled: Vec::new(),
        curve: Vec::new(),
        alc: 0.0,
        queries: Vec::new(),
        wall_time_secs: 0.0,
        warnings: Vec::new(),
        error: None,
    };
    let start = Instant::now();
    if let Err(e) = drive(cfg, train_cfg, ds, spec.with_seed(seed), &mut rec) {
        log::warn!("{} / {} / rep {rep}: {e}", rec.dataset, rec.strategy);
        rec.error = Some(e);
    }
    rec.wall_time_secs = start.elapsed().as_secs_f64();
    if !rec.curve.is_empty() {
        rec.alc = alc(&rec.curve);
    }
    rec
}

fn drive<T: Scalar>(
    cfg: &ExperimentConfig,
    train_cfg: &TrainConfig<T>,
    ds: &Dataset<T>,
    spec: StrategySpec,
    rec: &mut ExperimentRecord,
) -> Result<(), String> {
    spec.validate(ds.n_classes()).map_err(|e| e.to_string())?;
    let split = split_covering(ds, &SplitSpec::new(cfg.train_fraction, rec.seed))
        .map_err(|e| e.to_string())?;
    if split.rerolled {
        rec.warnings
            .push(format!("split rerolled with seed {}", split.seed));
    }
    let mut state = seed_initial(ds, &split.train, rec.seed).map_err(|e| e.to_string())?;
    rec.initial_labeled = state.labeled().to_vec();

    let budget = cfg.budget.min(state.unlabeled().len());
    if budget < cfg.budget {
        rec.warnings.push(format!(
            "budget clamped from {} to {budget} (pool exhausted)",
            cfg.budget
        ));
    }

    let (test_x, test_y) = ds.subset(&split.test);
    let trainer = Trainer::new(spec.classifier, *train_cfg);
    let mut unconverged = 0usize;
    let mut evaluate = |state: &ActiveState, rec: &mut ExperimentRecord| -> Result<(), String> {
        let model = trainer.fit_labeled(ds, state).map_err(|e| e.to_string())?;
        if !model.converged {
            unconverged += 1;
        }
        let pred = predict(&model, &test_x).map_err(|e| e.to_string())?;
        let hits = pred.iter().zip(&test_y).filter(|(p, y)| p == y).count();
        rec.curve.push(hits as f64 / test_y.len() as f64);
        Ok(())
    };

    let result = (|| {
        evaluate(&state, rec)?;
        for _ in 0..budget {
            let dump = cfg.dump_dir.is_some();
            let sel =
                select_traced(&spec, ds, &state, train_cfg, dump).map_err(|e| e.to_string())?;
            if let (Some(dir), Some(trace)) = (&cfg.dump_dir, &sel.trace) {
                let step = state.history().len() + 1;
                write_trace(dir, rec, step, trace).map_err(|e| format!("dump failed: {e}"))?;
            }
            let q = state.reveal(ds, sel.index).map_err(|e| e.to_string())?;
            rec.queries.push(q.index);
            evaluate(&state, rec)?;
        }
        Ok(())
    })();
    if unconverged > 0 {
        rec.warnings.push(format!(
            "{unconverged} evaluation fits hit the iteration limit"
        ));
    }
    result
}

fn write_trace<T: Scalar>(
    dir: &Path,
    rec: &ExperimentRecord,
    step: usize,
    trace: &crate::strategies::MvalTrace<T>,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let name = format!(
        "{}__{}__r{}__s{}.csv",
        file_safe(&rec.dataset),
        file_safe(&rec.strategy),
        rec.repetition,
        step
    );
    let mut out = BufWriter::new(File::create(dir.join(name))?);
    match &trace.rims {
        RimTrace::Binary(r) => dump_binary_rims(r, &mut out)?,
        RimTrace::Multiclass(r) => dump_multiclass_rims(r, &mut out)?,
    }
    trace.scores.dump(&mut out)?;
    out.flush()
}

/// Replaces characters that are awkward in file names.
pub fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '-'
            }
        })
        .collect()
}
