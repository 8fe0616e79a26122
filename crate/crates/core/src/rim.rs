//! Retraining information matrices.
//!
//! For each pool candidate `x_i` and each pseudo-label, the classifier is
//! retrained on the labeled set plus `(x_i, label)` and its posteriors over
//! the whole pool are recorded. Row and column indices are positions in the
//! state's unlabeled pool, which is kept in ascending dataset order.
//!
//! Every retraining starts from zero, so the matrices do not depend on the
//! order in which candidates are evaluated; candidates are processed in
//! parallel and assembled in pool order.

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::data::ActiveState;
use crate::linmodels::{
    self, decision_values, entropy_weight, margin_weight, predict_proba, svm_margin_weight,
    svm_pseudo_proba, LinearModel, ModelKind, TrainConfig, TrainError,
};
use crate::{Dataset, Matrix, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RimError {
    #[error("retraining with candidate at pool position {candidate} failed: {source}")]
    Retrain {
        candidate: usize,
        source: TrainError,
    },
    #[error("training the current model failed: {0}")]
    Current(TrainError),
    #[error("pool has {0} instances; at least {1} required")]
    PoolTooSmall(usize, usize),
    #[error("binary RIMs need a two-class dataset, got {0} classes")]
    NotBinary(usize),
    #[error("multiclass RIMs are only built for logistic regression")]
    UnsupportedClassifier,
    #[error("RIMs are already weighted")]
    AlreadyWeighted,
    #[error("expected {expected} weights, got {got}")]
    WeightLength { expected: usize, got: usize },
}

/// Base learner used for every (re)training in a round.
#[derive(Debug, Clone, Copy)]
pub struct Trainer<T> {
    pub kind: ModelKind,
    pub cfg: TrainConfig<T>,
}

impl<T: Scalar> Trainer<T> {
    pub fn new(kind: ModelKind, cfg: TrainConfig<T>) -> Self {
        Self { kind, cfg }
    }

    pub fn fit(
        &self,
        x: &Matrix<T>,
        y: &[usize],
        n_classes: usize,
    ) -> Result<LinearModel<T>, TrainError> {
        linmodels::train(self.kind, x, y, n_classes, &self.cfg)
    }

    /// Trains on the current labeled set only.
    pub fn fit_labeled(
        &self,
        ds: &Dataset<T>,
        state: &ActiveState,
    ) -> Result<LinearModel<T>, TrainError> {
        let (x, y) = ds.subset(state.labeled());
        self.fit(&x, &y, ds.n_classes())
    }
}

/// Binary RIMs: `p[(i, j)]` is `P(class 1 | x_j)` after retraining with
/// `(x_i, class 1)`; `n[(i, j)]` the same after retraining with `(x_i, class 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryRims<T> {
    pub p: Matrix<T>,
    pub n: Matrix<T>,
    pub weights: Vec<T>,
    pub weighted: bool,
    pub retrainings: usize,
}

impl<T: Scalar> BinaryRims<T> {
    pub fn pool_size(&self) -> usize {
        self.p.rows()
    }
}

/// Multiclass RIMs: `r[k]` holds `P(l | x_j)` after retraining with `(x_i, k)`,
/// stored flat at `(i * n + j) * K + l`.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassRims<T> {
    pub r: Vec<Vec<T>>,
    pub n: usize,
    pub n_classes: usize,
    pub weights: Vec<T>,
    pub weighted: bool,
    pub retrainings: usize,
}

impl<T: Scalar> MulticlassRims<T> {
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize, l: usize) -> T {
        self.r[k][(i * self.n + j) * self.n_classes + l]
    }

    pub fn pool_size(&self) -> usize {
        self.n
    }
}

struct Augmented<T> {
    x: Matrix<T>,
    y: Vec<usize>,
}

impl<T: Scalar> Augmented<T> {
    fn new(ds: &Dataset<T>, state: &ActiveState) -> Self {
        let (mut x, mut y) = ds.subset(state.labeled());
        x.push_row(&vec![T::zero(); ds.dim()]);
        y.push(0);
        Self { x, y }
    }

    fn set_candidate(&mut self, row: &[T], label: usize) {
        let last = self.x.rows() - 1;
        self.x.row_mut(last).copy_from_slice(row);
        self.y[last] = label;
    }
}

/// Pool posteriors under a model trained on the labeled set plus one pseudo-labeled candidate.
fn retrain_posteriors<T: Scalar>(
    ds: &Dataset<T>,
    state: &ActiveState,
    pool_x: &Matrix<T>,
    trainer: &Trainer<T>,
    candidate: usize,
    label: usize,
) -> Result<Matrix<T>, RimError> {
    let mut aug = Augmented::new(ds, state);
    aug.set_candidate(pool_x.row(candidate), label);
    let model = trainer
        .fit(&aug.x, &aug.y, ds.n_classes())
        .map_err(|source| RimError::Retrain { candidate, source })?;
    posteriors(&model, pool_x).map_err(|source| RimError::Retrain { candidate, source })
}

/// Posterior matrix of `model` on `x`; SVM decision values go through the fixed sigmoid.
pub fn posteriors<T: Scalar>(
    model: &LinearModel<T>,
    x: &Matrix<T>,
) -> Result<Matrix<T>, TrainError> {
    match model.kind {
        ModelKind::Logreg => predict_proba(model, x),
        ModelKind::Svm => {
            let f = decision_values(model, x)?;
            let mut out = Matrix::zeros(x.rows(), 2);
            for (i, v) in f.into_iter().enumerate() {
                let p1 = svm_pseudo_proba(v);
                out[(i, 0)] = T::one() - p1;
                out[(i, 1)] = p1;
            }
            Ok(out)
        }
    }
}

/// Runs `job` for every (candidate, label) pair in parallel and returns the
/// results in pool order; the first failure in pool order is reported.
fn collect_ordered<T, F>(n: usize, labels: usize, job: F) -> Result<Vec<Vec<Matrix<T>>>, RimError>
where
    T: Scalar,
    F: Fn(usize, usize) -> Result<Matrix<T>, RimError> + Sync,
{
    let results: Vec<Result<Matrix<T>, RimError>> = (0..n * labels)
        .into_par_iter()
        .map(|t| job(t / labels, t % labels))
        .collect();
    let mut out: Vec<Vec<Matrix<T>>> = Vec::with_capacity(n);
    let mut it = results.into_iter();
    for _ in 0..n {
        let mut per_label = Vec::with_capacity(labels);
        for _ in 0..labels {
            per_label.push(it.next().expect("sized")?);
        }
        out.push(per_label);
    }
    Ok(out)
}

pub fn build_binary_rims<T: Scalar>(
    ds: &Dataset<T>,
    state: &ActiveState,
    trainer: &Trainer<T>,
) -> Result<BinaryRims<T>, RimError> {
    if ds.n_classes() != 2 {
        return Err(RimError::NotBinary(ds.n_classes()));
    }
    let n = state.unlabeled().len();
    if n < 2 {
        return Err(RimError::PoolTooSmall(n, 2));
    }
    let pool_x = ds.features().select_rows(state.unlabeled());
    let rows = collect_ordered(n, 2, |i, label| {
        retrain_posteriors(ds, state, &pool_x, trainer, i, label)
    })?;

    let mut p = Matrix::zeros(n, n);
    let mut neg = Matrix::zeros(n, n);
    for (i, per_label) in rows.iter().enumerate() {
        for j in 0..n {
            neg[(i, j)] = per_label[0][(j, 1)];
            p[(i, j)] = per_label[1][(j, 1)];
        }
    }
    Ok(BinaryRims {
        p,
        n: neg,
        weights: vec![T::one(); n],
        weighted: false,
        retrainings: 2 * n,
    })
}

pub fn build_multiclass_rims<T: Scalar>(
    ds: &Dataset<T>,
    state: &ActiveState,
    trainer: &Trainer<T>,
) -> Result<MulticlassRims<T>, RimError> {
    if trainer.kind != ModelKind::Logreg {
        return Err(RimError::UnsupportedClassifier);
    }
    let k = ds.n_classes();
    let n = state.unlabeled().len();
    if n < 1 {
        return Err(RimError::PoolTooSmall(n, 1));
    }
    let pool_x = ds.features().select_rows(state.unlabeled());
    let rows = collect_ordered(n, k, |i, label| {
        retrain_posteriors(ds, state, &pool_x, trainer, i, label)
    })?;

    let mut r = vec![vec![T::zero(); n * n * k]; k];
    for (i, per_label) in rows.iter().enumerate() {
        for (kk, post) in per_label.iter().enumerate() {
            for j in 0..n {
                let base = (i * n + j) * k;
                r[kk][base..base + k].copy_from_slice(post.row(j));
            }
        }
    }
    Ok(MulticlassRims {
        r,
        n,
        n_classes: k,
        weights: vec![T::one(); n],
        weighted: false,
        retrainings: k * n,
    })
}

/// Pool weights from the model trained on the current labeled set: posterior
/// entropy for binary logistic regression, top-2 margin weight for multiclass,
/// `exp(-|f|)` for the SVM.
pub fn current_weights<T: Scalar>(
    model: &LinearModel<T>,
    pool_x: &Matrix<T>,
) -> Result<Vec<T>, TrainError> {
    match model.kind {
        ModelKind::Svm => Ok(decision_values(model, pool_x)?
            .into_iter()
            .map(svm_margin_weight)
            .collect()),
        ModelKind::Logreg => {
            let p = predict_proba(model, pool_x)?;
            Ok(if model.n_classes == 2 {
                p.iter_rows().map(entropy_weight).collect()
            } else {
                p.iter_rows().map(margin_weight).collect()
            })
        }
    }
}

fn check_weights<T>(weighted: bool, n: usize, e: &[T]) -> Result<(), RimError> {
    if weighted {
        return Err(RimError::AlreadyWeighted);
    }
    if e.len() != n {
        return Err(RimError::WeightLength {
            expected: n,
            got: e.len(),
        });
    }
    Ok(())
}

/// Scales column `j` of both matrices by `e[j]`.
pub fn apply_weights_binary<T: Scalar>(
    mut r: BinaryRims<T>,
    e: &[T],
) -> Result<BinaryRims<T>, RimError> {
    let n = r.pool_size();
    check_weights(r.weighted, n, e)?;
    for i in 0..n {
        for (j, &w) in e.iter().enumerate() {
            r.p[(i, j)] *= w;
            r.n[(i, j)] *= w;
        }
    }
    r.weights = e.to_vec();
    r.weighted = true;
    Ok(r)
}

/// Scales every `(., j, .)` slice of each tensor by `e[j]`.
pub fn apply_weights_multiclass<T: Scalar>(
    mut r: MulticlassRims<T>,
    e: &[T],
) -> Result<MulticlassRims<T>, RimError> {
    let (n, k) = (r.n, r.n_classes);
    check_weights(r.weighted, n, e)?;
    for tensor in &mut r.r {
        for i in 0..n {
            for (j, &w) in e.iter().enumerate() {
                let base = (i * n + j) * k;
                for v in &mut tensor[base..base + k] {
                    *v *= w;
                }
            }
        }
    }
    r.weights = e.to_vec();
    r.weighted = true;
    Ok(r)
}

/// Writes `P,i,j,value` / `N,i,j,value` rows.
pub fn dump_binary_rims<T: Scalar, W: Write>(r: &BinaryRims<T>, mut out: W) -> io::Result<()> {
    for (name, m) in [("P", &r.p), ("N", &r.n)] {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                writeln!(out, "{name},{i},{j},{}", m[(i, j)])?;
            }
        }
    }
    Ok(())
}

/// Writes `R<k>,i,j,l,value` rows.
pub fn dump_multiclass_rims<T: Scalar, W: Write>(
    r: &MulticlassRims<T>,
    mut out: W,
) -> io::Result<()> {
    for k in 0..r.n_classes {
        for i in 0..r.n {
            for j in 0..r.n {
                for l in 0..r.n_classes {
                    writeln!(out, "R{k},{i},{j},{l},{}", r.get(k, i, j, l))?;
                }
            }
        }
    }
    Ok(())
}
