//! Linear classifiers used as the base learner for every query strategy.
//!
//! Both trainers start from zero and are deterministic, so a retraining on the
//! same labeled set always produces bit-identical parameters.

mod logreg;
mod svm;
mod weights;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::dot;
use crate::{Matrix, Scalar};

pub use logreg::{logistic_objective, train_logreg};
pub use svm::{solve_svm_dual, svm_primal_objective, train_svm, SvmDualSolution};
pub use weights::{entropy_weight, margin_weight, sigmoid, svm_margin_weight, svm_pseudo_proba};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("class {0} has no training instance")]
    MissingClass(usize),
    #[error("linear SVM is binary only; got {0} classes")]
    NotBinary(usize),
    #[error("objective became non-finite at iteration {0}")]
    NonFinite(usize),
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0} labels for {1} rows")]
    LabelCount(usize, usize),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logreg,
    Svm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logreg => "logreg",
            ModelKind::Svm => "svm",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "logreg" | "lr" => Ok(ModelKind::Logreg),
            "svm" => Ok(ModelKind::Svm),
            other => Err(format!(
                "unknown classifier {other:?} (expected logreg or svm)"
            )),
        }
    }
}

/// Solver settings. `max_iter` counts Newton steps for logistic regression
/// and pair updates for the SVM dual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig<T> {
    pub reg_c: T,
    pub max_iter: usize,
    pub tol: T,
}

impl<T: Scalar> TrainConfig<T> {
    /// C = 100, gradient-norm tolerance [`Scalar::LOGREG_TOL`], 200 Newton steps.
    pub fn logreg() -> Self {
        Self {
            reg_c: T::lit(100.0),
            max_iter: 200,
            tol: T::LOGREG_TOL,
        }
    }

    /// C = 10, violating-pair tolerance [`Scalar::SVM_TOL`].
    pub fn svm() -> Self {
        Self {
            reg_c: T::lit(10.0),
            max_iter: 100_000,
            tol: T::SVM_TOL,
        }
    }

    pub fn for_kind(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Logreg => Self::logreg(),
            ModelKind::Svm => Self::svm(),
        }
    }

    pub fn with_c(mut self, c: T) -> Self {
        self.reg_c = c;
        self
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.reg_c > T::zero()) || !self.reg_c.is_finite() {
            return Err(TrainError::InvalidConfig(
                "reg_c must be positive and finite",
            ));
        }
        if !(self.tol > T::zero()) {
            return Err(TrainError::InvalidConfig("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(TrainError::InvalidConfig("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Trained linear classifier.
///
/// Binary models (logistic or SVM) carry one weight row scoring class 1;
/// multinomial logistic models carry one row per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T> {
    pub kind: ModelKind,
    pub weights: Matrix<T>,
    pub intercepts: Vec<T>,
    pub n_classes: usize,
    pub reg_c: T,
    pub converged: bool,
    pub iterations: usize,
}

impl<T: Scalar> LinearModel<T> {
    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn is_binary(&self) -> bool {
        self.weights.rows() == 1
    }

    fn check_dim(&self, x: &Matrix<T>) -> Result<(), TrainError> {
        if x.cols() != self.dim() {
            return Err(TrainError::DimensionMismatch {
                expected: self.dim(),
                got: x.cols(),
            });
        }
        Ok(())
    }
}

/// Trains the requested classifier. Labels are class ids in `0..n_classes`.
pub fn train<T: Scalar>(
    kind: ModelKind,
    x: &Matrix<T>,
    y: &[usize],
    n_classes: usize,
    cfg: &TrainConfig<T>,
) -> Result<LinearModel<T>, TrainError> {
    match kind {
        ModelKind::Logreg => train_logreg(x, y, n_classes, cfg),
        ModelKind::Svm => {
            if n_classes != 2 {
                return Err(TrainError::NotBinary(n_classes));
            }
            train_svm(x, y, cfg)
        }
    }
}

/// `w.x + b` for every row of a binary model.
pub fn decision_values<T: Scalar>(m: &LinearModel<T>, x: &Matrix<T>) -> Result<Vec<T>, TrainError> {
    m.check_dim(x)?;
    if !m.is_binary() {
        return Err(TrainError::NotBinary(m.n_classes));
    }
    let w = m.weights.row(0);
    let b = m.intercepts[0];
    Ok(x.iter_rows().map(|r| dot(w, r) + b).collect())
}

/// Class posteriors, one row per instance.
///
/// Binary models return `[P(class 0), P(class 1)]` with `P(class 1)` the
/// sigmoid of the decision value. For an SVM this is the fixed sigmoidal
/// transfer of [`svm_pseudo_proba`], not a calibrated probability.
pub fn predict_proba<T: Scalar>(
    m: &LinearModel<T>,
    x: &Matrix<T>,
) -> Result<Matrix<T>, TrainError> {
    m.check_dim(x)?;
    let k = m.n_classes;
    let mut out = Matrix::zeros(x.rows(), k);
    if m.is_binary() {
        for (i, f) in decision_values(m, x)?.into_iter().enumerate() {
            let p1 = sigmoid(f);
            out[(i, 0)] = T::one() - p1;
            out[(i, 1)] = p1;
        }
        return Ok(out);
    }
    let mut logits = vec![T::zero(); k];
    for (i, row) in x.iter_rows().enumerate() {
        for (c, z) in logits.iter_mut().enumerate() {
            *z = dot(m.weights.row(c), row) + m.intercepts[c];
        }
        softmax_into(&logits, out.row_mut(i));
    }
    Ok(out)
}

/// Predicted class ids. Binary models predict class 1 iff the decision value is positive.
pub fn predict<T: Scalar>(m: &LinearModel<T>, x: &Matrix<T>) -> Result<Vec<usize>, TrainError> {
    if m.is_binary() {
        return Ok(decision_values(m, x)?
            .into_iter()
            .map(|f| usize::from(f > T::zero()))
            .collect());
    }
    let p = predict_proba(m, x)?;
    Ok(p.iter_rows()
        .map(|r| crate::scalar::argmax(r).expect("non-empty row"))
        .collect())
}

pub(crate) fn softmax_into<T: Scalar>(logits: &[T], out: &mut [T]) {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

pub(crate) fn check_training_set<T: Scalar>(
    x: &Matrix<T>,
    y: &[usize],
    n_classes: usize,
) -> Result<(), TrainError> {
    if y.len() != x.rows() {
        return Err(TrainError::LabelCount(y.len(), x.rows()));
    }
    let mut seen = vec![false; n_classes];
    for &c in y {
        if c >= n_classes {
            return Err(TrainError::MissingClass(c));
        }
        seen[c] = true;
    }
    match seen.iter().filter(|s| **s).count() {
        0 | 1 => Err(TrainError::SingleClass),
        _ => match seen.iter().position(|s| !s) {
            Some(k) => Err(TrainError::MissingClass(k)),
            None => Ok(()),
        },
    }
}
