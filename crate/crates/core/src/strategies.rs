//! Query-selection strategies behind one interface.
//!
//! | name            | classifier    | rule                                                        |
//! |-----------------|---------------|-------------------------------------------------------------|
//! | `mval`          | logreg, svm*  | argmax of V1, V2 or V1*V2 over (weighted) RIMs               |
//! | `random`        | any           | uniform draw from the pool                                   |
//! | `uncertainty`   | logreg, svm*  | max posterior entropy (logreg), min `|f|` (svm)              |
//! | `eer`           | logreg        | min expected post-retraining 0/1-style error                 |
//! | `ueer`          | logreg        | `eer` with each pool term weighted by current-model entropy  |
//! | `simple_margin` | svm           | min `|f|`                                                    |
//!
//! `*` binary only. Ties always go to the lowest pool position, and a pool
//! of one instance is returned without any training.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ActiveState, DataError, Query};
use crate::linmodels::{decision_values, entropy_weight, ModelKind, TrainConfig, TrainError};
use crate::rim::{
    apply_weights_binary, apply_weights_multiclass, build_binary_rims, build_multiclass_rims,
    current_weights, posteriors, BinaryRims, MulticlassRims, RimError, Trainer,
};
use crate::scalar::{argmax, argmin};
use crate::variance::{
    binary_scores, multiclass_scores, Components, VarianceError, VarianceScores,
};
use crate::{Dataset, Matrix, Scalar};

/// Stream offset for the random strategy; one stream per query step.
const RANDOM_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("the unlabeled pool is empty")]
    EmptyPool,
    #[error("invalid strategy: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Rim(#[from] RimError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Variance(#[from] VarianceError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    Mval,
    Random,
    Uncertainty,
    Eer,
    Ueer,
    SimpleMargin,
}

impl StrategyName {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyName::Mval => "mval",
            StrategyName::Random => "random",
            StrategyName::Uncertainty => "uncertainty",
            StrategyName::Eer => "eer",
            StrategyName::Ueer => "ueer",
            StrategyName::SimpleMargin => "simple_margin",
        }
    }
}

impl FromStr for StrategyName {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "mval" => StrategyName::Mval,
            "random" | "rs" => StrategyName::Random,
            "uncertainty" | "us" => StrategyName::Uncertainty,
            "eer" => StrategyName::Eer,
            "ueer" => StrategyName::Ueer,
            "simple_margin" | "simple" => StrategyName::SimpleMargin,
            other => {
                return Err(StrategyError::InvalidSpec(format!(
                    "unknown strategy {other:?}"
                )))
            }
        })
    }
}

/// Whether MVAL scales RIM columns by current-model uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Weighted,
    Unweighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategySpec {
    pub name: StrategyName,
    pub classifier: ModelKind,
    pub weighting: Weighting,
    pub components: Components,
    pub rng_seed: u64,
}

impl StrategySpec {
    pub fn new(name: StrategyName, classifier: ModelKind) -> Self {
        Self {
            name,
            classifier,
            weighting: Weighting::Weighted,
            components: Components::Fused,
            rng_seed: 0,
        }
    }

    pub fn mval(classifier: ModelKind) -> Self {
        Self::new(StrategyName::Mval, classifier)
    }

    pub fn with_components(mut self, c: Components) -> Self {
        self.components = c;
        self
    }

    pub fn with_weighting(mut self, w: Weighting) -> Self {
        self.weighting = w;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    /// Parses `name[:v1|v2|fused][:weighted|unweighted]`. Ablation switches
    /// are only meaningful for `mval`.
    pub fn parse(s: &str, classifier: ModelKind) -> Result<Self, StrategyError> {
        let mut parts = s.split(':');
        let name: StrategyName = parts.next().unwrap_or("").trim().parse()?;
        let mut spec = Self::new(name, classifier);
        for part in parts {
            match part.trim().to_ascii_lowercase().as_str() {
                "v1" => spec.components = Components::V1Only,
                "v2" => spec.components = Components::V2Only,
                "fused" | "v1v2" => spec.components = Components::Fused,
                "weighted" => spec.weighting = Weighting::Weighted,
                "unweighted" => spec.weighting = Weighting::Unweighted,
                other => {
                    return Err(StrategyError::InvalidSpec(format!(
                        "unknown switch {other:?} in {s:?}"
                    )))
                }
            }
            if name != StrategyName::Mval {
                return Err(StrategyError::InvalidSpec(format!(
                    "{s:?}: switches apply to mval only"
                )));
            }
        }
        Ok(spec)
    }

    /// Canonical name; default switches are omitted.
    pub fn label(&self) -> String {
        let mut out = self.name.as_str().to_string();
        if self.name == StrategyName::Mval {
            match self.components {
                Components::V1Only => out.push_str(":v1"),
                Components::V2Only => out.push_str(":v2"),
                Components::Fused => {}
            }
            if self.weighting == Weighting::Unweighted {
                out.push_str(":unweighted");
            }
        }
        out
    }

    pub fn validate(&self, n_classes: usize) -> Result<(), StrategyError> {
        let bad = |msg: &str| {
            Err(StrategyError::InvalidSpec(format!(
                "{}: {msg}",
                self.label()
            )))
        };
        match (self.name, self.classifier) {
            (StrategyName::SimpleMargin, ModelKind::Logreg) => {
                bad("simple_margin requires the svm classifier")
            }
            (StrategyName::Eer | StrategyName::Ueer, ModelKind::Svm) => {
                bad("eer/ueer require logreg")
            }
            (_, ModelKind::Svm) if n_classes != 2 => bad("the svm classifier is binary only"),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// RIMs and scores behind an MVAL decision, for debug dumps.
#[derive(Debug, Clone)]
pub enum RimTrace<T> {
    Binary(BinaryRims<T>),
    Multiclass(MulticlassRims<T>),
}

#[derive(Debug, Clone)]
pub struct MvalTrace<T> {
    pub rims: RimTrace<T>,
    pub scores: VarianceScores<T>,
}

#[derive(Debug, Clone)]
pub struct Selection<T> {
    /// Dataset row index of the query.
    pub index: usize,
    /// Position of the query in the unlabeled pool.
    pub pool_position: usize,
    pub trace: Option<MvalTrace<T>>,
}

/// Returns the dataset index of the next query.
pub fn select<T: Scalar>(
    spec: &StrategySpec,
    ds: &Dataset<T>,
    state: &ActiveState,
    cfg: &TrainConfig<T>,
) -> Result<usize, StrategyError> {
    select_traced(spec, ds, state, cfg, false).map(|s| s.index)
}

pub fn select_traced<T: Scalar>(
    spec: &StrategySpec,
    ds: &Dataset<T>,
    state: &ActiveState,
    cfg: &TrainConfig<T>,
    keep_trace: bool,
) -> Result<Selection<T>, StrategyError> {
    spec.validate(ds.n_classes())?;
    let pool = state.unlabeled();
    if pool.is_empty() {
        return Err(StrategyError::EmptyPool);
    }
    let done = |pos: usize, trace| {
        Ok(Selection {
            index: pool[pos],
            pool_position: pos,
            trace,
        })
    };
    if pool.len() == 1 {
        return done(0, None);
    }

    let trainer = Trainer::new(spec.classifier, *cfg);
    match spec.name {
        StrategyName::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
            rng.set_stream(RANDOM_STREAM_BASE + state.history().len() as u64);
            done(rng.gen_range(0..pool.len()), None)
        }
        StrategyName::Uncertainty | StrategyName::SimpleMargin => {
            let model = trainer.fit_labeled(ds, state)?;
            let pool_x = ds.features().select_rows(pool);
            let pos = match spec.classifier {
                ModelKind::Svm => {
                    let f: Vec<T> = decision_values(&model, &pool_x)?
                        .into_iter()
                        .map(T::abs)
                        .collect();
                    argmin(&f)
                }
                ModelKind::Logreg => {
                    let p = posteriors(&model, &pool_x)?;
                    argmax(&p.iter_rows().map(entropy_weight).collect::<Vec<_>>())
                }
            };
            done(pos.expect("non-empty pool"), None)
        }
        StrategyName::Eer | StrategyName::Ueer => {
            let risk = expected_error(ds, state, &trainer, spec.name == StrategyName::Ueer)?;
            done(argmin(&risk).expect("non-empty pool"), None)
        }
        StrategyName::Mval => {
            let (trace, pos) = mval_scores(spec, ds, state, &trainer)?;
            done(pos, keep_trace.then_some(trace))
        }
    }
}

fn mval_scores<T: Scalar>(
    spec: &StrategySpec,
    ds: &Dataset<T>,
    state: &ActiveState,
    trainer: &Trainer<T>,
) -> Result<(MvalTrace<T>, usize), StrategyError> {
    let n = state.unlabeled().len();
    let e = match spec.weighting {
        Weighting::Weighted => {
            let model = trainer.fit_labeled(ds, state).map_err(RimError::Current)?;
            let pool_x = ds.features().select_rows(state.unlabeled());
            current_weights(&model, &pool_x)?
        }
        Weighting::Unweighted => vec![T::one(); n],
    };
    let (rims, scores) = if ds.n_classes() == 2 {
        let r = apply_weights_binary(build_binary_rims(ds, state, trainer)?, &e)?;
        let s = binary_scores(&r)?;
        (RimTrace::Binary(r), s)
    } else {
        let r = apply_weights_multiclass(build_multiclass_rims(ds, state, trainer)?, &e)?;
        let s = multiclass_scores(&r)?;
        (RimTrace::Multiclass(r), s)
    };
    let pos = scores.select(spec.components).expect("non-empty pool");
    Ok((MvalTrace { rims, scores }, pos))
}

/// Expected error after adding each candidate, per pool position:
/// `sum_y P(y|x_i) * sum_{j != i} w_j (1 - max_l P_{+(x_i,y)}(l|x_j))`,
/// with `w_j = 1` (eer) or the current-model entropy of `x_j` (ueer).
pub fn expected_error<T: Scalar>(
    ds: &Dataset<T>,
    state: &ActiveState,
    trainer: &Trainer<T>,
    uncertainty_weighted: bool,
) -> Result<Vec<T>, StrategyError> {
    let pool = state.unlabeled();
    let n = pool.len();
    let k = ds.n_classes();
    let pool_x = ds.features().select_rows(pool);
    let current = trainer.fit_labeled(ds, state).map_err(RimError::Current)?;
    let p_now = posteriors(&current, &pool_x)?;
    let w: Vec<T> = if uncertainty_weighted {
        p_now.iter_rows().map(entropy_weight).collect()
    } else {
        vec![T::one(); n]
    };

    let (lab_x, lab_y) = ds.subset(state.labeled());
    let per_pair: Vec<Result<T, StrategyError>> = (0..n * k)
        .into_par_iter()
        .map(|t| {
            let (i, y) = (t / k, t % k);
            let mut x = lab_x.clone();
            x.push_row(pool_x.row(i));
            let mut labels = lab_y.clone();
            labels.push(y);
            let model = trainer
                .fit(&x, &labels, k)
                .map_err(|source| RimError::Retrain {
                    candidate: i,
                    source,
                })?;
            let post: Matrix<T> = posteriors(&model, &pool_x)?;
            let err = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let top = post.row(j).iter().copied().fold(T::zero(), T::max);
                    w[j] * (T::one() - top)
                })
                .fold(T::zero(), |a, v| a + v);
            Ok(p_now[(i, y)] * err)
        })
        .collect();

    let mut risk = vec![T::zero(); n];
    for (t, r) in per_pair.into_iter().enumerate() {
        risk[t / k] += r?;
    }
    Ok(risk)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoundOutcome {
    Queried(Query),
    Exhausted,
}

/// Selects, reveals the true label, and moves the query into the labeled set.
pub fn run_round<T: Scalar>(
    ds: &Dataset<T>,
    state: &mut ActiveState,
    spec: &StrategySpec,
    cfg: &TrainConfig<T>,
) -> Result<RoundOutcome, StrategyError> {
    if state.unlabeled().is_empty() {
        return Ok(RoundOutcome::Exhausted);
    }
    let index = select(spec, ds, state, cfg)?;
    Ok(RoundOutcome::Queried(state.reveal(ds, index)?))
}
