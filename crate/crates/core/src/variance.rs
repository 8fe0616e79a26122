//! Informativeness (V1) and representativeness (V2) variances over RIMs, and their fusion.
//!
//! Binary case, with `A = [P; N]` stacked to `2n x n` and `B = P - N`:
//!
//! * `v1[j]` is the sample variance of column `j` of `A` (2n entries, mean
//!   over 2n, Bessel factor `1/(2n-1)`);
//! * `v2[i]` is the sample variance of row `i` of `B` (n entries).
//!
//! Multiclass case, with tensors `R_1..R_K`:
//!
//! * `v1[j]` averages over `l` the sample variance of the `nK` entries
//!   `R_k(i, j, l)` for all `k, i`;
//! * `v2[i]` averages over `l` the sample variance of the `nK` entries
//!   `(R_k - R_{k+1})(i, j, l)` for all cyclic pairs `k` and all `j`.
//!
//! All variances use two passes (mean, then squared deviations).

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rim::{BinaryRims, MulticlassRims};
use crate::scalar::argmax;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VarianceError {
    #[error("{what} needs at least {need} entries, got {got}")]
    TooFewEntries {
        what: &'static str,
        need: usize,
        got: usize,
    },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Which quantity drives selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Components {
    V1Only,
    V2Only,
    Fused,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceScores<T> {
    pub v1: Vec<T>,
    pub v2: Vec<T>,
    pub fused: Vec<T>,
}

impl<T: Scalar> VarianceScores<T> {
    pub fn from_parts(v1: Vec<T>, v2: Vec<T>) -> Result<Self, VarianceError> {
        let (fused, _) = fuse(&v1, &v2)?;
        Ok(Self { v1, v2, fused })
    }

    pub fn component(&self, c: Components) -> &[T] {
        match c {
            Components::V1Only => &self.v1,
            Components::V2Only => &self.v2,
            Components::Fused => &self.fused,
        }
    }

    /// Pool position with the largest selected score, lowest position on ties.
    pub fn select(&self, c: Components) -> Option<usize> {
        argmax(self.component(c))
    }

    /// Writes `scores,j,v1,v2,fused` rows.
    pub fn dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for j in 0..self.v1.len() {
            writeln!(
                out,
                "scores,{j},{},{},{}",
                self.v1[j], self.v2[j], self.fused[j]
            )?;
        }
        Ok(())
    }
}

/// Two-pass sample variance of the values yielded by `values`; needs `len >= 2`.
#[inline]
fn sample_variance<T: Scalar, I>(values: I, len: usize) -> T
where
    I: Iterator<Item = T> + Clone,
{
    let count = T::from_usize(len).expect("count fits");
    let mean = values.clone().fold(T::zero(), |a, v| a + v) / count;
    let ss = values.fold(T::zero(), |a, v| {
        let d = v - mean;
        a + d * d
    });
    ss / (count - T::one())
}

pub fn v1_binary<T: Scalar>(r: &BinaryRims<T>) -> Result<Vec<T>, VarianceError> {
    let n = r.pool_size();
    if n < 1 {
        return Err(VarianceError::TooFewEntries {
            what: "column variance",
            need: 1,
            got: 0,
        });
    }
    Ok((0..n)
        .map(|j| {
            let col = (0..n)
                .map(move |i| r.p[(i, j)])
                .chain((0..n).map(move |i| r.n[(i, j)]));
            sample_variance(col, 2 * n)
        })
        .collect())
}

pub fn v2_binary<T: Scalar>(r: &BinaryRims<T>) -> Result<Vec<T>, VarianceError> {
    let n = r.pool_size();
    if n < 2 {
        return Err(VarianceError::TooFewEntries {
            what: "row variance",
            need: 2,
            got: n,
        });
    }
    Ok((0..n)
        .map(|i| {
            let row = r.p.row(i).iter().zip(r.n.row(i)).map(|(&a, &b)| a - b);
            sample_variance(row, n)
        })
        .collect())
}

pub fn v1_multiclass<T: Scalar>(r: &MulticlassRims<T>) -> Result<Vec<T>, VarianceError> {
    let (n, k) = (r.n, r.n_classes);
    if n * k < 2 {
        return Err(VarianceError::TooFewEntries {
            what: "column variance",
            need: 2,
            got: n * k,
        });
    }
    let kt = T::from_usize(k).expect("count fits");
    Ok((0..n)
        .map(|j| {
            let total = (0..k)
                .map(|l| {
                    let col = (0..k).flat_map(move |kk| (0..n).map(move |i| r.get(kk, i, j, l)));
                    sample_variance(col, n * k)
                })
                .fold(T::zero(), |a, v| a + v);
            total / kt
        })
        .collect())
}

pub fn v2_multiclass<T: Scalar>(r: &MulticlassRims<T>) -> Result<Vec<T>, VarianceError> {
    let (n, k) = (r.n, r.n_classes);
    if n * k < 2 {
        return Err(VarianceError::TooFewEntries {
            what: "row variance",
            need: 2,
            got: n * k,
        });
    }
    let kt = T::from_usize(k).expect("count fits");
    Ok((0..n)
        .map(|i| {
            let total = (0..k)
                .map(|l| {
                    let row = (0..k).flat_map(move |kk| {
                        let next = (kk + 1) % k;
                        (0..n).map(move |j| r.get(kk, i, j, l) - r.get(next, i, j, l))
                    });
                    sample_variance(row, n * k)
                })
                .fold(T::zero(), |a, v| a + v);
            total / kt
        })
        .collect())
}

/// Elementwise product and its argmax (lowest position on ties).
pub fn fuse<T: Scalar>(v1: &[T], v2: &[T]) -> Result<(Vec<T>, usize), VarianceError> {
    if v1.len() != v2.len() {
        return Err(VarianceError::LengthMismatch(v1.len(), v2.len()));
    }
    if v1.is_empty() {
        return Err(VarianceError::TooFewEntries {
            what: "fusion",
            need: 1,
            got: 0,
        });
    }
    let scores: Vec<T> = v1.iter().zip(v2).map(|(&a, &b)| a * b).collect();
    let best = argmax(&scores).expect("non-empty");
    Ok((scores, best))
}

pub fn binary_scores<T: Scalar>(r: &BinaryRims<T>) -> Result<VarianceScores<T>, VarianceError> {
    VarianceScores::from_parts(v1_binary(r)?, v2_binary(r)?)
}

pub fn multiclass_scores<T: Scalar>(
    r: &MulticlassRims<T>,
) -> Result<VarianceScores<T>, VarianceError> {
    VarianceScores::from_parts(v1_multiclass(r)?, v2_multiclass(r)?)
}
