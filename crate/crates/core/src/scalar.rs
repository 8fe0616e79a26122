//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the solvers, RIM builders and variance kernels are written against.
///
/// Implemented for `f32` and `f64`. Solver tolerances differ per precision,
/// so they are associated constants rather than literals in the solvers.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Default gradient-norm threshold for the logistic solvers.
    const LOGREG_TOL: Self;
    /// Default maximal-violating-pair gap for the SVM solver.
    const SVM_TOL: Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f64 {
    const LOGREG_TOL: f64 = 1e-8;
    const SVM_TOL: f64 = 1e-6;
}

impl Scalar for f32 {
    const LOGREG_TOL: f32 = 1e-3;
    const SVM_TOL: f32 = 1e-3;
}

/// Index of the largest value, lowest index winning ties; `None` on an empty slice.
pub(crate) fn argmax<T: Scalar>(values: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

pub(crate) fn argmin<T: Scalar>(values: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if !(v < b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
