//! Transfer and uncertainty-weight functions applied to current-model outputs.

use crate::Scalar;

/// Logistic sigmoid, evaluated so that `sigmoid(f) + sigmoid(-f) == 1` exactly.
#[inline]
pub fn sigmoid<T: Scalar>(f: T) -> T {
    if f >= T::zero() {
        T::one() / (T::one() + (-f).exp())
    } else {
        // 1 - s with s in [0.5, 1] is exact
        T::one() - T::one() / (T::one() + f.exp())
    }
}

/// Fixed sigmoidal transfer of an SVM decision value into `(0, 1)`.
///
/// No scaling parameters are fitted; saturation to exactly 0 or 1 happens
/// only where the floating-point format runs out of precision.
#[inline]
pub fn svm_pseudo_proba<T: Scalar>(f: T) -> T {
    sigmoid(f)
}

/// Shannon entropy (natural log) of a probability vector; zero entries contribute nothing.
pub fn entropy_weight<T: Scalar>(p: &[T]) -> T {
    p.iter()
        .filter(|&&v| v > T::zero())
        .map(|&v| -v * v.ln())
        .sum::<T>()
        .max(T::zero())
}

/// `exp(-(p_top1 - p_top2))` for the two largest posteriors.
///
/// Panics on fewer than two entries.
pub fn margin_weight<T: Scalar>(p: &[T]) -> T {
    assert!(p.len() >= 2, "margin weight needs at least two classes");
    let mut first = T::neg_infinity();
    let mut second = T::neg_infinity();
    for &v in p {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    (-(first - second)).exp()
}

/// `exp(-|f|)`: largest for instances on the decision boundary.
#[inline]
pub fn svm_margin_weight<T: Scalar>(f: T) -> T {
    (-f.abs()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sigmoid_fixed_points() {
        assert_eq!(svm_pseudo_proba(0.0f64), 0.5);
        assert_eq!(svm_pseudo_proba(0.0f32), 0.5);
        assert_eq!(svm_pseudo_proba(800.0f64), 1.0);
        assert!(svm_pseudo_proba(30.0f64) < 1.0);
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy_weight(&[0.5, 0.5]) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(entropy_weight(&[1.0, 0.0]), 0.0);
        // -(0.9 ln 0.9 + 0.1 ln 0.1) = 0.325082973391448...
        assert!((entropy_weight(&[0.9f64, 0.1]) - 0.325_082_973_391_448_2).abs() < 1e-12);
    }

    #[test]
    fn margin_examples() {
        assert!((margin_weight(&[1.0f64 / 3.0; 3]) - 1.0).abs() < 1e-15);
        assert!((margin_weight(&[1.0, 0.0]) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((margin_weight(&[0.5, 0.3, 0.2]) - (-0.2f64).exp()).abs() < 1e-15);
        assert_eq!(margin_weight(&[0.4, 0.4, 0.2]), 1.0);
    }

    #[test]
    fn svm_margin_examples() {
        assert_eq!(svm_margin_weight(0.0), 1.0);
        assert_eq!(svm_margin_weight(2.0), (-2.0f64).exp());
        assert_eq!(svm_margin_weight(-2.0), svm_margin_weight(2.0));
    }

    proptest! {
        #[test]
        fn sigmoid_is_symmetric_and_monotone(f in -60.0f64..60.0, g in -60.0f64..60.0) {
            prop_assert_eq!(sigmoid(f) + sigmoid(-f), 1.0);
            if f < g {
                prop_assert!(sigmoid(f) <= sigmoid(g));
            }
        }

        #[test]
        fn svm_margin_weight_decreases_in_magnitude(a in 0.0f64..50.0, b in 0.0f64..50.0) {
            if a < b {
                prop_assert!(svm_margin_weight(a) >= svm_margin_weight(-b));
            }
        }

        #[test]
        fn weights_ignore_class_order(raw in proptest::collection::vec(0.01f64..1.0, 2..6), rot in 0usize..6) {
            let total: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let mut q = p.clone();
            let len = q.len();
            q.rotate_left(rot % len);
            prop_assert!((entropy_weight(&p) - entropy_weight(&q)).abs() < 1e-14);
            prop_assert_eq!(margin_weight(&p), margin_weight(&q));
            let w = margin_weight(&p);
            prop_assert!(w > (-1.0f64).exp() - 1e-15 && w <= 1.0);
        }
    }
}
