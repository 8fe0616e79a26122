//! Linear soft-margin SVM with an unregularised intercept, trained in the dual.
//!
//! Primal: `1/2 |w|^2 + C * sum_i max(0, 1 - s_i (w.x_i + b))`.
//! Dual: `min 1/2 a'Qa - sum a` over `0 <= a_i <= C`, `sum s_i a_i = 0`, with
//! `Q_ij = s_i s_j x_i.x_j`. The equality constraint coming from the free
//! intercept means single coordinates cannot move on their own, so each step
//! updates the maximal violating pair (two-coordinate descent, SMO).

use crate::linmodels::{check_training_set, LinearModel, ModelKind, TrainConfig, TrainError};
use crate::matrix::dot;
use crate::{Matrix, Scalar};

/// Dual optimum and the primal parameters recovered from it.
#[derive(Debug, Clone)]
pub struct SvmDualSolution<T> {
    pub alpha: Vec<T>,
    pub w: Vec<T>,
    pub b: T,
    pub iterations: usize,
    pub converged: bool,
}

pub fn train_svm<T: Scalar>(
    x: &Matrix<T>,
    y: &[usize],
    cfg: &TrainConfig<T>,
) -> Result<LinearModel<T>, TrainError> {
    let sol = solve_svm_dual(x, y, cfg)?;
    let mut weights = Matrix::zeros(1, x.cols());
    weights.row_mut(0).copy_from_slice(&sol.w);
    Ok(LinearModel {
        kind: ModelKind::Svm,
        weights,
        intercepts: vec![sol.b],
        n_classes: 2,
        reg_c: cfg.reg_c,
        converged: sol.converged,
        iterations: sol.iterations,
    })
}

pub fn solve_svm_dual<T: Scalar>(
    x: &Matrix<T>,
    y: &[usize],
    cfg: &TrainConfig<T>,
) -> Result<SvmDualSolution<T>, TrainError> {
    cfg.validate()?;
    if let Some(&bad) = y.iter().find(|&&c| c > 1) {
        return Err(TrainError::NotBinary(bad + 1));
    }
    check_training_set(x, y, 2)?;

    let m = x.rows();
    let c = cfg.reg_c;
    let zero = T::zero();
    let s: Vec<T> = y
        .iter()
        .map(|&l| if l == 1 { T::one() } else { -T::one() })
        .collect();

    let mut q = vec![zero; m * m];
    for i in 0..m {
        for j in 0..=i {
            let v = s[i] * s[j] * dot(x.row(i), x.row(j));
            q[i * m + j] = v;
            q[j * m + i] = v;
        }
    }
    let tau = T::lit(1e-12);

    let mut alpha = vec![zero; m];
    // gradient of the dual objective, Q a - 1
    let mut grad = vec![-T::one(); m];
    let mut converged = false;
    let mut iterations = 0;

    let in_up = |a: T, sv: T| (sv > zero && a < c) || (sv < zero && a > zero);
    let in_low = |a: T, sv: T| (sv < zero && a < c) || (sv > zero && a > zero);

    while iterations < cfg.max_iter {
        let mut i_sel = None;
        let mut g_max = T::neg_infinity();
        let mut j_sel = None;
        let mut g_min = T::infinity();
        for t in 0..m {
            let v = -s[t] * grad[t];
            if in_up(alpha[t], s[t]) && v > g_max {
                g_max = v;
                i_sel = Some(t);
            }
            if in_low(alpha[t], s[t]) && v < g_min {
                g_min = v;
                j_sel = Some(t);
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            converged = true;
            break;
        };
        if g_max - g_min < cfg.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let q_ij = q[i * m + j];
        let (q_ii, q_jj) = (q[i * m + i], q[j * m + j]);
        if s[i] != s[j] {
            let mut quad = q_ii + q_jj + q_ij + q_ij;
            if quad <= zero {
                quad = tau;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > zero {
                if alpha[j] < zero {
                    alpha[j] = zero;
                    alpha[i] = diff;
                }
            } else if alpha[i] < zero {
                alpha[i] = zero;
                alpha[j] = -diff;
            }
            if diff > zero {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q_ii + q_jj - q_ij - q_ij;
            if quad <= zero {
                quad = tau;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < zero {
                alpha[j] = zero;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < zero {
                alpha[i] = zero;
                alpha[j] = sum;
            }
        }
        alpha[i] = alpha[i].max(zero).min(c);
        alpha[j] = alpha[j].max(zero).min(c);

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..m {
            grad[t] += q[i * m + t] * di + q[j * m + t] * dj;
        }
        if !grad[i].is_finite() || !grad[j].is_finite() {
            return Err(TrainError::NonFinite(iterations));
        }
    }

    let b = intercept(&alpha, &grad, &s, c);
    let mut w = vec![zero; x.cols()];
    for (t, row) in x.iter_rows().enumerate() {
        let coef = alpha[t] * s[t];
        if coef != zero {
            for (wj, &xj) in w.iter_mut().zip(row) {
                *wj += coef * xj;
            }
        }
    }
    Ok(SvmDualSolution {
        alpha,
        w,
        b,
        iterations,
        converged,
    })
}

/// Intercept from the KKT conditions: the average over free multipliers, or
/// the midpoint of the feasible interval when every multiplier is at a bound.
fn intercept<T: Scalar>(alpha: &[T], grad: &[T], s: &[T], c: T) -> T {
    let zero = T::zero();
    let mut ub = T::infinity();
    let mut lb = T::neg_infinity();
    let mut free = 0usize;
    let mut free_sum = zero;
    for t in 0..alpha.len() {
        let yg = s[t] * grad[t];
        if alpha[t] >= c {
            if s[t] < zero {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= zero {
            if s[t] > zero {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let r = if free > 0 {
        free_sum / T::from_usize(free).expect("count fits")
    } else {
        (ub + lb) * T::lit(0.5)
    };
    -r
}

/// Primal hinge-loss objective of `(w, b)`.
pub fn svm_primal_objective<T: Scalar>(w: &[T], b: T, x: &Matrix<T>, y: &[usize], c: T) -> T {
    let hinge: T = x
        .iter_rows()
        .zip(y)
        .map(|(row, &l)| {
            let s = if l == 1 { T::one() } else { -T::one() };
            (T::one() - s * (dot(w, row) + b)).max(T::zero())
        })
        .sum();
    T::lit(0.5) * dot(w, w) + c * hinge
}
