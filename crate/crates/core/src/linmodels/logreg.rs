//! L2-regularised logistic regression solved by damped Newton iterations.
//!
//! Binary objective over parameters `[w, b]` with `s_i = +1` for class 1 and
//! `-1` for class 0:
//!
//! ```text
//! 1/2 |w|^2 + C * sum_i log(1 + exp(-s_i (w.x_i + b)))
//! ```
//!
//! The multinomial objective (K > 2) over blocks `[w_k, b_k]` is
//!
//! ```text
//! 1/2 sum_k |w_k|^2 + 1/2 (sum_k b_k)^2 + C * sum_i -log softmax_{y_i}(W x_i + b)
//! ```
//!
//! Intercepts are not shrunk. The `(sum_k b_k)^2` term only pins the
//! otherwise free common shift of the intercepts; it is zero at the optimum
//! and leaves the predicted posteriors unchanged.

use crate::linmodels::{check_training_set, LinearModel, ModelKind, TrainConfig, TrainError};
use crate::matrix::{dot, norm2, solve_spd_shifted};
use crate::{Matrix, Scalar};

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

pub fn train_logreg<T: Scalar>(
    x: &Matrix<T>,
    y: &[usize],
    n_classes: usize,
    cfg: &TrainConfig<T>,
) -> Result<LinearModel<T>, TrainError> {
    cfg.validate()?;
    check_training_set(x, y, n_classes)?;
    let d = x.cols();
    let n_params = if n_classes == 2 {
        d + 1
    } else {
        n_classes * (d + 1)
    };
    let problem = Problem {
        x,
        y,
        n_classes,
        c: cfg.reg_c,
    };

    let mut theta = vec![T::zero(); n_params];
    let mut grad = vec![T::zero(); n_params];
    let mut hess = vec![T::zero(); n_params * n_params];
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..cfg.max_iter {
        let f = problem.eval(&theta, Some(&mut grad), Some(&mut hess));
        if !f.is_finite() {
            return Err(TrainError::NonFinite(it));
        }
        if norm2(&grad) < cfg.tol {
            converged = true;
            break;
        }
        iterations = it + 1;
        let rhs: Vec<T> = grad.iter().map(|&g| -g).collect();
        let Some(dir) = solve_spd_shifted(&hess, n_params, &rhs) else {
            return Err(TrainError::NonFinite(it));
        };
        let slope = dot(&grad, &dir);
        let slack = T::lit(4.0) * T::epsilon() * f.abs();
        let mut step = T::one();
        let mut accepted = false;
        let mut trial = theta.clone();
        for _ in 0..MAX_HALVINGS {
            for ((t, &th), &dv) in trial.iter_mut().zip(&theta).zip(&dir) {
                *t = th + step * dv;
            }
            let ft = problem.eval(&trial, None, None);
            if ft.is_finite() && ft <= f + T::lit(ARMIJO) * step * slope + slack {
                accepted = true;
                break;
            }
            step = step * T::lit(0.5);
        }
        if !accepted {
            // no representable descent left: theta is as good as the arithmetic allows
            break;
        }
        std::mem::swap(&mut theta, &mut trial);
    }
    if !converged {
        problem.eval(&theta, Some(&mut grad), None);
        converged = norm2(&grad) < cfg.tol;
        if !converged {
            log::debug!("logistic solver stopped at gradient norm {}", norm2(&grad));
        }
    }

    let (weights, intercepts) = unpack(&theta, n_classes, d);
    Ok(LinearModel {
        kind: ModelKind::Logreg,
        weights,
        intercepts,
        n_classes,
        reg_c: cfg.reg_c,
        converged,
        iterations,
    })
}

/// Regularised objective and its gradient at `params`.
///
/// Parameter layout is `[w, b]` for two classes and `[w_0, b_0, w_1, b_1, ...]`
/// otherwise, matching the objectives in the module documentation.
pub fn logistic_objective<T: Scalar>(
    params: &[T],
    x: &Matrix<T>,
    y: &[usize],
    n_classes: usize,
    c: T,
) -> (T, Vec<T>) {
    let mut grad = vec![T::zero(); params.len()];
    let f = Problem { x, y, n_classes, c }.eval(params, Some(&mut grad), None);
    (f, grad)
}

fn unpack<T: Scalar>(theta: &[T], n_classes: usize, d: usize) -> (Matrix<T>, Vec<T>) {
    let rows = if n_classes == 2 { 1 } else { n_classes };
    let mut w = Matrix::zeros(rows, d);
    let mut b = Vec::with_capacity(rows);
    for k in 0..rows {
        let block = &theta[k * (d + 1)..(k + 1) * (d + 1)];
        w.row_mut(k).copy_from_slice(&block[..d]);
        b.push(block[d]);
    }
    (w, b)
}

struct Problem<'a, T> {
    x: &'a Matrix<T>,
    y: &'a [usize],
    n_classes: usize,
    c: T,
}

impl<T: Scalar> Problem<'_, T> {
    fn eval(&self, theta: &[T], grad: Option<&mut Vec<T>>, hess: Option<&mut Vec<T>>) -> T {
        if self.n_classes == 2 {
            self.eval_binary(theta, grad, hess)
        } else {
            self.eval_multinomial(theta, grad, hess)
        }
    }

    fn eval_binary(&self, theta: &[T], grad: Option<&mut Vec<T>>, hess: Option<&mut Vec<T>>) -> T {
        let d = self.x.cols();
        let np = d + 1;
        let (w, b) = (&theta[..d], theta[d]);
        let half = T::lit(0.5);
        let mut loss = T::zero();
        let mut g_acc = grad.map(|g| {
            g.iter_mut().for_each(|v| *v = T::zero());
            g
        });
        let mut h_acc = hess.map(|h| {
            h.iter_mut().for_each(|v| *v = T::zero());
            h
        });

        for (row, &label) in self.x.iter_rows().zip(self.y) {
            let z = dot(w, row) + b;
            let margin = if label == 1 { z } else { -z };
            loss += softplus(-margin);
            if g_acc.is_none() && h_acc.is_none() {
                continue;
            }
            let p = super::sigmoid(z);
            let target = if label == 1 { T::one() } else { T::zero() };
            let r = p - target;
            if let Some(g) = g_acc.as_deref_mut() {
                for (gj, &xj) in g[..d].iter_mut().zip(row) {
                    *gj += r * xj;
                }
                g[d] += r;
            }
            if let Some(h) = h_acc.as_deref_mut() {
                let s = p * (T::one() - p);
                if s > T::zero() {
                    for a in 0..np {
                        let xa = if a < d { row[a] } else { T::one() };
                        let sxa = s * xa;
                        for bb in 0..=a {
                            let xb = if bb < d { row[bb] } else { T::one() };
                            h[a * np + bb] += sxa * xb;
                        }
                    }
                }
            }
        }

        let c = self.c;
        if let Some(g) = g_acc {
            for (j, gj) in g.iter_mut().enumerate() {
                *gj *= c;
                if j < d {
                    *gj += w[j];
                }
            }
        }
        if let Some(h) = h_acc {
            for a in 0..np {
                for bb in 0..=a {
                    let mut v = c * h[a * np + bb];
                    if a == bb && a < d {
                        v += T::one();
                    }
                    h[a * np + bb] = v;
                    h[bb * np + a] = v;
                }
            }
        }
        half * dot(w, w) + c * loss
    }

    fn eval_multinomial(
        &self,
        theta: &[T],
        grad: Option<&mut Vec<T>>,
        hess: Option<&mut Vec<T>>,
    ) -> T {
        let d = self.x.cols();
        let k = self.n_classes;
        let blk = d + 1;
        let np = k * blk;
        let half = T::lit(0.5);
        let mut loss = T::zero();
        let mut logits = vec![T::zero(); k];
        let mut probs = vec![T::zero(); k];
        let mut g_acc = grad.map(|g| {
            g.iter_mut().for_each(|v| *v = T::zero());
            g
        });
        let mut h_acc = hess.map(|h| {
            h.iter_mut().for_each(|v| *v = T::zero());
            h
        });

        for (row, &label) in self.x.iter_rows().zip(self.y) {
            for (cls, z) in logits.iter_mut().enumerate() {
                let block = &theta[cls * blk..(cls + 1) * blk];
                *z = dot(&block[..d], row) + block[d];
            }
            let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<T>().ln();
            loss += lse - logits[label];
            if g_acc.is_none() && h_acc.is_none() {
                continue;
            }
            super::softmax_into(&logits, &mut probs);
            let feat = |a: usize| if a < d { row[a] } else { T::one() };
            if let Some(g) = g_acc.as_deref_mut() {
                for cls in 0..k {
                    let r = probs[cls] - if cls == label { T::one() } else { T::zero() };
                    for a in 0..blk {
                        g[cls * blk + a] += r * feat(a);
                    }
                }
            }
            if let Some(h) = h_acc.as_deref_mut() {
                for c1 in 0..k {
                    for c2 in 0..=c1 {
                        let s =
                            probs[c1] * (if c1 == c2 { T::one() } else { T::zero() } - probs[c2]);
                        if s == T::zero() {
                            continue;
                        }
                        for a in 0..blk {
                            let sxa = s * feat(a);
                            let row_idx = (c1 * blk + a) * np + c2 * blk;
                            for bb in 0..blk {
                                h[row_idx + bb] += sxa * feat(bb);
                            }
                        }
                    }
                }
            }
        }

        let c = self.c;
        let bias_sum: T = (0..k).map(|cls| theta[cls * blk + d]).sum();
        let mut reg = T::zero();
        for cls in 0..k {
            let wk = &theta[cls * blk..cls * blk + d];
            reg += dot(wk, wk);
        }
        if let Some(g) = g_acc {
            for cls in 0..k {
                for a in 0..blk {
                    let idx = cls * blk + a;
                    g[idx] *= c;
                    g[idx] += if a < d { theta[idx] } else { bias_sum };
                }
            }
        }
        if let Some(h) = h_acc {
            // only the (c1 >= c2) blocks were accumulated; scale and mirror them
            let raw = h.clone();
            for c1 in 0..k {
                for c2 in 0..=c1 {
                    for a in 0..blk {
                        for bb in 0..blk {
                            let i = c1 * blk + a;
                            let j = c2 * blk + bb;
                            let mut v = c * raw[i * np + j];
                            if i == j && a < d {
                                v += T::one();
                            }
                            if a == d && bb == d {
                                v += T::one();
                            }
                            h[i * np + j] = v;
                            h[j * np + i] = v;
                        }
                    }
                }
            }
        }
        half * reg + half * bias_sum * bias_sum + c * loss
    }
}

/// `log(1 + exp(a))` without overflow.
#[inline]
fn softplus<T: Scalar>(a: T) -> T {
    if a > T::zero() {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}
