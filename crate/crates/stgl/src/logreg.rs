//! Binary logistic regression trained by damped Newton iterations.
//!
//! The loss is the class-balanced cross-entropy: each sample carries
//! weight `1 / (2 * n_class)`, so both classes contribute equally no
//! matter how imbalanced the labels are (few positive electrodes is the
//! norm here), and the weights sum to one so tolerances are sample-count
//! free. An optional ridge penalty `l2 * ||coef||^2` applies to the
//! coefficients only — the intercept is always free.

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::linalg::solve_spd;

#[derive(Debug, Error)]
pub enum LogRegError {
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("feature matrix has {rows} rows but there are {labels} labels")]
    LabelCountMismatch { rows: usize, labels: usize },
    #[error("{0}")]
    BadParameter(String),
    #[error("feature dimension mismatch: got {got}, model has {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

/// A trained model. `loss_trace` holds the balanced loss after each
/// Newton step (non-increasing by the line-search contract).
#[derive(Debug, Clone)]
pub struct LogRegModel {
    pub coefficients: Array1<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub loss_trace: Vec<f64>,
}

const GRAD_TOL: f64 = 1e-6;
const PROB_CLAMP: f64 = 1e-12;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-sample balanced weights `1 / (2 * n_{class of i})`; they sum to 1.
pub fn balanced_weights(labels: &[bool]) -> Result<Array1<f64>, LogRegError> {
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(LogRegError::SingleClass);
    }
    Ok(Array1::from_iter(labels.iter().map(|&y| {
        if y {
            1.0 / (2.0 * n_pos as f64)
        } else {
            1.0 / (2.0 * n_neg as f64)
        }
    })))
}

/// Weighted loss and gradient at `params = [coefficients..., intercept]`.
/// Exposed so optimizer correctness can be checked against finite
/// differences from outside the crate.
pub fn loss_and_grad(
    features: &Array2<f64>,
    labels: &[bool],
    weights: &Array1<f64>,
    l2: f64,
    params: &Array1<f64>,
) -> (f64, Array1<f64>) {
    let (n, d) = features.dim();
    assert_eq!(params.len(), d + 1, "params must hold d coefficients plus an intercept");
    assert_eq!(labels.len(), n);
    assert_eq!(weights.len(), n);
    let coef = params.slice(ndarray::s![..d]);
    let intercept = params[d];

    let mut loss = 0.0;
    let mut grad = Array1::<f64>::zeros(d + 1);
    for i in 0..n {
        let z = features.row(i).dot(&coef) + intercept;
        let p = sigmoid(z);
        let y = if labels[i] { 1.0 } else { 0.0 };
        let w = weights[i];
        // Numerically stable cross-entropy: log(1 + e^-|z|) + max(z,0) - y z.
        loss += w * ((-z.abs()).exp().ln_1p() + z.max(0.0) - y * z);
        let r = w * (p - y);
        for (g, &x) in grad.iter_mut().zip(features.row(i)) {
            *g += r * x;
        }
        grad[d] += r;
    }
    for j in 0..d {
        loss += l2 * coef[j] * coef[j];
        grad[j] += 2.0 * l2 * coef[j];
    }
    (loss, grad)
}

/// Trains by Newton's method with backtracking: the Hessian
/// `Z' diag(w p (1-p)) Z + 2 l2 I` (intercept unpenalized) is solved by
/// Cholesky (with a jitter retry if the curvature is numerically
/// semidefinite), and the step is halved until the loss strictly
/// decreases. Convergence is a gradient norm at most 1e-6; hitting
/// `max_iter` first returns the best model with `converged = false`.
pub fn train(
    features: &Array2<f64>,
    labels: &[bool],
    l2: f64,
    max_iter: usize,
) -> Result<LogRegModel, LogRegError> {
    let (n, d) = features.dim();
    if labels.len() != n {
        return Err(LogRegError::LabelCountMismatch {
            rows: n,
            labels: labels.len(),
        });
    }
    if !(l2 >= 0.0) || !l2.is_finite() {
        return Err(LogRegError::BadParameter(format!(
            "l2 penalty must be nonnegative and finite, got {l2}"
        )));
    }
    if max_iter == 0 {
        return Err(LogRegError::BadParameter("max_iter must be at least 1".into()));
    }
    let weights = balanced_weights(labels)?;

    let mut params = Array1::<f64>::zeros(d + 1);
    let (mut loss, mut grad) = loss_and_grad(features, labels, &weights, l2, &params);
    let mut loss_trace = vec![loss];
    let mut converged = grad.dot(&grad).sqrt() <= GRAD_TOL;
    let mut iterations = 0;

    while !converged && iterations < max_iter {
        iterations += 1;

        // Assemble the (d+1) x (d+1) Hessian.
        let mut hessian = Array2::<f64>::zeros((d + 1, d + 1));
        for i in 0..n {
            let z = features.row(i).dot(&params.slice(ndarray::s![..d])) + params[d];
            let p = sigmoid(z);
            let c = weights[i] * p * (1.0 - p);
            if c == 0.0 {
                continue;
            }
            for a in 0..d {
                let xa = features[[i, a]];
                for b in a..d {
                    hessian[[a, b]] += c * xa * features[[i, b]];
                }
                hessian[[a, d]] += c * xa;
            }
            hessian[[d, d]] += c;
        }
        for a in 0..d + 1 {
            for b in 0..a {
                hessian[[a, b]] = hessian[[b, a]];
            }
        }
        for j in 0..d {
            hessian[[j, j]] += 2.0 * l2;
        }

        // Newton direction, with a jitter retry when p(1-p) underflows
        // the curvature away.
        let direction = solve_spd(&hessian, &grad).or_else(|| {
            let bump = 1e-10 * (hessian.diag().sum() / (d + 1) as f64).max(1.0);
            let mut jittered = hessian.clone();
            for j in 0..d + 1 {
                jittered[[j, j]] += bump;
            }
            solve_spd(&jittered, &grad)
        });
        let Some(direction) = direction else {
            break; // Curvature unusable; return the best-so-far model.
        };

        // Backtracking: halve until the loss strictly decreases.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate = &params - &(step * &direction);
            let (new_loss, new_grad) = loss_and_grad(features, labels, &weights, l2, &candidate);
            if new_loss < loss {
                params = candidate;
                loss = new_loss;
                grad = new_grad;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        loss_trace.push(loss);
        if !accepted {
            break; // No descent possible: already at numerical optimum.
        }
        converged = grad.dot(&grad).sqrt() <= GRAD_TOL;
    }

    Ok(LogRegModel {
        coefficients: params.slice(ndarray::s![..d]).to_owned(),
        intercept: params[d],
        converged,
        iterations,
        final_grad_norm: grad.dot(&grad).sqrt(),
        loss_trace,
    })
}

impl LogRegModel {
    /// Class-1 probabilities, clamped into the open interval (0, 1).
    pub fn predict_proba(&self, features: &Array2<f64>) -> Result<Array1<f64>, LogRegError> {
        if features.ncols() != self.coefficients.len() {
            return Err(LogRegError::DimensionMismatch {
                got: features.ncols(),
                expected: self.coefficients.len(),
            });
        }
        Ok(Array1::from_iter(features.rows().into_iter().map(|row| {
            sigmoid(row.dot(&self.coefficients) + self.intercept)
                .clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
        })))
    }

    /// Hard decisions at the 0.5 threshold.
    pub fn predict(&self, features: &Array2<f64>) -> Result<Vec<bool>, LogRegError> {
        Ok(self
            .predict_proba(features)?
            .iter()
            .map(|&p| p >= 0.5)
            .collect())
    }
}
