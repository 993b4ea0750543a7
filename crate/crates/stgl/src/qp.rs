//! Simplex-constrained quadratic programs.
//!
//! Both graph subproblems reduce to
//!
//! ```text
//!     minimize   c' w + w' Q w
//!     subject to w >= 0,  sum(w) = s
//! ```
//!
//! with `Q` symmetric positive definite, solved here by accelerated
//! projected gradient descent with a monotone restart. The step size is
//! `1 / (2 * Lambda)` where `Lambda` is the Lipschitz constant of the
//! gradient (twice the largest eigenvalue of `Q`, estimated by power
//! iteration; the extra factor of two is a safety margin). Convergence is
//! declared on the projected-gradient residual
//! `|| w - proj(w - grad f(w)) ||`.

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::graph::{edge_count, edge_pairs};

/// Relative tolerance of the power-iteration eigenvalue estimate.
const POWER_ITERATION_TOL: f64 = 1e-6;
const POWER_ITERATION_MAX: usize = 500;
/// Largest problem dimension accepted by the exhaustive grid solver.
pub const BRUTE_FORCE_MAX_DIM: usize = 4;

#[derive(Debug, Error)]
pub enum QpError {
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("dimension {dim} exceeds the brute-force limit {max}")]
    DimensionTooLarge { dim: usize, max: usize },
}

/// Symmetric PSD quadratic form, applied as an operator. Small problems
/// may materialize it densely; the graph subproblems use the structured
/// form `alpha * (2 I + S' S)` where `S` maps edge weights to node
/// degrees, whose action costs one pass over the edges.
#[derive(Debug, Clone)]
pub enum QuadraticOperator {
    /// Explicit symmetric matrix.
    Dense(Array2<f64>),
    /// `alpha * (2 I + S' S)` on the edge space of a graph with `n_nodes`
    /// nodes: `(Q w)_e = alpha * (2 w_e + deg_i(w) + deg_j(w))` for edge
    /// `e = (i, j)`.
    GraphEdge { n_nodes: usize, alpha: f64 },
}

impl QuadraticOperator {
    pub fn dim(&self) -> usize {
        match self {
            QuadraticOperator::Dense(m) => m.nrows(),
            QuadraticOperator::GraphEdge { n_nodes, .. } => edge_count(*n_nodes),
        }
    }

    pub fn apply(&self, w: &Array1<f64>) -> Array1<f64> {
        match self {
            QuadraticOperator::Dense(m) => m.dot(w),
            QuadraticOperator::GraphEdge { n_nodes, alpha } => {
                let n = *n_nodes;
                let mut deg = vec![0.0; n];
                for ((i, j), &we) in edge_pairs(n).zip(w.iter()) {
                    deg[i] += we;
                    deg[j] += we;
                }
                let mut out = Array1::<f64>::zeros(w.len());
                for (e, (i, j)) in edge_pairs(n).enumerate() {
                    out[e] = alpha * (2.0 * w[e] + deg[i] + deg[j]);
                }
                out
            }
        }
    }
}

/// One simplex-constrained QP instance.
///
/// `constant` records any additive term dropped while assembling the
/// problem, so callers can reconcile subproblem objectives with the full
/// joint objective they came from.
#[derive(Debug, Clone)]
pub struct SimplexQp {
    pub linear: Array1<f64>,
    pub quadratic: QuadraticOperator,
    /// Required coordinate sum `s > 0`.
    pub simplex_sum: f64,
    /// Positive lower bound on the eigenvalues of `Q`.
    pub strong_convexity: f64,
    /// Additive constant excluded from `objective`.
    pub constant: f64,
}

impl SimplexQp {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    /// `c' w + w' Q w` (without the stored constant).
    pub fn objective(&self, w: &Array1<f64>) -> f64 {
        self.linear.dot(w) + w.dot(&self.quadratic.apply(w))
    }

    /// Objective including the bookkeeping constant.
    pub fn objective_with_constant(&self, w: &Array1<f64>) -> f64 {
        self.objective(w) + self.constant
    }

    pub fn validate(&self) -> Result<(), QpError> {
        if self.linear.iter().any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite { what: "linear term" });
        }
        if self.quadratic.dim() != self.linear.len() {
            return Err(QpError::BadParameter(format!(
                "linear term has dimension {} but quadratic operator has {}",
                self.linear.len(),
                self.quadratic.dim()
            )));
        }
        if !(self.simplex_sum > 0.0) || !self.simplex_sum.is_finite() {
            return Err(QpError::BadParameter(format!(
                "simplex sum must be positive and finite, got {}",
                self.simplex_sum
            )));
        }
        if !(self.strong_convexity > 0.0) || !self.strong_convexity.is_finite() {
            return Err(QpError::BadParameter(format!(
                "strong convexity must be positive, got {}",
                self.strong_convexity
            )));
        }
        if let QuadraticOperator::Dense(m) = &self.quadratic {
            if m.nrows() != m.ncols() {
                return Err(QpError::BadParameter("quadratic matrix not square".into()));
            }
            let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
            for i in 0..m.nrows() {
                for j in (i + 1)..m.ncols() {
                    if (m[[i, j]] - m[[j, i]]).abs() > 1e-12 * scale {
                        return Err(QpError::InvalidProblem(format!(
                            "quadratic matrix asymmetric at ({i}, {j})"
                        )));
                    }
                }
            }
        }
        if let QuadraticOperator::GraphEdge { alpha, .. } = &self.quadratic {
            if !(*alpha > 0.0) {
                return Err(QpError::InvalidProblem(format!(
                    "graph-edge operator needs positive alpha, got {alpha}"
                )));
            }
        }
        Ok(())
    }
}

/// Result of a solver run. `solution` is always feasible; the reported
/// objective never exceeds the objective of the (projected) start point —
/// the solver keeps the best iterate seen.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub solution: Array1<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

impl SolverReport {
    /// Key-value pairs for embedding in run logs.
    pub fn kv_pairs(&self) -> Vec<(String, String)> {
        vec![
            ("objective".into(), format!("{:e}", self.objective)),
            ("iterations".into(), self.iterations.to_string()),
            ("kkt_residual".into(), format!("{:e}", self.kkt_residual)),
            ("converged".into(), self.converged.to_string()),
        ]
    }
}

/// Euclidean projection onto the scaled simplex `{ x >= 0, sum(x) = s }`
/// by the sort-and-threshold rule: with entries sorted descending, find
/// the largest prefix whose shifted entries stay positive and subtract
/// that prefix's threshold.
pub fn project_scaled_simplex(v: &Array1<f64>, s: f64) -> Result<Array1<f64>, QpError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(QpError::BadParameter(format!(
            "simplex sum must be positive and finite, got {s}"
        )));
    }
    if v.is_empty() {
        return Err(QpError::BadParameter("cannot project an empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(QpError::NonFinite { what: "projection input" });
    }
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut prefix = 0.0;
    let mut theta = sorted[0] - s; // k = 1 prefix always qualifies
    for (k, &u) in sorted.iter().enumerate() {
        prefix += u;
        let t = (prefix - s) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    Ok(v.mapv(|x| (x - theta).max(0.0)))
}

/// Largest eigenvalue of `Q` by power iteration from the normalized
/// all-ones vector, with a negative-curvature guard.
fn estimate_lambda_max(op: &QuadraticOperator) -> Result<f64, QpError> {
    let d = op.dim();
    let mut v = Array1::<f64>::from_elem(d, 1.0 / (d as f64).sqrt());
    let mut lambda_prev = f64::NAN;
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATION_MAX {
        let qv = op.apply(&v);
        lambda = v.dot(&qv);
        if lambda < -1e-10 {
            return Err(QpError::InvalidProblem(format!(
                "negative curvature detected (Rayleigh quotient {lambda})"
            )));
        }
        let norm = qv.dot(&qv).sqrt();
        if norm <= 1e-300 {
            // The operator annihilates the current direction; treat the
            // spectrum estimate as zero and let the caller's strong
            // convexity bound set the step.
            return Ok(0.0);
        }
        v = qv / norm;
        if lambda_prev.is_finite()
            && (lambda - lambda_prev).abs() <= POWER_ITERATION_TOL * lambda.abs().max(1e-12)
        {
            break;
        }
        lambda_prev = lambda;
    }
    Ok(lambda.max(0.0))
}

/// Solves the QP by accelerated projected gradient descent with a
/// monotone restart: whenever the momentum step would increase the
/// objective, the momentum is reset and a plain projected-gradient step
/// from the previous iterate is taken instead.
///
/// The returned report satisfies the descent contract
/// `objective <= f(projected start) + 1e-12` regardless of convergence;
/// hitting `max_iter` yields `converged = false` and the best iterate.
pub fn solve_simplex_qp(
    qp: &SimplexQp,
    start: &Array1<f64>,
    max_iter: usize,
    kkt_tol: f64,
) -> Result<SolverReport, QpError> {
    qp.validate()?;
    if start.len() != qp.dim() {
        return Err(QpError::BadParameter(format!(
            "start has dimension {}, problem has {}",
            start.len(),
            qp.dim()
        )));
    }
    if !(kkt_tol > 0.0) {
        return Err(QpError::BadParameter(format!(
            "kkt tolerance must be positive, got {kkt_tol}"
        )));
    }
    let s = qp.simplex_sum;
    let c = &qp.linear;
    let q = &qp.quadratic;

    let lambda_q = estimate_lambda_max(q)?.max(qp.strong_convexity);
    // Gradient Lipschitz constant is 2 * lambda_max(Q); halve the step
    // once more as the safety margin.
    let step = 1.0 / (4.0 * lambda_q);

    let mut w = project_scaled_simplex(start, s)?;
    let mut qw = q.apply(&w);
    let mut f_w = c.dot(&w) + w.dot(&qw);

    let mut best_w = w.clone();
    let mut best_f = f_w;

    // Early exit when the start already satisfies the optimality residual.
    let grad0 = c + &(2.0 * &qw);
    let res0 = &w - &project_scaled_simplex(&(&w - &grad0), s)?;
    let kkt0 = res0.dot(&res0).sqrt();
    if kkt0 <= kkt_tol {
        return Ok(SolverReport {
            solution: w,
            objective: f_w,
            iterations: 0,
            kkt_residual: kkt0,
            converged: true,
        });
    }

    let mut y = w.clone();
    let mut qy = qw.clone();
    let mut t: f64 = 1.0;
    let mut iterations = 0;
    let mut kkt = kkt0;
    let mut converged = false;

    for k in 1..=max_iter {
        iterations = k;
        let grad_y = c + &(2.0 * &qy);
        let mut w_next = project_scaled_simplex(&(&y - &(step * &grad_y)), s)?;
        let mut q_wn = q.apply(&w_next);

        // Curvature along the move; PSD operators keep this nonnegative.
        let d = &w_next - &y;
        let dd = d.dot(&d);
        if dd > 0.0 {
            let curvature = d.dot(&(&q_wn - &qy));
            if curvature < -1e-10 * dd.max(1e-300) {
                return Err(QpError::InvalidProblem(format!(
                    "negative curvature {curvature} along an iterate direction"
                )));
            }
        }

        let mut f_next = c.dot(&w_next) + w_next.dot(&q_wn);
        if f_next > f_w {
            // Monotone restart: plain projected-gradient step from w.
            t = 1.0;
            let grad_w = c + &(2.0 * &qw);
            w_next = project_scaled_simplex(&(&w - &(step * &grad_w)), s)?;
            q_wn = q.apply(&w_next);
            f_next = c.dot(&w_next) + w_next.dot(&q_wn);
        }

        if f_next < best_f {
            best_f = f_next;
            best_w = w_next.clone();
        }

        let grad_n = c + &(2.0 * &q_wn);
        let res = &w_next - &project_scaled_simplex(&(&w_next - &grad_n), s)?;
        kkt = res.dot(&res).sqrt();

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let gamma = (t - 1.0) / t_next;
        y = &w_next + &(gamma * &(&w_next - &w));
        qy = &q_wn + &(gamma * &(&q_wn - &qw));
        t = t_next;
        w = w_next;
        qw = q_wn;
        f_w = f_next;

        if kkt <= kkt_tol {
            converged = true;
            break;
        }
    }

    // Report the final iterate unless an earlier one was meaningfully
    // better; a band of relative 1e-12 keeps float noise in the objective
    // from overriding a converged endpoint while preserving the descent
    // contract.
    let band = 1e-12 * best_f.abs().max(1.0);
    let (solution, objective) = if f_w <= best_f + band {
        (w, f_w)
    } else {
        let qb = q.apply(&best_w);
        let grad_b = c + &(2.0 * &qb);
        let res = &best_w - &project_scaled_simplex(&(&best_w - &grad_b), s)?;
        kkt = res.dot(&res).sqrt();
        converged = kkt <= kkt_tol;
        (best_w, best_f)
    };

    Ok(SolverReport {
        solution,
        objective,
        iterations,
        kkt_residual: kkt,
        converged,
    })
}

/// Exhaustive grid search over the scaled simplex, for cross-checking the
/// iterative solver on tiny problems (dimension at most
/// [`BRUTE_FORCE_MAX_DIM`]). The grid has spacing `s / round(s / grid_step)`
/// so every candidate sums to `s` exactly. Returns the best grid point and
/// its objective (without the bookkeeping constant).
pub fn brute_force_simplex_qp(
    qp: &SimplexQp,
    s: f64,
    grid_step: f64,
) -> Result<(Array1<f64>, f64), QpError> {
    qp.validate()?;
    let dim = qp.dim();
    if dim > BRUTE_FORCE_MAX_DIM {
        return Err(QpError::DimensionTooLarge {
            dim,
            max: BRUTE_FORCE_MAX_DIM,
        });
    }
    if !(s > 0.0) || !(grid_step > 0.0) || grid_step > s {
        return Err(QpError::BadParameter(format!(
            "need 0 < grid_step <= s, got step {grid_step}, s {s}"
        )));
    }
    let levels = (s / grid_step).round().max(1.0) as usize;
    let unit = s / levels as f64;

    let mut counts = vec![0usize; dim];
    let mut best_w = Array1::<f64>::zeros(dim);
    let mut best_f = f64::INFINITY;
    enumerate_compositions(levels, dim, 0, &mut counts, &mut |counts| {
        let w = Array1::from_iter(counts.iter().map(|&k| k as f64 * unit));
        let f = qp.objective(&w);
        if f < best_f {
            best_f = f;
            best_w = w;
        }
    });
    Ok((best_w, best_f))
}

fn enumerate_compositions(
    remaining: usize,
    dim: usize,
    index: usize,
    counts: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if index == dim - 1 {
        counts[index] = remaining;
        visit(counts);
        return;
    }
    for k in 0..=remaining {
        counts[index] = k;
        enumerate_compositions(remaining - k, dim, index + 1, counts, visit);
    }
}
