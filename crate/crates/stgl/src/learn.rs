//! Joint spatial/temporal graph learning by block coordinate descent.
//!
//! Given per-window signal matrices `X_1 .. X_M`, the learner estimates one
//! Laplacian per window plus one Laplacian over the windows themselves by
//! minimizing
//!
//! ```text
//!   sum_m trace(X_m' L_m X_m) + beta * sum_m ||L_m||_F^2
//!     + trace(Xt' Lt Xt) + beta * ||Lt||_F^2
//! ```
//!
//! where row `m` of `Xt` is the vectorized `L_m`, every `L_m` ranges over
//! valid Laplacians with `trace = n`, and `Lt` over valid Laplacians with
//! `trace = M`. The cross-window smoothness term couples the spatial blocks:
//! windows whose graphs resemble each other attract temporal weight, and
//! temporal weight in turn pulls those spatial graphs together.
//!
//! Each block restricted to its own weights is a simplex-constrained QP
//! (see [`crate::qp`]); one outer pass solves every spatial block and then
//! the temporal block. Because each block solve never increases its own
//! objective and the blocks partition the variables, the joint objective is
//! non-increasing across outer passes whenever `beta > 0`, and every block
//! minimizer is unique by strong convexity.

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::graph::{edge_count, edge_pairs, EdgeWeightVector, GraphError, GraphLaplacian, SignalMatrix};
use crate::qp::{solve_simplex_qp, QpError, QuadraticOperator, SimplexQp};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("no windows supplied")]
    EmptyWindows,
    #[error("window {window} has {got} nodes, expected {expected}")]
    NodeCountMismatch {
        window: usize,
        got: usize,
        expected: usize,
    },
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("solver failed on {block}: {source}")]
    Solver { block: BlockId, source: QpError },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Which block a solver failure came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockId {
    Spatial(usize),
    Temporal,
}

impl std::fmt::Display for BlockId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockId::Spatial(m) => write!(f, "spatial block {m}"),
            BlockId::Temporal => write!(f, "temporal block"),
        }
    }
}

/// Order in which spatial blocks see each other's updates within a pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMode {
    /// Blocks are solved in window order and each sees the latest values
    /// of all others. This is the mode the descent guarantee is stated
    /// for.
    #[default]
    GaussSeidel,
    /// All blocks are solved against a snapshot taken at the start of the
    /// pass (optionally in parallel) and committed together. Faster on
    /// wide problems but without the per-pass descent guarantee.
    Jacobi,
}

impl std::str::FromStr for SweepMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gauss-seidel" => Ok(SweepMode::GaussSeidel),
            "jacobi" => Ok(SweepMode::Jacobi),
            other => Err(format!(
                "unknown sweep mode '{other}' (expected 'gauss-seidel' or 'jacobi')"
            )),
        }
    }
}

impl std::fmt::Display for SweepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepMode::GaussSeidel => write!(f, "gauss-seidel"),
            SweepMode::Jacobi => write!(f, "jacobi"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LearnConfig {
    /// Frobenius regularization weight; must be positive.
    pub beta: f64,
    pub max_outer_iter: usize,
    /// Relative decrease of the joint objective that counts as converged.
    pub outer_rel_tol: f64,
    /// Projected-gradient residual tolerance for each block solve.
    pub kkt_tol: f64,
    /// Iteration cap per block solve.
    pub solver_max_iter: usize,
    pub sweep: SweepMode,
    /// Scale each window so its mean pairwise squared distance is one,
    /// making `beta` comparable across datasets. The learned graphs and
    /// the objective trace then refer to the rescaled windows (see
    /// [`normalize_windows`]).
    pub normalize_distances: bool,
    /// Worker threads for the Jacobi sweep; ignored under Gauss-Seidel.
    pub threads: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            max_outer_iter: 100,
            outer_rel_tol: 1e-6,
            kkt_tol: 1e-7,
            solver_max_iter: 5000,
            sweep: SweepMode::GaussSeidel,
            normalize_distances: true,
            threads: 1,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(LearnError::BadConfig(format!(
                "beta must be positive and finite, got {}",
                self.beta
            )));
        }
        if self.max_outer_iter == 0 {
            return Err(LearnError::BadConfig("max_outer_iter must be at least 1".into()));
        }
        if !(self.outer_rel_tol > 0.0) {
            return Err(LearnError::BadConfig(format!(
                "outer_rel_tol must be positive, got {}",
                self.outer_rel_tol
            )));
        }
        if !(self.kkt_tol > 0.0) {
            return Err(LearnError::BadConfig(format!(
                "kkt_tol must be positive, got {}",
                self.kkt_tol
            )));
        }
        if self.solver_max_iter == 0 {
            return Err(LearnError::BadConfig("solver_max_iter must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(LearnError::BadConfig("threads must be at least 1".into()));
        }
        Ok(())
    }
}

/// Output of [`run`]. For a single window the temporal graph degenerates
/// to the one-node zero graph, which is exempt from the trace constraint.
#[derive(Debug, Clone)]
pub struct LearnResult {
    pub spatial: Vec<GraphLaplacian>,
    pub temporal: GraphLaplacian,
    /// Joint objective at initialization, then after each outer pass.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub outer_iterations: usize,
}

/// The joint objective: per-window smoothness plus Frobenius penalties,
/// plus cross-window smoothness of the vectorized spatial Laplacians on
/// the temporal graph. Computed literally through the trace form.
pub fn joint_objective(
    windows: &[SignalMatrix],
    spatial: &[GraphLaplacian],
    temporal: &GraphLaplacian,
    beta: f64,
) -> Result<f64, LearnError> {
    if windows.is_empty() {
        return Err(LearnError::EmptyWindows);
    }
    if spatial.len() != windows.len() {
        return Err(LearnError::BadConfig(format!(
            "{} windows but {} spatial graphs",
            windows.len(),
            spatial.len()
        )));
    }
    if temporal.n_nodes() != windows.len() {
        return Err(LearnError::BadConfig(format!(
            "temporal graph has {} nodes but there are {} windows",
            temporal.n_nodes(),
            windows.len()
        )));
    }
    if !(beta > 0.0) {
        return Err(LearnError::BadConfig(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let n = spatial[0].n_nodes();
    let mut total = 0.0;
    for (m, (x, lap)) in windows.iter().zip(spatial.iter()).enumerate() {
        if lap.n_nodes() != n {
            return Err(LearnError::NodeCountMismatch {
                window: m,
                got: lap.n_nodes(),
                expected: n,
            });
        }
        total += crate::graph::smoothness(x, lap)?;
        total += beta * lap.frobenius_sq();
    }
    let stacked = stack_vectorized(spatial);
    total += crate::graph::smoothness(&stacked, temporal)?;
    total += beta * temporal.frobenius_sq();
    Ok(total)
}

/// Rows of the temporal signal matrix: one vectorized spatial Laplacian
/// per window.
fn stack_vectorized(spatial: &[GraphLaplacian]) -> SignalMatrix {
    let m = spatial.len();
    let n = spatial[0].n_nodes();
    let mut values = Array2::<f64>::zeros((m, n * n));
    for (row, lap) in spatial.iter().enumerate() {
        let v = lap.vectorized();
        for (col, &x) in v.iter().enumerate() {
            values[[row, col]] = x;
        }
    }
    SignalMatrix::new(values).expect("vectorized Laplacians are finite")
}

/// Scales each window to unit mean pairwise squared distance. Returns the
/// rescaled windows and the applied per-window scale factors (multipliers
/// on the samples). Windows with no distance mass are left untouched.
pub fn normalize_windows(windows: &[SignalMatrix]) -> (Vec<SignalMatrix>, Vec<f64>) {
    let mut out = Vec::with_capacity(windows.len());
    let mut scales = Vec::with_capacity(windows.len());
    for x in windows {
        let d = x.pairwise_sq_distances();
        let mean = if d.is_empty() { 0.0 } else { d.sum() / d.len() as f64 };
        if mean > 1e-300 {
            let factor = 1.0 / mean.sqrt();
            out.push(x.scaled(factor));
            scales.push(factor);
        } else {
            out.push(x.clone());
            scales.push(1.0);
        }
    }
    (out, scales)
}

/// `S' S w` without forming the matrix: coordinate `e = (i, j)` carries
/// `deg_i(w) + deg_j(w)`.
fn degree_pair_sums(n_nodes: usize, w: &Array1<f64>) -> Array1<f64> {
    let mut deg = vec![0.0; n_nodes];
    for ((i, j), &we) in edge_pairs(n_nodes).zip(w.iter()) {
        deg[i] += we;
        deg[j] += we;
    }
    let mut out = Array1::<f64>::zeros(w.len());
    for (e, (i, j)) in edge_pairs(n_nodes).enumerate() {
        out[e] = deg[i] + deg[j];
    }
    out
}

/// Assembles the QP for one spatial block.
///
/// `coupled` lists, for every other window `j`, the temporal weight
/// between this window and `j` together with `j`'s current edge weights.
/// With all temporal weights zero this reduces to single-graph learning
/// from this window alone. Expanding the coupling
/// `sum_j t_j * ||L(w) - L(w_j)||_F^2` through the linear weight-to-
/// Laplacian map gives the linear correction `-4 wbar - 2 S'S wbar` with
/// `wbar = sum_j t_j w_j`, the quadratic form `(beta + sum_j t_j) *
/// (2 I + S'S)`, and the dropped constant `sum_j t_j * ||L(w_j)||_F^2`.
pub fn spatial_subproblem(
    window: &SignalMatrix,
    coupled: &[(f64, &EdgeWeightVector)],
    beta: f64,
) -> Result<SimplexQp, LearnError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(LearnError::BadConfig(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    let n = window.n_nodes();
    if n < 2 {
        return Err(LearnError::BadConfig(format!(
            "need at least 2 nodes to learn a graph, got {n}"
        )));
    }
    let m_edges = edge_count(n);
    let mut coupling_total = 0.0;
    let mut wbar = Array1::<f64>::zeros(m_edges);
    let mut constant = 0.0;
    for &(t, wj) in coupled {
        if !(t >= -1e-12) || !t.is_finite() {
            return Err(LearnError::BadConfig(format!(
                "temporal coupling weight {t} is negative"
            )));
        }
        let t = t.max(0.0);
        if wj.n_nodes() != n {
            return Err(LearnError::BadConfig(format!(
                "coupled graph has {} nodes, window has {n}",
                wj.n_nodes()
            )));
        }
        if t == 0.0 {
            continue;
        }
        coupling_total += t;
        wbar.iter_mut()
            .zip(wj.weights().iter())
            .for_each(|(acc, &x)| *acc += t * x);
        constant += t * wj.laplacian_frobenius_sq();
    }

    let mut linear = window.pairwise_sq_distances();
    if coupling_total > 0.0 {
        let sts_wbar = degree_pair_sums(n, &wbar);
        for e in 0..m_edges {
            linear[e] += -4.0 * wbar[e] - 2.0 * sts_wbar[e];
        }
    }

    Ok(SimplexQp {
        linear,
        quadratic: QuadraticOperator::GraphEdge {
            n_nodes: n,
            alpha: beta + coupling_total,
        },
        simplex_sum: n as f64 / 2.0,
        strong_convexity: 2.0 * (beta + coupling_total),
        constant,
    })
}

/// Assembles the temporal QP: graph learning over the windows where the
/// signal on window `m` is its vectorized spatial Laplacian, so the linear
/// term is the vector of pairwise squared Frobenius distances.
pub fn temporal_subproblem(
    spatial: &[GraphLaplacian],
    beta: f64,
) -> Result<SimplexQp, LearnError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(LearnError::BadConfig(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    let m = spatial.len();
    if m < 2 {
        return Err(LearnError::BadConfig(format!(
            "temporal subproblem needs at least 2 windows, got {m}"
        )));
    }
    let n = spatial[0].n_nodes();
    for (idx, lap) in spatial.iter().enumerate() {
        if lap.n_nodes() != n {
            return Err(LearnError::NodeCountMismatch {
                window: idx,
                got: lap.n_nodes(),
                expected: n,
            });
        }
    }
    let mut linear = Array1::<f64>::zeros(edge_count(m));
    for (e, (i, j)) in edge_pairs(m).enumerate() {
        let diff = spatial[i].matrix() - spatial[j].matrix();
        linear[e] = diff.iter().map(|x| x * x).sum();
    }
    Ok(SimplexQp {
        linear,
        quadratic: QuadraticOperator::GraphEdge {
            n_nodes: m,
            alpha: beta,
        },
        simplex_sum: m as f64 / 2.0,
        strong_convexity: 2.0 * beta,
        constant: 0.0,
    })
}

/// Runs block coordinate descent until the joint objective's relative
/// decrease falls below `outer_rel_tol` or `max_outer_iter` passes
/// complete.
///
/// Spatial blocks start at the uniform complete graph and the temporal
/// block at the uniform graph over windows; all block solves warm-start
/// from the previous pass. The first trace entry is the objective at
/// initialization, followed by one entry per outer pass; because each
/// Gauss-Seidel block solve never goes uphill on its own block, the trace
/// is non-increasing.
pub fn run(windows: &[SignalMatrix], config: &LearnConfig) -> Result<LearnResult, LearnError> {
    config.validate()?;
    if windows.is_empty() {
        return Err(LearnError::EmptyWindows);
    }
    let n = windows[0].n_nodes();
    if n < 2 {
        return Err(LearnError::BadConfig(format!(
            "need at least 2 channels to learn graphs, got {n}"
        )));
    }
    for (m, x) in windows.iter().enumerate() {
        if x.n_nodes() != n {
            return Err(LearnError::NodeCountMismatch {
                window: m,
                got: x.n_nodes(),
                expected: n,
            });
        }
    }
    let m_windows = windows.len();

    let owned_normalized;
    let work: &[SignalMatrix] = if config.normalize_distances {
        owned_normalized = normalize_windows(windows).0;
        &owned_normalized
    } else {
        windows
    };

    let mut spatial_w: Vec<Array1<f64>> = (0..m_windows)
        .map(|_| EdgeWeightVector::uniform(n).as_array())
        .collect();
    let mut temporal_w: Array1<f64> = if m_windows >= 2 {
        EdgeWeightVector::uniform(m_windows).as_array()
    } else {
        Array1::zeros(0)
    };

    let build_laplacians = |weights: &[Array1<f64>]| -> Vec<GraphLaplacian> {
        weights
            .iter()
            .map(|w| GraphLaplacian::from_weights(&EdgeWeightVector::from_array_unchecked(n, w)))
            .collect()
    };
    let temporal_laplacian = |tw: &Array1<f64>| -> GraphLaplacian {
        if m_windows >= 2 {
            GraphLaplacian::from_weights(&EdgeWeightVector::from_array_unchecked(m_windows, tw))
        } else {
            GraphLaplacian::zero(1)
        }
    };

    let mut objective_trace = Vec::with_capacity(config.max_outer_iter + 1);
    objective_trace.push(joint_objective(
        work,
        &build_laplacians(&spatial_w),
        &temporal_laplacian(&temporal_w),
        config.beta,
    )?);

    let mut converged = false;
    let mut outer_iterations = 0;

    for _outer in 1..=config.max_outer_iter {
        outer_iterations += 1;

        match config.sweep {
            SweepMode::GaussSeidel => {
                for m in 0..m_windows {
                    let w_next =
                        solve_spatial_block(m, work, &spatial_w, &temporal_w, config)?;
                    spatial_w[m] = w_next;
                }
            }
            SweepMode::Jacobi => {
                let snapshot = spatial_w.clone();
                let results = if config.threads > 1 && m_windows > 1 {
                    jacobi_sweep_parallel(work, &snapshot, &temporal_w, config)?
                } else {
                    (0..m_windows)
                        .map(|m| solve_spatial_block(m, work, &snapshot, &temporal_w, config))
                        .collect::<Result<Vec<_>, _>>()?
                };
                spatial_w = results;
            }
        }

        if m_windows >= 2 {
            let laps = build_laplacians(&spatial_w);
            let qp = temporal_subproblem(&laps, config.beta)?;
            let report = solve_simplex_qp(&qp, &temporal_w, config.solver_max_iter, config.kkt_tol)
                .map_err(|source| LearnError::Solver {
                    block: BlockId::Temporal,
                    source,
                })?;
            temporal_w = report.solution;
        }

        let obj = joint_objective(
            work,
            &build_laplacians(&spatial_w),
            &temporal_laplacian(&temporal_w),
            config.beta,
        )?;
        let prev = *objective_trace.last().expect("trace is never empty");
        objective_trace.push(obj);
        let rel = (prev - obj).abs() / prev.abs().max(1e-300);
        if rel <= config.outer_rel_tol {
            converged = true;
            break;
        }
    }

    Ok(LearnResult {
        spatial: build_laplacians(&spatial_w),
        temporal: temporal_laplacian(&temporal_w),
        objective_trace,
        converged,
        outer_iterations,
    })
}

/// Solves spatial block `m` against the given state; `state` supplies the
/// other blocks' weights (the latest ones under Gauss-Seidel, a pass-start
/// snapshot under Jacobi) and the warm start for block `m` itself.
fn solve_spatial_block(
    m: usize,
    windows: &[SignalMatrix],
    state: &[Array1<f64>],
    temporal_w: &Array1<f64>,
    config: &LearnConfig,
) -> Result<Array1<f64>, LearnError> {
    let n = windows[0].n_nodes();
    let m_windows = windows.len();
    let others: Vec<EdgeWeightVector> = (0..m_windows)
        .filter(|&j| j != m)
        .map(|j| EdgeWeightVector::from_array_unchecked(n, &state[j]))
        .collect();
    let mut coupled: Vec<(f64, &EdgeWeightVector)> = Vec::with_capacity(others.len());
    for (idx, j) in (0..m_windows).filter(|&j| j != m).enumerate() {
        let t = if m_windows >= 2 {
            let (a, b) = if m < j { (m, j) } else { (j, m) };
            temporal_w[crate::graph::edge_index(m_windows, a, b)]
        } else {
            0.0
        };
        coupled.push((t, &others[idx]));
    }
    let qp = spatial_subproblem(&windows[m], &coupled, config.beta)?;
    let report = solve_simplex_qp(&qp, &state[m], config.solver_max_iter, config.kkt_tol).map_err(
        |source| LearnError::Solver {
            block: BlockId::Spatial(m),
            source,
        },
    )?;
    Ok(report.solution)
}

/// Jacobi sweep fanned out over scoped threads. Blocks are split into
/// contiguous chunks; results are committed in window order, so the
/// outcome does not depend on the thread count.
fn jacobi_sweep_parallel(
    windows: &[SignalMatrix],
    snapshot: &[Array1<f64>],
    temporal_w: &Array1<f64>,
    config: &LearnConfig,
) -> Result<Vec<Array1<f64>>, LearnError> {
    let m_windows = windows.len();
    let workers = config.threads.min(m_windows);
    let chunk = m_windows.div_ceil(workers);
    let mut results: Vec<Option<Result<Array1<f64>, LearnError>>> = Vec::new();
    results.resize_with(m_windows, || None);

    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (slot_chunk, range_start) in results
            .chunks_mut(chunk)
            .zip((0..m_windows).step_by(chunk))
        {
            handles.push(scope.spawn(move || {
                for (offset, slot) in slot_chunk.iter_mut().enumerate() {
                    let m = range_start + offset;
                    *slot = Some(solve_spatial_block(m, windows, snapshot, temporal_w, config));
                }
            }));
        }
        for h in handles {
            h.join().expect("jacobi worker panicked");
        }
    });

    results
        .into_iter()
        .map(|slot| slot.expect("every block solved"))
        .collect()
}
