//! Graph types and the smoothness quadratic form.
//!
//! An undirected weighted graph on `n` nodes is stored either as a vector of
//! nonnegative edge weights in canonical order — pairs `(i, j)` with
//! `i < j`, lexicographic — or as its combinatorial Laplacian `L = D - A`.
//! The admissible Laplacians are symmetric positive semidefinite matrices
//! with nonpositive off-diagonal entries and zero row sums; the learning
//! problems additionally fix `trace(L) = n`, which in weight space is the
//! scaled simplex `sum(w) = n / 2`.
//!
//! Signal smoothness is measured by the quadratic form
//! `trace(X^T L X) = sum_{i<j} w_ij * ||x_i - x_j||^2`
//! (one term per unordered edge), which is linear in the edge weights.

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::linalg;

/// Absolute tolerance on `|sum(w) - n/2|` for the trace-feasibility check.
pub const TRACE_FEASIBILITY_TOL: f64 = 1e-9;
/// Absolute tolerance on `|trace(L) - n|` when validating external matrices.
pub const TRACE_TOL: f64 = 1e-6;
/// Laplacian row sums must vanish to this absolute tolerance.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Off-diagonal entries may sit above zero by at most this much.
pub const OFF_DIAG_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue when eigenchecking external matrices.
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge weight {value} at index {index} is negative")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weight vector has length {got}, expected {expected} for {n_nodes} nodes")]
    WeightLength {
        got: usize,
        expected: usize,
        n_nodes: usize,
    },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("not a valid Laplacian: {reason}")]
    InvalidLaplacian { reason: String },
    #[error("signal has {signal_nodes} nodes but graph has {graph_nodes}")]
    DimensionMismatch {
        signal_nodes: usize,
        graph_nodes: usize,
    },
}

/// Number of undirected edges on `n` nodes.
pub fn edge_count(n_nodes: usize) -> usize {
    n_nodes * n_nodes.saturating_sub(1) / 2
}

/// Canonical index of edge `(i, j)`, `i < j`, in lexicographic order.
pub fn edge_index(n_nodes: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n_nodes);
    i * (2 * n_nodes - i - 1) / 2 + (j - i - 1)
}

/// Iterator over canonical edge pairs `(i, j)` with `i < j`.
pub fn edge_pairs(n_nodes: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n_nodes).flat_map(move |i| ((i + 1)..n_nodes).map(move |j| (i, j)))
}

/// Nonnegative edge weights of an undirected graph in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeightVector {
    n_nodes: usize,
    weights: Vec<f64>,
}

impl EdgeWeightVector {
    /// Wraps a weight vector, rejecting wrong lengths, negative or
    /// non-finite entries.
    pub fn new(n_nodes: usize, weights: Vec<f64>) -> Result<Self, GraphError> {
        let expected = edge_count(n_nodes);
        if weights.len() != expected {
            return Err(GraphError::WeightLength {
                got: weights.len(),
                expected,
                n_nodes,
            });
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() {
                return Err(GraphError::NonFinite { row: index, col: 0 });
            }
            if value < 0.0 {
                return Err(GraphError::NegativeWeight { index, value });
            }
        }
        Ok(Self { n_nodes, weights })
    }

    /// All-zero weights (the empty graph).
    pub fn zeros(n_nodes: usize) -> Self {
        Self {
            n_nodes,
            weights: vec![0.0; edge_count(n_nodes)],
        }
    }

    /// Uniform complete graph satisfying the trace constraint: every edge
    /// carries `1 / (n - 1)`, so the weights sum to `n / 2`.
    pub fn uniform(n_nodes: usize) -> Self {
        let m = edge_count(n_nodes);
        let w = if n_nodes >= 2 {
            1.0 / (n_nodes as f64 - 1.0)
        } else {
            0.0
        };
        Self {
            n_nodes,
            weights: vec![w; m],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of edge `(i, j)`; the order of `i` and `j` does not matter.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.weights[edge_index(self.n_nodes, a, b)]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Whether the weights satisfy the trace constraint `sum(w) = n / 2`.
    pub fn is_trace_feasible(&self) -> bool {
        (self.sum() - self.n_nodes as f64 / 2.0).abs() <= TRACE_FEASIBILITY_TOL
    }

    /// Node degrees induced by the weights: `deg_i = sum_j w_ij`.
    pub fn degrees(&self) -> Array1<f64> {
        let mut deg = Array1::<f64>::zeros(self.n_nodes);
        for ((i, j), &w) in edge_pairs(self.n_nodes).zip(self.weights.iter()) {
            deg[i] += w;
            deg[j] += w;
        }
        deg
    }

    /// `||L(w)||_F^2` without forming the matrix:
    /// `2 ||w||^2 + ||deg(w)||^2`.
    pub fn laplacian_frobenius_sq(&self) -> f64 {
        let deg = self.degrees();
        let w_sq: f64 = self.weights.iter().map(|w| w * w).sum();
        2.0 * w_sq + deg.iter().map(|d| d * d).sum::<f64>()
    }

    /// Builds the Laplacian `L = D - A` from these weights.
    pub fn to_laplacian(&self) -> GraphLaplacian {
        GraphLaplacian::from_weights(self)
    }

    pub(crate) fn as_array(&self) -> Array1<f64> {
        Array1::from_vec(self.weights.clone())
    }

    pub(crate) fn from_array_unchecked(n_nodes: usize, values: &Array1<f64>) -> Self {
        Self {
            n_nodes,
            weights: values.to_vec(),
        }
    }
}

/// Combinatorial Laplacian of an undirected weighted graph.
///
/// Instances built from an [`EdgeWeightVector`] are valid by construction.
/// Matrices from external sources go through [`GraphLaplacian::from_matrix`]
/// (structural checks) or [`GraphLaplacian::from_matrix_strict`] (adds the
/// trace constraint and an eigenvalue check).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphLaplacian {
    n_nodes: usize,
    matrix: Array2<f64>,
}

impl GraphLaplacian {
    /// `L = D - A` from nonnegative edge weights. Always valid; no
    /// eigencheck is run.
    pub fn from_weights(weights: &EdgeWeightVector) -> Self {
        let n = weights.n_nodes();
        let mut m = Array2::<f64>::zeros((n, n));
        for ((i, j), &w) in edge_pairs(n).zip(weights.weights().iter()) {
            m[[i, j]] = -w;
            m[[j, i]] = -w;
            m[[i, i]] += w;
            m[[j, j]] += w;
        }
        Self {
            n_nodes: n,
            matrix: m,
        }
    }

    /// Wraps a matrix after structural validation: square, finite,
    /// symmetric, nonpositive off-diagonal entries, vanishing row sums.
    ///
    /// The trace constraint is deliberately not enforced here — the zero
    /// matrix is a valid Laplacian that simply fails the separate
    /// trace-feasibility check.
    pub fn from_matrix(matrix: Array2<f64>) -> Result<Self, GraphError> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(GraphError::NotSquare {
                rows: n,
                cols: matrix.ncols(),
            });
        }
        for ((i, j), &v) in matrix.indexed_iter() {
            if !v.is_finite() {
                return Err(GraphError::NonFinite { row: i, col: j });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (matrix[[i, j]] - matrix[[j, i]]).abs() > OFF_DIAG_TOL {
                    return Err(GraphError::InvalidLaplacian {
                        reason: format!(
                            "asymmetric at ({i}, {j}): {} vs {}",
                            matrix[[i, j]],
                            matrix[[j, i]]
                        ),
                    });
                }
                if matrix[[i, j]] > OFF_DIAG_TOL {
                    return Err(GraphError::InvalidLaplacian {
                        reason: format!("positive off-diagonal {} at ({i}, {j})", matrix[[i, j]]),
                    });
                }
            }
        }
        for i in 0..n {
            let row_sum: f64 = matrix.row(i).sum();
            if row_sum.abs() > ROW_SUM_TOL {
                return Err(GraphError::InvalidLaplacian {
                    reason: format!("row {i} sums to {row_sum}, expected 0"),
                });
            }
        }
        Ok(Self { n_nodes: n, matrix })
    }

    /// Full membership validation for externally loaded matrices: the
    /// structural checks of [`from_matrix`](Self::from_matrix) plus
    /// `|trace - n| <= 1e-6` and a smallest-eigenvalue check at `-1e-8`.
    pub fn from_matrix_strict(matrix: Array2<f64>) -> Result<Self, GraphError> {
        let lap = Self::from_matrix(matrix)?;
        let trace = lap.trace();
        let n = lap.n_nodes as f64;
        if (trace - n).abs() > TRACE_TOL {
            return Err(GraphError::InvalidLaplacian {
                reason: format!("trace {trace} differs from node count {n}"),
            });
        }
        let min_eig = lap.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(GraphError::InvalidLaplacian {
                reason: format!("smallest eigenvalue {min_eig} below -{PSD_TOL}"),
            });
        }
        Ok(lap)
    }

    /// Zero graph on `n` nodes (used for the degenerate one-window case).
    pub fn zero(n_nodes: usize) -> Self {
        Self {
            n_nodes,
            matrix: Array2::zeros((n_nodes, n_nodes)),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        (0..self.n_nodes).map(|i| self.matrix[[i, i]]).sum()
    }

    /// Whether `trace(L) = n` holds to within twice the weight-space
    /// feasibility tolerance (the trace is `2 * sum(w)`).
    pub fn is_trace_feasible(&self) -> bool {
        (self.trace() - self.n_nodes as f64).abs() <= 2.0 * TRACE_FEASIBILITY_TOL
    }

    /// Node degrees (the diagonal).
    pub fn degrees(&self) -> Array1<f64> {
        Array1::from_iter((0..self.n_nodes).map(|i| self.matrix[[i, i]]))
    }

    /// Adjacency matrix `A` with `A_ij = -L_ij` off the diagonal.
    pub fn adjacency(&self) -> Array2<f64> {
        let mut a = -&self.matrix;
        for i in 0..self.n_nodes {
            a[[i, i]] = 0.0;
        }
        a
    }

    /// Recovers canonical edge weights. Entries in `(-OFF_DIAG_TOL, 0]`
    /// produced by rounding clamp to zero.
    pub fn edge_weights(&self) -> EdgeWeightVector {
        let n = self.n_nodes;
        let weights = edge_pairs(n)
            .map(|(i, j)| (-self.matrix[[i, j]]).max(0.0))
            .collect();
        EdgeWeightVector { n_nodes: n, weights }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.matrix.iter().map(|x| x * x).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.matrix)
    }

    /// Column stacking of the matrix into a length `n^2` vector.
    pub fn vectorized(&self) -> Array1<f64> {
        let n = self.n_nodes;
        let mut v = Array1::<f64>::zeros(n * n);
        for j in 0..n {
            for i in 0..n {
                v[j * n + i] = self.matrix[[i, j]];
            }
        }
        v
    }
}

/// Recovers edge weights from a raw matrix, with the same validation as
/// [`GraphLaplacian::from_matrix`]. The inverse of building the Laplacian.
pub fn weights_from_matrix(matrix: Array2<f64>) -> Result<EdgeWeightVector, GraphError> {
    Ok(GraphLaplacian::from_matrix(matrix)?.edge_weights())
}

/// Multichannel samples for one analysis window: one row per node, one
/// column per time sample. All entries must be finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    values: Array2<f64>,
}

impl SignalMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self, GraphError> {
        for ((i, j), &v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(GraphError::NonFinite { row: i, col: j });
            }
        }
        Ok(Self { values })
    }

    pub fn n_nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Squared Euclidean distances between node rows, in canonical edge
    /// order. This is the linear-term vector of the smoothness form.
    pub fn pairwise_sq_distances(&self) -> Array1<f64> {
        let n = self.n_nodes();
        let mut d = Array1::<f64>::zeros(edge_count(n));
        for (e, (i, j)) in edge_pairs(n).enumerate() {
            let ri = self.values.row(i);
            let rj = self.values.row(j);
            d[e] = ri
                .iter()
                .zip(rj.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
        }
        d
    }

    /// Uniform scaling of every sample.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: &self.values * factor,
        }
    }
}

/// Smoothness of the signals on the graph: `trace(X^T L X)`.
///
/// Computed literally as the trace of `X^T (L X)`; the equivalent
/// edge-weighted sum of squared row differences is reserved for tests.
pub fn smoothness(signals: &SignalMatrix, laplacian: &GraphLaplacian) -> Result<f64, GraphError> {
    if signals.n_nodes() != laplacian.n_nodes() {
        return Err(GraphError::DimensionMismatch {
            signal_nodes: signals.n_nodes(),
            graph_nodes: laplacian.n_nodes(),
        });
    }
    let lx = laplacian.matrix().dot(signals.values());
    Ok(signals
        .values()
        .iter()
        .zip(lx.iter())
        .map(|(a, b)| a * b)
        .sum())
}
