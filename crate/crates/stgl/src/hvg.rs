//! Horizontal visibility graphs.
//!
//! Two samples `i < j` of a series are horizontally visible iff every
//! sample strictly between them lies strictly below `min(x[i], x[j])`;
//! equal heights block the line of sight. The graph over sample indices
//! with those visibility edges depends only on the ordering of values,
//! not their magnitudes, which makes it a scale-free summary of local
//! time-series shape.

use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HvgError {
    #[error("series must have at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

/// Undirected horizontal visibility graph on `n` time samples. Adjacent
/// samples always see each other, so the path `0-1-...-(n-1)` is a
/// subgraph.
#[derive(Debug, Clone, PartialEq)]
pub struct HvgGraph {
    n: usize,
    adjacency: Array2<f64>,
}

impl HvgGraph {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Binary symmetric adjacency with a zero diagonal.
    pub fn adjacency(&self) -> &Array2<f64> {
        &self.adjacency
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[[i, j] ] != 0.0
    }

    pub fn n_edges(&self) -> usize {
        (self.adjacency.sum() / 2.0).round() as usize
    }

    /// Strict upper triangle flattened row-major:
    /// (0,1), (0,2), ..., (0,n-1), (1,2), ...
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                out.push(self.adjacency[[i, j]]);
            }
        }
        out
    }
}

/// Builds the exact horizontal visibility graph in linear time with a
/// monotone stack.
///
/// Scanning left to right, the stack holds the indices still visible from
/// the right, which always carry strictly decreasing values from bottom
/// to top: anything at or below a later sample's height gets popped when
/// that sample arrives. For a new sample `t`, every popped top `j` (with
/// `x[j] < x[t]`) sees `t` — the previously popped samples between them
/// are all strictly shorter than `x[j]` by the stack's ordering. The
/// first top at height `>= x[t]` also sees `t` and ends the scan; when
/// its height ties `x[t]` exactly it is popped too, because nothing can
/// see past `t` to an equal-height predecessor (ties block, and any
/// taller later endpoint needs intermediates strictly below `x[t]`).
pub fn build_hvg(series: &[f64]) -> Result<HvgGraph, HvgError> {
    let n = series.len();
    if n < 2 {
        return Err(HvgError::TooShort(n));
    }
    if let Some(bad) = series.iter().position(|v| !v.is_finite()) {
        return Err(HvgError::NonFinite(bad));
    }

    let mut adjacency = Array2::<f64>::zeros((n, n));
    let mut connect = |i: usize, j: usize| {
        adjacency[[i, j]] = 1.0;
        adjacency[[j, i]] = 1.0;
    };

    let mut stack: Vec<usize> = Vec::with_capacity(n);
    for t in 0..n {
        while let Some(&j) = stack.last() {
            connect(j, t);
            if series[j] < series[t] {
                stack.pop();
            } else {
                if series[j] == series[t] {
                    stack.pop();
                }
                break;
            }
        }
        stack.push(t);
    }

    Ok(HvgGraph { n, adjacency })
}

/// Quadratic-time reference: tests every pair against the definition
/// directly. Used as the correctness oracle for [`build_hvg`].
pub fn build_hvg_brute_force(series: &[f64]) -> Result<HvgGraph, HvgError> {
    let n = series.len();
    if n < 2 {
        return Err(HvgError::TooShort(n));
    }
    if let Some(bad) = series.iter().position(|v| !v.is_finite()) {
        return Err(HvgError::NonFinite(bad));
    }
    let mut adjacency = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let sill = series[i].min(series[j]);
            if (i + 1..j).all(|k| series[k] < sill) {
                adjacency[[i, j]] = 1.0;
                adjacency[[j, i]] = 1.0;
            }
        }
    }
    Ok(HvgGraph { n, adjacency })
}
