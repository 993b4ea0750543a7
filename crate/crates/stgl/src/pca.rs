//! Principal component analysis by projected power iteration.
//!
//! The feature spaces here are wide (a 128-sample window yields 8128
//! visibility features), so the covariance matrix is never materialized:
//! the operator `v -> Xc' (Xc v) / (rows - 1)` is applied directly to the
//! centered data `Xc`, and components after the first are kept orthogonal
//! to the ones already found by re-orthogonalizing every iterate
//! (deflation). Component signs are fixed by making each component's
//! largest-magnitude loading positive, so results are reproducible.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PcaError {
    #[error("need at least 2 rows to estimate a covariance, got {0}")]
    TooFewRows(usize),
    #[error("requested {requested} components but at most {max} are identifiable")]
    TooManyComponents { requested: usize, max: usize },
    #[error("input has zero variance; nothing to decompose")]
    ZeroVariance,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("projection dimension mismatch: data has {got} features, model has {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

/// A fitted decomposition: row `k` of `components` is the k-th principal
/// direction (unit length, mutually orthogonal).
#[derive(Debug, Clone)]
pub struct Pca {
    mean: Array1<f64>,
    components: Array2<f64>,
    explained_variance: Vec<f64>,
    total_variance: f64,
}

const POWER_MAX_ITER: usize = 1000;
const POWER_REL_TOL: f64 = 1e-12;

impl Pca {
    /// Fits `n_components` directions; at most `min(rows - 1, cols)` are
    /// identifiable (centering removes one rank).
    pub fn fit(data: &Array2<f64>, n_components: usize) -> Result<Self, PcaError> {
        let (rows, cols) = data.dim();
        if rows < 2 {
            return Err(PcaError::TooFewRows(rows));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(PcaError::NonFinite);
        }
        let max = (rows - 1).min(cols);
        if n_components == 0 || n_components > max {
            return Err(PcaError::TooManyComponents {
                requested: n_components,
                max,
            });
        }

        let mean = data.mean_axis(ndarray::Axis(0)).expect("rows >= 2");
        let centered = data - &mean.view().insert_axis(ndarray::Axis(0));
        let denom = (rows - 1) as f64;
        let total_variance = centered.iter().map(|v| v * v).sum::<f64>() / denom;
        if total_variance <= 1e-300 {
            return Err(PcaError::ZeroVariance);
        }

        let mut components = Array2::<f64>::zeros((n_components, cols));
        let mut explained_variance = Vec::with_capacity(n_components);
        for k in 0..n_components {
            let found = dominant_direction(&centered, denom, &components, k);
            let (direction, variance) = found;
            components.row_mut(k).assign(&direction);
            explained_variance.push(variance);
        }

        // Orient each component so its largest-magnitude loading is
        // positive.
        for mut row in components.rows_mut() {
            let mut best = 0usize;
            for (idx, v) in row.iter().enumerate() {
                if v.abs() > row[best].abs() {
                    best = idx;
                }
            }
            if row[best] < 0.0 {
                row.mapv_inplace(|v| -v);
            }
        }

        Ok(Self {
            mean,
            components,
            explained_variance,
            total_variance,
        })
    }

    /// Fits however many components are needed to explain at least
    /// `variance_target` of the total variance (a fraction in (0, 1]),
    /// up to the identifiable maximum.
    pub fn fit_fraction(data: &Array2<f64>, variance_target: f64) -> Result<Self, PcaError> {
        let (rows, cols) = data.dim();
        if rows < 2 {
            return Err(PcaError::TooFewRows(rows));
        }
        let max = (rows - 1).min(cols);
        let full = Self::fit(data, max)?;
        let target = variance_target.clamp(0.0, 1.0) * full.total_variance;
        let mut cumulative = 0.0;
        let mut keep = max;
        for (k, &v) in full.explained_variance.iter().enumerate() {
            cumulative += v;
            if cumulative >= target - 1e-12 * full.total_variance {
                keep = k + 1;
                break;
            }
        }
        Ok(Self {
            mean: full.mean,
            components: full.components.slice(ndarray::s![..keep, ..]).to_owned(),
            explained_variance: full.explained_variance[..keep].to_vec(),
            total_variance: full.total_variance,
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variance
            .iter()
            .map(|v| v / self.total_variance)
            .collect()
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    /// Projects rows of `data` onto the fitted directions.
    pub fn transform(&self, data: &Array2<f64>) -> Result<Array2<f64>, PcaError> {
        if data.ncols() != self.mean.len() {
            return Err(PcaError::DimensionMismatch {
                got: data.ncols(),
                expected: self.mean.len(),
            });
        }
        let centered = data - &self.mean.view().insert_axis(ndarray::Axis(0));
        Ok(centered.dot(&self.components.t()))
    }

    /// Maps projected rows back to feature space (exact when all
    /// identifiable components were kept).
    pub fn inverse_transform(&self, projected: &Array2<f64>) -> Result<Array2<f64>, PcaError> {
        if projected.ncols() != self.n_components() {
            return Err(PcaError::DimensionMismatch {
                got: projected.ncols(),
                expected: self.n_components(),
            });
        }
        Ok(projected.dot(&self.components) + &self.mean.view().insert_axis(ndarray::Axis(0)))
    }
}

/// Power iteration for the next principal direction, kept orthogonal to
/// the `k` rows of `previous` already found. Returns the unit direction
/// and its variance (Rayleigh quotient). If the residual operator has
/// vanished (data rank exhausted), an arbitrary orthogonal unit vector
/// with zero variance is returned so requested counts are always honored.
fn dominant_direction(
    centered: &Array2<f64>,
    denom: f64,
    previous: &Array2<f64>,
    k: usize,
) -> (Array1<f64>, f64) {
    let cols = centered.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9c0a_11ed ^ (k as u64));
    let mut v = Array1::from_shape_fn(cols, |_| rng.gen::<f64>() - 0.5);
    orthogonalize(&mut v, previous, k);
    if normalize(&mut v) == 0.0 {
        let mut fallback = Array1::zeros(cols);
        fallback[k % cols] = 1.0;
        orthogonalize(&mut fallback, previous, k);
        normalize(&mut fallback);
        return (fallback, 0.0);
    }

    let mut eigenvalue = 0.0;
    for _ in 0..POWER_MAX_ITER {
        // w = Xc' (Xc v) / denom, deflated onto the orthogonal complement
        // of the found components.
        let xv = centered.dot(&v);
        let mut w = centered.t().dot(&xv) / denom;
        orthogonalize(&mut w, previous, k);
        let norm = normalize(&mut w);
        if norm <= 1e-300 {
            // Nothing left in this subspace: keep the current unit vector
            // with zero variance.
            return (v, 0.0);
        }
        let next_eigenvalue = norm; // ||C v|| at unit v after deflation.
        let aligned = v.dot(&w).abs();
        v = w;
        let rel = (next_eigenvalue - eigenvalue).abs() / next_eigenvalue.max(1e-300);
        eigenvalue = next_eigenvalue;
        if rel <= POWER_REL_TOL && 1.0 - aligned <= POWER_REL_TOL {
            break;
        }
    }
    // Rayleigh quotient at the fixed point.
    let xv = centered.dot(&v);
    let variance = xv.dot(&xv) / denom;
    (v, variance)
}

fn orthogonalize(v: &mut Array1<f64>, previous: &Array2<f64>, k: usize) {
    for _ in 0..2 {
        for row in previous.rows().into_iter().take(k) {
            let proj = v.dot(&row);
            v.zip_mut_with(&row.to_owned(), |a, b| *a -= proj * b);
        }
    }
}

fn normalize(v: &mut Array1<f64>) -> f64 {
    let norm = v.dot(v).sqrt();
    if norm > 1e-300 {
        v.mapv_inplace(|x| x / norm);
    }
    norm
}
