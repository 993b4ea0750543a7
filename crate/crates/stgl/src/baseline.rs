//! Reference classifier for onset-zone electrodes built from per-channel
//! horizontal visibility graphs: three windows around the onset are
//! turned into averaged HVG adjacencies, vectorized, reduced with PCA,
//! and classified with balanced logistic regression under a seeded
//! stratified cross-validation.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::analysis::{per_class_metrics, AnalysisError, ClassMetrics};
use crate::hvg::{build_hvg, HvgError};
use crate::logreg::{train, LogRegError};
use crate::pca::{Pca, PcaError};
use crate::signal::{WindowLabel, WindowedRecording};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("window selection: {0}")]
    BadSelection(String),
    #[error("selected windows have lengths {lengths:?}, which must all match")]
    UnequalWindowLengths { lengths: Vec<usize> },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("class {label} has only {count} electrodes; cross-validation needs at least 2 per class")]
    ClassTooSmall { label: bool, count: usize },
    #[error(transparent)]
    Hvg(#[from] HvgError),
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    LogReg(#[from] LogRegError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// One row per electrode, one column per vectorized HVG entry, plus the
/// clinical label of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub labels: Vec<bool>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }
}

/// The canonical three-window choice: the last window before the onset,
/// the onset window itself, and the first window after it.
pub fn default_window_selection(
    labels: &[WindowLabel],
) -> Result<[usize; 3], BaselineError> {
    let last_pre = labels
        .iter()
        .rposition(|l| *l == WindowLabel::PreOnset)
        .ok_or_else(|| BaselineError::BadSelection("no pre-onset window".into()))?;
    let onset = labels
        .iter()
        .position(|l| *l == WindowLabel::Onset)
        .ok_or_else(|| BaselineError::BadSelection("no onset window".into()))?;
    let first_post = labels
        .iter()
        .position(|l| *l == WindowLabel::PostOnset)
        .ok_or_else(|| BaselineError::BadSelection("no post-onset window".into()))?;
    Ok([last_pre, onset, first_post])
}

/// Per electrode: the mean of the three selected windows' HVG adjacency
/// matrices, flattened as the strict upper triangle in row-major order.
/// A window of `k` samples yields `k (k - 1) / 2` features, and every
/// feature is a mean of three binary values.
pub fn hvg_features(
    wr: &WindowedRecording,
    selected: [usize; 3],
) -> Result<FeatureMatrix, BaselineError> {
    for &idx in &selected {
        if idx >= wr.n_windows() {
            return Err(BaselineError::BadSelection(format!(
                "window index {idx} out of range 0..{}",
                wr.n_windows()
            )));
        }
    }
    let lengths: Vec<usize> = selected
        .iter()
        .map(|&idx| wr.windows[idx].n_samples())
        .collect();
    if lengths[1] != lengths[0] || lengths[2] != lengths[0] {
        return Err(BaselineError::UnequalWindowLengths { lengths });
    }
    let k = lengths[0];
    let n_features = k * (k - 1) / 2;
    let n_channels = wr.n_channels();

    let mut values = Array2::<f64>::zeros((n_channels, n_features));
    for channel in 0..n_channels {
        let mut acc = vec![0.0f64; n_features];
        for &idx in &selected {
            let series: Vec<f64> = wr.windows[idx].values().row(channel).to_vec();
            let graph = build_hvg(&series)?;
            for (slot, v) in acc.iter_mut().zip(graph.upper_triangle()) {
                *slot += v;
            }
        }
        for (col, total) in acc.into_iter().enumerate() {
            values[[channel, col]] = total / 3.0;
        }
    }
    Ok(FeatureMatrix {
        values,
        labels: wr.soz.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub n_folds: usize,
    /// Explicit component count; `None` keeps components up to
    /// `variance_target` explained variance (capped at rows − 1).
    pub n_components: Option<usize>,
    pub variance_target: f64,
    pub l2: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            n_folds: 5,
            n_components: None,
            variance_target: 0.95,
            l2: 0.1,
            max_iter: 200,
            seed: 0,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if self.n_folds < 2 {
            return Err(BaselineError::BadConfig(format!(
                "need at least 2 folds, got {}",
                self.n_folds
            )));
        }
        if !(self.variance_target > 0.0 && self.variance_target <= 1.0) {
            return Err(BaselineError::BadConfig(format!(
                "variance target must lie in (0, 1], got {}",
                self.variance_target
            )));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(BaselineError::BadConfig(format!(
                "ridge strength must be a nonnegative real, got {}",
                self.l2
            )));
        }
        if self.max_iter == 0 {
            return Err(BaselineError::BadConfig("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Assigns each row a fold id in `0..n_folds`: rows of each class are
/// shuffled with the seeded generator and dealt round-robin, so fold
/// class counts differ by at most one.
pub fn stratified_folds(labels: &[bool], n_folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    for class in [false, true] {
        let mut rows: Vec<usize> = (0..labels.len())
            .filter(|&i| labels[i] == class)
            .collect();
        rows.shuffle(&mut rng);
        for (k, &row) in rows.iter().enumerate() {
            assignment[row] = k % n_folds;
        }
    }
    assignment
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvPrediction {
    pub row: usize,
    pub fold: usize,
    pub probability: f64,
    pub predicted: bool,
    pub truth: bool,
}

/// Trained-model summary of one fold, for the structured run-log.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldModel {
    pub fold: usize,
    pub n_components: usize,
    pub intercept: f64,
    /// Coefficients in PCA component space.
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct CvReport {
    /// Metrics of each nonempty test fold, in fold order.
    pub fold_metrics: Vec<ClassMetrics>,
    /// Metrics of the confusion matrix pooled over every test fold.
    pub pooled: ClassMetrics,
    /// One out-of-fold prediction per row, sorted by row index.
    pub predictions: Vec<CvPrediction>,
    /// Per-fold trained models, aligned with `fold_metrics`.
    pub fold_models: Vec<FoldModel>,
    pub fold_assignment: Vec<usize>,
}

/// Stratified k-fold cross-validation: per fold, PCA is fitted on the
/// training rows only, a balanced logistic model is trained on the
/// projected features, and the held-out rows are predicted. The pooled
/// confusion matrix over all held-out predictions gives the headline
/// metrics.
pub fn cross_validate(
    features: &FeatureMatrix,
    config: &BaselineConfig,
) -> Result<CvReport, BaselineError> {
    config.validate()?;
    let n = features.n_rows();
    if features.labels.len() != n {
        return Err(BaselineError::BadConfig(format!(
            "{} labels for {} feature rows",
            features.labels.len(),
            n
        )));
    }
    for class in [false, true] {
        let count = features.labels.iter().filter(|&&l| l == class).count();
        if count < 2 {
            return Err(BaselineError::ClassTooSmall {
                label: class,
                count,
            });
        }
    }

    let assignment = stratified_folds(&features.labels, config.n_folds, config.seed);
    let mut predictions: Vec<CvPrediction> = Vec::with_capacity(n);
    let mut fold_metrics = Vec::new();
    let mut fold_models = Vec::new();

    for fold in 0..config.n_folds {
        let test_rows: Vec<usize> = (0..n).filter(|&i| assignment[i] == fold).collect();
        if test_rows.is_empty() {
            continue;
        }
        let train_rows: Vec<usize> = (0..n).filter(|&i| assignment[i] != fold).collect();
        let train = features.values.select(Axis(0), &train_rows);
        let test = features.values.select(Axis(0), &test_rows);
        let train_labels: Vec<bool> = train_rows.iter().map(|&i| features.labels[i]).collect();

        let pca = match config.n_components {
            Some(k) => Pca::fit(&train, k)?,
            None => Pca::fit_fraction(&train, config.variance_target)?,
        };
        let train_proj = pca.transform(&train)?;
        let test_proj = pca.transform(&test)?;

        let model = train_model(&train_proj, &train_labels, config)?;
        fold_models.push(FoldModel {
            fold,
            n_components: pca.n_components(),
            intercept: model.intercept,
            coefficients: model.coefficients.to_vec(),
            converged: model.converged,
            iterations: model.iterations,
        });
        let probs = model.predict_proba(&test_proj)?;

        let mut fold_predicted = Vec::with_capacity(test_rows.len());
        let mut fold_truth = Vec::with_capacity(test_rows.len());
        for (pos, &row) in test_rows.iter().enumerate() {
            let p = probs[pos];
            let predicted = p >= 0.5;
            fold_predicted.push(predicted);
            fold_truth.push(features.labels[row]);
            predictions.push(CvPrediction {
                row,
                fold,
                probability: p,
                predicted,
                truth: features.labels[row],
            });
        }
        fold_metrics.push(per_class_metrics(&fold_predicted, &fold_truth)?);
    }

    predictions.sort_by_key(|p| p.row);
    let predicted: Vec<bool> = predictions.iter().map(|p| p.predicted).collect();
    let truth: Vec<bool> = predictions.iter().map(|p| p.truth).collect();
    let pooled = per_class_metrics(&predicted, &truth)?;
    Ok(CvReport {
        fold_metrics,
        pooled,
        predictions,
        fold_models,
        fold_assignment: assignment,
    })
}

fn train_model(
    features: &Array2<f64>,
    labels: &[bool],
    config: &BaselineConfig,
) -> Result<crate::logreg::LogRegModel, BaselineError> {
    Ok(train(features, labels, config.l2, config.max_iter)?)
}
