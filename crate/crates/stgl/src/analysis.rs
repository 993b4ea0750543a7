//! Evaluation of learned graphs against clinical-style labels: electrode
//! scoring and top-k classification, per-class accuracy, per-window
//! label dominance, temporal regime contrast, pre/post mean-graph
//! contrast, and paired cross-method comparison.

use ndarray::Array2;
use thiserror::Error;

use crate::graph::{edge_pairs, GraphLaplacian};
use crate::signal::WindowLabel;
use crate::stats::{wilcoxon_signed_rank, StatsError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("no onset or post-onset windows to score")]
    NoScoringWindows,
    #[error("k = {k} out of range 1..={n}")]
    BadK { k: usize, n: usize },
    #[error("empty group: {0}")]
    EmptyGroup(&'static str),
    #[error("need at least {need} paired recordings, got {got}")]
    TooFewPairs { got: usize, need: usize },
    #[error("{0}")]
    BadParameter(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// How a channel's connectivity is aggregated within one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreMode {
    /// Count of incident edges whose weight clears a small threshold
    /// relative to the window's mean edge weight.
    Degree,
    /// Sum of incident edge weights (the Laplacian diagonal).
    #[default]
    WeightedDegree,
}

impl std::str::FromStr for ScoreMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "degree" => Ok(ScoreMode::Degree),
            "weighted-degree" => Ok(ScoreMode::WeightedDegree),
            other => Err(format!(
                "unknown score mode '{other}' (expected 'degree' or 'weighted-degree')"
            )),
        }
    }
}

impl std::fmt::Display for ScoreMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScoreMode::Degree => "degree",
            ScoreMode::WeightedDegree => "weighted-degree",
        })
    }
}

/// Edge-presence threshold for [`ScoreMode::Degree`], relative to the
/// mean edge weight of the window's graph.
pub const EDGE_PRESENCE_RELATIVE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeScore {
    pub channel: String,
    pub score: f64,
    pub predicted_soz: bool,
    pub true_soz: bool,
}

/// Scores every electrode as its mean connectivity over the onset and
/// post-onset windows, returned sorted by descending score with
/// channel-name order breaking ties deterministically. Predictions start
/// out all-false; see [`classify_topk`].
pub fn score_electrodes(
    spatial: &[GraphLaplacian],
    labels: &[WindowLabel],
    channel_names: &[String],
    true_soz: &[bool],
    mode: ScoreMode,
) -> Result<Vec<ElectrodeScore>, AnalysisError> {
    if spatial.len() != labels.len() {
        return Err(AnalysisError::LengthMismatch {
            what: "window label list",
            got: labels.len(),
            expected: spatial.len(),
        });
    }
    let n = channel_names.len();
    for lap in spatial {
        if lap.n_nodes() != n {
            return Err(AnalysisError::LengthMismatch {
                what: "spatial graph",
                got: lap.n_nodes(),
                expected: n,
            });
        }
    }
    if true_soz.len() != n {
        return Err(AnalysisError::LengthMismatch {
            what: "ground-truth label list",
            got: true_soz.len(),
            expected: n,
        });
    }

    let scoring: Vec<&GraphLaplacian> = spatial
        .iter()
        .zip(labels)
        .filter(|(_, l)| matches!(l, WindowLabel::Onset | WindowLabel::PostOnset))
        .map(|(g, _)| g)
        .collect();
    if scoring.is_empty() {
        return Err(AnalysisError::NoScoringWindows);
    }

    let mut totals = vec![0.0f64; n];
    for lap in &scoring {
        match mode {
            ScoreMode::WeightedDegree => {
                for (node, d) in lap.degrees().iter().enumerate() {
                    totals[node] += d;
                }
            }
            ScoreMode::Degree => {
                let weights = lap.edge_weights();
                let mean = weights.sum() / weights.len().max(1) as f64;
                let threshold = EDGE_PRESENCE_RELATIVE * mean;
                for ((i, j), &w) in edge_pairs(n).zip(weights.weights()) {
                    if w > threshold {
                        totals[i] += 1.0;
                        totals[j] += 1.0;
                    }
                }
            }
        }
    }

    let k = scoring.len() as f64;
    let mut scores: Vec<ElectrodeScore> = (0..n)
        .map(|node| ElectrodeScore {
            channel: channel_names[node].clone(),
            score: totals[node] / k,
            predicted_soz: false,
            true_soz: true_soz[node],
        })
        .collect();
    sort_scores(&mut scores);
    Ok(scores)
}

/// Descending score, channel name as the deterministic tie-break.
fn sort_scores(scores: &mut [ElectrodeScore]) {
    scores.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("scores are finite")
            .then_with(|| a.channel.cmp(&b.channel))
    });
}

/// Marks exactly the first `k` entries of the ranking as predicted
/// positives. `k` defaults upstream to the clinically labeled positive
/// count, which makes class-1 accuracy a recall-like overlap.
pub fn classify_topk(
    scores: &[ElectrodeScore],
    k: usize,
) -> Result<Vec<ElectrodeScore>, AnalysisError> {
    if k == 0 || k > scores.len() {
        return Err(AnalysisError::BadK {
            k,
            n: scores.len(),
        });
    }
    let mut out = scores.to_vec();
    sort_scores(&mut out);
    for (rank, s) in out.iter_mut().enumerate() {
        s.predicted_soz = rank < k;
    }
    Ok(out)
}

/// Accuracy per class plus their support-weighted total, satisfying
/// `total = (n0 * acc0 + n1 * acc1) / (n0 + n1)`. A class with no support
/// is vacuously perfect.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub class0_accuracy: f64,
    pub class1_accuracy: f64,
    pub total_accuracy: f64,
    pub support0: usize,
    pub support1: usize,
}

pub fn per_class_metrics(
    predicted: &[bool],
    truth: &[bool],
) -> Result<ClassMetrics, AnalysisError> {
    if predicted.len() != truth.len() {
        return Err(AnalysisError::LengthMismatch {
            what: "prediction list",
            got: predicted.len(),
            expected: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(AnalysisError::EmptyGroup("no samples to evaluate"));
    }
    let mut tp = 0usize;
    let mut tn = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
    }
    let support1 = tp + fn_;
    let support0 = tn + fp;
    let class1_accuracy = if support1 > 0 {
        tp as f64 / support1 as f64
    } else {
        1.0
    };
    let class0_accuracy = if support0 > 0 {
        tn as f64 / support0 as f64
    } else {
        1.0
    };
    let total_accuracy = (tp + tn) as f64 / (support0 + support1) as f64;
    Ok(ClassMetrics {
        class0_accuracy,
        class1_accuracy,
        total_accuracy,
        support0,
        support1,
    })
}

/// Which denominator the dominance ratios use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DominanceNormalization {
    /// Fraction of each label group found in the top set (default).
    #[default]
    GroupSize,
    /// Fraction of the top set belonging to each label group.
    TopSize,
}

/// Per-window label dominance: rank electrodes by weighted degree inside
/// each window, take the strongest `top_fraction` of them, and report how
/// strongly each label group is represented — one `(soz, non_soz)` ratio
/// pair per window (bar-plot data).
pub fn window_dominance(
    spatial: &[GraphLaplacian],
    channel_names: &[String],
    soz: &[bool],
    top_fraction: f64,
    normalization: DominanceNormalization,
) -> Result<Vec<(f64, f64)>, AnalysisError> {
    let n = channel_names.len();
    if soz.len() != n {
        return Err(AnalysisError::LengthMismatch {
            what: "onset-zone mask",
            got: soz.len(),
            expected: n,
        });
    }
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(AnalysisError::BadParameter(format!(
            "top fraction must lie in (0, 1], got {top_fraction}"
        )));
    }
    let top_count = ((top_fraction * n as f64).floor() as usize).min(n);
    if top_count == 0 {
        return Err(AnalysisError::EmptyGroup(
            "top fraction selects zero electrodes",
        ));
    }
    let n_soz = soz.iter().filter(|&&s| s).count();
    let n_non = n - n_soz;

    let mut out = Vec::with_capacity(spatial.len());
    for lap in spatial {
        if lap.n_nodes() != n {
            return Err(AnalysisError::LengthMismatch {
                what: "spatial graph",
                got: lap.n_nodes(),
                expected: n,
            });
        }
        let degrees = lap.degrees();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            degrees[b]
                .partial_cmp(&degrees[a])
                .expect("finite degrees")
                .then_with(|| channel_names[a].cmp(&channel_names[b]))
        });
        let top = &order[..top_count];
        let soz_hits = top.iter().filter(|&&node| soz[node]).count();
        let non_hits = top_count - soz_hits;
        let pair = match normalization {
            DominanceNormalization::GroupSize => (
                if n_soz > 0 {
                    soz_hits as f64 / n_soz as f64
                } else {
                    0.0
                },
                if n_non > 0 {
                    non_hits as f64 / n_non as f64
                } else {
                    0.0
                },
            ),
            DominanceNormalization::TopSize => (
                soz_hits as f64 / top_count as f64,
                non_hits as f64 / top_count as f64,
            ),
        };
        out.push(pair);
    }
    Ok(out)
}

/// Mean temporal edge weight inside the onset+post group vs between that
/// group and the pre-onset group. A temporal graph that links windows of
/// the seizure regime more strongly than it links across the onset
/// boundary yields `within > across`.
pub fn regime_contrast(
    temporal: &GraphLaplacian,
    labels: &[WindowLabel],
) -> Result<(f64, f64), AnalysisError> {
    let m = temporal.n_nodes();
    if labels.len() != m {
        return Err(AnalysisError::LengthMismatch {
            what: "window label list",
            got: labels.len(),
            expected: m,
        });
    }
    if m < 3 {
        return Err(AnalysisError::BadParameter(format!(
            "need at least 3 windows for a contrast, got {m}"
        )));
    }
    let in_group: Vec<bool> = labels
        .iter()
        .map(|l| matches!(l, WindowLabel::Onset | WindowLabel::PostOnset))
        .collect();
    let n_in = in_group.iter().filter(|&&g| g).count();
    if n_in == 0 {
        return Err(AnalysisError::EmptyGroup("no onset/post-onset windows"));
    }
    if n_in == m {
        return Err(AnalysisError::EmptyGroup("no pre-onset windows"));
    }

    let weights = temporal.edge_weights();
    let mut within_sum = 0.0;
    let mut within_count = 0usize;
    let mut across_sum = 0.0;
    let mut across_count = 0usize;
    for ((i, j), &w) in edge_pairs(m).zip(weights.weights()) {
        match (in_group[i], in_group[j]) {
            (true, true) => {
                within_sum += w;
                within_count += 1;
            }
            (true, false) | (false, true) => {
                across_sum += w;
                across_count += 1;
            }
            (false, false) => {}
        }
    }
    let within_mean = if within_count > 0 {
        within_sum / within_count as f64
    } else {
        0.0
    };
    let across_mean = if across_count > 0 {
        across_sum / across_count as f64
    } else {
        0.0
    };
    Ok((within_mean, across_mean))
}

/// Entrywise means of the pre-onset and post-onset spatial graphs (the
/// onset window belongs to neither average) and their difference
/// `post - pre`. Valid Laplacians form a convex set, so both means are
/// valid graphs again.
#[derive(Debug, Clone)]
pub struct MeanGraphContrast {
    pub pre_mean: GraphLaplacian,
    pub post_mean: GraphLaplacian,
    pub difference: Array2<f64>,
}

pub fn mean_graph_contrast(
    spatial: &[GraphLaplacian],
    labels: &[WindowLabel],
) -> Result<MeanGraphContrast, AnalysisError> {
    if spatial.len() != labels.len() {
        return Err(AnalysisError::LengthMismatch {
            what: "window label list",
            got: labels.len(),
            expected: spatial.len(),
        });
    }
    let mean_of = |want: WindowLabel| -> Option<Array2<f64>> {
        let group: Vec<&GraphLaplacian> = spatial
            .iter()
            .zip(labels)
            .filter(|(_, l)| **l == want)
            .map(|(g, _)| g)
            .collect();
        let first = group.first()?;
        let mut acc = Array2::<f64>::zeros(first.matrix().dim());
        for g in &group {
            acc += g.matrix();
        }
        Some(acc / group.len() as f64)
    };
    let pre = mean_of(WindowLabel::PreOnset)
        .ok_or(AnalysisError::EmptyGroup("no pre-onset windows"))?;
    let post = mean_of(WindowLabel::PostOnset)
        .ok_or(AnalysisError::EmptyGroup("no post-onset windows"))?;
    let difference = &post - &pre;
    let pre_mean = GraphLaplacian::from_matrix(pre)
        .expect("a mean of valid Laplacians is a valid Laplacian");
    let post_mean = GraphLaplacian::from_matrix(post)
        .expect("a mean of valid Laplacians is a valid Laplacian");
    Ok(MeanGraphContrast {
        pre_mean,
        post_mean,
        difference,
    })
}

/// Paired two-sided Wilcoxon comparison of per-recording accuracies
/// between two methods, one p-value per metric column.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodComparison {
    pub n_pairs: usize,
    pub p_class0: f64,
    pub p_class1: f64,
    pub p_total: f64,
}

pub const MIN_COMPARISON_PAIRS: usize = 5;

pub fn compare_methods(
    a: &[ClassMetrics],
    b: &[ClassMetrics],
) -> Result<MethodComparison, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch {
            what: "second method's metrics",
            got: b.len(),
            expected: a.len(),
        });
    }
    if a.len() < MIN_COMPARISON_PAIRS {
        return Err(AnalysisError::TooFewPairs {
            got: a.len(),
            need: MIN_COMPARISON_PAIRS,
        });
    }
    let column = |pick: fn(&ClassMetrics) -> f64, xs: &[ClassMetrics]| -> Vec<f64> {
        xs.iter().map(pick).collect()
    };
    let p = |pick: fn(&ClassMetrics) -> f64| -> Result<f64, AnalysisError> {
        Ok(wilcoxon_signed_rank(&column(pick, a), &column(pick, b))?.p_value)
    };
    Ok(MethodComparison {
        n_pairs: a.len(),
        p_class0: p(|m| m.class0_accuracy)?,
        p_class1: p(|m| m.class1_accuracy)?,
        p_total: p(|m| m.total_accuracy)?,
    })
}
