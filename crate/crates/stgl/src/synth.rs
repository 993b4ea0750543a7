//! Synthetic recordings with known ground truth.
//!
//! Each temporal regime owns a spatial graph; every window in the regime
//! draws its samples as zero-mean Gaussians with covariance
//! `(L + RIDGE * I)^-1`, so the samples are smooth on exactly that graph,
//! plus isotropic noise. A planted community can boost the edges inside a
//! node subset during chosen regimes — those nodes are the ground-truth
//! seizure-onset set a learner should recover. Generation is a single
//! seeded stream: equal specs yield bit-identical outputs, and parallel
//! trials should derive their seeds as `seed + trial_index`.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::graph::{edge_index, edge_pairs, EdgeWeightVector, GraphError, GraphLaplacian};
use crate::linalg::{cholesky, solve_lower_transpose};
use crate::signal::{Recording, SignalError, WindowLabel, WindowedRecording};

/// Ridge added to the Laplacian to make the precision matrix invertible
/// (the constant vector is in every Laplacian's null space).
pub const RIDGE: f64 = 1e-2;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("bad generator settings: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// A run of consecutive windows sharing one spatial graph.
#[derive(Debug, Clone)]
pub struct Regime {
    /// Half-open window range, e.g. `0..3`.
    pub windows: std::ops::Range<usize>,
    /// Trace-feasible ground-truth weights for those windows.
    pub weights: EdgeWeightVector,
}

/// Node subset whose internal edges are multiplied by `boost` (total
/// weight then renormalized) in the listed regimes.
#[derive(Debug, Clone)]
pub struct PlantedCommunity {
    pub nodes: Vec<usize>,
    pub boost: f64,
    pub active_regimes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub n_nodes: usize,
    pub m_windows: usize,
    pub samples_per_window: usize,
    pub sample_rate: f64,
    pub regimes: Vec<Regime>,
    pub planted: Option<PlantedCommunity>,
    pub noise_std: f64,
    pub seed: u64,
}

/// Everything a recovery experiment needs: the windowed signals, the same
/// samples as one continuous recording (windows abut; the onset window's
/// first sample is the recording onset), the per-window ground-truth
/// graphs, and the planted-node mask.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub windowed: WindowedRecording,
    pub recording: Recording,
    /// Effective (post-boost) graph of each regime.
    pub regime_graphs: Vec<GraphLaplacian>,
    /// Regime index of each window.
    pub window_regimes: Vec<usize>,
    pub soz_mask: Vec<bool>,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_nodes < 2 {
            return Err(SynthError::BadSpec(format!(
                "need at least 2 nodes, got {}",
                self.n_nodes
            )));
        }
        if self.m_windows == 0 {
            return Err(SynthError::BadSpec("need at least 1 window".into()));
        }
        if self.samples_per_window < 2 {
            return Err(SynthError::BadSpec(format!(
                "need at least 2 samples per window, got {}",
                self.samples_per_window
            )));
        }
        if !self.sample_rate.is_finite() || self.sample_rate <= 0.0 {
            return Err(SynthError::BadSpec(format!(
                "sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(SynthError::BadSpec(format!(
                "noise level must be nonnegative, got {}",
                self.noise_std
            )));
        }
        if self.regimes.is_empty() {
            return Err(SynthError::BadSpec("need at least one regime".into()));
        }
        let mut next = 0usize;
        for (idx, regime) in self.regimes.iter().enumerate() {
            if regime.windows.start != next {
                return Err(SynthError::BadSpec(format!(
                    "regime {idx} starts at window {} but the previous regime ended at {next}; \
                     ranges must partition the windows",
                    regime.windows.start
                )));
            }
            if regime.windows.end <= regime.windows.start {
                return Err(SynthError::BadSpec(format!("regime {idx} is empty")));
            }
            if regime.weights.n_nodes() != self.n_nodes {
                return Err(SynthError::BadSpec(format!(
                    "regime {idx} graph has {} nodes, spec has {}",
                    regime.weights.n_nodes(),
                    self.n_nodes
                )));
            }
            if !regime.weights.is_trace_feasible() {
                return Err(SynthError::BadSpec(format!(
                    "regime {idx} weights are not trace-feasible (sum {} != {}/2)",
                    regime.weights.sum(),
                    self.n_nodes
                )));
            }
            next = regime.windows.end;
        }
        if next != self.m_windows {
            return Err(SynthError::BadSpec(format!(
                "regimes cover windows 0..{next} but m_windows is {}",
                self.m_windows
            )));
        }
        if let Some(planted) = &self.planted {
            if planted.boost < 1.0 || !planted.boost.is_finite() {
                return Err(SynthError::BadSpec(format!(
                    "boost factor must be at least 1, got {}",
                    planted.boost
                )));
            }
            if planted.nodes.len() < 2 {
                return Err(SynthError::BadSpec(
                    "planted community needs at least 2 nodes to share an edge".into(),
                ));
            }
            let mut seen = std::collections::HashSet::new();
            for &node in &planted.nodes {
                if node >= self.n_nodes {
                    return Err(SynthError::BadSpec(format!(
                        "planted node {node} out of range 0..{}",
                        self.n_nodes
                    )));
                }
                if !seen.insert(node) {
                    return Err(SynthError::BadSpec(format!("planted node {node} repeated")));
                }
            }
            for &r in &planted.active_regimes {
                if r >= self.regimes.len() {
                    return Err(SynthError::BadSpec(format!(
                        "active regime {r} out of range 0..{}",
                        self.regimes.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Ring graph weights: edges `(i, i+1)` plus the closing edge, each
/// carrying `n / (2 * n_edges)` so the result is trace-feasible.
pub fn ring_weights(n_nodes: usize) -> EdgeWeightVector {
    let m = crate::graph::edge_count(n_nodes);
    let mut w = vec![0.0; m];
    let per_edge = 0.5; // n edges summing to n/2
    for i in 0..n_nodes - 1 {
        w[edge_index(n_nodes, i, i + 1)] = per_edge;
    }
    w[edge_index(n_nodes, 0, n_nodes - 1)] = per_edge;
    EdgeWeightVector::new(n_nodes, w).expect("ring weights are valid")
}

/// Deterministic choice of planted community members, decoupled from the
/// sampling stream so the same seed plants the same nodes regardless of
/// other spec parameters.
pub fn sample_planted_nodes(n_nodes: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    rand::seq::index::sample(&mut rng, n_nodes, count.min(n_nodes)).into_vec()
}

/// The stock two-regime experiment: 10 nodes, 13 windows of 128 samples
/// at 250 Hz; three pre-onset windows on a ring graph, then onset plus
/// nine post-onset windows on a uniform graph with a 3-node community
/// (chosen from the seed) boosted 3x. Noise level 0.1.
pub fn default_two_regime(seed: u64) -> SynthSpec {
    let n = 10;
    let nodes = sample_planted_nodes(n, 3, seed);
    SynthSpec {
        n_nodes: n,
        m_windows: 13,
        samples_per_window: 128,
        sample_rate: 250.0,
        regimes: vec![
            Regime {
                windows: 0..3,
                weights: ring_weights(n),
            },
            Regime {
                windows: 3..13,
                weights: EdgeWeightVector::uniform(n),
            },
        ],
        planted: Some(PlantedCommunity {
            nodes,
            boost: 3.0,
            active_regimes: vec![1],
        }),
        noise_std: 0.1,
        seed,
    }
}

/// Applies the community boost to one regime's weights and renormalizes
/// back to the trace-feasible total.
fn effective_weights(
    base: &EdgeWeightVector,
    planted: Option<&PlantedCommunity>,
    regime_index: usize,
) -> EdgeWeightVector {
    let n = base.n_nodes();
    let Some(p) = planted else {
        return base.clone();
    };
    if !p.active_regimes.contains(&regime_index) || p.boost == 1.0 {
        return base.clone();
    }
    let member = |node: usize| p.nodes.contains(&node);
    let mut w: Vec<f64> = base.weights().to_vec();
    for (e, (i, j)) in edge_pairs(n).enumerate() {
        if member(i) && member(j) {
            w[e] *= p.boost;
        }
    }
    let total: f64 = w.iter().sum();
    let target = n as f64 / 2.0;
    if total > 0.0 {
        let scale = target / total;
        for v in &mut w {
            *v *= scale;
        }
    }
    EdgeWeightVector::new(n, w).expect("boosted weights stay valid")
}

/// Samples one column with covariance `(L + RIDGE I)^-1` from the
/// regime's Cholesky factor: `x = C^-T z` for standard normal `z`.
fn gmrf_column(chol_lower: &Array2<f64>, rng: &mut ChaCha8Rng) -> Array1<f64> {
    let n = chol_lower.nrows();
    let z = Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
    solve_lower_transpose(chol_lower, &z)
}

/// Window labels: with several regimes the first window of regime 1 is
/// the onset; with one regime the onset sits a quarter of the way in.
/// Either rule yields the canonical 3 pre / 1 onset / 9 post split at
/// M = 13.
fn window_labels(m_windows: usize, regime_starts: &[usize]) -> Vec<WindowLabel> {
    let onset = if regime_starts.len() >= 2 {
        regime_starts[1]
    } else {
        m_windows / 4
    };
    let onset = onset.min(m_windows - 1);
    (0..m_windows)
        .map(|w| match w.cmp(&onset) {
            std::cmp::Ordering::Less => WindowLabel::PreOnset,
            std::cmp::Ordering::Equal => WindowLabel::Onset,
            std::cmp::Ordering::Greater => WindowLabel::PostOnset,
        })
        .collect()
}

pub fn generate(spec: &SynthSpec) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let n = spec.n_nodes;
    let k = spec.samples_per_window;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Effective graph and Cholesky factor of L + RIDGE I per regime.
    let mut regime_graphs = Vec::with_capacity(spec.regimes.len());
    let mut factors = Vec::with_capacity(spec.regimes.len());
    for (idx, regime) in spec.regimes.iter().enumerate() {
        let weights = effective_weights(&regime.weights, spec.planted.as_ref(), idx);
        let lap = weights.to_laplacian();
        let mut precision = lap.matrix().clone();
        for d in 0..n {
            precision[[d, d]] += RIDGE;
        }
        let factor = cholesky(&precision).ok_or_else(|| {
            SynthError::BadSpec(format!("regime {idx} precision is not positive definite"))
        })?;
        regime_graphs.push(lap);
        factors.push(factor);
    }

    let mut window_regimes = vec![0usize; spec.m_windows];
    for (idx, regime) in spec.regimes.iter().enumerate() {
        for w in regime.windows.clone() {
            window_regimes[w] = idx;
        }
    }

    // One continuous channels-by-samples matrix; windows abut.
    let mut samples = Array2::<f64>::zeros((n, spec.m_windows * k));
    for (w, &regime) in window_regimes.iter().enumerate() {
        for col in 0..k {
            let mut x = gmrf_column(&factors[regime], &mut rng);
            if spec.noise_std > 0.0 {
                for v in x.iter_mut() {
                    *v += spec.noise_std * rng.sample::<f64, _>(StandardNormal);
                }
            }
            for node in 0..n {
                samples[[node, w * k + col]] = x[node];
            }
        }
    }

    let soz_mask: Vec<bool> = match &spec.planted {
        Some(p) => (0..n).map(|node| p.nodes.contains(&node)).collect(),
        None => vec![false; n],
    };
    let regime_starts: Vec<usize> = spec.regimes.iter().map(|r| r.windows.start).collect();
    let labels = window_labels(spec.m_windows, &regime_starts);
    let onset_window = labels
        .iter()
        .position(|l| *l == WindowLabel::Onset)
        .expect("every labeling contains an onset");

    let channel_names: Vec<String> = (0..n).map(|node| format!("c{node:04}")).collect();
    let recording = Recording::new(
        channel_names.clone(),
        spec.sample_rate,
        samples.clone(),
        onset_window * k,
        soz_mask.clone(),
        Vec::new(),
    )?;

    let windows: Vec<crate::graph::SignalMatrix> = (0..spec.m_windows)
        .map(|w| {
            crate::graph::SignalMatrix::new(
                samples.slice(ndarray::s![.., w * k..(w + 1) * k]).to_owned(),
            )
            .expect("gaussian samples are finite")
        })
        .collect();
    let windowed = WindowedRecording {
        windows,
        labels,
        window_starts: (0..spec.m_windows).map(|w| w * k).collect(),
        window_length_ms: k as f64 / spec.sample_rate * 1000.0,
        overlap_fraction: 0.0,
        channel_names,
        soz: soz_mask.clone(),
    };

    Ok(SynthOutput {
        windowed,
        recording,
        regime_graphs,
        window_regimes,
        soz_mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{smoothness, SignalMatrix};
    use crate::linalg::solve_spd;
    use crate::signal::make_windows;

    #[test]
    fn equal_seeds_are_bit_identical() {
        let spec = default_two_regime(42);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.recording.samples(), b.recording.samples());
        let c = generate(&default_two_regime(43)).unwrap();
        assert_ne!(a.recording.samples(), c.recording.samples());
    }

    #[test]
    fn default_spec_has_the_canonical_layout() {
        let out = generate(&default_two_regime(7)).unwrap();
        assert_eq!(out.windowed.n_windows(), 13);
        let labels = &out.windowed.labels;
        assert!(labels[..3].iter().all(|l| *l == WindowLabel::PreOnset));
        assert_eq!(labels[3], WindowLabel::Onset);
        assert!(labels[4..].iter().all(|l| *l == WindowLabel::PostOnset));
        assert_eq!(out.recording.onset_sample(), 3 * 128);
        assert_eq!(out.soz_mask.iter().filter(|&&s| s).count(), 3);
        assert_eq!(out.window_regimes, vec![0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn windowing_the_recording_reproduces_the_windows() {
        let out = generate(&default_two_regime(11)).unwrap();
        let rewindowed = make_windows(&out.recording, 512.0, 0.0, 3, 9).unwrap();
        assert_eq!(rewindowed.n_windows(), 13);
        for (a, b) in rewindowed.windows.iter().zip(out.windowed.windows.iter()) {
            assert_eq!(a.values(), b.values());
        }
        assert_eq!(rewindowed.labels, out.windowed.labels);
    }

    #[test]
    fn boost_one_leaves_regime_graphs_alone() {
        let mut spec = default_two_regime(5);
        spec.planted.as_mut().unwrap().boost = 1.0;
        let out = generate(&spec).unwrap();
        let uniform = EdgeWeightVector::uniform(10).to_laplacian();
        assert_eq!(out.regime_graphs[1], uniform);
    }

    #[test]
    fn boost_concentrates_weight_inside_the_community() {
        let spec = default_two_regime(19);
        let planted = spec.planted.clone().unwrap();
        let out = generate(&spec).unwrap();
        let boosted = out.regime_graphs[1].edge_weights();
        // Trace feasibility is preserved by renormalization.
        assert!((boosted.sum() - 5.0).abs() <= 1e-9);
        // Intra-community edges outweigh the rest by the boost ratio.
        let (a, b) = (planted.nodes[0], planted.nodes[1]);
        let (inside, outside) = (a.min(b), a.max(b));
        let out_node = (0..10).find(|node| !planted.nodes.contains(node)).unwrap();
        let plain = boosted.get(inside.min(out_node), inside.max(out_node));
        let hot = boosted.get(inside, outside);
        assert!(
            (hot / plain - 3.0).abs() <= 1e-9,
            "boost ratio {} should be 3",
            hot / plain
        );
    }

    #[test]
    fn empirical_covariance_approaches_the_model() {
        // Small graph, many samples, no noise: the sample covariance must
        // approach (L + RIDGE I)^-1 (law of large numbers).
        let n = 4;
        let spec = SynthSpec {
            n_nodes: n,
            m_windows: 1,
            samples_per_window: 100_000,
            sample_rate: 250.0,
            regimes: vec![Regime {
                windows: 0..1,
                weights: ring_weights(n),
            }],
            planted: None,
            noise_std: 0.0,
            seed: 31,
        };
        let out = generate(&spec).unwrap();
        let x = out.windowed.windows[0].values();
        let k = x.ncols() as f64;
        let empirical = x.dot(&x.t()) / k;

        let mut precision = ring_weights(n).to_laplacian().matrix().clone();
        for d in 0..n {
            precision[[d, d]] += RIDGE;
        }
        // Invert column by column.
        let mut expected = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut e = Array1::<f64>::zeros(n);
            e[j] = 1.0;
            let col = solve_spd(&precision, &e).unwrap();
            expected.column_mut(j).assign(&col);
        }
        let diff_norm: f64 = (&empirical - &expected).iter().map(|v| v * v).sum::<f64>();
        let base_norm: f64 = expected.iter().map(|v| v * v).sum::<f64>();
        assert!(
            (diff_norm / base_norm).sqrt() <= 0.05,
            "relative covariance error {}",
            (diff_norm / base_norm).sqrt()
        );
    }

    #[test]
    fn samples_are_smooth_on_their_generating_graph() {
        // Noise-free samples must be smoother on the true graph than on
        // random graphs of equal total weight, in every trial.
        let n = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for trial in 0..10 {
            let spec = SynthSpec {
                n_nodes: n,
                m_windows: 1,
                samples_per_window: 256,
                sample_rate: 250.0,
                regimes: vec![Regime {
                    windows: 0..1,
                    weights: ring_weights(n),
                }],
                planted: None,
                noise_std: 0.0,
                seed: 4000 + trial,
            };
            let out = generate(&spec).unwrap();
            let x = SignalMatrix::new(out.windowed.windows[0].values().clone()).unwrap();
            let on_true = smoothness(&x, &out.regime_graphs[0]).unwrap();
            for _ in 0..100 {
                let raw: Vec<f64> = (0..crate::graph::edge_count(n))
                    .map(|_| rng.gen::<f64>())
                    .collect();
                let total: f64 = raw.iter().sum();
                let w = EdgeWeightVector::new(
                    n,
                    raw.into_iter().map(|v| v * (n as f64 / 2.0) / total).collect(),
                )
                .unwrap();
                let on_random = smoothness(&x, &w.to_laplacian()).unwrap();
                assert!(
                    on_true < on_random,
                    "trial {trial}: true-graph smoothness {on_true} \
                     not below random {on_random}"
                );
            }
        }
    }

    #[test]
    fn spec_validation_rejects_broken_partitions() {
        let base = default_two_regime(1);
        let mut gap = base.clone();
        gap.regimes[1].windows = 4..13;
        assert!(matches!(generate(&gap), Err(SynthError::BadSpec(_))));
        let mut overlap = base.clone();
        overlap.regimes[1].windows = 2..13;
        assert!(matches!(generate(&overlap), Err(SynthError::BadSpec(_))));
        let mut short = base.clone();
        short.regimes[1].windows = 3..12;
        assert!(matches!(generate(&short), Err(SynthError::BadSpec(_))));
        let mut bad_boost = base.clone();
        bad_boost.planted.as_mut().unwrap().boost = 0.5;
        assert!(matches!(generate(&bad_boost), Err(SynthError::BadSpec(_))));
        let mut bad_node = base;
        bad_node.planted.as_mut().unwrap().nodes = vec![0, 99];
        assert!(matches!(generate(&bad_node), Err(SynthError::BadSpec(_))));
    }

    #[test]
    fn infeasible_regime_weights_are_rejected() {
        let mut w = ring_weights(6).weights().to_vec();
        w[0] += 1.0; // breaks the sum = n/2 requirement
        let weights = EdgeWeightVector::new(6, w).unwrap();
        let spec = SynthSpec {
            n_nodes: 6,
            m_windows: 2,
            samples_per_window: 16,
            sample_rate: 250.0,
            regimes: vec![Regime {
                windows: 0..2,
                weights,
            }],
            planted: None,
            noise_std: 0.0,
            seed: 3,
        };
        assert!(matches!(generate(&spec), Err(SynthError::BadSpec(_))));
    }
}
