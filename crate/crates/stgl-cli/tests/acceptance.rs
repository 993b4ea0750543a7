//! Release-gate checks for the whole toolkit. Each test covers one
//! numbered claim about the pipeline — solver behaviour, oracle
//! equivalence, recovery on synthetic data, statistical machinery, and
//! the command-line binary itself — and prints a single `[PASS]`/`[FAIL]`
//! line with the measured margins (visible under `--nocapture`).

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use stgl::analysis::{classify_topk, regime_contrast, score_electrodes, ScoreMode};
use stgl::baseline::{cross_validate, hvg_features, BaselineConfig};
use stgl::graph::{EdgeWeightVector, GraphLaplacian};
use stgl::hvg::{build_hvg, build_hvg_brute_force};
use stgl::learn::{self, joint_objective, LearnConfig};
use stgl::logreg::{balanced_weights, loss_and_grad};
use stgl::qp::{brute_force_simplex_qp, solve_simplex_qp, QuadraticOperator, SimplexQp};
use stgl::signal::{WindowLabel, WindowedRecording};
use stgl::stats::wilcoxon_signed_rank;
use stgl::synth::{
    default_two_regime, generate, ring_weights, sample_planted_nodes, PlantedCommunity, Regime,
    SynthSpec,
};
use stgl::SignalMatrix;

/// Prints the one-line verdict for a criterion and fails the test when
/// the claim does not hold.
fn verdict(name: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] {name}: {detail}");
    assert!(ok, "{name}: {detail}");
}

fn gaussian_windows(rng: &mut ChaCha8Rng, n: usize, m: usize, k: usize) -> Vec<SignalMatrix> {
    (0..m)
        .map(|_| {
            let mut a = Array2::zeros((n, k));
            for v in a.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            SignalMatrix::new(a).expect("finite gaussian window")
        })
        .collect()
}

/// The twelve (nodes, windows, beta) settings cycled through by the
/// randomized solver checks.
fn solver_settings() -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for &n in &[4usize, 8] {
        for &m in &[3usize, 5] {
            for &beta in &[0.1, 0.5, 2.0] {
                out.push((n, m, beta));
            }
        }
    }
    out
}

/// Alternating minimization never increases the joint objective: on 20
/// seeded random instances every objective-trace step is non-increasing
/// up to 1e-8 slack, within a 60 s budget.
#[test]
fn criterion_01() {
    let t0 = Instant::now();
    let settings = solver_settings();
    let mut worst_step = f64::NEG_INFINITY;
    for inst in 0..20usize {
        let (n, m, beta) = settings[inst % settings.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(100 + inst as u64);
        let windows = gaussian_windows(&mut rng, n, m, 32);
        let cfg = LearnConfig {
            beta,
            ..LearnConfig::default()
        };
        let res = learn::run(&windows, &cfg).expect("learn run");
        for pair in res.objective_trace.windows(2) {
            worst_step = worst_step.max(pair[1] - pair[0]);
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    verdict(
        "criterion 01",
        worst_step <= 1e-8 && elapsed < 60.0,
        &format!(
            "20 instances, worst objective step {worst_step:+.3e} (allowed 1e-8), {elapsed:.2} s (< 60 s)"
        ),
    );
}

/// Every learned graph is a valid Laplacian: row sums within 1e-9 of
/// zero, trace within 1e-6 of the node count, off-diagonals at most
/// 1e-12, smallest eigenvalue at least -1e-8.
#[test]
fn criterion_02() {
    let mut graphs: Vec<GraphLaplacian> = Vec::new();
    let settings = solver_settings();
    for inst in 0..6usize {
        let (n, m, beta) = settings[(2 * inst) % settings.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(200 + inst as u64);
        let windows = gaussian_windows(&mut rng, n, m, 32);
        let cfg = LearnConfig {
            beta,
            ..LearnConfig::default()
        };
        let res = learn::run(&windows, &cfg).expect("learn run");
        graphs.extend(res.spatial);
        graphs.push(res.temporal);
    }
    let out = generate(&default_two_regime(3)).expect("synthesis");
    let res = learn::run(&out.windowed.windows, &LearnConfig::default()).expect("learn run");
    graphs.extend(res.spatial);
    graphs.push(res.temporal);

    let mut worst_row = 0.0f64;
    let mut worst_trace = 0.0f64;
    let mut worst_offdiag = f64::NEG_INFINITY;
    let mut worst_eig = f64::INFINITY;
    for l in &graphs {
        let m = l.matrix();
        let n = m.nrows();
        for i in 0..n {
            worst_row = worst_row.max(m.row(i).sum().abs());
            for j in 0..n {
                if i != j {
                    worst_offdiag = worst_offdiag.max(m[[i, j]]);
                }
            }
        }
        worst_trace = worst_trace.max((l.trace() - n as f64).abs());
        worst_eig = worst_eig.min(l.min_eigenvalue());
    }
    let ok = worst_row <= 1e-9 && worst_trace <= 1e-6 && worst_offdiag <= 1e-12 && worst_eig >= -1e-8;
    verdict(
        "criterion 02",
        ok,
        &format!(
            "{} graphs: |row sum| {worst_row:.2e} (<= 1e-9), |trace - n| {worst_trace:.2e} (<= 1e-6), max off-diag {worst_offdiag:.2e} (<= 1e-12), min eig {worst_eig:.2e} (>= -1e-8)",
            graphs.len()
        ),
    );
}

/// Two-window instance whose per-window optimum provably sits on one
/// simplex vertex: rows 0 and 1 carry the identical strong signal, so
/// all weight belongs on their edge. Vertex optimality needs the other
/// edges' squared distances to beat the Frobenius pull of 9*beta; the
/// returned margin is the worst ratio over that threshold.
fn vertex_instance(seed: u64) -> (Vec<SignalMatrix>, f64) {
    let scale = 4.0;
    let k = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let windows: Vec<SignalMatrix> = (0..2)
        .map(|_| {
            let shared: Vec<f64> = (0..k)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let other: Vec<f64> = (0..k)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mut m = Array2::zeros((3, k));
            for c in 0..k {
                m[[0, c]] = shared[c];
                m[[1, c]] = shared[c];
                m[[2, c]] = other[c];
            }
            SignalMatrix::new(m).expect("finite window")
        })
        .collect();
    let beta = 0.1;
    let mut margin = f64::INFINITY;
    for w in &windows {
        let d = w.pairwise_sq_distances();
        margin = margin.min((d[1] - d[0]) / (9.0 * beta));
        margin = margin.min((d[2] - d[0]) / (9.0 * beta));
    }
    (windows, margin)
}

/// All points of the scaled simplex `{w >= 0, sum = ticks*step}` whose
/// coordinates are multiples of `step`.
fn simplex_grid(dim: usize, ticks: usize, step: f64) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dim == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for t in 0..=left {
            prefix.push(t);
            rec(dim - 1, left - t, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    rec(dim, ticks, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|ticks| ticks.into_iter().map(|t| t as f64 * step).collect())
        .collect()
}

/// On 5 seeded three-node, two-window instances the solver's final
/// objective matches an exhaustive 0.05-step grid search over both
/// weight simplices to 1e-3, within a 120 s budget.
#[test]
fn criterion_03() {
    let t0 = Instant::now();
    let beta = 0.1;
    let mut worst_gap = 0.0f64;
    let mut worst_margin = f64::INFINITY;
    for seed in 0..5u64 {
        let (windows, margin) = vertex_instance(seed);
        worst_margin = worst_margin.min(margin);
        let cfg = LearnConfig {
            beta,
            normalize_distances: false,
            ..LearnConfig::default()
        };
        let res = learn::run(&windows, &cfg).expect("learn run");
        let solver_objective = *res.objective_trace.last().expect("nonempty trace");

        // Exhaustive search: 0.05-step grid over each window's weight
        // simplex (sum 3/2) and over the temporal simplex (sum 1).
        let spatial_points: Vec<GraphLaplacian> = simplex_grid(3, 30, 0.05)
            .into_iter()
            .map(|w| {
                GraphLaplacian::from_weights(&EdgeWeightVector::new(3, w).expect("grid weights"))
            })
            .collect();
        let temporal_points: Vec<GraphLaplacian> = simplex_grid(1, 20, 0.05)
            .into_iter()
            .map(|w| {
                GraphLaplacian::from_weights(&EdgeWeightVector::new(2, w).expect("grid weights"))
            })
            .collect();
        let mut grid_best = f64::INFINITY;
        for la in &spatial_points {
            for lb in &spatial_points {
                let pair = [la.clone(), lb.clone()];
                for lt in &temporal_points {
                    let f = joint_objective(&windows, &pair, lt, beta).expect("objective");
                    grid_best = grid_best.min(f);
                }
            }
        }
        worst_gap = worst_gap.max((solver_objective - grid_best).abs());
    }
    let elapsed = t0.elapsed().as_secs_f64();
    verdict(
        "criterion 03",
        worst_margin >= 10.0 && worst_gap <= 1e-3 && elapsed < 120.0,
        &format!(
            "5 instances, worst |solver - grid| {worst_gap:.2e} (<= 1e-3), vertex margin {worst_margin:.0}x (>= 10x), {elapsed:.1} s (< 120 s)"
        ),
    );
}

/// On 50 random three-dimensional simplex QPs the projected-gradient
/// solver matches a fine brute-force grid to 1e-3 and reports a KKT
/// residual at most 1e-7 on every converged run.
#[test]
fn criterion_04() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_gap = 0.0f64;
    let mut worst_kkt = 0.0f64;
    let mut all_converged = true;
    for _ in 0..50 {
        let mut a = Array2::<f64>::zeros((3, 3));
        for v in a.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let mut q = a.t().dot(&a);
        for i in 0..3 {
            q[[i, i]] += 0.1;
        }
        let linear = Array1::from_iter((0..3).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)));
        let s = rng.gen_range(0.5..3.0);
        let qp = SimplexQp {
            linear,
            quadratic: QuadraticOperator::Dense(q),
            simplex_sum: s,
            strong_convexity: 0.1,
            constant: 0.0,
        };
        let start = Array1::from_elem(3, s / 3.0);
        let report = solve_simplex_qp(&qp, &start, 20_000, 1e-7).expect("solver");
        all_converged &= report.converged;
        if report.converged {
            worst_kkt = worst_kkt.max(report.kkt_residual);
        }
        let (_, brute) = brute_force_simplex_qp(&qp, s, s / 400.0).expect("brute force");
        worst_gap = worst_gap.max((report.objective - brute).abs());
    }
    verdict(
        "criterion 04",
        all_converged && worst_gap <= 1e-3 && worst_kkt <= 1e-7,
        &format!(
            "50 problems, worst |solver - brute force| {worst_gap:.2e} (<= 1e-3), worst KKT residual {worst_kkt:.2e} (<= 1e-7), all converged {all_converged}"
        ),
    );
}

/// The linear-time stack construction of the horizontal visibility graph
/// equals the quadratic definition on 100 random series (every third one
/// rounded to force ties), lengths 2-256, within 5 s.
#[test]
fn criterion_05() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0usize;
    for trial in 0..100usize {
        let len = rng.gen_range(2..=256);
        let series: Vec<f64> = (0..len)
            .map(|_| {
                let v: f64 = rng.sample(StandardNormal);
                if trial % 3 == 0 {
                    (v * 10.0).round() / 10.0
                } else {
                    v
                }
            })
            .collect();
        let fast = build_hvg(&series).expect("fast construction");
        let slow = build_hvg_brute_force(&series).expect("brute force");
        if fast.adjacency() != slow.adjacency() {
            mismatches += 1;
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    verdict(
        "criterion 05",
        mismatches == 0 && elapsed < 5.0,
        &format!("100 series, {mismatches} adjacency mismatches, {elapsed:.2} s (< 5 s)"),
    );
}

/// On the default two-regime synthetic generator (10 nodes, 13 windows,
/// 128 samples, noise 0.1) the learned temporal graph couples onset and
/// post-onset windows more strongly within the group than to pre-onset
/// windows in at least 90% of 50 seeded trials.
#[test]
fn criterion_06() {
    let mut wins = 0usize;
    let trials = 50u64;
    for seed in 0..trials {
        let out = generate(&default_two_regime(seed)).expect("synthesis");
        let res = learn::run(&out.windowed.windows, &LearnConfig::default()).expect("learn run");
        let (within, across) =
            regime_contrast(&res.temporal, &out.windowed.labels).expect("contrast");
        if within > across {
            wins += 1;
        }
    }
    verdict(
        "criterion 06",
        wins * 10 >= trials as usize * 9,
        &format!("within-regime coupling exceeded cross-regime in {wins}/{trials} trials (need >= 45)"),
    );
}

/// With a 3-node community boosted 3x in the onset and post-onset
/// regimes, the top-3 electrodes by weighted degree recover the planted
/// nodes with mean recall at least 0.9 over 50 seeded trials.
#[test]
fn criterion_07() {
    let mut recall_sum = 0.0f64;
    let trials = 50u64;
    for seed in 0..trials {
        let out = generate(&default_two_regime(seed)).expect("synthesis");
        let res = learn::run(&out.windowed.windows, &LearnConfig::default()).expect("learn run");
        let scores = score_electrodes(
            &res.spatial,
            &out.windowed.labels,
            &out.windowed.channel_names,
            &out.soz_mask,
            ScoreMode::WeightedDegree,
        )
        .expect("scores");
        let top = classify_topk(&scores, 3).expect("top-k");
        let hits = top.iter().filter(|s| s.predicted_soz && s.true_soz).count();
        recall_sum += hits as f64 / 3.0;
    }
    let mean_recall = recall_sum / trials as f64;
    verdict(
        "criterion 07",
        mean_recall >= 0.9,
        &format!("mean top-3 recall of planted nodes {mean_recall:.3} over {trials} trials (>= 0.9)"),
    );
}

/// One channel's series for the classifier-soundness trials: marked
/// channels carry a noisy fixed-frequency oscillation (a series whose
/// visibility statistics differ strongly from noise), the rest pure
/// white noise.
fn trial_series(rng: &mut ChaCha8Rng, n_samples: usize, marked: bool) -> Vec<f64> {
    if !marked {
        return (0..n_samples).map(|_| rng.sample(StandardNormal)).collect();
    }
    let phase: f64 = 0.3 * rng.sample::<f64, _>(StandardNormal);
    (0..n_samples)
        .map(|t| {
            let e: f64 = rng.sample(StandardNormal);
            (2.0 * std::f64::consts::PI * 3.0 * t as f64 / n_samples as f64 + phase).sin() + 0.3 * e
        })
        .collect()
}

/// Pooled cross-validated accuracy of the visibility-graph baseline on
/// one 24-channel trial (12 oscillatory channels vs 12 noise channels);
/// optionally with class labels shuffled to draw from the chance null.
fn baseline_trial(seed: u64, permute_labels: bool) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_ch = 24;
    let k = 64;
    let m = 13;
    let soz: Vec<bool> = (0..n_ch).map(|c| c < 12).collect();
    let channel_names: Vec<String> = (0..n_ch).map(|c| format!("c{c:04}")).collect();
    let windows: Vec<SignalMatrix> = (0..m)
        .map(|_| {
            let mut mat = Array2::zeros((n_ch, k));
            for c in 0..n_ch {
                for (j, v) in trial_series(&mut rng, k, soz[c]).iter().enumerate() {
                    mat[[c, j]] = *v;
                }
            }
            SignalMatrix::new(mat).expect("finite window")
        })
        .collect();
    let mut labels = vec![WindowLabel::PreOnset; 3];
    labels.push(WindowLabel::Onset);
    labels.extend(vec![WindowLabel::PostOnset; m - 4]);
    let wr = WindowedRecording {
        windows,
        labels,
        window_starts: (0..m).map(|i| i * k).collect(),
        window_length_ms: 250.0,
        overlap_fraction: 0.0,
        channel_names,
        soz,
    };
    let mut features = hvg_features(&wr, [2, 3, 4]).expect("features");
    if permute_labels {
        let mut perm_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
        features.labels.shuffle(&mut perm_rng);
    }
    let cfg = BaselineConfig {
        seed,
        n_components: Some(3),
        ..BaselineConfig::default()
    };
    cross_validate(&features, &cfg)
        .expect("cross-validation")
        .pooled
        .total_accuracy
}

/// The visibility-graph baseline separates channels with distinguishable
/// series statistics: over 20 trials its mean accuracy exceeds chance by
/// two standard deviations of the label-permutation null, and the
/// logistic-loss gradient matches central finite differences to 1e-5.
#[test]
fn criterion_08() {
    let trials = 20u64;
    let real: Vec<f64> = (0..trials).map(|s| baseline_trial(s, false)).collect();
    let null: Vec<f64> = (0..trials).map(|s| baseline_trial(s, true)).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mean_real = mean(&real);
    let mean_null = mean(&null);
    let sd_null = (null.iter().map(|a| (a - mean_null).powi(2)).sum::<f64>()
        / (null.len() as f64 - 1.0))
        .sqrt();
    let threshold = 0.5 + 2.0 * sd_null;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut features = Array2::<f64>::zeros((12, 4));
    for v in features.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let labels: Vec<bool> = (0..12).map(|i| i % 2 == 0).collect();
    let weights = balanced_weights(&labels).expect("weights");
    let l2 = 0.1;
    let params = Array1::from_iter((0..5).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let (_, grad) = loss_and_grad(&features, &labels, &weights, l2, &params);
    let h = 1e-6;
    let mut worst_fd = 0.0f64;
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus[i] += h;
        let mut minus = params.clone();
        minus[i] -= h;
        let (lp, _) = loss_and_grad(&features, &labels, &weights, l2, &plus);
        let (lm, _) = loss_and_grad(&features, &labels, &weights, l2, &minus);
        worst_fd = worst_fd.max(((lp - lm) / (2.0 * h) - grad[i]).abs());
    }

    verdict(
        "criterion 08",
        mean_real > threshold && worst_fd <= 1e-5,
        &format!(
            "mean accuracy {mean_real:.3} vs chance + 2 null-sd = {threshold:.3} (null mean {mean_null:.3}, sd {sd_null:.3}); gradient-vs-finite-difference error {worst_fd:.2e} (<= 1e-5)"
        ),
    );
}

/// The exact signed-rank test gives p = 2/1024 for ten pairs whose
/// differences are all positive.
#[test]
fn criterion_09() {
    let b: Vec<f64> = (1..=10).map(|i| i as f64).collect();
    let a: Vec<f64> = b.iter().map(|v| v + v).collect();
    let res = wilcoxon_signed_rank(&a, &b).expect("test statistic");
    let expected = 2.0 / 1024.0;
    let err = (res.p_value - expected).abs();
    verdict(
        "criterion 09",
        res.exact && err <= 1e-12,
        &format!(
            "exact={} p={:.12e}, |p - 2/1024| = {err:.2e} (<= 1e-12)",
            res.exact, res.p_value
        ),
    );
}

fn run_cli(args: &[&str]) {
    let bin = env!("CARGO_BIN_EXE_stgl");
    let output = Command::new(bin).args(args).output().expect("spawn binary");
    assert!(
        output.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&output.stderr)
    );
}

/// All regular files under `root`, keyed by relative path, excluding the
/// run manifests (whose recorded wall-clock timings legitimately vary).
fn collect_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("read dir") {
            let entry = entry.expect("dir entry");
            let path = entry.path();
            if path.is_dir() {
                walk(&path, root, out);
            } else if path.file_name().is_some_and(|n| n != "manifest.txt") {
                let rel = path
                    .strip_prefix(root)
                    .expect("under root")
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, std::fs::read(&path).expect("read file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Running synthesize -> learn -> analyze twice with the same seed
/// through the installed binary produces byte-identical data files
/// (manifests excluded).
#[test]
fn criterion_10() {
    let tmp = tempfile::tempdir().expect("tempdir");
    for run in ["a", "b"] {
        let base = tmp.path().join(run);
        let synth = base.join("synth");
        let learn = base.join("learn");
        let analyze = base.join("analyze");
        run_cli(&["synth", "--seed", "7", "--out", synth.to_str().unwrap()]);
        run_cli(&[
            "learn",
            "--recording",
            synth.join("recording.csv").to_str().unwrap(),
            "--annotations",
            synth.join("annotations.txt").to_str().unwrap(),
            "--window-ms",
            "250",
            "--overlap",
            "0",
            "--out",
            learn.to_str().unwrap(),
        ]);
        run_cli(&[
            "analyze",
            "--learn-out",
            learn.to_str().unwrap(),
            "--annotations",
            learn.join("annotations.txt").to_str().unwrap(),
            "--out",
            analyze.to_str().unwrap(),
        ]);
    }
    let a = collect_files(&tmp.path().join("a"));
    let b = collect_files(&tmp.path().join("b"));
    let keys_match = a.keys().eq(b.keys());
    let mut differing = Vec::new();
    for (path, bytes) in &a {
        if b.get(path) != Some(bytes) {
            differing.push(path.clone());
        }
    }
    verdict(
        "criterion 10",
        keys_match && differing.is_empty(),
        &format!(
            "{} data files compared across two seeded pipeline runs, {} differ{}",
            a.len(),
            differing.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!(" ({})", differing.join(", "))
            }
        ),
    );
}

/// A 20-electrode, 13-window, 128-sample problem runs the full
/// sequential-sweep optimization to a 1e-6 relative tolerance in under
/// a minute.
#[test]
fn criterion_11() {
    let n = 20;
    let spec = SynthSpec {
        n_nodes: n,
        m_windows: 13,
        samples_per_window: 128,
        sample_rate: 512.0,
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
            nodes: sample_planted_nodes(n, 3, 7),
            boost: 3.0,
            active_regimes: vec![1],
        }),
        noise_std: 0.1,
        seed: 7,
    };
    let out = generate(&spec).expect("synthesis");
    let t0 = Instant::now();
    let res = learn::run(&out.windowed.windows, &LearnConfig::default()).expect("learn run");
    let elapsed = t0.elapsed().as_secs_f64();
    verdict(
        "criterion 11",
        res.converged && elapsed < 60.0,
        &format!(
            "20 electrodes x 13 windows x 128 samples: converged={} in {} passes, {elapsed:.2} s (< 60 s)",
            res.converged, res.outer_iterations
        ),
    );
}
