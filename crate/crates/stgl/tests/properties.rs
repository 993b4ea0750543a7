//! Randomized invariants of the core machinery: graph algebra, the
//! simplex projection and QP solver contracts, visibility-graph
//! equivalence, rank statistics, and lossless text serialization.

use ndarray::Array1;
use proptest::prelude::*;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use stgl::graph::{edge_count, EdgeWeightVector, GraphLaplacian};
use stgl::hvg::{build_hvg, build_hvg_brute_force};
use stgl::io::{format_float, read_edge_list_csv, write_edge_list_csv, KvDocument};
use stgl::qp::{project_scaled_simplex, solve_simplex_qp, QuadraticOperator, SimplexQp};
use stgl::stats::wilcoxon_signed_rank;

/// Node count plus one nonnegative weight per canonical edge.
fn weights_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..8).prop_flat_map(|n| {
        prop::collection::vec(0.0f64..10.0, edge_count(n)).prop_map(move |w| (n, w))
    })
}

proptest! {
    /// The edge-weight form of the squared Frobenius norm agrees with
    /// the literal dense-matrix computation.
    #[test]
    fn frobenius_identity_matches_dense((n, raw) in weights_strategy()) {
        let w = EdgeWeightVector::new(n, raw).unwrap();
        let dense: f64 = GraphLaplacian::from_weights(&w)
            .matrix()
            .iter()
            .map(|v| v * v)
            .sum();
        prop_assert!((w.laplacian_frobenius_sq() - dense).abs() <= 1e-9 * (1.0 + dense));
    }

    /// Building a Laplacian and reading its weights back is lossless.
    #[test]
    fn laplacian_weights_round_trip((n, raw) in weights_strategy()) {
        let w = EdgeWeightVector::new(n, raw).unwrap();
        let back = GraphLaplacian::from_weights(&w).edge_weights();
        prop_assert_eq!(w.weights(), back.weights());
    }

    /// The projection lands on the scaled simplex and is closer to the
    /// input than any other feasible point we can construct.
    #[test]
    fn simplex_projection_is_feasible_and_optimal(
        v in prop::collection::vec(-10.0f64..10.0, 1..6),
        u in prop::collection::vec(-10.0f64..10.0, 1..6),
        s in 0.1f64..5.0,
    ) {
        let v = Array1::from_vec(v);
        let p = project_scaled_simplex(&v, s).unwrap();
        prop_assert!((p.sum() - s).abs() <= 1e-9 * (1.0 + s));
        prop_assert!(p.iter().all(|&x| x >= 0.0));

        // Any projection of another point is feasible, so it cannot be
        // closer to v than the projection of v itself.
        let mut u = u;
        u.resize(v.len(), 0.0);
        let z = project_scaled_simplex(&Array1::from_vec(u), s).unwrap();
        let d = |a: &Array1<f64>| (a - &v).mapv(|x| x * x).sum();
        prop_assert!(d(&p) <= d(&z) + 1e-9);
    }

    /// The QP solver returns a feasible point that never does worse than
    /// the projected start, with a finite reported residual.
    #[test]
    fn qp_solver_descent_contract(
        entries in prop::collection::vec(-1.0f64..1.0, 9),
        linear in prop::collection::vec(-3.0f64..3.0, 3),
        start in prop::collection::vec(-2.0f64..2.0, 3),
        s in 0.2f64..4.0,
    ) {
        let a = ndarray::Array2::from_shape_vec((3, 3), entries).unwrap();
        let mut q = a.t().dot(&a);
        for i in 0..3 {
            q[[i, i]] += 0.05;
        }
        let qp = SimplexQp {
            linear: Array1::from_vec(linear),
            quadratic: QuadraticOperator::Dense(q),
            simplex_sum: s,
            strong_convexity: 0.05,
            constant: 0.0,
        };
        let start = Array1::from_vec(start);
        let projected = project_scaled_simplex(&start, s).unwrap();
        let report = solve_simplex_qp(&qp, &start, 2000, 1e-6).unwrap();
        prop_assert!((report.solution.sum() - s).abs() <= 1e-8 * (1.0 + s));
        prop_assert!(report.solution.iter().all(|&x| x >= 0.0));
        prop_assert!(report.objective <= qp.objective(&projected) + 1e-12);
        prop_assert!(report.kkt_residual.is_finite());
    }

    /// The stack-based visibility construction equals the quadratic
    /// definition, on continuous series and on coarse ones full of ties.
    #[test]
    fn hvg_matches_brute_force(
        series in prop::collection::vec(-100.0f64..100.0, 2..120),
        coarse in prop::collection::vec(0i32..6, 2..60),
    ) {
        let fast = build_hvg(&series).unwrap();
        let slow = build_hvg_brute_force(&series).unwrap();
        prop_assert_eq!(fast.adjacency(), slow.adjacency());

        let coarse: Vec<f64> = coarse.into_iter().map(f64::from).collect();
        let fast = build_hvg(&coarse).unwrap();
        let slow = build_hvg_brute_force(&coarse).unwrap();
        prop_assert_eq!(fast.adjacency(), slow.adjacency());
    }

    /// Two-sided signed-rank p-values are valid probabilities and
    /// symmetric under swapping the paired samples.
    #[test]
    fn wilcoxon_two_sided_symmetry(
        pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..20)
    ) {
        prop_assume!(pairs.iter().any(|(a, b)| (a - b).abs() > 1e-9));
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let ab = wilcoxon_signed_rank(&a, &b).unwrap();
        let ba = wilcoxon_signed_rank(&b, &a).unwrap();
        prop_assert!(ab.p_value > 0.0 && ab.p_value <= 1.0);
        prop_assert!((ab.p_value - ba.p_value).abs() <= 1e-12);
    }

    /// The shortest-round-trip float encoding is bit-exact for every
    /// finite value, signed zeros and subnormals included.
    #[test]
    fn float_encoding_round_trips(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let back: f64 = format_float(x).parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }

    /// Rendering a key-value document and parsing it back preserves
    /// every section, key, and value.
    #[test]
    fn kv_document_round_trips(
        sections in prop::collection::btree_map(
            "[a-z][a-z0-9_]{0,8}",
            prop::collection::btree_map(
                "[a-z][a-z0-9_]{0,8}",
                "[!-~]([ -~]{0,16}[!-~])?",
                1..5,
            ),
            1..4,
        )
    ) {
        let mut doc = KvDocument::new();
        for (section, entries) in &sections {
            for (key, value) in entries {
                doc.set(section, key, value.clone());
            }
        }
        let parsed = KvDocument::parse(&doc.render(), std::path::Path::new("mem")).unwrap();
        for (section, entries) in &sections {
            for (key, value) in entries {
                prop_assert_eq!(parsed.get(section, key), Some(value.as_str()));
            }
        }
    }
}

/// Edge-list files reproduce arbitrary weight vectors bit-exactly.
#[test]
fn edge_list_round_trips_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let dir = tempfile::tempdir().unwrap();
    for trial in 0..50 {
        let n = rng.gen_range(2..9);
        let raw: Vec<f64> = (0..edge_count(n))
            .map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0)
            .collect();
        let path = dir.path().join(format!("g{trial}.csv"));
        write_edge_list_csv(&path, n, &raw).unwrap();
        let (n_back, back) = read_edge_list_csv(&path).unwrap();
        assert_eq!(n, n_back, "trial {trial}");
        assert_eq!(raw, back, "trial {trial}");
    }
}
