mod common;

use negtype::{standard_space, Family, GraphSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn power_transforms_compose(x in common::spaces(2, 8, 0.1, 5.0), a in 0.0f64..4.0, b in 0.0f64..4.0) {
        let twice = x.power_transform(a).unwrap().power_transform(b).unwrap();
        let once = x.power_transform(a * b).unwrap();
        for i in 0..x.len() {
            for j in 0..x.len() {
                let (u, v) = (twice.d(i, j), once.d(i, j));
                prop_assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn graph_metrics_satisfy_triangle_inequality(
        n in 2usize..40,
        extra in prop::collection::vec((0usize..64, 0usize..64), 0..80),
        parents in prop::collection::vec(0usize..64, 64),
    ) {
        // A random spanning tree keeps the graph connected; extra edges add cycles.
        let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (parents[v] % v, v)).collect();
        edges.extend(extra.iter().map(|&(a, b)| (a % n, b % n)).filter(|(a, b)| a != b));
        let x = GraphSpec::new(n, edges).unwrap().shortest_path_metric().unwrap();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    prop_assert!(x.d(i, j) <= x.d(i, k) + x.d(k, j));
                }
            }
        }
    }
}

#[test]
fn largest_graph_metric_is_checked_exhaustively() {
    let n = 64;
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
    edges.extend((0..n).step_by(7).map(|v| (v, (v * 5 + 3) % n)).filter(|(a, b)| a != b));
    let x = GraphSpec::new(n, edges).unwrap().shortest_path_metric().unwrap();
    assert!(x.satisfies_triangle_inequality(0.0));
}

#[test]
fn constructors_emit_exact_invariants() {
    let families = [
        Family::Complete { n: 5 },
        Family::Bipartite { m: 1, n: 2 },
        Family::Bipartite { m: 3, n: 4 },
        Family::Hamming { n: 1 },
        Family::Hamming { n: 5 },
    ];
    for f in families {
        let x = standard_space(f).unwrap();
        assert_eq!(x.len(), f.point_count());
        for i in 0..x.len() {
            assert_eq!(x.d(i, i), 0.0);
            for j in 0..x.len() {
                assert_eq!(x.d(i, j).to_bits(), x.d(j, i).to_bits());
                if i != j {
                    assert!(x.d(i, j) > 0.0);
                }
            }
        }
    }
}

#[test]
fn csv_round_trip_is_exact() {
    let x = standard_space(Family::Hamming { n: 3 }).unwrap();
    let back = negtype::SemiMetricSpace::from_csv_str(&x.to_csv_string()).unwrap();
    assert_eq!(back.matrix(), x.matrix());
    assert_eq!(back.labels(), x.labels());
}
