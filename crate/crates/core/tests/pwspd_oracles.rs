mod common;

use common::*;
use proptest::prelude::*;
use pwspd_core::neighbors::{knn_graph, KnnMetric};
use pwspd_core::pwspd::*;
use pwspd_core::{pairwise_euclidean, NeighborGraph, Power, RngHandle};

const POWERS: [f64; 5] = [1.0, 1.5, 2.0, 4.0, 8.0];

fn cloud_strategy(max_n: usize) -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 2..=max_n, 1usize..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn complete_graph_matches_path_enumeration((seed, n, d) in cloud_strategy(8), pi in 0..POWERS.len()) {
        let p = POWERS[pi];
        let c = random_cloud(&mut RngHandle::new(seed).stream(), n, d);
        let g = NeighborGraph::complete(&c);
        let m = pwspd_all_pairs(&PwspdQueryConfig::new(&g, Power::metric(p).unwrap()));
        let oracle = brute_pwspd(&c, p);
        for i in 0..n {
            for j in 0..n {
                prop_assert!(close(m.get(i, j), oracle[i][j], 1e-12), "({i},{j}) {} vs {}", m.get(i, j), oracle[i][j]);
            }
        }
    }

    #[test]
    fn longest_leg_is_mst_bottleneck((seed, n, d) in cloud_strategy(14)) {
        let c = random_cloud(&mut RngHandle::new(seed).stream(), n, d);
        let m = longest_leg_all_pairs(&NeighborGraph::complete(&c));
        let oracle = mst_bottleneck(&c);
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(m.get(i, j), oracle[i][j]);
            }
        }
    }

    #[test]
    fn knn_graph_matches_floyd_warshall(seed in any::<u64>(), n in 4usize..=30, k in 1usize..=4, pi in 0..POWERS.len()) {
        let p = POWERS[pi];
        let c = random_cloud(&mut RngHandle::new(seed).stream(), n, 2);
        let g = knn_graph(&c, k.min(n - 1), KnnMetric::Euclidean).unwrap();
        let edges: Vec<_> = g.edges().map(|(i, j, l)| (i, j, l.powf(p))).collect();
        let fw = floyd_warshall(n, &edges);
        let m = pwspd_all_pairs(&PwspdQueryConfig::new(&g, Power::metric(p).unwrap()));
        for i in 0..n {
            for j in 0..n {
                prop_assert!(close(m.get(i, j), fw[i][j].powf(1.0 / p), 1e-12));
            }
        }
    }

    #[test]
    fn returned_paths_realize_their_values(seed in any::<u64>(), n in 3usize..=40, pi in 0..POWERS.len()) {
        let p = POWERS[pi];
        let c = random_cloud(&mut RngHandle::new(seed).stream(), n, 2);
        let g = knn_graph(&c, 3.min(n - 1), KnnMetric::Euclidean).unwrap();
        let cfg = PwspdQueryConfig::new(&g, Power::metric(p).unwrap());
        for (t, r) in pwspd_single_source(&cfg, 0).unwrap().into_iter().enumerate() {
            if r.is_reachable() {
                prop_assert_eq!(r.nodes.first(), Some(&0));
                prop_assert_eq!(r.nodes.last(), Some(&t));
                prop_assert!(close(path_value(&g, &r.nodes, p).unwrap(), r.value, 1e-12));
            } else {
                prop_assert!(r.nodes.is_empty());
            }
        }
    }

    #[test]
    fn metric_axioms_on_random_triples(seed in any::<u64>(), pi in 0usize..3) {
        let p = [1.0, 2.0, 5.0][pi];
        let c = random_cloud(&mut RngHandle::new(seed).stream(), 25, 2);
        let m = pwspd_all_pairs(&PwspdQueryConfig::new(&NeighborGraph::complete(&c), Power::metric(p).unwrap()));
        for i in 0..25 {
            prop_assert_eq!(m.get(i, i), 0.0);
            for j in 0..25 {
                prop_assert_eq!(m.get(i, j), m.get(j, i));
                for k in 0..25 {
                    prop_assert!(m.get(i, k) <= m.get(i, j) + m.get(j, k) + 1e-10);
                }
            }
        }
    }

    #[test]
    fn powered_cost_is_a_metric_below_one(seed in any::<u64>()) {
        let p = 0.5;
        let c = random_cloud(&mut RngHandle::new(seed).stream(), 20, 2);
        let m = pwspd_all_pairs(&PwspdQueryConfig::new(&NeighborGraph::complete(&c), Power::non_metric(p).unwrap()));
        let pp = m.powered(p);
        for i in 0..20 {
            for j in 0..20 {
                for k in 0..20 {
                    prop_assert!(pp.get(i, k) <= pp.get(i, j) + pp.get(j, k) + 1e-10);
                }
            }
        }
    }
}

#[test]
fn eight_points_in_the_cube_with_cubic_weights() {
    let c = random_cloud(&mut RngHandle::new(8).stream(), 8, 3);
    let m = pwspd_all_pairs(&PwspdQueryConfig::new(&NeighborGraph::complete(&c), Power::metric(3.0).unwrap()));
    let oracle = brute_pwspd(&c, 3.0);
    for i in 0..8 {
        for j in 0..8 {
            assert!(close(m.get(i, j), oracle[i][j], 1e-12));
        }
    }
}

#[test]
fn unit_power_reduces_to_euclidean() {
    let c = random_cloud(&mut RngHandle::new(2).stream(), 200, 2);
    let m = pwspd_all_pairs(&PwspdQueryConfig::new(&NeighborGraph::complete(&c), Power::metric(1.0).unwrap()));
    let e = pairwise_euclidean(&c);
    for i in 0..200 {
        for j in 0..200 {
            assert!((m.get(i, j) - e.get(i, j)).abs() <= 1e-12);
        }
    }
}

#[test]
fn knn_query_matches_full_run() {
    let c = random_cloud(&mut RngHandle::new(3).stream(), 200, 2);
    let g = knn_graph(&c, 10, KnnMetric::Euclidean).unwrap();
    let cfg = PwspdQueryConfig::new(&g, Power::metric(4.0).unwrap());
    for s in [0, 17, 199] {
        let mut full: Vec<(f64, usize)> = pwspd_single_source(&cfg, s)
            .unwrap()
            .iter()
            .enumerate()
            .filter(|&(t, _)| t != s)
            .map(|(t, r)| (r.value, t))
            .collect();
        full.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let q = pwspd_knn_query(&cfg, s, 10).unwrap();
        assert!(q.complete);
        let got: Vec<(f64, usize)> = q.neighbors.iter().map(|(t, r)| (r.value, *t)).collect();
        assert_eq!(got, full[..10].to_vec());
    }
}

#[test]
fn normalization_scales_every_entry() {
    let c = random_cloud(&mut RngHandle::new(4).stream(), 50, 2);
    let g = NeighborGraph::complete(&c);
    let raw = pwspd_all_pairs(&PwspdQueryConfig::new(&g, Power::metric(3.0).unwrap()));
    let norm = pwspd_all_pairs(&PwspdQueryConfig::new(&g, Power::metric(3.0).unwrap()).normalized(2).unwrap());
    let factor = 50f64.powf(2.0 / 6.0);
    for i in 0..50 {
        for j in 0..50 {
            assert!(close(norm.get(i, j), raw.get(i, j) * factor, 1e-14));
        }
    }
    assert!(norm.is_normalized());
}

#[test]
fn duplicate_points_are_at_distance_zero() {
    let c = pwspd_core::PointCloud::new(vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0], 2, 2).unwrap();
    let m = pwspd_all_pairs(&PwspdQueryConfig::new(&NeighborGraph::complete(&c), Power::metric(2.0).unwrap()));
    assert_eq!(m.get(0, 2), 0.0);
    assert_eq!(longest_leg_all_pairs(&NeighborGraph::complete(&c)).get(0, 2), 0.0);
}

#[test]
fn large_power_stays_finite() {
    let c = random_cloud(&mut RngHandle::new(5).stream(), 30, 2).scaled(1e-9).unwrap();
    let g = NeighborGraph::complete(&c);
    let m = pwspd_all_pairs(&PwspdQueryConfig::new(&g, Power::metric(200.0).unwrap()));
    let ll = longest_leg_all_pairs(&g);
    let cr = &c;
    let longest = (0..30).flat_map(|i| (0..30).map(move |j| dist(cr, i, j))).fold(0.0, f64::max);
    for i in 0..30 {
        for j in 0..30 {
            let v = m.get(i, j);
            assert!(v.is_finite());
            // Powered costs below the smallest normal float, relative to the longest edge, underflow.
            if (ll.get(i, j) / longest).powf(200.0) < f64::MIN_POSITIVE {
                continue;
            }
            // l_p decreases to the longest leg as p grows.
            assert!(v >= ll.get(i, j) * (1.0 - 1e-12));
            assert!(v <= ll.get(i, j) * 30f64.powf(1.0 / 200.0) * (1.0 + 1e-12));
        }
    }
}
