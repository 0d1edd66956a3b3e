mod common;

use common::*;
use proptest::prelude::*;
use pwspd_core::neighbors::*;
use pwspd_core::{PointCloud, RngHandle};
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Coordinates on a coarse lattice force many exact distance ties.
    #[test]
    fn grid_index_equals_brute_force(seed in any::<u64>(), n in 256usize..700, d in 1usize..=3, k in 1usize..40, lattice in any::<bool>()) {
        let mut rng = RngHandle::new(seed).stream();
        let coords: Vec<f64> = (0..n * d)
            .map(|_| {
                let x: f64 = rng.random();
                if lattice { (x * 8.0).floor() / 8.0 } else { x }
            })
            .collect();
        let c = PointCloud::new(coords, d, d).unwrap();
        prop_assert_eq!(knn_table_grid(&c, k).unwrap(), knn_table_brute(&c, k).unwrap());
    }
}

#[test]
fn fifty_points_edge_set_matches_full_sort() {
    let c = random_cloud(&mut RngHandle::new(9).stream(), 50, 2);
    let g = knn_graph(&c, 5, KnnMetric::Euclidean).unwrap();
    let mut expected = std::collections::BTreeSet::new();
    for i in 0..50 {
        for j in brute_knn(&c, i, 5) {
            expected.insert((i.min(j), i.max(j)));
        }
    }
    let got: std::collections::BTreeSet<_> = g.edges().map(|(i, j, _)| (i, j)).collect();
    assert_eq!(got, expected);
    for (i, j, l) in g.edges() {
        assert_eq!(l, dist(&c, i, j));
    }
}

#[test]
fn edge_rank_recovers_the_graph() {
    let c = random_cloud(&mut RngHandle::new(10).stream(), 300, 2);
    let t = knn_table(&c, 12).unwrap();
    for k in [1, 4, 12] {
        let g = t.graph(k).unwrap();
        for i in 0..300 {
            for j in 0..300 {
                if i != j {
                    let in_graph = t.edge_rank(i, j).is_some_and(|r| r <= k);
                    assert_eq!(g.has_edge(i, j), in_graph);
                }
            }
        }
    }
}

#[test]
fn uniform_density_estimate_is_near_one() {
    let c = random_cloud(&mut RngHandle::new(11).stream(), 5000, 2);
    let f = knn_density(&c, 50).unwrap();
    let interior: Vec<f64> = (0..c.len())
        .filter(|&i| c.point(i).iter().all(|&x| (0.15..=0.85).contains(&x)))
        .map(|i| f.values[i])
        .collect();
    let mean = interior.iter().sum::<f64>() / interior.len() as f64;
    assert!((mean - 1.0).abs() < 0.15, "mean density {mean}");
}

#[test]
fn scales_are_kth_distances() {
    let c = random_cloud(&mut RngHandle::new(12).stream(), 400, 3);
    let s = knn_scales(&c, 7).unwrap();
    for i in (0..400).step_by(37) {
        let nn = brute_knn(&c, i, 7);
        assert_eq!(s.sigmas[i], dist(&c, i, nn[6]));
    }
}
