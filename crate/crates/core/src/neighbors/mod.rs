//! k-nearest-neighbor search, kNN graphs and kNN density estimation.
//!
//! Neighbors are ordered by `(distance, index)`, so ties always resolve to the
//! lower index. Brute force is the reference implementation; low-dimensional
//! clouds go through a uniform-grid index that returns identical tables.

mod grid;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::cloud::{PairwiseMetric, PointCloud};
use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::graph::{NeighborGraph, Neighborhood};

pub use grid::knn_table_grid;

/// Clouds at least this large with ambient dimension <= 3 use the grid index.
const GRID_MIN_POINTS: usize = 256;

/// The `k` nearest distinct-index neighbors of every item, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnTable {
    n: usize,
    k: usize,
    indices: Vec<usize>,
    dists: Vec<f64>,
}

impl KnnTable {
    pub(crate) fn from_rows(n: usize, k: usize, rows: Vec<Vec<(f64, usize)>>) -> Self {
        let mut indices = Vec::with_capacity(n * k);
        let mut dists = Vec::with_capacity(n * k);
        for row in rows {
            debug_assert_eq!(row.len(), k);
            for (d, j) in row {
                indices.push(j);
                dists.push(d);
            }
        }
        Self {
            n,
            k,
            indices,
            dists,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.dists[i * self.k..(i + 1) * self.k]
    }

    /// 1-based position of `j` in the neighbor list of `i`.
    pub fn rank(&self, i: usize, j: usize) -> Option<usize> {
        self.neighbors(i).iter().position(|&x| x == j).map(|r| r + 1)
    }

    /// Smallest `k'` for which the symmetric `k'`-NN graph contains `{i, j}`.
    pub fn edge_rank(&self, i: usize, j: usize) -> Option<usize> {
        match (self.rank(i, j), self.rank(j, i)) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Symmetric kNN graph for any `k' <= k`: `{i, j}` is an edge when either
    /// endpoint is among the other's `k'` nearest neighbors.
    pub fn graph(&self, k: usize) -> Result<NeighborGraph> {
        if k == 0 || k > self.k {
            return Err(Error::invalid(format!(
                "requested k={k} from a table built with k={}",
                self.k
            )));
        }
        let edges = (0..self.n).flat_map(|i| {
            self.neighbors(i)[..k]
                .iter()
                .zip(&self.distances(i)[..k])
                .map(move |(&j, &d)| (i, j, d))
        });
        NeighborGraph::from_edges(self.n, edges, Neighborhood::Knn(k))
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::InvalidNeighborCount { k, n });
    }
    Ok(())
}

#[inline]
fn cmp_candidates(a: &(f64, usize), b: &(f64, usize)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Keeps the `k` smallest candidates, sorted.
pub(crate) fn take_k_smallest(mut cands: Vec<(f64, usize)>, k: usize) -> Vec<(f64, usize)> {
    if cands.len() > k {
        cands.select_nth_unstable_by(k - 1, cmp_candidates);
        cands.truncate(k);
    }
    cands.sort_unstable_by(cmp_candidates);
    cands
}

/// Reference brute-force kNN over an arbitrary metric.
pub fn knn_table_brute<M: PairwiseMetric + ?Sized>(metric: &M, k: usize) -> Result<KnnTable> {
    let n = metric.len();
    check_k(k, n)?;
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let cands = (0..n)
                .filter(|&j| j != i)
                .map(|j| (metric.distance(i, j), j))
                .collect();
            take_k_smallest(cands, k)
        })
        .collect();
    Ok(KnnTable::from_rows(n, k, rows))
}

/// kNN table for a point cloud, using the grid index when it applies.
pub fn knn_table(cloud: &PointCloud, k: usize) -> Result<KnnTable> {
    check_k(k, cloud.len())?;
    if cloud.ambient_dim() <= 3 && cloud.len() >= GRID_MIN_POINTS {
        knn_table_grid(cloud, k)
    } else {
        knn_table_brute(cloud, k)
    }
}

/// Distance used to select neighbors in [`knn_graph`].
#[derive(Debug, Clone, Copy)]
pub enum KnnMetric<'a> {
    Euclidean,
    /// A user-supplied metric (e.g. intrinsic distances on a manifold).
    Supplied(&'a DistanceMatrix),
}

/// Symmetric kNN graph storing raw lengths under the chosen metric.
pub fn knn_graph(cloud: &PointCloud, k: usize, metric: KnnMetric<'_>) -> Result<NeighborGraph> {
    match metric {
        KnnMetric::Euclidean => knn_table(cloud, k)?.graph(k),
        KnnMetric::Supplied(m) => {
            if m.n() != cloud.len() {
                return Err(Error::invalid(format!(
                    "metric has {} rows for {} points",
                    m.n(),
                    cloud.len()
                )));
            }
            for i in 0..m.n() {
                for j in (i + 1)..m.n() {
                    if m.get(i, j) != m.get(j, i) {
                        return Err(Error::NonSymmetricMetric { i, j });
                    }
                }
            }
            knn_table_brute(m, k)?.graph(k)
        }
    }
}

/// Distance from each point to its k-th nearest neighbor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleVector {
    pub sigmas: Vec<f64>,
    pub k: usize,
}

pub fn knn_scales(cloud: &PointCloud, k: usize) -> Result<ScaleVector> {
    let table = knn_table(cloud, k)?;
    Ok(scales_from_table(&table, k))
}

pub(crate) fn scales_from_table(table: &KnnTable, k: usize) -> ScaleVector {
    ScaleVector {
        sigmas: (0..table.n()).map(|i| table.distances(i)[k - 1]).collect(),
        k,
    }
}

/// kNN density estimate `f(x_i) = k / (n vol(B_1^d) sigma_{i,k}^d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub values: Vec<f64>,
    pub k: usize,
    pub d: usize,
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    std::f64::consts::PI.powf(half) / gamma(half + 1.0)
}

/// Density value for one point given its k-th neighbor distance.
pub fn knn_density_value(k: usize, n: usize, d: usize, sigma: f64) -> f64 {
    k as f64 / (n as f64 * unit_ball_volume(d) * sigma.powi(d as i32))
}

/// kNN density estimate using the cloud's declared intrinsic dimension.
pub fn knn_density(cloud: &PointCloud, k: usize) -> Result<DensityEstimate> {
    let scales = knn_scales(cloud, k)?;
    density_from_scales(&scales, cloud.len(), cloud.intrinsic_dim())
}

pub(crate) fn density_from_scales(scales: &ScaleVector, n: usize, d: usize) -> Result<DensityEstimate> {
    if let Some(index) = scales.sigmas.iter().position(|&s| s <= 0.0) {
        return Err(Error::ZeroScale { index });
    }
    Ok(DensityEstimate {
        values: scales
            .sigmas
            .iter()
            .map(|&s| knn_density_value(scales.k, n, d, s))
            .collect(),
        k: scales.k,
        d,
    })
}
