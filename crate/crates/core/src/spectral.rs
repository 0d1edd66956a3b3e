//! Graph Laplacians, eigenvector embeddings, k-means and label alignment.

use std::collections::HashMap;
use std::hash::Hash;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::distance::pairwise_euclidean;
use crate::error::{Error, Result};
use crate::graph::{NeighborGraph, Power};
use crate::kernels::{diffusion_kernel, gaussian_kernel, self_tuning_kernel, KernelMatrix};
use crate::pwspd::{pwspd_all_pairs, PwspdQueryConfig};
use crate::rng::RngHandle;
use crate::stats::percentile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaplacianKind {
    /// `Deg - W`
    Unnormalized,
    /// `Deg^-1 (Deg - W)`
    RandomWalk,
    /// `Deg^-1/2 (Deg - W) Deg^-1/2`
    Symmetric,
}

impl std::str::FromStr for LaplacianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unnormalized" => Ok(Self::Unnormalized),
            "random-walk" | "rw" => Ok(Self::RandomWalk),
            "symmetric" | "sym" => Ok(Self::Symmetric),
            other => Err(Error::invalid(format!("unknown laplacian `{other}`"))),
        }
    }
}

fn degrees_checked(w: &KernelMatrix) -> Result<Vec<f64>> {
    let deg = w.degrees();
    if let Some(node) = deg.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::ZeroDegree { node });
    }
    Ok(deg)
}

pub fn laplacian(w: &KernelMatrix, kind: LaplacianKind) -> Result<DMatrix<f64>> {
    let deg = degrees_checked(w)?;
    let n = w.n();
    let mut l = -w.values().clone();
    for i in 0..n {
        l[(i, i)] += deg[i];
    }
    match kind {
        LaplacianKind::Unnormalized => {}
        LaplacianKind::RandomWalk => {
            for (i, mut row) in l.row_iter_mut().enumerate() {
                row /= deg[i];
            }
        }
        LaplacianKind::Symmetric => {
            let s: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
            for j in 0..n {
                for i in 0..n {
                    l[(i, j)] *= s[i] * s[j];
                }
            }
        }
    }
    Ok(l)
}

/// The `k` lowest-frequency eigenpairs of a graph Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    pub eigenvalues: Vec<f64>,
    /// `n x k`, one unit-norm eigenvector per column.
    pub vectors: DMatrix<f64>,
    pub kind: LaplacianKind,
}

impl SpectralEmbedding {
    /// Rows of the chosen eigenvectors, given as 1-based indices.
    pub fn coordinates(&self, which: &[usize]) -> Result<DMatrix<f64>> {
        let k = self.eigenvalues.len();
        if let Some(&bad) = which.iter().find(|&&c| c == 0 || c > k) {
            return Err(Error::invalid(format!("eigenvector {bad} not in 1..={k}")));
        }
        Ok(DMatrix::from_fn(self.vectors.nrows(), which.len(), |i, c| {
            self.vectors[(i, which[c] - 1)]
        }))
    }
}

/// Ascending eigenpairs of a symmetric matrix, checked by residual and
/// with each vector's largest-magnitude entry made positive.
pub fn symmetric_eigenpairs(m: &DMatrix<f64>, k: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::invalid("matrix must be square"));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot take {k} eigenpairs of a {n} x {n} matrix")));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let scale = m.row_iter().map(|r| r.abs().sum()).fold(1.0, f64::max);
    let mut values = Vec::with_capacity(k);
    let mut vectors = DMatrix::zeros(n, k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        let lambda = eig.eigenvalues[idx];
        let mut v = eig.eigenvectors.column(idx).into_owned();
        v /= v.norm();
        let lead = v.iter().enumerate().fold(0, |best, (i, x)| {
            if x.abs() > v[best].abs() {
                i
            } else {
                best
            }
        });
        if v[lead] < 0.0 {
            v = -v;
        }
        let residual = (m * &v - &v * lambda).norm();
        if !(residual <= 1e-8 * scale) {
            return Err(Error::EigenNonConvergence { residual });
        }
        values.push(lambda);
        vectors.set_column(c, &v);
    }
    Ok((values, vectors))
}

/// Laplacian eigenmap with `k` eigenvectors. The random-walk variant is
/// solved through the symmetric Laplacian and mapped back by
/// `Deg^-1/2`, then renormalized.
pub fn embed(w: &KernelMatrix, kind: LaplacianKind, k: usize) -> Result<SpectralEmbedding> {
    let solve_kind = match kind {
        LaplacianKind::RandomWalk => LaplacianKind::Symmetric,
        other => other,
    };
    let l = laplacian(w, solve_kind)?;
    let (eigenvalues, mut vectors) = symmetric_eigenpairs(&l, k)?;
    if kind == LaplacianKind::RandomWalk {
        let deg = degrees_checked(w)?;
        for mut col in vectors.column_iter_mut() {
            for (x, d) in col.iter_mut().zip(&deg) {
                *x /= d.sqrt();
            }
            let norm = col.norm();
            col /= norm;
        }
    }
    Ok(SpectralEmbedding {
        eigenvalues,
        vectors,
        kind,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub cost: f64,
    /// Within-cluster sum of squares after each assignment step of the
    /// winning run.
    pub cost_history: Vec<f64>,
}

const MAX_LLOYD_ITERATIONS: usize = 300;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm from k-means++ starts; the lowest-cost of `restarts`
/// runs wins. Rows of `data` are the points.
pub fn kmeans<R: Rng + ?Sized>(
    data: &DMatrix<f64>,
    clusters: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<KMeansResult> {
    let n = data.nrows();
    if clusters == 0 || clusters > n {
        return Err(Error::invalid(format!("cannot form {clusters} clusters from {n} points")));
    }
    if restarts == 0 {
        return Err(Error::invalid("restarts must be >= 1"));
    }
    let points: Vec<Vec<f64>> = data.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts {
        let run = lloyd(&points, clusters, rng);
        if best.as_ref().is_none_or(|b| run.cost < b.cost) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus_seeds<R: Rng + ?Sized>(points: &[Vec<f64>], clusters: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < clusters {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick].clone());
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut cost = 0.0;
    for (label, p) in labels.iter_mut().zip(points) {
        let (idx, d) = centers
            .iter()
            .enumerate()
            .map(|(c, center)| (c, sq_dist(p, center)))
            .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        *label = idx;
        cost += d;
    }
    cost
}

fn lloyd<R: Rng + ?Sized>(points: &[Vec<f64>], clusters: usize, rng: &mut R) -> KMeansResult {
    let dim = points[0].len();
    let mut centers = plus_plus_seeds(points, clusters, rng);
    let mut labels = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let before = labels.clone();
        let cost = assign(points, &centers, &mut labels);
        if let Some(&prev) = history.last() {
            assert!(cost <= prev * (1.0 + 1e-12) + 1e-300, "k-means cost increased");
        }
        history.push(cost);
        if labels == before {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; clusters];
        let mut counts = vec![0usize; clusters];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..clusters {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..clusters {
            if counts[c] == 0 {
                // Reseed from the point farthest from its own center.
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centers[labels[a]])
                            .total_cmp(&sq_dist(&points[b], &centers[labels[b]]))
                            .then(b.cmp(&a))
                    })
                    .expect("nonempty");
                centers[c] = points[far].clone();
                labels[far] = c;
            }
        }
    }
    let cost = *history.last().expect("one iteration");
    KMeansResult {
        labels,
        cost,
        cost_history: history,
    }
}

/// Fraction of points labeled correctly under the best matching of
/// predicted clusters to true classes. Matching is exhaustive for up to
/// six groups and greedy beyond.
pub fn accuracy<A, B>(labels: &[A], truth: &[B]) -> Result<f64>
where
    A: Eq + Hash + Clone,
    B: Eq + Hash + Clone,
{
    if labels.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} labels against {} truth values",
            labels.len(),
            truth.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Empty("no labels".into()));
    }
    let (a, na) = dense_ids(labels);
    let (b, nb) = dense_ids(truth);
    let m = na.max(nb);
    let mut table = vec![vec![0usize; m]; m];
    for (&x, &y) in a.iter().zip(&b) {
        table[x][y] += 1;
    }
    let matched = if m <= 6 {
        best_permutation(&table)
    } else {
        greedy_matching(table)
    };
    Ok(matched as f64 / labels.len() as f64)
}

/// Relabels values as `0, 1, ...` in order of first appearance.
fn dense_ids<T: Eq + Hash + Clone>(xs: &[T]) -> (Vec<usize>, usize) {
    let mut ids = HashMap::new();
    let idx = xs
        .iter()
        .map(|x| {
            let next = ids.len();
            *ids.entry(x.clone()).or_insert(next)
        })
        .collect();
    (idx, ids.len())
}

fn best_permutation(table: &[Vec<usize>]) -> usize {
    fn go(table: &[Vec<usize>], row: usize, used: &mut [bool]) -> usize {
        if row == table.len() {
            return 0;
        }
        let mut best = 0;
        for col in 0..table.len() {
            if !used[col] {
                used[col] = true;
                best = best.max(table[row][col] + go(table, row + 1, used));
                used[col] = false;
            }
        }
        best
    }
    go(table, 0, &mut vec![false; table.len()])
}

fn greedy_matching(mut table: Vec<Vec<usize>>) -> usize {
    let m = table.len();
    let mut total = 0;
    for _ in 0..m {
        let (r, c) = (0..m)
            .flat_map(|r| (0..m).map(move |c| (r, c)))
            .max_by_key(|&(r, c)| (table[r][c], std::cmp::Reverse((r, c))))
            .expect("nonempty table");
        total += table[r][c];
        for x in 0..m {
            table[r][x] = 0;
            table[x][c] = 0;
        }
        table[r][c] = 0;
    }
    total
}

/// Settings shared by the clustering pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub clusters: usize,
    /// Kernel scale as a percentile of the pairwise distances.
    pub epsilon_percentile: f64,
    pub laplacian: LaplacianKind,
    /// 1-based eigenvector indices used as coordinates.
    pub eigenvectors: Vec<usize>,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            clusters: 2,
            epsilon_percentile: 15.0,
            laplacian: LaplacianKind::Symmetric,
            eigenvectors: vec![2],
            restarts: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub accuracy: Option<f64>,
    /// Power of the path metric, when one was used.
    pub p: Option<f64>,
    pub epsilon: Option<f64>,
}

/// Embeds with the configured eigenvectors and runs k-means. The k-means
/// stream is seeded from the config alone, so equal kernels give equal
/// labels.
pub fn cluster_kernel(w: &KernelMatrix, config: &PipelineConfig) -> Result<Vec<usize>> {
    let top = config.eigenvectors.iter().copied().max().unwrap_or(0);
    let emb = embed(w, config.laplacian, top)?;
    let coords = emb.coordinates(&config.eigenvectors)?;
    let mut rng = RngHandle::new(config.seed).stream();
    Ok(kmeans(&coords, config.clusters, config.restarts, &mut rng)?.labels)
}

fn finish(
    cloud: &PointCloud,
    labels: Vec<usize>,
    p: Option<f64>,
    epsilon: Option<f64>,
) -> Result<ClusteringResult> {
    let accuracy = cloud.labels().map(|t| accuracy(&labels, t)).transpose()?;
    Ok(ClusteringResult {
        labels,
        accuracy,
        p,
        epsilon,
    })
}

/// Kernel of the power-weighted path metric on the complete graph, with
/// the scale set from its own distance distribution.
pub fn pwspd_kernel(cloud: &PointCloud, p: f64, epsilon_percentile: f64) -> Result<(KernelMatrix, f64)> {
    let graph = NeighborGraph::complete(cloud);
    let dist = pwspd_all_pairs(&PwspdQueryConfig::new(&graph, Power::metric(p)?));
    let epsilon = percentile(&dist.upper_triangle(), epsilon_percentile)?;
    Ok((gaussian_kernel(&dist, epsilon, 1.0)?, epsilon))
}

pub fn pwspd_spectral_clustering(cloud: &PointCloud, p: f64, config: &PipelineConfig) -> Result<ClusteringResult> {
    let (w, epsilon) = pwspd_kernel(cloud, p, config.epsilon_percentile)?;
    finish(cloud, cluster_kernel(&w, config)?, Some(p), Some(epsilon))
}

/// Gaussian kernel on Euclidean distances.
pub fn euclidean_spectral_clustering(cloud: &PointCloud, config: &PipelineConfig) -> Result<ClusteringResult> {
    let dist = pairwise_euclidean(cloud);
    let epsilon = percentile(&dist.upper_triangle(), config.epsilon_percentile)?;
    let w = gaussian_kernel(&dist, epsilon, 1.0)?;
    finish(cloud, cluster_kernel(&w, config)?, None, Some(epsilon))
}

pub fn self_tuning_spectral_clustering(
    cloud: &PointCloud,
    k: usize,
    config: &PipelineConfig,
) -> Result<ClusteringResult> {
    let w = self_tuning_kernel(cloud, k)?;
    finish(cloud, cluster_kernel(&w, config)?, None, None)
}

pub fn diffusion_spectral_clustering(
    cloud: &PointCloud,
    alpha: f64,
    config: &PipelineConfig,
) -> Result<ClusteringResult> {
    let dist = pairwise_euclidean(cloud);
    let epsilon = percentile(&dist.upper_triangle(), config.epsilon_percentile)?;
    let w = diffusion_kernel(cloud, epsilon, alpha)?;
    finish(cloud, cluster_kernel(&w, config)?, None, Some(epsilon))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: f64,
    pub epsilon: f64,
    pub accuracy: f64,
}

/// Accuracy of power-weighted spectral clustering at every `p` of the grid.
/// The cloud must carry ground-truth labels.
pub fn accuracy_vs_p_sweep(cloud: &PointCloud, p_grid: &[f64], config: &PipelineConfig) -> Result<Vec<SweepPoint>> {
    if cloud.labels().is_none() {
        return Err(Error::invalid("the sweep needs ground-truth labels"));
    }
    p_grid
        .par_iter()
        .map(|&p| {
            let r = pwspd_spectral_clustering(cloud, p, config)?;
            Ok(SweepPoint {
                p,
                epsilon: r.epsilon.expect("set by the pipeline"),
                accuracy: r.accuracy.expect("labels checked"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelConstruction;

    fn kernel(values: DMatrix<f64>) -> KernelMatrix {
        KernelMatrix::new(values, KernelConstruction::SelfTuning { k: 1 }).unwrap()
    }

    fn path3() -> KernelMatrix {
        kernel(DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]))
    }

    #[test]
    fn two_node_laplacian() {
        let w = kernel(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let l = laplacian(&w, LaplacianKind::Unnormalized).unwrap();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let e = embed(&w, LaplacianKind::Unnormalized, 2).unwrap();
        assert!(e.eigenvalues[0].abs() < 1e-12);
        assert!((e.eigenvalues[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn path_graph_spectrum() {
        let e = embed(&path3(), LaplacianKind::Unnormalized, 3).unwrap();
        for (got, want) in e.eigenvalues.iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let first = e.vectors.column(0);
        assert!(first.iter().all(|x| (x - first[0]).abs() < 1e-10));
        assert!(first[0] > 0.0);
    }

    #[test]
    fn zero_degree_named() {
        let w = kernel(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]));
        assert!(matches!(laplacian(&w, LaplacianKind::Symmetric), Err(Error::ZeroDegree { node: 0 })));
    }

    #[test]
    fn kmeans_splits_blobs() {
        let data = DMatrix::from_column_slice(6, 1, &[0.0, 0.1, -0.1, 10.0, 10.2, 9.9]);
        let mut rng = RngHandle::new(4).stream();
        let r = kmeans(&data, 2, 3, &mut rng).unwrap();
        assert_eq!(r.labels[0], r.labels[1]);
        assert_eq!(r.labels[3], r.labels[5]);
        assert_ne!(r.labels[0], r.labels[3]);
    }

    #[test]
    fn kmeans_identical_points() {
        let data = DMatrix::from_element(5, 2, 1.5);
        let mut rng = RngHandle::new(4).stream();
        let r = kmeans(&data, 2, 2, &mut rng).unwrap();
        assert_eq!(r.cost, 0.0);
    }

    #[test]
    fn accuracy_examples() {
        let truth = [0, 0, 1, 1];
        assert_eq!(accuracy(&truth, &truth).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1, 0, 0], &truth).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1, 0, 1], &truth).unwrap(), 0.5);
        assert!(accuracy(&[0], &truth).is_err());
    }
}
