//! kNN 1-spanner theory and its empirical verification.
//!
//! A subgraph `H` of the complete power-weighted graph `G` is a 1-spanner
//! when every shortest-path distance in `H` equals the one in `G`. This
//! holds iff `H` contains every critical edge, an edge that is itself the
//! shortest path between its endpoints.

use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{euclidean, PointCloud};
use crate::error::{Error, Result};
use crate::experiments::sampling::{sample_points, Distribution};
use crate::graph::{power_weights, NeighborGraph, Neighborhood, Power, PoweredWeights};
use crate::neighbors::{knn_table, KnnTable};
use crate::pwspd::{dijkstra, dijkstra_sparse, Stop};
use crate::rng::RngHandle;
use crate::stats::linear_fit;

/// Default success threshold for spanner checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Inputs of the theoretical neighbor-count bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpannerParams {
    pub p: f64,
    pub d: usize,
    pub n: usize,
    /// Regularity constant of the data manifold, at least 1.
    pub kappa: f64,
    /// `f_max / f_min`, at least 1.
    pub density_ratio: f64,
}

impl SpannerParams {
    pub fn new(p: f64, d: usize, n: usize, kappa: f64, density_ratio: f64) -> Result<Self> {
        let params = Self {
            p,
            d,
            n,
            kappa,
            density_ratio,
        };
        params.validate()?;
        Ok(params)
    }

    /// Uniform density on a flat domain: `kappa = 1`, `density_ratio = 1`.
    pub fn uniform(p: f64, d: usize, n: usize) -> Result<Self> {
        Self::new(p, d, n, 1.0, 1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(Error::invalid(format!("spanner bounds need p > 1, got {}", self.p)));
        }
        if self.d == 0 || self.n < 2 {
            return Err(Error::invalid("spanner bounds need d >= 1 and n >= 2"));
        }
        if !(self.kappa >= 1.0) || !(self.density_ratio >= 1.0) {
            return Err(Error::invalid("kappa and density_ratio must be >= 1"));
        }
        Ok(())
    }

    /// Coefficient of `ln n` in the Euclidean bound.
    pub fn log_coefficient(&self) -> f64 {
        let base = 4.0 / (4f64.powf(1.0 - 1.0 / self.p) - 1.0);
        self.kappa * self.kappa * 3.0 * self.density_ratio * base.powf(self.d as f64 / 2.0)
    }
}

/// Neighbor count above which the kNN graph is a 1-spanner with high
/// probability, for samples from a density on a `d`-dimensional domain.
pub fn theoretical_k_euclidean(params: &SpannerParams) -> Result<f64> {
    params.validate()?;
    Ok(1.0 + params.log_coefficient() * (params.n as f64).ln())
}

/// The same bound for intrinsic metrics in the small-scale limit, where the
/// curvature constant drops out.
pub fn theoretical_k_intrinsic(params: &SpannerParams) -> Result<f64> {
    let flat = SpannerParams {
        kappa: 1.0,
        ..*params
    };
    theoretical_k_euclidean(&flat)
}

/// Radius of the ball about the midpoint of a segment of length `s` that is
/// contained in the `p`-elongated set with parameter `alpha`. Zero when the
/// set is empty.
pub fn elongated_ball_radius(s: f64, alpha: f64, p: f64) -> f64 {
    let inner = alpha.powf(2.0 / p) / 4f64.powf(1.0 / p) - 0.25;
    if inner <= 0.0 {
        0.0
    } else {
        s * inner.sqrt()
    }
}

const CRITICAL_TOL: f64 = 1e-12;

/// Whether edge `{i, j}` of the complete graph is itself a shortest path,
/// up to a relative tolerance of `1e-12`.
pub fn is_critical_edge(cloud: &PointCloud, p: f64, i: usize, j: usize) -> Result<bool> {
    let n = cloud.len();
    for node in [i, j] {
        if node >= n {
            return Err(Error::NodeOutOfRange { node, n });
        }
    }
    if i == j {
        return Err(Error::invalid("an edge needs two distinct endpoints"));
    }
    Power::non_metric(p)?;
    let s = euclidean(cloud.point(i), cloud.point(j));
    if s == 0.0 {
        return Ok(true);
    }
    // Lengths measured in units of the edge, so the direct cost is 1.
    let edges = (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).filter_map(|(a, b)| {
        if (a, b) == (i.min(j), i.max(j)) {
            None
        } else {
            Some((a, b, (euclidean(cloud.point(a), cloud.point(b)) / s).powf(p)))
        }
    });
    let g = NeighborGraph::from_edges(n, edges, Neighborhood::Custom)?;
    let search = dijkstra_sparse(&g, g.lengths(), i, Stop::AtTarget(j));
    Ok(1.0 - search.dist[j] <= CRITICAL_TOL)
}

/// All critical edges `(i, j)` with `i < j` of the complete graph.
pub fn critical_edges(cloud: &PointCloud, p: f64) -> Result<Vec<(usize, usize)>> {
    let power = Power::non_metric(p)?;
    let g = NeighborGraph::complete(cloud);
    let w = power_weights(&g, power);
    let n = cloud.len();
    let rows: Vec<Vec<(usize, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let dist = dijkstra(&g, w.as_slice(), i, Stop::Never).dist;
            ((i + 1)..n)
                .filter(|&j| {
                    let direct = w.weight_of(euclidean(cloud.point(i), cloud.point(j)));
                    let alt = (0..n)
                        .filter(|&z| z != i && z != j)
                        .map(|z| dist[z] + w.weight_of(euclidean(cloud.point(z), cloud.point(j))))
                        .fold(f64::INFINITY, f64::min);
                    direct - alt <= CRITICAL_TOL * direct.max(1.0)
                })
                .map(|j| (i, j))
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

enum Scan {
    /// Some pair is off by more than the tolerance.
    Exceeds,
    /// Complete-graph edges shorter than the subgraph distance.
    Violations(Vec<(usize, usize, f64)>),
}

/// Certificate that `h` realizes complete-graph distances. Taking pairs in
/// order of direct cost, a pair is settled when it is an edge of `h` or
/// when some third point `z` gives `w(i,z) + w(z,j) <= w(i,j)`, since both
/// legs are cheaper and settled earlier. Remaining pairs are compared with
/// a Dijkstra search on `h`, bounded by their direct costs.
fn scan_pairs(
    cloud: &PointCloud,
    h: &NeighborGraph,
    witnesses: &KnnTable,
    w: &PoweredWeights,
    fail_above: f64,
) -> Scan {
    let n = cloud.len();
    let failed = AtomicBool::new(false);
    let dist_to = |a: usize, b: usize| euclidean(cloud.point(a), cloud.point(b));
    let witnessed = |i: usize, j: usize, direct: f64| {
        witnesses
            .neighbors(i)
            .iter()
            .chain(witnesses.neighbors(j))
            .any(|&z| {
                if z == i || z == j {
                    return false;
                }
                let a = w.weight_of(dist_to(i, z));
                let b = w.weight_of(dist_to(z, j));
                a > 0.0 && b > 0.0 && a + b <= direct
            })
    };
    let per_source: Vec<Option<Vec<(usize, usize, f64)>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if failed.load(AtomicOrdering::Relaxed) {
                return None;
            }
            let pending: Vec<(usize, f64)> = ((i + 1)..n)
                .filter(|&j| !h.has_edge(i, j))
                .map(|j| (j, dist_to(i, j)))
                .filter(|&(j, len)| !witnessed(i, j, w.weight_of(len)))
                .collect();
            if pending.is_empty() {
                return Some(Vec::new());
            }
            let slack = if fail_above.is_finite() { 2.0 * fail_above } else { 0.0 };
            let reach = pending.iter().map(|p| p.1).fold(0.0, f64::max) + slack;
            let dist = dijkstra_sparse(h, w.as_slice(), i, Stop::Beyond(w.weight_of(reach))).dist;
            let mut found = Vec::new();
            for (j, len) in pending {
                if dist[j] <= w.weight_of(len) {
                    continue;
                }
                // The complete-graph distance is at most `len`.
                if w.value_of(dist[j]) - len > fail_above {
                    failed.store(true, AtomicOrdering::Relaxed);
                    return None;
                }
                found.push((i, j, len));
            }
            Some(found)
        })
        .collect();
    if failed.load(AtomicOrdering::Relaxed) {
        return Scan::Exceeds;
    }
    Scan::Violations(per_source.into_iter().flatten().flatten().collect())
}

/// Largest pairwise gap between `h` and `h` augmented with `extra`, in
/// which all complete-graph distances are realized.
fn gap_with_extra_edges(h: &NeighborGraph, w: &PoweredWeights, extra: &[(usize, usize, f64)]) -> Result<f64> {
    let full = h.with_extra_edges(extra)?;
    let full_w: Vec<f64> = full.lengths().iter().map(|&l| w.weight_of(l)).collect();
    let n = h.n();
    let gaps: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let sub = dijkstra_sparse(h, w.as_slice(), i, Stop::Never).dist;
            let all = dijkstra_sparse(&full, &full_w, i, Stop::Never).dist;
            ((i + 1)..n)
                .map(|j| {
                    if sub[j].is_infinite() {
                        f64::INFINITY
                    } else {
                        w.value_of(sub[j]) - w.value_of(all[j])
                    }
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::InvalidNeighborCount { k, n });
    }
    Ok(())
}

fn verify_graph(
    cloud: &PointCloud,
    h: &NeighborGraph,
    witnesses: &KnnTable,
    power: Power,
    tol: f64,
) -> Result<bool> {
    let w = power_weights(h, power);
    match scan_pairs(cloud, h, witnesses, &w, tol) {
        Scan::Exceeds => Ok(false),
        Scan::Violations(v) if v.is_empty() => Ok(true),
        Scan::Violations(v) => Ok(gap_with_extra_edges(h, &w, &v)? <= tol),
    }
}

/// Whether the symmetric kNN graph reproduces every complete-graph `l_p`
/// distance within `tol`. Disconnected kNN graphs fail.
pub fn verify_one_spanner(cloud: &PointCloud, p: f64, k: usize, tol: f64) -> Result<bool> {
    check_k(cloud.len(), k)?;
    let power = Power::metric(p)?;
    let table = knn_table(cloud, k)?;
    verify_graph(cloud, &table.graph(k)?, &table, power, tol)
}

/// Largest absolute difference between `l_p` on the kNN graph and on the
/// complete graph; `+inf` when the kNN graph is disconnected.
pub fn spanner_discrepancy(cloud: &PointCloud, p: f64, k: usize) -> Result<f64> {
    check_k(cloud.len(), k)?;
    let power = Power::metric(p)?;
    let table = knn_table(cloud, k)?;
    let h = table.graph(k)?;
    let w = power_weights(&h, power);
    match scan_pairs(cloud, &h, &table, &w, f64::INFINITY) {
        Scan::Exceeds => Ok(f64::INFINITY),
        Scan::Violations(v) if v.is_empty() => Ok(0.0),
        Scan::Violations(v) => gap_with_extra_edges(&h, &w, &v),
    }
}

/// Smallest `k <= k_max` for which the kNN graph is a 1-spanner within
/// `tol`, or `None` when even `k_max` fails.
///
/// Critical edges are read off a kNN graph with a trial size that doubles
/// until the graph is a spanner itself; once it is, its critical edges are
/// those of the complete graph and the answer is the largest kNN rank
/// among them.
pub fn minimal_spanner_k(cloud: &PointCloud, p: f64, k_max: usize, tol: f64) -> Result<Option<usize>> {
    let n = cloud.len();
    if n < 2 {
        return Err(Error::invalid("spanner search needs at least two points"));
    }
    let k_max = k_max.min(n - 1);
    check_k(n, k_max)?;
    let power = Power::metric(p)?;
    let mut lo = 0;
    let mut k_try = k_max.min(FIRST_TRIAL_K);
    loop {
        let table = knn_table(cloud, k_try)?;
        let verify = |k: usize| -> Result<bool> { verify_graph(cloud, &table.graph(k)?, &table, power, tol) };
        let h = table.graph(k_try)?;
        let w = power_weights(&h, power);
        let (k_cand, ambiguous) = critical_ranks(cloud, &table, &h, &w, tol);
        if !ambiguous && k_cand > lo && verify(k_cand)? {
            return Ok(Some(k_cand));
        }
        if verify(k_try)? {
            // Monotone in k: binary search on (lo, hi] with hi known to succeed.
            let mut hi = k_try;
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if verify(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(hi));
        }
        if k_try == k_max {
            return Ok(None);
        }
        lo = k_try;
        k_try = (2 * k_try).min(k_max);
    }
}

const FIRST_TRIAL_K: usize = 8;

/// Largest kNN rank among edges of `h` that are critical within `h`, and
/// whether any edge sits within `tol` of being critical.
fn critical_ranks(
    cloud: &PointCloud,
    table: &KnnTable,
    h: &NeighborGraph,
    w: &PoweredWeights,
    tol: f64,
) -> (usize, bool) {
    let n = h.n();
    let weights = w.as_slice();
    let per_source: Vec<(usize, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = cloud.point(i);
            // A cheaper two-leg route settles an edge as non-critical.
            let two_leg = |j: usize, len: f64| {
                let direct = w.weight_of(len);
                let xj = cloud.point(j);
                h.neighbors(i).chain(h.neighbors(j)).any(|(z, _)| {
                    if z == i || z == j {
                        return false;
                    }
                    let a = w.weight_of(euclidean(xi, cloud.point(z)));
                    let b = w.weight_of(euclidean(cloud.point(z), xj));
                    a + b < direct && w.value_of(a + b) - len < -tol
                })
            };
            let open: Vec<(usize, f64)> = h
                .neighbors(i)
                .filter(|&(j, len)| j > i && !two_leg(j, len))
                .collect();
            if open.is_empty() {
                return (0, false);
            }
            let max_len = open.iter().map(|e| e.1).fold(0.0, f64::max);
            let bound = w.weight_of(max_len + 2.0 * tol);
            let search = dijkstra_sparse(h, weights, i, Stop::Beyond(bound));
            let first_hop = search.first_hops(i);
            let dist = &search.dist;
            let mut k_needed = 0;
            let mut ambiguous = false;
            for (j, len) in open {
                let alt = h
                    .neighbors(j)
                    .zip(&weights[h.row_range(j)])
                    // Paths leaving through `j` reuse the edge under test.
                    .filter(|((u, _), _)| *u != i && first_hop[*u] != j)
                    .map(|((u, _), wu)| dist[u] + wu)
                    .fold(f64::INFINITY, f64::min);
                let margin = w.value_of(alt) - len;
                if margin > tol {
                    let rank = table.edge_rank(i, j).expect("edge of the kNN graph");
                    k_needed = k_needed.max(rank);
                } else if margin >= -tol {
                    ambiguous = true;
                }
            }
            (k_needed, ambiguous)
        })
        .collect();
    per_source
        .into_iter()
        .fold((1, false), |(k, a), (ki, ai)| (k.max(ki), a || ai))
}

/// Configuration of a success-fraction heatmap over `(n, k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapConfig {
    pub distribution: Distribution,
    pub d: usize,
    pub p: f64,
    pub n_grid: Vec<usize>,
    pub k_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl HeatmapConfig {
    pub fn validate(&self) -> Result<()> {
        Power::metric(self.p)?;
        if self.d == 0 {
            return Err(Error::invalid("d must be >= 1"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        for (name, grid) in [("n", &self.n_grid), ("k", &self.k_grid)] {
            if grid.is_empty() {
                return Err(Error::invalid(format!("{name} grid is empty")));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("{name} grid must be strictly ascending")));
            }
        }
        if self.n_grid[0] < 2 || self.k_grid[0] == 0 {
            return Err(Error::invalid("need n >= 2 and k >= 1"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::invalid("tolerance must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapResult {
    pub n_grid: Vec<usize>,
    pub k_grid: Vec<usize>,
    /// `success_fraction[a][b]` is the success rate at `n_grid[a]`, `k_grid[b]`.
    pub success_fraction: Vec<Vec<f64>>,
    pub trials_per_cell: usize,
    /// Smallest spanning `k` per trial, `None` when above the grid.
    pub minimal_k: Vec<Vec<Option<usize>>>,
    /// Smallest grid `k` at which every trial succeeded, per `n`.
    pub transition_k: Vec<Option<usize>>,
    /// Least-squares slope of `transition_k` against `ln n`.
    pub transition_slope: Option<f64>,
    pub transition_intercept: Option<f64>,
    /// Number of `n` values with no all-success `k`, left out of the fit.
    pub skipped_columns: usize,
}

/// Runs the heatmap experiment: for every `n`, `trials` independent samples
/// are drawn and the minimal spanning `k` of each is located; a cell
/// `(n, k)` counts a trial as a success when that minimum is at most `k`.
pub fn spanner_heatmap(config: &HeatmapConfig) -> Result<HeatmapResult> {
    spanner_heatmap_with_progress(config, &|_, _| {})
}

/// As [`spanner_heatmap`], calling `progress(n, column_index)` after each
/// `n` finishes.
pub fn spanner_heatmap_with_progress(
    config: &HeatmapConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<HeatmapResult> {
    config.validate()?;
    let root = RngHandle::new(config.seed);
    let k_top = *config.k_grid.last().expect("validated nonempty");
    let mut minimal_k = Vec::with_capacity(config.n_grid.len());
    for (a, &n) in config.n_grid.iter().enumerate() {
        let column: Result<Vec<Option<usize>>> = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = root.derive(&[a as u64, t as u64]).stream();
                let cloud = sample_points(config.distribution, n, config.d, &mut rng)?;
                minimal_spanner_k(&cloud, config.p, k_top, config.tolerance)
            })
            .collect();
        minimal_k.push(column?);
        progress(n, a);
    }

    let success_fraction: Vec<Vec<f64>> = minimal_k
        .iter()
        .map(|col| {
            config
                .k_grid
                .iter()
                .map(|&k| {
                    let ok = col.iter().filter(|m| m.is_some_and(|m| m <= k)).count();
                    ok as f64 / config.trials as f64
                })
                .collect()
        })
        .collect();
    let transition_k: Vec<Option<usize>> = success_fraction
        .iter()
        .map(|row| {
            row.iter()
                .position(|&f| f == 1.0)
                .map(|b| config.k_grid[b])
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = config
        .n_grid
        .iter()
        .zip(&transition_k)
        .filter_map(|(&n, k)| k.map(|k| ((n as f64).ln(), k as f64)))
        .unzip();
    let skipped_columns = config.n_grid.len() - xs.len();
    let fit = if xs.len() >= 2 { linear_fit(&xs, &ys).ok() } else { None };
    Ok(HeatmapResult {
        n_grid: config.n_grid.clone(),
        k_grid: config.k_grid.clone(),
        success_fraction,
        trials_per_cell: config.trials,
        minimal_k,
        transition_k,
        transition_slope: fit.as_ref().map(|f| f.slope),
        transition_intercept: fit.as_ref().map(|f| f.intercept),
        skipped_columns,
    })
}
