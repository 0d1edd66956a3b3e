//! Power-weighted shortest path distances.
//!
//! Edge weights are `length^p`; Dijkstra accumulates the additive powered
//! cost and the `1/p` root is taken only when a distance is reported. Ties
//! between equal-cost paths resolve to the smaller predecessor index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{DistanceMatrix, MetricKind};
use crate::error::{Error, Result};
use crate::graph::{power_weights, NeighborGraph, Power, PoweredWeights};

pub(crate) const NO_PRED: usize = usize::MAX;

/// A shortest path and its `l_p` length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    /// `(sum of leg^p)^(1/p)`; `+inf` when the target is unreachable.
    pub value: f64,
    /// Node sequence from source to target; empty when unreachable.
    pub nodes: Vec<usize>,
}

impl PathResult {
    pub fn unreachable() -> Self {
        Self {
            value: f64::INFINITY,
            nodes: Vec::new(),
        }
    }

    pub fn is_reachable(&self) -> bool {
        self.value.is_finite()
    }
}

/// Rescaling `l~_p = n^((p-1)/(p d)) l_p` that makes discrete distances
/// converge as the sample grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub sample_size: usize,
    pub intrinsic_dim: usize,
}

impl Normalization {
    pub fn factor(&self, p: f64) -> f64 {
        (self.sample_size as f64).powf((p - 1.0) / (p * self.intrinsic_dim as f64))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PwspdQueryConfig<'g> {
    pub graph: &'g NeighborGraph,
    pub power: Power,
    pub normalization: Option<Normalization>,
}

impl<'g> PwspdQueryConfig<'g> {
    pub fn new(graph: &'g NeighborGraph, power: Power) -> Self {
        Self {
            graph,
            power,
            normalization: None,
        }
    }

    /// Normalizes with `n = graph.n()` and the given intrinsic dimension.
    pub fn normalized(mut self, intrinsic_dim: usize) -> Result<Self> {
        if intrinsic_dim == 0 {
            return Err(Error::invalid("intrinsic dimension must be >= 1"));
        }
        self.normalization = Some(Normalization {
            sample_size: self.graph.n(),
            intrinsic_dim,
        });
        Ok(self)
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Result<Self> {
        if normalization.intrinsic_dim == 0 || normalization.sample_size == 0 {
            return Err(Error::invalid("normalization needs n >= 1 and d >= 1"));
        }
        self.normalization = Some(normalization);
        Ok(self)
    }

    pub fn p(&self) -> f64 {
        self.power.value()
    }

    fn factor(&self) -> f64 {
        self.normalization.map_or(1.0, |nz| nz.factor(self.p()))
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.graph.n() {
            return Err(Error::NodeOutOfRange {
                node,
                n: self.graph.n(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stop {
    Never,
    AtTarget(usize),
    /// Stop once this many nodes other than the source are settled.
    AfterSettled(usize),
    /// Do not settle nodes whose cost exceeds the bound.
    Beyond(f64),
}

#[derive(Debug, Clone)]
pub(crate) struct Search {
    pub dist: Vec<f64>,
    pub pred: Vec<usize>,
    pub settled: Vec<usize>,
}

impl Search {
    /// Second node on the path from `source` to each reached node, or
    /// `NO_PRED` for the source and unreached nodes.
    pub fn first_hops(&self, source: usize) -> Vec<usize> {
        let mut first = vec![NO_PRED; self.dist.len()];
        let resolve = |v: usize, first: &mut Vec<usize>| {
            let p = self.pred[v];
            if v != source && p != NO_PRED {
                first[v] = if p == source { v } else { first[p] };
            }
        };
        for &v in &self.settled {
            resolve(v, &mut first);
        }
        // Tentative nodes beyond a search bound hang off settled ones.
        for v in 0..self.dist.len() {
            if first[v] == NO_PRED {
                resolve(v, &mut first);
            }
        }
        first
    }

    pub fn path_to(&self, source: usize, target: usize) -> Vec<usize> {
        if !self.dist[target].is_finite() {
            return Vec::new();
        }
        let mut nodes = vec![target];
        let mut cur = target;
        while cur != source {
            cur = self.pred[cur];
            nodes.push(cur);
        }
        nodes.reverse();
        nodes
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed so BinaryHeap pops the smallest (cost, node).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[inline]
fn relax(dist: &mut [f64], pred: &mut [usize], u: usize, v: usize, cand: f64) -> bool {
    if cand < dist[v] {
        dist[v] = cand;
        pred[v] = u;
        true
    } else {
        if cand == dist[v] && u < pred[v] {
            pred[v] = u;
        }
        false
    }
}

/// Heap-based Dijkstra over the CSR graph with per-entry weights.
pub(crate) fn dijkstra_sparse(
    graph: &NeighborGraph,
    weights: &[f64],
    source: usize,
    stop: Stop,
) -> Search {
    let n = graph.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NO_PRED; n];
    let mut done = vec![false; n];
    let mut settled = Vec::new();
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    pred[source] = source;
    heap.push(Entry {
        cost: 0.0,
        node: source,
    });
    let targets = graph.targets();
    while let Some(Entry { cost, node: u }) = heap.pop() {
        if done[u] || cost > dist[u] {
            continue;
        }
        if let Stop::Beyond(bound) = stop {
            if cost > bound {
                break;
            }
        }
        done[u] = true;
        settled.push(u);
        match stop {
            Stop::AtTarget(t) if t == u => break,
            Stop::AfterSettled(k) if settled.len() > k => break,
            _ => {}
        }
        for idx in graph.row_range(u) {
            let v = targets[idx];
            if done[v] {
                continue;
            }
            let cand = cost + weights[idx];
            if relax(&mut dist, &mut pred, u, v, cand) {
                heap.push(Entry { cost: cand, node: v });
            }
        }
    }
    Search { dist, pred, settled }
}

/// Array-based O(n^2) Dijkstra for complete graphs.
pub(crate) fn dijkstra_dense(
    graph: &NeighborGraph,
    weights: &[f64],
    source: usize,
    stop: Stop,
) -> Search {
    let n = graph.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NO_PRED; n];
    let mut done = vec![false; n];
    let mut settled = Vec::with_capacity(n);
    dist[source] = 0.0;
    pred[source] = source;
    let targets = graph.targets();
    loop {
        let mut best = NO_PRED;
        let mut best_cost = f64::INFINITY;
        for v in 0..n {
            if !done[v] && dist[v] < best_cost {
                best = v;
                best_cost = dist[v];
            }
        }
        if best == NO_PRED {
            break;
        }
        if let Stop::Beyond(bound) = stop {
            if best_cost > bound {
                break;
            }
        }
        let u = best;
        done[u] = true;
        settled.push(u);
        match stop {
            Stop::AtTarget(t) if t == u => break,
            Stop::AfterSettled(k) if settled.len() > k => break,
            _ => {}
        }
        for idx in graph.row_range(u) {
            let v = targets[idx];
            if !done[v] {
                relax(&mut dist, &mut pred, u, v, best_cost + weights[idx]);
            }
        }
    }
    Search { dist, pred, settled }
}

pub(crate) fn dijkstra(graph: &NeighborGraph, weights: &[f64], source: usize, stop: Stop) -> Search {
    if graph.is_dense() {
        dijkstra_dense(graph, weights, source, stop)
    } else {
        dijkstra_sparse(graph, weights, source, stop)
    }
}

fn path_result(search: &Search, weights: &PoweredWeights, source: usize, target: usize) -> PathResult {
    let d = search.dist[target];
    if !d.is_finite() {
        return PathResult::unreachable();
    }
    PathResult {
        value: weights.value_of(d),
        nodes: search.path_to(source, target),
    }
}

/// Shortest paths from `source` to every node. Values are raw `l_p`
/// distances; normalization applies only to matrix outputs.
pub fn pwspd_single_source(config: &PwspdQueryConfig<'_>, source: usize) -> Result<Vec<PathResult>> {
    config.check_node(source)?;
    let w = power_weights(config.graph, config.power);
    let search = dijkstra(config.graph, w.as_slice(), source, Stop::Never);
    Ok((0..config.graph.n())
        .map(|t| path_result(&search, &w, source, t))
        .collect())
}

/// Shortest path between one pair, stopping as soon as the target settles.
pub fn pwspd_pair(config: &PwspdQueryConfig<'_>, source: usize, target: usize) -> Result<PathResult> {
    config.check_node(source)?;
    config.check_node(target)?;
    let w = power_weights(config.graph, config.power);
    let search = dijkstra(config.graph, w.as_slice(), source, Stop::AtTarget(target));
    Ok(path_result(&search, &w, source, target))
}

/// All-pairs `l_p` (or `l_p^H` on a subgraph), multiplied by the
/// normalization factor when configured. Unreachable pairs are `+inf`.
pub fn pwspd_all_pairs(config: &PwspdQueryConfig<'_>) -> DistanceMatrix {
    let graph = config.graph;
    let n = graph.n();
    let w = power_weights(graph, config.power);
    let factor = config.factor();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let search = dijkstra(graph, w.as_slice(), s, Stop::Never);
            ((s + 1)..n)
                .map(|t| {
                    let d = search.dist[t];
                    if d.is_finite() {
                        factor * w.value_of(d)
                    } else {
                        f64::INFINITY
                    }
                })
                .collect()
        })
        .collect();
    DistanceMatrix::from_trusted(
        mirror_upper(n, &rows),
        MetricKind::Pwspd { p: config.p() },
        config.normalization.is_some(),
    )
}

pub(crate) fn mirror_upper(n: usize, rows: &[Vec<f64>]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Minimax ("longest-leg") path distance: the smallest achievable maximum
/// edge length over paths joining each pair.
pub fn longest_leg_all_pairs(graph: &NeighborGraph) -> DistanceMatrix {
    let n = graph.n();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let best = minimax_from(graph, s);
            best[(s + 1)..].to_vec()
        })
        .collect();
    DistanceMatrix::from_trusted(mirror_upper(n, &rows), MetricKind::LongestLeg, false)
}

fn minimax_from(graph: &NeighborGraph, source: usize) -> Vec<f64> {
    let n = graph.n();
    let mut best = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    best[source] = 0.0;
    heap.push(Entry {
        cost: 0.0,
        node: source,
    });
    while let Some(Entry { cost, node: u }) = heap.pop() {
        if done[u] || cost > best[u] {
            continue;
        }
        done[u] = true;
        for (v, len) in graph.neighbors(u) {
            let cand = cost.max(len);
            if !done[v] && cand < best[v] {
                best[v] = cand;
                heap.push(Entry { cost: cand, node: v });
            }
        }
    }
    best
}

/// Result of a PWSPD nearest-neighbor query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnQueryResult {
    /// `(node, path)` pairs in increasing `(distance, index)` order.
    pub neighbors: Vec<(usize, PathResult)>,
    /// False when fewer than the requested number of nodes were reachable.
    pub complete: bool,
}

/// The `k_target` nearest nodes to `source` in `l_p`, found by a Dijkstra
/// search that stops after `k_target` nodes settle.
pub fn pwspd_knn_query(
    config: &PwspdQueryConfig<'_>,
    source: usize,
    k_target: usize,
) -> Result<KnnQueryResult> {
    config.check_node(source)?;
    let n = config.graph.n();
    if k_target == 0 || k_target >= n {
        return Err(Error::InvalidNeighborCount { k: k_target, n });
    }
    let w = power_weights(config.graph, config.power);
    let search = dijkstra(config.graph, w.as_slice(), source, Stop::AfterSettled(k_target));
    let neighbors: Vec<(usize, PathResult)> = search
        .settled
        .iter()
        .skip(1)
        .map(|&t| (t, path_result(&search, &w, source, t)))
        .collect();
    Ok(KnnQueryResult {
        complete: neighbors.len() == k_target,
        neighbors,
    })
}

/// `(sum over consecutive legs of length^p)^(1/p)` along an explicit path.
pub fn path_value(graph: &NeighborGraph, nodes: &[usize], p: f64) -> Option<f64> {
    let mut total = 0.0;
    for leg in nodes.windows(2) {
        total += graph.edge_length(leg[0], leg[1])?.powf(p);
    }
    Some(total.powf(1.0 / p))
}
