//! Sparse symmetric neighbor graphs with raw (unpowered) edge lengths.
//!
//! Lengths are stored as plain Euclidean or intrinsic distances so a single
//! graph can be queried at many exponents; [`power_weights`] applies the
//! exponent on demand.

use serde::{Deserialize, Serialize};

use crate::cloud::PairwiseMetric;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Neighborhood {
    Knn(usize),
    Complete,
    Custom,
}

/// Undirected graph in compressed sparse row form. Each row lists its
/// neighbors in increasing index order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    lengths: Vec<f64>,
    neighborhood: Neighborhood,
}

impl NeighborGraph {
    /// Builds a symmetric graph from undirected edges. Duplicate edges are
    /// merged and self-loops are ignored. Zero-length edges between coincident
    /// points are kept.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        neighborhood: Neighborhood,
    ) -> Result<Self> {
        let mut undirected: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, len) in edges {
            if i >= n || j >= n {
                return Err(Error::NodeOutOfRange { node: i.max(j), n });
            }
            if i == j {
                continue;
            }
            if !(len.is_finite() && len >= 0.0) {
                return Err(Error::invalid(format!("edge ({i}, {j}) has length {len}")));
            }
            undirected.push((i, j, len));
        }

        // Bucket both directions by source, then sort and dedup each row.
        let mut starts = vec![0usize; n + 1];
        for &(i, j, _) in &undirected {
            starts[i + 1] += 1;
            starts[j + 1] += 1;
        }
        for i in 0..n {
            starts[i + 1] += starts[i];
        }
        let mut fill = starts.clone();
        let mut slots = vec![(0usize, 0.0f64); starts[n]];
        for &(i, j, len) in &undirected {
            slots[fill[i]] = (j, len);
            fill[i] += 1;
            slots[fill[j]] = (i, len);
            fill[j] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(slots.len());
        let mut lengths = Vec::with_capacity(slots.len());
        offsets.push(0);
        for i in 0..n {
            let row = &mut slots[starts[i]..starts[i + 1]];
            row.sort_unstable_by_key(|e| e.0);
            let mut last = usize::MAX;
            for &(j, len) in row.iter() {
                if j != last {
                    targets.push(j);
                    lengths.push(len);
                    last = j;
                }
            }
            offsets.push(targets.len());
        }
        Ok(Self {
            n,
            offsets,
            targets,
            lengths,
            neighborhood,
        })
    }

    /// Complete graph over all items of `metric`.
    pub fn complete<M: PairwiseMetric + ?Sized>(metric: &M) -> Self {
        let n = metric.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(n * n.saturating_sub(1));
        let mut lengths = Vec::with_capacity(n * n.saturating_sub(1));
        offsets.push(0);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                targets.push(j);
                lengths.push(metric.distance(i, j));
            }
            offsets.push(targets.len());
        }
        Self {
            n,
            offsets,
            targets,
            lengths,
            neighborhood: Neighborhood::Complete,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighborhood(&self) -> Neighborhood {
        self.neighborhood
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// True when every pair of distinct nodes is joined by an edge.
    pub fn is_dense(&self) -> bool {
        self.n > 1 && self.targets.len() == self.n * (self.n - 1)
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.lengths[range].iter().copied())
    }

    #[inline]
    pub(crate) fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    #[inline]
    pub(crate) fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.targets[self.row_range(i)].binary_search(&j).is_ok()
    }

    pub fn edge_length(&self, i: usize, j: usize) -> Option<f64> {
        let range = self.row_range(i);
        self.targets[range.clone()]
            .binary_search(&j)
            .ok()
            .map(|pos| self.lengths[range.start + pos])
    }

    /// Undirected edges `(i, j, length)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, len)| (i, j, len))
        })
    }

    /// Copy of this graph with extra undirected edges added.
    pub fn with_extra_edges(&self, extra: &[(usize, usize, f64)]) -> Result<Self> {
        Self::from_edges(
            self.n,
            self.edges().chain(extra.iter().copied()),
            Neighborhood::Custom,
        )
    }

    /// Number of connected components (isolated nodes count individually).
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut stack = Vec::new();
        let mut count = 0;
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for (v, _) in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }
}

/// Exponent applied to edge lengths.
///
/// `p >= 1` yields a metric. Exponents in `(0, 1)` are accepted only through
/// [`Power::non_metric`]: the resulting `l_p` violates the triangle
/// inequality, though its `p`-th power does not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Power(f64);

impl Power {
    pub fn metric(p: f64) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::invalid(format!(
                "power p={p} must be finite and >= 1 (use the non-metric variant for 0 < p < 1)"
            )));
        }
        Ok(Self(p))
    }

    pub fn non_metric(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 0.0 {
            return Err(Error::invalid(format!("power p={p} must be finite and > 0")));
        }
        Ok(Self(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Edge weights `length^p` aligned with the graph's CSR storage.
///
/// When raw powers would leave the comfortable range of `f64` (large `p`),
/// lengths are divided by `scale` before powering; path values are then
/// `scale * sum^(1/p)`.
#[derive(Debug, Clone)]
pub struct PoweredWeights {
    pub(crate) weights: Vec<f64>,
    scale: f64,
    p: f64,
    int_p: Option<i32>,
}

const EXP_LIMIT: f64 = 600.0;

impl PoweredWeights {
    fn choose_scale(min_len: f64, max_len: f64, p: f64) -> f64 {
        let hi = p * max_len.ln();
        let lo = p * min_len.ln();
        if hi.abs() > EXP_LIMIT || lo.abs() > EXP_LIMIT {
            max_len
        } else {
            1.0
        }
    }

    /// Weights for an arbitrary list of lengths with a scale chosen from the
    /// supplied range.
    pub(crate) fn for_range(min_len: f64, max_len: f64, p: f64) -> Self {
        let scale = if min_len > 0.0 && max_len.is_finite() && max_len > 0.0 {
            Self::choose_scale(min_len, max_len, p)
        } else {
            1.0
        };
        let int_p = (p.fract() == 0.0 && (2.0..=64.0).contains(&p)).then_some(p as i32);
        Self {
            weights: Vec::new(),
            scale,
            p,
            int_p,
        }
    }

    #[inline]
    pub fn weight_of(&self, length: f64) -> f64 {
        if self.p == 1.0 && self.scale == 1.0 {
            length
        } else if let Some(ip) = self.int_p {
            (length / self.scale).powi(ip)
        } else {
            (length / self.scale).powf(self.p)
        }
    }

    /// Maps an accumulated powered sum back to a distance.
    #[inline]
    pub fn value_of(&self, powered_sum: f64) -> f64 {
        if self.p == 1.0 {
            return self.scale * powered_sum;
        }
        self.scale * powered_sum.powf(1.0 / self.p)
    }

    /// Maps an accumulated powered sum to the powered cost `value^p`.
    #[inline]
    pub fn powered_cost_of(&self, powered_sum: f64) -> f64 {
        if self.scale == 1.0 {
            powered_sum
        } else {
            self.scale.powf(self.p) * powered_sum
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }
}

/// Powers every edge length of `graph`.
pub fn power_weights(graph: &NeighborGraph, power: Power) -> PoweredWeights {
    let p = power.value();
    let (lo, hi) = graph
        .lengths
        .iter()
        .filter(|&&l| l > 0.0)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| (lo.min(l), hi.max(l)));
    let mut w = PoweredWeights::for_range(lo, hi, p);
    w.weights = graph.lengths.iter().map(|&l| w.weight_of(l)).collect();
    w
}
