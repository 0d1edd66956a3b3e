//! Dense pairwise distance matrices.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cloud::{PairwiseMetric, PointCloud};
use crate::error::{Error, Result};

/// What the entries of a [`DistanceMatrix`] measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricKind {
    Euclidean,
    /// Power-weighted shortest path distance with exponent `p`.
    Pwspd { p: f64 },
    /// Powered path cost, i.e. the `p`-th power of the PWSPD.
    PwspdPowered { p: f64 },
    LongestLeg,
    DensityStretched { p: f64 },
    /// Externally supplied metric (e.g. intrinsic geodesic distances).
    Supplied,
}

impl MetricKind {
    pub fn power(&self) -> Option<f64> {
        match self {
            MetricKind::Euclidean => Some(1.0),
            MetricKind::Pwspd { p }
            | MetricKind::PwspdPowered { p }
            | MetricKind::DensityStretched { p } => Some(*p),
            MetricKind::LongestLeg | MetricKind::Supplied => None,
        }
    }
}

/// Symmetric `n x n` matrix of nonnegative distances. `+inf` marks
/// unreachable pairs in graph metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: DMatrix<f64>,
    kind: MetricKind,
    normalized: bool,
}

/// Compact description written next to exported matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSummary {
    pub n: usize,
    pub p: Option<f64>,
    pub metric: MetricKind,
    pub normalized: bool,
    pub unreachable_pairs: usize,
    pub checksum: String,
}

impl DistanceMatrix {
    /// Wraps `values` after checking shape, symmetry, diagonal and sign.
    pub fn new(values: DMatrix<f64>, kind: MetricKind, normalized: bool) -> Result<Self> {
        let n = values.nrows();
        if n == 0 || values.ncols() != n {
            return Err(Error::invalid(format!(
                "distance matrix must be square and nonempty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let v = values[(i, j)];
                if v.is_nan() || v < 0.0 {
                    return Err(Error::invalid(format!("invalid entry {v} at ({i}, {j})")));
                }
                if v != values[(j, i)] {
                    return Err(Error::NonSymmetricMetric { i, j });
                }
            }
        }
        Ok(Self {
            values,
            kind,
            normalized,
        })
    }

    pub(crate) fn from_trusted(values: DMatrix<f64>, kind: MetricKind, normalized: bool) -> Self {
        debug_assert!(values.is_square());
        Self {
            values,
            kind,
            normalized,
        }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Entries above the diagonal, row by row.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.values[(i, j)]);
            }
        }
        out
    }

    pub fn unreachable_pairs(&self) -> usize {
        self.upper_triangle().iter().filter(|v| v.is_infinite()).count()
    }

    /// Entrywise `x -> x^p`. Turns an `l_p` matrix into powered path costs.
    pub fn powered(&self, p: f64) -> Self {
        let kind = match self.kind {
            MetricKind::Pwspd { p: q } if q == p => MetricKind::PwspdPowered { p },
            other => other,
        };
        Self {
            values: self.values.map(|v| v.powf(p)),
            kind,
            normalized: self.normalized,
        }
    }

    /// Entrywise multiplication by a nonnegative constant.
    pub fn scaled(&self, factor: f64, normalized: bool) -> Self {
        Self {
            values: self.values.map(|v| v * factor),
            kind: self.kind,
            normalized,
        }
    }

    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for i in 0..self.n() {
            for j in 0..self.n() {
                hasher.update(self.values[(i, j)].to_le_bytes());
            }
        }
        hasher
            .finalize()
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }

    pub fn summary(&self) -> MatrixSummary {
        MatrixSummary {
            n: self.n(),
            p: self.kind.power(),
            metric: self.kind,
            normalized: self.normalized,
            unreachable_pairs: self.unreachable_pairs(),
            checksum: self.checksum(),
        }
    }

    /// Dense CSV, one matrix row per line. Floats use the shortest
    /// representation that parses back to the same bits.
    pub fn to_csv(&self, header: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(h) = header {
            for line in h.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        for i in 0..self.n() {
            for j in 0..self.n() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", self.values[(i, j)]);
            }
            out.push('\n');
        }
        out
    }

    /// Reads a dense CSV matrix (e.g. a user-supplied intrinsic metric).
    pub fn from_csv(text: &str, kind: MetricKind) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|_| Error::Parse {
                        line: idx + 1,
                        message: format!("'{}' is not a number", f.trim()),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty("distance matrix has no rows".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Parse {
                line: bad + 1,
                message: format!("expected {n} columns"),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]), kind, false)
    }
}

impl PairwiseMetric for DistanceMatrix {
    fn len(&self) -> usize {
        self.n()
    }

    #[inline]
    fn distance(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }
}

/// All pairwise Euclidean distances. Rows are computed in parallel and
/// mirrored from the upper triangle so the result is exactly symmetric.
pub fn pairwise_euclidean(cloud: &PointCloud) -> DistanceMatrix {
    let n = cloud.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| cloud.distance(i, j)).collect())
        .collect();
    let mut values = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (offset, &d) in row.iter().enumerate() {
            let j = i + 1 + offset;
            values[(i, j)] = d;
            values[(j, i)] = d;
        }
    }
    DistanceMatrix::from_trusted(values, MetricKind::Euclidean, false)
}
