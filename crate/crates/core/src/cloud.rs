//! Point clouds and their CSV representation.
//!
//! The on-disk format is header-less CSV, one point per row, with an optional
//! trailing integer label column. Lines starting with `#` are comments; the
//! CLI uses them to embed the run configuration that produced a file.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Anything that can report a distance between two of its `len()` items.
pub trait PairwiseMetric: Sync {
    fn len(&self) -> usize;

    fn distance(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Euclidean distance. Every distance in the crate goes through this function
/// so accelerated and brute-force paths agree bit for bit.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    ambient_dim: usize,
    intrinsic_dim: usize,
    labels: Option<Vec<i64>>,
}

impl PointCloud {
    /// Builds a cloud from row-major coordinates.
    pub fn new(coords: Vec<f64>, ambient_dim: usize, intrinsic_dim: usize) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::invalid("ambient dimension must be at least 1"));
        }
        if coords.is_empty() {
            return Err(Error::Empty("point cloud has no points".into()));
        }
        if !coords.len().is_multiple_of(ambient_dim) {
            return Err(Error::invalid(format!(
                "{} coordinates do not divide into rows of length {ambient_dim}",
                coords.len()
            )));
        }
        if intrinsic_dim == 0 || intrinsic_dim > ambient_dim {
            return Err(Error::invalid(format!(
                "intrinsic dimension {intrinsic_dim} must lie in 1..={ambient_dim}"
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite coordinate in point {}",
                pos / ambient_dim
            )));
        }
        Ok(Self {
            coords,
            ambient_dim,
            intrinsic_dim,
            labels: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], intrinsic_dim: usize) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Empty("point cloud has no points".into()))?;
        if let Some(i) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::invalid(format!("row {i} has inconsistent length")));
        }
        Self::new(rows.concat(), dim, intrinsic_dim)
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::invalid(format!(
                "{} labels for {} points",
                labels.len(),
                self.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.ambient_dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.ambient_dim)
    }

    /// Same cloud with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut out = Self::new(
            self.coords.iter().map(|c| c * factor).collect(),
            self.ambient_dim,
            self.intrinsic_dim,
        )?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    /// Cloud with extra points appended (labels are dropped).
    pub fn extended(&self, extra: &[Vec<f64>]) -> Result<Self> {
        let mut coords = self.coords.clone();
        for p in extra {
            if p.len() != self.ambient_dim {
                return Err(Error::invalid("appended point has wrong dimension"));
            }
            coords.extend_from_slice(p);
        }
        Self::new(coords, self.ambient_dim, self.intrinsic_dim)
    }

    /// Serializes in the CSV format read by [`load_point_cloud`].
    pub fn to_csv(&self, header: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(h) = header {
            for line in h.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        for (i, p) in self.points().enumerate() {
            let mut first = true;
            for c in p {
                if !first {
                    out.push(',');
                }
                first = false;
                let _ = write!(out, "{c}");
            }
            if let Some(labels) = &self.labels {
                let _ = write!(out, ",{}", labels[i]);
            }
            out.push('\n');
        }
        out
    }
}

impl PairwiseMetric for PointCloud {
    fn len(&self) -> usize {
        PointCloud::len(self)
    }

    #[inline]
    fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.point(i), self.point(j))
    }
}

/// Parses CSV text. With `has_labels`, the last column is read as an integer label.
pub fn parse_point_cloud(text: &str, intrinsic_dim: usize, has_labels: bool) -> Result<PointCloud> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut coords = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let n_fields = record.len();
        let n_coords = if has_labels { n_fields.saturating_sub(1) } else { n_fields };
        if n_coords == 0 {
            return Err(Error::Parse {
                line,
                message: "row has no coordinates".into(),
            });
        }
        match width {
            None => width = Some(n_coords),
            Some(w) if w != n_coords => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {w} coordinates, found {n_coords}"),
                })
            }
            _ => {}
        }
        for field in record.iter().take(n_coords) {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("'{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite coordinate '{field}'"),
                });
            }
            coords.push(v);
        }
        if has_labels {
            let field = &record[n_fields - 1];
            let label: i64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("label '{field}' is not an integer"),
            })?;
            labels.push(label);
        }
    }
    let width = width.ok_or_else(|| Error::Empty("no data rows".into()))?;
    let intrinsic = if intrinsic_dim == 0 { width } else { intrinsic_dim };
    let cloud = PointCloud::new(coords, width, intrinsic)?;
    if has_labels {
        cloud.with_labels(labels)
    } else {
        Ok(cloud)
    }
}

/// Reads a point cloud from disk. `intrinsic_dim == 0` means "use the ambient dimension".
pub fn load_point_cloud(
    path: impl AsRef<Path>,
    intrinsic_dim: usize,
    has_labels: bool,
) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_point_cloud(&text, intrinsic_dim, has_labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_points() {
        let c = parse_point_cloud("0,0\n1,0\n0,1", 2, false).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.ambient_dim(), 2);
        assert_eq!(c.point(2), &[0.0, 1.0]);
    }

    #[test]
    fn parses_label_column() {
        let c = parse_point_cloud("0,0,1\n1,1,2", 2, true).unwrap();
        assert_eq!(c.labels(), Some(&[1, 2][..]));
        assert_eq!(c.ambient_dim(), 2);
    }

    #[test]
    fn bad_number_reports_line() {
        match parse_point_cloud("0,abc", 1, false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_point_cloud("0,0\n1,1\n2,x", 2, false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse_point_cloud("", 2, false), Err(Error::Empty(_))));
        assert!(matches!(
            parse_point_cloud("# only a comment\n", 2, false),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(matches!(
            parse_point_cloud("0,0\n1,0,3", 2, false),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn comments_are_skipped() {
        let c = parse_point_cloud("# header\n1.5,2\n# mid\n3,4\n", 2, false).unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(PointCloud::new(vec![0.0, 1.0], 2, 3).is_err());
        assert!(PointCloud::new(vec![0.0, f64::NAN], 2, 1).is_err());
        assert!(PointCloud::new(vec![], 2, 1).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let c = PointCloud::new(vec![0.1, 1.0 / 3.0, -2.5e-300, 7.0], 2, 2)
            .unwrap()
            .with_labels(vec![3, -1])
            .unwrap();
        let back = parse_point_cloud(&c.to_csv(Some("run header")), 2, true).unwrap();
        assert_eq!(c, back);
    }
}
