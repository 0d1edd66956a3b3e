use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::rng::RngHandle;

/// Two concentric noisy circles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoRings {
    pub radii: [f64; 2],
    pub counts: [usize; 2],
    /// Standard deviation of the radial noise.
    pub noise: f64,
}

impl Default for TwoRings {
    fn default() -> Self {
        Self {
            radii: [1.0, 2.0],
            counts: [500, 500],
            noise: 0.05,
        }
    }
}

/// Two discs joined by a long thin strip. The second disc holds fewer
/// points, so it is sampled at a lower density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongBottleneck {
    pub disc_radius: f64,
    /// Distance between disc centers.
    pub separation: f64,
    pub disc_counts: [usize; 2],
    pub strip_width: f64,
    pub strip_count: usize,
}

impl Default for LongBottleneck {
    fn default() -> Self {
        Self {
            disc_radius: 1.0,
            separation: 6.0,
            disc_counts: [400, 200],
            strip_width: 0.2,
            strip_count: 100,
        }
    }
}

/// Two stacked rectangles joined by a short bridge across their gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortBottleneck {
    pub rect_width: f64,
    pub rect_height: f64,
    pub gap: f64,
    pub rect_counts: [usize; 2],
    pub bridge_width: f64,
    pub bridge_count: usize,
}

impl Default for ShortBottleneck {
    fn default() -> Self {
        Self {
            rect_width: 3.0,
            rect_height: 0.5,
            gap: 0.3,
            rect_counts: [400, 400],
            bridge_width: 0.5,
            bridge_count: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Layout {
    TwoRings(TwoRings),
    LongBottleneck(LongBottleneck),
    ShortBottleneck(ShortBottleneck),
}

impl Layout {
    pub fn name(&self) -> &'static str {
        match self {
            Layout::TwoRings(_) => "two-rings",
            Layout::LongBottleneck(_) => "long-bottleneck",
            Layout::ShortBottleneck(_) => "short-bottleneck",
        }
    }

    /// Default parameters for a layout name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "two-rings" => Ok(Layout::TwoRings(TwoRings::default())),
            "long-bottleneck" => Ok(Layout::LongBottleneck(LongBottleneck::default())),
            "short-bottleneck" => Ok(Layout::ShortBottleneck(ShortBottleneck::default())),
            other => Err(Error::invalid(format!("unknown dataset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub layout: Layout,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn named(name: &str, seed: u64) -> Result<Self> {
        Ok(Self {
            layout: Layout::by_name(name)?,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        let enough = |name: &str, c: usize| {
            if c >= 2 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} needs at least 2 points, got {c}")))
            }
        };
        match &self.layout {
            Layout::TwoRings(s) => {
                positive("inner radius", s.radii[0])?;
                positive("outer radius", s.radii[1])?;
                if !(s.noise.is_finite() && s.noise >= 0.0) {
                    return Err(Error::invalid("noise must be >= 0"));
                }
                enough("inner ring", s.counts[0])?;
                enough("outer ring", s.counts[1])?;
            }
            Layout::LongBottleneck(s) => {
                positive("disc radius", s.disc_radius)?;
                positive("strip width", s.strip_width)?;
                if s.separation <= 2.0 * s.disc_radius {
                    return Err(Error::invalid("discs must not overlap"));
                }
                if s.strip_width >= 2.0 * s.disc_radius {
                    return Err(Error::invalid("strip must be narrower than the discs"));
                }
                enough("first disc", s.disc_counts[0])?;
                enough("second disc", s.disc_counts[1])?;
                enough("strip", s.strip_count)?;
            }
            Layout::ShortBottleneck(s) => {
                positive("rectangle width", s.rect_width)?;
                positive("rectangle height", s.rect_height)?;
                positive("gap", s.gap)?;
                positive("bridge width", s.bridge_width)?;
                if s.bridge_width > s.rect_width {
                    return Err(Error::invalid("bridge is wider than the rectangles"));
                }
                enough("first rectangle", s.rect_counts[0])?;
                enough("second rectangle", s.rect_counts[1])?;
                enough("bridge", s.bridge_count)?;
            }
        }
        Ok(())
    }
}

/// Generates a labeled planar dataset; identical specs give identical
/// clouds.
pub fn gen_dataset(spec: &DatasetSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut rng = RngHandle::new(spec.seed).stream();
    let mut rows: Vec<[f64; 2]> = Vec::new();
    let mut labels: Vec<i64> = Vec::new();
    match &spec.layout {
        Layout::TwoRings(s) => {
            for (ring, (&r, &count)) in s.radii.iter().zip(&s.counts).enumerate() {
                let noise = Normal::new(0.0, s.noise).map_err(|e| Error::invalid(e.to_string()))?;
                for _ in 0..count {
                    let theta = TAU * rng.random::<f64>();
                    let radius = r + rng.sample(noise);
                    rows.push([radius * theta.cos(), radius * theta.sin()]);
                    labels.push(ring as i64);
                }
            }
        }
        Layout::LongBottleneck(s) => {
            let centers = [0.0, s.separation];
            for (disc, (&cx, &count)) in centers.iter().zip(&s.disc_counts).enumerate() {
                for _ in 0..count {
                    let r = s.disc_radius * rng.random::<f64>().sqrt();
                    let theta = TAU * rng.random::<f64>();
                    rows.push([cx + r * theta.cos(), r * theta.sin()]);
                    labels.push(disc as i64);
                }
            }
            let (x0, x1) = (s.disc_radius, s.separation - s.disc_radius);
            let middle = 0.5 * s.separation;
            for _ in 0..s.strip_count {
                let x = x0 + (x1 - x0) * rng.random::<f64>();
                let y = s.strip_width * (rng.random::<f64>() - 0.5);
                rows.push([x, y]);
                labels.push(i64::from(x >= middle));
            }
        }
        Layout::ShortBottleneck(s) => {
            let bottoms = [0.0, s.rect_height + s.gap];
            for (rect, (&y0, &count)) in bottoms.iter().zip(&s.rect_counts).enumerate() {
                for _ in 0..count {
                    let x = s.rect_width * rng.random::<f64>();
                    let y = y0 + s.rect_height * rng.random::<f64>();
                    rows.push([x, y]);
                    labels.push(rect as i64);
                }
            }
            let bx0 = 0.5 * (s.rect_width - s.bridge_width);
            let middle = s.rect_height + 0.5 * s.gap;
            for _ in 0..s.bridge_count {
                let x = bx0 + s.bridge_width * rng.random::<f64>();
                let y = s.rect_height + s.gap * rng.random::<f64>();
                rows.push([x, y]);
                labels.push(i64::from(y >= middle));
            }
        }
    }
    PointCloud::new(rows.concat(), 2, 2)?.with_labels(labels)
}
