use rand::Rng;
use rand_distr::{Distribution as _, Poisson};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Largest expected point count accepted by [`sample_ppp`].
pub const MAX_EXPECTED_POINTS: f64 = 1e8;

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::invalid("region corners must share a nonzero dimension"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::invalid("region needs finite lo < hi on every axis"));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit_cube(d: usize) -> Result<Self> {
        Self::new(vec![0.0; d], vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }
}

/// Number of points a Poisson process of the given intensity places in the
/// region.
pub fn sample_poisson_count<R: Rng + ?Sized>(intensity: f64, region: &Region, rng: &mut R) -> Result<usize> {
    if !(intensity.is_finite() && intensity > 0.0) {
        return Err(Error::invalid(format!("intensity must be positive, got {intensity}")));
    }
    let mean = intensity * region.volume();
    if mean >= MAX_EXPECTED_POINTS {
        return Err(Error::SamplingGuard { mean });
    }
    let dist = Poisson::new(mean).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(dist.sample(rng) as usize)
}

/// Homogeneous Poisson point process on a box: a Poisson count followed by
/// that many independent uniform points. An empty draw is an error.
pub fn sample_ppp<R: Rng + ?Sized>(intensity: f64, region: &Region, rng: &mut R) -> Result<PointCloud> {
    let count = sample_poisson_count(intensity, region, rng)?;
    let d = region.dim();
    let mut coords = Vec::with_capacity(count * d);
    for _ in 0..count {
        for a in 0..d {
            coords.push(region.lo[a] + (region.hi[a] - region.lo[a]) * rng.random::<f64>());
        }
    }
    PointCloud::new(coords, d, d)
}
