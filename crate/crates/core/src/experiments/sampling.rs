use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Sampling distributions for synthetic point clouds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    /// Uniform on `[0, 1]^d`.
    UniformCube,
    /// Uniform on the unit sphere `S^d` in `R^(d+1)`.
    Sphere,
    /// Standard normal in `R^d`.
    Gaussian,
}

impl Distribution {
    pub fn name(&self) -> &'static str {
        match self {
            Distribution::UniformCube => "uniform-cube",
            Distribution::Sphere => "sphere",
            Distribution::Gaussian => "gaussian",
        }
    }

    pub fn ambient_dim(&self, d: usize) -> usize {
        match self {
            Distribution::Sphere => d + 1,
            _ => d,
        }
    }
}

impl std::str::FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-cube" | "uniform" => Ok(Distribution::UniformCube),
            "sphere" => Ok(Distribution::Sphere),
            "gaussian" => Ok(Distribution::Gaussian),
            other => Err(Error::invalid(format!("unknown distribution `{other}`"))),
        }
    }
}

/// Draws `n` points with intrinsic dimension `d`.
pub fn sample_points<R: Rng + ?Sized>(
    distribution: Distribution,
    n: usize,
    d: usize,
    rng: &mut R,
) -> Result<PointCloud> {
    if d == 0 {
        return Err(Error::invalid("dimension must be >= 1"));
    }
    let ambient = distribution.ambient_dim(d);
    let mut coords = Vec::with_capacity(n * ambient);
    match distribution {
        Distribution::UniformCube => {
            coords.extend((0..n * d).map(|_| rng.random::<f64>()));
        }
        Distribution::Gaussian => {
            coords.extend((0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        }
        Distribution::Sphere => {
            let mut v = vec![0.0; ambient];
            for _ in 0..n {
                loop {
                    for x in v.iter_mut() {
                        *x = rng.sample(StandardNormal);
                    }
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 1e-300 {
                        coords.extend(v.iter().map(|x| x / norm));
                        break;
                    }
                }
            }
        }
    }
    PointCloud::new(coords, ambient, d)
}
