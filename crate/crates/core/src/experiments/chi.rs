use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::experiments::sampling::{sample_points, Distribution};
use crate::graph::Power;
use crate::neighbors::knn_table;
use crate::pwspd::{pwspd_pair, Normalization, PwspdQueryConfig};
use crate::rng::RngHandle;
use crate::spanner::{theoretical_k_euclidean, SpannerParams};
use crate::stats::{linear_fit, mean, variance};

/// Desk-scale sample sizes.
pub const DEFAULT_N_GRID: [usize; 4] = [2048, 4096, 8192, 16384];
pub const DEFAULT_TRIALS: usize = 500;
/// Sample sizes from 11586 to 92682, doubling.
pub const FULL_SCALE_N_GRID: [usize; 4] = [11586, 23171, 46341, 92682];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiConfig {
    pub d: usize,
    pub p: f64,
    pub n_grid: Vec<usize>,
    pub trials_per_n: usize,
    pub seed: u64,
    /// Two-sided confidence level of the interval.
    pub confidence: f64,
}

impl ChiConfig {
    pub fn new(d: usize, p: f64, seed: u64) -> Self {
        Self {
            d,
            p,
            n_grid: DEFAULT_N_GRID.to_vec(),
            trials_per_n: DEFAULT_TRIALS,
            seed,
            confidence: 0.95,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::invalid("fluctuation estimates need d >= 2"));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::invalid("fluctuation estimates need p > 1"));
        }
        if self.n_grid.len() < 2 {
            return Err(Error::invalid("need at least two sample sizes"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n grid must be strictly ascending"));
        }
        if self.trials_per_n < 2 {
            return Err(Error::invalid("need at least two trials per sample size"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::invalid("confidence must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiEstimate {
    pub d: usize,
    pub p: f64,
    pub n_grid: Vec<usize>,
    /// Neighbor count of the graph at each sample size.
    pub k_per_n: Vec<usize>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    /// Slope of `ln Var` against `ln n`.
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    /// `slope * d / 2 + 1`.
    pub chi: f64,
    pub ci: (f64, f64),
    pub confidence: f64,
    pub trials_per_n: usize,
    /// Trials that needed a second sample because the graph did not join
    /// the two endpoints.
    pub resampled_per_n: Vec<usize>,
    /// Trials dropped after the second sample also failed.
    pub errors_per_n: Vec<usize>,
    /// `n / k` at the smallest and largest sample size.
    pub speedup: (f64, f64),
}

/// Neighbor count used at sample size `n`.
pub fn chi_neighbor_count(d: usize, p: f64, n: usize) -> Result<usize> {
    Ok(theoretical_k_euclidean(&SpannerParams::uniform(p, d, n)?)?.ceil() as usize)
}

/// Query endpoints at depth 0.25 along the first axis of the unit cube.
pub fn chi_endpoints(d: usize) -> [Vec<f64>; 2] {
    let mut x = vec![0.5; d];
    let mut y = vec![0.5; d];
    x[0] = 0.25;
    y[0] = 0.75;
    [x, y]
}

/// One normalized distance between the fixed endpoints, computed in a
/// uniform sample of size `n` with the endpoints added. `None` when the
/// kNN graph leaves them disconnected.
pub fn chi_trial(d: usize, p: f64, n: usize, k: usize, rng: &RngHandle) -> Result<Option<f64>> {
    let mut stream = rng.stream();
    let sample = sample_points(Distribution::UniformCube, n, d, &mut stream)?;
    let cloud = sample.extended(&chi_endpoints(d))?;
    let graph = knn_table(&cloud, k.min(n + 1))?.graph(k.min(n + 1))?;
    let query = PwspdQueryConfig::new(&graph, Power::metric(p)?).with_normalization(Normalization {
        sample_size: n,
        intrinsic_dim: d,
    })?;
    let path = pwspd_pair(&query, n, n + 1)?;
    let factor = query.normalization.expect("set above").factor(p);
    Ok(path.is_reachable().then_some(factor * path.value))
}

/// Estimates the fluctuation exponent from the decay of the variance of
/// the normalized distance between two fixed points as `n` grows.
pub fn estimate_chi(config: &ChiConfig) -> Result<ChiEstimate> {
    estimate_chi_with_progress(config, &|_, _| {})
}

/// As [`estimate_chi`], calling `progress(n, index)` after each sample size.
pub fn estimate_chi_with_progress(
    config: &ChiConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<ChiEstimate> {
    config.validate()?;
    let root = RngHandle::new(config.seed);
    let (d, p) = (config.d, config.p);
    let mut k_per_n = Vec::new();
    let mut means = Vec::new();
    let mut variances = Vec::new();
    let mut resampled_per_n = Vec::new();
    let mut errors_per_n = Vec::new();
    for (a, &n) in config.n_grid.iter().enumerate() {
        let k = chi_neighbor_count(d, p, n)?;
        let outcomes: Vec<(Option<f64>, bool)> = (0..config.trials_per_n)
            .into_par_iter()
            .map(|t| {
                let handle = root.derive(&[a as u64, t as u64]);
                match chi_trial(d, p, n, k, &handle)? {
                    Some(v) => Ok((Some(v), false)),
                    None => Ok((chi_trial(d, p, n, k, &handle.derive(&[1]))?, true)),
                }
            })
            .collect::<Result<_>>()?;
        let values: Vec<f64> = outcomes.iter().filter_map(|o| o.0).collect();
        if values.len() < 2 {
            return Err(Error::Empty(format!("fewer than two usable trials at n = {n}")));
        }
        let var = variance(&values);
        if !(var > 0.0) {
            return Err(Error::invalid(format!("zero variance at n = {n}")));
        }
        k_per_n.push(k);
        means.push(mean(&values));
        variances.push(var);
        resampled_per_n.push(outcomes.iter().filter(|o| o.1).count());
        errors_per_n.push(outcomes.iter().filter(|o| o.0.is_none()).count());
        progress(n, a);
    }

    let log_n: Vec<f64> = config.n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let log_var: Vec<f64> = variances.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&log_n, &log_var)?;
    let half_d = d as f64 / 2.0;
    let to_chi = |m: f64| m * half_d + 1.0;
    let df = (config.n_grid.len() - 2) as f64;
    let ci = if df > 0.0 && fit.slope_se.is_finite() {
        let t = StudentsT::new(0.0, 1.0, df)
            .map_err(|e| Error::invalid(e.to_string()))?
            .inverse_cdf(0.5 + config.confidence / 2.0);
        (to_chi(fit.slope - t * fit.slope_se), to_chi(fit.slope + t * fit.slope_se))
    } else {
        (f64::NAN, f64::NAN)
    };
    let first = config.n_grid[0];
    let last = *config.n_grid.last().expect("validated");
    Ok(ChiEstimate {
        d,
        p,
        n_grid: config.n_grid.clone(),
        speedup: (
            first as f64 / k_per_n[0] as f64,
            last as f64 / *k_per_n.last().expect("nonempty") as f64,
        ),
        k_per_n,
        means,
        variances,
        slope: fit.slope,
        slope_se: fit.slope_se,
        intercept: fit.intercept,
        residuals: fit.residuals,
        chi: to_chi(fit.slope),
        ci,
        confidence: config.confidence,
        trials_per_n: config.trials_per_n,
        resampled_per_n,
        errors_per_n,
    })
}
