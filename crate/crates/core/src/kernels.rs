//! Affinity matrices built from distances, plus a diagnostic comparing
//! power-weighted distances with the density-stretched Euclidean distance.

use nalgebra::DMatrix;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::{euclidean, PointCloud};
use crate::distance::{pairwise_euclidean, DistanceMatrix, MetricKind};
use crate::error::{Error, Result};
use crate::graph::Power;
use crate::neighbors::{knn_density, knn_scales, knn_table, DensityEstimate};
use crate::pwspd::{pwspd_pair, PwspdQueryConfig};
use crate::spanner::{theoretical_k_euclidean, SpannerParams};
use crate::stats::{mean, median, variance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelConstruction {
    Gaussian { epsilon: f64, a: f64, metric: MetricKind },
    SelfTuning { k: usize },
    Diffusion { epsilon: f64, alpha: f64 },
}

/// A symmetric nonnegative affinity matrix with its construction.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    values: DMatrix<f64>,
    construction: KernelConstruction,
}

impl KernelMatrix {
    /// Wraps a user-supplied affinity matrix after checking symmetry and
    /// nonnegativity.
    pub fn new(values: DMatrix<f64>, construction: KernelConstruction) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::invalid("kernel matrix must be square"));
        }
        let n = values.nrows();
        for i in 0..n {
            for j in 0..n {
                let v = values[(i, j)];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::invalid(format!("kernel entry ({i}, {j}) is {v}")));
                }
                if j > i && v != values[(j, i)] {
                    return Err(Error::NonSymmetricMetric { i, j });
                }
            }
        }
        Ok(Self {
            values,
            construction,
        })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn construction(&self) -> KernelConstruction {
        self.construction
    }

    /// Row sums.
    pub fn degrees(&self) -> Vec<f64> {
        self.values.row_iter().map(|r| r.sum()).collect()
    }

    /// Row-stochastic matrix `Deg^-1 W`.
    pub fn transition_matrix(&self) -> Result<DMatrix<f64>> {
        let deg = self.degrees();
        if let Some(node) = deg.iter().position(|&d| d <= 0.0) {
            return Err(Error::ZeroDegree { node });
        }
        let mut m = self.values.clone();
        for (i, mut row) in m.row_iter_mut().enumerate() {
            row /= deg[i];
        }
        Ok(m)
    }
}

/// `h_a(x) = exp(-x^(2a))`.
pub fn kernel_profile(x: f64, a: f64) -> f64 {
    (-x.powf(2.0 * a)).exp()
}

fn gaussian_values(dist: &DMatrix<f64>, epsilon: f64, a: f64) -> DMatrix<f64> {
    dist.map(|d| kernel_profile(d / epsilon, a))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// `W_ij = h_a(dist_ij / epsilon)`. Unreachable pairs get weight 0.
pub fn gaussian_kernel(dist: &DistanceMatrix, epsilon: f64, a: f64) -> Result<KernelMatrix> {
    check_epsilon(epsilon)?;
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid(format!("kernel exponent must be positive, got {a}")));
    }
    Ok(KernelMatrix {
        values: gaussian_values(dist.values(), epsilon, a),
        construction: KernelConstruction::Gaussian {
            epsilon,
            a,
            metric: dist.kind(),
        },
    })
}

/// `W_ij = exp(-|x_i - x_j|^2 / (sigma_i sigma_j))` with `sigma_i` the
/// distance from `x_i` to its `k`-th nearest neighbor.
pub fn self_tuning_kernel(cloud: &PointCloud, k: usize) -> Result<KernelMatrix> {
    let scales = knn_scales(cloud, k)?;
    if let Some(index) = scales.sigmas.iter().position(|&s| s <= 0.0) {
        return Err(Error::ZeroScale { index });
    }
    let s = &scales.sigmas;
    let n = cloud.len();
    let values = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            let d = euclidean(cloud.point(i), cloud.point(j));
            (-(d * d) / (s[i] * s[j])).exp()
        }
    });
    Ok(KernelMatrix {
        values,
        construction: KernelConstruction::SelfTuning { k },
    })
}

/// Diffusion-maps family: the Gaussian kernel with scale `epsilon`
/// divided by `(d_i d_j)^alpha`, where `d_i` are its row sums. With
/// `alpha = 0` the Gaussian kernel is returned unchanged.
pub fn diffusion_kernel(cloud: &PointCloud, epsilon: f64, alpha: f64) -> Result<KernelMatrix> {
    check_epsilon(epsilon)?;
    if !alpha.is_finite() {
        return Err(Error::invalid("alpha must be finite"));
    }
    let dist = pairwise_euclidean(cloud);
    let mut values = gaussian_values(dist.values(), epsilon, 1.0);
    if alpha != 0.0 {
        let scale: Vec<f64> = values.row_iter().map(|r| r.sum().powf(-alpha)).collect();
        let n = values.nrows();
        for j in 0..n {
            for i in 0..n {
                values[(i, j)] *= scale[i] * scale[j];
            }
        }
    }
    Ok(KernelMatrix {
        values,
        construction: KernelConstruction::Diffusion { epsilon, alpha },
    })
}

/// `|x - y| / (f(x) f(y))^((p-1)/(2d))`.
pub fn density_stretched_distance(
    dist_euclidean: &DistanceMatrix,
    density: &DensityEstimate,
    p: f64,
    d: usize,
) -> Result<DistanceMatrix> {
    let n = dist_euclidean.n();
    if density.values.len() != n {
        return Err(Error::invalid(format!(
            "{} density values for {n} points",
            density.values.len()
        )));
    }
    if let Some(i) = density.values.iter().position(|&f| !(f > 0.0 && f.is_finite())) {
        return Err(Error::invalid(format!("density at point {i} is {}", density.values[i])));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be >= 1"));
    }
    Power::metric(p)?;
    let kind = MetricKind::DensityStretched { p };
    if p == 1.0 {
        return DistanceMatrix::new(dist_euclidean.values().clone(), kind, false);
    }
    let expo = (p - 1.0) / (2.0 * d as f64);
    let f = &density.values;
    let values = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            dist_euclidean.get(i, j) / (f[i] * f[j]).powf(expo)
        }
    });
    DistanceMatrix::new(values, kind, false)
}

/// Settings for [`local_equivalence_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceConfig {
    pub p: f64,
    /// Neighborhood radius; pairs farther apart are skipped.
    pub epsilon: f64,
    /// Curvature constant, zero for flat data.
    pub kappa: f64,
    /// Neighbor count of the density estimate when none is supplied.
    pub density_k: usize,
    /// Neighbor count of the path graph; defaults to the spanner bound.
    pub graph_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEquivalence {
    pub i: usize,
    pub j: usize,
    pub euclidean: f64,
    /// Normalized discrete distance raised to the power `p`.
    pub pwspd_power: f64,
    pub stretched: f64,
    /// `pwspd_power / stretched`.
    pub ratio: f64,
    /// `ratio` divided by the median ratio over all pairs.
    pub normalized_ratio: f64,
    /// Max over min estimated density within `epsilon` of `x_i`.
    pub rho: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub within_bounds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub p: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub graph_k: usize,
    pub pairs: Vec<PairEquivalence>,
    /// Pairs dropped for being farther apart than `epsilon`.
    pub skipped: Vec<(usize, usize)>,
    pub median_ratio: f64,
    /// Largest deviation of a normalized ratio from 1, as `max(r, 1/r)`.
    pub worst_ratio: f64,
    pub coefficient_of_variation: f64,
    /// Coefficient of variation of the `p`-th roots of the ratios.
    pub root_coefficient_of_variation: f64,
    pub violation_fraction: f64,
}

/// Compares `l~_p^p` with the density-stretched Euclidean distance on close
/// pairs. The unknown limiting constant is removed by normalizing ratios
/// by their median; the bounds `rho^(-(p-1)/d)` and
/// `rho^((p-1)/d) (1 + kappa eps^2)` are then checked per pair.
pub fn local_equivalence_report(
    cloud: &PointCloud,
    pairs: &[(usize, usize)],
    config: &EquivalenceConfig,
    density: Option<&DensityEstimate>,
) -> Result<EquivalenceReport> {
    let EquivalenceConfig { p, epsilon, kappa, .. } = *config;
    let power = Power::metric(p)?;
    check_epsilon(epsilon)?;
    let n = cloud.len();
    let d = cloud.intrinsic_dim();
    for &(i, j) in pairs {
        for node in [i, j] {
            if node >= n {
                return Err(Error::NodeOutOfRange { node, n });
            }
        }
    }
    let estimated;
    let density = match density {
        Some(f) => f,
        None => {
            estimated = knn_density(cloud, config.density_k)?;
            &estimated
        }
    };
    if density.values.len() != n {
        return Err(Error::invalid("density length differs from the cloud"));
    }

    let (kept, skipped): (Vec<(usize, usize)>, Vec<(usize, usize)>) = pairs
        .iter()
        .copied()
        .partition(|&(i, j)| i != j && euclidean(cloud.point(i), cloud.point(j)) <= epsilon);
    if kept.is_empty() {
        return Err(Error::Empty("no pair lies within epsilon".into()));
    }

    let graph_k = match config.graph_k {
        Some(k) => k,
        None if p > 1.0 => {
            let bound = theoretical_k_euclidean(&SpannerParams::uniform(p, d, n)?)?;
            bound.ceil() as usize
        }
        None => 1,
    }
    .min(n - 1);
    let factor = (n as f64).powf((p - 1.0) / d as f64);
    let lengths: Vec<f64> = if p == 1.0 {
        kept.iter()
            .map(|&(i, j)| euclidean(cloud.point(i), cloud.point(j)))
            .collect()
    } else {
        let extra: Vec<(usize, usize, f64)> = kept
            .iter()
            .map(|&(i, j)| (i, j, euclidean(cloud.point(i), cloud.point(j))))
            .collect();
        let graph = knn_table(cloud, graph_k)?.graph(graph_k)?.with_extra_edges(&extra)?;
        let query = PwspdQueryConfig::new(&graph, power);
        kept.iter()
            .map(|&(i, j)| pwspd_pair(&query, i, j).map(|r| r.value))
            .collect::<Result<_>>()?
    };

    let f = &density.values;
    let expo = (p - 1.0) / (2.0 * d as f64);
    let rho_expo = (p - 1.0) / d as f64;
    let mut rows = Vec::with_capacity(kept.len());
    for (&(i, j), &len_p) in kept.iter().zip(&lengths) {
        let euc = euclidean(cloud.point(i), cloud.point(j));
        let stretched = euc / (f[i] * f[j]).powf(expo);
        let pwspd_power = if p == 1.0 { euc } else { factor * len_p.powf(p) };
        let (lo, hi) = (0..n)
            .filter(|&z| euclidean(cloud.point(i), cloud.point(z)) <= epsilon)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), z| (lo.min(f[z]), hi.max(f[z])));
        let rho = hi / lo;
        rows.push(PairEquivalence {
            i,
            j,
            euclidean: euc,
            pwspd_power,
            stretched,
            ratio: pwspd_power / stretched,
            normalized_ratio: 0.0,
            rho,
            lower_bound: rho.powf(-rho_expo),
            upper_bound: rho.powf(rho_expo) * (1.0 + kappa * epsilon * epsilon),
            within_bounds: false,
        });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let median_ratio = median(&ratios)?;
    for r in &mut rows {
        r.normalized_ratio = r.ratio / median_ratio;
        r.within_bounds = r.lower_bound <= r.normalized_ratio && r.normalized_ratio <= r.upper_bound;
    }
    let normalized: Vec<f64> = rows.iter().map(|r| r.normalized_ratio).collect();
    let roots: Vec<f64> = normalized.iter().map(|r| r.powf(1.0 / p)).collect();
    let worst_ratio = normalized.iter().map(|&r| r.max(1.0 / r)).fold(1.0, f64::max);
    let violations = rows.iter().filter(|r| !r.within_bounds).count();
    Ok(EquivalenceReport {
        p,
        epsilon,
        kappa,
        graph_k,
        violation_fraction: violations as f64 / rows.len() as f64,
        pairs: rows,
        skipped,
        median_ratio,
        worst_ratio,
        coefficient_of_variation: coefficient_of_variation(&normalized),
        root_coefficient_of_variation: coefficient_of_variation(&roots),
    })
}

fn coefficient_of_variation(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    variance(xs).sqrt() / mean(xs)
}

/// Draws up to `count` distinct pairs whose distance lies in
/// `[min_fraction * epsilon, epsilon]`, with both points at least
/// `epsilon` inside the bounding box of the cloud.
pub fn sample_close_pairs<R: Rng + ?Sized>(
    cloud: &PointCloud,
    epsilon: f64,
    min_fraction: f64,
    count: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let dim = cloud.ambient_dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for x in cloud.points() {
        for a in 0..dim {
            lo[a] = lo[a].min(x[a]);
            hi[a] = hi[a].max(x[a]);
        }
    }
    let interior = |x: &[f64]| (0..dim).all(|a| x[a] - lo[a] >= epsilon && hi[a] - x[a] >= epsilon);
    let mut anchors: Vec<usize> = (0..cloud.len()).filter(|&i| interior(cloud.point(i))).collect();
    anchors.shuffle(rng);
    let mut pairs = Vec::with_capacity(count);
    for &i in &anchors {
        if pairs.len() == count {
            break;
        }
        let partners: Vec<usize> = (0..cloud.len())
            .filter(|&j| {
                let r = euclidean(cloud.point(i), cloud.point(j));
                j != i && interior(cloud.point(j)) && r <= epsilon && r >= min_fraction * epsilon
            })
            .collect();
        if let Some(&j) = partners.choose(rng) {
            if !pairs.contains(&(j, i)) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}
