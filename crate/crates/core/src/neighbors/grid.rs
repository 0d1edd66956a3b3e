//! Uniform-grid kNN index for clouds in at most three dimensions.
//!
//! Each query scans rings of cells around its own cell until the k-th
//! candidate is strictly closer than any unscanned cell can be, which makes
//! the result identical to brute force, tie-breaking included.

use rayon::prelude::*;

use super::{check_k, unit_ball_volume, cmp_candidates, take_k_smallest, KnnTable};
use crate::cloud::{euclidean, PointCloud};
use crate::error::Result;

struct Grid {
    dim: usize,
    lo: [f64; 3],
    side: [f64; 3],
    cells: [usize; 3],
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl Grid {
    fn build(cloud: &PointCloud, per_cell: f64) -> Self {
        let dim = cloud.ambient_dim();
        let n = cloud.len();
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..dim {
            lo[a] = f64::INFINITY;
            hi[a] = f64::NEG_INFINITY;
        }
        for p in cloud.points() {
            for a in 0..dim {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let per_axis = ((n as f64 / per_cell).powf(1.0 / dim as f64).floor() as usize).max(1);
        let mut cells = [1usize; 3];
        let mut side = [1.0; 3];
        for a in 0..dim {
            let extent = hi[a] - lo[a];
            if extent > 0.0 {
                cells[a] = per_axis;
                side[a] = extent / per_axis as f64;
            }
        }
        let total: usize = cells.iter().product();
        let mut grid = Grid {
            dim,
            lo,
            side,
            cells,
            starts: vec![0; total + 1],
            items: vec![0; n],
        };
        let ids: Vec<usize> = cloud.points().map(|p| grid.flat(&grid.cell_of(p))).collect();
        for &c in &ids {
            grid.starts[c + 1] += 1;
        }
        for c in 0..total {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        for (i, &c) in ids.iter().enumerate() {
            grid.items[fill[c]] = i;
            fill[c] += 1;
        }
        grid
    }

    fn cell_of(&self, p: &[f64]) -> [usize; 3] {
        let mut c = [0usize; 3];
        for a in 0..self.dim {
            let t = ((p[a] - self.lo[a]) / self.side[a]).floor();
            c[a] = if t <= 0.0 {
                0
            } else {
                (t as usize).min(self.cells[a] - 1)
            };
        }
        c
    }

    fn flat(&self, c: &[usize; 3]) -> usize {
        (c[2] * self.cells[1] + c[1]) * self.cells[0] + c[0]
    }

    fn cell_items(&self, c: &[usize; 3]) -> &[usize] {
        let f = self.flat(c);
        &self.items[self.starts[f]..self.starts[f + 1]]
    }

    /// Lower bound on the distance from `p` to any point outside the block of
    /// cells within Chebyshev radius `r` of `center`.
    fn covered_radius(&self, p: &[f64], center: &[usize; 3], r: usize) -> f64 {
        let mut radius = f64::INFINITY;
        for a in 0..self.dim {
            if center[a] > r {
                let face = self.lo[a] + (center[a] - r) as f64 * self.side[a];
                radius = radius.min(p[a] - face);
            }
            if center[a] + r + 1 < self.cells[a] {
                let face = self.lo[a] + (center[a] + r + 1) as f64 * self.side[a];
                radius = radius.min(face - p[a]);
            }
        }
        radius
    }

    fn query(&self, cloud: &PointCloud, i: usize, k: usize) -> Vec<(f64, usize)> {
        let p = cloud.point(i);
        let center = self.cell_of(p);
        let mut cands: Vec<(f64, usize)> = Vec::with_capacity(4 * k);
        let max_r = (0..self.dim).map(|a| self.cells[a]).max().unwrap_or(1);
        for r in 0..=max_r {
            self.visit_ring(&center, r, |items| {
                for &j in items {
                    if j != i {
                        cands.push((euclidean(p, cloud.point(j)), j));
                    }
                }
            });
            let covered = self.covered_radius(p, &center, r);
            if covered.is_infinite() {
                break;
            }
            if cands.len() >= k {
                let (_, kth, _) = cands.select_nth_unstable_by(k - 1, cmp_candidates);
                if kth.0 < covered {
                    cands.truncate(k);
                    cands.sort_unstable_by(cmp_candidates);
                    return cands;
                }
            }
        }
        take_k_smallest(cands, k)
    }

    fn visit_ring(&self, center: &[usize; 3], r: usize, mut f: impl FnMut(&[usize])) {
        let range = |a: usize| -> (usize, usize) {
            if a >= self.dim {
                return (0, 0);
            }
            (center[a].saturating_sub(r), (center[a] + r).min(self.cells[a] - 1))
        };
        let (x0, x1) = range(0);
        let (y0, y1) = range(1);
        let (z0, z1) = range(2);
        for z in z0..=z1 {
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let c = [x, y, z];
                    let cheb = (0..self.dim)
                        .map(|a| c[a].abs_diff(center[a]))
                        .max()
                        .unwrap_or(0);
                    if cheb == r {
                        f(self.cell_items(&c));
                    }
                }
            }
        }
    }
}

/// Grid-accelerated kNN table; identical output to [`super::knn_table_brute`].
pub fn knn_table_grid(cloud: &PointCloud, k: usize) -> Result<KnnTable> {
    let n = cloud.len();
    check_k(k, n)?;
    assert!(cloud.ambient_dim() <= 3, "grid index supports at most 3 dimensions");
    // Cells small enough that the k-ball fits in a block of Chebyshev radius 2.
    let dim = cloud.ambient_dim();
    let per_cell = k as f64 / (unit_ball_volume(dim) * 2f64.powi(dim as i32));
    let grid = Grid::build(cloud, per_cell.max(2.0));
    let rows = (0..n)
        .into_par_iter()
        .map(|i| grid.query(cloud, i, k))
        .collect();
    Ok(KnnTable::from_rows(n, k, rows))
}
