//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use pwspd_core::PointCloud;
use rand::Rng;

pub fn random_cloud<R: Rng>(rng: &mut R, n: usize, d: usize) -> PointCloud {
    let coords: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    PointCloud::new(coords, d, d).unwrap()
}

pub fn dist(c: &PointCloud, i: usize, j: usize) -> f64 {
    let mut s = 0.0;
    for a in 0..c.ambient_dim() {
        let t = c.point(i)[a] - c.point(j)[a];
        s += t * t;
    }
    s.sqrt()
}

fn walk(
    c: &PointCloud,
    p: f64,
    u: usize,
    cost: f64,
    hops: usize,
    visited: &mut Vec<bool>,
    best: &mut [f64],
    min_hops: usize,
) {
    if hops >= min_hops && cost < best[u] {
        best[u] = cost;
    }
    for v in 0..c.len() {
        if !visited[v] {
            visited[v] = true;
            walk(c, p, v, cost + dist(c, u, v).powf(p), hops + 1, visited, best, min_hops);
            visited[v] = false;
        }
    }
}

/// Minimum powered cost from `s` to every node over all simple paths of the
/// complete graph with at least `min_hops` legs.
pub fn brute_powered_costs(c: &PointCloud, p: f64, s: usize, min_hops: usize) -> Vec<f64> {
    let mut best = vec![f64::INFINITY; c.len()];
    let mut visited = vec![false; c.len()];
    visited[s] = true;
    walk(c, p, s, 0.0, 0, &mut visited, &mut best, min_hops);
    best
}

/// Exhaustive `l_p` on the complete graph.
pub fn brute_pwspd(c: &PointCloud, p: f64) -> Vec<Vec<f64>> {
    (0..c.len())
        .map(|s| {
            brute_powered_costs(c, p, s, 0)
                .into_iter()
                .map(|v| v.powf(1.0 / p))
                .collect()
        })
        .collect()
}

/// Edges `(i, j)` with `i < j` whose direct cost is no larger than the best
/// path of two or more legs.
pub fn brute_critical_edges(c: &PointCloud, p: f64) -> Vec<(usize, usize)> {
    let n = c.len();
    let mut out = Vec::new();
    for i in 0..n {
        let alt = brute_powered_costs(c, p, i, 2);
        for j in (i + 1)..n {
            let direct = dist(c, i, j).powf(p);
            if direct <= alt[j] * (1.0 + 1e-12) {
                out.push((i, j));
            }
        }
    }
    out
}

/// All-pairs shortest powered costs on a weighted edge list.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut m = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(i, j, w) in edges {
        if w < m[i][j] {
            m[i][j] = w;
            m[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = m[i][k] + m[k][j];
                if via < m[i][j] {
                    m[i][j] = via;
                }
            }
        }
    }
    m
}

/// Largest edge on the tree path between every pair of a Euclidean MST
/// built with Prim's algorithm.
pub fn mst_bottleneck(c: &PointCloud) -> Vec<Vec<f64>> {
    let n = c.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    best[0] = 0.0;
    for _ in 0..n {
        let u = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .unwrap();
        in_tree[u] = true;
        if parent[u] != usize::MAX {
            let w = dist(c, u, parent[u]);
            adj[u].push((parent[u], w));
            adj[parent[u]].push((u, w));
        }
        for v in 0..n {
            if !in_tree[v] && dist(c, u, v) < best[v] {
                best[v] = dist(c, u, v);
                parent[v] = u;
            }
        }
    }
    let mut out = vec![vec![0.0; n]; n];
    for s in 0..n {
        let mut stack = vec![(s, usize::MAX, 0.0f64)];
        while let Some((u, from, worst)) = stack.pop() {
            out[s][u] = worst;
            for &(v, w) in &adj[u] {
                if v != from {
                    stack.push((v, u, worst.max(w)));
                }
            }
        }
    }
    out
}

/// Brute kNN by full sort of `(distance, index)`.
pub fn brute_knn(c: &PointCloud, i: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = (0..c.len())
        .filter(|&j| j != i)
        .map(|j| (dist(c, i, j), j))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|x| x.1).collect()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
