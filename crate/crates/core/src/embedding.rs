//! Coordinates from integrating projected strengths along a minimum spanning tree.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::data::{Dataset, GeneratorSet};
use crate::error::{invalid, Error, Result};
use crate::linalg::pinv;

/// Relative singular-value cutoff of the per-edge pseudoinverse.
pub const EMBED_PINV_CUTOFF: f64 = 1e-10;
/// Columns `A_k x` at or below this norm are dropped for that point.
pub const EMBED_ZERO_COLUMN: f64 = 1e-12;

fn sq_dist(p: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    p.row(a)
        .iter()
        .zip(p.row(b).iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Prim's algorithm from vertex 0; edges are `(child, parent)` in insertion order.
///
/// Ties pick the lowest vertex index, then the lowest parent index.
pub fn minimum_spanning_tree(ds: &Dataset) -> Vec<(usize, usize)> {
    let p = ds.points();
    let n = ds.len();
    let mut in_tree = vec![false; n];
    let mut key = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for v in 0..n {
            if !in_tree[v] {
                let dist = sq_dist(p, current, v);
                if dist < key[v] {
                    key[v] = dist;
                    parent[v] = current;
                }
            }
        }
        let next = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)))
            .expect("a vertex remains outside the tree");
        in_tree[next] = true;
        edges.push((next, parent[next]));
        current = next;
    }
    edges
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeEmbedding {
    /// `n x K`.
    pub coords: DMatrix<f64>,
    pub root: usize,
    /// `(child, parent)` relative to `root`.
    pub edges: Vec<(usize, usize)>,
    /// Breadth-first visiting order starting at `root`.
    pub traversal: Vec<usize>,
}

/// Increment `[A_k x / ‖A_k x‖]⁺ (x - parent)`, with degenerate columns fixed at zero.
pub fn edge_increment(gens: &GeneratorSet, x: &DVector<f64>, parent: &DVector<f64>) -> DVector<f64> {
    let k = gens.len();
    let mut out = DVector::zeros(k);
    let cols: Vec<(usize, DVector<f64>)> = gens
        .generators()
        .iter()
        .enumerate()
        .filter_map(|(kk, a)| {
            let c = a * x;
            let norm = c.norm();
            (norm > EMBED_ZERO_COLUMN).then(|| (kk, c / norm))
        })
        .collect();
    if cols.is_empty() {
        return out;
    }
    let basis = DMatrix::from_columns(&cols.iter().map(|(_, c)| c.clone()).collect::<Vec<_>>());
    let coef = pinv(&basis, EMBED_PINV_CUTOFF) * (x - parent);
    for (slot, (kk, _)) in cols.iter().enumerate() {
        out[*kk] = coef[slot];
    }
    out
}

/// Embeds every point by accumulating edge increments outward from `root`.
pub fn embed(ds: &Dataset, gens: &GeneratorSet, root: usize) -> Result<TreeEmbedding> {
    let n = ds.len();
    if root >= n {
        return Err(invalid(format!("root {root} out of range for {n} points")));
    }
    if gens.dim() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("dimension {}", ds.dim()),
            found: format!("{}", gens.dim()),
        });
    }
    let mut adjacency = vec![Vec::new(); n];
    for (a, b) in minimum_spanning_tree(ds) {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }

    let mut coords = DMatrix::zeros(n, gens.len());
    let mut visited = vec![false; n];
    let mut traversal = Vec::with_capacity(n);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut queue = VecDeque::from([root]);
    visited[root] = true;
    while let Some(h) = queue.pop_front() {
        traversal.push(h);
        let xh = ds.point(h);
        for &v in &adjacency[h] {
            if visited[v] {
                continue;
            }
            visited[v] = true;
            let inc = edge_increment(gens, &ds.point(v), &xh);
            let row = coords.row(h) + inc.transpose();
            coords.set_row(v, &row);
            edges.push((v, h));
            queue.push_back(v);
        }
    }
    Ok(TreeEmbedding {
        coords,
        root,
        edges,
        traversal,
    })
}
