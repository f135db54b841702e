//! Weighted internal path length and Wiener index.
//!
//! Both are edge sums: an edge of weight `z` above a subtree of `s` nodes
//! contributes `z·s` to the path length and `z·s·(n − s)` to the Wiener
//! index. One reverse sweep over the labels computes all subtree sizes.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;
use crate::tree_models::WeightedTree;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalPair {
    pub path_length: f64,
    pub wiener: f64,
}

/// Root-subtree sizes `(I_{n,1}, …, I_{n,b})` in slot order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SplitVector(pub Vec<usize>);

impl SplitVector {
    pub fn sorted_desc(&self) -> Vec<usize> {
        let mut v = self.0.clone();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }
}

pub fn subtree_sizes(tree: &WeightedTree) -> Vec<u32> {
    let parent = tree.parents_raw();
    let mut size = vec![1u32; tree.len()];
    for i in (1..tree.len()).rev() {
        size[parent[i] as usize] += size[i];
    }
    size
}

pub fn functionals(tree: &WeightedTree) -> FunctionalPair {
    let n = tree.len() as f64;
    let size = subtree_sizes(tree);
    let w = tree.weights_raw();
    let mut path = CompensatedSum::new();
    let mut wiener = CompensatedSum::new();
    for i in 1..tree.len() {
        let s = size[i] as f64;
        let zs = w[i] * s;
        path.add(zs);
        wiener.add(zs * (n - s));
    }
    FunctionalPair {
        path_length: path.value(),
        wiener: wiener.value(),
    }
}

pub fn path_length(tree: &WeightedTree) -> f64 {
    functionals(tree).path_length
}

pub fn wiener_index(tree: &WeightedTree) -> f64 {
    functionals(tree).wiener
}

/// Path length as the plain sum of weighted depths.
pub fn path_length_by_depth(tree: &WeightedTree) -> f64 {
    let mut depth = vec![0.0; tree.len()];
    for i in 1..tree.len() {
        depth[i] = depth[tree.parent(i).unwrap()] + tree.edge_weight(i);
    }
    depth.iter().copied().collect::<CompensatedSum>().value()
}

/// O(n²) Wiener index: a breadth-first search from every node.
pub fn wiener_index_pairwise(tree: &WeightedTree) -> f64 {
    let n = tree.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 1..n {
        let p = tree.parent(i).unwrap();
        adj[p].push((i, tree.edge_weight(i)));
        adj[i].push((p, tree.edge_weight(i)));
    }
    let mut total = CompensatedSum::new();
    let mut dist = vec![f64::NAN; n];
    let mut queue = VecDeque::new();
    for src in 0..n {
        dist.fill(f64::NAN);
        dist[src] = 0.0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &(v, w) in &adj[u] {
                if dist[v].is_nan() {
                    dist[v] = dist[u] + w;
                    queue.push_back(v);
                }
            }
        }
        for d in dist.iter().skip(src + 1) {
            total.add(*d);
        }
    }
    total.value()
}

pub fn root_split(tree: &WeightedTree) -> Result<SplitVector> {
    let b = tree.arity().ok_or(Error::NotBary)? as usize;
    let size = subtree_sizes(tree);
    let mut split = vec![0usize; b];
    for i in 1..tree.len() {
        if tree.parent(i) == Some(0) {
            split[tree.slot(i) as usize] = size[i] as usize;
        }
    }
    Ok(SplitVector(split))
}

/// Per-node size, path length and Wiener index of the subtree rooted at
/// each node, built bottom-up from the children's values via
/// `P = Σᵢ (P⁽ⁱ⁾ + zᵢ·sᵢ)` and `W = Σᵢ W⁽ⁱ⁾ + (s − sᵢ)(P⁽ⁱ⁾ + zᵢ·sᵢ)`.
#[derive(Debug, Clone)]
pub struct SubtreeFunctionals {
    pub size: Vec<u32>,
    pub path_length: Vec<f64>,
    pub wiener: Vec<f64>,
}

impl SubtreeFunctionals {
    pub fn compute(tree: &WeightedTree) -> Self {
        let n = tree.len();
        let size = subtree_sizes(tree);
        let parent = tree.parents_raw();
        let w = tree.weights_raw();
        let mut path_length = vec![0.0; n];
        let mut wiener = vec![0.0; n];
        for i in (1..n).rev() {
            let p = parent[i] as usize;
            let through = path_length[i] + w[i] * size[i] as f64;
            path_length[p] += through;
            wiener[p] += wiener[i] + (size[p] - size[i]) as f64 * through;
        }
        Self {
            size,
            path_length,
            wiener,
        }
    }

    pub fn pair(&self, node: usize) -> FunctionalPair {
        FunctionalPair {
            path_length: self.path_length[node],
            wiener: self.wiener[node],
        }
    }
}
