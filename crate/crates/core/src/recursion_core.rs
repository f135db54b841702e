//! The two-dimensional sum-type recursion for `Y_n = (W_n, P_n)`.
//!
//! With `X_n = diag(1/n², 1/n)(Y_n − E Y_n)` the subtree decomposition reads
//! `X_n = Σᵢ A_i(I_n) X⁽ⁱ⁾ + d(I_n, Z)` where
//! `A_i = [[x², x(1−x)], [0, x]]`, `x = I_{n,i}/n`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::exact_engine::{expectations, ExpectationTable};
use crate::functionals::{subtree_sizes, FunctionalPair};
use crate::rng;
use crate::tree_models::{grow_bary, WeightSampler, WeightedTree};

/// Squared operator norm of `A_i` as a function of `x = I/n`.
pub fn f_closed_form(x: f64) -> f64 {
    x.powi(4) + (x * x - x.powi(3)) * (1.0 + (x * x + 1.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoeffMatrix {
    pub i: u64,
    pub n: u64,
}

impl CoeffMatrix {
    pub fn x(&self) -> f64 {
        self.i as f64 / self.n as f64
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        let x = self.x();
        [[x * x, x * (1.0 - x)], [0.0, x]]
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let a = self.entries();
        [a[0][0] * v[0] + a[0][1] * v[1], a[1][1] * v[1]]
    }
}

pub fn coeff_matrix(i: u64, n: u64) -> Result<CoeffMatrix> {
    if n == 0 || i >= n {
        return Err(invalid(format!("need 0 <= i < n, got i = {i}, n = {n}")));
    }
    Ok(CoeffMatrix { i, n })
}

/// Largest eigenvalue of `AᵀA` from the quadratic formula.
pub fn op_norm_sq_eigen(m: &CoeffMatrix) -> f64 {
    let [[a, b], [_, c]] = m.entries();
    let trace = a * a + b * b + c * c;
    let det = a * a * c * c;
    0.5 * (trace + (trace * trace - 4.0 * det).max(0.0).sqrt())
}

/// Closed form, checked against [`op_norm_sq_eigen`].
pub fn op_norm_sq(m: &CoeffMatrix) -> f64 {
    let closed = f_closed_form(m.x());
    let eigen = op_norm_sq_eigen(m);
    assert!(
        (closed - eigen).abs() <= 1e-12,
        "operator norm mismatch at i = {}, n = {}: {closed} vs {eigen}",
        m.i,
        m.n
    );
    closed
}

/// `X_n` for one tree, centred by exact expectations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledVector {
    pub x: [f64; 2],
}

impl ScaledVector {
    pub fn new(pair: FunctionalPair, n: usize, table: &ExpectationTable) -> Result<Self> {
        table.covers(n)?;
        let nf = n as f64;
        Ok(Self {
            x: [
                (pair.wiener - table.ew(n)) / (nf * nf),
                (pair.path_length - table.ep(n)) / nf,
            ],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TollResidual {
    pub n: usize,
    pub d: [f64; 2],
}

impl TollResidual {
    pub fn norm(&self) -> f64 {
        self.d[0].hypot(self.d[1])
    }
}

/// Exact toll from the split `I` (slot order) and the weights `Z` of the
/// root. It depends on the tree only through `(I, Z)`.
pub fn toll_from_split(split: &[usize], z: &[f64], table: &ExpectationTable) -> Result<TollResidual> {
    if split.len() != z.len() {
        return Err(invalid("split and weight vectors differ in length"));
    }
    let n = 1 + split.iter().sum::<usize>();
    table.covers(n)?;
    if n == 1 {
        return Ok(TollResidual { n, d: [0.0, 0.0] });
    }
    let nf = n as f64;
    let (mut d1, mut d2) = (-table.ew(n), -table.ep(n));
    for (&i, &zi) in split.iter().zip(z) {
        if i == 0 {
            continue;
        }
        let through = zi * i as f64 + table.ep(i);
        d1 += (n - i) as f64 * through + table.ew(i);
        d2 += through;
    }
    Ok(TollResidual {
        n,
        d: [d1 / (nf * nf), d2 / nf],
    })
}

fn node_split(tree: &WeightedTree, b: usize, children: &[usize], sizes: &[u32]) -> (Vec<usize>, Vec<f64>) {
    let mut split = vec![0; b];
    let mut z = vec![0.0; b];
    for &c in children {
        let s = tree.slot(c) as usize;
        split[s] = sizes[c] as usize;
        z[s] = tree.edge_weight(c);
    }
    (split, z)
}

/// `d = X_n − Σᵢ A_i(I_n) X⁽ⁱ⁾` for one sampled `b`-ary tree.
pub fn toll_residual(tree: &WeightedTree, table: &ExpectationTable) -> Result<TollResidual> {
    let b = tree.arity().ok_or(Error::NotBary)? as usize;
    let sizes = subtree_sizes(tree);
    let children = tree.children();
    let (split, z) = node_split(tree, b, &children[0], &sizes);
    toll_from_split(&split, &z, table)
}

/// Tolls at every internal node of `tree`. Given its size, the subtree at a
/// node is again a random `b`-ary recursive tree, so each entry is a draw of
/// `d(I_s, Z)` for `s` = that subtree's size.
pub fn toll_residuals_all(tree: &WeightedTree, table: &ExpectationTable) -> Result<Vec<TollResidual>> {
    let b = tree.arity().ok_or(Error::NotBary)? as usize;
    let sizes = subtree_sizes(tree);
    let children = tree.children();
    children
        .iter()
        .map(|kids| {
            let (split, z) = node_split(tree, b, kids, &sizes);
            toll_from_split(&split, &z, table)
        })
        .collect()
}

/// Leading-order toll with every vanishing correction set to zero.
pub fn toll_main_term(split: &[usize], z: &[f64], b: usize, mu: f64) -> TollResidual {
    let n = 1 + split.iter().sum::<usize>();
    let nf = n as f64;
    let c = b as f64 / (b as f64 - 1.0) * mu;
    let xs: Vec<f64> = split.iter().map(|&i| i as f64 / nf).collect();
    let entropy: f64 = xs.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum();
    let mut cross = 0.0;
    for i in 0..xs.len() {
        for j in 0..xs.len() {
            if i != j {
                cross += ((z[i] + z[j]) / 2.0 + c) * xs[i] * xs[j];
            }
        }
    }
    let linear: f64 = z.iter().zip(&xs).map(|(zi, xi)| zi * xi).sum();
    TollResidual {
        n,
        d: [c * entropy + cross, c * entropy + linear],
    }
}

/// Empirical stand-in for the toll bound `D`: not a proof.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DBoundEstimate {
    pub value: f64,
    pub raw_max: f64,
    pub argmax_n: usize,
    pub samples: usize,
    pub n_max: usize,
    pub safety: f64,
    pub seed: u64,
}

const D_ESTIMATE_LABEL: u64 = 0xD0;

/// Max of `‖d‖` over every internal node of `samples` trees of size
/// `n_max` (covering all sizes up to `n_max`) and over the full weight
/// support at `n = 2`, times `safety`.
pub fn estimate_d_bound(
    b: usize,
    sampler: &WeightSampler,
    n_max: usize,
    samples: usize,
    seed: u64,
    safety: f64,
) -> Result<DBoundEstimate> {
    if samples == 0 {
        return Err(invalid("samples must be at least 1"));
    }
    if n_max < 2 {
        return Err(invalid("n_max must be at least 2"));
    }
    if !(safety >= 1.0) {
        return Err(invalid(format!("safety factor must be >= 1, got {safety}")));
    }
    let table = expectations(n_max, b, sampler.mu())?;
    let mut best = (0.0f64, 1usize);
    for (z, _) in sampler.support() {
        for s in 0..b {
            let mut split = vec![0; b];
            split[s] = 1;
            let d = toll_from_split(&split, &z, &table)?;
            best = better(best, (d.norm(), 2));
        }
    }
    let stream_seed = rng::derive_seed(seed, D_ESTIMATE_LABEL);
    let sampled = (0..samples as u64)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(stream_seed, r);
            let tree = grow_bary(n_max, b, sampler, &mut g)?;
            Ok(toll_residuals_all(&tree, &table)?
                .iter()
                .fold((0.0, 1), |acc, d| better(acc, (d.norm(), d.n))))
        })
        .collect::<Result<Vec<_>>>()?;
    best = sampled.into_iter().fold(best, better);
    Ok(DBoundEstimate {
        value: best.0 * safety,
        raw_max: best.0,
        argmax_n: best.1,
        samples,
        n_max,
        safety,
        seed,
    })
}

fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}
