//! Random tree generators.
//!
//! * `grow_bary`: the `b`-ary recursive tree. Starting from the root with
//!   `b` external slots, each step converts a uniformly chosen external slot
//!   into an internal node. Every internal node carries an independent copy
//!   of the weight vector `Z`; entry `i` weighs the edge to its slot-`i` child.
//! * `grow_linear`: the linear recursive tree, where node `k+1` attaches to
//!   `u` with probability proportional to `1 + β·deg(u)`.
//!
//! Nodes are labelled `0..n` in insertion order, so every parent index is
//! smaller than its child's.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};

/// Distribution of the edge-weight vector `Z = (Z₁, …, Z_b)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum WeightKind {
    /// All weights 1.
    Unit,
    /// A fixed vector; entries must be equal so the marginals agree.
    Constant(Vec<f64>),
    /// A uniformly random permutation of the given entries.
    Permutation(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSampler {
    kind: WeightKind,
    b: usize,
    mu: f64,
    z_norm_bound: f64,
}

impl WeightSampler {
    pub fn unit(b: usize) -> Result<Self> {
        check_arity(b)?;
        Ok(Self {
            kind: WeightKind::Unit,
            b,
            mu: 1.0,
            z_norm_bound: (b as f64).sqrt(),
        })
    }

    pub fn constant(values: Vec<f64>) -> Result<Self> {
        check_values(&values)?;
        if values.iter().any(|&v| v != values[0]) {
            return Err(invalid(
                "constant weight vectors need equal entries (identically distributed components)",
            ));
        }
        Ok(Self {
            b: values.len(),
            mu: values[0],
            z_norm_bound: norm(&values),
            kind: WeightKind::Constant(values),
        })
    }

    pub fn permutation(values: Vec<f64>) -> Result<Self> {
        check_values(&values)?;
        Ok(Self {
            b: values.len(),
            mu: values.iter().sum::<f64>() / values.len() as f64,
            z_norm_bound: norm(&values),
            kind: WeightKind::Permutation(values),
        })
    }

    /// Parses `unit`, `const:v` (or `const:v,…,v`) and `perm:v1,…,vb`.
    pub fn parse(spec: &str, b: usize) -> Result<Self> {
        let spec = spec.trim();
        if spec == "unit" {
            return Self::unit(b);
        }
        let (head, rest) = spec
            .split_once(':')
            .ok_or_else(|| invalid(format!("unknown weight spec `{spec}`")))?;
        let values = rest
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| invalid(format!("bad weight value `{v}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let sampler = match head {
            "const" if values.len() == 1 => Self::constant(vec![values[0]; b])?,
            "const" => Self::constant(values)?,
            "perm" => Self::permutation(values)?,
            _ => return Err(invalid(format!("unknown weight kind `{head}`"))),
        };
        if sampler.b != b {
            return Err(invalid(format!(
                "weight vector has {} entries but b = {b}",
                sampler.b
            )));
        }
        Ok(sampler)
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn b(&self) -> usize {
        self.b
    }

    /// `E[Z₁]`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Almost-sure bound on `‖Z‖`.
    pub fn z_norm_bound(&self) -> f64 {
        self.z_norm_bound
    }

    /// Writes one realization of `Z` into `out` (length `b`).
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.kind {
            WeightKind::Unit => out.fill(1.0),
            WeightKind::Constant(v) => out.copy_from_slice(v),
            WeightKind::Permutation(v) => {
                out.copy_from_slice(v);
                out.shuffle(rng);
            }
        }
    }

    /// Distinct realizations of `Z` with exact probabilities.
    pub fn support(&self) -> Vec<(Vec<f64>, BigRational)> {
        match &self.kind {
            WeightKind::Unit => vec![(vec![1.0; self.b], BigRational::from_integer(1.into()))],
            WeightKind::Constant(v) => vec![(v.clone(), BigRational::from_integer(1.into()))],
            WeightKind::Permutation(v) => {
                let mut perms: Vec<Vec<f64>> = Vec::new();
                permutations(v, &mut perms);
                let total = perms.len();
                let mut distinct: Vec<(Vec<f64>, usize)> = Vec::new();
                for p in perms {
                    match distinct.iter_mut().find(|(q, _)| bits_eq(q, &p)) {
                        Some((_, c)) => *c += 1,
                        None => distinct.push((p, 1)),
                    }
                }
                distinct
                    .into_iter()
                    .map(|(p, c)| (p, BigRational::new(BigInt::from(c), BigInt::from(total))))
                    .collect()
            }
        }
    }
}

fn check_arity(b: usize) -> Result<()> {
    if b < 2 {
        return Err(invalid(format!("b must be at least 2, got {b}")));
    }
    Ok(())
}

fn check_values(values: &[f64]) -> Result<()> {
    check_arity(values.len())?;
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("edge weights must be finite and nonnegative"));
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn permutations(v: &[f64], out: &mut Vec<Vec<f64>>) {
    fn rec(cur: &mut Vec<f64>, k: usize, out: &mut Vec<Vec<f64>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for i in k..cur.len() {
            cur.swap(k, i);
            rec(cur, k + 1, out);
            cur.swap(k, i);
        }
    }
    rec(&mut v.to_vec(), 0, out);
}

/// Rooted tree with ordered children and nonnegative edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTree {
    /// `parent[0]` is unused (the root).
    parent: Vec<u32>,
    /// Slot under the parent for `b`-ary trees, sibling rank for linear trees.
    slot: Vec<u32>,
    /// Weight of the edge to the parent; `edge_weight[0] = 0`.
    edge_weight: Vec<f64>,
    arity: Option<u32>,
}

impl WeightedTree {
    /// Builds a tree from explicit parent links (`None` only for node 0) and
    /// checks the structural invariants.
    pub fn from_parts(
        parent: &[Option<usize>],
        slot: &[u32],
        edge_weight: &[f64],
        arity: Option<u32>,
    ) -> Result<Self> {
        let n = parent.len();
        if n == 0 || slot.len() != n || edge_weight.len() != n {
            return Err(invalid("parent, slot and weight arrays must be nonempty and equally long"));
        }
        if parent[0].is_some() {
            return Err(invalid("node 0 must be the root"));
        }
        let mut p = Vec::with_capacity(n);
        p.push(0);
        for (i, q) in parent.iter().enumerate().skip(1) {
            let q = q.ok_or_else(|| invalid(format!("node {i} has no parent")))?;
            p.push(q as u32);
        }
        let mut w = edge_weight.to_vec();
        w[0] = 0.0;
        let tree = Self {
            parent: p,
            slot: slot.to_vec(),
            edge_weight: w,
            arity,
        };
        tree.check_invariants()?;
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        (node != 0).then(|| self.parent[node] as usize)
    }

    pub fn slot(&self, node: usize) -> u32 {
        self.slot[node]
    }

    pub fn edge_weight(&self, node: usize) -> f64 {
        self.edge_weight[node]
    }

    /// `Some(b)` for `b`-ary recursive trees.
    pub fn arity(&self) -> Option<u32> {
        self.arity
    }

    pub(crate) fn parents_raw(&self) -> &[u32] {
        &self.parent
    }

    pub(crate) fn weights_raw(&self) -> &[f64] {
        &self.edge_weight
    }

    /// Children of each node in slot order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.len()];
        for i in 1..self.len() {
            ch[self.parent[i] as usize].push(i);
        }
        for c in &mut ch {
            c.sort_by_key(|&i| self.slot[i]);
        }
        ch
    }

    /// Recursive labelling (which implies a connected acyclic tree),
    /// nonnegative weights and, for `b`-ary trees, distinct slots below `b`.
    pub fn check_invariants(&self) -> Result<()> {
        for i in 1..self.len() {
            if self.parent[i] as usize >= i {
                return Err(invalid(format!(
                    "node {i} has parent {} (labels must increase away from the root)",
                    self.parent[i]
                )));
            }
            if !(self.edge_weight[i] >= 0.0 && self.edge_weight[i].is_finite()) {
                return Err(invalid(format!("node {i} has a negative or non-finite weight")));
            }
        }
        if let Some(b) = self.arity {
            let mut used = vec![false; self.len() * b as usize];
            for i in 1..self.len() {
                let s = self.slot[i];
                if s >= b {
                    return Err(invalid(format!("node {i} occupies slot {s} >= b = {b}")));
                }
                let key = self.parent[i] as usize * b as usize + s as usize;
                if std::mem::replace(&mut used[key], true) {
                    return Err(invalid(format!("slot {s} of node {} used twice", self.parent[i])));
                }
            }
        }
        Ok(())
    }
}

/// Grows a random `b`-ary recursive tree with `n` internal nodes.
pub fn grow_bary<R: Rng + ?Sized>(
    n: usize,
    b: usize,
    sampler: &WeightSampler,
    rng: &mut R,
) -> Result<WeightedTree> {
    check_arity(b)?;
    if n == 0 {
        return Err(invalid("tree size must be at least 1"));
    }
    if sampler.b() != b {
        return Err(invalid(format!("sampler has arity {} but b = {b}", sampler.b())));
    }
    let mut parent = Vec::with_capacity(n);
    let mut slot = Vec::with_capacity(n);
    let mut weight = Vec::with_capacity(n);
    parent.push(0u32);
    slot.push(0u32);
    weight.push(0.0);
    if n > 1 {
        // weight vectors are drawn when a node receives its first child
        let mut z = vec![0.0; n * b];
        let mut has_z = vec![false; n];
        let mut external: Vec<(u32, u32)> = Vec::with_capacity(n * (b - 1) + 1);
        external.extend((0..b as u32).map(|s| (0, s)));
        for k in 1..n {
            let pick = rng.random_range(0..external.len());
            let (u, s) = external.swap_remove(pick);
            let u_idx = u as usize;
            if !has_z[u_idx] {
                sampler.fill(rng, &mut z[u_idx * b..(u_idx + 1) * b]);
                has_z[u_idx] = true;
            }
            parent.push(u);
            slot.push(s);
            weight.push(z[u_idx * b + s as usize]);
            external.extend((0..b as u32).map(|s| (k as u32, s)));
        }
    }
    Ok(WeightedTree {
        parent,
        slot,
        edge_weight: weight,
        arity: Some(b as u32),
    })
}

/// Prefix sums over node weights for attachment sampling.
struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self {
            tree: vec![0.0; n + 1],
        }
    }

    fn add(&mut self, i: usize, delta: f64) {
        let mut i = i + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, mut target: f64) -> usize {
        let mut pos = 0;
        let mut step = (self.tree.len() - 1).next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

/// Grows a random linear recursive tree with weight function `1 + β·deg`.
/// All edge weights are 1.
pub fn grow_linear<R: Rng + ?Sized>(n: usize, beta: f64, rng: &mut R) -> Result<WeightedTree> {
    if n == 0 {
        return Err(invalid("tree size must be at least 1"));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be nonnegative, got {beta}")));
    }
    let mut parent = Vec::with_capacity(n);
    let mut slot = Vec::with_capacity(n);
    parent.push(0u32);
    slot.push(0u32);
    let mut degree = vec![0u32; n];
    let mut prefix = Fenwick::new(n);
    prefix.add(0, 1.0);
    for k in 1..n {
        let total = k as f64 + beta * (k - 1) as f64;
        let target = rng.random::<f64>() * total;
        let u = prefix.find(target).min(k - 1);
        parent.push(u as u32);
        slot.push(degree[u]);
        degree[u] += 1;
        if beta != 0.0 {
            prefix.add(u, beta);
        }
        prefix.add(k, 1.0);
    }
    let mut edge_weight = vec![1.0; n];
    edge_weight[0] = 0.0;
    Ok(WeightedTree {
        parent,
        slot,
        edge_weight,
        arity: None,
    })
}
