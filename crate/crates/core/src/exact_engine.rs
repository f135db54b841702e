//! Exact finite-`n` ground truth.
//!
//! * [`enumerate`] walks every external-node choice and every weight
//!   realization of the growth process. All leaves at depth `n` share the
//!   denominator `q^{n−1}·Π_k (1 + k(b−1))`, so probabilities are carried as
//!   integer numerators and turned into exact rationals at the end.
//! * [`split_marginal`] is the law of one root-subtree size, i.e. the
//!   number of draws of one colour in the Pólya urn PU(b).
//! * [`expectations`] runs the O(n²) recursion for `E[P_n]` and `E[W_n]`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::sum::CompensatedSum;
use crate::tree_models::WeightSampler;

/// Leaf-count ceiling for exhaustive enumeration.
pub const ENUMERATION_BUDGET: f64 = 5e7;

/// `f64` with a total order, for use as a distribution key.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(transparent)]
pub struct Real(pub f64);

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}

impl Eq for Real {}

impl std::hash::Hash for Real {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Finite distribution with exact rational probabilities, sorted by key.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf<K> {
    atoms: Vec<(K, BigRational)>,
}

impl<K: Ord + Clone> Pmf<K> {
    /// Merges duplicate keys and drops zero-probability atoms.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (K, BigRational)>) -> Self {
        let mut map: BTreeMap<K, BigRational> = BTreeMap::new();
        for (k, p) in pairs {
            *map.entry(k).or_insert_with(BigRational::zero) += p;
        }
        Self {
            atoms: map.into_iter().filter(|(_, p)| !p.is_zero()).collect(),
        }
    }

    pub fn point(k: K) -> Self {
        Self {
            atoms: vec![(k, BigRational::one())],
        }
    }

    pub fn atoms(&self) -> &[(K, BigRational)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn prob(&self, k: &K) -> BigRational {
        self.atoms
            .binary_search_by(|(key, _)| key.cmp(k))
            .map(|i| self.atoms[i].1.clone())
            .unwrap_or_else(|_| BigRational::zero())
    }

    pub fn total(&self) -> BigRational {
        self.atoms.iter().map(|(_, p)| p).sum()
    }

    pub fn map<K2: Ord + Clone>(&self, f: impl Fn(&K) -> K2) -> Pmf<K2> {
        Pmf::from_pairs(self.atoms.iter().map(|(k, p)| (f(k), p.clone())))
    }

    pub fn probs_f64(&self) -> Vec<(K, f64)> {
        self.atoms
            .iter()
            .map(|(k, p)| (k.clone(), p.to_f64().unwrap_or(f64::NAN)))
            .collect()
    }

    pub fn expect(&self, f: impl Fn(&K) -> f64) -> f64 {
        self.atoms
            .iter()
            .map(|(k, p)| f(k) * p.to_f64().unwrap_or(f64::NAN))
            .collect::<CompensatedSum>()
            .value()
    }

    /// Exact total-variation distance.
    pub fn tv_distance(&self, other: &Self) -> BigRational {
        let mut diff: BTreeMap<&K, BigRational> = BTreeMap::new();
        for (k, p) in &self.atoms {
            *diff.entry(k).or_insert_with(BigRational::zero) += p;
        }
        for (k, p) in &other.atoms {
            *diff.entry(k).or_insert_with(BigRational::zero) -= p;
        }
        diff.into_values().map(|d| d.abs()).sum::<BigRational>() / BigRational::from_integer(2.into())
    }
}

/// Joint law of `(P_n, W_n)` and law of the descending-sorted root split.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub joint: Pmf<(Real, Real)>,
    pub sorted_split: Pmf<Vec<usize>>,
}

impl Enumeration {
    pub fn path_length(&self) -> Pmf<Real> {
        self.joint.map(|(p, _)| *p)
    }

    pub fn wiener(&self) -> Pmf<Real> {
        self.joint.map(|(_, w)| *w)
    }
}

fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

type IntegerSupport = (Vec<(Vec<f64>, u128)>, u128);

fn integer_weights(support: &[(Vec<f64>, BigRational)]) -> Result<IntegerSupport> {
    let mut q = BigInt::one();
    for (_, p) in support {
        q = num_integer::Integer::lcm(&q, p.denom());
    }
    let to_u128 = |x: BigInt| x.to_u128().ok_or_else(|| Error::Budget("weight denominators too large".into()));
    let weights = support
        .iter()
        .map(|(z, p)| Ok((z.clone(), to_u128(p.numer() * (&q / p.denom()))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((weights, to_u128(q)?))
}

fn leaf_functionals(parent: &[u32], weight: &[f64], size: &mut Vec<u32>) -> (f64, f64) {
    let n = parent.len();
    size.clear();
    size.resize(n, 1);
    for i in (1..n).rev() {
        size[parent[i] as usize] += size[i];
    }
    let nf = n as f64;
    let (mut p, mut w) = (0.0, 0.0);
    for i in 1..n {
        let s = size[i] as f64;
        p += weight[i] * s;
        w += weight[i] * s * (nf - s);
    }
    (p, w)
}

struct BaryWalker {
    n: usize,
    b: usize,
    support: Vec<(Vec<f64>, u128)>,
    parent: Vec<u32>,
    weight: Vec<f64>,
    external: Vec<(u32, u32)>,
    z_choice: Vec<Option<usize>>,
    scratch: Vec<u32>,
    joint: HashMap<(u64, u64), u128>,
    split: HashMap<Vec<usize>, u128>,
    q: u128,
}

impl BaryWalker {
    fn walk(&mut self, weight: u128, events: u32) -> Result<()> {
        let k = self.parent.len();
        if k == self.n {
            return self.leaf(weight, events);
        }
        for e in 0..self.external.len() {
            let (u, s) = self.external.swap_remove(e);
            self.external.extend((0..self.b as u32).map(|t| (k as u32, t)));
            match self.z_choice[u as usize] {
                Some(j) => self.place(u, s, j, weight, events)?,
                None => {
                    for j in 0..self.support.len() {
                        self.z_choice[u as usize] = Some(j);
                        let w = weight
                            .checked_mul(self.support[j].1)
                            .ok_or_else(|| Error::Budget("probability numerator overflow".into()))?;
                        self.place(u, s, j, w, events + 1)?;
                    }
                    self.z_choice[u as usize] = None;
                }
            }
            self.external.truncate(self.external.len() - self.b);
            self.external.push((u, s));
            let last = self.external.len() - 1;
            self.external.swap(e, last);
        }
        Ok(())
    }

    fn place(&mut self, u: u32, s: u32, j: usize, weight: u128, events: u32) -> Result<()> {
        self.parent.push(u);
        self.weight.push(self.support[j].0[s as usize]);
        let r = self.walk(weight, events);
        self.parent.pop();
        self.weight.pop();
        r
    }

    fn leaf(&mut self, weight: u128, events: u32) -> Result<()> {
        let pad = self.q.checked_pow(self.n as u32 - 1 - events);
        let w = pad
            .and_then(|p| p.checked_mul(weight))
            .ok_or_else(|| Error::Budget("probability numerator overflow".into()))?;
        let (p, wi) = leaf_functionals(&self.parent, &self.weight, &mut self.scratch);
        *self.joint.entry((p.to_bits(), wi.to_bits())).or_insert(0) += w;
        let mut split: Vec<usize> = (1..self.n)
            .filter(|&i| self.parent[i] == 0)
            .map(|i| self.scratch[i] as usize)
            .collect();
        split.resize(self.b, 0);
        split.sort_unstable_by(|a, c| c.cmp(a));
        *self.split.entry(split).or_insert(0) += w;
        Ok(())
    }
}

/// Exact joint law of `(P_n, W_n)` and of the sorted root split for the
/// `b`-ary recursive tree with weights from `sampler`.
pub fn enumerate(n: usize, b: usize, sampler: &WeightSampler) -> Result<Enumeration> {
    if n == 0 {
        return Err(invalid("tree size must be at least 1"));
    }
    if sampler.b() != b {
        return Err(invalid(format!("sampler has arity {} but b = {b}", sampler.b())));
    }
    let support = sampler.support();
    let leaves: f64 = (1..n).map(|k| (1 + k * (b - 1)) as f64).product::<f64>()
        * (support.len() as f64).powi(n as i32 - 1);
    if leaves > ENUMERATION_BUDGET {
        return Err(Error::Budget(format!(
            "about {leaves:.3e} leaves for n = {n}, b = {b}, limit {ENUMERATION_BUDGET:.0e}"
        )));
    }
    let (support, q) = integer_weights(&support)?;
    let mut denom = q
        .checked_pow(n as u32 - 1)
        .ok_or_else(|| Error::Budget("denominator overflow".into()))?;
    for k in 1..n {
        denom = denom
            .checked_mul((1 + k * (b - 1)) as u128)
            .ok_or_else(|| Error::Budget("denominator overflow".into()))?;
    }
    let mut walker = BaryWalker {
        n,
        b,
        support,
        parent: vec![0],
        weight: vec![0.0],
        external: (0..b as u32).map(|s| (0, s)).collect(),
        z_choice: vec![None; n],
        scratch: Vec::new(),
        joint: HashMap::new(),
        split: HashMap::new(),
        q,
    };
    walker.walk(1, 0)?;
    let joint = Pmf::from_pairs(walker.joint.into_iter().map(|((p, w), c)| {
        ((Real(f64::from_bits(p)), Real(f64::from_bits(w))), ratio(c, denom))
    }));
    let sorted_split = Pmf::from_pairs(walker.split.into_iter().map(|(s, c)| (s, ratio(c, denom))));
    Ok(Enumeration { joint, sorted_split })
}

/// Exact joint law of `(P_n, W_n)` for the linear recursive tree with
/// integer parameter `beta` (weight function `1 + β·deg`).
pub fn enumerate_linear(n: usize, beta: u32) -> Result<Pmf<(Real, Real)>> {
    if n == 0 {
        return Err(invalid("tree size must be at least 1"));
    }
    let leaves: f64 = (1..n).map(|k| k as f64).product();
    if leaves > ENUMERATION_BUDGET {
        return Err(Error::Budget(format!("{leaves:.3e} leaves for n = {n}")));
    }
    let beta = beta as u128;
    let mut denom: u128 = 1;
    for k in 1..n as u128 {
        denom = denom
            .checked_mul(k + beta * (k - 1))
            .ok_or_else(|| Error::Budget("denominator overflow".into()))?;
    }
    struct Walk {
        n: usize,
        beta: u128,
        parent: Vec<u32>,
        degree: Vec<u128>,
        weight: Vec<f64>,
        scratch: Vec<u32>,
        out: HashMap<(u64, u64), u128>,
    }
    impl Walk {
        fn go(&mut self, num: u128) {
            let k = self.parent.len();
            if k == self.n {
                let (p, w) = leaf_functionals(&self.parent, &self.weight, &mut self.scratch);
                *self.out.entry((p.to_bits(), w.to_bits())).or_insert(0) += num;
                return;
            }
            for u in 0..k {
                let w = 1 + self.beta * self.degree[u];
                self.parent.push(u as u32);
                self.weight.push(1.0);
                self.degree[u] += 1;
                self.go(num * w);
                self.degree[u] -= 1;
                self.parent.pop();
                self.weight.pop();
            }
        }
    }
    let mut walk = Walk {
        n,
        beta,
        parent: vec![0],
        degree: vec![0; n],
        weight: vec![0.0],
        scratch: Vec::new(),
        out: HashMap::new(),
    };
    walk.go(1);
    Ok(Pmf::from_pairs(walk.out.into_iter().map(|((p, w), c)| {
        ((Real(f64::from_bits(p)), Real(f64::from_bits(w))), ratio(c, denom))
    })))
}

/// Law of `(P̃_{n−1} + n − 1, W̃_{n−1} − P̃_{n−1} + (n−1)²)` where the tilde
/// functionals belong to the `b`-ary recursive tree of size `n − 1` with
/// weights a uniform permutation of `(1, 0, …, 0)`. This is the law of
/// `(P_n, W_n)` for the linear recursive tree with `β = b − 2`.
pub fn transfer_law(n: usize, b: usize) -> Result<Pmf<(Real, Real)>> {
    if n < 2 {
        return Err(invalid("transfer identity needs n >= 2"));
    }
    let mut z = vec![0.0; b];
    z[0] = 1.0;
    let sampler = WeightSampler::permutation(z)?;
    let m = (n - 1) as f64;
    Ok(enumerate(n - 1, b, &sampler)?
        .joint
        .map(|(p, w)| (Real(p.0 + m), Real(w.0 - p.0 + m * m))))
}

/// Marginal law of `I_{n,1}` on `{0, …, n−1}`.
///
/// Colour 1 of PU(b) starts with weight `1/(b−1)` against `1` for the rest
/// (in units of `b−1` balls), so after `n−1` draws the count is
/// beta-binomial and `p(k+1) = p(k)·(k + 1/(b−1))/(k+1)`.
pub fn split_marginal(n: usize, b: usize) -> Vec<f64> {
    assert!(n >= 1 && b >= 2);
    let draws = n - 1;
    let bf = b as f64;
    let log_p0: f64 = (0..draws)
        .map(|j| {
            let j = j as f64;
            ((bf - 1.0) * (1.0 + j) / (bf + j * (bf - 1.0))).ln()
        })
        .sum();
    let a = 1.0 / (bf - 1.0);
    let mut pmf = Vec::with_capacity(n);
    let mut p = log_p0.exp();
    for k in 0..n {
        pmf.push(p);
        p *= (k as f64 + a) / (k as f64 + 1.0);
    }
    pmf
}

/// [`split_marginal`] by exact dynamic programming over the urn draws.
pub fn split_marginal_exact(n: usize, b: usize) -> Pmf<usize> {
    assert!(n >= 1 && b >= 2);
    let mut dist = vec![BigRational::one()];
    for m in 0..n - 1 {
        let total = BigInt::from(b + m * (b - 1));
        let mut next = vec![BigRational::zero(); dist.len() + 1];
        for (c, p) in dist.iter().enumerate() {
            let hit = BigRational::new(BigInt::from(1 + c * (b - 1)), total.clone());
            next[c + 1] += p * &hit;
            next[c] += p * (BigRational::one() - hit);
        }
        dist = next;
    }
    Pmf::from_pairs(dist.into_iter().enumerate())
}

/// `E[P_n]` and `E[W_n]` for `n = 0..=n_max` (`n = 0` is a zero placeholder).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationTable {
    pub b: usize,
    pub mu: f64,
    ep: Vec<f64>,
    ew: Vec<f64>,
}

impl ExpectationTable {
    pub fn n_max(&self) -> usize {
        self.ep.len() - 1
    }

    pub fn ep(&self, n: usize) -> f64 {
        self.ep[n]
    }

    pub fn ew(&self, n: usize) -> f64 {
        self.ew[n]
    }

    pub fn covers(&self, n: usize) -> Result<()> {
        if n > self.n_max() {
            return Err(Error::IncompleteTable {
                n,
                covered: self.n_max(),
            });
        }
        Ok(())
    }
}

/// Expectation recursion from the subtree decompositions
/// `P_n = Σᵢ (P⁽ⁱ⁾ + Zᵢ Iᵢ)` and `W_n = Σᵢ W⁽ⁱ⁾ + (n − Iᵢ)(P⁽ⁱ⁾ + Zᵢ Iᵢ)`.
pub fn expectations(n_max: usize, b: usize, mu: f64) -> Result<ExpectationTable> {
    if n_max < 1 {
        return Err(invalid("n_max must be at least 1"));
    }
    if b < 2 {
        return Err(invalid(format!("b must be at least 2, got {b}")));
    }
    let bf = b as f64;
    let mut ep = vec![0.0; n_max + 1];
    let mut ew = vec![0.0; n_max + 1];
    for n in 2..=n_max {
        let pmf = split_marginal(n, b);
        let nf = n as f64;
        let mut sp = CompensatedSum::new();
        let mut sw = CompensatedSum::new();
        let mut sk = CompensatedSum::new();
        for (k, &p) in pmf.iter().enumerate() {
            let kf = k as f64;
            sp.add(p * ep[k]);
            sw.add(p * (ew[k] + (nf - kf) * ep[k]));
            sk.add(p * kf * (nf - kf));
        }
        ep[n] = bf * sp.value() + mu * (nf - 1.0);
        ew[n] = bf * sw.value() + mu * bf * sk.value();
    }
    Ok(ExpectationTable { b, mu, ep, ew })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn single_node() {
        let e = enumerate(1, 2, &WeightSampler::unit(2).unwrap()).unwrap();
        assert_eq!(e.joint, Pmf::point((Real(0.0), Real(0.0))));
        assert_eq!(e.sorted_split, Pmf::point(vec![0, 0]));
    }

    #[test]
    fn three_nodes_binary() {
        let e = enumerate(3, 2, &WeightSampler::unit(2).unwrap()).unwrap();
        let p = e.path_length();
        assert_eq!(p.prob(&Real(2.0)), q(1, 3));
        assert_eq!(p.prob(&Real(3.0)), q(2, 3));
        assert_eq!(e.wiener(), Pmf::point(Real(4.0)));
        assert_eq!(e.joint.total(), BigRational::one());
    }

    #[test]
    fn sorted_split_matches_urn_for_b2() {
        // b = 2: I_{n,1} uniform, so sorted pairs (k, n−1−k) have mass 2/n except the middle
        let e = enumerate(5, 2, &WeightSampler::unit(2).unwrap()).unwrap();
        assert_eq!(e.sorted_split.prob(&vec![4, 0]), q(2, 5));
        assert_eq!(e.sorted_split.prob(&vec![3, 1]), q(2, 5));
        assert_eq!(e.sorted_split.prob(&vec![2, 2]), q(1, 5));
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            enumerate(14, 2, &WeightSampler::unit(2).unwrap()),
            Err(Error::Budget(_))
        ));
        assert!(enumerate(10, 2, &WeightSampler::unit(2).unwrap()).is_ok());
    }

    #[test]
    fn split_marginal_cases() {
        for n in 1..12 {
            let m = split_marginal(n, 2);
            assert!(m.iter().all(|&p| (p - 1.0 / n as f64).abs() < 1e-14));
        }
        assert_eq!(split_marginal(1, 3), vec![1.0]);
        let m = split_marginal(2, 3);
        assert!((m[0] - 2.0 / 3.0).abs() < 1e-15 && (m[1] - 1.0 / 3.0).abs() < 1e-15);
        let exact = split_marginal_exact(2, 3);
        assert_eq!(exact.prob(&1), q(1, 3));
    }

    #[test]
    fn split_marginal_closed_form_matches_dp() {
        for b in 2..6 {
            for n in 1..40 {
                let closed = split_marginal(n, b);
                let dp = split_marginal_exact(n, b);
                assert_eq!(dp.total(), BigRational::one());
                for (k, p) in dp.probs_f64() {
                    assert!((closed[k] - p).abs() < 1e-13, "b={b} n={n} k={k}");
                }
                let mean: f64 = closed.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
                assert!((mean - (n - 1) as f64 / b as f64).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn expectation_small_values() {
        let t = expectations(10, 2, 1.0).unwrap();
        assert_eq!(t.ep(1), 0.0);
        assert_eq!(t.ew(1), 0.0);
        assert!((t.ep(2) - 1.0).abs() < 1e-15);
        assert!((t.ep(3) - 8.0 / 3.0).abs() < 1e-14);
        let h3 = 1.0 + 0.5 + 1.0 / 3.0;
        assert!((t.ep(3) - (2.0 * 4.0 * h3 - 12.0)).abs() < 1e-13);
        assert!((t.ew(3) - 4.0).abs() < 1e-13);
        let t3 = expectations(5, 3, 0.25).unwrap();
        assert!((t3.ep(2) - 0.25).abs() < 1e-15);
        assert!(expectations(0, 2, 1.0).is_err());
        assert!(matches!(t.covers(11), Err(Error::IncompleteTable { .. })));
    }

    #[test]
    fn bst_closed_form() {
        let t = expectations(500, 2, 1.0).unwrap();
        let mut h = 0.0;
        for n in 1..=500 {
            h += 1.0 / n as f64;
            let nf = n as f64;
            let closed = 2.0 * (nf + 1.0) * h - 4.0 * nf;
            assert!((t.ep(n) - closed).abs() < 1e-9 * (1.0 + closed), "n={n}");
        }
    }

    #[test]
    fn expectations_agree_with_enumeration() {
        let cases = [
            (2, WeightSampler::unit(2).unwrap(), 7),
            (2, WeightSampler::permutation(vec![1.0, 0.0]).unwrap(), 6),
            (3, WeightSampler::permutation(vec![1.0, 0.0, 0.0]).unwrap(), 5),
            (3, WeightSampler::constant(vec![0.5; 3]).unwrap(), 5),
        ];
        for (b, sampler, n_max) in cases {
            let table = expectations(n_max, b, sampler.mu()).unwrap();
            for n in 1..=n_max {
                let e = enumerate(n, b, &sampler).unwrap();
                let ep = e.joint.expect(|(p, _)| p.0);
                let ew = e.joint.expect(|(_, w)| w.0);
                assert!((ep - table.ep(n)).abs() < 1e-10, "b={b} n={n}");
                assert!((ew - table.ew(n)).abs() < 1e-10, "b={b} n={n}");
            }
        }
    }

    #[test]
    fn linear_enumeration_small_cases() {
        let l3 = enumerate_linear(3, 0).unwrap();
        assert_eq!(l3.prob(&(Real(2.0), Real(4.0))), q(1, 2));
        assert_eq!(l3.prob(&(Real(3.0), Real(4.0))), q(1, 2));
        assert_eq!(enumerate_linear(6, 1).unwrap().total(), BigRational::one());
    }

    #[test]
    fn tv_distance_is_exact() {
        let a = Pmf::from_pairs([(0, q(1, 2)), (1, q(1, 2))]);
        let b = Pmf::from_pairs([(1, q(1, 4)), (2, q(3, 4))]);
        assert_eq!(a.tv_distance(&b), q(3, 4));
        assert_eq!(a.tv_distance(&a), BigRational::zero());
    }
}
