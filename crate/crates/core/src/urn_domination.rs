//! Pólya urns, the sorted-count kernels and the domination of
//! `S_n = Σᵢ f(I_{n,i}/n)` by `V = 1 − U(1−U)`.
//!
//! Sorted states live in `E_b`, the nonincreasing vectors of `b`
//! nonnegative counts. Kernel weights are exact integers over a common
//! denominator.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::recursion_core::f_closed_form;

/// Colour counts of PU(b): one ball per colour initially, `b − 1` extra
/// balls of the drawn colour per draw.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UrnState {
    pub counts: Vec<u32>,
}

impl UrnState {
    pub fn new(b: usize) -> Self {
        Self { counts: vec![0; b] }
    }

    pub fn draws(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn sorted(&self) -> Vec<u32> {
        let mut v = self.counts.clone();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }

    /// Draws one ball and returns its colour.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let b = self.counts.len() as u64;
        let total = b + self.draws() * (b - 1);
        let mut r = rng.random_range(0..total);
        for (j, c) in self.counts.iter_mut().enumerate() {
            let w = 1 + *c as u64 * (b - 1);
            if r < w {
                *c += 1;
                return j;
            }
            r -= w;
        }
        unreachable!("urn weights sum to the total")
    }
}

pub fn urn_step<R: Rng + ?Sized>(state: &UrnState, rng: &mut R) -> UrnState {
    let mut next = state.clone();
    next.draw(rng);
    next
}

/// Sorted counts after `draws` draws of a fresh PU(b).
pub fn plain_sorted_run<R: Rng + ?Sized>(draws: usize, b: usize, rng: &mut R) -> Vec<u32> {
    let mut urn = UrnState::new(b);
    for _ in 0..draws {
        urn.draw(rng);
    }
    urn.sorted()
}

pub fn check_sorted(x: &[u32]) -> Result<()> {
    if x.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::UnsortedState(x.to_vec()));
    }
    Ok(())
}

/// `α_j(x)`: size of the block of equal entries starting at `j` if `j` is
/// the first index of its block (with `x₀ = +∞`), else 0.
pub fn alpha(x: &[u32]) -> Vec<u32> {
    let mut out = vec![0; x.len()];
    let mut start = 0;
    for j in 1..=x.len() {
        if j == x.len() || x[j] != x[start] {
            out[start] = (j - start) as u32;
            start = j;
        }
    }
    out
}

/// Componentwise `a ≤ b`.
pub fn leq(a: &[u32], b: &[u32]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x <= y)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Move {
    pub target: Vec<u32>,
    /// Incremented coordinate, `None` for the stay move.
    pub coord: Option<usize>,
    pub weight: u64,
}

/// Transition pmf `weight/denom` over sorted target states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transition {
    pub denom: u64,
    pub moves: Vec<Move>,
}

impl Transition {
    pub fn is_normalized(&self) -> bool {
        self.moves.iter().map(|m| m.weight).sum::<u64>() == self.denom
    }

    pub fn prob(&self, target: &[u32]) -> BigRational {
        let w: u64 = self
            .moves
            .iter()
            .filter(|m| m.target == target)
            .map(|m| m.weight)
            .sum();
        BigRational::new(w.into(), self.denom.into())
    }

    pub fn to_f64(&self) -> Vec<(Vec<u32>, f64)> {
        self.moves
            .iter()
            .map(|m| (m.target.clone(), m.weight as f64 / self.denom as f64))
            .collect()
    }
}

fn bumped(x: &[u32], j: usize) -> Vec<u32> {
    let mut t = x.to_vec();
    t[j] += 1;
    t
}

/// `K_n(x, x + e_j) = α_j(1 + x_j(b−1)) / (b + n(b−1))`, `n = Σx`.
pub fn kernel(x: &[u32]) -> Result<Transition> {
    check_sorted(x)?;
    let b = x.len() as u64;
    if b < 2 {
        return Err(invalid("urn needs at least two colours"));
    }
    let n: u64 = x.iter().map(|&c| c as u64).sum();
    let moves = alpha(x)
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0)
        .map(|(j, &a)| Move {
            target: bumped(x, j),
            coord: Some(j),
            weight: a as u64 * (1 + x[j] as u64 * (b - 1)),
        })
        .collect();
    Ok(Transition {
        denom: b + n * (b - 1),
        moves,
    })
}

/// `K′_n(y, y + e_j) = α_j(1 + y_j b) / (b+1+nb)` and
/// `K′_n(y, y) = (1 + (n − Σy) b) / (b+1+nb)`.
pub fn kernel_prime(y: &[u32], n: u64) -> Result<Transition> {
    check_sorted(y)?;
    let b = y.len() as u64;
    if b < 2 {
        return Err(invalid("urn needs at least two colours"));
    }
    let s: u64 = y.iter().map(|&c| c as u64).sum();
    if s > n {
        return Err(invalid(format!("state {y:?} has more than n = {n} draws")));
    }
    let mut moves: Vec<Move> = alpha(y)
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0)
        .map(|(j, &a)| Move {
            target: bumped(y, j),
            coord: Some(j),
            weight: a as u64 * (1 + y[j] as u64 * b),
        })
        .collect();
    moves.push(Move {
        target: y.to_vec(),
        coord: None,
        weight: 1 + (n - s) * b,
    });
    Ok(Transition {
        denom: b + 1 + n * b,
        moves,
    })
}

/// Kernel of the `b` largest sorted counts of PU(b+1) after `n` draws
/// (the smallest count `n − Σy` must not exceed `y_b`).
pub fn kernel_prime_top_b(y: &[u32], n: u64) -> Result<Transition> {
    check_sorted(y)?;
    let b = y.len();
    let s: u64 = y.iter().map(|&c| c as u64).sum();
    let h = n
        .checked_sub(s)
        .filter(|&h| h <= y[b - 1] as u64)
        .ok_or_else(|| invalid(format!("{y:?} is not a top-{b} state at n = {n}")))?;
    let mut z = y.to_vec();
    z.push(h as u32);
    let bb = b as u64;
    let mut moves = Vec::new();
    let mut stay = 0;
    for (j, &a) in alpha(&z).iter().enumerate() {
        if a == 0 {
            continue;
        }
        let w = a as u64 * (1 + z[j] as u64 * bb);
        if j == b {
            stay += w;
        } else {
            moves.push(Move {
                target: bumped(y, j),
                coord: Some(j),
                weight: w,
            });
        }
    }
    if stay > 0 {
        moves.push(Move {
            target: y.to_vec(),
            coord: None,
            weight: stay,
        });
    }
    Ok(Transition {
        denom: bb + 1 + n * bb,
        moves,
    })
}

/// `(K_n(x,·), K′_n(x,·))` for a sorted `x` with `Σx = n`.
pub fn kernels(x: &[u32], n: u64) -> Result<(Transition, Transition)> {
    if x.iter().map(|&c| c as u64).sum::<u64>() != n {
        return Err(invalid(format!("state {x:?} does not sum to n = {n}")));
    }
    Ok((kernel(x)?, kernel_prime(x, n)?))
}

/// `lower ≼ upper` in the componentwise order on sorted states: every
/// upper set gets at least as much mass under `upper`.
pub fn dominated(lower: &Transition, upper: &Transition) -> bool {
    let mut points: Vec<&Vec<u32>> = lower
        .moves
        .iter()
        .chain(&upper.moves)
        .map(|m| &m.target)
        .collect();
    points.sort();
    points.dedup();
    let mass = |t: &Transition, set: &[bool]| -> u128 {
        t.moves
            .iter()
            .filter(|m| points.iter().position(|p| **p == m.target).is_some_and(|i| set[i]))
            .map(|m| m.weight as u128)
            .sum()
    };
    let k = points.len();
    assert!(k < 24, "support too large for upper-set enumeration");
    let mut set = vec![false; k];
    for mask in 1u32..(1 << k) {
        for (i, z) in points.iter().enumerate() {
            set[i] = (0..k).any(|g| mask >> g & 1 == 1 && leq(points[g], z));
        }
        if mass(lower, &set) * upper.denom as u128 > mass(upper, &set) * lower.denom as u128 {
            return false;
        }
    }
    true
}

/// Nonincreasing vectors of length `b` summing to `total`.
pub fn sorted_states(total: u32, b: usize) -> Vec<Vec<u32>> {
    fn go(rest: u32, cap: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 0 {
            if rest == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for v in (0..=cap.min(rest)).rev() {
            if (v as u64) * (slots as u64) < rest as u64 {
                break;
            }
            cur.push(v);
            go(rest - v, v, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(total, total, b, &mut Vec::with_capacity(b), &mut out);
    out
}

/// Sorted vectors componentwise below `x`.
pub fn sorted_below(x: &[u32]) -> Vec<Vec<u32>> {
    fn go(x: &[u32], cap: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let i = cur.len();
        if i == x.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=cap.min(x[i]) {
            cur.push(v);
            go(x, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(x, u32::MAX, &mut Vec::with_capacity(x.len()), &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KernelScan {
    pub b: usize,
    pub n_max: u32,
    pub pairs: u64,
    pub violations: Vec<(u32, Vec<u32>, Vec<u32>)>,
}

/// Checks `K′_n(y,·) ≼ K_n(x,·)` for every sorted `y ≤ x`, `Σx = n ≤ n_max`.
pub fn kernel_domination_scan(n_max: u32, b: usize) -> Result<KernelScan> {
    let mut scan = KernelScan {
        b,
        n_max,
        pairs: 0,
        violations: Vec::new(),
    };
    for n in 0..=n_max {
        for x in sorted_states(n, b) {
            let k = kernel(&x)?;
            for y in sorted_below(&x) {
                scan.pairs += 1;
                if !dominated(&kernel_prime(&y, n as u64)?, &k) {
                    scan.violations.push((n, y, x.clone()));
                }
            }
        }
    }
    Ok(scan)
}

/// Jointly simulated sorted chains: `upper` follows `K` (PU(b)) and
/// `lower` follows `K′`, with `lower ≤ upper` after every step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledRun {
    pub b: usize,
    pub steps: usize,
    upper: Vec<u32>,
    lower: Vec<u32>,
}

impl CoupledRun {
    pub fn upper_at(&self, m: usize) -> &[u32] {
        &self.upper[m * self.b..(m + 1) * self.b]
    }

    pub fn lower_at(&self, m: usize) -> &[u32] {
        &self.lower[m * self.b..(m + 1) * self.b]
    }

    pub fn final_upper(&self) -> &[u32] {
        self.upper_at(self.steps)
    }

    pub fn final_lower(&self) -> &[u32] {
        self.lower_at(self.steps)
    }
}

/// One coupled step driven by `r`, uniform on `0..K.denom·K′.denom`.
///
/// `K` moves are laid out in coordinate order. A `K′` move on a coordinate
/// where `y_j = x_j` must go with the `K` move on the same coordinate, so
/// its mass is placed at the start of that segment (it fits because
/// `K(x, x+e_j) ≥ K′(y, y+e_j)` there). The other `K′` moves keep `y`
/// below any `K` target and fill the remaining measure in order.
pub fn coupled_step(x: &[u32], y: &[u32], m: u64, r: u64) -> Result<(Vec<u32>, Vec<u32>)> {
    let k = kernel(x)?;
    let kp = kernel_prime(y, m)?;
    let (d1, d2) = (k.denom, kp.denom);
    debug_assert!(r < d1 * d2);

    let mut start = HashMap::new();
    let mut acc = 0;
    let mut x_next = None;
    for mv in &k.moves {
        let len = mv.weight * d2;
        start.insert(mv.coord, (acc, len));
        if x_next.is_none() && r < acc + len {
            x_next = Some(mv.target.clone());
        }
        acc += len;
    }

    let mut matched = Vec::new();
    let mut free = Vec::new();
    for mv in &kp.moves {
        match mv.coord {
            Some(j) if y[j] == x[j] => {
                let (s, len) = start[&Some(j)];
                let own = mv.weight * d1;
                debug_assert!(own <= len, "matched move does not fit");
                matched.push((s, own, mv));
            }
            _ => free.push(mv),
        }
    }
    let mut y_next = None;
    let mut before = 0;
    for &(s, len, mv) in &matched {
        if r >= s && r < s + len {
            y_next = Some(mv.target.clone());
        } else if s + len <= r {
            before += len;
        }
    }
    if y_next.is_none() {
        let mut rest = r - before;
        for mv in &free {
            let len = mv.weight * d1;
            if rest < len {
                y_next = Some(mv.target.clone());
                break;
            }
            rest -= len;
        }
    }
    Ok((
        x_next.expect("r lies in the K layout"),
        y_next.expect("r lies in the K′ layout"),
    ))
}

/// `n` coupled steps from the empty state. Any ordering violation is an error.
pub fn coupled_run<R: Rng + ?Sized>(n: usize, b: usize, rng: &mut R) -> Result<CoupledRun> {
    if b < 2 {
        return Err(invalid("urn needs at least two colours"));
    }
    let mut upper = vec![0u32; (n + 1) * b];
    let mut lower = vec![0u32; (n + 1) * b];
    for m in 0..n {
        let (cur, next) = (m * b, (m + 1) * b);
        let (x, y) = (&upper[cur..next], &lower[cur..next]);
        let bb = b as u64;
        let total = (bb + m as u64 * (bb - 1)) * (bb + 1 + m as u64 * bb);
        let r = rng.random_range(0..total);
        let (xn, yn) = coupled_step(x, y, m as u64, r)?;
        if !leq(&yn, &xn) {
            return Err(Error::OrderViolation {
                step: m + 1,
                lower: yn,
                upper: xn,
            });
        }
        upper[next..next + b].copy_from_slice(&xn);
        lower[next..next + b].copy_from_slice(&yn);
    }
    Ok(CoupledRun {
        b,
        steps: n,
        upper,
        lower,
    })
}

fn pack(x: &[u32]) -> u128 {
    x.iter().enumerate().fold(0, |k, (i, &c)| k | (c as u128) << (16 * i))
}

fn unpack(key: u128, b: usize) -> Vec<u32> {
    (0..b).map(|i| (key >> (16 * i) & 0xFFFF) as u32).collect()
}

/// Cap on the total number of sorted states visited by the exact DP.
pub const STATE_BUDGET: usize = 10_000_000;

/// Runs the sorted PU(b) chain for `draws` steps and calls `visit(m, law)`
/// with the exact law after `m` draws, `m = 0..=draws`.
pub fn sorted_count_levels(
    draws: usize,
    b: usize,
    mut visit: impl FnMut(usize, &[(Vec<u32>, f64)]) -> Result<()>,
) -> Result<usize> {
    if !(2..=8).contains(&b) || draws >= 1 << 16 {
        return Err(invalid("sorted-state DP supports 2 <= b <= 8 and fewer than 65536 draws"));
    }
    let mut level: Vec<(Vec<u32>, f64)> = vec![(vec![0; b], 1.0)];
    let mut visited = 1;
    visit(0, &level)?;
    for m in 1..=draws {
        let mut next: HashMap<u128, f64> = HashMap::with_capacity(level.len() * 2);
        for (x, p) in &level {
            let k = kernel(x)?;
            let denom = k.denom as f64;
            for mv in &k.moves {
                *next.entry(pack(&mv.target)).or_insert(0.0) += p * (mv.weight as f64 / denom);
            }
        }
        visited += next.len();
        if visited > STATE_BUDGET {
            return Err(Error::Budget(format!(
                "sorted-state DP for b = {b} exceeds {STATE_BUDGET} states at {m} draws"
            )));
        }
        let mut states: Vec<(Vec<u32>, f64)> = next.into_iter().map(|(k, p)| (unpack(k, b), p)).collect();
        states.sort_by(|a, c| a.0.cmp(&c.0));
        level = states;
        visit(m, &level)?;
    }
    Ok(visited)
}

/// Exact law of the sorted root split of a tree with `n` nodes.
pub fn sorted_split_law_exact(n: usize, b: usize) -> Result<Vec<(Vec<u32>, BigRational)>> {
    if n == 0 {
        return Err(invalid("tree size must be at least 1"));
    }
    let mut level: HashMap<Vec<u32>, BigRational> = HashMap::new();
    level.insert(vec![0; b], BigRational::from_integer(1.into()));
    for _ in 1..n {
        let mut next: HashMap<Vec<u32>, BigRational> = HashMap::new();
        for (x, p) in &level {
            let k = kernel(x)?;
            for mv in &k.moves {
                let q = BigRational::new(BigInt::from(mv.weight), BigInt::from(k.denom));
                *next.entry(mv.target.clone()).or_insert_with(BigRational::zero) += p * q;
            }
        }
        level = next;
    }
    let mut out: Vec<_> = level.into_iter().collect();
    out.sort_by(|a, c| a.0.cmp(&c.0));
    Ok(out)
}

/// Law of `V = 1 − U(1−U)` for `U` uniform on `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DominatingLaw;

impl DominatingLaw {
    pub fn cdf(&self, v: f64) -> f64 {
        if v < 0.75 {
            0.0
        } else if v >= 1.0 {
            1.0
        } else {
            (4.0 * v - 3.0).sqrt()
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        (p.clamp(0.0, 1.0).powi(2) + 3.0) / 4.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        1.0 - u * (1.0 - u)
    }
}

pub const DOMINATION_GRID: usize = 10_000;
pub const DOMINATION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationReport {
    pub b: usize,
    pub n: usize,
    pub atoms: usize,
    /// `min_v (cdf_S(v) − cdf_V(v))` over the grid.
    pub grid_margin: f64,
    pub worst_v: f64,
    /// Same minimum over all `v`, attained just below an atom of `S_n`.
    pub exact_margin: f64,
    pub first_violation: Option<f64>,
}

impl DominationReport {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Law of `S_n` as sorted `(value, prob)` atoms from the sorted split law.
pub fn s_law(n: usize, split_law: &[(Vec<u32>, f64)]) -> Vec<(f64, f64)> {
    let nf = n as f64;
    let mut atoms: Vec<(f64, f64)> = split_law
        .iter()
        .map(|(x, p)| (x.iter().map(|&c| f_closed_form(c as f64 / nf)).sum(), *p))
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    atoms
}

pub fn domination_report(b: usize, n: usize, atoms: &[(f64, f64)]) -> DominationReport {
    let law = DominatingLaw;
    let mut report = DominationReport {
        b,
        n,
        atoms: atoms.len(),
        grid_margin: f64::INFINITY,
        worst_v: 0.0,
        exact_margin: f64::INFINITY,
        first_violation: None,
    };
    let mut below = 0.0;
    for &(s, p) in atoms {
        report.exact_margin = report.exact_margin.min(below - law.cdf(s));
        below += p;
    }
    report.exact_margin = report.exact_margin.min(below - 1.0);
    let mut idx = 0;
    let mut cdf = 0.0;
    for k in 0..DOMINATION_GRID {
        let v = k as f64 / (DOMINATION_GRID - 1) as f64;
        while idx < atoms.len() && atoms[idx].0 <= v {
            cdf += atoms[idx].1;
            idx += 1;
        }
        let margin = cdf - law.cdf(v);
        if margin < report.grid_margin {
            report.grid_margin = margin;
            report.worst_v = v;
        }
        if margin < -DOMINATION_SLACK && report.first_violation.is_none() {
            report.first_violation = Some(v);
        }
    }
    report
}

/// Exact check of `S_n ≼ V` for one `n`.
pub fn check_domination(n: usize, b: usize) -> Result<DominationReport> {
    let mut reports = check_domination_range(n, b)?;
    Ok(reports.pop().expect("range includes n"))
}

/// Exact checks of `S_m ≼ V` for `m = 1..=n_max` in one sweep.
pub fn check_domination_range(n_max: usize, b: usize) -> Result<Vec<DominationReport>> {
    if n_max == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let mut reports = Vec::with_capacity(n_max);
    sorted_count_levels(n_max - 1, b, |m, law| {
        let n = m + 1;
        reports.push(domination_report(b, n, &s_law(n, law)));
        Ok(())
    })?;
    Ok(reports)
}

/// `Σ_{i≤b+1} f(y_i) ≤ Σ_{i≤b} f(x_i)` for probability vectors with
/// `y_i ≤ x_i`, `i ≤ b`.
pub fn sum_inequality_check(x: &[f64], y: &[f64]) -> Result<bool> {
    if y.len() != x.len() + 1 {
        return Err(invalid("y must have exactly one more coordinate than x"));
    }
    for v in [x, y] {
        if v.iter().any(|&c| !(0.0..=1.0).contains(&c)) {
            return Err(invalid("coordinates must lie in [0, 1]"));
        }
        if (v.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("vectors must sum to 1"));
        }
        if v.windows(2).any(|w| w[0] < w[1]) {
            return Err(invalid("coordinates must be non-increasing"));
        }
    }
    if x.iter().zip(y).any(|(a, c)| c > &(a + 1e-12)) {
        return Err(invalid("first coordinates of y must not exceed x"));
    }
    let lhs: f64 = y.iter().map(|&c| f_closed_form(c)).sum();
    let rhs: f64 = x.iter().map(|&c| f_closed_form(c)).sum();
    Ok(lhs <= rhs + 1e-12)
}

pub fn g(x: f64) -> f64 {
    10.0 * x * x + (2.0 - 6.0 * x) * (1.0 + (x * x + 1.0).sqrt())
}

fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let (a, b) = (q.numer().sqrt(), q.denom().sqrt());
    (&a * &a == *q.numer() && &b * &b == *q.denom()).then(|| BigRational::new(a, b))
}

/// `g` in exact arithmetic, where `x² + 1` is a rational square.
pub fn g_exact(x: &BigRational) -> Option<BigRational> {
    let one = BigRational::from_integer(1.into());
    let root = rational_sqrt(&(x * x + &one))?;
    let int = |v: i64| BigRational::from_integer(v.into());
    Some(int(10) * x * x + (int(2) - int(6) * x) * (one + root))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn alpha_blocks() {
        assert_eq!(alpha(&[3, 3, 1, 0, 0]), vec![2, 0, 1, 2, 0]);
        assert_eq!(alpha(&[0, 0]), vec![2, 0]);
        assert_eq!(alpha(&[2, 1]), vec![1, 1]);
    }

    #[test]
    fn unsorted_states_are_rejected() {
        assert!(matches!(kernel(&[0, 1]), Err(Error::UnsortedState(_))));
        assert!(kernel_prime(&[1, 2, 0], 5).is_err());
        assert!(kernel_prime(&[3, 0], 2).is_err());
    }

    #[test]
    fn binary_kernel_example() {
        let k = kernel(&[1, 0]).unwrap();
        assert_eq!(k.prob(&[2, 0]), q(2, 3));
        assert_eq!(k.prob(&[1, 1]), q(1, 3));
        let k0 = kernel(&[0, 0]).unwrap();
        assert_eq!(k0.prob(&[1, 0]), q(1, 1));
    }

    #[test]
    fn kernels_are_normalized() {
        for b in 2..=4 {
            for n in 0..=50u32 {
                for x in sorted_states(n, b) {
                    let (k, kp) = kernels(&x, n as u64).unwrap();
                    assert!(k.is_normalized() && kp.is_normalized(), "{x:?}");
                }
            }
            for n in 0..=20u64 {
                for s in 0..=n as u32 {
                    for y in sorted_states(s, b) {
                        assert!(kernel_prime(&y, n).unwrap().is_normalized());
                        if n - s as u64 <= *y.last().unwrap() as u64 {
                            assert!(kernel_prime_top_b(&y, n).unwrap().is_normalized());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn first_draw_is_symmetric() {
        let mut hits = 0;
        let runs = 20_000;
        for r in 0..runs {
            if UrnState::new(2).draw(&mut rng::stream(8, r)) == 0 {
                hits += 1;
            }
        }
        let p = hits as f64 / runs as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / runs as f64).sqrt());
    }

    #[test]
    fn sorted_states_enumeration() {
        assert_eq!(sorted_states(3, 2), vec![vec![3, 0], vec![2, 1]]);
        assert_eq!(sorted_states(0, 3), vec![vec![0, 0, 0]]);
        assert_eq!(sorted_states(6, 3).len(), 7);
        assert_eq!(sorted_below(&[2, 1]).len(), 5);
    }

    #[test]
    fn displayed_kernel_dominated_by_urn_kernel() {
        for b in 2..=3 {
            let scan = kernel_domination_scan(30, b).unwrap();
            assert!(scan.pairs > 0);
            assert!(scan.violations.is_empty(), "{:?}", &scan.violations[..1]);
        }
    }

    #[test]
    fn top_b_chain_is_not_dominated() {
        // two steps of the top-2 chain of PU(3) against two steps of PU(2)
        let step = |law: Vec<(Vec<u32>, BigRational)>, top: bool, n: u64| {
            let mut out: HashMap<Vec<u32>, BigRational> = HashMap::new();
            for (x, p) in law {
                let t = if top { kernel_prime_top_b(&x, n) } else { kernel(&x) }.unwrap();
                for mv in t.moves {
                    *out.entry(mv.target).or_insert_with(BigRational::zero) +=
                        &p * BigRational::new(mv.weight.into(), t.denom.into());
                }
            }
            out.into_iter().collect::<Vec<_>>()
        };
        let start = vec![(vec![0, 0], q(1, 1))];
        let top = step(step(start.clone(), true, 0), true, 1);
        let urn = step(step(start, false, 0), false, 1);
        let mass = |law: &[(Vec<u32>, BigRational)]| {
            law.iter()
                .filter(|(x, _)| leq(&[1, 1], x))
                .map(|(_, p)| p.clone())
                .sum::<BigRational>()
        };
        assert_eq!(mass(&top), q(2, 5));
        assert_eq!(mass(&urn), q(1, 3));
    }

    #[test]
    fn coupling_keeps_order_and_marginals() {
        for b in 2..=3 {
            for r in 0..300 {
                let run = coupled_run(120, b, &mut rng::stream(5, r)).unwrap();
                for m in 0..=run.steps {
                    assert!(leq(run.lower_at(m), run.upper_at(m)));
                    assert_eq!(run.upper_at(m).iter().sum::<u32>() as usize, m);
                }
            }
        }
        // upper chain law after 3 draws of PU(2): sorted (3,0) w.p. 1/2
        let runs = 40_000;
        let hits = (0..runs)
            .filter(|&r| coupled_run(3, 2, &mut rng::stream(6, r)).unwrap().final_upper() == [3, 0])
            .count();
        let p = hits as f64 / runs as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / runs as f64).sqrt(), "{p}");
    }

    #[test]
    fn exact_split_law_matches_uniform_for_b2() {
        let law = sorted_split_law_exact(5, 2).unwrap();
        assert_eq!(law, vec![(vec![2, 2], q(1, 5)), (vec![3, 1], q(2, 5)), (vec![4, 0], q(2, 5))]);
    }

    #[test]
    fn domination_small_cases() {
        let r = check_domination(2, 2).unwrap();
        assert!(r.holds());
        assert_eq!(r.atoms, 1);
        assert!(r.exact_margin >= 0.0);
        let law = DominatingLaw;
        assert_eq!(law.cdf(0.7), 0.0);
        assert!((law.cdf(0.8) - 0.2f64.sqrt()).abs() < 1e-15);
        assert!((law.quantile(law.cdf(0.9)) - 0.9).abs() < 1e-15);
        let v = law.sample(&mut rng::stream(0, 0));
        assert!((0.75..=1.0).contains(&v));
    }

    #[test]
    fn binary_s_law_is_uniform_split() {
        let n = 40;
        let mut got = Vec::new();
        sorted_count_levels(n - 1, 2, |m, law| {
            if m == n - 1 {
                got = s_law(n, law);
            }
            Ok(())
        })
        .unwrap();
        let nf = n as f64;
        let mut expect: Vec<(f64, f64)> = (0..n)
            .map(|k| (f_closed_form(k as f64 / nf) + f_closed_form((n - 1 - k) as f64 / nf), 1.0 / nf))
            .collect();
        expect.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut idx = 0;
        for (s, p) in &got {
            let mut mass = 0.0;
            while idx < expect.len() && (expect[idx].0 - s).abs() < 1e-12 {
                mass += expect[idx].1;
                idx += 1;
            }
            assert!((mass - p).abs() < 1e-12);
        }
        assert_eq!(idx, expect.len());
    }

    #[test]
    fn sum_inequality_examples() {
        let x = [0.5, 0.3, 0.2];
        assert!(sum_inequality_check(&x, &[0.5, 0.3, 0.2, 0.0]).unwrap());
        assert!(sum_inequality_check(&x, &[0.4, 0.3, 0.2, 0.1]).unwrap());
        assert!(sum_inequality_check(&x, &[0.4, 0.3, 0.1, 0.2]).is_err());
        assert!(sum_inequality_check(&x, &[0.6, 0.2, 0.1, 0.1]).is_err());
        assert_eq!(g_exact(&q(3, 4)), Some(BigRational::zero()));
        assert!(g(0.75).abs() < 1e-14);
        assert_eq!(g_exact(&q(1, 2)), None);
    }
}
