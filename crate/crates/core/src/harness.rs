//! Seeded Monte Carlo experiments and their reports.
//!
//! Replicate `r` always draws from `rng::stream(seed', r)`; shards only
//! partition the replicate range and are concatenated in shard order, so
//! outputs are identical for any shard count.

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact_engine::{enumerate, enumerate_linear, expectations, transfer_law, Real};
use crate::functionals::{functionals, root_split, FunctionalPair};
use crate::numerics::Constants;
use crate::recursion_core::{estimate_d_bound, toll_main_term, toll_residual, DBoundEstimate, ScaledVector};
use crate::rng;
use crate::stats::{binomial_stderr, chi_square_gof, empirical_tv, ks_two_sample, ChiSquareResult, KsResult};
use crate::tail_bounds::{upper_tail, Piece, PiecewiseBound};
use crate::tree_models::{grow_bary, grow_linear, WeightSampler, WeightedTree};
use crate::urn_domination::{coupled_run, plain_sorted_run};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Bary,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Either a number or the word `"estimate"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DBoundSetting {
    Explicit(f64),
    Named(String),
}

impl std::str::FromStr for DBoundSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<f64>() {
            Ok(v) => Ok(Self::Explicit(v)),
            Err(_) if s == "estimate" => Ok(Self::Named(s.into())),
            Err(_) => Err(Error::Config(format!("d_bound must be a number or \"estimate\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateBudget {
    pub samples: usize,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default = "default_safety")]
    pub safety: f64,
}

fn default_safety() -> f64 {
    1.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    pub b: usize,
    pub beta: f64,
    pub n: usize,
    pub samples: usize,
    pub weights: String,
    pub seed: u64,
    pub shards: usize,
    pub t_grid: Option<Vec<f64>>,
    pub d_bound: DBoundSetting,
    pub estimate: Option<EstimateBudget>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: Model::Bary,
            b: 2,
            beta: 0.0,
            n: 100,
            samples: 10_000,
            weights: "unit".into(),
            seed: 0,
            shards: 1,
            t_grid: None,
            d_bound: DBoundSetting::Explicit(1.0),
            estimate: None,
            out: None,
            format: Format::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.shards == 0 {
            return bad("shards must be at least 1".into());
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.model == Model::Bary && self.b < 2 {
            return bad(format!("b must be at least 2, got {}", self.b));
        }
        if self.model == Model::Linear && !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be a nonnegative number, got {}", self.beta));
        }
        if let Some(grid) = &self.t_grid {
            if grid.is_empty() || grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return bad("t_grid must be nonempty with finite nonnegative entries".into());
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return bad("t_grid must be strictly increasing".into());
            }
        }
        match &self.d_bound {
            DBoundSetting::Explicit(d) if !(*d > 0.0 && d.is_finite()) => {
                return bad(format!("d_bound must be positive, got {d}"));
            }
            DBoundSetting::Named(s) if s != "estimate" => {
                return bad(format!("d_bound must be a number or \"estimate\", got {s:?}"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<WeightSampler> {
        WeightSampler::parse(&self.weights, self.b)
    }
}

/// Runs `f` on replicates `0..samples`, split into contiguous shards that
/// execute in parallel and are concatenated in shard order.
pub fn run_sharded<T: Send>(
    samples: usize,
    shards: usize,
    f: impl Fn(u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let shards = shards.clamp(1, samples.max(1));
    let parts = (0..shards)
        .into_par_iter()
        .map(|k| {
            let lo = k * samples / shards;
            let hi = (k + 1) * samples / shards;
            (lo..hi).map(|r| f(r as u64)).collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

const TREE_LABEL: u64 = 0x7EE;
const LINEAR_LABEL: u64 = 0x11EA;

fn grow(cfg: &ExperimentConfig, sampler: Option<&WeightSampler>, r: u64) -> Result<WeightedTree> {
    match cfg.model {
        Model::Bary => {
            let mut g = rng::stream(rng::derive_seed(cfg.seed, TREE_LABEL), r);
            grow_bary(cfg.n, cfg.b, sampler.expect("b-ary model has a sampler"), &mut g)
        }
        Model::Linear => {
            let mut g = rng::stream(rng::derive_seed(cfg.seed, LINEAR_LABEL), r);
            grow_linear(cfg.n, cfg.beta, &mut g)
        }
    }
}

fn sampler_for(cfg: &ExperimentConfig) -> Result<Option<WeightSampler>> {
    match cfg.model {
        Model::Bary => cfg.sampler().map(Some),
        Model::Linear => Ok(None),
    }
}

/// `(P_n, W_n)` of every replicate.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Vec<FunctionalPair>> {
    cfg.validate()?;
    let sampler = sampler_for(cfg)?;
    run_sharded(cfg.samples, cfg.shards, |r| Ok(functionals(&grow(cfg, sampler.as_ref(), r)?)))
}

pub fn write_simulation_csv(rows: &[FunctionalPair], out: &mut impl Write) -> Result<()> {
    writeln!(out, "replicate,path_length,wiener")?;
    for (r, p) in rows.iter().enumerate() {
        writeln!(out, "{r},{:.16e},{:.16e}", p.path_length, p.wiener)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    WienerRight,
    WienerLeft,
    PathRight,
    PathLeft,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::WienerRight, Side::WienerLeft, Side::PathRight, Side::PathLeft];

    pub fn name(self) -> &'static str {
        match self {
            Side::WienerRight => "wiener_right",
            Side::WienerLeft => "wiener_left",
            Side::PathRight => "path_right",
            Side::PathLeft => "path_left",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum DProvenance {
    Explicit { value: f64 },
    Estimated(DBoundEstimate),
}

impl DProvenance {
    pub fn value(&self) -> f64 {
        match self {
            DProvenance::Explicit { value } => *value,
            DProvenance::Estimated(e) => e.value,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            DProvenance::Explicit { .. } => "explicit",
            DProvenance::Estimated(_) => "estimated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub t: f64,
    pub side: Side,
    pub freq: f64,
    pub stderr: f64,
    pub bound: f64,
    /// `bound − (freq + 4·stderr)`; negative means a breach.
    pub margin: f64,
    pub d_source: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub b: usize,
    pub n: usize,
    pub samples: usize,
    pub weights: String,
    pub seed: u64,
    pub d_bound: DProvenance,
    pub rows: Vec<TailRow>,
}

impl TailReport {
    pub fn breaches(&self) -> Vec<&TailRow> {
        self.rows.iter().filter(|r| r.margin < 0.0).collect()
    }

    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        out.write_all(b"t,side,freq,stderr,bound,margin\n")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t,
                r.side.name(),
                r.freq,
                r.stderr,
                r.bound,
                r.margin
            )?;
        }
        Ok(())
    }

    /// First breached row as an error.
    pub fn check(&self) -> Result<()> {
        match self.breaches().first() {
            None => Ok(()),
            Some(r) => Err(Error::TailBreach {
                t: r.t,
                side: r.side.name().into(),
                detail: format!(
                    "freq {:.3e} + 4·stderr {:.3e} exceeds bound {:.3e}",
                    r.freq, r.stderr, r.bound
                ),
            }),
        }
    }
}

pub const DEFAULT_GRID_POINTS: usize = 64;

/// `t = 0`, 64 log-spaced points on `[0.01·D, 100·D]`, and one interior
/// point for every piece of the bound the log grid misses.
pub fn default_t_grid(bound: &PiecewiseBound) -> Vec<f64> {
    let d = bound.d_bound;
    let (lo, hi) = ((0.01 * d).ln(), (100.0 * d).ln());
    let mut grid = vec![0.0];
    for k in 0..DEFAULT_GRID_POINTS {
        grid.push((lo + (hi - lo) * k as f64 / (DEFAULT_GRID_POINTS - 1) as f64).exp());
    }
    let bp = bound.breakpoints;
    let reps = [0.5 * bp[0], (bp[0] * bp[1]).sqrt(), (bp[1] * bp[2]).sqrt(), (bp[2] * bp[3]).sqrt(), 2.0 * bp[3]];
    for (piece, &t) in Piece::ALL.iter().zip(&reps) {
        if !grid.iter().any(|&g| g > 0.0 && bound.piece(g) == *piece) {
            grid.push(t);
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Resolves the toll bound, estimating it when asked to.
pub fn resolve_d_bound(cfg: &ExperimentConfig) -> Result<DProvenance> {
    match &cfg.d_bound {
        DBoundSetting::Explicit(v) => Ok(DProvenance::Explicit { value: *v }),
        DBoundSetting::Named(_) => {
            let budget = cfg
                .estimate
                .as_ref()
                .ok_or_else(|| Error::Config("d_bound = \"estimate\" needs an `estimate` budget".into()))?;
            let sampler = cfg.sampler()?;
            let est = estimate_d_bound(
                cfg.b,
                &sampler,
                budget.n_max.unwrap_or(cfg.n),
                budget.samples,
                cfg.seed,
                budget.safety,
            )?;
            Ok(DProvenance::Estimated(est))
        }
    }
}

/// Scaled deviations `X_n` of every replicate, centred exactly.
pub fn scaled_samples(cfg: &ExperimentConfig) -> Result<Vec<[f64; 2]>> {
    if cfg.model != Model::Bary {
        return Err(Error::Config("tail experiments need the b-ary model (exact centring)".into()));
    }
    cfg.validate()?;
    let sampler = cfg.sampler()?;
    let table = expectations(cfg.n, cfg.b, sampler.mu())?;
    run_sharded(cfg.samples, cfg.shards, |r| {
        let tree = grow(cfg, Some(&sampler), r)?;
        Ok(ScaledVector::new(functionals(&tree), cfg.n, &table)?.x)
    })
}

pub fn run_tails(cfg: &ExperimentConfig) -> Result<TailReport> {
    cfg.validate()?;
    let provenance = resolve_d_bound(cfg)?;
    let bound = PiecewiseBound::new(provenance.value(), Constants::default())?;
    let grid = match &cfg.t_grid {
        Some(g) => g.clone(),
        None => default_t_grid(&bound),
    };
    let xs = scaled_samples(cfg)?;
    let mut sorted: [Vec<f64>; 2] = [xs.iter().map(|x| x[0]).collect(), xs.iter().map(|x| x[1]).collect()];
    for v in &mut sorted {
        v.sort_by(f64::total_cmp);
    }
    let s = xs.len();
    let mut rows = Vec::with_capacity(grid.len() * 4);
    for &t in &grid {
        let b = upper_tail(t, &bound);
        for side in Side::ALL {
            let (v, right) = match side {
                Side::WienerRight => (&sorted[0], true),
                Side::WienerLeft => (&sorted[0], false),
                Side::PathRight => (&sorted[1], true),
                Side::PathLeft => (&sorted[1], false),
            };
            let count = if right {
                s - v.partition_point(|&x| x <= t)
            } else {
                v.partition_point(|&x| x < -t)
            };
            let freq = count as f64 / s as f64;
            let stderr = binomial_stderr(freq, s);
            rows.push(TailRow {
                t,
                side,
                freq,
                stderr,
                bound: b,
                margin: b - (freq + 4.0 * stderr),
                d_source: provenance.label(),
            });
        }
    }
    Ok(TailReport {
        b: cfg.b,
        n: cfg.n,
        samples: s,
        weights: cfg.weights.clone(),
        seed: cfg.seed,
        d_bound: provenance,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TollReport {
    pub b: usize,
    pub n: usize,
    pub samples: usize,
    pub max_norm: f64,
    pub mean: [f64; 2],
    pub stderr: [f64; 2],
    /// Mean and max of `‖d − main term‖`.
    pub main_term_gap_mean: f64,
    pub main_term_gap_max: f64,
}

pub fn run_toll(cfg: &ExperimentConfig) -> Result<TollReport> {
    if cfg.model != Model::Bary {
        return Err(Error::Config("toll experiments need the b-ary model".into()));
    }
    cfg.validate()?;
    let sampler = cfg.sampler()?;
    let table = expectations(cfg.n, cfg.b, sampler.mu())?;
    let rows = run_sharded(cfg.samples, cfg.shards, |r| {
        let tree = grow(cfg, Some(&sampler), r)?;
        let d = toll_residual(&tree, &table)?;
        let split = root_split(&tree)?;
        let children = tree.children();
        let mut z = vec![0.0; cfg.b];
        for &c in &children[0] {
            z[tree.slot(c) as usize] = tree.edge_weight(c);
        }
        let main = toll_main_term(&split.0, &z, cfg.b, sampler.mu());
        Ok((d, (d.d[0] - main.d[0]).hypot(d.d[1] - main.d[1])))
    })?;
    let s = rows.len() as f64;
    let mut mean = [0.0; 2];
    for (d, _) in &rows {
        mean[0] += d.d[0] / s;
        mean[1] += d.d[1] / s;
    }
    let mut var = [0.0; 2];
    for (d, _) in &rows {
        var[0] += (d.d[0] - mean[0]).powi(2) / (s - 1.0).max(1.0);
        var[1] += (d.d[1] - mean[1]).powi(2) / (s - 1.0).max(1.0);
    }
    Ok(TollReport {
        b: cfg.b,
        n: cfg.n,
        samples: rows.len(),
        max_norm: rows.iter().map(|(d, _)| d.norm()).fold(0.0, f64::max),
        mean,
        stderr: [(var[0] / s).sqrt(), (var[1] / s).sqrt()],
        main_term_gap_mean: rows.iter().map(|(_, g)| g).sum::<f64>() / s,
        main_term_gap_max: rows.iter().map(|(_, g)| *g).fold(0.0, f64::max),
    })
}

/// Simulated law of a key against an exact pmf.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawComparison {
    pub atoms: usize,
    pub samples: usize,
    pub tv: f64,
    pub max_stderr: f64,
    pub tv_tolerance: f64,
    pub chi_square: ChiSquareResult,
    pub outside: u64,
}

impl LawComparison {
    pub fn tv_ok(&self) -> bool {
        self.tv <= self.tv_tolerance
    }

    pub fn chi_square_ok(&self, significance: f64) -> bool {
        self.chi_square.p_value >= significance && self.outside == 0
    }
}

/// Multiplier on the largest per-atom binomial stderr for the TV check.
pub const TV_STDERR_FACTOR: f64 = 5.0;

pub fn compare_law<K: std::hash::Hash + Eq + Clone>(exact: &[(K, f64)], observed: &[K]) -> Result<LawComparison> {
    let index: HashMap<&K, usize> = exact.iter().enumerate().map(|(i, (k, _))| (k, i)).collect();
    let mut counts = vec![0u64; exact.len()];
    let mut outside = 0;
    for k in observed {
        match index.get(k) {
            Some(&i) => counts[i] += 1,
            None => outside += 1,
        }
    }
    let probs: Vec<f64> = exact.iter().map(|(_, p)| *p).collect();
    let s = observed.len();
    let max_stderr = probs.iter().map(|&p| binomial_stderr(p, s)).fold(0.0, f64::max);
    Ok(LawComparison {
        atoms: exact.len(),
        samples: s,
        tv: empirical_tv(&counts, &probs, outside),
        max_stderr,
        tv_tolerance: TV_STDERR_FACTOR * max_stderr,
        chi_square: chi_square_gof(&counts, &probs)?,
        outside,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofReport {
    pub model: Model,
    pub b: usize,
    pub beta: f64,
    pub n: usize,
    pub weights: String,
    pub joint: LawComparison,
    pub sorted_split: Option<LawComparison>,
    /// Expectations of the exact law, for reference.
    pub exact_mean: FunctionalPair,
}

fn key(p: &FunctionalPair) -> (Real, Real) {
    (Real(p.path_length), Real(p.wiener))
}

/// Simulator against the exhaustive enumeration.
pub fn run_gof(cfg: &ExperimentConfig) -> Result<GofReport> {
    cfg.validate()?;
    let sampler = sampler_for(cfg)?;
    let (exact, split_exact) = match cfg.model {
        Model::Bary => {
            let e = enumerate(cfg.n, cfg.b, sampler.as_ref().expect("sampler"))?;
            (e.joint, Some(e.sorted_split))
        }
        Model::Linear => {
            if cfg.beta.fract() != 0.0 {
                return Err(invalid("exact linear-tree law needs an integer beta"));
            }
            (enumerate_linear(cfg.n, cfg.beta as u32)?, None)
        }
    };
    let sims = run_sharded(cfg.samples, cfg.shards, |r| {
        let tree = grow(cfg, sampler.as_ref(), r)?;
        let split = match cfg.model {
            Model::Bary => Some(root_split(&tree)?.sorted_desc()),
            Model::Linear => None,
        };
        Ok((functionals(&tree), split))
    })?;
    let exact_f = exact.probs_f64();
    let observed: Vec<(Real, Real)> = sims.iter().map(|(p, _)| snap(key(p), &exact_f)).collect();
    let joint = compare_law(&exact_f, &observed)?;
    let sorted_split = match split_exact {
        Some(law) => {
            let obs: Vec<Vec<usize>> = sims.iter().map(|(_, s)| s.clone().expect("split")).collect();
            Some(compare_law(&law.probs_f64(), &obs)?)
        }
        None => None,
    };
    Ok(GofReport {
        model: cfg.model,
        b: cfg.b,
        beta: cfg.beta,
        n: cfg.n,
        weights: cfg.weights.clone(),
        joint,
        sorted_split,
        exact_mean: FunctionalPair {
            path_length: exact.expect(|(p, _)| p.0),
            wiener: exact.expect(|(_, w)| w.0),
        },
    })
}

/// Maps a simulated key onto the exact atom it equals up to rounding.
fn snap(k: (Real, Real), atoms: &[((Real, Real), f64)]) -> (Real, Real) {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + b.abs());
    atoms
        .iter()
        .map(|(a, _)| *a)
        .find(|a| *a == k || (close(k.0 .0, a.0 .0) && close(k.1 .0, a.1 .0)))
        .unwrap_or(k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub b: usize,
    pub n: usize,
    pub samples: usize,
    /// Exact TV distance between the two laws when `n` is enumerable.
    pub exact_tv: Option<f64>,
    pub ks_path: KsResult,
    pub ks_wiener: KsResult,
}

/// Linear recursive tree with `β = b − 2` against the transformed
/// `b`-ary tree with weights a permutation of `(1, 0, …, 0)`.
pub fn run_transfer(b: usize, n: usize, samples: usize, seed: u64, alpha: f64, shards: usize) -> Result<TransferReport> {
    if b < 2 || n < 2 {
        return Err(invalid("transfer comparison needs b >= 2 and n >= 2"));
    }
    let exact_tv = match (enumerate_linear(n, (b - 2) as u32), transfer_law(n, b)) {
        (Ok(lin), Ok(tr)) => Some(lin.tv_distance(&tr).to_f64().unwrap_or(f64::NAN)),
        (Err(Error::Budget(_)), _) | (_, Err(Error::Budget(_))) => None,
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let lin_cfg = ExperimentConfig {
        model: Model::Linear,
        b,
        beta: (b - 2) as f64,
        n,
        samples,
        seed,
        shards,
        ..Default::default()
    };
    let mut z = vec!["0".to_string(); b];
    z[0] = "1".into();
    let bary_cfg = ExperimentConfig {
        model: Model::Bary,
        b,
        n: n - 1,
        samples,
        weights: format!("perm:{}", z.join(",")),
        seed,
        shards,
        ..Default::default()
    };
    let lin = simulate(&lin_cfg)?;
    let bary = simulate(&bary_cfg)?;
    let m = (n - 1) as f64;
    let lp: Vec<f64> = lin.iter().map(|p| p.path_length).collect();
    let lw: Vec<f64> = lin.iter().map(|p| p.wiener).collect();
    let bp: Vec<f64> = bary.iter().map(|p| p.path_length + m).collect();
    let bw: Vec<f64> = bary.iter().map(|p| p.wiener - p.path_length + m * m).collect();
    Ok(TransferReport {
        b,
        n,
        samples,
        exact_tv,
        ks_path: ks_two_sample(&lp, &bp, alpha)?,
        ks_wiener: ks_two_sample(&lw, &bw, alpha)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingSummary {
    pub b: usize,
    pub n: usize,
    pub runs: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
    pub mean_upper_max: f64,
    pub mean_lower_max: f64,
    /// Largest count of the coupled PU(b) chain against independent PU(b) runs.
    pub marginal_ks: KsResult,
}

impl CouplingSummary {
    pub fn ordered(&self) -> bool {
        self.violations == 0
    }
}

const COUPLE_LABEL: u64 = 0xC0;
const PLAIN_LABEL: u64 = 0x9A;

pub fn run_coupling(b: usize, n: usize, runs: usize, seed: u64, shards: usize, alpha: f64) -> Result<CouplingSummary> {
    if runs == 0 {
        return Err(invalid("runs must be at least 1"));
    }
    let coupled = run_sharded(runs, shards, |r| {
        let mut g = rng::stream(rng::derive_seed(seed, COUPLE_LABEL), r);
        match coupled_run(n, b, &mut g) {
            Ok(run) => Ok(Ok((run.final_upper()[0], run.final_lower()[0]))),
            Err(e @ Error::OrderViolation { .. }) => Ok(Err(e.to_string())),
            Err(e) => Err(e),
        }
    })?;
    let plain = run_sharded(runs, shards, |r| {
        let mut g = rng::stream(rng::derive_seed(seed, PLAIN_LABEL), r);
        Ok(plain_sorted_run(n, b, &mut g)[0] as f64)
    })?;
    let ok: Vec<(u32, u32)> = coupled.iter().filter_map(|c| c.as_ref().ok().copied()).collect();
    let upper: Vec<f64> = ok.iter().map(|&(u, _)| u as f64).collect();
    let k = ok.len().max(1) as f64;
    Ok(CouplingSummary {
        b,
        n,
        runs,
        violations: runs - ok.len(),
        first_violation: coupled.iter().find_map(|c| c.as_ref().err().cloned()),
        mean_upper_max: upper.iter().sum::<f64>() / k,
        mean_lower_max: ok.iter().map(|&(_, l)| l as f64).sum::<f64>() / k,
        marginal_ks: ks_two_sample(if upper.is_empty() { &plain } else { &upper }, &plain, alpha)?,
    })
}
