//! Command-line front end. Experiment settings come from an optional JSON
//! config file and are overridden by flags.
//!
//! Exit codes: 0 on success, 1 when a checked property fails (tail-bound
//! breach, coupling order violation, domination violation), 2 on usage,
//! configuration or I/O errors.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_engine::{enumerate, enumerate_linear, expectations};
use crate::harness::{
    run_coupling, run_gof, run_tails, run_toll, simulate, write_simulation_csv, DBoundSetting, EstimateBudget,
    ExperimentConfig, Format, Model,
};
use crate::numerics::Constants;
use crate::tail_bounds::{chernoff_optimize, PiecewiseBound};
use crate::tree_models::WeightSampler;
use crate::urn_domination::check_domination_range;

#[derive(Debug, Parser)]
#[command(name = "treetails", version, about = "Tail bounds and exact oracles for random tree functionals")]
pub struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of shards (parallel work units).
    #[arg(long, global = true)]
    pub shards: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON experiment config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    #[arg(long)]
    pub b: Option<usize>,
    /// Linear-tree parameter β (weight `1 + β·outdegree`).
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// `unit`, `const:v`, or `perm:z1,...,zb`.
    #[arg(long)]
    pub weights: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for γ and L₀.
    Constants {
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Tabulate the piecewise upper tail bound.
    Bound {
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        /// Comma-separated t values (default: log grid over [0.01D, 1000D]).
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Sample trees and print (P_n, W_n).
    Simulate(ModelArgs),
    /// Empirical tails of X_n against the bound.
    Tails {
        #[command(flatten)]
        model: ModelArgs,
        /// Toll bound D, or `estimate`.
        #[arg(long)]
        d: Option<String>,
        #[arg(long)]
        estimate_samples: Option<usize>,
        #[arg(long)]
        estimate_nmax: Option<usize>,
        #[arg(long)]
        safety: Option<f64>,
    },
    /// Toll residual statistics.
    Toll(ModelArgs),
    /// Exact laws by enumeration.
    Oracle(ModelArgs),
    /// Exact E[P_n], E[W_n] table.
    Expectations {
        #[arg(long, default_value_t = 2)]
        b: usize,
        #[arg(long)]
        nmax: usize,
        /// Edge-weight mean (overrides --weights).
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        weights: Option<String>,
    },
    /// Exact check that Σ f(I_i/n) is dominated by 1 − U(1−U).
    Dominate {
        #[arg(long, default_value_t = 2)]
        b: usize,
        #[arg(long)]
        n: usize,
        /// Report every m ≤ n, not only n.
        #[arg(long)]
        all: bool,
    },
    /// Coupled urn runs with the per-step order check.
    Couple {
        #[arg(long, default_value_t = 2)]
        b: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
    },
    /// Simulator against enumeration.
    Gof(ModelArgs),
}

/// What a command produced and whether its checks held.
pub struct Outcome {
    pub output: String,
    pub passed: bool,
    pub message: Option<String>,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Self {
            output,
            passed: true,
            message: None,
        }
    }
}

fn experiment_config(cli: &Cli, m: &ModelArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = m.model {
        cfg.model = v;
    }
    if let Some(v) = m.b {
        cfg.b = v;
    }
    if let Some(v) = m.beta {
        cfg.beta = v;
    }
    if let Some(v) = m.n {
        cfg.n = v;
    }
    if let Some(v) = m.samples {
        cfg.samples = v;
    }
    if let Some(v) = &m.weights {
        cfg.weights = v.clone();
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.shards {
        cfg.shards = v;
    }
    if let Some(v) = &cli.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = cli.format {
        cfg.format = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn csv_rows(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

/// Runs a parsed command line. The returned format and path say where the
/// output goes.
pub fn run(cli: &Cli) -> Result<(Outcome, Format, Option<PathBuf>)> {
    let file_cfg = match &cli.config {
        Some(p) => Some(ExperimentConfig::load(p)?),
        None => None,
    };
    let format = cli
        .format
        .or(file_cfg.as_ref().map(|c| c.format))
        .unwrap_or(Format::Csv);
    let out = cli.out.clone().or(file_cfg.as_ref().and_then(|c| c.out.clone()));
    let seed = cli.seed.or(file_cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
    let shards = cli.shards.or(file_cfg.as_ref().map(|c| c.shards)).unwrap_or(1);

    let outcome = match &cli.command {
        Command::Constants { tol } => {
            let c = Constants::new(*tol)?;
            #[derive(Serialize)]
            struct Row {
                gamma: f64,
                l0: f64,
                gamma_residual: f64,
                l0_residual: f64,
                tolerance: f64,
            }
            let row = Row {
                gamma: c.gamma,
                l0: c.l0,
                gamma_residual: c.gamma_residual(),
                l0_residual: c.l0_residual(),
                tolerance: c.tolerance,
            };
            Outcome::ok(match format {
                Format::Json => json(&row)?,
                Format::Csv => csv_rows(
                    "gamma,l0,gamma_residual,l0_residual",
                    [format!("{:.16e},{:.16e},{:.16e},{:.16e}", row.gamma, row.l0, row.gamma_residual, row.l0_residual)],
                ),
            })
        }
        Command::Bound { d, t, points } => {
            let bound = PiecewiseBound::new(*d, Constants::default())?;
            let grid = match t {
                Some(g) => g.clone(),
                None => {
                    let (lo, hi) = ((0.01 * d).ln(), (1000.0 * d).ln());
                    let k = (*points).max(2);
                    (0..k).map(|i| (lo + (hi - lo) * i as f64 / (k - 1) as f64).exp()).collect()
                }
            };
            #[derive(Serialize)]
            struct Row {
                t: f64,
                piece: crate::tail_bounds::Piece,
                log_bound: f64,
                bound: f64,
                chernoff_exponent: Option<f64>,
            }
            let rows: Vec<Row> = grid
                .iter()
                .map(|&t| Row {
                    t,
                    piece: bound.piece(t),
                    log_bound: bound.log_upper_tail(t),
                    bound: crate::tail_bounds::upper_tail(t, &bound),
                    chernoff_exponent: (t > 0.0).then(|| chernoff_optimize(t, &bound).exponent),
                })
                .collect();
            Outcome::ok(match format {
                Format::Json => json(&rows)?,
                Format::Csv => csv_rows(
                    "t,piece,log_bound,bound,chernoff_exponent",
                    rows.iter().map(|r| {
                        format!(
                            "{:.16e},{:?},{:.16e},{:.16e},{}",
                            r.t,
                            r.piece,
                            r.log_bound,
                            r.bound,
                            r.chernoff_exponent.map(|e| format!("{e:.16e}")).unwrap_or_default()
                        )
                    }),
                ),
            })
        }
        Command::Simulate(m) => {
            let cfg = experiment_config(cli, m)?;
            let rows = simulate(&cfg)?;
            Outcome::ok(match format {
                Format::Json => json(&rows)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_simulation_csv(&rows, &mut buf)?;
                    String::from_utf8(buf).expect("ascii csv")
                }
            })
        }
        Command::Tails {
            model,
            d,
            estimate_samples,
            estimate_nmax,
            safety,
        } => {
            let mut cfg = experiment_config(cli, model)?;
            if let Some(d) = d {
                cfg.d_bound = d.parse::<DBoundSetting>()?;
            }
            if estimate_samples.is_some() || estimate_nmax.is_some() || safety.is_some() {
                let base = cfg.estimate.clone();
                cfg.estimate = Some(EstimateBudget {
                    samples: estimate_samples
                        .or(base.as_ref().map(|e| e.samples))
                        .ok_or_else(|| Error::Config("--estimate-samples is required".into()))?,
                    n_max: estimate_nmax.or(base.as_ref().and_then(|e| e.n_max)),
                    safety: safety.or(base.as_ref().map(|e| e.safety)).unwrap_or(1.1),
                });
            }
            cfg.validate()?;
            let report = run_tails(&cfg)?;
            let output = match format {
                Format::Json => json(&report)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    report.write_csv(&mut buf)?;
                    String::from_utf8(buf).expect("ascii csv")
                }
            };
            let check = report.check();
            Outcome {
                output,
                passed: check.is_ok(),
                message: check.err().map(|e| e.to_string()),
            }
        }
        Command::Toll(m) => {
            let cfg = experiment_config(cli, m)?;
            let r = run_toll(&cfg)?;
            Outcome::ok(match format {
                Format::Json => json(&r)?,
                Format::Csv => csv_rows(
                    "b,n,samples,max_norm,mean_w,mean_p,stderr_w,stderr_p,main_gap_mean,main_gap_max",
                    [format!(
                        "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                        r.b,
                        r.n,
                        r.samples,
                        r.max_norm,
                        r.mean[0],
                        r.mean[1],
                        r.stderr[0],
                        r.stderr[1],
                        r.main_term_gap_mean,
                        r.main_term_gap_max
                    )],
                ),
            })
        }
        Command::Oracle(m) => {
            let cfg = experiment_config(cli, m)?;
            #[derive(Serialize)]
            struct Atom<K> {
                value: K,
                prob: String,
                prob_f64: f64,
            }
            let atoms = |pmf: &crate::exact_engine::Pmf<(crate::exact_engine::Real, crate::exact_engine::Real)>| {
                pmf.atoms()
                    .iter()
                    .map(|(k, p)| Atom {
                        value: [k.0 .0, k.1 .0],
                        prob: p.to_string(),
                        prob_f64: num_traits::ToPrimitive::to_f64(p).unwrap_or(f64::NAN),
                    })
                    .collect::<Vec<_>>()
            };
            let (joint, split) = match cfg.model {
                Model::Bary => {
                    let e = enumerate(cfg.n, cfg.b, &cfg.sampler()?)?;
                    let split: Vec<Atom<Vec<usize>>> = e
                        .sorted_split
                        .atoms()
                        .iter()
                        .map(|(k, p)| Atom {
                            value: k.clone(),
                            prob: p.to_string(),
                            prob_f64: num_traits::ToPrimitive::to_f64(p).unwrap_or(f64::NAN),
                        })
                        .collect();
                    (atoms(&e.joint), Some(split))
                }
                Model::Linear => {
                    if cfg.beta.fract() != 0.0 {
                        return Err(Error::Config("exact linear-tree law needs an integer beta".into()));
                    }
                    (atoms(&enumerate_linear(cfg.n, cfg.beta as u32)?), None)
                }
            };
            Outcome::ok(match format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out<A, B> {
                        n: usize,
                        joint: A,
                        sorted_split: B,
                    }
                    json(&Out {
                        n: cfg.n,
                        joint: &joint,
                        sorted_split: &split,
                    })?
                }
                Format::Csv => csv_rows(
                    "path_length,wiener,prob",
                    joint
                        .iter()
                        .map(|a| format!("{:.16e},{:.16e},{}", a.value[0], a.value[1], a.prob)),
                ),
            })
        }
        Command::Expectations { b, nmax, mu, weights } => {
            let mu = match (mu, weights) {
                (Some(mu), _) => *mu,
                (None, Some(w)) => WeightSampler::parse(w, *b)?.mu(),
                (None, None) => 1.0,
            };
            let table = expectations(*nmax, *b, mu)?;
            Outcome::ok(match format {
                Format::Json => json(&table)?,
                Format::Csv => csv_rows(
                    "n,EP,EW",
                    (1..=*nmax).map(|n| format!("{n},{:.16e},{:.16e}", table.ep(n), table.ew(n))),
                ),
            })
        }
        Command::Dominate { b, n, all } => {
            let mut reports = check_domination_range(*n, *b)?;
            if !*all {
                reports.drain(..reports.len() - 1);
            }
            let failed = reports.iter().find(|r| !r.holds());
            let message = failed.map(|r| {
                Error::DominationViolation {
                    n: r.n,
                    v: r.first_violation.unwrap_or(f64::NAN),
                    margin: r.grid_margin,
                }
                .to_string()
            });
            let output = match format {
                Format::Json => json(&reports)?,
                Format::Csv => csv_rows(
                    "b,n,atoms,grid_margin,worst_v,exact_margin,holds",
                    reports.iter().map(|r| {
                        format!(
                            "{},{},{},{:.16e},{:.16e},{:.16e},{}",
                            r.b,
                            r.n,
                            r.atoms,
                            r.grid_margin,
                            r.worst_v,
                            r.exact_margin,
                            r.holds()
                        )
                    }),
                ),
            };
            Outcome {
                output,
                passed: message.is_none(),
                message,
            }
        }
        Command::Couple { b, n, runs } => {
            let s = run_coupling(*b, *n, *runs, seed, shards, 1e-6)?;
            let output = match format {
                Format::Json => json(&s)?,
                Format::Csv => csv_rows(
                    "b,n,runs,violations,mean_upper_max,mean_lower_max,ks_statistic,ks_critical",
                    [format!(
                        "{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                        s.b,
                        s.n,
                        s.runs,
                        s.violations,
                        s.mean_upper_max,
                        s.mean_lower_max,
                        s.marginal_ks.statistic,
                        s.marginal_ks.critical
                    )],
                ),
            };
            let mut verdict = format!("order held in {}/{} runs", s.runs - s.violations, s.runs);
            if let Some(v) = &s.first_violation {
                let _ = write!(verdict, "; first violation: {v}");
            }
            Outcome {
                output,
                passed: s.ordered(),
                message: Some(verdict),
            }
        }
        Command::Gof(m) => {
            let cfg = experiment_config(cli, m)?;
            let r = run_gof(&cfg)?;
            let line = |name: &str, c: &crate::harness::LawComparison| {
                format!(
                    "{name},{},{},{:.16e},{:.16e},{:.16e},{},{:.16e},{}",
                    c.atoms,
                    c.samples,
                    c.tv,
                    c.tv_tolerance,
                    c.chi_square.statistic,
                    c.chi_square.dof,
                    c.chi_square.p_value,
                    c.outside
                )
            };
            Outcome::ok(match format {
                Format::Json => json(&r)?,
                Format::Csv => {
                    let mut rows = vec![line("joint", &r.joint)];
                    if let Some(s) = &r.sorted_split {
                        rows.push(line("sorted_split", s));
                    }
                    csv_rows("law,atoms,samples,tv,tv_tolerance,chi2,dof,p_value,outside", rows)
                }
            })
        }
    };
    Ok((outcome, format, out))
}

/// Parses `args`, runs the command, writes its output and maps the result
/// to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = run(&cli).and_then(|(outcome, _, out)| {
        match out {
            Some(path) => std::fs::write(path, &outcome.output)?,
            None => std::io::stdout().write_all(outcome.output.as_bytes())?,
        }
        Ok(outcome)
    });
    match &result {
        Ok(outcome) => {
            if let Some(m) = &outcome.message {
                eprintln!("{m}");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(status(&result))
}

/// 0 when every check passed, 1 when a check failed, 2 on any error.
pub fn status(result: &Result<Outcome>) -> u8 {
    match result {
        Ok(o) if o.passed => 0,
        Ok(_) => 1,
        Err(_) => 2,
    }
}
