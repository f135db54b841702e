//! Acceptance criteria 1–10. Each test prints one PASS/FAIL line with the
//! measured quantities, then asserts. Criteria run one at a time so their
//! runtime limits are measured without contention.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::Zero;

use treetails::exact_engine::{enumerate, enumerate_linear, expectations, transfer_law};
use treetails::harness::{run_coupling, run_gof, run_tails, run_transfer, DBoundSetting, EstimateBudget, ExperimentConfig};
use treetails::numerics::{
    exp_neg_quadratic_mean, fill_janson_large_product, fill_janson_rhs, small_s_certificate, solve_gamma, solve_l0,
    Constants,
};
use treetails::recursion_core::{coeff_matrix, f_closed_form, op_norm_sq_eigen};
use treetails::tail_bounds::{chernoff_optimize, Piece, PiecewiseBound};
use treetails::tree_models::WeightSampler;
use treetails::urn_domination::{check_domination_range, g_exact};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Written straight to the stderr handle so the line shows without `--nocapture`.
fn verdict(id: u32, name: &str, pass: bool, elapsed: Duration, detail: &str) {
    let mark = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "[criterion {id:>2}] {mark} {name} ({:.2}s): {detail}",
        elapsed.as_secs_f64()
    );
}

const DS: [f64; 3] = [0.5, 1.0, 2.0];

#[test]
fn criterion_01_constants() {
    let _g = serial();
    let start = Instant::now();
    let gamma = solve_gamma(1e-12);
    let l0 = solve_l0(1e-12);
    let c = Constants::new(1e-12).unwrap();
    let elapsed = start.elapsed();
    let pass = (gamma - 2.0047).abs() <= 1e-3
        && (l0 - 5.0177).abs() <= 1e-3
        && c.gamma_residual() <= 1e-10
        && c.l0_residual() <= 1e-10
        && elapsed < Duration::from_secs(1);
    let detail = format!(
        "gamma = {gamma:.10}, L0 = {l0:.10}, residuals {:.1e} / {:.1e}",
        c.gamma_residual(),
        c.l0_residual()
    );
    verdict(1, "constants", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_02_bound_coherence() {
    let _g = serial();
    let start = Instant::now();
    let (mut worst_jump, mut worst_chernoff, mut non_decreasing) = (0.0f64, 0.0f64, 0usize);
    for d in DS {
        let bound = PiecewiseBound::new(d, Constants::default()).unwrap();
        let pieces = Piece::ALL;
        for (k, &bp) in bound.breakpoints.iter().enumerate() {
            let left = bound.piece_exponent(pieces[k], bp);
            let right = bound.piece_exponent(pieces[k + 1], bp);
            worst_jump = worst_jump.max((left - right).exp_m1().abs());
        }
        let points = 10_000;
        let (lo, hi) = ((1e-4 * d).ln(), (1e5 * d).ln());
        let mut prev = 0.0;
        for i in 0..points {
            let t = (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp();
            let e = bound.log_upper_tail(t);
            if e >= prev {
                non_decreasing += 1;
            }
            prev = e;
            let ch = chernoff_optimize(t, &bound).exponent;
            worst_chernoff = worst_chernoff.max((ch - e).abs() / e.abs().max(1.0));
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_jump <= 1e-9 && non_decreasing == 0 && worst_chernoff <= 1e-9 && elapsed < Duration::from_secs(5);
    let detail = format!(
        "max breakpoint jump {worst_jump:.1e}, non-decreasing steps {non_decreasing}, max Chernoff gap {worst_chernoff:.1e} (D in {{0.5, 1, 2}}, log-probabilities)"
    );
    verdict(2, "bound coherence", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_03_inequality_certificates() {
    let _g = serial();
    let start = Instant::now();
    let c = Constants::default();
    let (mut cert_max, mut cert_root) = (f64::NEG_INFINITY, 0.0f64);
    for d in DS {
        let end = 1.0 / (c.gamma * d);
        for i in 0..10_000 {
            let s = end * i as f64 / 9_999.0;
            if i < 9_999 {
                cert_max = cert_max.max(small_s_certificate(&c, s, d));
            }
        }
        cert_root = cert_root.max(small_s_certificate(&c, end, d).abs());
    }
    let mut fill_rhs_excess = f64::NEG_INFINITY;
    for k in [0.1, 1.0, 10.0, 100.0] {
        for i in 1..=100 {
            let s = 10.0 * i as f64 / 100.0;
            let lhs = exp_neg_quadratic_mean(2.0 * k * s * s);
            fill_rhs_excess = fill_rhs_excess.max(lhs - fill_janson_rhs(k, s));
        }
    }
    let mut large_product_excess = f64::NEG_INFINITY;
    for m in [1.0, c.l0, 6.0, 8.0] {
        for i in 0..10_000 {
            let lambda = 0.42 + (m - 0.42) * i as f64 / 9_999.0;
            large_product_excess = large_product_excess.max(fill_janson_large_product(lambda, m, &c) - 1.0);
        }
    }
    let elapsed = start.elapsed();
    let pass = cert_max <= 0.0
        && cert_root <= 1e-9
        && fill_rhs_excess <= 1e-10
        && large_product_excess <= 1e-9
        && elapsed < Duration::from_secs(10);
    let detail = format!(
        "certificate max {cert_max:.2e} on [0, 1/(gamma D)), |f(1/(gamma D))| {cert_root:.1e}, fill bound excess {fill_rhs_excess:.2e}, large-s product excess {large_product_excess:.2e}"
    );
    verdict(3, "inequality certificates", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_04_operator_norm() {
    let _g = serial();
    let start = Instant::now();
    let mut max_gap = 0.0f64;
    for n in 1..=200u64 {
        for i in 0..n {
            let m = coeff_matrix(i, n).unwrap();
            max_gap = max_gap.max((f_closed_form(m.x()) - op_norm_sq_eigen(&m)).abs());
        }
    }
    let h = 1e-3;
    let mut min_second = f64::INFINITY;
    for k in 0..10_000 {
        let x = h + (1.0 - 2.0 * h) * k as f64 / 9_999.0;
        let d2 = (f_closed_form(x + h) - 2.0 * f_closed_form(x) + f_closed_form(x - h)) / (h * h);
        min_second = min_second.min(d2);
    }
    let g = g_exact(&BigRational::new(3.into(), 4.into()));
    let elapsed = start.elapsed();
    let pass = max_gap <= 1e-12 && min_second >= -1e-9 && g == Some(BigRational::zero()) && elapsed < Duration::from_secs(10);
    let detail = format!(
        "closed form vs eigen max gap {max_gap:.1e} (n <= 200), min second difference {min_second:.3}, g(3/4) = {}",
        g.map(|v| v.to_string()).unwrap_or_else(|| "irrational".into())
    );
    verdict(4, "operator norm", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_05_exact_domination() {
    let _g = serial();
    let start = Instant::now();
    let mut violations = Vec::new();
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    for b in [2, 3, 4] {
        for r in check_domination_range(200, b).unwrap() {
            checked += 1;
            worst = worst.min(r.grid_margin);
            if !r.holds() {
                violations.push((b, r.n, r.first_violation));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = violations.is_empty() && elapsed < Duration::from_secs(120);
    let detail = format!(
        "{checked} laws (b in {{2,3,4}}, n <= 200), violations {}, smallest grid margin {worst:.1e}{}",
        violations.len(),
        violations.first().map(|v| format!(", first {v:?}")).unwrap_or_default()
    );
    verdict(5, "exact domination", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_06_coupling() {
    let _g = serial();
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for b in [2, 3] {
        let s = run_coupling(b, 500, 10_000, 2024, 4, 1e-6).unwrap();
        pass &= s.ordered() && !s.marginal_ks.reject;
        parts.push(format!(
            "b={b}: {} violations, KS {:.4} vs critical {:.4}",
            s.violations, s.marginal_ks.statistic, s.marginal_ks.critical
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    let detail = parts.join("; ");
    verdict(6, "coupling", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_07_oracle_equivalence() {
    let _g = serial();
    let start = Instant::now();
    let mut pass = true;
    let mut worst_ratio = 0.0f64;
    let mut failures = Vec::new();
    for (b, n_max) in [(2usize, 6usize), (3, 5)] {
        for n in 1..=n_max {
            let cfg = ExperimentConfig {
                b,
                n,
                samples: 1_000_000,
                seed: 7 + (10 * b + n) as u64,
                shards: 4,
                ..Default::default()
            };
            let r = run_gof(&cfg).unwrap();
            for law in [Some(&r.joint), r.sorted_split.as_ref()].into_iter().flatten() {
                if law.max_stderr > 0.0 {
                    worst_ratio = worst_ratio.max(law.tv / law.max_stderr);
                }
                if !law.tv_ok() || law.outside > 0 {
                    failures.push((b, n, law.tv, law.tv_tolerance));
                }
            }
        }
    }
    pass &= failures.is_empty();
    let mut max_dp_gap = 0.0f64;
    let samplers = [
        (2, WeightSampler::unit(2).unwrap(), 6),
        (3, WeightSampler::unit(3).unwrap(), 5),
        (2, WeightSampler::permutation(vec![1.0, 0.0]).unwrap(), 6),
        (3, WeightSampler::permutation(vec![1.0, 0.0, 0.0]).unwrap(), 5),
    ];
    for (b, sampler, n_max) in samplers {
        let table = expectations(n_max, b, sampler.mu()).unwrap();
        for n in 1..=n_max {
            let e = enumerate(n, b, &sampler).unwrap();
            max_dp_gap = max_dp_gap
                .max((e.joint.expect(|(p, _)| p.0) - table.ep(n)).abs())
                .max((e.joint.expect(|(_, w)| w.0) - table.ew(n)).abs());
        }
    }
    pass &= max_dp_gap <= 1e-10;
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(120);
    let detail = format!(
        "unit weights, 10^6 samples: max TV/stderr {worst_ratio:.2} (limit 5), failures {failures:?}; expectation DP vs enumeration max gap {max_dp_gap:.1e}"
    );
    verdict(7, "oracle equivalence", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_08_tail_bound() {
    let _g = serial();
    let start = Instant::now();
    let bst = ExperimentConfig {
        b: 2,
        n: 2000,
        samples: 100_000,
        seed: 8,
        shards: 4,
        d_bound: DBoundSetting::Explicit(1.0),
        ..Default::default()
    };
    let ternary = ExperimentConfig {
        b: 3,
        weights: "perm:1,0,0".into(),
        d_bound: DBoundSetting::Named("estimate".into()),
        estimate: Some(EstimateBudget {
            samples: 2_000,
            n_max: None,
            safety: 1.1,
        }),
        seed: 9,
        ..bst.clone()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for cfg in [bst, ternary] {
        let report = run_tails(&cfg).unwrap();
        let breaches = report.breaches();
        let tightest = report
            .rows
            .iter()
            .filter(|r| r.freq > 0.0)
            .map(|r| r.margin)
            .fold(f64::INFINITY, f64::min);
        pass &= breaches.is_empty();
        parts.push(format!(
            "b={} {} D={:.4} ({}): {} rows, {} breaches, smallest margin where freq > 0: {tightest:.3e}",
            cfg.b,
            cfg.weights,
            report.d_bound.value(),
            report.d_bound.label(),
            report.rows.len(),
            breaches.len()
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    let detail = parts.join("; ");
    verdict(8, "empirical tail bound", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_09_transfer() {
    let _g = serial();
    let start = Instant::now();
    let mut pass = true;
    let mut max_tv = BigRational::zero();
    for b in [2usize, 3] {
        for n in 2..=5 {
            let lin = enumerate_linear(n, (b - 2) as u32).unwrap();
            let tr = transfer_law(n, b).unwrap();
            let tv = lin.tv_distance(&tr);
            if tv > max_tv {
                max_tv = tv;
            }
        }
    }
    pass &= max_tv.is_zero();
    let mut parts = vec![format!("exact TV max {max_tv} (n <= 5, b in {{2,3}})")];
    for b in [2, 3] {
        let r = run_transfer(b, 1000, 100_000, 99, 1e-6, 4).unwrap();
        pass &= !r.ks_path.reject && !r.ks_wiener.reject;
        parts.push(format!(
            "b={b} n=1000: KS P {:.4}, KS W {:.4}, critical {:.4}",
            r.ks_path.statistic, r.ks_wiener.statistic, r.ks_path.critical
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(120);
    let detail = parts.join("; ");
    verdict(9, "transfer identities", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_10_expectation_growth() {
    let _g = serial();
    let start = Instant::now();
    let n = 10_000;
    let mut pass = true;
    let mut parts = Vec::new();
    for b in [2usize, 3] {
        let table = expectations(n, b, 1.0).unwrap();
        let nf = n as f64;
        let ratio = table.ep(n) / (b as f64 / (b as f64 - 1.0) * nf * nf.ln());
        let ok = (0.85..=1.15).contains(&ratio);
        pass &= ok;
        parts.push(format!("b={b}: ratio {ratio:.5} {}", if ok { "in range" } else { "outside [0.85, 1.15]" }));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    let detail = parts.join("; ");
    verdict(10, "expectation growth", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}
