//! Transcendental constants of the tail bound and the scalar inequalities
//! that certify its Laplace-transform envelope.
//!
//! `gamma` solves `e^{2/γ} − 2/γ = 12/7` and `l0` is the largest root of
//! `e^L = 6L²`. Both are found by bisection on fixed brackets after a sign
//! scan confirms the bracket holds exactly one root.

use serde::Serialize;

use crate::error::{invalid, Result};

const GAMMA_BRACKET: (f64, f64) = (1.5, 2.5);
const L0_BRACKET: (f64, f64) = (4.0, 6.0);
const SCAN_STEPS: usize = 1000;

/// Solved constants, computed once and passed around by value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    pub gamma: f64,
    pub l0: f64,
    pub tolerance: f64,
}

impl Constants {
    /// Tolerance used by [`Constants::default`].
    pub const DEFAULT_TOLERANCE: f64 = 1e-12;

    pub fn new(tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(invalid(format!("tolerance must be positive, got {tolerance}")));
        }
        Ok(Self {
            gamma: solve_gamma(tolerance),
            l0: solve_l0(tolerance),
            tolerance,
        })
    }

    /// `|e^{2/γ} − 2/γ − 12/7|`.
    pub fn gamma_residual(&self) -> f64 {
        gamma_equation(self.gamma).abs()
    }

    /// `|e^{L₀} − 6L₀²| / e^{L₀}`.
    pub fn l0_residual(&self) -> f64 {
        l0_equation(self.l0).abs() / self.l0.exp()
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::new(Self::DEFAULT_TOLERANCE).expect("default tolerance is valid")
    }
}

fn gamma_equation(gamma: f64) -> f64 {
    let x = 2.0 / gamma;
    x.exp() - x - 12.0 / 7.0
}

fn l0_equation(l: f64) -> f64 {
    l.exp() - 6.0 * l * l
}

/// Number of strict sign changes of `f` on an even grid of `[lo, hi]`.
pub fn sign_changes(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> usize {
    let mut changes = 0;
    let mut prev = f(lo).signum();
    for k in 1..=steps {
        let x = lo + (hi - lo) * k as f64 / steps as f64;
        let s = f(x).signum();
        if s != 0.0 && prev != 0.0 && s != prev {
            changes += 1;
        }
        if s != 0.0 {
            prev = s;
        }
    }
    changes
}

/// Bisection until `accept(f(mid))` or the bracket collapses to adjacent floats.
fn bisect(
    f: impl Fn(f64) -> f64,
    (mut lo, mut hi): (f64, f64),
    accept: impl Fn(f64, f64) -> bool,
) -> f64 {
    let f_lo = f(lo);
    debug_assert!(f_lo * f(hi) < 0.0, "bracket must straddle a root");
    let lo_negative = f_lo < 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        let value = f(mid);
        if accept(mid, value) || mid <= lo || mid >= hi {
            return mid;
        }
        if (value < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Positive solution of `e^{2/γ} − 2/γ = 12/7`, residual at most `tolerance`.
pub fn solve_gamma(tolerance: f64) -> f64 {
    let (lo, hi) = GAMMA_BRACKET;
    assert_eq!(
        sign_changes(gamma_equation, lo, hi, SCAN_STEPS),
        1,
        "gamma bracket must contain exactly one root"
    );
    bisect(gamma_equation, GAMMA_BRACKET, |_, v| v.abs() <= tolerance)
}

/// Largest root of `e^L = 6L²`, relative residual at most `tolerance`.
pub fn solve_l0(tolerance: f64) -> f64 {
    let (lo, hi) = L0_BRACKET;
    assert_eq!(
        sign_changes(l0_equation, lo, hi, SCAN_STEPS),
        1,
        "l0 bracket must contain exactly one root"
    );
    bisect(l0_equation, L0_BRACKET, |x, v| v.abs() <= tolerance * x.exp())
}

/// `∫₀¹ exp(−c·u(1−u)) du` by adaptive Simpson, absolute accuracy 1e-12.
pub fn exp_neg_quadratic_mean(c: f64) -> f64 {
    assert!(c >= 0.0, "c must be nonnegative");
    let f = |u: f64| (-c * u * (1.0 - u)).exp();
    adaptive_simpson(&f, 0.0, 1.0, 1e-12)
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Right-hand side of the Fill–Janson bound on `E[exp(−2K s² U(1−U))]`:
/// `(1 − e^{−K s²/2}) / (K s²/2)`, equal to 1 at `s = 0`.
pub fn fill_janson_rhs(k: f64, s_norm: f64) -> f64 {
    let x = 0.5 * k * s_norm * s_norm;
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// `K_M`: 12 up to `L₀`, `2e^M/M²` beyond.
pub fn fill_janson_k(m: f64, consts: &Constants) -> f64 {
    if m <= consts.l0 {
        12.0
    } else {
        2.0 * m.exp() / (m * m)
    }
}

/// `e^{|λ|} (1 − e^{−K_M λ²/2}) / (K_M λ²/2)`, which must stay below 1 on `[0.42, M]`.
pub fn fill_janson_large_product(lambda: f64, m: f64, consts: &Constants) -> f64 {
    lambda.abs().exp() * fill_janson_rhs(fill_janson_k(m, consts), lambda)
}

/// The biquadratic whose nonpositivity on `[0, 1/(γD)]` certifies the
/// small-argument Laplace bound, after substituting `K = (5/2)D²γ²` and
/// `e^{2/γ} − 1 − 2/γ = 5/7`.
pub fn small_s_certificate(consts: &Constants, s_norm: f64, d_bound: f64) -> f64 {
    let scale = d_bound * d_bound * consts.gamma * consts.gamma;
    let z = (d_bound * consts.gamma * s_norm).powi(2);
    scale * (5.0 / 7.0 - 5.0 / 6.0 + (5.0 / 12.0 - 25.0 / 42.0) * z + 25.0 / 84.0 * z * z)
}

/// The same biquadratic before substitution, with `K` and the series
/// constant `e^{2/γ} − 1 − 2/γ` evaluated numerically.
pub fn small_s_certificate_unsubstituted(consts: &Constants, s_norm: f64, d_bound: f64) -> f64 {
    let g = consts.gamma;
    let q = (2.0 / g).exp() - 1.0 - 2.0 / g;
    let k = 2.5 * d_bound * d_bound * g * g;
    let a = d_bound * d_bound * g * g * q;
    let s2 = s_norm * s_norm;
    a - k / 3.0 - (k * a / 3.0 - k * k / 15.0) * s2 + k * k * a / 15.0 * s2 * s2
}
