//! Closed-form tail bounds: the five-piece upper tail bound, the Laplace
//! envelope it is derived from, the Chernoff minimization that connects
//! them, and the asymptotic reference curves for trees.
//!
//! Every bound depends on the toll bound `D` only through `t / D` and
//! `D·‖s‖`. Large-`t` probabilities underflow `f64`, so the exponent is
//! exposed alongside the probability.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::numerics::Constants;

/// Which of the five cases of the upper tail bound is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Piece {
    /// `exp(−t²/(10γ²D²))` on `[0, 5γD]`
    Gaussian,
    /// `exp(5/2 − t/(γD))` on `(5γD, C]`
    Linear,
    /// `exp(−t²/(96D²))` on `(C, 48DL₀]`
    WideGaussian,
    /// `exp(24L₀² − L₀t/D)` on `(48DL₀, 4De^{L₀}]`
    WideLinear,
    /// `exp(t/D − (t/D)·log(t/(4D)))` beyond `4De^{L₀}`
    Poisson,
}

impl Piece {
    pub const ALL: [Piece; 5] = [
        Piece::Gaussian,
        Piece::Linear,
        Piece::WideGaussian,
        Piece::WideLinear,
        Piece::Poisson,
    ];

    pub fn formula(self) -> &'static str {
        match self {
            Piece::Gaussian => "exp(-t^2/(10*gamma^2*D^2))",
            Piece::Linear => "exp(5/2 - t/(gamma*D))",
            Piece::WideGaussian => "exp(-t^2/(96*D^2))",
            Piece::WideLinear => "exp(24*L0^2 - L0*t/D)",
            Piece::Poisson => "exp(t/D - (t/D)*log(t/(4*D)))",
        }
    }
}

/// Upper tail bound for a recursion whose toll is bounded by `d_bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PiecewiseBound {
    pub d_bound: f64,
    pub constants: Constants,
    /// `[5γD, C, 48DL₀, 4De^{L₀}]`
    pub breakpoints: [f64; 4],
    pub c_threshold: f64,
}

impl PiecewiseBound {
    pub fn new(d_bound: f64, constants: Constants) -> Result<Self> {
        if !(d_bound > 0.0 && d_bound.is_finite()) {
            return Err(invalid(format!("toll bound D must be positive, got {d_bound}")));
        }
        let g = constants.gamma;
        let l0 = constants.l0;
        let c_threshold =
            48.0 * d_bound / g + d_bound * (48.0 * (48.0 / (g * g) - 5.0)).sqrt();
        let breakpoints = [
            5.0 * g * d_bound,
            c_threshold,
            48.0 * d_bound * l0,
            4.0 * d_bound * l0.exp(),
        ];
        Ok(Self {
            d_bound,
            constants,
            breakpoints,
            c_threshold,
        })
    }

    pub fn piece(&self, t: f64) -> Piece {
        let idx = self.breakpoints.iter().take_while(|&&b| t > b).count();
        Piece::ALL[idx]
    }

    /// Exponent of the given piece at `t`, regardless of whether it is active.
    pub fn piece_exponent(&self, piece: Piece, t: f64) -> f64 {
        let d = self.d_bound;
        let g = self.constants.gamma;
        let l0 = self.constants.l0;
        let r = t / d;
        match piece {
            Piece::Gaussian => -r * r / (10.0 * g * g),
            Piece::Linear => 2.5 - r / g,
            Piece::WideGaussian => -r * r / 96.0,
            Piece::WideLinear => 24.0 * l0 * l0 - l0 * r,
            Piece::Poisson => r - r * (r / 4.0).ln(),
        }
    }

    /// Natural log of [`upper_tail`]; never positive.
    pub fn log_upper_tail(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "t must be nonnegative");
        self.piece_exponent(self.piece(t), t).min(0.0)
    }
}

/// Upper tail bound `P(X_{n,j} > t)` (and `P(X_{n,j} < −t)`), clamped to `(0, 1]`
/// up to `f64` underflow.
pub fn upper_tail(t: f64, bound: &PiecewiseBound) -> f64 {
    bound.log_upper_tail(t).exp()
}

/// Envelope of `E[exp⟨s, X_n⟩]` as a function of `‖s‖`.
pub fn laplace_envelope(s_norm: f64, bound: &PiecewiseBound) -> f64 {
    log_laplace_envelope(s_norm, bound).exp()
}

pub fn log_laplace_envelope(s_norm: f64, bound: &PiecewiseBound) -> f64 {
    assert!(s_norm >= 0.0, "s_norm must be nonnegative");
    let d = bound.d_bound;
    let g = bound.constants.gamma;
    if s_norm <= 1.0 / (g * d) {
        2.5 * g * g * d * d * s_norm * s_norm
    } else if s_norm <= bound.constants.l0 / d {
        24.0 * d * d * s_norm * s_norm
    } else {
        4.0 * (d * s_norm).exp()
    }
}

/// Regime of the Chernoff parameter, matching the three envelope pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Small,
    Mid,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernoffSolution {
    pub u_star: f64,
    pub exponent: f64,
    pub regime: Regime,
}

/// `K_u·u² − u·t` with `K_u` taken from `regime` (not from `u`).
pub fn chernoff_objective(u: f64, t: f64, regime: Regime, bound: &PiecewiseBound) -> f64 {
    let d = bound.d_bound;
    let g = bound.constants.gamma;
    let quad = match regime {
        Regime::Small => 2.5 * g * g * d * d * u * u,
        Regime::Mid => 24.0 * d * d * u * u,
        Regime::Large => 4.0 * (d * u).exp(),
    };
    quad - u * t
}

/// Minimizes `K_u u² − ut` over `u ≥ 0`.
///
/// Each regime contributes its interior critical point clipped to the
/// closure of its interval; the smallest objective wins. This does not
/// consult the piecewise table, so agreement with [`upper_tail`] is a
/// genuine cross-check.
pub fn chernoff_optimize(t: f64, bound: &PiecewiseBound) -> ChernoffSolution {
    assert!(t > 0.0, "t must be positive");
    let d = bound.d_bound;
    let g = bound.constants.gamma;
    let u1 = 1.0 / (g * d);
    let u2 = bound.constants.l0 / d;
    let candidates = [
        (Regime::Small, (t / (5.0 * d * d * g * g)).clamp(0.0, u1)),
        (Regime::Mid, (t / (48.0 * d * d)).clamp(u1, u2)),
        (Regime::Large, ((t / (4.0 * d)).ln() / d).max(u2)),
    ];
    candidates
        .into_iter()
        .map(|(regime, u)| ChernoffSolution {
            u_star: u,
            exponent: chernoff_objective(u, t, regime, bound),
            regime,
        })
        .min_by(|a, b| a.exponent.total_cmp(&b.exponent))
        .expect("three candidates")
}

/// Functional and tree family of an asymptotic reference curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticKind {
    PathLength,
    Wiener,
    /// Path length or Wiener index of the linear recursive tree with
    /// weight function `1 + (b−2)·deg`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticBound {
    pub b: u32,
    pub mu: f64,
    pub d_bound: f64,
    pub alpha: f64,
    pub linear: bool,
}

impl AsymptoticBound {
    /// `b`-ary recursive tree with edge-weight mean `mu`.
    pub fn bary(b: u32, mu: f64, d_bound: f64) -> Result<Self> {
        check_common(b, d_bound)?;
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(invalid("mu must be positive for the asymptotic bound"));
        }
        let bf = b as f64;
        Ok(Self {
            b,
            mu,
            d_bound,
            alpha: (bf * mu / (4.0 * d_bound * (bf - 1.0) * std::f64::consts::E)).ln(),
            linear: false,
        })
    }

    /// Linear recursive tree with weight function `1 + (b−2)·deg`.
    /// Internally `mu = 1/b`, the mean of the collapsed edge weights.
    pub fn linear(b: u32, d_bound: f64) -> Result<Self> {
        check_common(b, d_bound)?;
        let bf = b as f64;
        Ok(Self {
            b,
            mu: 1.0 / bf,
            d_bound,
            alpha: -(4.0 * d_bound * (bf - 1.0) * std::f64::consts::E).ln(),
            linear: true,
        })
    }

    fn prefactor(&self) -> f64 {
        let bf = self.b as f64;
        if self.linear {
            1.0 / ((bf - 1.0) * self.d_bound)
        } else {
            bf / (bf - 1.0) * self.mu / self.d_bound
        }
    }
}

fn check_common(b: u32, d_bound: f64) -> Result<()> {
    if b < 2 {
        return Err(invalid(format!("b must be at least 2, got {b}")));
    }
    if !(d_bound > 0.0 && d_bound.is_finite()) {
        return Err(invalid("toll bound D must be positive"));
    }
    Ok(())
}

/// Exponent of the asymptotic relative-deviation bound with the `o(1)`
/// term set to zero. A reference curve, not a certified finite-`n` bound.
pub fn asymptotic_log_upper(
    t: f64,
    n: u64,
    params: &AsymptoticBound,
    kind: AsymptoticKind,
) -> Result<f64> {
    if n < 3 {
        return Err(invalid(format!("n must be at least 3, got {n}")));
    }
    if !(t > 0.0) {
        return Err(invalid("t must be positive"));
    }
    if (kind == AsymptoticKind::Linear) != params.linear {
        return Err(invalid(format!(
            "kind {kind:?} does not match the tree family of the parameters"
        )));
    }
    let ln_n = (n as f64).ln();
    Ok(-params.prefactor() * t * ln_n * (ln_n.ln() + t.ln() + params.alpha))
}

/// [`asymptotic_log_upper`] as a probability, clamped at 1.
pub fn asymptotic_upper(
    t: f64,
    n: u64,
    params: &AsymptoticBound,
    kind: AsymptoticKind,
) -> Result<f64> {
    Ok(asymptotic_log_upper(t, n, params, kind)?.min(0.0).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeFamily {
    Bary,
    Linear,
}

/// Main term of the lower tail bound for the Wiener index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerTail {
    pub value: f64,
    pub log_value: f64,
    /// `log log log n`, the scale of the dropped correction term.
    pub correction_scale: f64,
    /// Set when `log log log n ≤ 0`, i.e. `n` is far below the asymptotic regime.
    pub caveat: bool,
}

/// Lower tail bound for `P(|W_n − E W_n| > t E W_n)` with the `O(log⁽³⁾n)`
/// term dropped. For the linear family `mu` is ignored.
pub fn lower_tail_wiener(t: f64, n: u64, b: u32, mu: f64, kind: TreeFamily) -> Result<LowerTail> {
    if b < 2 {
        return Err(invalid(format!("b must be at least 2, got {b}")));
    }
    if n < 3 {
        return Err(invalid(format!("n must be at least 3, got {n}")));
    }
    if !(t >= 0.0) {
        return Err(invalid("t must be nonnegative"));
    }
    let bf = b as f64;
    let pre = match kind {
        TreeFamily::Bary => 4.0 * bf / (bf - 1.0) * mu,
        TreeFamily::Linear => 4.0 / (bf - 1.0),
    };
    let ln_n = (n as f64).ln();
    let ln2 = ln_n.ln();
    let log_value = (-pre * t * ln_n * ln2).min(0.0);
    let correction_scale = ln2.ln();
    Ok(LowerTail {
        value: log_value.exp(),
        log_value,
        correction_scale,
        caveat: correction_scale <= 0.0,
    })
}
