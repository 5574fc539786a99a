//! M-estimator loss families: per-residual losses `rho` with derivatives
//! `psi` and `psi_prime`, plus the non-separable rank (Jaeckel) dispersion.

use crate::error::{Error, Result};
use serde::Serialize;

/// log(cosh(x)) without overflow for any finite x.
///
/// Uses the identity log cosh x = |x| + log1p(e^{-2|x|}) - log 2, which is
/// exact algebraically and never exponentiates a positive quantity.
pub fn stable_logcosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// sech(x) = 1/cosh(x), overflow-free.
pub(crate) fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// sech²(x), overflow-free; decays like 4 e^{-2|x|}.
pub(crate) fn sech2(x: f64) -> f64 {
    let s = sech(x);
    s * s
}

/// A tagged loss choice. Parameters live on the variant that needs them.
///
/// Use the checked constructors (`huber`, `check`, `smrq`, ...) when the
/// parameters come from user input; they reject values outside the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LossSpec {
    /// x²/2. The factor ½ makes ψ(x) = x (and matches Huber's inner region).
    L2,
    /// log cosh x: quadratic near zero, |x| - log 2 in the tails.
    LogCosh,
    /// Quadratic inside [-δ, δ], linear outside.
    Huber { delta: f64 },
    /// log(1 + x²): the Cauchy negative log-likelihood core. Non-convex.
    CauchyLoss,
    /// The piecewise-linear quantile check function, slopes τ and τ-1.
    Check { tau: f64 },
    /// log cosh x + (τ-½)x: a smooth check variant kept exactly as defined
    /// even though its asymptotic slopes are τ+½ and τ-3/2, not τ and τ-1.
    SmoothedCheck { tau: f64 },
    /// Smooth quantile loss (1/(2c))·log cosh(c(x-h)) + (τ-s)x + v.
    /// With the recommended c=½, s=½ its slopes match the check function.
    Smrq { tau: f64, c: f64, h: f64, s: f64, v: f64 },
    /// Jaeckel rank dispersion; not pointwise, see [`rank_objective`].
    Rank,
}

/// Recommended SMRQ constants: c=½, h=0, s=½, v=½.
pub const SMRQ_DEFAULT_C: f64 = 0.5;
pub const SMRQ_DEFAULT_H: f64 = 0.0;
pub const SMRQ_DEFAULT_S: f64 = 0.5;
pub const SMRQ_DEFAULT_V: f64 = 0.5;

fn require_unit_open(tau: f64, what: &str) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::param(format!("{what} requires 0 < tau < 1, got {tau}")));
    }
    Ok(())
}

impl LossSpec {
    pub fn huber(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param(format!("huber delta must be > 0, got {delta}")));
        }
        Ok(LossSpec::Huber { delta })
    }

    pub fn check(tau: f64) -> Result<Self> {
        require_unit_open(tau, "check")?;
        Ok(LossSpec::Check { tau })
    }

    pub fn smoothed_check(tau: f64) -> Result<Self> {
        require_unit_open(tau, "smoothed check")?;
        Ok(LossSpec::SmoothedCheck { tau })
    }

    /// SMRQ with the recommended constants.
    pub fn smrq(tau: f64) -> Result<Self> {
        Self::smrq_with(tau, SMRQ_DEFAULT_C, SMRQ_DEFAULT_H, SMRQ_DEFAULT_S, SMRQ_DEFAULT_V)
    }

    pub fn smrq_with(tau: f64, c: f64, h: f64, s: f64, v: f64) -> Result<Self> {
        require_unit_open(tau, "smrq")?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param(format!("smrq curvature c must be > 0, got {c}")));
        }
        for (name, val) in [("h", h), ("s", s), ("v", v)] {
            if !val.is_finite() {
                return Err(Error::param(format!("smrq {name} must be finite, got {val}")));
            }
        }
        Ok(LossSpec::Smrq { tau, c, h, s, v })
    }

    /// Validates parameters on directly-constructed variants.
    pub fn validate(&self) -> Result<()> {
        match *self {
            LossSpec::Huber { delta } => Self::huber(delta).map(|_| ()),
            LossSpec::Check { tau } => Self::check(tau).map(|_| ()),
            LossSpec::SmoothedCheck { tau } => Self::smoothed_check(tau).map(|_| ()),
            LossSpec::Smrq { tau, c, h, s, v } => Self::smrq_with(tau, c, h, s, v).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Per-residual loss. Rejects `Rank` (not a pointwise loss).
    pub fn rho(&self, x: f64) -> Result<f64> {
        Ok(match *self {
            LossSpec::L2 => 0.5 * x * x,
            LossSpec::LogCosh => stable_logcosh(x),
            LossSpec::Huber { delta } => {
                if x.abs() <= delta {
                    0.5 * x * x
                } else {
                    delta * (x.abs() - 0.5 * delta)
                }
            }
            LossSpec::CauchyLoss => (x * x).ln_1p(),
            LossSpec::Check { tau } => {
                if x >= 0.0 {
                    tau * x
                } else {
                    (tau - 1.0) * x
                }
            }
            LossSpec::SmoothedCheck { tau } => stable_logcosh(x) + (tau - 0.5) * x,
            LossSpec::Smrq { tau, c, h, s, v } => {
                stable_logcosh(c * (x - h)) / (2.0 * c) + (tau - s) * x + v
            }
            LossSpec::Rank => {
                return Err(Error::UnsupportedKind(
                    "rank loss is not pointwise; use rank_objective on the residual vector".into(),
                ))
            }
        })
    }

    /// First derivative dρ/dx. For `Check` the value at x = 0 is τ (the
    /// right-hand derivative, by convention). Rejects `Rank`.
    pub fn psi(&self, x: f64) -> Result<f64> {
        Ok(match *self {
            LossSpec::L2 => x,
            LossSpec::LogCosh => x.tanh(),
            LossSpec::Huber { delta } => x.clamp(-delta, delta),
            LossSpec::CauchyLoss => 2.0 * x / (1.0 + x * x),
            LossSpec::Check { tau } => {
                if x >= 0.0 {
                    tau
                } else {
                    tau - 1.0
                }
            }
            LossSpec::SmoothedCheck { tau } => x.tanh() + (tau - 0.5),
            LossSpec::Smrq { tau, c, h, s, .. } => 0.5 * (c * (x - h)).tanh() + (tau - s),
            LossSpec::Rank => {
                return Err(Error::UnsupportedKind("rank loss has no pointwise psi".into()))
            }
        })
    }

    /// Second derivative d²ρ/dx². Huber uses the closed L2 region, so the
    /// value at |x| = δ is 1. Rejects `Rank` and `Check` (no second
    /// derivative at the kink).
    pub fn psi_prime(&self, x: f64) -> Result<f64> {
        Ok(match *self {
            LossSpec::L2 => 1.0,
            LossSpec::LogCosh => sech2(x),
            LossSpec::Huber { delta } => {
                if x.abs() <= delta {
                    1.0
                } else {
                    0.0
                }
            }
            LossSpec::CauchyLoss => {
                let d = 1.0 + x * x;
                2.0 * (1.0 - x * x) / (d * d)
            }
            LossSpec::SmoothedCheck { .. } => sech2(x),
            LossSpec::Smrq { c, h, .. } => 0.5 * c * sech2(c * (x - h)),
            LossSpec::Check { .. } => {
                return Err(Error::UnsupportedKind("check loss has no second derivative".into()))
            }
            LossSpec::Rank => {
                return Err(Error::UnsupportedKind("rank loss has no pointwise psi_prime".into()))
            }
        })
    }
}

/// Wilcoxon scores a_n(i) = φ(i/(n+1)) with φ(u) = 2u - 1, i = 1..n.
#[derive(Debug, Clone)]
pub struct RankScores {
    n: usize,
    scores: Vec<f64>,
}

impl RankScores {
    pub fn new(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::data("rank scores need n >= 1"));
        }
        let scores = (1..=n).map(|i| score_at(i as f64, n)).collect();
        Ok(RankScores { n, scores })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

/// φ(R/(n+1)) = 2R/(n+1) - 1, defined for fractional mid-ranks too. Since φ
/// is linear, evaluating at a mid-rank equals averaging scores over a tie.
fn score_at(rank: f64, n: usize) -> f64 {
    2.0 * rank / (n as f64 + 1.0) - 1.0
}

/// Mid-ranks (1-based) of `values`; ties share the average of their ranks.
pub(crate) fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold equal values; mid-rank of 1-based ranks i+1..=j+1
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = mid;
        }
        i = j + 1;
    }
    ranks
}

/// Jaeckel rank dispersion: Σ rᵢ · a_n(R(rᵢ)) with Wilcoxon scores and
/// mid-rank ties. Nonnegative, and invariant to adding a constant to all
/// residuals (the scores sum to zero).
pub fn rank_objective(residuals: &[f64]) -> Result<f64> {
    if residuals.len() < 2 {
        return Err(Error::data("rank objective needs at least 2 residuals"));
    }
    if residuals.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("rank objective requires finite residuals"));
    }
    let n = residuals.len();
    let ranks = midranks(residuals);
    Ok(residuals
        .iter()
        .zip(&ranks)
        .map(|(&r, &rk)| r * score_at(rk, n))
        .sum())
}
