//! Inference: asymptotic intervals for the location MLE, parametric and
//! data bootstraps, and the Kolmogorov-Smirnov goodness-of-fit test.

use crate::dist::{standard_normal, DistKind, DistSpec};
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::solve::{
    fit_linear, fit_location, fit_location_scale, median, FitResult, RegressionData,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::ContinuousCDF;

/// Asymptotic variance of the location MLE under the Cosh model with known
/// scale: the Fisher information per observation is 1/(2σ²), so the
/// estimator's variance is 2σ²/n.
pub fn asymptotic_variance(sigma: f64, n: usize) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("sigma must be positive and finite, got {sigma}")));
    }
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    Ok(2.0 * sigma * sigma / n as f64)
}

/// Normal-theory interval θ̂ ± z(α/2)·σ·√(2/n) around the location MLE.
pub fn confidence_interval(theta_hat: f64, sigma: f64, n: usize, alpha: f64) -> Result<(f64, f64)> {
    if !theta_hat.is_finite() {
        return Err(Error::param("theta_hat must be finite"));
    }
    check_alpha(alpha)?;
    let var = asymptotic_variance(sigma, n)?;
    let z = standard_normal().inverse_cdf(1.0 - alpha / 2.0);
    let half = z * var.sqrt();
    Ok((theta_hat - half, theta_hat + half))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(())
}

/// Bootstrap summary. `estimates` keeps one row per successful replicate in
/// replicate order; `point` is the reference estimate the intervals are
/// centered on (column means for the parametric bootstrap, the full-data fit
/// for data resampling); `se` is the column standard deviation (0 when only
/// one replicate survives); the interval is the percentile interval at level
/// `alpha`. `failed` counts replicates whose refit did not converge.
#[derive(Debug, Clone, Serialize)]
pub struct BootstrapReport {
    pub estimates: Vec<Vec<f64>>,
    pub point: Vec<f64>,
    pub se: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    pub failed: usize,
}

/// How `bootstrap_se` rebuilds datasets: resample whole observations, or
/// keep the design fixed and resample residuals onto the fitted values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ResampleScheme {
    Cases,
    Residuals,
}

/// Replicate i gets its own generator derived from (seed, i), so results do
/// not depend on how replicates are scheduled across threads.
fn replicate_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut s = [0u8; 32];
    s[..8].copy_from_slice(&seed.to_le_bytes());
    s[8..16].copy_from_slice(&rep.to_le_bytes());
    ChaCha8Rng::from_seed(s)
}

/// Linear interpolation between order statistics (the convention most
/// statistical software defaults to for quantiles of a sample).
fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let k = rows[0].len();
    let m = rows.len() as f64;
    (0..k).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / m).collect()
}

fn column_se_and_ci(rows: &[Vec<f64>], alpha: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let k = rows[0].len();
    let m = rows.len();
    let mut se = Vec::with_capacity(k);
    let mut lo = Vec::with_capacity(k);
    let mut hi = Vec::with_capacity(k);
    for j in 0..k {
        let mut col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / m as f64;
        se.push(if m >= 2 {
            (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64).sqrt()
        } else {
            0.0
        });
        col.sort_by(f64::total_cmp);
        lo.push(percentile_sorted(&col, alpha / 2.0));
        hi.push(percentile_sorted(&col, 1.0 - alpha / 2.0));
    }
    (se, lo, hi)
}

/// Parametric bootstrap of the joint Cosh MLE: draw `b` samples of size `n`
/// from Cosh(θ, σ), refit each by maximum likelihood, and summarize the
/// (θ̂, σ̂) replicates. Deterministic for a given seed, independent of
/// thread count.
pub fn parametric_bootstrap(
    theta: f64,
    sigma: f64,
    n: usize,
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<BootstrapReport> {
    let spec = DistSpec::cosh(theta, sigma)?;
    if n < 2 {
        return Err(Error::param("need n >= 2 to fit location and scale"));
    }
    if b == 0 {
        return Err(Error::param("need at least one replicate"));
    }
    check_alpha(alpha)?;

    let rows: Vec<Option<Vec<f64>>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(seed, i as u64);
            let sample = spec.sample_with_rng(n, &mut rng);
            fit_location_scale(&sample)
                .ok()
                .map(|ls| vec![ls.theta(), ls.sigma()])
        })
        .collect();

    let estimates: Vec<Vec<f64>> = rows.into_iter().flatten().collect();
    let failed = b - estimates.len();
    if estimates.is_empty() {
        return Err(Error::FitFailed("every bootstrap replicate failed to fit".into()));
    }
    let point = column_means(&estimates);
    let (se, ci_lower, ci_upper) = column_se_and_ci(&estimates, alpha);
    Ok(BootstrapReport {
        replicates: estimates.len(),
        estimates,
        point,
        se,
        ci_lower,
        ci_upper,
        alpha,
        seed,
        failed,
    })
}

fn refit(data: &RegressionData, spec: &LossSpec) -> Result<FitResult> {
    if data.p() == 0 {
        fit_location(data.y(), spec)
    } else {
        fit_linear(data, spec)
    }
}

/// Case-resampling bootstrap standard errors for a fit (see
/// [`bootstrap_se_scheme`] for the residual alternative).
pub fn bootstrap_se(
    data: &RegressionData,
    spec: &LossSpec,
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<BootstrapReport> {
    bootstrap_se_scheme(data, spec, b, alpha, seed, ResampleScheme::Cases)
}

/// Bootstrap standard errors and percentile intervals for the coefficients
/// of a location or regression fit. `Cases` resamples whole rows, which
/// also captures design variability; `Residuals` keeps the design fixed and
/// resamples the full-data residuals onto the fitted values, which is the
/// natural choice when the predictors are fixed by the study (and avoids
/// inflating standard errors through high-leverage rows). Replicates whose
/// refit fails or does not converge are skipped; more than 10% skipped is
/// an error.
pub fn bootstrap_se_scheme(
    data: &RegressionData,
    spec: &LossSpec,
    b: usize,
    alpha: f64,
    seed: u64,
    scheme: ResampleScheme,
) -> Result<BootstrapReport> {
    if b == 0 {
        return Err(Error::param("need at least one replicate"));
    }
    check_alpha(alpha)?;
    let full = refit(data, spec)?;
    let n = data.n();

    let resid_fitted: Option<(Vec<f64>, Vec<f64>)> = match scheme {
        ResampleScheme::Cases => None,
        ResampleScheme::Residuals => {
            let r = crate::solve::residuals(data, &full);
            let fitted: Vec<f64> = data.y().iter().zip(&r).map(|(y, ri)| y - ri).collect();
            Some((r, fitted))
        }
    };

    let rows: Vec<Option<Vec<f64>>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(seed, i as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let resampled = match &resid_fitted {
                None => data.resample_rows(&idx),
                Some((r, fitted)) => {
                    let y = DVector::from_iterator(
                        n,
                        idx.iter().enumerate().map(|(row, &j)| fitted[row] + r[j]),
                    );
                    data.with_response(y)
                }
            };
            match refit(&resampled, spec) {
                Ok(f) if f.converged => Some(f.beta),
                _ => None,
            }
        })
        .collect();

    let estimates: Vec<Vec<f64>> = rows.into_iter().flatten().collect();
    let failed = b - estimates.len();
    if failed * 10 > b {
        return Err(Error::FitFailed(format!(
            "{failed} of {b} bootstrap replicates failed to converge"
        )));
    }
    let (se, ci_lower, ci_upper) = column_se_and_ci(&estimates, alpha);
    Ok(BootstrapReport {
        replicates: estimates.len(),
        estimates,
        point: full.beta,
        se,
        ci_lower,
        ci_upper,
        alpha,
        seed,
        failed,
    })
}

/// Kolmogorov-Smirnov statistic: the largest gap between the empirical CDF
/// and the candidate distribution's CDF, evaluated at the order statistics.
pub fn ks_statistic(data: &[f64], dist: &DistSpec) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::data("empty data"));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite entries"));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = dist.cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Survival function of the Kolmogorov distribution (the asymptotic law of
/// √n·D under the null). The alternating series converges fast for large
/// arguments; below λ≈1 the complementary theta-series form is used because
/// the alternating one loses precision there.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        let mut cdf = 0.0;
        for k in 1..=8_u32 {
            let m = (2 * k - 1) as f64;
            cdf += (-m * m * std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for k in 1..=100_u32 {
            let kk = (k * k) as f64;
            let term = (-2.0 * kk * lambda * lambda).exp();
            if term < 1e-18 {
                break;
            }
            sf += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
        }
        sf.clamp(0.0, 1.0)
    }
}

/// Goodness-of-fit summary: the K-S distance between data and a fitted
/// member of `dist`'s family, with the asymptotic p-value for √n·D.
#[derive(Debug, Clone, Serialize)]
pub struct GofReport {
    pub statistic_d: f64,
    pub p_value: f64,
    pub fitted: DistSpec,
    pub dist: DistKind,
}

fn gaussian_mle(data: &[f64]) -> Result<DistSpec> {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::data("degenerate data: zero variance"));
    }
    DistSpec::gaussian(mean, var.sqrt())
}

fn cauchy_mle(data: &[f64]) -> Result<DistSpec> {
    // minimize the Cauchy negative log-likelihood over (θ, log σ) with the
    // simplex search, started at the median and half the interquartile range
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let th0 = median(data);
    let iqr = percentile_sorted(&sorted, 0.75) - percentile_sorted(&sorted, 0.25);
    let s0 = (iqr / 2.0).max(1e-6 * (1.0 + th0.abs()));
    let nll = |p: &[f64]| -> f64 {
        let (th, lsg) = (p[0], p[1].clamp(-300.0, 300.0));
        let sg = lsg.exp();
        data.iter()
            .map(|&x| {
                let z = (x - th) / sg;
                lsg + (1.0 + z * z).ln()
            })
            .sum()
    };
    let out = crate::solve::nelder_mead(&nll, &[th0, s0.ln()], 1e-10, 1e-12, 20_000);
    if !out.converged {
        return Err(Error::FitFailed("Cauchy likelihood search did not converge".into()));
    }
    DistSpec::cauchy(out.x[0], out.x[1].exp())
}

fn mle_for_kind(data: &[f64], kind: DistKind) -> Result<DistSpec> {
    match kind {
        DistKind::Gaussian => gaussian_mle(data),
        DistKind::Cauchy => cauchy_mle(data),
        DistKind::Cosh => {
            let ls = fit_location_scale(data)?;
            DistSpec::cosh(ls.theta(), ls.sigma())
        }
        DistKind::SkewedCosh => Err(Error::UnsupportedKind(
            "goodness of fit supports the cosh, cauchy, and gaussian families".into(),
        )),
    }
}

/// Fit `kind` to the data by maximum likelihood (location and scale), then
/// test the fit with the K-S statistic. Note the p-value does not adjust
/// for the estimated parameters, so it is conservative in the usual way.
pub fn ks_test(data: &[f64], kind: DistKind) -> Result<GofReport> {
    if data.len() < 2 {
        return Err(Error::data("need at least 2 points"));
    }
    let fitted = mle_for_kind(data, kind)?;
    let d = ks_statistic(data, &fitted)?;
    let p_value = kolmogorov_sf((data.len() as f64).sqrt() * d);
    Ok(GofReport { statistic_d: d, p_value, fitted, dist: kind })
}

/// Like [`ks_test`], but with the scale held fixed at `sigma` and only the
/// location estimated. This is the right test when the candidate scale is
/// known from the data-generating context (e.g. standardized residuals):
/// letting each family stretch its own scale can mask tail differences.
pub fn ks_test_fixed_scale(data: &[f64], kind: DistKind, sigma: f64) -> Result<GofReport> {
    if data.len() < 2 {
        return Err(Error::data("need at least 2 points"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("sigma must be positive and finite, got {sigma}")));
    }
    let fitted = match kind {
        DistKind::Gaussian => {
            // with σ fixed the Gaussian MLE for location is the mean
            let mean = data.iter().sum::<f64>() / data.len() as f64;
            DistSpec::gaussian(mean, sigma)?
        }
        DistKind::Cosh | DistKind::Cauchy => {
            // the location MLE at fixed scale is a location M-estimate of
            // the rescaled data: argmin Σ ρ((x-θ)/σ) = σ·argmin Σ ρ(x/σ-u)
            let scaled: Vec<f64> = data.iter().map(|x| x / sigma).collect();
            let loss = if kind == DistKind::Cosh {
                LossSpec::LogCosh
            } else {
                LossSpec::CauchyLoss
            };
            let fit = fit_location(&scaled, &loss)?;
            let theta = sigma * fit.beta[0];
            match kind {
                DistKind::Cosh => DistSpec::cosh(theta, sigma)?,
                _ => DistSpec::cauchy(theta, sigma)?,
            }
        }
        DistKind::SkewedCosh => {
            return Err(Error::UnsupportedKind(
                "goodness of fit supports the cosh, cauchy, and gaussian families".into(),
            ))
        }
    };
    let d = ks_statistic(data, &fitted)?;
    let p_value = kolmogorov_sf((data.len() as f64).sqrt() * d);
    Ok(GofReport { statistic_d: d, p_value, fitted, dist: kind })
}
