//! Hill-based tail estimators at intermediate and extrapolated levels, with
//! asymptotic and stationary-bootstrap confidence intervals.
//!
//! Order statistics follow the usual convention `X_{1,n} <= ... <= X_{n,n}`;
//! on an ascending slice `X_{n-i,n}` is `x[n - 1 - i]`.

mod bootstrap;

pub use bootstrap::{block_bootstrap_ci, stationary_resample, BootstrapConfig, BootstrapResult};

use serde::{Deserialize, Serialize};

use crate::asymptotics::{expectile_quantile_ratio, v_gamma};
use crate::distributions::SortedSample;
use crate::error::{check_probability, Error, Result};
use crate::risk_core::Measure;
use crate::special::normal_quantile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub gamma_hat: f64,
    pub k: usize,
    pub n: usize,
    /// `(k, gamma_hat(k))` pairs, filled only on request.
    pub hill_curve: Vec<(usize, f64)>,
}

/// The top `k_max + 1` order statistics, largest first.
fn top_values(x: &[f64], k_max: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if k_max == 0 || k_max >= n {
        return Err(Error::KOutOfRange { k: k_max, n });
    }
    let threshold = x[n - 1 - k_max];
    if threshold <= 0.0 {
        return Err(Error::NonPositiveThreshold {
            k: k_max,
            value: threshold,
        });
    }
    Ok((0..=k_max).map(|i| x[n - 1 - i]).collect())
}

// log ratios rather than differences of logs: exact under power-of-two scaling
fn hill_from_top(top: &[f64], k: usize) -> f64 {
    let threshold = top[k];
    top[..k].iter().map(|x| (x / threshold).ln()).sum::<f64>() / k as f64
}

/// `γ̂_H = (1/k) Σ_{i<k} ln(X_{n-i,n} / X_{n-k,n})`.
pub fn hill(s: &SortedSample, k: usize) -> Result<TailFit> {
    let top = top_values(s.values(), k)?;
    Ok(TailFit {
        gamma_hat: hill_from_top(&top, k),
        k,
        n: s.len(),
        hill_curve: Vec::new(),
    })
}

/// Hill estimates for every `k` in `k_min..=k_max`.
pub fn hill_curve(s: &SortedSample, k_min: usize, k_max: usize) -> Result<Vec<(usize, f64)>> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::InvalidParameter(format!(
            "k range must satisfy 1 <= k_min <= k_max, got {k_min}..{k_max}"
        )));
    }
    let top = top_values(s.values(), k_max)?;
    Ok((k_min..=k_max)
        .map(|k| (k, hill_from_top(&top, k)))
        .collect())
}

/// Like [`hill`], with the diagnostic curve over `k_min..=k_max` attached.
pub fn hill_with_curve(s: &SortedSample, k: usize, k_min: usize, k_max: usize) -> Result<TailFit> {
    let mut fit = hill(s, k)?;
    fit.hill_curve = hill_curve(s, k_min, k_max)?;
    Ok(fit)
}

/// `⌊n(1-τ)⌋`, guarded against `0.05 * 100 = 4.999...` style truncation.
pub fn exceedance_count(n: usize, tau: f64) -> usize {
    (n as f64 * (1.0 - tau) + 1e-9).floor() as usize
}

/// `q̂_τ = X_{n-⌊n(1-τ)⌋,n}`.
pub fn intermediate_quantile(s: &SortedSample, tau: f64) -> Result<f64> {
    check_probability("tau", tau)?;
    let n = s.len();
    let m = exceedance_count(n, tau);
    if m == 0 {
        return Err(Error::LevelTooExtreme { tau, n });
    }
    if m >= n {
        return Err(Error::SampleTooSmall {
            needed: m + 1,
            got: n,
        });
    }
    Ok(s.values()[n - m - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Asymptotic,
    BlockBootstrap,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub measure: Measure,
    pub level: f64,
    pub point: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub ci_method: CiMethod,
    pub k_used: usize,
    pub gamma_hat: f64,
    /// Intermediate level the estimate was extrapolated from, if any.
    pub base_level: Option<f64>,
}

impl RiskEstimate {
    fn bare(measure: Measure, level: f64, point: f64, k: usize, gamma_hat: f64) -> Self {
        RiskEstimate {
            measure,
            level,
            point,
            ci_low: None,
            ci_high: None,
            ci_method: CiMethod::None,
            k_used: k,
            gamma_hat,
            base_level: None,
        }
    }

    pub fn is_extrapolated(&self) -> bool {
        self.base_level.is_some_and(|b| b != self.level)
    }

    fn with_symmetric_ci(mut self, half_width: f64, method: CiMethod) -> Self {
        let h = half_width.abs();
        self.ci_low = Some(self.point - h);
        self.ci_high = Some(self.point + h);
        self.ci_method = method;
        self
    }
}

fn out_of_range(measure: &'static str, gamma_hat: f64, limit: f64) -> Error {
    Error::TailIndexOutOfRange {
        measure,
        gamma_hat,
        limit,
    }
}

/// `β̂ = (1/γ̂ - 1)^{-γ̂} / sqrt(1 - 2γ̂)`, defined for `0 < γ̂ < 1/2`.
pub fn beta_hat(gamma_hat: f64) -> Result<f64> {
    if gamma_hat > 0.0 && gamma_hat < 0.5 {
        Ok(expectile_quantile_ratio(gamma_hat) / (1.0 - 2.0 * gamma_hat).sqrt())
    } else {
        Err(out_of_range("deviatile", gamma_hat, 0.5))
    }
}

/// Multiplier from the intermediate estimate `q̂_τ` to `measure` at level τ.
pub fn measure_factor(measure: Measure, gamma_hat: f64) -> Result<f64> {
    match measure {
        Measure::VaR => Ok(1.0),
        Measure::Es => {
            if gamma_hat < 1.0 {
                Ok(1.0 / (1.0 - gamma_hat))
            } else {
                Err(out_of_range("ES", gamma_hat, 1.0))
            }
        }
        Measure::Expectile => {
            if gamma_hat > 0.0 && gamma_hat < 1.0 {
                Ok(expectile_quantile_ratio(gamma_hat))
            } else {
                Err(out_of_range("expectile", gamma_hat, 1.0))
            }
        }
        Measure::Deviatile => beta_hat(gamma_hat),
        Measure::Variantile => Err(Error::InvalidParameter(
            "no tail estimator is provided for the variantile; estimate the deviatile instead".into(),
        )),
    }
}

/// Weissman factor `((1-p)/(1-τ))^{-γ̂}`.
pub fn weissman_factor(tau: f64, p: f64, gamma_hat: f64) -> f64 {
    ((1.0 - p) / (1.0 - tau)).powf(-gamma_hat)
}

fn check_extreme_level(tau: f64, p: f64) -> Result<()> {
    check_probability("p", p)?;
    if p < tau {
        return Err(Error::InvalidParameter(format!(
            "extreme level p = {p} must not be below the intermediate level tau = {tau}"
        )));
    }
    Ok(())
}

/// Estimate of `measure` from a given `γ̂` and `q̂_τ`; extrapolated to `p` when set.
pub fn estimate_from_fit(
    measure: Measure,
    gamma_hat: f64,
    q_hat: f64,
    tau: f64,
    p: Option<f64>,
    k: usize,
) -> Result<RiskEstimate> {
    check_probability("tau", tau)?;
    let base = measure_factor(measure, gamma_hat)? * q_hat;
    match p {
        None => Ok(RiskEstimate::bare(measure, tau, base, k, gamma_hat)),
        Some(p) => {
            check_extreme_level(tau, p)?;
            let mut est = RiskEstimate::bare(
                measure,
                p,
                weissman_factor(tau, p, gamma_hat) * base,
                k,
                gamma_hat,
            );
            est.base_level = Some(tau);
            Ok(est)
        }
    }
}

/// `dev̂_τ = β̂ q̂_τ` with `γ̂` from the top `k` order statistics.
pub fn intermediate_deviatile(s: &SortedSample, tau: f64, k: usize) -> Result<RiskEstimate> {
    let fit = hill(s, k)?;
    let q = intermediate_quantile(s, tau)?;
    estimate_from_fit(Measure::Deviatile, fit.gamma_hat, q, tau, None, k)
}

/// `dev̂*_p = ((1-p)/(1-τ))^{-γ̂} dev̂_τ`.
pub fn extreme_deviatile(s: &SortedSample, tau: f64, p: f64, k: usize) -> Result<RiskEstimate> {
    let fit = hill(s, k)?;
    let q = intermediate_quantile(s, tau)?;
    estimate_from_fit(Measure::Deviatile, fit.gamma_hat, q, tau, Some(p), k)
}

pub const COMPANION_MEASURES: [Measure; 4] =
    [Measure::VaR, Measure::Es, Measure::Expectile, Measure::Deviatile];

/// The four tail measures at one level; each entry fails independently.
#[derive(Debug)]
pub struct CompanionRow {
    pub level: f64,
    pub entries: Vec<(Measure, Result<RiskEstimate>)>,
}

impl CompanionRow {
    pub fn get(&self, measure: Measure) -> Option<&Result<RiskEstimate>> {
        self.entries.iter().find(|(m, _)| *m == measure).map(|(_, r)| r)
    }
}

#[derive(Debug)]
pub struct CompanionSet {
    pub gamma_hat: f64,
    pub q_hat: f64,
    pub tau: f64,
    pub k: usize,
    pub intermediate: CompanionRow,
    pub extreme: Option<CompanionRow>,
}

/// VaR, ES, expectile and deviatile at `tau`, and at `p` by extrapolation.
pub fn companion_from_fit(gamma_hat: f64, q_hat: f64, tau: f64, p: Option<f64>, k: usize) -> Result<CompanionSet> {
    check_probability("tau", tau)?;
    if let Some(p) = p {
        check_extreme_level(tau, p)?;
    }
    let row = |level: f64, p: Option<f64>| CompanionRow {
        level,
        entries: COMPANION_MEASURES
            .iter()
            .map(|&m| (m, estimate_from_fit(m, gamma_hat, q_hat, tau, p, k)))
            .collect(),
    };
    Ok(CompanionSet {
        gamma_hat,
        q_hat,
        tau,
        k,
        intermediate: row(tau, None),
        extreme: p.map(|p| row(p, Some(p))),
    })
}

pub fn companion_estimators(s: &SortedSample, tau: f64, p: Option<f64>, k: usize) -> Result<CompanionSet> {
    let fit = hill(s, k)?;
    let q = intermediate_quantile(s, tau)?;
    companion_from_fit(fit.gamma_hat, q, tau, p, k)
}

/// Two-sided normal critical value for `coverage` in `[0, 1)`.
pub fn z_value(coverage: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&coverage) {
        return Err(Error::InvalidParameter(format!(
            "coverage must lie in [0, 1), got {coverage}"
        )));
    }
    Ok(normal_quantile(0.5 + 0.5 * coverage))
}

/// Attaches a Gaussian CI from the i.i.d. limit laws, bias terms ignored.
///
/// Extrapolated estimates use the Weissman-type width
/// `z γ̂ ln((1-τ)/(1-p)) / sqrt(k)`, which dominates every measure; at the
/// intermediate level the deviatile uses `sqrt(v(γ̂))` and VaR uses `γ̂`.
/// ES and expectile have no intermediate limit law here and keep `ci_method = none`.
pub fn asymptotic_ci(est: &RiskEstimate, fit: &TailFit, coverage: f64) -> Result<RiskEstimate> {
    let z = z_value(coverage)?;
    let g = fit.gamma_hat;
    let root_k = (fit.k as f64).sqrt();
    let rel = match est.base_level {
        Some(tau) if est.is_extrapolated() => Some(g * ((1.0 - tau) / (1.0 - est.level)).ln()),
        _ => match est.measure {
            Measure::Deviatile => Some(v_gamma(g).sqrt()),
            Measure::VaR => Some(g),
            _ => None,
        },
    };
    Ok(match rel {
        Some(r) => est
            .clone()
            .with_symmetric_ci(z * r / root_k * est.point, CiMethod::Asymptotic),
        None => est.clone(),
    })
}

/// What to re-estimate inside each bootstrap replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub measure: Measure,
    pub tau: f64,
    #[serde(default)]
    pub p: Option<f64>,
    pub k: usize,
}

impl EstimatorSpec {
    pub fn estimate(&self, s: &SortedSample) -> Result<RiskEstimate> {
        let fit = hill(s, self.k)?;
        let q = intermediate_quantile(s, self.tau)?;
        estimate_from_fit(self.measure, fit.gamma_hat, q, self.tau, self.p, self.k)
    }
}
