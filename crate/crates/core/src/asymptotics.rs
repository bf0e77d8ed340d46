//! First- and second-order expansions of the deviatile and expectile, the
//! crossover tail index `gamma*`, and the limiting-law constants of the
//! intermediate estimator.
//!
//! All `(1 + o(1))` factors are set to one.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{check_probability, Error, Result};

fn check_gamma(gamma: f64, limit: f64, what: &'static str) -> Result<()> {
    if gamma > 0.0 && gamma < limit {
        Ok(())
    } else {
        Err(Error::InfiniteMoment {
            measure: what,
            moment: if limit <= 0.5 { "variance" } else { "mean" },
            gamma,
            limit,
        })
    }
}

/// `(1/γ - 1)^{-γ}`: the limit of `e_τ / q_τ`.
pub fn expectile_quantile_ratio(gamma: f64) -> f64 {
    (-gamma * (1.0 / gamma - 1.0).ln()).exp()
}

/// `β_γ = (1/γ - 1)^{-γ} / sqrt(1 - 2γ)`; diverges as `γ -> 1/2`.
pub fn beta_gamma(gamma: f64) -> Result<f64> {
    check_gamma(gamma, 0.5, "deviatile expansion")?;
    Ok(expectile_quantile_ratio(gamma) / (1.0 - 2.0 * gamma).sqrt())
}

/// `ln β_γ`, continuous on `(0, 1/2)`.
fn log_beta_gamma(gamma: f64) -> f64 {
    -gamma * (1.0 / gamma - 1.0).ln() - 0.5 * (1.0 - 2.0 * gamma).ln()
}

static GAMMA_STAR: OnceLock<f64> = OnceLock::new();

/// Unique `γ* ∈ (0, 1/2)` with `β_{γ*} = 1`, found once by bisection.
///
/// `ln β_γ ≈ γ(1 + ln γ) < 0` near zero and `-> +∞` at one half.
pub fn gamma_star() -> f64 {
    *GAMMA_STAR.get_or_init(|| {
        let (mut lo, mut hi) = (1e-6, 0.5 - 1e-9);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if log_beta_gamma(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}

static ES_CROSSING: OnceLock<f64> = OnceLock::new();

/// Tail index above which `β_γ > 1/(1-γ)`, so the deviatile asymptotically
/// exceeds ES. About 0.3655.
pub fn es_crossing() -> f64 {
    *ES_CROSSING.get_or_init(|| {
        let (mut lo, mut hi) = (gamma_star(), 0.5 - 1e-9);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if log_beta_gamma(mid) + (1.0 - mid).ln() < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}

/// `((1/γ - 1)^{-ρ} - 1) / ρ`, with the `ρ = 0` limit `-ln(1/γ - 1)`.
fn log_ratio_term(gamma: f64, rho: f64) -> f64 {
    let l = (1.0 / gamma - 1.0).ln();
    if rho.abs() < 1e-12 {
        -l
    } else {
        (-rho * l).exp_m1() / rho
    }
}

/// `ξ₁ = (2γ - 1)(1/γ - 1)^γ E(X)`.
pub fn xi1(gamma: f64, mean: f64) -> f64 {
    (2.0 * gamma - 1.0) * (1.0 / gamma - 1.0).powf(gamma) * mean
}

/// Second-order coefficient multiplying `A((1-τ)^{-1})` in the deviatile expansion.
pub fn xi2(gamma: f64, rho: f64) -> f64 {
    let c = (1.0 / gamma - 1.0).powf(-rho);
    c * (2.0 - 3.0 * gamma - rho) / ((1.0 - rho - 2.0 * gamma) * (1.0 - rho - gamma))
        + log_ratio_term(gamma, rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerms {
    pub gamma: f64,
    pub rho: f64,
    pub beta_gamma: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub mean: f64,
}

impl ExpansionTerms {
    pub fn new(gamma: f64, rho: f64, mean: f64) -> Result<Self> {
        Ok(ExpansionTerms {
            gamma,
            rho,
            beta_gamma: beta_gamma(gamma)?,
            xi1: xi1(gamma, mean),
            xi2: xi2(gamma, rho),
            mean,
        })
    }

    pub fn for_model<D: Distribution + ?Sized>(m: &D) -> Result<Self> {
        let meta = m.tail();
        check_gamma(meta.gamma, 0.5, "deviatile expansion")?;
        let mean = m.mean().ok_or(Error::InfiniteMoment {
            measure: "deviatile expansion",
            moment: "mean",
            gamma: meta.gamma,
            limit: 1.0,
        })?;
        Self::new(meta.gamma, meta.rho, mean)
    }
}

/// `β_γ q_τ` with the model's exact quantile.
pub fn first_order_deviatile<D: Distribution + ?Sized>(m: &D, tau: f64) -> Result<f64> {
    check_probability("tau", tau)?;
    let gamma = m.tail().gamma;
    Ok(beta_gamma(gamma)? * m.quantile(tau)?)
}

/// `β_γ q_τ (1 + ξ₁/q_τ + ξ₂ A((1-τ)^{-1}))`.
pub fn second_order_deviatile<D: Distribution + ?Sized>(m: &D, tau: f64) -> Result<f64> {
    check_probability("tau", tau)?;
    let terms = ExpansionTerms::for_model(m)?;
    let q = m.quantile(tau)?;
    let a = m.tail().aux_at(1.0 / (1.0 - tau));
    Ok(terms.beta_gamma * q * (1.0 + terms.xi1 / q + terms.xi2 * a))
}

/// Second-order approximations of `e_τ/q_τ` and `F̄(e_τ)/(1-τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectileExpansion {
    pub e_over_q: f64,
    pub fbar_ratio: f64,
}

pub fn expectile_expansion<D: Distribution + ?Sized>(m: &D, tau: f64) -> Result<ExpectileExpansion> {
    check_probability("tau", tau)?;
    let meta = m.tail();
    let (gamma, rho) = (meta.gamma, meta.rho);
    check_gamma(gamma, 1.0, "expectile expansion")?;
    let mean = m.mean().ok_or(Error::InfiniteMoment {
        measure: "expectile expansion",
        moment: "mean",
        gamma,
        limit: 1.0,
    })?;
    let q = m.quantile(tau)?;
    let a = meta.aux_at(1.0 / (1.0 - tau));
    let odds = 1.0 / gamma - 1.0;
    let c = odds.powf(-rho);
    let eta = -odds.powf(gamma) / q * mean - c / (gamma * (1.0 - rho - gamma)) * a;
    let r = gamma * odds.powf(gamma) / q * mean
        + (c / (1.0 - rho - gamma) + log_ratio_term(gamma, rho)) * a;
    Ok(ExpectileExpansion {
        e_over_q: expectile_quantile_ratio(gamma) * (1.0 + r),
        fbar_ratio: odds * (1.0 + eta),
    })
}

/// `m(γ) = -ln(1/γ - 1) + 1/(1-γ) + 1/(1-2γ)`.
pub fn m_gamma(gamma: f64) -> f64 {
    -(1.0 / gamma - 1.0).ln() + 1.0 / (1.0 - gamma) + 1.0 / (1.0 - 2.0 * gamma)
}

/// `v(γ) = γ²(1 + m(γ)²)`: asymptotic variance of the intermediate estimator.
pub fn v_gamma(gamma: f64) -> f64 {
    let m = m_gamma(gamma);
    gamma * gamma * (1.0 + m * m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLawConstants {
    pub m_gamma: f64,
    pub v_gamma: f64,
    /// Mean of the Gaussian limit, `m(γ)λ₂/(1-ρ) - (λ₁ξ₁ + λ₂ξ₂)`.
    pub bias: f64,
}

pub fn limit_law_constants(
    gamma: f64,
    rho: f64,
    lambda1: f64,
    lambda2: f64,
    mean: f64,
) -> Result<LimitLawConstants> {
    check_gamma(gamma, 0.5, "intermediate deviatile estimator")?;
    if rho > 0.0 {
        return Err(Error::InvalidParameter(format!("rho must be <= 0, got {rho}")));
    }
    let m = m_gamma(gamma);
    let bias = m * lambda2 / (1.0 - rho) - (lambda1 * xi1(gamma, mean) + lambda2 * xi2(gamma, rho));
    Ok(LimitLawConstants {
        m_gamma: m,
        v_gamma: v_gamma(gamma),
        bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{ParetoModel, StudentTModel};

    #[test]
    fn beta_gamma_values() {
        let b = beta_gamma(1.0 / 3.0).unwrap();
        let exact = 2f64.powf(-1.0 / 3.0) * 3f64.sqrt();
        assert!((b - exact).abs() < 1e-14);
        assert!((b - 1.374729).abs() < 1e-6);
        assert!((beta_gamma(1e-9).unwrap() - 1.0).abs() < 1e-6);
        assert!(beta_gamma(0.5).is_err());
        assert!(beta_gamma(0.0).is_err());
        assert!(beta_gamma(0.4999).unwrap() > 50.0);
    }

    #[test]
    fn es_crossing_root() {
        // scipy brentq on beta_gamma = 1/(1 - gamma)
        assert!((es_crossing() - 0.36549849821985836).abs() < 1e-11);
    }

    #[test]
    fn gamma_star_root() {
        let g = gamma_star();
        assert!((g - 0.2135).abs() < 5e-4, "{g}");
        assert!((beta_gamma(g).unwrap() - 1.0).abs() < 1e-9);
        assert!(beta_gamma(0.1).unwrap() < 1.0);
        assert!(beta_gamma(0.3).unwrap() > 1.0);
    }

    #[test]
    fn first_order_pareto() {
        let m = ParetoModel::new(3.0, 1.0).unwrap();
        let d = first_order_deviatile(&m, 0.95).unwrap();
        assert!((d - 1.374729 * 1.714418).abs() < 1e-5, "{d}");
        let scaled = ParetoModel::new(3.0, 2.5).unwrap();
        let ds = first_order_deviatile(&scaled, 0.95).unwrap();
        assert!((ds - 2.5 * d).abs() < 1e-12);
    }

    #[test]
    fn second_order_reduces_without_correction_terms() {
        let t = ExpansionTerms::new(0.25, -0.5, 0.0).unwrap();
        assert_eq!(t.xi1, 0.0);
        // with A = 0 and E X = 0 the correction vanishes
        let q = 3.0;
        let second = t.beta_gamma * q * (1.0 + t.xi1 / q + t.xi2 * 0.0);
        assert_eq!(second, t.beta_gamma * q);
    }

    #[test]
    fn xi2_continuous_at_rho_zero() {
        for &g in &[0.1, 0.3, 0.45] {
            assert!((xi2(g, -1e-10) - xi2(g, 0.0)).abs() < 1e-7 * (1.0 + xi2(g, 0.0).abs()));
        }
    }

    #[test]
    fn m_and_v_at_one_third() {
        let m = m_gamma(1.0 / 3.0);
        assert!((m - (4.5 - 2f64.ln())).abs() < 1e-12);
        assert!((m - 3.806853).abs() < 1e-6);
        let c = limit_law_constants(1.0 / 3.0, -1.0 / 3.0, 0.0, 0.0, 0.5).unwrap();
        assert_eq!(c.bias, 0.0);
        assert!(c.v_gamma > (1.0f64 / 3.0).powi(2));
        assert!((c.v_gamma - (1.0 / 9.0) * (1.0 + m * m)).abs() < 1e-12);
        assert!(limit_law_constants(0.6, -1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn expectile_expansion_requires_finite_mean() {
        let c = StudentTModel::new(1.0).unwrap();
        assert!(expectile_expansion(&c, 0.99).is_err());
    }
}
