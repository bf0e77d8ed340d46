//! Exact (quadrature-based) and empirical expectile, variantile, deviatile,
//! VaR and ES.
//!
//! Partial moments about a point `e` are evaluated through their
//! survival-function forms
//!
//! ```text
//! E[(X-e)+]   = ∫_e^∞ F̄(x) dx          E[(X-e)-]   = ∫_{-∞}^e F(x) dx
//! E[(X-e)+^2] = 2∫_e^∞ (x-e) F̄(x) dx   E[(X-e)-^2] = 2∫_{-∞}^e (e-x) F(x) dx
//! ```
//!
//! after the substitution `|x - e| = exp(y)`, which turns power-law tails
//! into exponentially decaying integrands. The upper cut-off is placed where
//! a Karamata-type bound on the discarded tail, computed from the survival
//! function, falls below `1e-14` of a lower bound on the integral.

use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{check_probability, Error, Result};
use crate::quadrature::{bracket_decreasing, decreasing_root, integrate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    VaR,
    Es,
    Expectile,
    Variantile,
    Deviatile,
}

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::VaR => "VaR",
            Measure::Es => "ES",
            Measure::Expectile => "expectile",
            Measure::Variantile => "variantile",
            Measure::Deviatile => "deviatile",
        }
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "var" | "quantile" | "q" => Ok(Measure::VaR),
            "es" => Ok(Measure::Es),
            "expectile" | "e" => Ok(Measure::Expectile),
            "variantile" => Ok(Measure::Variantile),
            "deviatile" | "dev" => Ok(Measure::Deviatile),
            other => Err(Error::InvalidParameter(format!("unknown measure `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactNumeric,
    Empirical,
    Asymptotic1st,
    Asymptotic2nd,
    EstimatorIntermediate,
    EstimatorExtreme,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskMeasureValue {
    pub measure: Measure,
    pub level: f64,
    pub value: f64,
    pub method: Method,
}

const REL_TOL: f64 = 1e-13;
const TAIL_CUT: f64 = 1e-14;
// exp(-40) of the working scale is below double resolution of the integral
const LOG_FLOOR: f64 = 40.0;

/// Which partial moment to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Order {
    First,
    Second,
}

impl Order {
    fn power(self) -> i32 {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }

    fn factor(self) -> f64 {
        match self {
            Order::First => 1.0,
            Order::Second => 2.0,
        }
    }
}

fn working_scale<D: Distribution + ?Sized>(m: &D, e: f64) -> f64 {
    m.scale_hint().max(e.abs()).max(1e-12)
}

/// Truncation point `T` for `∫_0^∞ u^{j-1} S(u) du` with `S` regularly varying
/// of index `-alpha`: the tail beyond `T` is about `T^j S(T) / (alpha - j)`.
fn cutoff<S: Fn(f64) -> f64>(surv: S, alpha: f64, order: Order, scale: f64) -> f64 {
    let j = order.power();
    let slack = alpha - j as f64;
    let lower_bound = scale.powi(j) * surv(scale) / order.factor();
    let mut t = scale;
    for _ in 0..400 {
        let bound = 2.0 * t.powi(j) * surv(t) / slack;
        if bound <= TAIL_CUT * lower_bound || t > 1e280 {
            return t;
        }
        t *= 4.0;
    }
    t
}

fn upper_moment<D: Distribution + ?Sized>(m: &D, e: f64, order: Order) -> Result<f64> {
    let alpha = 1.0 / m.tail().gamma;
    if alpha <= order.power() as f64 {
        return Err(Error::InfiniteMoment {
            measure: "upper partial moment",
            moment: if order == Order::First { "mean" } else { "variance" },
            gamma: m.tail().gamma,
            limit: 1.0 / order.power() as f64,
        });
    }
    let scale = working_scale(m, e);
    let cut = cutoff(|u| m.survival(e + u), alpha, order, scale);
    let j = order.power();
    let f = |y: f64| {
        let u = y.exp();
        let s = m.survival(e + u);
        order.factor() * u.powi(j) * s
    };
    let lo = scale.ln() - LOG_FLOOR;
    let r = integrate(f, lo, cut.ln(), 0.0, REL_TOL)?;
    Ok(r.value)
}

fn lower_moment<D: Distribution + ?Sized>(m: &D, e: f64, order: Order) -> Result<f64> {
    let floor = m.support_lower();
    if e <= floor {
        return Ok(0.0);
    }
    let j = order.power();
    let f = |y: f64| {
        let u = y.exp();
        order.factor() * u.powi(j) * m.cdf(e - u)
    };
    let scale = working_scale(m, e);
    let upper = if floor.is_finite() {
        (e - floor).ln()
    } else {
        // left tail assumed no heavier than the right tail
        let alpha = 1.0 / m.tail().gamma;
        cutoff(|u| m.cdf(e - u), alpha, order, scale).ln()
    };
    let lo = upper.min(scale.ln()) - LOG_FLOOR;
    let r = integrate(f, lo, upper, 0.0, REL_TOL)?;
    Ok(r.value)
}

/// `E[(X-e)+]`, `E[(X-e)-]`, `E[(X-e)+^2]`, `E[(X-e)-^2]` for a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialMoments {
    pub upper1: f64,
    pub lower1: f64,
    pub upper2: f64,
    pub lower2: f64,
}

pub fn partial_moments<D: Distribution + ?Sized>(m: &D, e: f64) -> Result<PartialMoments> {
    Ok(PartialMoments {
        upper1: upper_moment(m, e, Order::First)?,
        lower1: lower_moment(m, e, Order::First)?,
        upper2: upper_moment(m, e, Order::Second)?,
        lower2: lower_moment(m, e, Order::Second)?,
    })
}

fn require_mean<D: Distribution + ?Sized>(m: &D, measure: &'static str) -> Result<f64> {
    m.mean().ok_or(Error::InfiniteMoment {
        measure,
        moment: "mean",
        gamma: m.tail().gamma,
        limit: 1.0,
    })
}

fn require_variance<D: Distribution + ?Sized>(m: &D, measure: &'static str) -> Result<f64> {
    m.variance().ok_or(Error::InfiniteMoment {
        measure,
        moment: "variance",
        gamma: m.tail().gamma,
        limit: 0.5,
    })
}

/// First-order condition of the expectile, `τE(X-e)+ - (1-τ)E(X-e)-`.
pub fn expectile_foc<D: Distribution + ?Sized>(m: &D, tau: f64, e: f64) -> Result<f64> {
    Ok(tau * upper_moment(m, e, Order::First)? - (1.0 - tau) * lower_moment(m, e, Order::First)?)
}

/// Exact expectile: the root of the first-order condition, bracketed and
/// then polished with Newton steps using `g'(e) = -τF̄(e) - (1-τ)F(e)`.
pub fn true_expectile<D: Distribution + ?Sized>(m: &D, tau: f64) -> Result<f64> {
    check_probability("tau", tau)?;
    let mean = require_mean(m, "expectile")?;
    if tau == 0.5 {
        return Ok(mean);
    }
    let g = |e: f64| expectile_foc(m, tau, e);
    let dg = |e: f64| -tau * m.survival(e) - (1.0 - tau) * m.cdf(e);
    let s = m.scale_hint();
    let (lo, hi) = if tau > 0.5 {
        bracket_decreasing(g, mean, mean + s)?
    } else {
        bracket_decreasing(g, mean - s, mean)?
    };
    let root = decreasing_root(g, dg, lo, hi, 1e-15)?;
    let residual = g(root)?;
    if residual.abs() > 1e-10 * (1.0 + root.abs()) {
        return Err(Error::NonConvergence(format!(
            "expectile at tau = {tau}: residual {residual:e} at e = {root}"
        )));
    }
    Ok(root)
}

/// Expectile together with the partial moments about it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectileMoments {
    pub expectile: f64,
    pub moments: PartialMoments,
}

pub fn expectile_moments<D: Distribution + ?Sized>(m: &D, tau: f64) -> Result<ExpectileMoments> {
    check_probability("tau", tau)?;
    require_variance(m, "deviatile")?;
    let e = true_expectile(m, tau)?;
    Ok(ExpectileMoments {
        expectile: e,
        moments: partial_moments(m, e)?,
    })
}

/// `dev_τ = (τ/(1-τ) E(X-e)+² + E(X-e)-²)^{1/2}`; requires finite variance.
pub fn true_deviatile<D: Distribution + ?Sized>(m: &D, tau: f64) -> Result<f64> {
    let em = expectile_moments(m, tau)?;
    let pm = em.moments;
    Ok((tau / (1.0 - tau) * pm.upper2 + pm.lower2).sqrt())
}

/// Same quantity through `dev² = (2τ-1)/(1-τ) E(X-e)+² + E(X-e)²`, with
/// `E(X-e)² = Var(X) + (E X - e)²` taken analytically.
pub fn true_deviatile_rewritten<D: Distribution + ?Sized>(m: &D, tau: f64) -> Result<f64> {
    let em = expectile_moments(m, tau)?;
    let var = require_variance(m, "deviatile")?;
    let mean = require_mean(m, "deviatile")?;
    let centered = var + (mean - em.expectile).powi(2);
    Ok(((2.0 * tau - 1.0) / (1.0 - tau) * em.moments.upper2 + centered).sqrt())
}

/// `var_τ = τE(X-e)+² + (1-τ)E(X-e)-²`.
pub fn true_variantile<D: Distribution + ?Sized>(m: &D, tau: f64) -> Result<f64> {
    let em = expectile_moments(m, tau)?;
    let pm = em.moments;
    Ok(tau * pm.upper2 + (1.0 - tau) * pm.lower2)
}

/// `ES_τ = (1/(1-τ)) ∫_τ^1 q_p dp`, integrated in `s` with `1-p = (1-τ)e^{-s}`.
pub fn true_es<D: Distribution + ?Sized>(m: &D, tau: f64) -> Result<f64> {
    check_probability("tau", tau)?;
    require_mean(m, "ES")?;
    let gamma = m.tail().gamma;
    let tail = 1.0 - tau;
    let q_tau = m.tail_quantile(tail)?;
    let target = TAIL_CUT * q_tau.abs().max(m.scale_hint());
    let mut s_max: f64 = 10.0;
    while s_max < 700.0 {
        let q = m.tail_quantile(tail * (-s_max).exp())?;
        if q.abs() * (-s_max).exp() / (1.0 - gamma) <= target {
            break;
        }
        s_max += 5.0;
    }
    let err = std::cell::Cell::new(None);
    let f = |s: f64| {
        let w = (-s).exp();
        match m.tail_quantile(tail * w) {
            Ok(q) => q * w,
            Err(e) => {
                err.set(Some(e));
                0.0
            }
        }
    };
    let r = integrate(f, 0.0, s_max, 0.0, REL_TOL)?;
    if let Some(e) = err.take() {
        return Err(e);
    }
    Ok(r.value)
}

pub fn true_value<D: Distribution + ?Sized>(
    m: &D,
    measure: Measure,
    tau: f64,
) -> Result<RiskMeasureValue> {
    let value = match measure {
        Measure::VaR => m.quantile(tau)?,
        Measure::Es => true_es(m, tau)?,
        Measure::Expectile => true_expectile(m, tau)?,
        Measure::Variantile => true_variantile(m, tau)?,
        Measure::Deviatile => true_deviatile(m, tau)?,
    };
    Ok(RiskMeasureValue {
        measure,
        level: tau,
        value,
        method: Method::ExactNumeric,
    })
}

/// Empirical expectile of an ascending sample.
///
/// The sample first-order condition is piecewise linear between order
/// statistics, so after locating the segment containing the sign change the
/// root is solved in closed form.
pub fn empirical_expectile_sorted(sorted: &[f64], tau: f64) -> Result<f64> {
    check_probability("tau", tau)?;
    let n = sorted.len();
    if n == 0 {
        return Err(Error::SampleTooSmall { needed: 1, got: 0 });
    }
    let total: f64 = sorted.iter().sum();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &x in sorted {
        acc += x;
        prefix.push(acc);
    }
    // g evaluated at e = sorted[j]: points 0..=j sit at or below e
    let g_at = |j: usize| {
        let e = sorted[j];
        let below = (j + 1) as f64;
        let above = (n - j - 1) as f64;
        let up = (total - prefix[j + 1]) - above * e;
        let down = below * e - prefix[j + 1];
        tau * up - (1.0 - tau) * down
    };
    if g_at(0) <= 0.0 {
        return Ok(sorted[0]);
    }
    // g is decreasing in j; find the last j with g(x_j) > 0
    let (mut lo, mut hi) = (0usize, n - 1);
    if g_at(hi) > 0.0 {
        return Ok(sorted[n - 1]);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if g_at(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // root in [x_lo, x_hi]; lo + 1 points are below it
    let m = (lo + 1) as f64;
    let s_low = prefix[lo + 1];
    let s_up = total - s_low;
    let e = (tau * s_up + (1.0 - tau) * s_low) / (tau * (n as f64 - m) + (1.0 - tau) * m);
    Ok(e.clamp(sorted[lo], sorted[hi]))
}

pub fn empirical_expectile(sample: &[f64], tau: f64) -> Result<f64> {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    empirical_expectile_sorted(&v, tau)
}

/// Plug-in deviatile `((1/n) Σ [τ/(1-τ)(X-ẽ)+² + (X-ẽ)-²])^{1/2}`.
pub fn empirical_deviatile_sorted(sorted: &[f64], tau: f64) -> Result<f64> {
    if sorted.len() < 2 {
        return Err(Error::SampleTooSmall {
            needed: 2,
            got: sorted.len(),
        });
    }
    let e = empirical_expectile_sorted(sorted, tau)?;
    let w = tau / (1.0 - tau);
    let sum: f64 = sorted
        .iter()
        .map(|&x| {
            let d = x - e;
            if d > 0.0 {
                w * d * d
            } else {
                d * d
            }
        })
        .sum();
    Ok((sum / sorted.len() as f64).sqrt())
}

pub fn empirical_deviatile(sample: &[f64], tau: f64) -> Result<f64> {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    empirical_deviatile_sorted(&v, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{ParetoModel, StudentTModel};

    fn pareto3() -> ParetoModel {
        ParetoModel::new(3.0, 1.0).unwrap()
    }

    /// Closed-form Lomax partial moments, independent of the quadrature.
    fn lomax_moments(a: f64, th: f64, e: f64) -> PartialMoments {
        let mean = th / (a - 1.0);
        let var = th * th * a / ((a - 1.0).powi(2) * (a - 2.0));
        let upper1 = th.powf(a) * (e + th).powf(1.0 - a) / (a - 1.0);
        let upper2 = 2.0 * th.powf(a) * (e + th).powf(2.0 - a) / ((a - 1.0) * (a - 2.0));
        PartialMoments {
            upper1,
            lower1: e - mean + upper1,
            upper2,
            lower2: var + (mean - e).powi(2) - upper2,
        }
    }

    #[test]
    fn partial_moments_match_lomax_closed_form() {
        for &(a, th) in &[(3.0, 1.0), (2.2, 1.0), (5.0, 2.0)] {
            let m = ParetoModel::new(a, th).unwrap();
            for &e in &[0.1, 1.0, 7.5] {
                let got = partial_moments(&m, e).unwrap();
                let want = lomax_moments(a, th, e);
                for (g, w) in [
                    (got.upper1, want.upper1),
                    (got.lower1, want.lower1),
                    (got.upper2, want.upper2),
                    (got.lower2, want.lower2),
                ] {
                    assert!(((g - w) / w).abs() < 1e-9, "a={a} e={e}: {g} vs {w}");
                }
            }
        }
    }

    #[test]
    fn expectile_at_half_is_mean() {
        assert!((true_expectile(&pareto3(), 0.5).unwrap() - 0.5).abs() < 1e-12);
        let t = StudentTModel::new(4.0).unwrap();
        assert_eq!(true_expectile(&t, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn expectile_solves_foc() {
        let m = pareto3();
        let e = true_expectile(&m, 0.95).unwrap();
        let g = expectile_foc(&m, 0.95, e).unwrap();
        assert!(g.abs() <= 1e-10 * (1.0 + e.abs()));
        // the Lomax closed-form FOC vanishes there too
        let pm = lomax_moments(3.0, 1.0, e);
        assert!((0.95 * pm.upper1 - 0.05 * pm.lower1).abs() < 1e-10);
    }

    #[test]
    fn expectile_away_from_half_on_symmetric_law() {
        let t = StudentTModel::new(3.0).unwrap();
        let hi = true_expectile(&t, 0.9).unwrap();
        let lo = true_expectile(&t, 0.1).unwrap();
        assert!((hi + lo).abs() < 1e-9);
    }

    #[test]
    fn deviatile_table_values() {
        let d = true_deviatile(&pareto3(), 0.95).unwrap();
        assert!(((d - 2.9759) / 2.9759).abs() < 1e-3, "{d}");
        let t3 = StudentTModel::new(3.0).unwrap();
        let d = true_deviatile(&t3, 0.95).unwrap();
        assert!(((d - 3.9685) / 3.9685).abs() < 1e-3, "{d}");
    }

    #[test]
    fn variantile_identity_and_examples() {
        let m = pareto3();
        let v = true_variantile(&m, 0.95).unwrap();
        let d = true_deviatile(&m, 0.95).unwrap();
        assert!(((d - (v / 0.05).sqrt()) / d).abs() < 1e-10);
        assert!((v - 0.05 * 2.9759f64.powi(2)).abs() / v < 2e-3);
        let half = true_variantile(&m, 0.5).unwrap();
        assert!((half - 0.75 / 2.0).abs() < 1e-10);
        let grid: Vec<f64> = [0.99, 0.999, 0.9999]
            .iter()
            .map(|&t| true_variantile(&m, t).unwrap())
            .collect();
        assert!(grid[0] > grid[1] && grid[1] > grid[2]);
    }

    #[test]
    fn deviatile_rejects_infinite_variance() {
        let m = ParetoModel::new(1.8, 1.0).unwrap();
        let err = true_deviatile(&m, 0.95).unwrap_err();
        assert!(err.to_string().contains("0.5"), "{err}");
        let t = StudentTModel::new(2.0).unwrap();
        assert!(true_deviatile(&t, 0.9).is_err());
        let cauchy = StudentTModel::new(1.0).unwrap();
        assert!(true_expectile(&cauchy, 0.9).is_err());
        assert!(true_es(&cauchy, 0.9).is_err());
    }

    #[test]
    fn es_closed_form_pareto() {
        let m = pareto3();
        let es = true_es(&m, 0.95).unwrap();
        let exact = 20f64.powf(1.0 / 3.0) * 1.5 - 1.0;
        assert!(((es - exact) / exact).abs() < 1e-8, "{es} vs {exact}");
        assert!((exact - 3.07164).abs() < 5e-5);
    }

    #[test]
    fn es_student_t_half_is_mean_abs() {
        // E[X | X > 0] for t_3 is 2 sqrt(3) / pi
        let t3 = StudentTModel::new(3.0).unwrap();
        let es = true_es(&t3, 0.5).unwrap();
        let exact = 2.0 * 3f64.sqrt() / std::f64::consts::PI;
        assert!(((es - exact) / exact).abs() < 1e-8, "{es} vs {exact}");
    }

    #[test]
    fn es_near_zero_level_is_mean() {
        let es = true_es(&pareto3(), 1e-9).unwrap();
        assert!((es - 0.5).abs() < 1e-7, "{es}");
    }

    #[test]
    fn empirical_expectile_examples() {
        assert!((empirical_expectile(&[1.0, 2.0, 3.0], 0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!((empirical_expectile(&[0.0, 0.0, 0.0, 10.0], 0.5).unwrap() - 2.5).abs() < 1e-15);
        // hand bisection on 0.9 Σ(x-e)+ = 0.1 Σ(e-x)+ for {1,2,3,4}
        let xs = [1.0, 2.0, 3.0, 4.0];
        let foc = |e: f64| {
            xs.iter()
                .map(|&x| 0.9 * (x - e).max(0.0) - 0.1 * (e - x).max(0.0))
                .sum::<f64>()
        };
        let (mut lo, mut hi) = (1.0, 4.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if foc(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let e = empirical_expectile(&[4.0, 1.0, 3.0, 2.0], 0.9).unwrap();
        assert!((e - lo).abs() < 1e-12 * 3.0, "{e} vs {lo}");
        assert!(empirical_expectile(&[], 0.5).is_err());
    }

    #[test]
    fn empirical_expectile_single_point() {
        assert_eq!(empirical_expectile(&[3.5], 0.9).unwrap(), 3.5);
        assert_eq!(empirical_expectile(&[2.0, 2.0, 2.0], 0.99).unwrap(), 2.0);
    }

    #[test]
    fn empirical_deviatile_examples() {
        assert!((empirical_deviatile(&[-1.0, 1.0], 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(empirical_deviatile(&[1.0], 0.5).is_err());
        assert!(empirical_deviatile(&[], 0.5).is_err());
    }
}
