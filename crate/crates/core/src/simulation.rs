//! Monte-Carlo replication harness for the deviatile estimators.
//!
//! Replicate `r` draws its sample with seed `base_seed + r`; replicates may
//! run in parallel but are always reduced in index order, so a report is
//! bit-identical for any thread count.

use serde::{Deserialize, Serialize};

use crate::distributions::{
    sample_iid, simulate_garch, Distribution, GarchProcess, ParetoModel, SortedSample, StudentTModel,
};
use crate::data_io::{Cell, Report};
use crate::error::{check_probability, Error, Result};
use crate::estimators::{estimate_from_fit, exceedance_count, hill, intermediate_quantile};
use crate::par::{map_indexed, Execution};
use crate::risk_core::{empirical_deviatile_sorted, true_deviatile, Measure};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    Pareto { alpha: f64, theta: f64 },
    StudentT { alpha: f64 },
    Garch(GarchProcess),
}

impl ModelSpec {
    /// The i.i.d. law, or `None` for GARCH.
    pub fn iid(&self) -> Result<Option<Box<dyn Distribution>>> {
        Ok(match *self {
            ModelSpec::Pareto { alpha, theta } => Some(Box::new(ParetoModel::new(alpha, theta)?)),
            ModelSpec::StudentT { alpha } => Some(Box::new(StudentTModel::new(alpha)?)),
            ModelSpec::Garch(p) => {
                p.validate()?;
                None
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            ModelSpec::Pareto { alpha, theta } => format!("Pareto({alpha},{theta})"),
            ModelSpec::StudentT { alpha } => format!("t({alpha})"),
            ModelSpec::Garch(p) => format!("GARCH({},{},{};t{})", p.a0, p.a1, p.b0, p.nu),
        }
    }

    /// Tail-heaviness parameter shown in `(n, α, k)` labels.
    pub fn alpha(&self) -> f64 {
        match *self {
            ModelSpec::Pareto { alpha, .. } | ModelSpec::StudentT { alpha } => alpha,
            ModelSpec::Garch(p) => p.nu,
        }
    }

    /// One sorted sample of size `n`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SortedSample> {
        match self.iid()? {
            Some(m) => sample_iid(m.as_ref(), n, seed),
            None => match self {
                ModelSpec::Garch(p) => Ok(simulate_garch(p, n, seed)?.sorted),
                _ => unreachable!("iid models handled above"),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TrueValueMode {
    #[default]
    AnalyticQuadrature,
    MonteCarlo {
        paths: usize,
        path_length: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl TrueValueMode {
    /// Desk-scale Monte-Carlo setting: 100 paths of length 10⁵.
    pub fn desk_monte_carlo(seed: u64) -> Self {
        TrueValueMode::MonteCarlo {
            paths: 100,
            path_length: 100_000,
            seed,
        }
    }
}

pub const DESK_REPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub n: usize,
    pub k: usize,
    pub tau: f64,
    #[serde(default)]
    pub p: Option<f64>,
    pub reps: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub true_value_mode: TrueValueMode,
    #[serde(default)]
    pub keep_ratios: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.k == 0 || self.k >= self.n {
            return bad(format!("need 1 <= k < n, got k = {}, n = {}", self.k, self.n));
        }
        check_probability("tau", self.tau)?;
        if exceedance_count(self.n, self.tau) == 0 {
            return bad(format!("tau = {} is beyond the data for n = {}", self.tau, self.n));
        }
        if let Some(p) = self.p {
            check_probability("p", p)?;
            if p <= self.tau {
                return bad(format!("extreme level p = {p} must exceed tau = {}", self.tau));
            }
        }
        if matches!(self.model, ModelSpec::Garch(_))
            && self.true_value_mode == TrueValueMode::AnalyticQuadrature
        {
            return bad("GARCH true values need true_value_mode = monte_carlo".into());
        }
        if let TrueValueMode::MonteCarlo { paths, path_length, .. } = self.true_value_mode {
            if paths == 0 || path_length < 2 {
                return bad("monte_carlo true values need paths >= 1 and path_length >= 2".into());
            }
        }
        self.model.iid()?;
        Ok(())
    }

    /// Level the true value is taken at: `p` when extrapolating, else `tau`.
    pub fn target_level(&self) -> f64 {
        self.p.unwrap_or(self.tau)
    }

    /// The `(n, α, k)` row label.
    pub fn setting_label(&self) -> String {
        format!("({},{},{})", self.n, self.model.alpha(), self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueValue {
    pub value: f64,
    /// Monte-Carlo standard error; absent for quadrature.
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub true_value: f64,
    pub true_value_std_error: Option<f64>,
    pub ratio_mean: f64,
    /// Sample standard deviation; absent with fewer than two successful replicates.
    pub ratio_sd: Option<f64>,
    pub mse: f64,
    pub failure_count: usize,
    pub successes: usize,
    /// Mean Hill estimate over every replicate where Hill itself succeeded.
    pub gamma_hat_mean: Option<f64>,
    pub estimate_mean: f64,
    /// Ratios of successful replicates in replicate order, when requested.
    pub per_rep_ratios: Option<Vec<f64>>,
}

/// Mean and standard error of `dev~_τ` over independent simulated paths.
pub fn monte_carlo_true_value(
    model: &ModelSpec,
    tau: f64,
    paths: usize,
    path_length: usize,
    seed: u64,
    exec: Execution,
) -> Result<TrueValue> {
    check_probability("tau", tau)?;
    if paths == 0 {
        return Err(Error::InvalidParameter("need at least one path".into()));
    }
    if tau > 1.0 - 10.0 / path_length as f64 {
        return Err(Error::InvalidParameter(format!(
            "tau = {tau} is beyond the empirical resolution of paths of length {path_length} (max {})",
            1.0 - 10.0 / path_length as f64
        )));
    }
    let values = map_indexed(exec, paths, |i| {
        let s = model.sample(path_length, seed.wrapping_add(i as u64))?;
        empirical_deviatile_sorted(s.values(), tau)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_error = (values.len() > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1.0) / n).sqrt()
    });
    Ok(TrueValue {
        value: mean,
        std_error,
    })
}

/// `dev_τ` of a GARCH process by averaging empirical deviatiles over paths.
pub fn garch_true_value(
    p: &GarchProcess,
    tau: f64,
    paths: usize,
    path_length: usize,
    seed: u64,
    exec: Execution,
) -> Result<TrueValue> {
    monte_carlo_true_value(&ModelSpec::Garch(*p), tau, paths, path_length, seed, exec)
}

pub fn resolve_true_value(cfg: &ExperimentConfig, exec: Execution) -> Result<TrueValue> {
    let level = cfg.target_level();
    match cfg.true_value_mode {
        TrueValueMode::AnalyticQuadrature => {
            let m = cfg.model.iid()?.ok_or_else(|| {
                Error::Config("GARCH true values need true_value_mode = monte_carlo".into())
            })?;
            Ok(TrueValue {
                value: true_deviatile(m.as_ref(), level)?,
                std_error: None,
            })
        }
        TrueValueMode::MonteCarlo {
            paths,
            path_length,
            seed,
        } => monte_carlo_true_value(&cfg.model, level, paths, path_length, seed, exec),
    }
}

struct Replicate {
    gamma_hat: Option<f64>,
    estimate: Option<f64>,
}

fn replicate(cfg: &ExperimentConfig, r: usize) -> Replicate {
    let Ok(sample) = cfg.model.sample(cfg.n, cfg.base_seed.wrapping_add(r as u64)) else {
        return Replicate {
            gamma_hat: None,
            estimate: None,
        };
    };
    let gamma_hat = hill(&sample, cfg.k).ok().map(|f| f.gamma_hat);
    let estimate = gamma_hat.and_then(|g| {
        let q = intermediate_quantile(&sample, cfg.tau).ok()?;
        estimate_from_fit(Measure::Deviatile, g, q, cfg.tau, cfg.p, cfg.k)
            .ok()
            .map(|e| e.point)
    });
    Replicate { gamma_hat, estimate }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(cfg, Execution::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    cfg.validate()?;
    let truth = resolve_true_value(cfg, exec)?;
    run_with_truth(cfg, truth, exec)
}

fn run_with_truth(cfg: &ExperimentConfig, truth: TrueValue, exec: Execution) -> Result<ExperimentReport> {
    let reps = map_indexed(exec, cfg.reps, |r| replicate(cfg, r));
    let estimates: Vec<f64> = reps.iter().filter_map(|r| r.estimate).collect();
    if estimates.is_empty() {
        return Err(Error::AllReplicatesFailed { reps: cfg.reps });
    }
    let ratios: Vec<f64> = estimates.iter().map(|e| e / truth.value).collect();
    let n = ratios.len() as f64;
    let ratio_mean = ratios.iter().sum::<f64>() / n;
    let ratio_sd = (ratios.len() > 1).then(|| {
        let ss: f64 = ratios.iter().map(|r| (r - ratio_mean) * (r - ratio_mean)).sum();
        (ss / (n - 1.0)).sqrt()
    });
    let mse = ratios.iter().map(|r| (r - 1.0) * (r - 1.0)).sum::<f64>() / n;
    let gammas: Vec<f64> = reps.iter().filter_map(|r| r.gamma_hat).collect();
    let gamma_hat_mean = (!gammas.is_empty()).then(|| gammas.iter().sum::<f64>() / gammas.len() as f64);
    Ok(ExperimentReport {
        true_value: truth.value,
        true_value_std_error: truth.std_error,
        ratio_mean,
        ratio_sd,
        mse,
        failure_count: cfg.reps - ratios.len(),
        successes: ratios.len(),
        gamma_hat_mean,
        estimate_mean: estimates.iter().sum::<f64>() / n,
        per_rep_ratios: cfg.keep_ratios.then_some(ratios),
    })
}

/// A row of a sweep file; omitted fields fall back to the sweep defaults.
///
/// Either `k` or `tau` may be left out: they are tied by `tau = 1 - k/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: ModelSpec,
    pub n: usize,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub reps: Option<usize>,
    #[serde(default)]
    pub base_seed: Option<u64>,
    #[serde(default)]
    pub true_value_mode: Option<TrueValueMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(default)]
    pub title: String,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub true_value_mode: Option<TrueValueMode>,
    #[serde(default)]
    pub rows: Vec<SweepRow>,
}

fn default_reps() -> usize {
    DESK_REPS
}

impl SweepConfig {
    /// Resolves every row into a full experiment configuration.
    pub fn experiments(&self) -> Result<Vec<ExperimentConfig>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let ctx = |e: Error| Error::Config(format!("row {}: {e}", i + 1));
                let (k, tau) = match (row.k, row.tau) {
                    (Some(k), Some(tau)) => (k, tau),
                    (Some(k), None) => (k, 1.0 - k as f64 / row.n as f64),
                    (None, Some(tau)) => (exceedance_count(row.n, tau), tau),
                    (None, None) => return Err(ctx(Error::Config("give k, tau or both".into()))),
                };
                let default_mode = match row.model {
                    ModelSpec::Garch(_) => TrueValueMode::desk_monte_carlo(self.base_seed),
                    _ => TrueValueMode::AnalyticQuadrature,
                };
                let cfg = ExperimentConfig {
                    model: row.model,
                    n: row.n,
                    k,
                    tau,
                    p: row.p,
                    reps: row.reps.unwrap_or(self.reps),
                    base_seed: row.base_seed.unwrap_or(self.base_seed),
                    true_value_mode: row.true_value_mode.or(self.true_value_mode).unwrap_or(default_mode),
                    keep_ratios: false,
                };
                cfg.validate().map_err(ctx)?;
                Ok(cfg)
            })
            .collect()
    }
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<(ExperimentConfig, Result<ExperimentReport>)>,
}

/// Runs every row, continuing past failures. True values are computed once
/// per distinct (model, level, mode).
pub fn table_sweep(rows: &[ExperimentConfig], exec: Execution) -> SweepOutcome {
    let mut cache: Vec<((ModelSpec, u64, TrueValueMode), TrueValue)> = Vec::new();
    let mut out = Vec::with_capacity(rows.len());
    for cfg in rows {
        let result = cfg.validate().and_then(|()| {
            let key = (cfg.model, cfg.target_level().to_bits(), cfg.true_value_mode);
            let truth = match cache.iter().find(|(k, _)| *k == key) {
                Some((_, t)) => *t,
                None => {
                    let t = resolve_true_value(cfg, exec)?;
                    cache.push((key, t));
                    t
                }
            };
            run_with_truth(cfg, truth, exec)
        });
        out.push((cfg.clone(), result));
    }
    SweepOutcome { rows: out }
}

pub const SWEEP_COLUMNS: [&str; 15] = [
    "setting",
    "model",
    "n",
    "k",
    "tau",
    "p",
    "true_value",
    "true_value_se",
    "ratio_mean",
    "ratio_sd",
    "mean_sd",
    "mse",
    "failures",
    "successes",
    "gamma_hat_mean",
];

impl SweepOutcome {
    /// One row per experiment: `(n,α,k)`, level, true value, `mean(sd)`, MSE, plus diagnostics.
    pub fn to_report(&self, title: &str) -> Report {
        let mut report = Report::new(title, &SWEEP_COLUMNS);
        for (i, (cfg, res)) in self.rows.iter().enumerate() {
            let mut row = vec![
                Cell::text(cfg.setting_label()),
                Cell::text(cfg.model.label()),
                Cell::Int(cfg.n as i64),
                Cell::Int(cfg.k as i64),
                Cell::num(cfg.tau),
                Cell::opt(cfg.p),
            ];
            match res {
                Ok(r) => {
                    let mean_sd = match r.ratio_sd {
                        Some(sd) => format!("{:.4}({:.4})", r.ratio_mean, sd),
                        None => format!("{:.4}", r.ratio_mean),
                    };
                    row.extend([
                        Cell::num(r.true_value),
                        Cell::opt(r.true_value_std_error),
                        Cell::num(r.ratio_mean),
                        Cell::opt(r.ratio_sd),
                        Cell::text(mean_sd),
                        Cell::num(r.mse),
                        Cell::Int(r.failure_count as i64),
                        Cell::Int(r.successes as i64),
                        Cell::opt(r.gamma_hat_mean),
                    ]);
                    if r.failure_count > 0 {
                        report.warnings.push(format!(
                            "row {}: {} of {} replicates failed and were excluded",
                            i + 1,
                            r.failure_count,
                            cfg.reps
                        ));
                    }
                }
                Err(e) => {
                    row.extend(std::iter::repeat_n(Cell::Empty, SWEEP_COLUMNS.len() - row.len()));
                    report.warnings.push(format!("row {}: {e}", i + 1));
                }
            }
            report.push_row(row).expect("row width matches SWEEP_COLUMNS");
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(reps: usize) -> ExperimentConfig {
        ExperimentConfig {
            model: ModelSpec::StudentT { alpha: 5.0 },
            n: 2000,
            k: 40,
            tau: 0.98,
            p: None,
            reps,
            base_seed: 17,
            true_value_mode: TrueValueMode::AnalyticQuadrature,
            keep_ratios: true,
        }
    }

    #[test]
    fn mse_recomputes_from_ratios() {
        let r = run_experiment_with(&cfg(30), Execution::Sequential).unwrap();
        let ratios = r.per_rep_ratios.as_ref().unwrap();
        let mse = ratios.iter().map(|x| (x - 1.0).powi(2)).sum::<f64>() / ratios.len() as f64;
        assert!((mse - r.mse).abs() < 1e-12);
        assert_eq!(ratios.len() + r.failure_count, 30);
    }

    #[test]
    fn single_replicate() {
        let r = run_experiment_with(&cfg(1), Execution::Sequential).unwrap();
        assert!(r.ratio_sd.is_none());
        assert_eq!(r.mse, (r.ratio_mean - 1.0).powi(2));
    }

    #[test]
    fn config_validation() {
        assert!(cfg(0).validate().is_err());
        let mut c = cfg(5);
        c.p = Some(0.97);
        assert!(c.validate().is_err());
        c.p = None;
        c.model = ModelSpec::Garch(GarchProcess::sp500_fit());
        assert!(c.validate().is_err());
        c.true_value_mode = TrueValueMode::desk_monte_carlo(1);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn sweep_matches_single_runs() {
        assert!(table_sweep(&[], Execution::Sequential).rows.is_empty());
        let c = cfg(10);
        let sweep = table_sweep(std::slice::from_ref(&c), Execution::Sequential);
        let single = run_experiment_with(&c, Execution::Sequential).unwrap();
        assert_eq!(sweep.rows[0].1.as_ref().unwrap(), &single);
        let mut bad = c.clone();
        bad.k = 5000;
        let sweep = table_sweep(&[bad, c], Execution::Sequential);
        assert!(sweep.rows[0].1.is_err() && sweep.rows[1].1.is_ok());
        let report = sweep.to_report("t");
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn sweep_rows_tie_k_and_tau() {
        let text = r#"{"reps": 5, "base_seed": 3, "rows": [
            {"model": {"kind": "pareto", "alpha": 5.0, "theta": 1.0}, "n": 10000, "k": 100},
            {"model": {"kind": "student-t", "alpha": 3.0}, "n": 1000, "tau": 0.95},
            {"model": {"kind": "garch", "a0": 0.0181, "a1": 0.1476, "b0": 0.8497, "nu": 6.54}, "n": 5000, "k": 250}
        ]}"#;
        let sweep: SweepConfig = serde_json::from_str(text).unwrap();
        let rows = sweep.experiments().unwrap();
        assert!((rows[0].tau - 0.99).abs() < 1e-15);
        assert_eq!(rows[1].k, 50);
        assert!(matches!(rows[2].true_value_mode, TrueValueMode::MonteCarlo { .. }));
        assert_eq!(rows[2].setting_label(), "(5000,6.54,250)");
    }

    #[test]
    fn garch_resolution_bound() {
        let p = GarchProcess::sp500_fit();
        assert!(garch_true_value(&p, 0.9996, 2, 10_000, 1, Execution::Sequential).is_err());
        let t = garch_true_value(&p, 0.95, 3, 5_000, 1, Execution::Sequential).unwrap();
        assert!(t.value > 0.0 && t.std_error.unwrap() > 0.0);
    }
}
