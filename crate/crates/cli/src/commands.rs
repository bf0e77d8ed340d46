use std::fs;

use anyhow::{anyhow, bail, Context, Result};
use deviatile::asymptotics::{first_order_deviatile, second_order_deviatile};
use deviatile::data_io::{
    ingest_csv, synthetic_fixture, synthetic_series, Cell, CsvSchema, Report, ReturnSeries, Transform,
};
use deviatile::distributions::{Distribution, GarchProcess, ParetoModel, StudentTModel};
use deviatile::estimators::{
    asymptotic_ci, block_bootstrap_ci, companion_estimators, exceedance_count, hill, hill_curve,
    BootstrapConfig, CiMethod, EstimatorSpec, RiskEstimate,
};
use deviatile::par::Execution;
use deviatile::risk_core::{true_deviatile, true_value, Measure};
use deviatile::simulation::{garch_true_value, table_sweep, SweepConfig};

use crate::args::*;

fn garch_process(g: &GarchArgs) -> Result<GarchProcess> {
    let d = GarchProcess::sp500_fit();
    let p = GarchProcess::new(
        g.a0.unwrap_or(d.a0),
        g.a1.unwrap_or(d.a1),
        g.b0.unwrap_or(d.b0),
        g.nu.unwrap_or(d.nu),
    )?;
    Ok(p.with_burn_in(d.burn_in))
}

fn iid_model(m: &ModelArgs) -> Result<Box<dyn Distribution>> {
    let alpha = || m.alpha.ok_or_else(|| anyhow!("--alpha is required for this model"));
    Ok(match m.model {
        ModelKind::Pareto => Box::new(ParetoModel::new(alpha()?, m.theta)?),
        ModelKind::StudentT => Box::new(StudentTModel::new(alpha()?)?),
        ModelKind::Garch => bail!("this command needs an i.i.d. model (pareto or student-t)"),
    })
}

fn model_label(m: &ModelArgs) -> String {
    match m.model {
        ModelKind::Pareto => format!("Pareto({},{})", m.alpha.unwrap_or(f64::NAN), m.theta),
        ModelKind::StudentT => format!("t({})", m.alpha.unwrap_or(f64::NAN)),
        ModelKind::Garch => match garch_process(&m.garch) {
            Ok(p) => format!("GARCH({},{},{};t{})", p.a0, p.a1, p.b0, p.nu),
            Err(_) => "GARCH".into(),
        },
    }
}

fn check_level(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        bail!("{name} must lie strictly between 0 and 1, got {x}")
    }
}

pub fn expand(a: &ExpandArgs) -> Result<Report> {
    let model = iid_model(&a.model)?;
    let grid: Vec<f64> = if !a.tau.is_empty() {
        a.tau.clone()
    } else if a.points == 1 {
        vec![a.tau_min]
    } else if a.points == 0 {
        bail!("--points must be at least 1")
    } else {
        if a.tau_min >= a.tau_max {
            bail!("--tau-min must be below --tau-max");
        }
        let step = (a.tau_max - a.tau_min) / (a.points - 1) as f64;
        (0..a.points)
            .map(|i| if i + 1 == a.points { a.tau_max } else { a.tau_min + step * i as f64 })
            .collect()
    };
    for &t in &grid {
        check_level("tau", t)?;
    }
    // fails fast when the deviatile itself is undefined for the model
    true_deviatile(model.as_ref(), grid[0])?;

    let mut r = Report::new("deviatile expansions", &["tau", "true", "ao1", "ao2", "relerr1", "relerr2"]);
    r.meta("model", model_label(&a.model));
    let want1 = a.order != Order::Second;
    let want2 = a.order != Order::First;
    for &tau in &grid {
        let truth = match true_deviatile(model.as_ref(), tau) {
            Ok(v) => v,
            Err(e) => {
                r.warnings.push(format!("tau {tau}: {e}"));
                r.push_row(vec![Cell::num(tau), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty])?;
                continue;
            }
        };
        let mut approx = |wanted: bool, f: &dyn Fn() -> deviatile::Result<f64>, label: &str| {
            if !wanted {
                return (Cell::Empty, Cell::Empty);
            }
            match f() {
                Ok(v) => (Cell::num(v), Cell::num(v / truth - 1.0)),
                Err(e) => {
                    r.warnings.push(format!("tau {tau}: {label}: {e}"));
                    (Cell::Empty, Cell::Empty)
                }
            }
        };
        let (a1, e1) = approx(want1, &|| first_order_deviatile(model.as_ref(), tau), "first order");
        let (a2, e2) = approx(want2, &|| second_order_deviatile(model.as_ref(), tau), "second order");
        r.push_row(vec![Cell::num(tau), Cell::num(truth), a1, a2, e1, e2])?;
    }
    Ok(r)
}

pub fn true_values(a: &TrueValueArgs, exec: Execution) -> Result<Report> {
    for &l in &a.levels {
        check_level("level", l)?;
    }
    let mut r = Report::new(
        "true risk measures",
        &["model", "measure", "level", "value", "std_error", "method"],
    );
    let label = model_label(&a.model);
    r.meta("model", &label);
    if a.model.model == ModelKind::Garch {
        let p = garch_process(&a.model.garch)?;
        r.meta("paths", a.paths).meta("path_length", a.path_length);
        for &m in &a.measures {
            for &level in &a.levels {
                if m != Measure::Deviatile {
                    r.warnings.push(format!("{}: only the deviatile is simulated for GARCH", m.name()));
                    r.push_row(vec![
                        Cell::text(&label),
                        Cell::text(m.name()),
                        Cell::num(level),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::text("monte_carlo"),
                    ])?;
                    continue;
                }
                let t = garch_true_value(&p, level, a.paths, a.path_length, a.seed, exec)?;
                r.push_row(vec![
                    Cell::text(&label),
                    Cell::text(m.name()),
                    Cell::num(level),
                    Cell::num(t.value),
                    Cell::opt(t.std_error),
                    Cell::text("monte_carlo"),
                ])?;
            }
        }
    } else {
        let model = iid_model(&a.model)?;
        for &m in &a.measures {
            for &level in &a.levels {
                let value = match true_value(model.as_ref(), m, level) {
                    Ok(v) => Cell::num(v.value),
                    Err(e) => {
                        r.warnings.push(format!("{} at {level}: {e}", m.name()));
                        Cell::Empty
                    }
                };
                r.push_row(vec![
                    Cell::text(&label),
                    Cell::text(m.name()),
                    Cell::num(level),
                    value,
                    Cell::Empty,
                    Cell::text("quadrature"),
                ])?;
            }
        }
    }
    Ok(r)
}

pub fn load_sweep(a: &SimulateArgs) -> Result<SweepConfig> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg: SweepConfig = toml::from_str(&text).with_context(|| format!("parsing {}", a.config.display()))?;
    if let Some(reps) = a.reps {
        cfg.reps = reps;
        for row in &mut cfg.rows {
            row.reps = Some(reps);
        }
    }
    if cfg.rows.is_empty() {
        bail!("{} has no rows", a.config.display());
    }
    Ok(cfg)
}

pub fn simulate(a: &SimulateArgs, exec: Execution) -> Result<(Report, u64)> {
    let cfg = load_sweep(a)?;
    let experiments = cfg.experiments()?;
    let title = a
        .title
        .clone()
        .or_else(|| (!cfg.title.is_empty()).then(|| cfg.title.clone()))
        .unwrap_or_else(|| "simulation sweep".into());
    let outcome = table_sweep(&experiments, exec);
    if outcome.rows.iter().all(|(_, r)| r.is_err()) {
        let (_, first) = &outcome.rows[0];
        bail!("every row failed; first error: {}", first.as_ref().err().map(|e| e.to_string()).unwrap_or_default());
    }
    let mut r = outcome.to_report(&title);
    r.meta("config", a.config.display());
    r.meta("reps", cfg.reps);
    Ok((r, cfg.base_seed))
}

pub fn load_series(d: &DataArgs) -> Result<ReturnSeries> {
    let series = if d.fixture {
        synthetic_fixture()?
    } else {
        let path = d.data.as_ref().ok_or_else(|| anyhow!("give --data or --fixture"))?;
        let mut schema = match &d.prices {
            Some(col) => CsvSchema::prices(&d.date_column, col),
            None => CsvSchema::returns(&d.date_column, d.returns.as_deref().unwrap_or("loss")),
        };
        if !d.delimiter.is_ascii() {
            bail!("delimiter must be a single ASCII character");
        }
        schema.delimiter = d.delimiter as u8;
        let transform = match (d.scale, &d.prices) {
            (Some(c), _) => Transform::Scale(c),
            (None, Some(_)) => Transform::NegLogReturn,
            (None, None) => Transform::Identity,
        };
        ingest_csv(path, &schema, transform).with_context(|| format!("reading {}", path.display()))?
    };
    if d.from.is_none() && d.until.is_none() {
        return Ok(series);
    }
    let keep = |date: &str| {
        d.from.as_deref().is_none_or(|f| date >= f) && d.until.as_deref().is_none_or(|u| date < u)
    };
    let (dates, values): (Vec<String>, Vec<f64>) = series
        .dates
        .iter()
        .zip(&series.values)
        .filter(|(date, _)| keep(date))
        .map(|(date, v)| (date.clone(), *v))
        .unzip();
    if dates.is_empty() {
        bail!("no observations in the requested period");
    }
    Ok(ReturnSeries::new(dates, values, series.source)?)
}

fn describe_series(r: &mut Report, s: &ReturnSeries) {
    r.meta("data", &s.source).meta("n", s.len());
    if let (Some(first), Some(last)) = (s.dates.first(), s.dates.last()) {
        r.meta("period", format!("{first}..{last}"));
    }
}

fn measure_column(m: Measure) -> Result<&'static str> {
    Ok(match m {
        Measure::VaR => "q_hat",
        Measure::Expectile => "e_hat",
        Measure::Es => "es_hat",
        Measure::Deviatile => "dev_hat",
        Measure::Variantile => bail!("the variantile has no tail estimator; use var, expectile, es or deviatile"),
    })
}

fn ci_name(m: CiMethod) -> &'static str {
    match m {
        CiMethod::Asymptotic => "asymptotic",
        CiMethod::BlockBootstrap => "block_bootstrap",
        CiMethod::None => "none",
    }
}

pub fn estimate(a: &EstimateArgs, exec: Execution) -> Result<(Report, Option<u64>)> {
    let series = load_series(&a.data)?;
    let s = series.sorted()?;
    let n = s.len();
    check_level("base tau", a.base_tau)?;
    for &l in &a.levels {
        check_level("level", l)?;
    }
    let mut measures: Vec<Measure> = Vec::new();
    for &m in &a.measures {
        measure_column(m)?;
        if !measures.contains(&m) {
            measures.push(m);
        }
    }
    let ks = a.k.values();

    let mut columns = vec!["k", "tau", "path", "base_tau", "gamma_hat"];
    for &m in &measures {
        columns.push(measure_column(m)?);
    }
    columns.push("ordering");
    if a.ci != CiKind::None {
        columns.extend(["dev_ci_low", "dev_ci_high", "ci_method"]);
    }
    let mut r = Report::new("tail risk estimates", &columns);
    describe_series(&mut r, &series);
    r.meta("base_tau", a.base_tau).meta("min_exceedances", a.min_exceedances);
    let boot = BootstrapConfig {
        mean_block: a.boot.mean_block,
        reps: a.boot.reps,
        coverage: a.boot.coverage,
        seed: a.boot.seed,
    };
    match a.ci {
        CiKind::None => {}
        CiKind::Asymptotic => {
            r.meta("ci", format!("asymptotic, coverage {}", a.boot.coverage));
        }
        CiKind::Bootstrap => {
            r.meta(
                "ci",
                format!(
                    "stationary bootstrap, mean block {}, {} replicates, coverage {}",
                    boot.mean_block, boot.reps, boot.coverage
                ),
            );
        }
    }

    // (level, measure) -> values over k, for the stability summary
    let mut track: Vec<((f64, Measure), Vec<f64>)> = Vec::new();
    let mut gammas = Vec::new();
    for &k in &ks {
        let fit = hill(&s, k)?;
        gammas.push(fit.gamma_hat);
        for &level in &a.levels {
            let intermediate = level <= a.base_tau || exceedance_count(n, level) >= a.min_exceedances;
            let (tau, p) = if intermediate { (level, None) } else { (a.base_tau, Some(level)) };
            let set = companion_estimators(&s, tau, p, k)?;
            let row_src = match &set.extreme {
                Some(row) => row,
                None => &set.intermediate,
            };
            let mut row = vec![
                Cell::Int(k as i64),
                Cell::num(level),
                Cell::text(if intermediate { "intermediate" } else { "extreme" }),
                if intermediate { Cell::Empty } else { Cell::num(a.base_tau) },
                Cell::num(set.gamma_hat),
            ];
            let mut ok: Vec<(Measure, f64)> = Vec::new();
            for &m in &measures {
                match row_src.get(m) {
                    Some(Ok(e)) => {
                        row.push(Cell::num(e.point));
                        ok.push((m, e.point));
                        match track.iter_mut().find(|(key, _)| *key == (level, m)) {
                            Some((_, v)) => v.push(e.point),
                            None => track.push(((level, m), vec![e.point])),
                        }
                    }
                    Some(Err(e)) => {
                        r.warnings.push(format!("k {k}, level {level}: {}: {e}", m.name()));
                        row.push(Cell::Empty);
                    }
                    None => row.push(Cell::Empty),
                }
            }
            ok.sort_by(|x, y| x.1.total_cmp(&y.1));
            row.push(Cell::text(ok.iter().map(|(m, _)| m.name()).collect::<Vec<_>>().join(" < ")));

            if a.ci != CiKind::None {
                let ci: Result<RiskEstimate> = match a.ci {
                    CiKind::Asymptotic => match row_src.get(Measure::Deviatile) {
                        Some(Ok(e)) => asymptotic_ci(e, &fit, a.boot.coverage).map_err(Into::into),
                        Some(Err(e)) => Err(anyhow!("{e}")),
                        None => Err(anyhow!("deviatile not estimated")),
                    },
                    _ => {
                        let spec = EstimatorSpec {
                            measure: Measure::Deviatile,
                            tau,
                            p,
                            k,
                        };
                        block_bootstrap_ci(&series.values, &spec, &boot, exec)
                            .map(|b| b.estimate)
                            .map_err(Into::into)
                    }
                };
                match ci {
                    Ok(e) => row.extend([Cell::opt(e.ci_low), Cell::opt(e.ci_high), Cell::text(ci_name(e.ci_method))]),
                    Err(e) => {
                        r.warnings.push(format!("k {k}, level {level}: interval: {e}"));
                        row.extend([Cell::Empty, Cell::Empty, Cell::Empty]);
                    }
                }
            }
            r.push_row(row)?;
        }
    }

    if ks.len() > 1 {
        let spread = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            format!("min {lo:?}, max {hi:?}, max/min - 1 = {:?}", hi / lo - 1.0)
        };
        r.meta("stability gamma_hat", spread(&gammas));
        for ((level, m), v) in &track {
            r.meta(&format!("stability {} {level}", measure_column(*m)?), spread(v));
        }
    }
    let seed = (a.ci == CiKind::Bootstrap).then_some(a.boot.seed);
    Ok((r, seed))
}

pub fn hill_plot(a: &HillPlotArgs) -> Result<Report> {
    let series = load_series(&a.data)?;
    let s = series.sorted()?;
    let curve = hill_curve(&s, a.k_range.min, a.k_range.max)?;
    let mut r = Report::new("Hill plot", &["k", "gamma_hat"]);
    describe_series(&mut r, &series);
    for (k, g) in curve {
        r.push_row(vec![Cell::Int(k as i64), Cell::num(g)])?;
    }
    Ok(r)
}

pub fn bootstrap(a: &BootstrapArgs, exec: Execution) -> Result<Report> {
    let series = load_series(&a.data)?;
    measure_column(a.measure)?;
    let cfg = BootstrapConfig {
        mean_block: a.boot.mean_block,
        reps: a.boot.reps,
        coverage: a.boot.coverage,
        seed: a.boot.seed,
    };
    let mut r = Report::new(
        "block bootstrap intervals",
        &[
            "k", "measure", "tau", "p", "gamma_hat", "point", "ci_low", "ci_high", "boot_sd", "used", "failed",
            "ci_method",
        ],
    );
    describe_series(&mut r, &series);
    r.meta("mean_block", cfg.mean_block)
        .meta("reps", cfg.reps)
        .meta("coverage", cfg.coverage);
    let mut any_ok = false;
    let mut first_err = None;
    for k in a.k.values() {
        let spec = EstimatorSpec {
            measure: a.measure,
            tau: a.tau,
            p: a.p,
            k,
        };
        let head = vec![Cell::Int(k as i64), Cell::text(a.measure.name()), Cell::num(a.tau), Cell::opt(a.p)];
        match block_bootstrap_ci(&series.values, &spec, &cfg, exec) {
            Ok(b) => {
                any_ok = true;
                if b.failed > 0 {
                    r.warnings.push(format!("k {k}: {} of {} replicates failed", b.failed, cfg.reps));
                }
                let e = b.estimate;
                r.push_row(
                    head.into_iter()
                        .chain([
                            Cell::num(e.gamma_hat),
                            Cell::num(e.point),
                            Cell::opt(e.ci_low),
                            Cell::opt(e.ci_high),
                            Cell::opt(b.sd),
                            Cell::Int(b.used as i64),
                            Cell::Int(b.failed as i64),
                            Cell::text(ci_name(e.ci_method)),
                        ])
                        .collect(),
                )?;
            }
            Err(e) => {
                r.warnings.push(format!("k {k}: {e}"));
                first_err.get_or_insert_with(|| e.to_string());
                r.push_row(head.into_iter().chain(std::iter::repeat_n(Cell::Empty, 8)).collect())?;
            }
        }
    }
    if !any_ok {
        bail!("no k produced an interval: {}", first_err.unwrap_or_default());
    }
    Ok(r)
}

pub fn fixture(a: &FixtureArgs) -> Result<ReturnSeries> {
    let p = garch_process(&a.garch)?;
    Ok(synthetic_series(&p, a.n, a.seed, &a.start)?)
}
