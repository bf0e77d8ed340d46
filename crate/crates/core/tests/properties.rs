use deviatile::data_io::{business_days, write_series, Cell, Report, ReportFormat, ReturnSeries, ingest_reader, CsvSchema, Transform};
use deviatile::distributions::{sample_iid, Distribution, ParetoModel, StudentTModel};
use deviatile::estimators::{companion_estimators, extreme_deviatile, hill, hill_curve};
use deviatile::risk_core::{empirical_expectile, Measure};
use proptest::prelude::*;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn scale_equivariance(seed in 0u64..10_000, lambda in 0.01f64..100.0, alpha in 2.5f64..8.0) {
        let s = sample_iid(&StudentTModel::new(alpha).unwrap(), 2000, seed).unwrap();
        let t = s.scaled(lambda);
        let a = companion_estimators(&s, 0.97, Some(0.999), 60).unwrap();
        let b = companion_estimators(&t, 0.97, Some(0.999), 60).unwrap();
        // log differences of rounded products agree to a few ulps only
        prop_assert!((a.gamma_hat - b.gamma_hat).abs() <= 1e-12 * a.gamma_hat);
        for m in [Measure::VaR, Measure::Es, Measure::Expectile, Measure::Deviatile] {
            for (ra, rb) in [(&a.intermediate, &b.intermediate), (a.extreme.as_ref().unwrap(), b.extreme.as_ref().unwrap())] {
                let x = ra.get(m).unwrap().as_ref().unwrap().point;
                let y = rb.get(m).unwrap().as_ref().unwrap().point;
                prop_assert!((y - lambda * x).abs() <= 1e-12 * y.abs(), "{:?}: {} vs {}", m, y, lambda * x);
            }
        }
    }

    #[test]
    fn power_of_two_scaling_is_exact(seed in 0u64..10_000, e in -20i32..20) {
        let s = sample_iid(&StudentTModel::new(4.0).unwrap(), 1000, seed).unwrap();
        let lambda = 2f64.powi(e);
        let a = companion_estimators(&s, 0.95, Some(0.999), 50).unwrap();
        let b = companion_estimators(&s.scaled(lambda), 0.95, Some(0.999), 50).unwrap();
        prop_assert_eq!(a.gamma_hat.to_bits(), b.gamma_hat.to_bits());
        let x = a.extreme.unwrap().get(Measure::Deviatile).unwrap().as_ref().unwrap().point;
        let y = b.extreme.unwrap().get(Measure::Deviatile).unwrap().as_ref().unwrap().point;
        prop_assert_eq!((lambda * x).to_bits(), y.to_bits());
    }

    #[test]
    fn extrapolation_consistency(seed in 0u64..10_000, p1 in 0.99f64..0.9999, p2 in 0.99f64..0.9999) {
        let s = sample_iid(&ParetoModel::new(4.0, 1.0).unwrap(), 3000, seed).unwrap();
        let d1 = extreme_deviatile(&s, 0.98, p1, 60).unwrap();
        let d2 = extreme_deviatile(&s, 0.98, p2, 60).unwrap();
        let moved = d1.point * ((1.0 - p2) / (1.0 - p1)).powf(-d1.gamma_hat);
        prop_assert!((moved / d2.point - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hill_curve_matches_pointwise(seed in 0u64..10_000, k_min in 1usize..50, span in 0usize..100) {
        let s = sample_iid(&StudentTModel::new(3.0).unwrap(), 500, seed).unwrap();
        let curve = hill_curve(&s, k_min, k_min + span).unwrap();
        prop_assert_eq!(curve.len(), span + 1);
        for (k, g) in curve {
            prop_assert_eq!(g.to_bits(), hill(&s, k).unwrap().gamma_hat.to_bits());
        }
    }

    #[test]
    fn quantile_inverts_cdf(alpha in 1.5f64..10.0, tau in 0.5f64..0.999_999) {
        for m in [&ParetoModel::new(alpha, 2.0).unwrap() as &dyn Distribution, &StudentTModel::new(alpha).unwrap()] {
            let x = m.quantile(tau).unwrap();
            prop_assert!((m.cdf(x) - tau).abs() < 1e-10, "{} at {}", m.cdf(x), tau);
        }
    }

    #[test]
    fn empirical_expectile_solves_its_equation(xs in prop::collection::vec(-1e3f64..1e3, 2..200), tau in 0.01f64..0.99) {
        prop_assume!(xs.iter().any(|&x| x != xs[0]));
        let e = empirical_expectile(&xs, tau).unwrap();
        let up: f64 = xs.iter().map(|&x| (x - e).max(0.0)).sum();
        let down: f64 = xs.iter().map(|&x| (e - x).max(0.0)).sum();
        let scale: f64 = xs.iter().map(|x| x.abs()).sum::<f64>() + 1.0;
        prop_assert!((tau * up - (1.0 - tau) * down).abs() < 1e-9 * scale);
    }
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn series_round_trip(values in prop::collection::vec(prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), -1e-300f64..1e-300], 2..60)) {
        let dates = business_days("2001-02-05", values.len()).unwrap();
        let s = ReturnSeries::new(dates, values.clone(), "prop").unwrap();
        let mut buf = Vec::new();
        write_series(&s, &mut buf).unwrap();
        let back = ingest_reader(buf.as_slice(), &CsvSchema::returns("date", "loss"), Transform::Identity, "prop").unwrap();
        prop_assert_eq!(back.dates, s.dates);
        let a: Vec<u64> = back.values.iter().map(|x| x.to_bits()).collect();
        let b: Vec<u64> = values.iter().map(|x| x.to_bits()).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn report_round_trip(rows in prop::collection::vec((any::<f64>(), any::<i64>(), "[a-z ,\"]{0,8}"), 0..10)) {
        let mut r = Report::new("prop", &["x", "n", "label", "blank"]);
        r.meta("seed", 7);
        for (x, n, t) in &rows {
            r.push_row(vec![Cell::num(*x), Cell::Int(*n), Cell::text(t.as_str()), Cell::Empty]).unwrap();
        }
        for fmt in [ReportFormat::Dsv, ReportFormat::Structured] {
            let text = r.render(fmt).unwrap();
            let back = match fmt {
                ReportFormat::Dsv => Report::from_dsv(&text, b',').unwrap(),
                ReportFormat::Structured => Report::from_json(&text).unwrap(),
            };
            prop_assert_eq!(back.render(fmt).unwrap(), text);
        }
    }
}
