use proptest::prelude::*;
use ytx::diagnostics::{detect_distribution, recommend, Thresholds};
use ytx::eval::{fit_lasso_traced, fit_ridge, make_fold_plan, rse, smape};
use ytx::stats::gap_score;
use ytx::transform::{fit, TransformKind};
use ytx::{Matrix, Side};

fn targets() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3f64..1e3, 12..120)
        .prop_filter("non-constant", |v| v.iter().any(|x| *x != v[0]))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distributional_kinds_round_trip(y in targets()) {
        for kind in [
            TransformKind::LogOffset,
            TransformKind::BoxCox,
            TransformKind::YeoJohnson,
            TransformKind::QuantileNormal,
            TransformKind::QuantileUniform,
            TransformKind::Identity,
        ] {
            let t = fit(kind, &y, Side::None, None).unwrap();
            let back = t.inverse(&t.forward(&y, Side::None).unwrap(), Side::None).unwrap();
            for (a, b) in y.iter().zip(&back) {
                prop_assert!(close(*a, *b), "{kind}: {a} -> {b}");
            }
        }
    }

    #[test]
    fn distributional_kinds_are_monotone(y in targets()) {
        let mut sorted = y.clone();
        sorted.sort_by(f64::total_cmp);
        for kind in [TransformKind::LogOffset, TransformKind::BoxCox, TransformKind::YeoJohnson, TransformKind::QuantileNormal] {
            let t = fit(kind, &y, Side::None, None).unwrap();
            let z = t.forward(&sorted, Side::None).unwrap();
            prop_assert!(z.windows(2).all(|w| w[0] <= w[1]), "{kind} not monotone");
        }
    }

    #[test]
    fn clamped_inverse_stays_in_training_range(y in targets(), z in prop::collection::vec(-1e6f64..1e6, 1..20)) {
        let t = fit(TransformKind::QuantileNormal, &y, Side::None, None).unwrap();
        let (lo, hi) = t.training_target_range;
        let out = t.inverse_clamped(&z, Side::None).unwrap();
        prop_assert!(out.values.iter().all(|v| *v >= lo && *v <= hi));
    }

    #[test]
    fn smape_is_bounded(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50)) {
        let (y, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let s = smape(&y, &p).unwrap();
        prop_assert!((0.0..=200.0).contains(&s));
    }

    #[test]
    fn train_mean_has_unit_rse(y in targets()) {
        let m = y.iter().sum::<f64>() / y.len() as f64;
        let r = rse(&y, &vec![m; y.len()]).unwrap();
        prop_assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fold_plans_partition(n in 4usize..400, seed in any::<u64>()) {
        let plan = make_fold_plan(n, seed).unwrap();
        prop_assert_eq!(plan.folds.len(), 10);
        for pair in plan.folds.chunks(2) {
            let mut all: Vec<usize> = pair[0].train.iter().chain(&pair[0].test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(&pair[0].train, &pair[1].test);
            prop_assert_eq!(pair[0].train.len(), n.div_ceil(2));
        }
    }

    #[test]
    fn gap_score_in_unit_interval(y in targets()) {
        let g = gap_score(&y).unwrap();
        prop_assert!(g > 0.0 && g <= 1.0);
    }

    #[test]
    fn distribution_verdict_ignores_row_order(y in prop::collection::vec(0.0f64..100.0, 20..80), rot in 1usize..19) {
        prop_assume!(y.iter().any(|v| *v != y[0]));
        let x: Vec<f64> = (0..y.len()).map(|i| ((i * 37) % 11) as f64).collect();
        let m = Matrix::from_columns(std::slice::from_ref(&x)).unwrap();
        let th = Thresholds::default();
        let a = detect_distribution(&y, &m, &th).unwrap();
        let mut yr = y.clone();
        let mut xr = x;
        yr.rotate_left(rot);
        xr.rotate_left(rot);
        let b = detect_distribution(&yr, &Matrix::from_columns(&[xr]).unwrap(), &th).unwrap();
        prop_assert!((a.skewness - b.skewness).abs() < 1e-9);
        prop_assert_eq!(a.gap_score, b.gap_score);
        prop_assert!((a.heteroscedasticity_p_value - b.heteroscedasticity_p_value).abs() < 1e-8);
    }

    #[test]
    fn ridge_is_the_penalized_minimizer(
        rows in prop::collection::vec(prop::collection::vec(-10f64..10.0, 3), 8..40),
        alpha in 0.01f64..10.0,
        j in 0usize..3,
        sign in prop::bool::ANY,
    ) {
        let y: Vec<f64> = rows.iter().enumerate().map(|(i, r)| r[0] - 2.0 * r[1] + (i as f64).sin()).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let m = fit_ridge(&x, &y, alpha).unwrap();
        let objective = |beta: &[f64]| {
            let mut rss = 0.0;
            for (row, yi) in x.rows_iter().zip(&y) {
                let mut p = m.intercept;
                for k in 0..3 {
                    p += beta[k] * (row[k] - m.feature_means[k]) / m.feature_stds[k];
                }
                rss += (yi - p).powi(2);
            }
            rss + alpha * beta.iter().map(|b| b * b).sum::<f64>()
        };
        let mut moved = m.coefficients.clone();
        moved[j] += if sign { 1e-3 } else { -1e-3 };
        prop_assert!(objective(&moved) > objective(&m.coefficients));
    }

    #[test]
    fn lasso_objective_never_increases(
        rows in prop::collection::vec(prop::collection::vec(-5f64..5.0, 4), 10..60),
        alpha in 0.001f64..2.0,
    ) {
        let y: Vec<f64> = rows.iter().map(|r| r[0] + r[1] * r[2] - r[3]).collect();
        let (_, history) = fit_lasso_traced(&Matrix::from_rows(&rows).unwrap(), &y, alpha).unwrap();
        prop_assert!(history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14) + 1e-300));
    }
}

#[test]
fn recommend_is_pure() {
    let y: Vec<f64> = (1..=60).map(|i| (i as f64 / 9.0).exp()).collect();
    let r = detect_distribution(&y, &Matrix::zeros(60, 0), &Thresholds::default()).unwrap();
    let report = ytx::diagnostics::DiagnosticReport {
        n: 60,
        thresholds: Thresholds::default(),
        subjective: None,
        frame: None,
        trend: None,
        context: None,
        distribution: r,
        recommendations: vec![],
    };
    assert_eq!(recommend(&report), recommend(&report.clone()));
}
