use super::*;

fn skewed(n: usize) -> Vec<f64> {
    (1..=n).map(|i| (i as f64 / 7.0).exp() - 0.5).collect()
}

#[test]
fn kind_names_parse_back() {
    for k in TransformKind::ALL {
        assert_eq!(k.name().parse::<TransformKind>().unwrap(), k);
        assert_eq!(k.to_string(), k.name());
    }
    assert_eq!(
        "QN".parse::<TransformKind>().unwrap(),
        TransformKind::QuantileNormal
    );
    assert_eq!(
        "base".parse::<TransformKind>().unwrap(),
        TransformKind::Identity
    );
    assert!("cube".parse::<TransformKind>().is_err());
}

#[test]
fn params_serialize_with_kind_tag() {
    let t = fit_box_cox(&skewed(30)).unwrap();
    let json = serde_json::to_value(&t).unwrap();
    assert_eq!(json["kind"], "box-cox");
    assert!(json["params"]["lambda"].is_number());
    assert!(json["training_target_range"].is_array());
    let back: FittedTransform = serde_json::from_value(json).unwrap();
    assert_eq!(back, t);

    let s = fit_sqrt(&[0.0, 1.0, 4.0]).unwrap();
    let back: FittedTransform = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(back, s);
}

#[test]
fn sqrt_rejects_negative_with_index() {
    let t = fit_sqrt(&[1.0, 4.0]).unwrap();
    match t.forward(&[1.0, -2.0], Side::None) {
        Err(Error::Domain { index, .. }) => assert_eq!(index, 1),
        other => panic!("expected domain error, got {other:?}"),
    }
    match fit_sqrt(&[1.0, 2.0, -0.5]) {
        Err(Error::Domain { index, .. }) => assert_eq!(index, 2),
        other => panic!("expected domain error, got {other:?}"),
    }
}

#[test]
fn log_offset_domain_error_names_index() {
    let t = fit_log_offset(&[0.0, 3.0]).unwrap();
    let err = t.forward(&[2.0, 5.0, -4.0], Side::None).unwrap_err();
    assert!(err.to_string().contains("index 2"), "{err}");
}

#[test]
fn distributional_round_trip() {
    let y = skewed(60);
    for kind in TransformKind::ALL
        .into_iter()
        .filter(|k| k.is_distributional())
    {
        let t = fit(kind, &y, Side::None, None).unwrap();
        let z = t.forward(&y, Side::None).unwrap();
        let back = t.inverse(&z, Side::None).unwrap();
        for (a, b) in y.iter().zip(&back) {
            assert!(
                (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                "{kind}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn clamped_inverse_counts_out_of_domain() {
    let y = skewed(40);
    let t = fit_sqrt(&y).unwrap();
    let out = t.inverse_clamped(&[-1.0, 2.0], Side::None).unwrap();
    assert_eq!(out.clamped, 1);
    assert_eq!(out.values[0], t.training_target_range.0);
    assert_eq!(out.values[1], 4.0);
    assert!(t.inverse(&[-1.0], Side::None).is_err());
}

#[test]
fn contextual_kinds_need_side() {
    let y = skewed(20);
    assert!(matches!(
        fit(TransformKind::SubjectCenter, &y, Side::None, None),
        Err(Error::MissingSide(_))
    ));
    let keys: Vec<String> = (0..20).map(|i| (i % 4).to_string()).collect();
    let t = fit(TransformKind::SubjectCenter, &y, Side::Keys(&keys), None).unwrap();
    assert!(matches!(
        t.forward(&y, Side::None),
        Err(Error::MissingSide(_))
    ));
    assert!(matches!(
        t.forward(&y, Side::Keys(&keys[..5])),
        Err(Error::LengthMismatch { .. })
    ));
}

#[test]
fn subject_centering_zeroes_group_means() {
    let y = [1.0, 3.0, 10.0, 14.0, 5.0];
    let s: Vec<String> = ["a", "a", "b", "b", "c"]
        .iter()
        .map(|k| k.to_string())
        .collect();
    let t = fit_subject_center(&y, &s).unwrap();
    let z = t.forward(&y, Side::Keys(&s)).unwrap();
    assert_eq!(z, vec![-1.0, 1.0, -2.0, 2.0, 0.0]);
    let unseen = vec!["zz".to_string()];
    // unseen subjects fall back to the global mean 6.6
    let z = t.forward(&[6.6], Side::Keys(&unseen)).unwrap();
    assert!(z[0].abs() < 1e-12);
}

#[test]
fn trial_minmax_maps_to_unit_interval() {
    let y = [2.0, 4.0, 3.0, 10.0, 20.0];
    let k: Vec<String> = ["x", "x", "x", "y", "y"]
        .iter()
        .map(|k| k.to_string())
        .collect();
    let t = fit_trial_minmax(&y, &k).unwrap();
    let z = t.forward(&y, Side::Keys(&k)).unwrap();
    assert_eq!(z, vec![0.0, 1.0, 0.5, 0.0, 1.0]);
    let unseen = vec!["w".to_string()];
    assert!(matches!(
        t.forward(&[1.0], Side::Keys(&unseen)),
        Err(Error::UnknownKey { .. })
    ));
    assert!(t.inverse_strict(&[0.5], Side::Keys(&unseen)).is_err());
    // pooled range [2, 20]
    assert_eq!(t.inverse(&[0.5], Side::Keys(&unseen)).unwrap(), vec![11.0]);
}

#[test]
fn frame_and_deflate() {
    let y = [10.0, 30.0];
    let r = [2.0, 3.0];
    let t = fit_frame_normalize(&y, &r).unwrap();
    assert_eq!(t.forward(&y, Side::Values(&r)).unwrap(), vec![5.0, 10.0]);
    assert!(fit_frame_normalize(&y, &[1.0, 0.0]).is_err());

    let times: Vec<String> = vec!["2000".into(), "2001".into()];
    let idx = DeflationIndex::from_pairs(&times, &[100.0, 125.0], Some("2001")).unwrap();
    let t = fit_deflate(&y, &times, &idx).unwrap();
    let z = t.forward(&[100.0, 100.0], Side::Keys(&times)).unwrap();
    assert_eq!(z, vec![125.0, 100.0]);
    let back = t.inverse(&z, Side::Keys(&times)).unwrap();
    assert_eq!(back, vec![100.0, 100.0]);
}
