use hdsteer_web::{boundaries, region_table, steering_weight_curve, weight_curve, witness_curve, witness_sweep};
use serde_json::Value;

#[test]
fn region_table_for_four_levels() {
    let rows = boundaries(4).unwrap();
    let sn: Vec<f64> = rows.iter().map(|r| r.sn).collect();
    assert!((sn[0] - 0.2).abs() < 1e-12 && (sn[1] - 7.0 / 15.0).abs() < 1e-12);
    assert!((rows[0].sdi_sn - 0.509940709).abs() < 1e-9);
    assert!(rows.iter().all(|r| r.sn < r.sdi_sn && r.sdi_sn <= r.mub));
    let json: Value = serde_json::from_str(&region_table(4).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 3);
}

#[test]
fn witness_sweep_is_affine_and_saturates() {
    let curve = witness_curve(3, 10).unwrap();
    assert_eq!(curve.eta.len(), 11);
    for (e, v) in curve.eta.iter().zip(&curve.value) {
        assert!((v - 2.0 * (e + (1.0 - e) / 3.0)).abs() < 1e-12);
    }
    assert_eq!(*curve.certified_sn.last().unwrap(), 3);
    assert_eq!(curve.certified_sn[0], 1);
    assert_eq!(curve.bounds.len(), 3);
    assert!(witness_sweep(3, 10).unwrap().starts_with('{'));
}

#[test]
fn weight_curve_vanishes_below_the_threshold() {
    let curve = weight_curve(10).unwrap();
    for ((e, w), lb) in curve.eta.iter().zip(&curve.weight).zip(&curve.certified_lower_bound) {
        let expected = ((e - std::f64::consts::FRAC_1_SQRT_2) / (1.0 - std::f64::consts::FRAC_1_SQRT_2)).max(0.0);
        assert!((w - expected).abs() < 1e-6, "eta {e}: {w} vs {expected}");
        assert!(lb <= &(w + 1e-9));
    }
    assert!(steering_weight_curve(4).is_ok());
}

#[test]
fn inputs_are_range_checked() {
    assert!(region_table(1).is_err());
    assert!(region_table(9).is_err());
    assert!(witness_sweep(3, 0).is_err());
    assert!(steering_weight_curve(100_000).is_err());
}
