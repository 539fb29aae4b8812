use serde_json::Value;
use windstat_wasm_demo::{kitaev_curve, unfolded_series, winding_pmf};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn kitaev_curve_phases() {
    let top = parse(kitaev_curve(1.0, 1.0, 1.0, 256));
    assert_eq!(top["w"].as_i64().unwrap().abs(), 1);
    assert_eq!(top["dy"].as_array().unwrap().len(), 257);
    // closed curve
    assert_eq!(top["dz"][0], top["dz"][256]);
    assert_eq!(parse(kitaev_curve(0.25, 1.0, 1.0, 64))["w"], 0);
    let crit = parse(kitaev_curve(0.5, 1.0, 1.0, 64));
    assert!(crit["w"].is_null());
    assert!(crit["gap"].as_f64().unwrap() < 1e-9);
}

#[test]
fn pmf_json() {
    let v = parse(winding_pmf(2));
    assert_eq!(v["support"], serde_json::json!([-2, 0, 2]));
    let total: f64 = v["probs"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(parse(winding_pmf(0))["error"].is_string());
}

#[test]
fn unfolded_json() {
    let v = parse(unfolded_series(1000, 0.5, 0.5, 5.0, 10));
    let (val, lim) = (v["value"].as_array().unwrap(), v["limit"].as_array().unwrap());
    for (a, b) in val.iter().zip(lim) {
        assert!((a.as_f64().unwrap() - b.as_f64().unwrap()).abs() < 2e-3);
    }
    assert!(parse(unfolded_series(4, 0.5, 2.0, 1.0, 10))["error"].is_string());
}
