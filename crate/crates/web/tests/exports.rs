use relstab_web::{clt_samples, coefficient_paths, stability_rates};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn rates_json() {
    let v = parse(stability_rates("st-fixed", "single", "18, 90, 180", 500, 1).unwrap_or_else(|_| panic!()));
    assert_eq!(v["points"].as_array().unwrap().len(), 3);
    assert!(v["slope_gamma"].as_f64().unwrap() < 0.0);
}

#[test]
fn clt_json() {
    let v = parse(clt_samples("ridge-fixed", "single", 90, 50, 2000, 2).unwrap_or_else(|_| panic!()));
    assert_eq!(v["stat_true_sigma"].as_array().unwrap().len(), 50);
    assert_eq!(v["stat_hat_sigma"].as_array().unwrap().len(), 50);
}

#[test]
fn paths_end_at_zero_and_agree_at_small_penalty() {
    let v = parse(coefficient_paths("st-fixed", 60, 30, 3).unwrap_or_else(|_| panic!()));
    let lasso = v["lasso"].as_array().unwrap();
    let st = v["soft_threshold"].as_array().unwrap();
    assert_eq!(lasso.len(), 30);
    let last = lasso.last().unwrap().as_array().unwrap();
    assert!(last.iter().all(|b| b.as_f64().unwrap() == 0.0));
    assert!(st
        .last()
        .unwrap()
        .as_array()
        .unwrap()
        .iter()
        .all(|b| b.as_f64().unwrap() == 0.0));
    let first = lasso[0].as_array().unwrap();
    assert_eq!(first.len(), 10);
}
