use quantune_web::{guarantee_summary_json, sample_size_curve_json, simulate_far_json};
use serde_json::Value;

fn parse(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn curve_has_one_point_per_level() {
    let v = parse(&sample_size_curve_json(0.01, 0.05, 100).unwrap());
    let points = v.as_array().unwrap();
    assert_eq!(points.len(), 99);
    let at_95 = &points[94];
    assert_eq!(at_95["gamma"], 0.95);
    assert_eq!((at_95["dkw"].as_u64(), at_95["vp"].as_u64(), at_95["beta"].as_u64()), (Some(18460), Some(4239), Some(2180)));
    assert!(sample_size_curve_json(0.01, 0.05, 1).is_err());
    assert!(sample_size_curve_json(0.0, 0.05, 10).is_err());
}

#[test]
fn summary_reports_coverage_and_errors() {
    let v = parse(&guarantee_summary_json("19/20", 0.01, 0.05).unwrap());
    assert_eq!(v["gamma"], "19/20");
    let methods = v["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 3);
    assert!(methods.iter().all(|m| m["coverage"].as_f64().unwrap() >= 0.948));

    let v = parse(&guarantee_summary_json("0.95", 0.3, 0.3).unwrap());
    assert!(v["methods"][1]["error"].as_str().unwrap().contains("6*rho"));
    assert!(guarantee_summary_json("abc", 0.01, 0.05).is_err());
}

#[test]
fn simulation_summary() {
    let text = simulate_far_json("chi2:dof=4", "beta", "0.95", 0.01, 0.05, 200, 50_000, 3).unwrap();
    let v = parse(&text);
    assert_eq!(v["n_samples"], 2180);
    let counts: u64 = v["histogram"]["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts, 200);
    assert_eq!(text, simulate_far_json("chi2:dof=4", "beta", "0.95", 0.01, 0.05, 200, 50_000, 3).unwrap());

    let v = parse(&simulate_far_json("cusum:delta=6,dim=4", "beta", "0.95", 0.01, 0.05, 20, 10_000, 1).unwrap());
    assert_eq!(v["sampling_mode"], "sequential-trajectory");

    assert!(simulate_far_json("uniform", "beta", "0.95", 0.01, 0.05, 0, 1000, 1).is_err());
    assert!(simulate_far_json("uniform", "dkw", "0.95", 0.001, 0.05, 10, 1000, 1).is_err());
    assert!(simulate_far_json("nope", "beta", "0.95", 0.01, 0.05, 10, 1000, 1).is_err());
}
