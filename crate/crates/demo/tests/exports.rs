use mechlab_demo::{generate_json, run_once_json, simulate_json, MAX_TRIALS};
use serde_json::Value;

fn diagonal() -> String {
    generate_json("diagonal", 4, 4, 3).unwrap()
}

#[test]
fn generated_instance_round_trips() {
    let text = diagonal();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["m"], 4);
    assert_eq!(v["bidders"].as_array().unwrap().len(), 4);
    assert!(generate_json("nope", 2, 2, 0).is_err());
    assert!(generate_json("diagonal", 2, 3, 0).is_err());
}

#[test]
fn run_once_is_deterministic() {
    let inst = diagonal();
    let a = run_once_json(&inst, 9).unwrap();
    assert_eq!(a, run_once_json(&inst, 9).unwrap());
    let v: Value = serde_json::from_str(&a).unwrap();
    assert!(v["transcript"]["events"].as_array().is_some_and(|e| !e.is_empty()));
    assert!(run_once_json("{}", 0).is_err());
}

#[test]
fn simulate_histogram_sums_to_trials() {
    let rep: Value = serde_json::from_str(&simulate_json(&diagonal(), 300, 1).unwrap()).unwrap();
    let total: u64 = rep["branch_histogram"].as_object().unwrap().values().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(total, 300);
    let ratio = rep["ratio"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&ratio));
    assert!(simulate_json(&diagonal(), 0, 1).is_err());
    assert!(simulate_json(&diagonal(), MAX_TRIALS + 1, 1).is_err());
}
