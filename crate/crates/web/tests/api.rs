use probserial_web::{best_response_json, preset_json, simulate_json, tight_curve_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn simulate_worked_example() {
    let inst = preset_json("worked", 0, 0, 0, 0).unwrap();
    let out = parse(&simulate_json(&inst).unwrap());
    assert_eq!(out["trace"]["allocation"][0], serde_json::json!(["0/1", "3/4", "1/4"]));
    assert_eq!(out["utility"]["value"], "3/4");
    assert_eq!(out["trace"]["segments"].as_array().unwrap().len(), 3);
}

#[test]
fn simulate_honours_pauses() {
    let inst = r#"{"n": 3, "m": 3, "prefs": [[1, 0, 2], [0, 1, 2], [0, 2, 1]],
        "pauses": {"1": [["0", "inf"]]}}"#;
    let out = parse(&simulate_json(inst).unwrap());
    assert_eq!(out["trace"]["allocation"][1], serde_json::json!(["0/1", "0/1", "0/1"]));
    assert_eq!(out["trace"]["depletion"][2], "3/2");
    assert!(out.get("utility").is_none());
}

#[test]
fn best_response_of_presets() {
    let out = parse(&best_response_json(&preset_json("worked", 0, 0, 0, 0).unwrap()).unwrap());
    assert_eq!(out["result"]["ratio"], "16/15");
    assert_eq!(out["manipulated_trace"]["allocation"][0], serde_json::json!(["1/3", "1/2", "1/6"]));
    let out = parse(&best_response_json(&preset_json("tight", 10, 0, 0, 0).unwrap()).unwrap());
    assert_eq!(out["result"]["truthful_utility"], "1/2");
    assert_eq!(out["result"]["best_utility"], "2/3");
    let random = preset_json("random", 6, 6, 3, 5).unwrap();
    assert_eq!(random, preset_json("random", 6, 6, 3, 5).unwrap());
    assert!(best_response_json(&random).is_ok());
}

#[test]
fn tight_curve_matches_closed_form() {
    let pts = parse(&tight_curve_json(20).unwrap());
    let pts = pts.as_array().unwrap();
    assert_eq!(pts.len(), 8);
    assert_eq!(pts[2]["n"], 10);
    assert_eq!(pts[2]["ratio"], "4/3");
    assert_eq!(pts[7]["ratio"], "27/19");
}

#[test]
fn errors_are_messages() {
    assert!(simulate_json("{}").unwrap_err().contains("missing field"));
    assert!(best_response_json(r#"{"n": 1, "m": 1, "prefs": [[0]]}"#).unwrap_err().contains("no utilities"));
    assert!(preset_json("tight", 7, 0, 0, 0).is_err());
    assert!(preset_json("nope", 1, 1, 1, 0).is_err());
}
