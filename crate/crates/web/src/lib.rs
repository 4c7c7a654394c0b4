//! JSON-in, JSON-out entry points for the browser demo. The plain functions
//! are what the tests exercise; the `#[wasm_bindgen]` wrappers only convert
//! errors.

use probserial::engine::{completion_time, run_ps, run_with_pauses};
use probserial::generators::{default_epsilon, dichotomous_for, random_profile, tight_instance, worked_example, Seed};
use probserial::manipulation::{best_response, SearchSpace, DEFAULT_FULL_CAP};
use probserial::{Instance, PausePlan, Rational, Valuation};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn instance_of(text: &str) -> Result<Instance, String> {
    Instance::from_json(text).map_err(|e| e.to_string())
}

fn decimal(x: &Rational) -> String {
    x.to_decimal(6)
}

/// Trace of an instance (pauses included), plus the utility and interested
/// completion time when the instance has utilities.
pub fn simulate_json(instance: &str) -> Result<String, String> {
    let inst = instance_of(instance)?;
    let trace = run_with_pauses(&inst.profile, &inst.pauses).map_err(|e| e.to_string())?;
    let mut doc = json!({ "trace": trace });
    if let Some(v) = &inst.valuation {
        let u = v.utility(trace.row(v.agent())).map_err(|e| e.to_string())?;
        doc["utility"] = json!({ "agent": v.agent(), "value": u, "decimal": decimal(&u) });
        if let Valuation::Dichotomous(d) = v {
            doc["interested_completion"] = json!(completion_time(&trace, d.interested()).map_err(|e| e.to_string())?);
        }
    }
    Ok(doc.to_string())
}

/// Best response of the agent owning the instance utilities. Dichotomous
/// valuations search interested-first reports, cardinal ones all `m!`.
pub fn best_response_json(instance: &str) -> Result<String, String> {
    let inst = instance_of(instance)?;
    let v = inst.valuation.ok_or("instance has no utilities")?;
    let space = match &v {
        Valuation::Dichotomous(d) => SearchSpace::interested_first(d.interested().to_vec()),
        Valuation::Cardinal(_) => SearchSpace::FullPermutations { cap: DEFAULT_FULL_CAP },
    };
    let res = best_response(&inst.profile, v.agent(), &v, &space).map_err(|e| e.to_string())?;
    let lied = inst.profile.with_report(v.agent(), &res.best_report).map_err(|e| e.to_string())?;
    let ratio = res.ratio.finite().map(decimal);
    Ok(json!({ "result": res, "ratio_decimal": ratio, "manipulated_trace": run_ps(&lied) }).to_string())
}

/// Ratio achieved by the demoting strategy on the tight family for every even
/// `n` in `6..=n_max`, computed by running the engine.
pub fn tight_curve_json(n_max: usize) -> Result<String, String> {
    let mut points = Vec::new();
    for n in (6..=n_max).step_by(2) {
        let t = tight_instance(n).map_err(|e| e.to_string())?;
        let truthful = t.valuation.utility(run_ps(&t.profile).row(0));
        let lied = t.profile.with_report(0, &t.strategy).map_err(|e| e.to_string())?;
        let manipulated = t.valuation.utility(run_ps(&lied).row(0));
        let ratio = &manipulated / &truthful;
        points.push(json!({ "n": n, "ratio": ratio, "decimal": decimal(&ratio) }));
    }
    Ok(Value::Array(points).to_string())
}

/// Instance JSON for the page presets: `"worked"`, `"tight"` (uses `n`) or
/// `"random"` (uses `n`, `m`, `k`, `seed`).
pub fn preset_json(kind: &str, n: usize, m: usize, k: usize, seed: u64) -> Result<String, String> {
    let inst = match kind {
        "worked" => {
            let w = worked_example();
            Instance::new(w.profile, Some(w.utilities.into()), PausePlan::empty())
        }
        "tight" => {
            let t = tight_instance(n).map_err(|e| e.to_string())?;
            Instance::new(t.profile, Some(t.valuation.into()), PausePlan::empty())
        }
        "random" => {
            let p = random_profile(n, m, Seed(seed)).map_err(|e| e.to_string())?;
            let v = dichotomous_for(&p, 0, k, default_epsilon()).map_err(|e| e.to_string())?;
            Instance::new(p, Some(v.into()), PausePlan::empty())
        }
        other => return Err(format!("unknown preset {other}")),
    };
    Ok(inst.map_err(|e| e.to_string())?.to_json())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(instance: &str) -> Result<String, JsError> {
    js(simulate_json(instance))
}

#[wasm_bindgen(js_name = bestResponse)]
pub fn best_response_js(instance: &str) -> Result<String, JsError> {
    js(best_response_json(instance))
}

#[wasm_bindgen(js_name = tightCurve)]
pub fn tight_curve(n_max: usize) -> Result<String, JsError> {
    js(tight_curve_json(n_max))
}

#[wasm_bindgen]
pub fn preset(kind: &str, n: usize, m: usize, k: usize, seed: u64) -> Result<String, JsError> {
    js(preset_json(kind, n, m, k, seed))
}
