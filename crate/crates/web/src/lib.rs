//! Browser bindings for the demo page in `www/`.
//!
//! Every operation takes the system as text and returns JSON; errors come
//! back as a message string.

use dissquad::json::{complex_json, point_strings, serialize_result};
use dissquad::parser::{parse_points, parse_system};
use dissquad::poly::PolySystem;
use dissquad::quadratize::{branch_and_bound, RewriteRule, SearchOptions};
use dissquad::simulate::{compare, integrate, to_float_point, IntegrateOptions, Trajectory};
use dissquad::stability::{build_stabilizers, dissipative_quadratize, CheckMode, CheckOptions, DissipateOptions};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn system(src: &str) -> Result<PolySystem, String> {
    parse_system(src).map_err(|e| format!("system: {e}"))
}

fn rule(name: &str) -> Result<RewriteRule, String> {
    match name {
        "" | "fewest-lifted" => Ok(RewriteRule::FewestLifted),
        "most-lifted" => Ok(RewriteRule::MostLifted),
        other => Err(format!("unknown rewrite rule `{other}`")),
    }
}

fn mode(name: &str) -> Result<CheckMode, String> {
    match name {
        "" | "exact" => Ok(CheckMode::Exact),
        "numeric" => Ok(CheckMode::Numeric),
        other => Err(format!("unknown mode `{other}`")),
    }
}

fn search(rule_name: &str) -> Result<SearchOptions, String> {
    Ok(SearchOptions {
        rule: rule(rule_name)?,
        // keep the page responsive on inputs whose search explodes
        budget: Some(8),
        ..Default::default()
    })
}

fn points(src: &str, n: usize) -> Result<Vec<dissquad::Point>, String> {
    parse_points(src, Some(n)).map_err(|e| format!("points: {e}"))
}

/// Optimal quadratization as JSON.
pub fn quadratize_json(src: &str, rule_name: &str) -> Result<String, String> {
    let s = system(src)?;
    let q = branch_and_bound(&s, &search(rule_name)?).map_err(|e| e.to_string())?;
    Ok(serialize_result(&q, None, None))
}

/// Dissipative quadratization at the given equilibria, with the lambda trace.
/// Numeric eigenvalues are added to every trace row for plotting.
pub fn dissipate_json(src: &str, equilibria: &str, mode_name: &str, rule_name: &str) -> Result<String, String> {
    let s = system(src)?;
    let pts = points(equilibria, s.dim())?;
    let opts = DissipateOptions {
        check: CheckOptions {
            mode: mode(mode_name)?,
            ..Default::default()
        },
        search: search(rule_name)?,
        timeout: None,
    };
    let (q, rep) = dissipative_quadratize(&s, &pts, &opts).map_err(|e| e.to_string())?;
    let h = build_stabilizers(&q).map_err(|e| e.to_string())?;
    let mut v: serde_json::Value = serde_json::from_str(&serialize_result(&q, Some(&h), Some(&rep))).expect("own output");

    // the plot wants complex eigenvalues even in exact mode
    let numeric = CheckOptions {
        mode: CheckMode::Numeric,
        ..Default::default()
    };
    let plot: Vec<serde_json::Value> = rep
        .trace
        .iter()
        .map(|step| {
            let lifted = dissquad::stability::stabilized(&q, &h, step.lambda).lifted_system();
            let pts: Vec<serde_json::Value> = step
                .points
                .iter()
                .map(|p| {
                    let ev = dissquad::stability::jacobian(&lifted, &p.point)
                        .and_then(|j| dissquad::stability::classify(&j, p.point.clone(), &numeric))
                        .map(|r| r.eigenvalues.iter().map(complex_json).collect::<Vec<_>>())
                        .unwrap_or_default();
                    serde_json::json!({ "point": point_strings(&p.point), "verdict": p.verdict, "eigenvalues": ev })
                })
                .collect();
            serde_json::json!({ "lambda": step.lambda.to_string(), "points": pts })
        })
        .collect();
    v["plot"] = plot.into();
    Ok(serde_json::to_string(&v).expect("serializable"))
}

#[derive(Serialize)]
struct Series {
    names: Vec<String>,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    status: String,
}

impl From<Trajectory> for Series {
    fn from(t: Trajectory) -> Self {
        Series {
            status: t.status.to_string(),
            names: t.names,
            times: t.times,
            states: t.states,
        }
    }
}

#[derive(Serialize)]
struct SimulationJson {
    original: Series,
    #[serde(skip_serializing_if = "Option::is_none")]
    lifted: Option<Series>,
    new_variables: Vec<String>,
    lambda: String,
    max_deviation: Option<f64>,
    max_invariant_drift: Option<f64>,
}

/// Integrates the system, and with `lift` also its quadratization
/// (stabilized for `equilibria` when that is non-empty).
pub fn simulate_json(
    src: &str,
    x0: &str,
    t_end: f64,
    lift: bool,
    equilibria: &str,
    rule_name: &str,
) -> Result<String, String> {
    let s = system(src)?;
    let x0 = points(x0, s.dim())?
        .into_iter()
        .next()
        .ok_or("initial point: none given")?;
    let x0 = to_float_point(&x0);
    let opts = IntegrateOptions {
        samples: 400,
        ..Default::default()
    };
    let out = if lift {
        let search = search(rule_name)?;
        let q = if equilibria.trim().is_empty() {
            branch_and_bound(&s, &search).map_err(|e| e.to_string())?
        } else {
            let pts = points(equilibria, s.dim())?;
            let opts = DissipateOptions {
                check: CheckOptions {
                    mode: CheckMode::Numeric,
                    ..Default::default()
                },
                search,
                timeout: None,
            };
            dissipative_quadratize(&s, &pts, &opts).map_err(|e| e.to_string())?.0
        };
        let d = compare(&s, &q.lifted_system(), &q.g, &x0, t_end, &opts).map_err(|e| e.to_string())?;
        SimulationJson {
            new_variables: q.new_var_definitions(),
            lambda: q.lambda.to_string(),
            max_deviation: Some(d.max_deviation),
            max_invariant_drift: Some(d.max_invariant_drift),
            original: d.original.into(),
            lifted: Some(d.lifted.into()),
        }
    } else {
        let t = integrate(&s, &x0, t_end, &opts).map_err(|e| e.to_string())?;
        SimulationJson {
            original: t.into(),
            lifted: None,
            new_variables: Vec::new(),
            lambda: "0".into(),
            max_deviation: None,
            max_invariant_drift: None,
        }
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

#[wasm_bindgen]
pub fn quadratize(src: &str, rule_name: &str) -> Result<String, JsValue> {
    quadratize_json(src, rule_name).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn dissipate(src: &str, equilibria: &str, mode_name: &str, rule_name: &str) -> Result<String, JsValue> {
    dissipate_json(src, equilibria, mode_name, rule_name).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate(src: &str, x0: &str, t_end: f64, lift: bool, equilibria: &str, rule_name: &str) -> Result<String, JsValue> {
    simulate_json(src, x0, t_end, lift, equilibria, rule_name).map_err(|e| JsValue::from_str(&e))
}
