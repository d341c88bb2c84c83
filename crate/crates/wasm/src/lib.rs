//! Browser bindings: allocations, a banded-parameter sweep and core checks
//! on a CSV stream matrix. Every function returns a JSON string.

use serde_json::{json, Map, Value};
use streamshare::game::{
    coalition_label, decomposition_json, in_core_direct, in_core_flow, streaming_game, CoreVerdict,
    MAX_PLAYERS,
};
use streamshare::rational::{to_decimal, to_text};
use streamshare::{parse_problem, BandedWeightParams, Format, Index, Rational, StreamingProblem};
use wasm_bindgen::prelude::*;

const PLOT_PLACES: usize = 6;

fn load(csv: &str) -> Result<StreamingProblem, String> {
    parse_problem(csv.as_bytes(), Format::Csv).map_err(|e| e.to_string())
}

fn index_for(method: &str, alpha: u32, beta: u32) -> Result<Index, String> {
    match method {
        "banded" => BandedWeightParams::new(alpha.into(), beta.into())
            .map(Index::Banded)
            .map_err(|e| e.to_string()),
        other => other
            .parse()
            .map_err(|e: streamshare::IndexError| e.to_string()),
    }
}

fn amounts(artists: &[String], values: &[Rational]) -> Value {
    artists
        .iter()
        .zip(values)
        .map(|(a, v)| {
            let entry = json!({"exact": to_text(v), "approx": to_decimal(v, PLOT_PLACES)});
            (a.clone(), entry)
        })
        .collect::<Map<_, _>>()
        .into()
}

/// Index values and rewards under `method` (`pro-rata`, `user-centric` or
/// `banded`).
pub fn allocation_report(csv: &str, method: &str, alpha: u32, beta: u32) -> Result<Value, String> {
    let problem = load(csv)?;
    let index = index_for(method, alpha, beta)?;
    let values = index.evaluate(&problem).map_err(|e| e.to_string())?;
    let rewards = index.rewards(&problem).map_err(|e| e.to_string())?;
    Ok(json!({
        "method": index.name(),
        "revenue": to_text(&problem.revenue()),
        "index": amounts(problem.artists(), values.scores()),
        "rewards": amounts(problem.artists(), rewards.payouts()),
    }))
}

/// Banded rewards for every `alpha` in `1..=max_alpha`, with `beta`
/// raised to `alpha` where it is smaller.
pub fn banded_sweep_report(csv: &str, max_alpha: u32, beta: u32) -> Result<Value, String> {
    let problem = load(csv)?;
    let mut points = Vec::new();
    for alpha in 1..=max_alpha.max(1) {
        let params = BandedWeightParams::new(alpha.into(), beta.max(alpha).into())
            .map_err(|e| e.to_string())?;
        let rewards = Index::Banded(params)
            .rewards(&problem)
            .map_err(|e| e.to_string())?;
        let approx: Vec<String> = rewards
            .payouts()
            .iter()
            .map(|r| to_decimal(r, PLOT_PLACES))
            .collect();
        points.push(json!({"alpha": alpha, "beta": beta.max(alpha), "rewards": approx}));
    }
    let reference = |index: Index| -> Result<Vec<String>, String> {
        let r = index.rewards(&problem).map_err(|e| e.to_string())?;
        Ok(r.payouts()
            .iter()
            .map(|x| to_decimal(x, PLOT_PLACES))
            .collect())
    };
    Ok(json!({
        "artists": problem.artists(),
        "revenue": to_decimal(&problem.revenue(), PLOT_PLACES),
        "points": points,
        "pro_rata": reference(Index::ProRata)?,
        "user_centric": reference(Index::UserCentric)?,
    }))
}

/// Core membership of the method's rewards under both oracles.
pub fn core_report(csv: &str, method: &str, alpha: u32, beta: u32) -> Result<Value, String> {
    let problem = load(csv)?;
    let index = index_for(method, alpha, beta)?;
    let rewards = index.rewards(&problem).map_err(|e| e.to_string())?;
    let flow = in_core_flow(&problem, rewards.payouts()).map_err(|e| e.to_string())?;
    let mut report = json!({
        "method": index.name(),
        "in_core": flow.is_member(),
    });
    if let Some(d) = flow.decomposition() {
        report["decomposition"] = decomposition_json(&problem, d).into();
    }
    if problem.n_artists() <= MAX_PLAYERS {
        let game = streaming_game(&problem).map_err(|e| e.to_string())?;
        let direct = in_core_direct(&game, rewards.payouts()).map_err(|e| e.to_string())?;
        if direct.is_member() != flow.is_member() {
            return Err("core oracles disagree".into());
        }
        if let CoreVerdict::Blocked {
            coalition,
            payoff,
            worth,
        } = direct
        {
            report["blocking"] = json!({
                "coalition": coalition_label(problem.artists(), coalition),
                "payoff": to_text(&payoff),
                "worth": to_text(&worth),
            });
        }
    }
    Ok(report)
}

fn to_js(result: Result<Value, String>) -> Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn allocate(csv: &str, method: &str, alpha: u32, beta: u32) -> Result<String, JsError> {
    to_js(allocation_report(csv, method, alpha, beta))
}

#[wasm_bindgen]
pub fn banded_sweep(csv: &str, max_alpha: u32, beta: u32) -> Result<String, JsError> {
    to_js(banded_sweep_report(csv, max_alpha, beta))
}

#[wasm_bindgen]
pub fn core_check(csv: &str, method: &str, alpha: u32, beta: u32) -> Result<String, JsError> {
    to_js(core_report(csv, method, alpha, beta))
}
