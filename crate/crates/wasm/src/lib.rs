//! JSON-in, JSON-out bindings used by the static demo page in `www/`.

use holocr::corpus::Domain;
use holocr::grpo::{simulate, SimConfig};
use holocr::normalize::normalize_table;
use holocr::score::score_text_pair;
use holocr::treedist::{teds, teds_s};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Per-type text rewards for one prediction, as JSON.
pub fn text_reward_json(
    prediction: &str,
    ground_truth: &str,
    domain: &str,
) -> Result<String, String> {
    let domain: Domain = domain.parse()?;
    if domain.is_vision() {
        return Err(format!("`{domain}` is scored on images, not text"));
    }
    let b = score_text_pair(prediction, ground_truth, domain);
    serde_json::to_string(&b).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct TableComparison {
    teds: f64,
    teds_s: f64,
    pred_nodes: usize,
    gt_nodes: usize,
    pred_repaired: bool,
    gt_repaired: bool,
}

/// TEDS and TEDS-S between two HTML tables, as JSON.
pub fn table_similarity_json(pred_html: &str, gt_html: &str) -> Result<String, String> {
    let p = normalize_table(pred_html).map_err(|e| format!("prediction: {e}"))?;
    let g = normalize_table(gt_html).map_err(|e| format!("ground truth: {e}"))?;
    let out = TableComparison {
        teds: teds(&p.tree, &g.tree),
        teds_s: teds_s(&p.tree, &g.tree),
        pred_nodes: p.tree.size(),
        gt_nodes: g.tree.size(),
        pred_repaired: p.repaired,
        gt_repaired: g.repaired,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Per-iteration reward statistics of the toy GRPO run, as a JSON array.
pub fn grpo_trajectory_json(
    target: &str,
    group_size: usize,
    iterations: usize,
    step_size: f64,
    epsilon: f64,
    seed: u64,
) -> Result<String, String> {
    let cfg = SimConfig {
        target: target.to_string(),
        group_size,
        iterations,
        step_size,
        epsilon,
        seed,
        ..SimConfig::default()
    };
    let t = simulate(&cfg).map_err(|e| e.to_string())?;
    serde_json::to_string(&t).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn text_reward(prediction: &str, ground_truth: &str, domain: &str) -> Result<String, JsValue> {
    text_reward_json(prediction, ground_truth, domain).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn table_similarity(pred_html: &str, gt_html: &str) -> Result<String, JsValue> {
    table_similarity_json(pred_html, gt_html).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn grpo_trajectory(
    target: &str,
    group_size: u32,
    iterations: u32,
    step_size: f64,
    epsilon: f64,
    seed: u32,
) -> Result<String, JsValue> {
    grpo_trajectory_json(
        target,
        group_size as usize,
        iterations as usize,
        step_size,
        epsilon,
        seed as u64,
    )
    .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn default_step_size() -> f64 {
    holocr::grpo::DEFAULT_STEP_SIZE
}
