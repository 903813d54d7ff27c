//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes and returns JSON strings. The `*_json` functions hold
//! the logic and are plain Rust so they can be tested natively.

use mechlab::analysis::{empirical_ratio_observed, opt_or_bound};
use mechlab::generate::{generate, GeneratorSpec};
use mechlab::mechanism::{run_seeded, MechanismParams};
use mechlab::Instance;
use wasm_bindgen::prelude::*;

/// Cap on in-browser trial counts.
pub const MAX_TRIALS: u32 = 20_000;

fn parse(instance_json: &str) -> Result<Instance, String> {
    Instance::from_json(instance_json).map_err(|e| e.to_string())
}

pub fn generate_json(family: &str, n: usize, m: usize, seed: u64) -> Result<String, String> {
    let family = family.parse().map_err(|e: mechlab::Error| e.to_string())?;
    let spec = GeneratorSpec::new(family, n, m, seed);
    generate(&spec).map(|i| i.to_json()).map_err(|e| e.to_string())
}

/// One seeded run: the outcome with its full transcript.
pub fn run_once_json(instance_json: &str, seed: u64) -> Result<String, String> {
    let instance = parse(instance_json)?;
    let params = MechanismParams::for_items(instance.m);
    let outcome = run_seeded(&instance, &params, seed).map_err(|e| e.to_string())?;
    serde_json::to_string(&outcome).map_err(|e| e.to_string())
}

/// Ratio report over `trials` seeded runs, including the branch histogram.
pub fn simulate_json(instance_json: &str, trials: u32, seed: u64) -> Result<String, String> {
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must be in 1..={MAX_TRIALS}"));
    }
    let instance = parse(instance_json)?;
    let params = MechanismParams::for_items(instance.m);
    let opt = opt_or_bound(&instance).map_err(|e| e.to_string())?;
    let report = empirical_ratio_observed(&instance, &params, trials as usize, seed, opt, false, |_, _| {})
        .map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = generateInstance)]
pub fn generate_instance(family: &str, n: u32, m: u32, seed: u32) -> Result<String, JsError> {
    generate_json(family, n as usize, m as usize, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = runOnce)]
pub fn run_once(instance_json: &str, seed: u32) -> Result<String, JsError> {
    run_once_json(instance_json, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(instance_json: &str, trials: u32, seed: u32) -> Result<String, JsError> {
    simulate_json(instance_json, trials, seed.into()).map_err(|e| JsError::new(&e))
}
