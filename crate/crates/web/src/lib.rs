//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export returns a JSON string; failures become a thrown JS error with
//! the message. The `*_json` functions hold the logic and run natively too.

use quantune::{
    audit_coverage, run_plan, EstimatorRule, GuaranteeParams, Histogram, Method, RationalLevel, SamplingMode,
    SourceSpec, Summary, TrialPlan,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Browser runs stay interactive below these sizes.
pub const MAX_TRIALS: usize = 5_000;
pub const MAX_VALIDATION: usize = 500_000;
pub const MAX_TRAINING: u64 = 200_000;

fn level(text: &str) -> Result<RationalLevel, String> {
    text.trim().parse().map_err(|e| format!("gamma: {e}"))
}

fn params(gamma: &str, epsilon: f64, rho: f64) -> Result<GuaranteeParams, String> {
    GuaranteeParams::new(level(gamma)?, epsilon, rho).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CurvePoint {
    gamma: f64,
    dkw: Option<u64>,
    vp: Option<u64>,
    beta: Option<u64>,
}

/// Sample sizes of all three methods for `gamma = i / steps`, `0 < i < steps`.
pub fn sample_size_curve_json(epsilon: f64, rho: f64, steps: u32) -> Result<String, String> {
    if !(2..=1000).contains(&steps) {
        return Err(format!("steps must lie in 2..=1000, got {steps}"));
    }
    GuaranteeParams::new(RationalLevel::new(1, 2).unwrap(), epsilon, rho).map_err(|e| e.to_string())?;
    let points: Vec<CurvePoint> = (1..steps)
        .map(|i| {
            let gamma = RationalLevel::new(u64::from(i), u64::from(steps)).unwrap();
            let p = GuaranteeParams::new(gamma, epsilon, rho).unwrap();
            let n = |m: Method| m.sample_size(&p).ok().map(|r| r.n_samples);
            CurvePoint {
                gamma: gamma.as_f64(),
                dkw: n(Method::Dkw),
                vp: n(Method::Vp),
                beta: n(Method::Beta),
            }
        })
        .collect();
    to_json(&points)
}

#[derive(Serialize)]
struct MethodSummary {
    method: Method,
    n_samples: Option<u64>,
    k: Option<u64>,
    estimator_rule: Option<EstimatorRule>,
    coverage: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct GuaranteeSummary {
    gamma: RationalLevel,
    epsilon: f64,
    rho: f64,
    epsilon_warning: bool,
    methods: Vec<MethodSummary>,
}

/// Sample size, index rule and exact coverage of each method at one point.
pub fn guarantee_summary_json(gamma: &str, epsilon: f64, rho: f64) -> Result<String, String> {
    let p = params(gamma, epsilon, rho)?;
    let methods = Method::ALL
        .iter()
        .map(|&m| match m.sample_size(&p) {
            Ok(r) => MethodSummary {
                method: m,
                n_samples: Some(r.n_samples),
                k: Some(r.k),
                coverage: audit_coverage(&r, &p).ok(),
                estimator_rule: Some(r.estimator_rule),
                error: None,
            },
            Err(e) => MethodSummary {
                method: m,
                n_samples: None,
                k: None,
                estimator_rule: None,
                coverage: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    to_json(&GuaranteeSummary {
        gamma: p.gamma,
        epsilon,
        rho,
        epsilon_warning: p.epsilon_warning(),
        methods,
    })
}

#[derive(Serialize)]
struct SimulationSummary {
    source: String,
    sampling_mode: SamplingMode,
    method: Method,
    n_samples: u64,
    n_trials: usize,
    band: (f64, f64),
    fraction_outside: f64,
    summary: Summary,
    histogram: Histogram,
}

/// Monte-Carlo false alarm rates of one method on one source.
#[allow(clippy::too_many_arguments)]
pub fn simulate_far_json(
    source: &str,
    method: &str,
    gamma: &str,
    epsilon: f64,
    rho: f64,
    trials: u32,
    validation_size: u32,
    seed: u32,
) -> Result<String, String> {
    let spec: SourceSpec = source.trim().parse().map_err(|e| format!("source: {e}"))?;
    let method: Method = method.trim().parse().map_err(|e| format!("method: {e}"))?;
    let p = params(gamma, epsilon, rho)?;
    let (trials, validation_size) = (trials as usize, validation_size as usize);
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must lie in 1..={MAX_TRIALS}"));
    }
    if validation_size == 0 || validation_size > MAX_VALIDATION {
        return Err(format!("validation size must lie in 1..={MAX_VALIDATION}"));
    }
    let n = method.sample_size(&p).map_err(|e| e.to_string())?.n_samples;
    if n > MAX_TRAINING {
        return Err(format!("{method} needs N = {n} training samples; the demo allows {MAX_TRAINING}"));
    }
    let mode = if spec.is_trajectory() {
        SamplingMode::SequentialTrajectory
    } else {
        SamplingMode::IidFresh
    };
    let plan = TrialPlan::new(spec, p, method, trials, validation_size, mode, u64::from(seed));
    let r = run_plan(&plan).map_err(|e| e.to_string())?;
    to_json(&SimulationSummary {
        source: r.metadata.source,
        sampling_mode: mode,
        method,
        n_samples: r.metadata.n_samples,
        n_trials: trials,
        band: (r.band.lower, r.band.upper),
        fraction_outside: r.fraction_outside,
        summary: r.summary,
        histogram: r.histogram,
    })
}

fn js(result: Result<String, String>) -> Result<String, JsValue> {
    result.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = sampleSizeCurve)]
pub fn sample_size_curve(epsilon: f64, rho: f64, steps: u32) -> Result<String, JsValue> {
    js(sample_size_curve_json(epsilon, rho, steps))
}

#[wasm_bindgen(js_name = guaranteeSummary)]
pub fn guarantee_summary(gamma: &str, epsilon: f64, rho: f64) -> Result<String, JsValue> {
    js(guarantee_summary_json(gamma, epsilon, rho))
}

#[wasm_bindgen(js_name = simulateFar)]
#[allow(clippy::too_many_arguments)]
pub fn simulate_far(
    source: &str,
    method: &str,
    gamma: &str,
    epsilon: f64,
    rho: f64,
    trials: u32,
    validation_size: u32,
    seed: u32,
) -> Result<String, JsValue> {
    js(simulate_far_json(source, method, gamma, epsilon, rho, trials, validation_size, seed))
}
