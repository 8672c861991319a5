//! Browser bindings for the demo page in `www/`. Each export takes plain
//! numbers and returns a JSON string ready for plotting.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use holder_embed::holder::{norm_convergence_curve, ConvergenceVerdict};
use holder_embed::pipeline::{difference_profiles, replication_envelopes};
use holder_embed::stats;
use holder_embed::{
    fit_scaling, generate_ensemble, modulus_profile, sqrt_scale, uniform_deviations, Generator, GeneratorKind,
};

const DEMO_N_SEQ: usize = 8;
const DEMO_REPS: usize = 20;

/// Caps keeping a single call responsive in the browser.
const MAX_M: usize = 2048;
const MAX_DONSKER_WORK: usize = 1 << 24;

type DemoResult = Result<String, String>;

fn kind(name: &str) -> Result<GeneratorKind, String> {
    name.parse().map_err(|e: holder_embed::Error| e.to_string())
}

fn check_m(m: usize) -> Result<(), String> {
    if m == 0 || m > MAX_M {
        return Err(format!("m must be in 1..={MAX_M}"));
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> DemoResult {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ModulusView {
    limit: Vec<f64>,
    difference: Vec<f64>,
    modulus: Vec<f64>,
    g: Vec<f64>,
    sqrt_g: Vec<f64>,
}

pub fn modulus_view(kind_name: &str, m: usize, seed: u64) -> DemoResult {
    check_m(m)?;
    let e = generate_ensemble(&Generator::new(kind(kind_name)?), m, DEMO_N_SEQ, DEMO_REPS, seed)
        .map_err(|e| e.to_string())?;
    let envs = replication_envelopes(&difference_profiles(&e));
    let g = fit_scaling(&envs, 0.95).map_err(|e| e.to_string())?;
    let diff = e.member(0, 1).subtract(e.limit(0)).map_err(|e| e.to_string())?;
    to_json(&ModulusView {
        limit: e.limit(0).values().to_vec(),
        modulus: modulus_profile(&diff).values().to_vec(),
        difference: diff.into_values(),
        sqrt_g: sqrt_scale(&g).values().to_vec(),
        g: g.values().to_vec(),
    })
}

#[derive(Serialize)]
struct CurveView {
    n: Vec<usize>,
    mean_sup: Vec<f64>,
    mean_holder: Vec<Option<f64>>,
    non_members: usize,
    verdict: ConvergenceVerdict,
}

pub fn convergence_view(kind_name: &str, m: usize, n_seq: usize, reps: usize, seed: u64, quantile: f64) -> DemoResult {
    check_m(m)?;
    if n_seq == 0 || reps == 0 || n_seq * reps > 4096 {
        return Err("need 1 <= N * R <= 4096".into());
    }
    let e = generate_ensemble(&Generator::new(kind(kind_name)?), m, n_seq, reps, seed).map_err(|e| e.to_string())?;
    let envs = replication_envelopes(&difference_profiles(&e));
    let g = fit_scaling(&envs, quantile).map_err(|e| e.to_string())?;
    let curve = norm_convergence_curve(&e, &g, 0.1).map_err(|e| e.to_string())?;
    let zeta = uniform_deviations(&e);
    let mean_sup = (0..n_seq).map(|n| stats::mean(&zeta.iter().map(|row| row[n]).collect::<Vec<_>>())).collect();
    to_json(&CurveView {
        n: (1..=n_seq).collect(),
        mean_sup,
        mean_holder: curve.per_n.iter().map(|p| p.mean_norm).collect(),
        non_members: curve.per_n.iter().map(|p| p.non_members).sum(),
        verdict: curve.verdict,
    })
}

#[derive(Serialize)]
struct DonskerView {
    steps: usize,
    reps: usize,
    mean: f64,
    reference: f64,
    mc_band: f64,
    hist_edges: Vec<f64>,
    hist_counts: Vec<usize>,
}

/// Mean running maximum of `reps` rescaled ±1 walks of `steps` steps.
pub fn donsker_view(steps: usize, reps: usize, seed: u64) -> DemoResult {
    if steps == 0 || reps < 2 || steps.saturating_mul(reps) > MAX_DONSKER_WORK {
        return Err(format!("need steps >= 1, reps >= 2, steps * reps <= {MAX_DONSKER_WORK}"));
    }
    let m = steps.min(MAX_M);
    let gen = Generator::new(GeneratorKind::Donsker).with_block(steps);
    let e = generate_ensemble(&gen, m, 1, reps, seed).map_err(|e| e.to_string())?;
    let maxima: Vec<f64> = (0..reps).map(|r| e.member(r, 1).max_value()).collect();
    let bins = 30;
    let top = stats::quantile(&maxima, 1.0).max(1e-12);
    let width = top / bins as f64;
    let mut hist_counts = vec![0; bins];
    for &v in &maxima {
        hist_counts[((v / width) as usize).min(bins - 1)] += 1;
    }
    to_json(&DonskerView {
        steps,
        reps,
        mean: stats::mean(&maxima),
        reference: (2.0 / std::f64::consts::PI).sqrt(),
        mc_band: 3.0 * stats::sample_std(&maxima) / (reps as f64).sqrt(),
        hist_edges: (0..=bins).map(|i| i as f64 * width).collect(),
        hist_counts,
    })
}

#[wasm_bindgen(js_name = modulusView)]
pub fn modulus_view_js(kind_name: &str, m: usize, seed: u64) -> Result<String, JsValue> {
    modulus_view(kind_name, m, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = convergenceView)]
pub fn convergence_view_js(
    kind_name: &str,
    m: usize,
    n_seq: usize,
    reps: usize,
    seed: u64,
    quantile: f64,
) -> Result<String, JsValue> {
    convergence_view(kind_name, m, n_seq, reps, seed, quantile).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = donskerView)]
pub fn donsker_view_js(steps: usize, reps: usize, seed: u64) -> Result<String, JsValue> {
    donsker_view(steps, reps, seed).map_err(|e| JsValue::from_str(&e))
}
