//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers and strings and returns a JSON document,
//! so the page needs no generated type definitions. The same functions are
//! available natively (without the `_json` suffix) for testing.

use omc::baselines::{sequential_omc, smc_abc, EpsilonSchedule, SamplerRun};
use omc::kernel::DiscrepancyKernel;
use omc::optimize::{Method, OptimizerConfig};
use omc::parallel::{mix_seed, ParticleSeedStream, RunPlan, StreamLabel};
use omc::simulators::{build, Simulator, SimulatorOptions};
use omc::summary::{coordinate, weighted_histogram};
use omc::types::SeedVector;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Upper bound on particles per request, to keep the page responsive.
pub const MAX_PARTICLES: usize = 5000;
const SMC_BUDGET: u64 = 20_000;

fn simulator(name: &str) -> Result<Box<dyn Simulator>, String> {
    let sim = build(name, &SimulatorOptions::default()).map_err(|e| e.to_string())?;
    if sim.d_theta() != 1 {
        return Err(format!("the demo only plots one-parameter models, {name} has {}", sim.d_theta()));
    }
    Ok(sim)
}

fn kernel(sim: &dyn Simulator, eps: f64) -> Result<DiscrepancyKernel, String> {
    match sim.default_scale() {
        Some(s) => DiscrepancyKernel::with_scale(eps, s),
        None => DiscrepancyKernel::new(eps),
    }
    .map_err(|e| e.to_string())
}

fn optimizer(sim: &dyn Simulator) -> OptimizerConfig {
    let method = if sim.d_theta() == sim.d_y() {
        Method::Newton
    } else {
        Method::GaussNewton
    };
    OptimizerConfig::with_method(method)
}

fn check_n(n: usize) -> Result<(), String> {
    if n == 0 || n > MAX_PARTICLES {
        return Err(format!("n must be in 1..={MAX_PARTICLES}, got {n}"));
    }
    Ok(())
}

fn sample(sim: &dyn Simulator, algorithm: &str, n: usize, seed: u64) -> Result<SamplerRun, String> {
    let y = &sim.observed().0;
    let schedule = EpsilonSchedule::new(sim.default_schedule()).map_err(|e| e.to_string())?;
    let kernel = kernel(sim, schedule.last())?;
    let config = optimizer(sim);
    match algorithm {
        "omc" => sequential_omc(&RunPlan::batch(seed, n, 1, config.max_sims_per_round), sim, y, &kernel, &config, &schedule),
        "smc" => smc_abc(&RunPlan::batch(seed, n, 1, SMC_BUDGET), sim, y, &kernel, &schedule),
        other => return Err(format!("unknown algorithm '{other}', expected omc or smc")),
    }
    .map_err(|e| e.to_string())
}

/// Weighted posterior histogram of `θ` at the final ε of the model's default
/// schedule, plus summary metrics.
pub fn posterior(sim_name: &str, algorithm: &str, n: usize, seed: u64) -> Result<Value, String> {
    check_n(n)?;
    let sim = simulator(sim_name)?;
    let run = sample(&*sim, algorithm, n, seed)?;
    let ens = run.ensemble();
    let bins = weighted_histogram(&coordinate(ens, 0), ens.weights(), 60).map_err(|e| e.to_string())?;
    let last = &run.last().report;
    Ok(json!({
        "simulator": sim_name,
        "algorithm": algorithm,
        "epsilon": last.epsilon,
        "n": n,
        "accepted": ens.accepted_count(),
        "ess_over_n": ens.ess_over_n(),
        "ss": last.ss_mean,
        "mean": ens.mean()[0],
        "bins": bins,
    }))
}

/// Simulation cost per accepted sample of sequential OMC and SMC for every
/// round of the default schedule.
pub fn compare(sim_name: &str, n: usize, seed: u64) -> Result<Value, String> {
    check_n(n)?;
    let sim = simulator(sim_name)?;
    let omc = sample(&*sim, "omc", n, seed)?.reports();
    let smc = sample(&*sim, "smc", n, seed)?.reports();
    let rows: Vec<Value> = omc
        .iter()
        .zip(&smc)
        .map(|(o, s)| {
            json!({
                "epsilon": o.epsilon,
                "omc_ss": o.ss_mean,
                "smc_ss": s.ss_mean,
                "omc_ess_over_n": o.ess_over_n,
                "smc_ess_over_n": s.ess_over_n,
            })
        })
        .collect();
    Ok(json!({ "simulator": sim_name, "n": n, "rows": rows }))
}

/// Curves `θ ↦ f(θ, u_i)` for a few fixed seeds over the central prior range,
/// with the observed value and each seed's optimum. This is the picture
/// behind the method: every seed turns the simulator into a deterministic
/// curve, and OMC solves for where it crosses `y`.
pub fn seed_geometry(sim_name: &str, seeds: usize, seed: u64) -> Result<Value, String> {
    if seeds == 0 || seeds > 20 {
        return Err(format!("seeds must be in 1..=20, got {seeds}"));
    }
    let sim = simulator(sim_name)?;
    let y = sim.observed().0.clone();
    // central 95% of 400 prior draws
    let mut draw = ParticleSeedStream::new(mix_seed(seed, 1), 0).rng(StreamLabel::Init);
    let mut draws: Vec<f64> = (0..400).map(|_| sim.prior().sample(&mut draw)[0]).collect();
    draws.sort_by(f64::total_cmp);
    let (lo, hi) = (draws[10], draws[389]);
    let grid: Vec<f64> = (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).collect();
    let config = optimizer(&*sim);
    let kernel = kernel(&*sim, f64::MAX)?;

    let mut curves = Vec::new();
    for i in 0..seeds {
        let streams = ParticleSeedStream::new(seed, i as u64);
        let u = SeedVector::sample(sim.d_u(), &mut streams.rng(StreamLabel::Seed));
        let values: Vec<Option<f64>> = grid
            .iter()
            .map(|&t| sim.forward(&[t], &u).ok().map(|f| f.0[0]))
            .collect();
        let theta0 = sim.prior().sample(&mut streams.rng(StreamLabel::Init));
        let result = omc::optimize::optimize(&*sim, &y, &u, &kernel, &config, theta0, streams.rng(StreamLabel::Proposal))
            .map_err(|e| e.to_string())?;
        curves.push(json!({
            "values": values,
            "theta_opt": result.theta_opt.0[0],
            "discrepancy": result.discrepancy,
        }));
    }
    Ok(json!({ "simulator": sim_name, "observed": y[0], "grid": grid, "curves": curves }))
}

fn to_js(result: Result<Value, String>) -> Result<String, JsValue> {
    result
        .map(|v| v.to_string())
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn posterior_json(sim: &str, algorithm: &str, n: usize, seed: u32) -> Result<String, JsValue> {
    to_js(posterior(sim, algorithm, n, seed as u64))
}

#[wasm_bindgen]
pub fn compare_json(sim: &str, n: usize, seed: u32) -> Result<String, JsValue> {
    to_js(compare(sim, n, seed as u64))
}

#[wasm_bindgen]
pub fn seed_geometry_json(sim: &str, seeds: usize, seed: u32) -> Result<String, JsValue> {
    to_js(seed_geometry(sim, seeds, seed as u64))
}
