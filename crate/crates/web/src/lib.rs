//! WebAssembly bindings for the browser demo in `www/`. Every export takes
//! plain numbers and strings and returns a JSON string.

use nalgebra::DVector;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use relstab::estimators::{coordinate_descent, soft_threshold, EstimatorConfig, LassoSettings};
use relstab::harness::{run_clt_experiment, run_rate_experiment, ExperimentConfig, Mode, ResultBody, Scenario};
use relstab::linmodel::{sample_dataset, ModelSpec};
use relstab::rng::StreamKey;

fn config(scenario: &str, mode: &str, seed: u64) -> Result<ExperimentConfig, String> {
    let scenario: Scenario = scenario.parse().map_err(|e: relstab::Error| e.to_string())?;
    let mode: Mode = mode.parse().map_err(|e: relstab::Error| e.to_string())?;
    if scenario == Scenario::LassoInnercv {
        return Err("the demo runs the fixed-penalty scenarios only".into());
    }
    let mut cfg = ExperimentConfig::preset(scenario, mode);
    cfg.seed = seed;
    Ok(cfg)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

#[derive(Serialize)]
struct RatePoint {
    n: usize,
    sigma2: f64,
    sigma2_se: f64,
    gamma: f64,
    gamma_se: f64,
    r: f64,
    r_se: f64,
}

#[derive(Serialize)]
struct Rates {
    points: Vec<RatePoint>,
    slope_sigma2: f64,
    slope_gamma: f64,
    slope_r: f64,
}

/// `σ²`, `γ` and `r` on a grid of training sizes with `m` Monte-Carlo
/// replications each. `n_grid` is comma-separated.
#[wasm_bindgen]
pub fn stability_rates(scenario: &str, mode: &str, n_grid: &str, m: u32, seed: u64) -> Result<String, JsError> {
    let mut cfg = config(scenario, mode, seed).map_err(|e| JsError::new(&e))?;
    cfg.n_grid = n_grid
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| JsError::new(&format!("n_grid: {e}")))?;
    cfg.m_stability = u64::from(m);
    let res = run_rate_experiment(&cfg, None).map_err(|e| JsError::new(&e.to_string()))?;
    let ResultBody::Rates(r) = res.body else { unreachable!() };
    Ok(to_json(&Rates {
        points: r
            .rows
            .iter()
            .map(|row| RatePoint {
                n: row.n,
                sigma2: row.sigma2.value,
                sigma2_se: row.sigma2.std_err,
                gamma: row.gamma.value,
                gamma_se: row.gamma.std_err,
                r: row.r.value,
                r_se: row.r.std_err,
            })
            .collect(),
        slope_sigma2: r.fit_sigma2.slope,
        slope_gamma: r.fit_gamma.slope,
        slope_r: r.fit_r.slope,
    }))
}

#[derive(Serialize)]
struct CltSamples {
    n: usize,
    sigma2: f64,
    stat_true_sigma: Vec<f64>,
    stat_hat_sigma: Vec<f64>,
    var_true_sigma: f64,
    var_hat_sigma: f64,
}

/// Normalized CV errors `√N (R̂ₙ − Rₙ)/σ` and `/σ̂ₙ` over `reps` datasets.
#[wasm_bindgen]
pub fn clt_samples(scenario: &str, mode: &str, n: u32, reps: u32, m: u32, seed: u64) -> Result<String, JsError> {
    let mut cfg = config(scenario, mode, seed).map_err(|e| JsError::new(&e))?;
    cfg.n_grid = vec![n as usize];
    cfg.m_clt = u64::from(reps);
    cfg.m_stability = u64::from(m);
    let res = run_clt_experiment(&cfg, None).map_err(|e| JsError::new(&e.to_string()))?;
    let ResultBody::Clt(c) = res.body else { unreachable!() };
    let s = &c.summaries[0];
    Ok(to_json(&CltSamples {
        n: s.n,
        sigma2: s.sigma2.value,
        stat_true_sigma: c.samples.iter().map(|x| x.stat_true_sigma).collect(),
        stat_hat_sigma: c.samples.iter().map(|x| x.stat_hat_sigma).collect(),
        var_true_sigma: s.var_true_sigma,
        var_hat_sigma: s.var_hat_sigma,
    }))
}

#[derive(Serialize)]
struct Path {
    lambdas: Vec<f64>,
    /// `[λ index][coordinate]`
    soft_threshold: Vec<Vec<f64>>,
    lasso: Vec<Vec<f64>>,
    beta_star: Vec<f64>,
}

/// Soft-thresholding and Lasso coefficient paths on one dataset of size `n`
/// from the scenario's model, over `points` log-spaced penalties up to `λ_max`.
#[wasm_bindgen]
pub fn coefficient_paths(scenario: &str, n: u32, points: u32, seed: u64) -> Result<String, JsError> {
    let cfg = config(scenario, "single", seed).map_err(|e| JsError::new(&e))?;
    let spec: ModelSpec = cfg.spec.clone();
    let n = n as usize;
    let data = sample_dataset(&spec, n, &mut StreamKey::labeled(seed, "paths", n as u64).stream(0))
        .map_err(|e| JsError::new(&e.to_string()))?;
    let stats = data.gram_stats();
    let ols = EstimatorConfig::ols()
        .fit_stats(&stats)
        .map_err(|e| JsError::new(&e.to_string()))?
        .beta_hat;
    let lambda_max = stats.xty.amax().max(n as f64 * ols.amax()) * 1.05;
    let points = points.max(2) as usize;
    let lambdas: Vec<f64> = (0..points)
        .map(|i| lambda_max * 10f64.powf(-3.0 * (points - 1 - i) as f64 / (points - 1) as f64))
        .collect();
    let settings = LassoSettings::default();
    let mut warm: Option<DVector<f64>> = None;
    let mut lasso = Vec::with_capacity(points);
    let mut st = Vec::with_capacity(points);
    for &lam in lambdas.iter().rev() {
        let out = coordinate_descent(&stats, lam, &settings, warm.as_ref(), false)
            .map_err(|e| JsError::new(&e.to_string()))?;
        lasso.push(out.beta.as_slice().to_vec());
        warm = Some(out.beta);
        st.push(
            soft_threshold(&ols, lam, n)
                .map_err(|e| JsError::new(&e.to_string()))?
                .as_slice()
                .to_vec(),
        );
    }
    lasso.reverse();
    st.reverse();
    Ok(to_json(&Path {
        lambdas,
        soft_threshold: st,
        lasso,
        beta_star: spec.beta_star().as_slice().to_vec(),
    }))
}
