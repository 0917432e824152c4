use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::output::{
    CltExperiment, CltSample, CltSummary, CoverageExperiment, CoverageMethod, CoverageRow, ExperimentResult,
    LambdaExperiment, LambdaRow, Metadata, RateExperiment, RateRow, ResultBody, StabilityPoint,
};
use super::ExperimentConfig;
use crate::cv::{ci_diff_conservative, ci_single, clt_statistic, fit_folds, make_folds, run_cv, CvRun};
use crate::error::{Error, Result};
use crate::estimators::Learner;
use crate::linmodel::sample_dataset;
use crate::numeric::{ks_distance_normal, mean_var};
use crate::rng::StreamKey;
use crate::stability::{mc_gamma, mc_sigma2, rate_fit, relative_stability, replicate, StabilityEstimate};

/// Wall-clock timer; reads zero where the platform has no clock.
struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        #[cfg(not(target_arch = "wasm32"))]
        return Stopwatch(std::time::Instant::now());
        #[cfg(target_arch = "wasm32")]
        return Stopwatch();
    }

    fn secs(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        return 0.0;
    }
}

fn sigma2_cache_path(config: &ExperimentConfig, n: usize, dir: &Path) -> PathBuf {
    let key = serde_json::json!({
        "what": "sigma2-v1",
        "spec": config.spec,
        "scenario": config.scenario,
        "mode": config.mode,
        "penalty": config.penalty,
        "delta": config.delta,
        "wiring": config.wiring,
        "n": n,
        "m": config.m_stability,
        "seed": config.seed,
    });
    let digest = Sha256::digest(key.to_string().as_bytes());
    let hex: String = digest.iter().take(12).map(|b| format!("{b:02x}")).collect();
    dir.join(format!("sigma2-{hex}.json"))
}

/// Monte-Carlo `σ²(hₙ)` for the config's learner, read from or written to
/// `cache_dir` when given. The cache key covers every input of the estimate.
pub fn sigma2_reference(config: &ExperimentConfig, n: usize, cache_dir: Option<&Path>) -> Result<StabilityEstimate> {
    let path = cache_dir.map(|d| sigma2_cache_path(config, n, d));
    if let Some(p) = &path {
        if let Ok(text) = std::fs::read_to_string(p) {
            if let Ok(est) = serde_json::from_str::<StabilityEstimate>(&text) {
                return Ok(est);
            }
        }
    }
    let est = mc_sigma2(
        &config.spec,
        &config.learner(),
        n,
        config.m_stability,
        StreamKey::labeled(config.seed, "sigma2", n as u64),
    )?;
    if let Some(p) = &path {
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(p, serde_json::to_string(&est).expect("estimate serializes"))?;
    }
    Ok(est)
}

fn rate_row(config: &ExperimentConfig, n: usize, cache_dir: Option<&Path>) -> Result<RateRow> {
    let sigma2 = sigma2_reference(config, n, cache_dir)?;
    let gamma = mc_gamma(
        &config.spec,
        &config.learner(),
        n,
        config.m_stability,
        StreamKey::labeled(config.seed, "gamma", n as u64),
    )?;
    let r = relative_stability(&sigma2, &gamma, n)?;
    Ok(RateRow { n, sigma2, gamma, r })
}

/// `σ²`, `γ` and `r` at one training size.
pub fn run_stability_point(config: &ExperimentConfig, n: usize, cache_dir: Option<&Path>) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Stopwatch::start();
    let row = rate_row(config, n, cache_dir)?;
    Ok(ExperimentResult {
        metadata: Metadata::new("stability", config, start.secs()),
        body: ResultBody::Stability(StabilityPoint { row }),
    })
}

/// `σ²`, `γ`, `r` across `n_grid` with log–log slopes.
pub fn run_rate_experiment(config: &ExperimentConfig, cache_dir: Option<&Path>) -> Result<ExperimentResult> {
    config.validate()?;
    if config.n_grid.len() < 3 {
        return Err(Error::Config("n_grid: rate experiments need at least 3 sizes".into()));
    }
    let start = Stopwatch::start();
    let rows = config
        .n_grid
        .iter()
        .map(|&n| rate_row(config, n, cache_dir))
        .collect::<Result<Vec<_>>>()?;
    let fit = |get: fn(&RateRow) -> f64| rate_fit(&rows.iter().map(|r| (r.n, get(r))).collect::<Vec<_>>());
    let fit_sigma2 = fit(|r| r.sigma2.value)?;
    let fit_gamma = fit(|r| r.gamma.value)?;
    let fit_r = fit(|r| r.r.value)?;
    Ok(ExperimentResult {
        metadata: Metadata::new("rates", config, start.secs()),
        body: ResultBody::Rates(RateExperiment {
            rows,
            fit_sigma2,
            fit_gamma,
            fit_r,
            normalized_at: config.normalize_at,
        }),
    })
}

/// `m_clt` independent CV runs on fresh datasets of size `N = nk/(k−1)`.
fn cv_replications(config: &ExperimentConfig, n: usize) -> Result<Vec<CvRun>> {
    let learner = config.learner();
    let total = config.total_size(n);
    let key = StreamKey::labeled(config.seed, "cv", n as u64);
    replicate(config.m_clt, |rep| {
        let mut rng = key.stream(rep);
        let data = sample_dataset(&config.spec, total, &mut rng)?;
        let plan = make_folds(total, config.k, &mut rng)?;
        let mut run = run_cv(&data, &plan, &learner, &config.spec)?;
        run.per_point_losses = Vec::new();
        Ok(run)
    })
}

/// Samples of `√N (R̂ₙ − Rₙ)/σ` with the Monte-Carlo `σ` and with the
/// within-fold `σ̂ₙ`, per training size.
pub fn run_clt_experiment(config: &ExperimentConfig, cache_dir: Option<&Path>) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Stopwatch::start();
    let mut samples = Vec::new();
    let mut summaries = Vec::new();
    for &n in &config.n_grid {
        let sigma2 = sigma2_reference(config, n, cache_dir)?;
        if !(sigma2.value > 0.0) {
            return Err(Error::Degenerate(format!(
                "Monte-Carlo sigma^2 at n = {n} is {}; the CLT statistic is undefined",
                sigma2.value
            )));
        }
        let sigma = sigma2.value.sqrt();
        let total = config.total_size(n);
        let runs = cv_replications(config, n)?;
        let mut stat_true = Vec::with_capacity(runs.len());
        let mut stat_hat = Vec::with_capacity(runs.len());
        for (rep, run) in runs.iter().enumerate() {
            let t = clt_statistic(run.r_hat, run.r_cond, sigma, total)?;
            let h = clt_statistic(run.r_hat, run.r_cond, run.sigma_hat_sq.sqrt(), total)
                .map_err(|e| e.in_replication(rep as u64))?;
            stat_true.push(t);
            stat_hat.push(h);
            samples.push(CltSample {
                n,
                rep: rep as u64,
                stat_true_sigma: t,
                stat_hat_sigma: h,
            });
        }
        let (mean_true_sigma, var_true_sigma) = mean_var(&stat_true);
        let (mean_hat_sigma, var_hat_sigma) = mean_var(&stat_hat);
        let errors: Vec<f64> = runs.iter().map(|r| r.r_hat - r.r_cond).collect();
        let sigma_hats: Vec<f64> = runs.iter().map(|r| r.sigma_hat_sq).collect();
        summaries.push(CltSummary {
            n,
            total_size: total,
            sigma2,
            mean_true_sigma,
            var_true_sigma,
            ks_true_sigma: ks_distance_normal(&stat_true),
            mean_hat_sigma,
            var_hat_sigma,
            ks_hat_sigma: ks_distance_normal(&stat_hat),
            mean_sigma_hat_sq: mean_var(&sigma_hats).0,
            scaled_error_var: total as f64 * mean_var(&errors).1,
        });
    }
    Ok(ExperimentResult {
        metadata: Metadata::new("clt", config, start.secs()),
        body: ResultBody::Clt(CltExperiment { samples, summaries }),
    })
}

/// Empirical coverage of CV confidence intervals for `Rₙ`: the plain
/// interval in single mode; in comparison mode the plain interval on the
/// loss difference and the conservative difference of two level `1 − α/2`
/// single-algorithm intervals.
pub fn run_coverage_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Stopwatch::start();
    let alpha = config.alpha;
    let mut rows = Vec::new();
    for &n in &config.n_grid {
        let total = config.total_size(n);
        let runs = cv_replications(config, n)?;
        let count = |method: CoverageMethod, covered: u64| CoverageRow {
            n,
            method,
            covered,
            total: runs.len() as u64,
        };
        let mut naive = 0u64;
        let mut prop1 = 0u64;
        for (rep, run) in runs.iter().enumerate() {
            let tag = |e: Error| e.in_replication(rep as u64);
            let ci = ci_single(run.r_hat, run.sigma_hat_sq.sqrt(), total, alpha).map_err(tag)?;
            naive += u64::from(ci.contains(run.r_cond));
            if let Some([a, b]) = &run.components {
                let ci1 = ci_single(a.r_hat, a.sigma_hat_sq.sqrt(), total, alpha / 2.0).map_err(tag)?;
                let ci2 = ci_single(b.r_hat, b.sigma_hat_sq.sqrt(), total, alpha / 2.0).map_err(tag)?;
                let wide = ci_diff_conservative(&ci1, &ci2)?;
                prop1 += u64::from(wide.contains(run.r_cond));
            }
        }
        match config.mode {
            super::Mode::Single => rows.push(count(CoverageMethod::Single, naive)),
            super::Mode::Comparison => {
                rows.push(count(CoverageMethod::NaiveDiff, naive));
                rows.push(count(CoverageMethod::Prop1Diff, prop1));
            }
        }
    }
    Ok(ExperimentResult {
        metadata: Metadata::new("coverage", config, start.secs()),
        body: ResultBody::Coverage(CoverageExperiment { rows }),
    })
}

/// Penalties selected by inner CV inside each outer fold, over `reps`
/// datasets per training size, and the slope of mean `log λ̂` in `log n`.
pub fn run_lambda_experiment(config: &ExperimentConfig, reps: u64) -> Result<ExperimentResult> {
    config.validate()?;
    let learner = Learner::Single(config.estimator());
    if !learner.selects_penalty() {
        return Err(Error::Config(
            "penalty: lambda experiments need an inner-cv penalty rule".into(),
        ));
    }
    if reps == 0 {
        return Err(Error::Config("reps: must be >= 1".into()));
    }
    let start = Stopwatch::start();
    let mut rows = Vec::new();
    for &n in &config.n_grid {
        let total = config.total_size(n);
        let key = StreamKey::labeled(config.seed, "lambda", n as u64);
        let per_rep: Vec<Vec<f64>> = replicate(reps, |rep| {
            let mut rng = key.stream(rep);
            let data = sample_dataset(&config.spec, total, &mut rng)?;
            let plan = make_folds(total, config.k, &mut rng)?;
            let fits = fit_folds(&data, &plan, &learner)?;
            Ok(fits.fits().iter().map(|f| f.first.lambda_used).collect())
        })?;
        let lambdas: Vec<f64> = per_rep.concat();
        let logs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
        rows.push(LambdaRow {
            n,
            mean_log_lambda: mean_var(&logs).0,
            lambdas,
        });
    }
    let fit = rate_fit(&rows.iter().map(|r| (r.n, r.mean_log_lambda.exp())).collect::<Vec<_>>())?;
    Ok(ExperimentResult {
        metadata: Metadata::new("lambdas", config, start.secs()),
        body: ResultBody::Lambdas(LambdaExperiment { rows, fit }),
    })
}
