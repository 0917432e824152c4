//! Monte-Carlo estimates of `σ²(hₙ)`, the loss stability `γ(hₙ)`, the
//! relative stability `r(hₙ) = n γ / σ²` and the limiting constant `C` of
//! `n² γ(h^sing)`, plus log–log rate fits.
//!
//! `σ²` uses the product form `E[h(Z₀, Z)(h(Z₀, Z̃) − h(Z̃₀, Z̃))]` with
//! independent copies `Z̃₀, Z̃`. `γ` replaces the first training point and
//! uses the closed-form conditional risks in place of `E[h | Z]`.
//! Training sets are drawn as sufficient statistics (see
//! [`sample_gram_stats`]), split into inner-CV blocks when the learner
//! selects its penalty.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Learner;
use crate::linmodel::{sample_gram_stats, sample_point, DataPoint, GramStats, ModelSpec};
use crate::numeric::{mean_var, CompensatedSum};
use crate::rng::{Stream, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Sigma2,
    Gamma,
    R,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityEstimate {
    pub quantity: Quantity,
    pub value: f64,
    pub std_err: f64,
    pub replications: u64,
    /// Sample standard deviation of the per-replication contributions
    /// (0 for the ratio `r`).
    pub contribution_std: f64,
}

impl StabilityEstimate {
    fn from_contributions(quantity: Quantity, values: &[f64]) -> Self {
        let (value, var) = mean_var(values);
        let std = var.sqrt();
        Self {
            quantity,
            value,
            std_err: std / (values.len() as f64).sqrt(),
            replications: values.len() as u64,
            contribution_std: std,
        }
    }

    /// A nonnegative target estimated more than 3 standard errors below zero.
    pub fn is_suspect(&self) -> bool {
        self.quantity != Quantity::R && self.value < -3.0 * self.std_err
    }
}

/// Evaluates `f(0..m)` and returns the outputs in replication order.
///
/// With the `parallel` feature the work is spread over the current rayon
/// pool; the result does not depend on the pool size.
pub fn replicate<T, F>(m: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    let results: Vec<Result<T>> = {
        use rayon::prelude::*;
        (0..m).into_par_iter().map(&f).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<T>> = (0..m).map(&f).collect();
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| e.in_replication(i as u64)))
        .collect()
}

/// Runs `f` on a dedicated pool of `workers` threads (`None`: rayon's default).
#[cfg(feature = "parallel")]
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Config(format!("workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Serial build: the worker count is ignored.
#[cfg(not(feature = "parallel"))]
pub fn with_workers<T: Send>(_workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}

fn check_run(spec: &ModelSpec, learner: &Learner, n: usize, m: u64) -> Result<()> {
    learner.validate()?;
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("n and M must both be >= 1".into()));
    }
    if let Some(k1) = learner.inner_folds() {
        if n < k1 {
            return Err(Error::Config(format!("n = {n} cannot fill {k1} inner folds")));
        }
    }
    let _ = spec;
    Ok(())
}

fn block_sizes(n: usize, learner: &Learner) -> Vec<usize> {
    match learner.inner_folds().filter(|_| learner.selects_penalty()) {
        Some(k1) => (0..k1).map(|j| n / k1 + usize::from(j < n % k1)).collect(),
        None => vec![n],
    }
}

fn draw_training(spec: &ModelSpec, sizes: &[usize], rng: &mut Stream) -> Vec<GramStats> {
    sizes.iter().map(|&s| sample_gram_stats(spec, s, rng)).collect()
}

/// Monte-Carlo estimate of `σ²(hₙ) = Var(E[hₙ(Z₀, Z) | Z₀])`.
pub fn mc_sigma2(spec: &ModelSpec, learner: &Learner, n: usize, m: u64, key: StreamKey) -> Result<StabilityEstimate> {
    check_run(spec, learner, n, m)?;
    let sizes = block_sizes(n, learner);
    let values: Vec<f64> = replicate(m, |rep| {
        let mut rng = key.stream(rep);
        let z0 = sample_point(spec, &mut rng);
        let z0_tilde = sample_point(spec, &mut rng);
        let train = draw_training(spec, &sizes, &mut rng);
        let train_tilde = draw_training(spec, &sizes, &mut rng);
        let fit = learner.fit_blocks(&train)?;
        let fit_tilde = learner.fit_blocks(&train_tilde)?;
        Ok(fit.loss(&z0)? * (fit_tilde.loss(&z0)? - fit_tilde.loss(&z0_tilde)?))
    })?;
    Ok(StabilityEstimate::from_contributions(Quantity::Sigma2, &values))
}

/// Monte-Carlo estimate of the loss stability `γ(hₙ)`.
///
/// Each replication shares `n − 1` training points between `Z` and `Z′`
/// and differs in one point. With inner-CV blocks the replaced point sits
/// in a block chosen with probability proportional to its size.
pub fn mc_gamma(spec: &ModelSpec, learner: &Learner, n: usize, m: u64, key: StreamKey) -> Result<StabilityEstimate> {
    check_run(spec, learner, n, m)?;
    let sizes = block_sizes(n, learner);
    let values: Vec<f64> = replicate(m, |rep| {
        let mut rng = key.stream(rep);
        let z0 = sample_point(spec, &mut rng);
        let z1 = sample_point(spec, &mut rng);
        let z1_prime = sample_point(spec, &mut rng);
        let target = if sizes.len() == 1 {
            0
        } else {
            let pick = rng.random_range(0..n);
            let mut acc = 0;
            sizes
                .iter()
                .position(|&s| {
                    acc += s;
                    pick < acc
                })
                .expect("sizes sum to n")
        };
        let mut train = Vec::with_capacity(sizes.len());
        for (j, &s) in sizes.iter().enumerate() {
            let size = if j == target { s - 1 } else { s };
            train.push(sample_gram_stats(spec, size, &mut rng));
        }
        let mut train_prime = train.clone();
        train[target].add_point(&z1);
        train_prime[target].add_point(&z1_prime);
        let fit = learner.fit_blocks(&train)?;
        let fit_prime = learner.fit_blocks(&train_prime)?;
        let centered = fit.loss(&z0)? - fit.cond_risk(spec)?;
        let centered_prime = fit_prime.loss(&z0)? - fit_prime.cond_risk(spec)?;
        let d = centered - centered_prime;
        Ok(d * d)
    })?;
    Ok(StabilityEstimate::from_contributions(Quantity::Gamma, &values))
}

/// `E[(2 (Y₀ − X₀ᵀβ*) X₀ᵀV)²]` with `V = ε₁′X₁′ − ε₁X₁`, the limit of
/// `n² γ(h^sing)` for soft-thresholding with `λₙ = o(n)`.
pub fn mc_constant_c(spec: &ModelSpec, m: u64, key: StreamKey) -> Result<StabilityEstimate> {
    if m == 0 {
        return Err(Error::InvalidInput("M must be >= 1".into()));
    }
    let noise = |z: &DataPoint| z.y - z.x.dot(spec.beta_star());
    let values: Vec<f64> = replicate(m, |rep| {
        let mut rng = key.stream(rep);
        let z0 = sample_point(spec, &mut rng);
        let z1 = sample_point(spec, &mut rng);
        let z1_prime = sample_point(spec, &mut rng);
        let v: DVector<f64> = &z1_prime.x * noise(&z1_prime) - &z1.x * noise(&z1);
        let t = 2.0 * noise(&z0) * z0.x.dot(&v);
        Ok(t * t)
    })?;
    Ok(StabilityEstimate::from_contributions(Quantity::C, &values))
}

/// `r = n γ̂ / σ̂²` with the delta-method standard error
/// `(1/√M) √(n² s_γ² / σ̂⁴ + n² γ̂² s_σ² / σ̂⁸)`, where `s_γ`, `s_σ` are the
/// per-replication standard deviations and the two estimates are treated as
/// uncorrelated.
pub fn relative_stability(
    sigma2: &StabilityEstimate,
    gamma: &StabilityEstimate,
    n: usize,
) -> Result<StabilityEstimate> {
    if sigma2.quantity != Quantity::Sigma2 || gamma.quantity != Quantity::Gamma {
        return Err(Error::InvalidInput("expected a sigma2 and a gamma estimate".into()));
    }
    if !(sigma2.value > 0.0) {
        return Err(Error::Degenerate(format!(
            "sigma2 estimate is {}, not positive",
            sigma2.value
        )));
    }
    if sigma2.replications != gamma.replications {
        return Err(Error::InvalidInput(format!(
            "replication counts differ: {} vs {}",
            sigma2.replications, gamma.replications
        )));
    }
    let n = n as f64;
    let (x, sx) = (gamma.value, gamma.contribution_std);
    let (y, sy) = (sigma2.value, sigma2.contribution_std);
    let var = n * n * sx * sx / (y * y) + n * n * x * x * sy * sy / y.powi(4);
    Ok(StabilityEstimate {
        quantity: Quantity::R,
        value: n * x / y,
        std_err: var.sqrt() / (sigma2.replications as f64).sqrt(),
        replications: sigma2.replications,
        contribution_std: 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(usize, f64)>,
}

/// Least-squares line through `(log n, log value)`.
pub fn rate_fit(points: &[(usize, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "rate fit needs >= 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(n, v)) = points.iter().find(|(n, v)| *n == 0 || !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "rate fit needs positive n and values, got ({n}, {v})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().copied().collect::<CompensatedSum>().value() / k;
    let my = ys.iter().copied().collect::<CompensatedSum>().value() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("rate fit needs at least two distinct n".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: points.to_vec(),
    })
}
