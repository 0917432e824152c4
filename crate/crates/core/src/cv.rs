//! K-fold cross-validation: fold plans, the CV error, the fold-conditional
//! test error it estimates, the within-fold variance estimate, the CLT
//! statistic and confidence intervals.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Fitted, Learner};
use crate::linmodel::{Dataset, GramStats, ModelSpec};
use crate::numeric::{mean_var, normal_quantile, CompensatedSum};

/// A partition of `0..total_size` into `k` equal folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    total_size: usize,
    k: usize,
    folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Validates that `folds` is an equal-size exact partition of `0..total_size`.
    pub fn from_folds(total_size: usize, folds: Vec<Vec<usize>>) -> Result<Self> {
        let k = folds.len();
        if k < 2 {
            return Err(Error::Config(format!("need k >= 2 folds, got {k}")));
        }
        let size = folds[0].len();
        if size == 0 || folds.iter().any(|f| f.len() != size) || size * k != total_size {
            return Err(Error::Config(
                "folds must have equal non-zero sizes summing to the total".into(),
            ));
        }
        let mut seen = vec![false; total_size];
        for &i in folds.iter().flatten() {
            if i >= total_size || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Config(format!("index {i} is out of range or repeated")));
            }
        }
        Ok(Self { total_size, k, folds })
    }

    pub fn total_size(&self) -> usize {
        self.total_size
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Training-set size `n = N (k − 1) / k`.
    pub fn train_size(&self) -> usize {
        self.total_size - self.fold_size()
    }

    pub fn fold_size(&self) -> usize {
        self.total_size / self.k
    }

    pub fn folds(&self) -> &[Vec<usize>] {
        &self.folds
    }
}

/// Uniformly random equal-size partition of `0..total_size` into `k` folds.
pub fn make_folds<R: Rng + ?Sized>(total_size: usize, k: usize, rng: &mut R) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("need k >= 2 folds, got {k}")));
    }
    if total_size == 0 || !total_size.is_multiple_of(k) {
        return Err(Error::Config(format!("k = {k} does not divide N = {total_size}")));
    }
    let mut order: Vec<usize> = (0..total_size).collect();
    order.shuffle(rng);
    let size = total_size / k;
    let folds = order.chunks(size).map(<[usize]>::to_vec).collect();
    Ok(FoldPlan { total_size, k, folds })
}

/// The per-fold fits shared by the CV error, the test error and the
/// variance estimate.
#[derive(Debug, Clone)]
pub struct FoldFits {
    fits: Vec<Fitted>,
}

impl FoldFits {
    pub fn fits(&self) -> &[Fitted] {
        &self.fits
    }
}

/// Fits `learner` once per fold on the complement of that fold. Penalties
/// chosen by inner CV use the remaining `k − 1` folds as the inner folds.
pub fn fit_folds(data: &Dataset, plan: &FoldPlan, learner: &Learner) -> Result<FoldFits> {
    check_plan(data, plan)?;
    let stats: Vec<GramStats> = plan.folds.iter().map(|rows| data.gram_stats_of(rows)).collect();
    let fits = (0..plan.k)
        .map(|j| {
            let others: Vec<GramStats> = stats
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, s)| s.clone())
                .collect();
            learner.fit_blocks(&others).map_err(|e| e.in_fold(j))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FoldFits { fits })
}

fn check_plan(data: &Dataset, plan: &FoldPlan) -> Result<()> {
    if data.n() != plan.total_size {
        return Err(Error::InvalidInput(format!(
            "dataset has {} rows but the fold plan covers {}",
            data.n(),
            plan.total_size
        )));
    }
    Ok(())
}

/// Per-point held-out losses grouped by fold and their mean `R̂ₙ`.
pub fn cv_error(data: &Dataset, plan: &FoldPlan, fits: &FoldFits) -> Result<(f64, Vec<Vec<f64>>)> {
    check_plan(data, plan)?;
    let losses = plan
        .folds
        .iter()
        .zip(&fits.fits)
        .map(|(rows, fit)| {
            rows.iter()
                .map(|&i| fit.loss(&data.point(i)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let total: CompensatedSum = losses.iter().flatten().copied().collect();
    Ok((total.value() / plan.total_size as f64, losses))
}

/// `Rₙ`: the fold average of the closed-form conditional risks.
pub fn cv_test_error(fits: &FoldFits, spec: &ModelSpec) -> Result<f64> {
    let sum: CompensatedSum = fits
        .fits
        .iter()
        .map(|f| f.cond_risk(spec))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();
    Ok(sum.value() / fits.fits.len() as f64)
}

/// Mean over folds of the unbiased sample variance of the held-out losses.
pub fn within_fold_variance(losses_by_fold: &[Vec<f64>]) -> Result<f64> {
    if losses_by_fold.is_empty() {
        return Err(Error::Config("no folds".into()));
    }
    if let Some(j) = losses_by_fold.iter().position(|f| f.len() < 2) {
        return Err(Error::Config(format!("fold {j} has fewer than 2 points")));
    }
    let sum: CompensatedSum = losses_by_fold.iter().map(|f| mean_var(f).1).collect();
    Ok(sum.value() / losses_by_fold.len() as f64)
}

/// CV quantities of one algorithm of a comparison, evaluated on the same fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentRun {
    pub r_hat: f64,
    pub r_cond: f64,
    pub sigma_hat_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvRun {
    pub r_hat: f64,
    pub r_cond: f64,
    pub sigma_hat_sq: f64,
    pub per_point_losses: Vec<Vec<f64>>,
    pub lambda_per_fold: Vec<f64>,
    /// For comparisons: the two single-algorithm runs behind the difference.
    pub components: Option<[ComponentRun; 2]>,
}

/// Full CV run with one set of per-fold fits.
pub fn run_cv(data: &Dataset, plan: &FoldPlan, learner: &Learner, spec: &ModelSpec) -> Result<CvRun> {
    let fits = fit_folds(data, plan, learner)?;
    let (r_hat, losses) = cv_error(data, plan, &fits)?;
    let r_cond = cv_test_error(&fits, spec)?;
    let sigma_hat_sq = within_fold_variance(&losses)?;
    let lambda_per_fold = fits.fits.iter().map(|f| f.first.lambda_used).collect();
    let components = if learner.is_comparison() {
        Some([
            component(data, plan, &fits, spec, 0)?,
            component(data, plan, &fits, spec, 1)?,
        ])
    } else {
        None
    };
    Ok(CvRun {
        r_hat,
        r_cond,
        sigma_hat_sq,
        per_point_losses: losses,
        lambda_per_fold,
        components,
    })
}

fn component(data: &Dataset, plan: &FoldPlan, fits: &FoldFits, spec: &ModelSpec, which: usize) -> Result<ComponentRun> {
    let pick = |f: &Fitted| -> Fitted {
        let chosen = if which == 0 {
            f.first.clone()
        } else {
            f.second.clone().expect("comparison fit")
        };
        Fitted {
            first: chosen,
            second: None,
        }
    };
    let single = FoldFits {
        fits: fits.fits.iter().map(pick).collect(),
    };
    let (r_hat, losses) = cv_error(data, plan, &single)?;
    Ok(ComponentRun {
        r_hat,
        r_cond: cv_test_error(&single, spec)?,
        sigma_hat_sq: within_fold_variance(&losses)?,
    })
}

/// `√N (R̂ₙ − Rₙ) / σ`
pub fn clt_statistic(r_hat: f64, r_cond: f64, sigma: f64, total_size: usize) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Degenerate(format!("sigma must be positive, got {sigma}")));
    }
    Ok((total_size as f64).sqrt() * (r_hat - r_cond) / sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

impl ConfInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `R̂ₙ ± z_{1−α/2} σ̂ / √N` at level `1 − α`.
pub fn ci_single(r_hat: f64, sigma_hat: f64, total_size: usize, alpha: f64) -> Result<ConfInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sigma_hat must be positive, got {sigma_hat}"
        )));
    }
    if total_size == 0 {
        return Err(Error::InvalidInput("total size must be >= 1".into()));
    }
    let half = normal_quantile(1.0 - alpha / 2.0) * sigma_hat / (total_size as f64).sqrt();
    Ok(ConfInterval {
        lo: r_hat - half,
        hi: r_hat + half,
        level: 1.0 - alpha,
    })
}

/// `[lo₁ − hi₂, hi₁ − lo₂]`: two intervals at level `1 − α/2` give a
/// level `1 − α` interval for the difference of their targets.
pub fn ci_diff_conservative(ci1: &ConfInterval, ci2: &ConfInterval) -> Result<ConfInterval> {
    if (ci1.level - ci2.level).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "interval levels differ: {} vs {}",
            ci1.level, ci2.level
        )));
    }
    Ok(ConfInterval {
        lo: ci1.lo - ci2.hi,
        hi: ci1.hi - ci2.lo,
        level: 2.0 * ci1.level - 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{EstimatorConfig, PairWiring, PenaltyRule};
    use crate::linmodel::sample_dataset;
    use crate::rng::StreamKey;

    #[test]
    fn fold_plans() {
        let mut rng = StreamKey::new(1, 1).stream(0);
        let plan = make_folds(100, 10, &mut rng).unwrap();
        assert_eq!(plan.folds().len(), 10);
        assert!(plan.folds().iter().all(|f| f.len() == 10));
        let mut all: Vec<usize> = plan.folds().concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(plan.train_size(), 90);
        let small = make_folds(4, 2, &mut rng).unwrap();
        assert!(small.folds().iter().all(|f| f.len() == 2));
        assert!(matches!(make_folds(10, 3, &mut rng), Err(Error::Config(_))));
        assert!(make_folds(10, 1, &mut rng).is_err());
        assert!(FoldPlan::from_folds(4, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(FoldPlan::from_folds(4, vec![vec![0, 1], vec![3, 2]]).is_ok());
    }

    #[test]
    fn variance_examples() {
        assert_eq!(
            within_fold_variance(&[vec![1.0, 1.0], vec![1.0, 1.0, 1.0]]).unwrap(),
            0.0
        );
        assert_eq!(within_fold_variance(&[vec![0.0, 2.0], vec![1.0, 3.0]]).unwrap(), 2.0);
        assert!(within_fold_variance(&[vec![0.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn clt_and_intervals() {
        assert_eq!(clt_statistic(1.0, 1.0, 2.0, 50).unwrap(), 0.0);
        assert!((clt_statistic(0.1, 0.0, 1.0, 100).unwrap() - 1.0).abs() < 1e-12);
        assert!(clt_statistic(0.1, 0.0, 0.0, 100).is_err());
        let ci = ci_single(0.0, 1.0, 100, 0.05).unwrap();
        assert!((ci.hi - 0.195_996_398_454_005_4).abs() < 1e-10 && (ci.lo + ci.hi).abs() < 1e-15);
        assert!(ci_single(0.0, 1.0, 100, 1.0).is_err());
        assert!(ci_single(0.0, 1.0, 100, 0.0).is_err());
        let nearly_one = ci_single(0.0, 1.0, 100, 1.0 - 1e-9).unwrap();
        assert!(nearly_one.width() < 1e-9);
        let a = ConfInterval {
            lo: 1.0,
            hi: 3.0,
            level: 0.975,
        };
        let b = ConfInterval {
            lo: 0.0,
            hi: 1.0,
            level: 0.975,
        };
        let d = ci_diff_conservative(&a, &b).unwrap();
        assert_eq!((d.lo, d.hi), (0.0, 3.0));
        assert!((d.level - 0.95).abs() < 1e-12);
        let same = ci_diff_conservative(&a, &a).unwrap();
        assert_eq!((same.lo, same.hi), (-2.0, 2.0));
        let other = ConfInterval { level: 0.95, ..b };
        assert!(ci_diff_conservative(&a, &other).is_err());
    }

    #[test]
    fn zero_predictor_reduces_to_closed_forms() {
        let spec = ModelSpec::sparse_default();
        let data = sample_dataset(&spec, 100, &mut StreamKey::new(2, 1).stream(0)).unwrap();
        let plan = make_folds(100, 10, &mut StreamKey::new(2, 2).stream(0)).unwrap();
        let learner = Learner::Single(EstimatorConfig::st(PenaltyRule::Fixed { value: 1e12 }));
        let run = run_cv(&data, &plan, &learner, &spec).unwrap();
        let mean_y2 = data.y().iter().map(|y| y * y).sum::<f64>() / 100.0;
        assert!((run.r_hat - mean_y2).abs() <= 1e-12 * mean_y2);
        let closed = spec.tau().powi(2) + spec.beta_star().norm_squared();
        assert_eq!(run.r_cond, closed);
    }

    #[test]
    fn identical_comparison_is_exactly_zero() {
        let spec = ModelSpec::sparse_default();
        let data = sample_dataset(&spec, 100, &mut StreamKey::new(3, 1).stream(0)).unwrap();
        let plan = make_folds(100, 10, &mut StreamKey::new(3, 2).stream(0)).unwrap();
        let c = EstimatorConfig::st(PenaltyRule::sqrt_n());
        let learner = Learner::Comparison {
            first: c.clone(),
            second: c,
            wiring: PairWiring::default(),
        };
        let run = run_cv(&data, &plan, &learner, &spec).unwrap();
        assert_eq!(run.r_hat, 0.0);
        assert_eq!(run.r_cond, 0.0);
        assert_eq!(run.sigma_hat_sq, 0.0);
    }

    #[test]
    fn mismatched_plan_rejected() {
        let spec = ModelSpec::sparse_default();
        let data = sample_dataset(&spec, 50, &mut StreamKey::new(3, 3).stream(0)).unwrap();
        let plan = make_folds(100, 10, &mut StreamKey::new(3, 4).stream(0)).unwrap();
        let learner = Learner::Single(EstimatorConfig::ols());
        assert!(run_cv(&data, &plan, &learner, &spec).is_err());
    }
}
