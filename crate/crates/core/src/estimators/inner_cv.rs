//! Penalty selection by adaptive grid search over a K-fold CV error.
//!
//! The search starts on integer powers of ten, then three more times lays a
//! log-uniform grid of `points` values around the current best, spanning one
//! step of the previous grid on each side.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{fit_family, EstimatorConfig, Family, InnerCvSettings, LassoSettings, PenaltyRule};
use crate::error::{Error, Result};
use crate::linmodel::{Dataset, GramStats};

/// Random partition of `0..n` into `folds` groups whose sizes differ by at
/// most one (the remainder goes one point per fold).
pub fn split_even<R: Rng + ?Sized>(n: usize, folds: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::Config(format!("{n} points cannot fill {folds} non-empty folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let (base, extra) = (n / folds, n % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for j in 0..folds {
        let len = base + usize::from(j < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

pub fn initial_grid(settings: &InnerCvSettings) -> Vec<f64> {
    (settings.lo_exp..=settings.hi_exp).map(|e| 10f64.powi(e)).collect()
}

/// `points` log-uniform values on `[center·10^−half, center·10^half]`.
pub fn refined_grid(center: f64, half_width_log10: f64, points: usize) -> Vec<f64> {
    let lo = center.log10() - half_width_log10;
    let step = 2.0 * half_width_log10 / (points - 1) as f64;
    (0..points).map(|i| 10f64.powf(lo + step * i as f64)).collect()
}

/// Selects the penalty minimizing the CV squared error where each element of
/// `folds` summarizes one validation fold. Ties go to the smaller penalty.
pub fn select_lambda_from_folds(
    folds: &[GramStats],
    family: Family,
    settings: &InnerCvSettings,
    lasso: &LassoSettings,
) -> Result<f64> {
    if folds.len() < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {}", folds.len())));
    }
    if let Some(j) = folds.iter().position(|f| f.n == 0) {
        return Err(Error::Config(format!("inner fold {j} is empty")));
    }
    let p = folds[0].p();
    let total = GramStats::sum(p, folds);
    let trains: Vec<GramStats> = folds.iter().map(|f| total.without(f)).collect();
    let cv_error = |lambda: f64| -> Result<f64> {
        let mut sse = 0.0;
        for (j, (train, valid)) in trains.iter().zip(folds).enumerate() {
            let fit = fit_family(family, train, lambda, lasso)
                .and_then(|f| f.into_converged())
                .map_err(|e| e.in_fold(j))?;
            sse += valid.sse(&fit.beta_hat);
        }
        Ok(sse / total.n as f64)
    };

    let mut best: Option<(f64, f64)> = None;
    let consider = |grid: &[f64], best: &mut Option<(f64, f64)>| -> Result<()> {
        for &lambda in grid {
            let err = cv_error(lambda)?;
            let keep = matches!(*best, Some((bl, be)) if be < err || (be == err && bl <= lambda));
            if !keep {
                *best = Some((lambda, err));
            }
        }
        Ok(())
    };
    consider(&initial_grid(settings), &mut best)?;
    let mut half_width = 1.0;
    for _ in 0..settings.refinements {
        let center = best.expect("grid is non-empty").0;
        consider(&refined_grid(center, half_width, settings.points), &mut best)?;
        half_width = 2.0 * half_width / (settings.points - 1) as f64;
    }
    Ok(best.expect("grid is non-empty").0)
}

/// Splits `train` into `k_minus_1` random folds and runs the grid search for
/// `config`'s family. `config` must carry an inner-cv penalty rule; its
/// `folds` setting is overridden by `k_minus_1`.
pub fn select_lambda_inner_cv<R: Rng + ?Sized>(
    train: &Dataset,
    k_minus_1: usize,
    config: &EstimatorConfig,
    rng: &mut R,
) -> Result<f64> {
    config.validate()?;
    let Some(PenaltyRule::InnerCv(settings)) = &config.penalty else {
        return Err(Error::Config(
            "select_lambda_inner_cv needs an inner-cv penalty rule".into(),
        ));
    };
    let folds = split_even(train.n(), k_minus_1, rng)?;
    let stats: Vec<GramStats> = folds.iter().map(|rows| train.gram_stats_of(rows)).collect();
    select_lambda_from_folds(&stats, config.family, settings, &config.lasso)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmodel::{sample_dataset, ModelSpec};
    use crate::rng::StreamKey;

    fn lasso_cv() -> EstimatorConfig {
        EstimatorConfig::lasso(PenaltyRule::InnerCv(InnerCvSettings::default()))
    }

    #[test]
    fn split_is_a_balanced_partition() {
        let mut rng = StreamKey::new(1, 1).stream(0);
        let folds = split_even(23, 4, &mut rng).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![6, 6, 6, 5]);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(split_even(3, 4, &mut rng).is_err());
        assert!(split_even(10, 1, &mut rng).is_err());
    }

    #[test]
    fn grids() {
        let g = initial_grid(&InnerCvSettings::default());
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[9], 1e6);
        let r = refined_grid(100.0, 1.0, 10);
        assert!((r[0] - 10.0).abs() < 1e-9 && (r[9] - 1000.0).abs() < 1e-7);
        for w in r.windows(2) {
            assert!((w[1] / w[0] - 10f64.powf(2.0 / 9.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn pure_noise_prefers_heavy_shrinkage() {
        let spec = ModelSpec::new(vec![0.0; 10], 10.0).unwrap();
        let data = sample_dataset(&spec, 180, &mut StreamKey::new(2, 2).stream(0)).unwrap();
        let lam = select_lambda_inner_cv(&data, 9, &lasso_cv(), &mut StreamKey::new(2, 3).stream(0)).unwrap();
        let grid = initial_grid(&InnerCvSettings::default());
        let median = (grid[4] * grid[5]).sqrt();
        assert!(lam >= median, "selected {lam}");
    }

    #[test]
    fn noiseless_signal_prefers_light_shrinkage() {
        let spec = ModelSpec::new(vec![3.0, 1.0, -5.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        let data = sample_dataset(&spec, 180, &mut StreamKey::new(3, 2).stream(0)).unwrap();
        let lam = select_lambda_inner_cv(&data, 9, &lasso_cv(), &mut StreamKey::new(3, 3).stream(0)).unwrap();
        assert!(lam < 1e-2, "selected {lam}");
    }

    #[test]
    fn selection_is_deterministic_and_validated() {
        let spec = ModelSpec::sparse_default();
        let data = sample_dataset(&spec, 90, &mut StreamKey::new(4, 2).stream(0)).unwrap();
        let key = StreamKey::new(4, 3);
        let a = select_lambda_inner_cv(&data, 9, &lasso_cv(), &mut key.stream(0)).unwrap();
        let b = select_lambda_inner_cv(&data, 9, &lasso_cv(), &mut key.stream(0)).unwrap();
        assert_eq!(a, b);
        let fixed = EstimatorConfig::lasso(PenaltyRule::Fixed { value: 1.0 });
        assert!(select_lambda_inner_cv(&data, 9, &fixed, &mut key.stream(0)).is_err());
        assert!(select_lambda_inner_cv(&data, 91, &lasso_cv(), &mut key.stream(0)).is_err());
    }
}
