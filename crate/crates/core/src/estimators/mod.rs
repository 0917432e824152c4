//! OLS, soft-thresholded least squares, ridge and Lasso, with their penalty
//! rules and the inner cross-validation used to tune the Lasso.
//!
//! All learners consume a training set only through its [`GramStats`], so
//! every fit below is O(p³) once the statistics are formed.

mod inner_cv;
mod lasso;
mod learner;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_spd;
use crate::linmodel::{Dataset, GramStats};

pub use inner_cv::{initial_grid, refined_grid, select_lambda_from_folds, select_lambda_inner_cv, split_even};
pub use lasso::{coordinate_descent, lasso_objective, CdOutcome};
pub use learner::{Fitted, Learner, PairWiring};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Ols,
    St,
    Ridge,
    Lasso,
}

/// Grid-search settings for penalty selection by inner cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnerCvSettings {
    /// Number of inner folds when the training set is split afresh.
    pub folds: usize,
    /// Initial grid is `10^lo_exp, …, 10^hi_exp`.
    pub lo_exp: i32,
    pub hi_exp: i32,
    /// Values per refinement round.
    pub points: usize,
    /// Refinement rounds after the initial decade grid.
    pub refinements: usize,
}

impl Default for InnerCvSettings {
    fn default() -> Self {
        Self {
            folds: 9,
            lo_exp: -3,
            hi_exp: 6,
            points: 10,
            refinements: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PenaltyRule {
    Fixed {
        value: f64,
    },
    /// `λₙ = c · nᵃ`
    PowerLaw {
        c: f64,
        a: f64,
    },
    InnerCv(InnerCvSettings),
}

impl PenaltyRule {
    /// `λₙ = √n`
    pub fn sqrt_n() -> Self {
        PenaltyRule::PowerLaw { c: 1.0, a: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PenaltyRule::Fixed { value } if !(*value >= 0.0 && value.is_finite()) => Err(Error::Config(format!(
                "fixed penalty must be finite and >= 0, got {value}"
            ))),
            PenaltyRule::PowerLaw { c, a } if !(*c > 0.0 && c.is_finite() && a.is_finite()) => Err(Error::Config(
                format!("power-law penalty needs c > 0 and finite a, got c={c}, a={a}"),
            )),
            PenaltyRule::InnerCv(s) => {
                if s.folds < 2 {
                    return Err(Error::Config(format!("inner-cv needs >= 2 folds, got {}", s.folds)));
                }
                if s.lo_exp > s.hi_exp || s.points < 2 {
                    return Err(Error::Config("inner-cv grid is empty".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Penalty at training size `n`, or `None` when it must be selected from data.
    pub fn deterministic_at(&self, n: usize) -> Option<f64> {
        match self {
            PenaltyRule::Fixed { value } => Some(*value),
            PenaltyRule::PowerLaw { c, a } => Some(c * (n as f64).powf(*a)),
            PenaltyRule::InnerCv(_) => None,
        }
    }
}

/// Coordinate-descent controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoSettings {
    /// Stop when the largest coordinate change in a sweep is below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LassoSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub family: Family,
    #[serde(default)]
    pub penalty: Option<PenaltyRule>,
    /// Added to the resolved penalty.
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub lasso: LassoSettings,
}

impl EstimatorConfig {
    pub fn ols() -> Self {
        Self {
            family: Family::Ols,
            penalty: None,
            delta: 0.0,
            lasso: LassoSettings::default(),
        }
    }

    pub fn st(rule: PenaltyRule) -> Self {
        Self::penalized(Family::St, rule)
    }

    pub fn ridge(rule: PenaltyRule) -> Self {
        Self::penalized(Family::Ridge, rule)
    }

    pub fn lasso(rule: PenaltyRule) -> Self {
        Self::penalized(Family::Lasso, rule)
    }

    fn penalized(family: Family, rule: PenaltyRule) -> Self {
        Self {
            family,
            penalty: Some(rule),
            delta: 0.0,
            lasso: LassoSettings::default(),
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.family, &self.penalty) {
            (Family::Ols, Some(_)) => return Err(Error::Config("OLS takes no penalty".into())),
            (Family::Ols, None) => {}
            (f, None) => return Err(Error::Config(format!("{f:?} requires a penalty rule"))),
            (_, Some(rule)) => rule.validate()?,
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!(
                "delta must be finite and >= 0, got {}",
                self.delta
            )));
        }
        if !(self.lasso.tol > 0.0) || self.lasso.max_iter == 0 {
            return Err(Error::Config("lasso tol must be > 0 and max_iter >= 1".into()));
        }
        Ok(())
    }

    /// True when the penalty is chosen from the training data.
    pub fn selects_penalty(&self) -> bool {
        matches!(self.penalty, Some(PenaltyRule::InnerCv(_)))
    }

    /// Effective penalty `rule(n) + delta` for deterministic rules; 0 for OLS.
    pub fn penalty_at(&self, n: usize) -> Result<f64> {
        match &self.penalty {
            None => Ok(0.0),
            Some(rule) => rule.deterministic_at(n).map(|l| l + self.delta).ok_or_else(|| {
                Error::Config("penalty is selected by inner cross-validation; fit through a Learner".into())
            }),
        }
    }

    /// Fits with an explicit penalty (`delta` is not added again).
    pub fn fit_stats_with(&self, stats: &GramStats, lambda: f64) -> Result<FitResult> {
        fit_family(self.family, stats, lambda, &self.lasso)
    }

    /// Fits with the deterministic penalty at `stats.n`.
    pub fn fit_stats(&self, stats: &GramStats) -> Result<FitResult> {
        let lambda = self.penalty_at(stats.n)?;
        self.fit_stats_with(stats, lambda)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta_hat: DVector<f64>,
    pub lambda_used: f64,
    /// Coordinate-descent sweeps; 0 for closed-form fits.
    pub iterations: usize,
    pub converged: bool,
    last_update: f64,
}

impl FitResult {
    fn closed_form(beta_hat: DVector<f64>, lambda_used: f64) -> Self {
        Self {
            beta_hat,
            lambda_used,
            iterations: 0,
            converged: true,
            last_update: 0.0,
        }
    }

    /// Turns a non-converged fit into an error.
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::Convergence {
                iterations: self.iterations,
                last_update: self.last_update,
            })
        }
    }
}

pub(crate) fn fit_family(family: Family, stats: &GramStats, lambda: f64, lasso: &LassoSettings) -> Result<FitResult> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "penalty must be finite and >= 0, got {lambda}"
        )));
    }
    match family {
        Family::Ols => Ok(FitResult::closed_form(ols_from_stats(stats)?, 0.0)),
        Family::St => {
            let ols = ols_from_stats(stats)?;
            Ok(FitResult::closed_form(soft_threshold(&ols, lambda, stats.n)?, lambda))
        }
        Family::Ridge => Ok(FitResult::closed_form(ridge_from_stats(stats, lambda)?, lambda)),
        Family::Lasso => {
            let out = coordinate_descent(stats, lambda, lasso, None, false)?;
            Ok(FitResult {
                beta_hat: out.beta,
                lambda_used: lambda,
                iterations: out.sweeps,
                converged: out.converged,
                last_update: out.last_update,
            })
        }
    }
}

fn ols_from_stats(stats: &GramStats) -> Result<DVector<f64>> {
    if stats.n < stats.p() {
        return Err(Error::Singular(format!(
            "OLS needs n >= p, got n = {} and p = {}",
            stats.n,
            stats.p()
        )));
    }
    solve_spd(&stats.xtx, &stats.xty)
}

fn ridge_from_stats(stats: &GramStats, lambda: f64) -> Result<DVector<f64>> {
    let p = stats.p();
    let a = &stats.xtx + DMatrix::<f64>::identity(p, p) * lambda;
    solve_spd(&a, &stats.xty)
}

/// `β̂_OLS = (XᵀX)⁻¹Xᵀy`
pub fn fit_ols(data: &Dataset) -> Result<FitResult> {
    fit_family(Family::Ols, &data.gram_stats(), 0.0, &LassoSettings::default())
}

/// Coordinate-wise `sign(βᵢ)(|βᵢ| − λ/n)₊`.
pub fn soft_threshold(beta_ols: &DVector<f64>, lambda: f64, n: usize) -> Result<DVector<f64>> {
    if !(lambda >= 0.0) || n == 0 {
        return Err(Error::InvalidInput(format!(
            "soft_threshold needs lambda >= 0 and n >= 1, got lambda = {lambda}, n = {n}"
        )));
    }
    let t = lambda / n as f64;
    Ok(beta_ols.map(|b| {
        let shrunk = b.abs() - t;
        if shrunk > 0.0 {
            b.signum() * shrunk
        } else {
            0.0
        }
    }))
}

fn require_family(config: &EstimatorConfig, family: Family) -> Result<()> {
    config.validate()?;
    if config.family != family {
        return Err(Error::Config(format!(
            "expected a {family:?} config, got {:?}",
            config.family
        )));
    }
    Ok(())
}

pub fn fit_st(data: &Dataset, config: &EstimatorConfig) -> Result<FitResult> {
    require_family(config, Family::St)?;
    config.fit_stats(&data.gram_stats())
}

/// `β̂ = (XᵀX + λI)⁻¹Xᵀy`
pub fn fit_ridge(data: &Dataset, config: &EstimatorConfig) -> Result<FitResult> {
    require_family(config, Family::Ridge)?;
    config.fit_stats(&data.gram_stats())
}

/// Minimizes `½‖y − Xβ‖² + λ‖β‖₁` by cyclic coordinate descent from zero.
///
/// A fit that exhausts `max_iter` comes back with `converged == false`.
pub fn fit_lasso(data: &Dataset, config: &EstimatorConfig, tol: f64, max_iter: usize) -> Result<FitResult> {
    require_family(config, Family::Lasso)?;
    let settings = LassoSettings { tol, max_iter };
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidInput("tol must be > 0 and max_iter >= 1".into()));
    }
    let stats = data.gram_stats();
    let lambda = config.penalty_at(stats.n)?;
    fit_family(Family::Lasso, &stats, lambda, &settings)
}
