use std::borrow::Cow;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{select_lambda_from_folds, EstimatorConfig, FitResult, PenaltyRule};
use crate::error::{Error, Result};
use crate::linmodel::{cond_risk_diff, cond_risk_single, loss_diff, loss_single, DataPoint, GramStats, ModelSpec};

/// How a comparison resolves penalties that are selected from data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairWiring {
    /// One selection `λ̂` with the first config's rule; the pair is fit at
    /// `λ̂ + first.delta` and `λ̂ + second.delta`.
    #[default]
    SharedSelection,
    /// Each config runs its own selection and adds its own delta.
    Independent,
}

/// The procedure whose loss is being studied: one estimator (`h^sing`) or
/// the difference of two (`h^diff`).
#[derive(Debug, Clone, PartialEq)]
pub enum Learner {
    Single(EstimatorConfig),
    Comparison {
        first: EstimatorConfig,
        second: EstimatorConfig,
        wiring: PairWiring,
    },
}

/// Fits of a [`Learner`] on one training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub first: FitResult,
    pub second: Option<FitResult>,
}

impl Fitted {
    /// `h^sing(z₀)` or `h^diff(z₀)`.
    pub fn loss(&self, z0: &DataPoint) -> Result<f64> {
        match &self.second {
            None => loss_single(z0, &self.first.beta_hat),
            Some(second) => loss_diff(z0, &self.first.beta_hat, &second.beta_hat),
        }
    }

    /// Conditional risk given the training set, in closed form.
    pub fn cond_risk(&self, spec: &ModelSpec) -> Result<f64> {
        match &self.second {
            None => cond_risk_single(&self.first.beta_hat, spec),
            Some(second) => cond_risk_diff(&self.first.beta_hat, &second.beta_hat, spec),
        }
    }

    pub fn betas(&self) -> (&DVector<f64>, Option<&DVector<f64>>) {
        (&self.first.beta_hat, self.second.as_ref().map(|s| &s.beta_hat))
    }
}

impl Learner {
    pub fn validate(&self) -> Result<()> {
        match self {
            Learner::Single(c) => c.validate(),
            Learner::Comparison { first, second, .. } => {
                first.validate()?;
                second.validate()
            }
        }
    }

    pub fn is_comparison(&self) -> bool {
        matches!(self, Learner::Comparison { .. })
    }

    pub fn selects_penalty(&self) -> bool {
        match self {
            Learner::Single(c) => c.selects_penalty(),
            Learner::Comparison { first, second, .. } => first.selects_penalty() || second.selects_penalty(),
        }
    }

    pub fn first(&self) -> &EstimatorConfig {
        match self {
            Learner::Single(c) | Learner::Comparison { first: c, .. } => c,
        }
    }

    /// Inner fold count to use when a training set has to be split afresh.
    pub fn inner_folds(&self) -> Option<usize> {
        let pick = |c: &EstimatorConfig| match &c.penalty {
            Some(PenaltyRule::InnerCv(s)) => Some(s.folds),
            _ => None,
        };
        match self {
            Learner::Single(c) => pick(c),
            Learner::Comparison { first, second, .. } => pick(first).or_else(|| pick(second)),
        }
    }

    /// Fits on a training set given as disjoint blocks of sufficient
    /// statistics. Penalties selected by inner CV use the blocks as folds.
    pub fn fit_blocks(&self, blocks: &[GramStats]) -> Result<Fitted> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("empty training set".into()));
        }
        let merged: Cow<'_, GramStats> = if blocks.len() == 1 {
            Cow::Borrowed(&blocks[0])
        } else {
            Cow::Owned(GramStats::sum(blocks[0].p(), blocks))
        };
        match self {
            Learner::Single(c) => Ok(Fitted {
                first: fit_config(c, blocks, &merged, None)?,
                second: None,
            }),
            Learner::Comparison { first, second, wiring } => {
                let shared = match wiring {
                    PairWiring::SharedSelection if first.selects_penalty() => Some(select(first, blocks)?),
                    _ => None,
                };
                Ok(Fitted {
                    first: fit_config(first, blocks, &merged, shared)?,
                    second: Some(fit_config(second, blocks, &merged, shared)?),
                })
            }
        }
    }

    pub fn fit_stats(&self, stats: &GramStats) -> Result<Fitted> {
        self.fit_blocks(std::slice::from_ref(stats))
    }
}

fn select(config: &EstimatorConfig, blocks: &[GramStats]) -> Result<f64> {
    let Some(PenaltyRule::InnerCv(settings)) = &config.penalty else {
        unreachable!("select is only called for inner-cv rules")
    };
    select_lambda_from_folds(blocks, config.family, settings, &config.lasso)
}

fn fit_config(
    config: &EstimatorConfig,
    blocks: &[GramStats],
    merged: &GramStats,
    shared: Option<f64>,
) -> Result<FitResult> {
    let fit = if config.selects_penalty() {
        let base = match shared {
            Some(l) => l,
            None => select(config, blocks)?,
        };
        config.fit_stats_with(merged, base + config.delta)?
    } else {
        config.fit_stats(merged)?
    };
    fit.into_converged()
}
