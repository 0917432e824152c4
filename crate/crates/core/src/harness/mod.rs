//! Experiment configuration, runners and result serialization.

mod output;
mod runs;
pub mod selftest;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, Family, InnerCvSettings, Learner, PairWiring, PenaltyRule};
use crate::linmodel::ModelSpec;

pub use output::{
    CltExperiment, CltSample, CltSummary, CoverageExperiment, CoverageMethod, CoverageRow, ExperimentResult,
    LambdaExperiment, LambdaRow, Metadata, RateExperiment, RateRow, ResultBody, StabilityPoint,
};
pub use runs::{
    run_clt_experiment, run_coverage_experiment, run_lambda_experiment, run_rate_experiment, run_stability_point,
    sigma2_reference,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    StFixed,
    LassoInnercv,
    RidgeFixed,
    StNonsparse,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::StFixed,
        Scenario::LassoInnercv,
        Scenario::RidgeFixed,
        Scenario::StNonsparse,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::StFixed => "st-fixed",
            Scenario::LassoInnercv => "lasso-innercv",
            Scenario::RidgeFixed => "ridge-fixed",
            Scenario::StNonsparse => "st-nonsparse",
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Scenario::StFixed | Scenario::StNonsparse => Family::St,
            Scenario::RidgeFixed => Family::Ridge,
            Scenario::LassoInnercv => Family::Lasso,
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| Error::Config(format!("scenario: unknown value `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Single,
    Comparison,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Comparison => "comparison",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Mode::Single),
            "comparison" => Ok(Mode::Comparison),
            _ => Err(Error::Config(format!("mode: unknown value `{s}`"))),
        }
    }
}

/// Everything one experiment needs. `m_stability` drives the `σ²`/`γ`
/// Monte Carlo, `m_clt` the number of full CV replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub mode: Mode,
    pub spec: ModelSpec,
    pub k: usize,
    pub n_grid: Vec<usize>,
    pub penalty: PenaltyRule,
    pub delta: f64,
    pub m_stability: u64,
    pub m_clt: u64,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default)]
    pub wiring: PairWiring,
    /// Divide rate-experiment values by their value at this `n`.
    #[serde(default)]
    pub normalize_at: Option<usize>,
}

/// A config file: any subset of [`ExperimentConfig`] fields, layered over
/// the preset for its scenario and mode.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    scenario: Option<Scenario>,
    mode: Option<Mode>,
    spec: Option<ModelSpec>,
    k: Option<usize>,
    n_grid: Option<Vec<usize>>,
    penalty: Option<PenaltyRule>,
    delta: Option<f64>,
    m_stability: Option<u64>,
    m_clt: Option<u64>,
    alpha: Option<f64>,
    seed: Option<u64>,
    wiring: Option<PairWiring>,
    normalize_at: Option<usize>,
}

pub const DEFAULT_SEED: u64 = 20_240_917;

impl ExperimentConfig {
    /// Desk-scale defaults: `k = 10`, `n ∈ {90, 900, 9000}`, `λₙ = √n`
    /// (inner CV for the Lasso), `δ = 1`, `M = 2·10⁵` (`2·10⁴` with inner
    /// CV), 2000 CV replications, `α = 0.05`.
    pub fn preset(scenario: Scenario, mode: Mode) -> Self {
        let k = 10;
        let (spec, penalty, m_stability) = match scenario {
            Scenario::StFixed | Scenario::RidgeFixed => (ModelSpec::sparse_default(), PenaltyRule::sqrt_n(), 200_000),
            Scenario::StNonsparse => (ModelSpec::dense_default(), PenaltyRule::sqrt_n(), 200_000),
            Scenario::LassoInnercv => (
                ModelSpec::sparse_default(),
                PenaltyRule::InnerCv(InnerCvSettings {
                    folds: k - 1,
                    ..InnerCvSettings::default()
                }),
                20_000,
            ),
        };
        Self {
            scenario,
            mode,
            spec,
            k,
            n_grid: vec![90, 900, 9000],
            penalty,
            delta: 1.0,
            m_stability,
            m_clt: 2000,
            alpha: 0.05,
            seed: DEFAULT_SEED,
            wiring: PairWiring::default(),
            normalize_at: None,
        }
    }

    /// Parses a TOML config; unknown keys are rejected.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with(text, None, None)
    }

    /// As [`Self::from_toml_str`], with `scenario` and `mode` taking
    /// precedence over the file. Fields the file leaves out come from the
    /// preset of the resulting scenario and mode.
    pub fn from_toml_with(text: &str, scenario: Option<Scenario>, mode: Option<Mode>) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = Self::preset(
            scenario.or(file.scenario).unwrap_or(Scenario::StFixed),
            mode.or(file.mode).unwrap_or(Mode::Single),
        );
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = file.$field { cfg.$field = v; } )* };
        }
        take!(spec, k, n_grid, penalty, delta, m_stability, m_clt, alpha, seed, wiring);
        cfg.normalize_at = file.normalize_at;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every field; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::Config(format!("{name}: {msg}")));
        if self.k < 2 {
            return field("k", format!("must be >= 2, got {}", self.k));
        }
        if self.n_grid.is_empty() {
            return field("n_grid", "must not be empty".into());
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n == 0 || n % (self.k - 1) != 0) {
            return field(
                "n_grid",
                format!("{n} is not a positive multiple of k - 1 = {}", self.k - 1),
            );
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return field("n_grid", "must be strictly ascending".into());
        }
        if let Err(e) = self.penalty.validate() {
            return field("penalty", e.to_string());
        }
        if matches!(self.penalty, PenaltyRule::InnerCv(_)) != (self.scenario == Scenario::LassoInnercv) {
            return field(
                "penalty",
                format!("scenario {} does not take this penalty rule", self.scenario.as_str()),
            );
        }
        if let PenaltyRule::InnerCv(settings) = &self.penalty {
            if settings.folds != self.k - 1 {
                return field("penalty", format!("inner-cv folds must equal k - 1 = {}", self.k - 1));
            }
        }
        if self.scenario == Scenario::StNonsparse && self.spec.sparsity() != 0 {
            return field("spec", "st-nonsparse requires a beta_star without zeros".into());
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return field("delta", format!("must be finite and >= 0, got {}", self.delta));
        }
        if self.m_stability == 0 {
            return field("m_stability", "must be >= 1".into());
        }
        if self.m_clt == 0 {
            return field("m_clt", "must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return field("alpha", format!("must lie in (0, 1), got {}", self.alpha));
        }
        if let Some(n) = self.normalize_at {
            if !self.n_grid.contains(&n) {
                return field("normalize_at", format!("{n} is not in n_grid"));
            }
        }
        if self.spec.p() >= self.n_grid[0] {
            return field(
                "n_grid",
                format!("sizes must exceed the dimension p = {}", self.spec.p()),
            );
        }
        Ok(())
    }

    pub fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            family: self.scenario.family(),
            penalty: Some(self.penalty.clone()),
            delta: 0.0,
            lasso: Default::default(),
        }
    }

    /// The single estimator, or the pair `(λ, λ + δ)` in comparison mode.
    pub fn learner(&self) -> Learner {
        let base = self.estimator();
        match self.mode {
            Mode::Single => Learner::Single(base),
            Mode::Comparison => Learner::Comparison {
                second: base.clone().with_delta(self.delta),
                first: base,
                wiring: self.wiring,
            },
        }
    }

    /// Full data size `N = n k / (k − 1)` for training size `n`.
    pub fn total_size(&self, n: usize) -> usize {
        n / (self.k - 1) * self.k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for sc in Scenario::ALL {
            for mode in [Mode::Single, Mode::Comparison] {
                ExperimentConfig::preset(sc, mode).validate().unwrap();
            }
        }
        assert_eq!(
            ExperimentConfig::preset(Scenario::StFixed, Mode::Single).total_size(900),
            1000
        );
    }

    #[test]
    fn toml_roundtrip_and_overlay() {
        let cfg = ExperimentConfig::preset(Scenario::RidgeFixed, Mode::Comparison);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, back);
        let partial = ExperimentConfig::from_toml_str("scenario = \"st-nonsparse\"\nseed = 5\n").unwrap();
        assert_eq!(partial.seed, 5);
        assert_eq!(partial.spec, ModelSpec::dense_default());
    }

    #[test]
    fn errors_name_the_field() {
        let msg = |text: &str| ExperimentConfig::from_toml_str(text).unwrap_err().to_string();
        assert!(msg("bogus = 1").contains("bogus"));
        assert!(msg("n_grid = [90, 95]").contains("n_grid"));
        assert!(msg("n_grid = [900, 90]").contains("n_grid"));
        assert!(msg("alpha = 1.5").contains("alpha"));
        assert!(msg("k = 1").contains("k:"));
        assert!(msg("m_clt = 0").contains("m_clt"));
        assert!(msg("scenario = \"st-nonsparse\"\n[spec]\nbeta_star = [1.0, 0.0]\ntau = 1.0").contains("spec"));
        assert!(msg("normalize_at = 100").contains("normalize_at"));
        assert!(msg("[penalty]\nkind = \"inner-cv\"").contains("penalty"));
    }

    #[test]
    fn comparison_learner_offsets_second() {
        let cfg = ExperimentConfig::preset(Scenario::StFixed, Mode::Comparison);
        match cfg.learner() {
            Learner::Comparison { first, second, .. } => {
                assert_eq!(first.delta, 0.0);
                assert_eq!(second.delta, 1.0);
            }
            _ => panic!("expected comparison"),
        }
    }
}
