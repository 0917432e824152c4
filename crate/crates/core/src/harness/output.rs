use std::io::Write;

use serde::Serialize;

use super::{ExperimentConfig, Mode, Scenario};
use crate::error::Result;
use crate::stability::{RateFit, StabilityEstimate};

/// Floats in CSV output carry 17 significant digits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub kind: &'static str,
    pub config: ExperimentConfig,
    pub version: String,
    pub elapsed_secs: f64,
}

impl Metadata {
    pub(crate) fn new(kind: &'static str, config: &ExperimentConfig, elapsed_secs: f64) -> Self {
        Self {
            kind,
            config: config.clone(),
            version: format!("relstab {}", env!("CARGO_PKG_VERSION")),
            elapsed_secs,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub sigma2: StabilityEstimate,
    pub gamma: StabilityEstimate,
    pub r: StabilityEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateExperiment {
    /// Raw (unnormalized) estimates.
    pub rows: Vec<RateRow>,
    pub fit_sigma2: RateFit,
    pub fit_gamma: RateFit,
    pub fit_r: RateFit,
    pub normalized_at: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltSample {
    pub n: usize,
    pub rep: u64,
    pub stat_true_sigma: f64,
    pub stat_hat_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltSummary {
    pub n: usize,
    pub total_size: usize,
    /// Monte-Carlo `σ²(hₙ)` used as the "true" scale.
    pub sigma2: StabilityEstimate,
    pub mean_true_sigma: f64,
    pub var_true_sigma: f64,
    pub ks_true_sigma: f64,
    pub mean_hat_sigma: f64,
    pub var_hat_sigma: f64,
    pub ks_hat_sigma: f64,
    /// Mean of the within-fold variance estimates `σ̂ₙ²`.
    pub mean_sigma_hat_sq: f64,
    /// `N · Var(R̂ₙ − Rₙ)` over replications.
    pub scaled_error_var: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CltExperiment {
    pub samples: Vec<CltSample>,
    pub summaries: Vec<CltSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageMethod {
    Single,
    NaiveDiff,
    Prop1Diff,
}

impl CoverageMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CoverageMethod::Single => "single",
            CoverageMethod::NaiveDiff => "naive-diff",
            CoverageMethod::Prop1Diff => "prop1-diff",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageRow {
    pub n: usize,
    pub method: CoverageMethod,
    pub covered: u64,
    pub total: u64,
}

impl CoverageRow {
    pub fn coverage(&self) -> f64 {
        self.covered as f64 / self.total as f64
    }

    /// `√(ĉ (1 − ĉ) / total)`
    pub fn binomial_se(&self) -> f64 {
        let c = self.coverage();
        (c * (1.0 - c) / self.total as f64).sqrt()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageExperiment {
    pub rows: Vec<CoverageRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaRow {
    pub n: usize,
    /// Every selected penalty (one per outer fold per replication).
    pub lambdas: Vec<f64>,
    pub mean_log_lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaExperiment {
    pub rows: Vec<LambdaRow>,
    /// Slope of mean `log λ̂` against `log n`.
    pub fit: RateFit,
}

/// One-shot `σ²`, `γ`, `r` at a single training size.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityPoint {
    pub row: RateRow,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResultBody {
    Rates(RateExperiment),
    Clt(CltExperiment),
    Coverage(CoverageExperiment),
    Lambdas(LambdaExperiment),
    Stability(StabilityPoint),
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub metadata: Metadata,
    pub body: ResultBody,
}

impl ExperimentResult {
    pub fn scenario(&self) -> Scenario {
        self.metadata.config.scenario
    }

    pub fn mode(&self) -> Mode {
        self.metadata.config.mode
    }

    /// Writes the CSV table for this result. Wall-clock time is not part of
    /// the table, so identical configs give identical bytes.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let sc = self.scenario().as_str();
        let mode = self.mode().as_str();
        let csv_err = |e: csv::Error| crate::error::Error::Io(std::io::Error::other(e));
        match &self.body {
            ResultBody::Rates(rates) => {
                w.write_record([
                    "scenario",
                    "mode",
                    "n",
                    "sigma2",
                    "sigma2_se",
                    "gamma",
                    "gamma_se",
                    "r",
                    "r_se",
                    "slope_sigma2",
                    "slope_gamma",
                    "slope_r",
                ])
                .map_err(csv_err)?;
                let scale = |get: fn(&RateRow) -> &StabilityEstimate| -> f64 {
                    rates
                        .normalized_at
                        .and_then(|n0| rates.rows.iter().find(|r| r.n == n0))
                        .map_or(1.0, |r| get(r).value)
                };
                let (s_s, s_g, s_r) = (scale(|r| &r.sigma2), scale(|r| &r.gamma), scale(|r| &r.r));
                for row in &rates.rows {
                    w.write_record([
                        sc.to_string(),
                        mode.to_string(),
                        row.n.to_string(),
                        fmt_f64(row.sigma2.value / s_s),
                        fmt_f64(row.sigma2.std_err / s_s),
                        fmt_f64(row.gamma.value / s_g),
                        fmt_f64(row.gamma.std_err / s_g),
                        fmt_f64(row.r.value / s_r),
                        fmt_f64(row.r.std_err / s_r),
                        fmt_f64(rates.fit_sigma2.slope),
                        fmt_f64(rates.fit_gamma.slope),
                        fmt_f64(rates.fit_r.slope),
                    ])
                    .map_err(csv_err)?;
                }
            }
            ResultBody::Clt(clt) => {
                w.write_record(["scenario", "mode", "n", "rep", "stat_true_sigma", "stat_hat_sigma"])
                    .map_err(csv_err)?;
                for s in &clt.samples {
                    w.write_record([
                        sc.to_string(),
                        mode.to_string(),
                        s.n.to_string(),
                        s.rep.to_string(),
                        fmt_f64(s.stat_true_sigma),
                        fmt_f64(s.stat_hat_sigma),
                    ])
                    .map_err(csv_err)?;
                }
            }
            ResultBody::Coverage(cov) => {
                w.write_record([
                    "scenario",
                    "mode",
                    "n",
                    "method",
                    "covered_count",
                    "total",
                    "coverage",
                    "binomial_se",
                ])
                .map_err(csv_err)?;
                for row in &cov.rows {
                    w.write_record([
                        sc.to_string(),
                        mode.to_string(),
                        row.n.to_string(),
                        row.method.as_str().to_string(),
                        row.covered.to_string(),
                        row.total.to_string(),
                        fmt_f64(row.coverage()),
                        fmt_f64(row.binomial_se()),
                    ])
                    .map_err(csv_err)?;
                }
            }
            ResultBody::Lambdas(lam) => {
                w.write_record(["scenario", "mode", "n", "rep_fold", "lambda", "slope_log_lambda"])
                    .map_err(csv_err)?;
                for row in &lam.rows {
                    for (i, l) in row.lambdas.iter().enumerate() {
                        w.write_record([
                            sc.to_string(),
                            mode.to_string(),
                            row.n.to_string(),
                            i.to_string(),
                            fmt_f64(*l),
                            fmt_f64(lam.fit.slope),
                        ])
                        .map_err(csv_err)?;
                    }
                }
            }
            ResultBody::Stability(point) => {
                w.write_record([
                    "scenario",
                    "mode",
                    "n",
                    "sigma2",
                    "sigma2_se",
                    "gamma",
                    "gamma_se",
                    "r",
                    "r_se",
                ])
                .map_err(csv_err)?;
                let row = &point.row;
                w.write_record([
                    sc.to_string(),
                    mode.to_string(),
                    row.n.to_string(),
                    fmt_f64(row.sigma2.value),
                    fmt_f64(row.sigma2.std_err),
                    fmt_f64(row.gamma.value),
                    fmt_f64(row.gamma.std_err),
                    fmt_f64(row.r.value),
                    fmt_f64(row.r.std_err),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Metadata plus summaries (everything except raw CLT samples) as JSON.
    pub fn metadata_json(&self) -> String {
        let body = match &self.body {
            ResultBody::Clt(clt) => serde_json::json!({ "kind": "clt", "summaries": clt.summaries }),
            other => serde_json::to_value(other).expect("result serializes"),
        };
        serde_json::to_string_pretty(&serde_json::json!({ "metadata": self.metadata, "result": body }))
            .expect("metadata serializes")
    }
}
