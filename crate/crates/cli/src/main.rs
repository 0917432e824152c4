use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use relstab::harness::{self, ExperimentConfig, ExperimentResult, Mode, ResultBody, Scenario};
use relstab::stability::with_workers;

#[derive(Parser)]
#[command(name = "relstab", version, about = "Loss-stability and cross-validation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// sigma^2, gamma and r across the n grid, with log-log slopes.
    Rates(Common),
    /// Normalized CV error samples for density plots.
    Clt(Common),
    /// Empirical coverage of CV confidence intervals.
    Coverage(Common),
    /// One-shot sigma^2, gamma and r at a single n.
    Stability(Common),
    /// Penalties picked by inner CV across the n grid.
    Lambdas(Common),
    /// Small-instance oracle checks.
    Selftest {
        #[arg(long, default_value_t = harness::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Args)]
struct Common {
    /// TOML file with any subset of the experiment fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated training sizes.
    #[arg(long, value_delimiter = ',', conflicts_with = "n")]
    n_grid: Option<Vec<usize>>,
    /// A single training size.
    #[arg(long)]
    n: Option<usize>,
    /// Append n = 90000 to the grid.
    #[arg(long)]
    large: bool,
    /// CV replications (clt, coverage) or datasets per size (lambdas).
    #[arg(long)]
    reps: Option<u64>,
    /// Monte-Carlo replications for sigma^2 and gamma.
    #[arg(long = "m")]
    m_stability: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Report rate values relative to this n.
    #[arg(long)]
    normalize_at: Option<usize>,
    /// Output CSV path; a `.meta.json` sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for cached sigma^2 reference values.
    #[arg(long, default_value = ".relstab-cache")]
    cache_dir: PathBuf,
    #[arg(long)]
    no_cache: bool,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<relstab::Error> for Failure {
    fn from(e: relstab::Error) -> Self {
        match e {
            relstab::Error::Config(_) => Failure::Config(e.into()),
            other => Failure::Runtime(other.into()),
        }
    }
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

impl Common {
    fn build(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))
                    .map_err(config_err)?;
                ExperimentConfig::from_toml_with(&text, self.scenario, self.mode)?
            }
            None => ExperimentConfig::preset(
                self.scenario.unwrap_or(Scenario::StFixed),
                self.mode.unwrap_or(Mode::Single),
            ),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.n_grid {
            cfg.n_grid = v.clone();
        }
        if let Some(v) = self.n {
            cfg.n_grid = vec![v];
        }
        if self.large && !cfg.n_grid.contains(&90_000) {
            cfg.n_grid.push(90_000);
        }
        if let Some(v) = self.reps {
            cfg.m_clt = v;
        }
        if let Some(v) = self.m_stability {
            cfg.m_stability = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if self.normalize_at.is_some() {
            cfg.normalize_at = self.normalize_at;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn cache(&self) -> Option<&Path> {
        (!self.no_cache).then_some(self.cache_dir.as_path())
    }
}

fn emit(result: &ExperimentResult, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
            result.write_csv(std::io::BufWriter::new(file))?;
            let mut meta = path.as_os_str().to_owned();
            meta.push(".meta.json");
            fs::write(&meta, result.metadata_json())
                .with_context(|| format!("writing {}", PathBuf::from(&meta).display()))?;
        }
        None => result.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}

fn summarize(result: &ExperimentResult) {
    let mut err = std::io::stderr().lock();
    let _ = match &result.body {
        ResultBody::Rates(r) => writeln!(
            err,
            "slopes: sigma2 {:+.3}, gamma {:+.3}, r {:+.3}",
            r.fit_sigma2.slope, r.fit_gamma.slope, r.fit_r.slope
        ),
        ResultBody::Clt(c) => c.summaries.iter().try_for_each(|s| {
            writeln!(
                err,
                "n={}: var(true sigma) {:.4}, var(sigma hat) {:.4}, KS {:.4} / {:.4}",
                s.n, s.var_true_sigma, s.var_hat_sigma, s.ks_true_sigma, s.ks_hat_sigma
            )
        }),
        ResultBody::Coverage(c) => c.rows.iter().try_for_each(|r| {
            writeln!(
                err,
                "n={} {}: {:.4} ± {:.4}",
                r.n,
                r.method.as_str(),
                r.coverage(),
                r.binomial_se()
            )
        }),
        ResultBody::Lambdas(l) => writeln!(err, "log lambda slope {:+.3}", l.fit.slope),
        ResultBody::Stability(s) => writeln!(
            err,
            "n={}: sigma2 {:.6e} ± {:.2e}, gamma {:.6e} ± {:.2e}, r {:.6e} ± {:.2e}",
            s.row.n,
            s.row.sigma2.value,
            s.row.sigma2.std_err,
            s.row.gamma.value,
            s.row.gamma.std_err,
            s.row.r.value,
            s.row.r.std_err
        ),
    };
    let _ = writeln!(err, "{:.2}s", result.metadata.elapsed_secs);
}

fn run(command: Command) -> Result<(), Failure> {
    let (common, kind) = match command {
        Command::Selftest { seed } => {
            let report = harness::selftest::run(seed);
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
            }
            println!("{} passed, {} failed", report.passed(), report.failed());
            if report.failed() > 0 {
                return Err(Failure::Runtime(anyhow::anyhow!(
                    "{} selftest checks failed",
                    report.failed()
                )));
            }
            return Ok(());
        }
        Command::Rates(c) => (c, "rates"),
        Command::Clt(c) => (c, "clt"),
        Command::Coverage(c) => (c, "coverage"),
        Command::Stability(c) => (c, "stability"),
        Command::Lambdas(c) => (c, "lambdas"),
    };
    let cfg = common.build()?;
    if kind == "stability" && cfg.n_grid.len() != 1 {
        return Err(config_err(anyhow::anyhow!(
            "n: stability takes exactly one size (use --n)"
        )));
    }
    let cache = common.cache();
    let result = with_workers(common.workers, || match kind {
        "rates" => harness::run_rate_experiment(&cfg, cache),
        "clt" => harness::run_clt_experiment(&cfg, cache),
        "coverage" => harness::run_coverage_experiment(&cfg),
        "stability" => harness::run_stability_point(&cfg, cfg.n_grid[0], cache),
        _ => harness::run_lambda_experiment(&cfg, common.reps.unwrap_or(20)),
    })??;
    emit(&result, common.out.as_deref()).map_err(Failure::Runtime)?;
    summarize(&result);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
