//! End-to-end acceptance checks at desk scale. Runs as a plain binary and
//! prints one PASS/FAIL line per criterion; exits nonzero if any fails.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use relstab::estimators::{fit_lasso, fit_ols, soft_threshold, EstimatorConfig, Learner, PenaltyRule};
use relstab::harness::{
    run_clt_experiment, run_coverage_experiment, run_lambda_experiment, run_rate_experiment, CltSummary,
    CoverageMethod, CoverageRow, ExperimentConfig, ExperimentResult, Mode, RateExperiment, ResultBody, Scenario,
};
use relstab::linmodel::{cond_risk_single, loss_single, sample_dataset, sample_point, Dataset, ModelSpec};
use relstab::numeric::mean_var;
use relstab::rng::StreamKey;
use relstab::stability::{mc_constant_c, mc_gamma, mc_sigma2, with_workers};

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

struct Report(Vec<Outcome>);

impl Report {
    fn record(&mut self, id: &'static str, pass: bool, detail: String) {
        println!("criterion {id:<3} {}  {detail}", if pass { "PASS" } else { "FAIL" });
        self.0.push(Outcome { id, pass, detail });
    }
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    lo <= v && v <= hi
}

fn rates(scenario: Scenario, mode: Mode) -> RateExperiment {
    let res = run_rate_experiment(&ExperimentConfig::preset(scenario, mode), None).expect("rate experiment");
    match res.body {
        ResultBody::Rates(r) => r,
        _ => unreachable!(),
    }
}

fn clt_summary(res: &ExperimentResult) -> &CltSummary {
    match &res.body {
        ResultBody::Clt(c) => &c.summaries[0],
        _ => unreachable!(),
    }
}

fn coverage_row(res: &ExperimentResult, method: CoverageMethod) -> CoverageRow {
    match &res.body {
        ResultBody::Coverage(c) => *c.rows.iter().find(|r| r.method == method).expect("row"),
        _ => unreachable!(),
    }
}

fn at(config: ExperimentConfig, n: usize) -> ExperimentConfig {
    ExperimentConfig {
        n_grid: vec![n],
        ..config
    }
}

fn criterion_1(report: &mut Report, st_single: &RateExperiment, secs: f64) {
    let row = st_single.rows.iter().find(|r| r.n == 9000).unwrap();
    let (v, se) = (row.sigma2.value, row.sigma2.std_err);
    let rel = (v / 20_000.0 - 1.0).abs();
    let z = (v - 20_000.0) / se;
    report.record(
        "1",
        rel <= 0.10 && z.abs() <= 4.0,
        format!("sigma2(n=9000) = {v:.1} ± {se:.1}; rel err {rel:.4}, z = {z:+.2}; single-ST rate run {secs:.1}s"),
    );
}

fn criterion_2(report: &mut Report, st_comp: &RateExperiment) {
    let row = st_comp.rows.iter().find(|r| r.n == 9000).unwrap();
    let scaled = 9000f64.powi(2) * row.sigma2.value;
    let slope = st_comp.fit_sigma2.slope;
    report.record(
        "2",
        (scaled / 1600.0 - 1.0).abs() <= 0.20 && (slope + 2.0).abs() <= 0.15,
        format!("n^2 sigma2(n=9000) = {scaled:.1} (target 1600 ± 20%); slope {slope:+.3} (target -2 ± 0.15)"),
    );
}

fn slope_check(report: &mut Report, id: &'static str, label: &str, slope: f64, target: f64, tol: f64) -> bool {
    let pass = (slope - target).abs() <= tol;
    report.record(
        id,
        pass,
        format!("{label}: gamma slope {slope:+.3} (target {target} ± {tol})"),
    );
    pass
}

fn criterion_5(report: &mut Report, st_single: &RateExperiment) {
    let n = 9000usize;
    let m = 1_000_000;
    let learner = ExperimentConfig::preset(Scenario::StFixed, Mode::Single).learner();
    let spec = ModelSpec::sparse_default();
    let gamma = mc_gamma(&spec, &learner, n, m, StreamKey::labeled(11, "gamma-c", n as u64)).unwrap();
    let c = mc_constant_c(&spec, m, StreamKey::labeled(11, "c", 0)).unwrap();
    let n2 = (n * n) as f64;
    let ratio = n2 * gamma.value / c.value;
    let se = ratio * ((gamma.std_err / gamma.value).powi(2) + (c.std_err / c.value).powi(2)).sqrt();
    let rate_row = st_single.rows.iter().find(|r| r.n == n).unwrap();
    let rate_ratio = n2 * rate_row.gamma.value / c.value;
    report.record(
        "5",
        within(ratio, 0.85, 1.15) && se < 0.05,
        format!(
            "n^2 gamma / C = {ratio:.4} ± {se:.4} (M = {m}; C = {:.4e} ± {:.2e}, closed form 8e5); rate-run value {rate_ratio:.3}",
            c.value, c.std_err
        ),
    );
}

fn criterion_6(report: &mut Report) {
    let cfg = at(ExperimentConfig::preset(Scenario::StFixed, Mode::Single), 900);
    let clt = run_clt_experiment(&cfg, None).unwrap();
    let s = clt_summary(&clt);
    let cov = coverage_row(&run_coverage_experiment(&cfg).unwrap(), CoverageMethod::Single);
    report.record(
        "6",
        within(s.var_true_sigma, 0.9, 1.1) && within(cov.coverage(), 0.93, 0.97),
        format!(
            "n=900, {} reps: var(stat/sigma) = {:.4}, KS = {:.4}; ci_single coverage {:.4} ± {:.4}",
            cov.total,
            s.var_true_sigma,
            s.ks_true_sigma,
            cov.coverage(),
            cov.binomial_se()
        ),
    );
}

fn criterion_7(report: &mut Report) {
    let cfg = at(ExperimentConfig::preset(Scenario::StFixed, Mode::Comparison), 9000);
    let clt = run_clt_experiment(&cfg, None).unwrap();
    let s = clt_summary(&clt);
    let naive = coverage_row(&run_coverage_experiment(&cfg).unwrap(), CoverageMethod::NaiveDiff);
    let gap_se = (0.90 - naive.coverage()) / naive.binomial_se();
    let over = s.mean_sigma_hat_sq / s.sigma2.value;
    let pass = s.var_true_sigma > 1.5 && gap_se > 3.0 && over > 1.2 && s.mean_sigma_hat_sq < s.scaled_error_var;
    report.record(
        "7",
        pass,
        format!(
            "n=9000: var(stat/sigma) = {:.3}; naive coverage {:.4} ({gap_se:.1} SE below 0.90); \
             mean sigma_hat^2 / sigma^2 = {over:.3}; mean sigma_hat^2 = {:.3e} < N var(R_hat - R) = {:.3e}",
            s.var_true_sigma,
            naive.coverage(),
            s.mean_sigma_hat_sq,
            s.scaled_error_var
        ),
    );
}

fn criterion_8(report: &mut Report) {
    let cfg = at(ExperimentConfig::preset(Scenario::StFixed, Mode::Comparison), 900);
    let row = coverage_row(&run_coverage_experiment(&cfg).unwrap(), CoverageMethod::Prop1Diff);
    let floor = 0.95 - 3.0 * (0.95f64 * 0.05 / row.total as f64).sqrt();
    report.record(
        "8",
        row.coverage() >= floor,
        format!(
            "n=900: conservative coverage {:.4} ({}/{}), floor {floor:.4}",
            row.coverage(),
            row.covered,
            row.total
        ),
    );
}

fn criterion_9(report: &mut Report) {
    let mut rng = StreamKey::labeled(9, "acceptance-props", 0).stream(0);
    let mut st_ok = 0usize;
    for _ in 0..10_000 {
        let beta = DVector::from_fn(6, |_, _| {
            if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random_range(-50.0..50.0)
            }
        });
        let lambda = rng.random_range(0.0..1e4);
        let delta = rng.random_range(0.0..1e3);
        let n = rng.random_range(1..10_000usize);
        let lo = soft_threshold(&beta, lambda, n).unwrap();
        let hi = soft_threshold(&beta, lambda + delta, n).unwrap();
        let ok = (0..6).all(|i| {
            let shrink = lo[i].abs() <= beta[i].abs() && (lo[i] == 0.0 || lo[i].signum() == beta[i].signum());
            let slack = 4.0 * f64::EPSILON * lo[i].abs().max(hi[i].abs());
            let lipschitz = (lo[i] - hi[i]).abs() <= delta / n as f64 * (1.0 + 1e-12) + slack;
            let support = hi[i] == 0.0 || lo[i] != 0.0;
            shrink && lipschitz && support
        });
        st_ok += usize::from(ok);
    }
    report.record(
        "9a",
        st_ok == 10_000,
        format!("ST shrinkage/Lipschitz/support: {st_ok}/10000 cases"),
    );

    let tol = 1e-9;
    let mut worst = 0f64;
    for case in 0..100u64 {
        let mut rng = StreamKey::new(case, 99).stream(0);
        let n = rng.random_range(12..80usize);
        let p = rng.random_range(1..8usize);
        let g = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let x = g.qr().q().columns(0, p).into_owned() * (n as f64).sqrt();
        let beta = DVector::from_fn(p, |_, _| rng.random_range(-5.0..5.0));
        let y = &x * beta + DVector::from_fn(n, |_, _| 2.0 * rng.sample::<f64, _>(rand_distr::StandardNormal));
        let data = Dataset::new(x, y).unwrap();
        let lambda = rng.random_range(0.0..3.0 * n as f64);
        let lasso = fit_lasso(
            &data,
            &EstimatorConfig::lasso(PenaltyRule::Fixed { value: lambda }),
            tol,
            10_000,
        )
        .unwrap();
        let st = soft_threshold(&fit_ols(&data).unwrap().beta_hat, lambda, n).unwrap();
        worst = worst.max((lasso.beta_hat - st).amax());
    }
    report.record(
        "9b",
        worst <= 10.0 * tol,
        format!(
            "Lasso vs ST on 100 orthogonal designs: max gap {worst:.2e} (limit {:.0e})",
            10.0 * tol
        ),
    );

    let spec = ModelSpec::new(vec![1.0, 0.0, -2.0], 1.5).unwrap();
    let beta = DVector::from_vec(vec![0.4, 0.7, -1.1]);
    let mut rng = StreamKey::labeled(9, "acceptance-nested", 0).stream(0);
    let losses: Vec<f64> = (0..1_000_000)
        .map(|_| loss_single(&sample_point(&spec, &mut rng), &beta).unwrap())
        .collect();
    let (mean, var) = mean_var(&losses);
    let want = cond_risk_single(&beta, &spec).unwrap();
    let z = (mean - want) / (var / losses.len() as f64).sqrt();
    report.record(
        "9c",
        z.abs() < 3.0,
        format!("cond_risk vs nested MC (1e6 points): z = {z:+.2}"),
    );

    let tiny = ModelSpec::new(vec![1.0], 1.0).unwrap();
    let learner = Learner::Single(EstimatorConfig::ridge(PenaltyRule::Fixed { value: 1.0 }));
    let n = 3;
    let mc = mc_sigma2(
        &tiny,
        &learner,
        n,
        400_000,
        StreamKey::labeled(9, "acceptance-sigma2", 0),
    )
    .unwrap();
    let (outer, inner) = (6_000, 300);
    let mut means = Vec::with_capacity(outer);
    let mut noise = Vec::with_capacity(outer);
    for _ in 0..outer {
        let z0 = sample_point(&tiny, &mut rng);
        let hs: Vec<f64> = (0..inner)
            .map(|_| {
                let data = sample_dataset(&tiny, n, &mut rng).unwrap();
                let fit = learner.fit_stats(&data.gram_stats()).unwrap();
                loss_single(&z0, &fit.first.beta_hat).unwrap()
            })
            .collect();
        let (m, v) = mean_var(&hs);
        means.push(m);
        noise.push(v / inner as f64);
    }
    let grand = mean_var(&means).0;
    let k = outer as f64 / (outer as f64 - 1.0);
    let contrib: Vec<f64> = means
        .iter()
        .zip(&noise)
        .map(|(m, e)| k * (m - grand).powi(2) - e)
        .collect();
    let (brute, bvar) = mean_var(&contrib);
    let bse = (bvar / outer as f64).sqrt();
    let z = (mc.value - brute) / (mc.std_err.powi(2) + bse * bse).sqrt();
    report.record(
        "9d",
        z.abs() < 3.0,
        format!(
            "sigma2 product form {:.4} ± {:.4} vs brute force {brute:.4} ± {bse:.4}: z = {z:+.2}",
            mc.value, mc.std_err
        ),
    );

    let mut small = ExperimentConfig::preset(Scenario::StFixed, Mode::Comparison);
    small.n_grid = vec![18, 90, 180];
    small.m_stability = 2_000;
    small.m_clt = 100;
    let run = |w| {
        with_workers(Some(w), || {
            let a = run_rate_experiment(&small, None).unwrap().to_csv_string().unwrap();
            let b = run_clt_experiment(&small, None).unwrap().to_csv_string().unwrap();
            a + &b
        })
        .unwrap()
    };
    let base = run(1);
    let same = [2, 4].iter().all(|&w| run(w) == base);
    report.record(
        "9e",
        same,
        format!(
            "rates + clt CSV byte-identical across 1/2/4 workers ({} bytes)",
            base.len()
        ),
    );
}

fn criterion_10(report: &mut Report) {
    let cfg = ExperimentConfig::preset(Scenario::LassoInnercv, Mode::Single);
    let reps = 20;
    let res = run_lambda_experiment(&cfg, reps).unwrap();
    let ResultBody::Lambdas(l) = &res.body else {
        unreachable!()
    };
    let means: Vec<String> = l
        .rows
        .iter()
        .map(|r| format!("n={}: {:.1}", r.n, r.mean_log_lambda.exp()))
        .collect();
    let slope = l.fit.slope;
    report.record(
        "10",
        (slope - 0.5).abs() <= 0.25,
        format!(
            "log lambda_hat slope {slope:+.3} (target 0.5 ± 0.25); geometric means {}",
            means.join(", ")
        ),
    );
}

fn main() {
    let start = Instant::now();
    let mut report = Report(Vec::new());

    let t = Instant::now();
    let st_single = rates(Scenario::StFixed, Mode::Single);
    let st_single_secs = t.elapsed().as_secs_f64();
    let st_comp = rates(Scenario::StFixed, Mode::Comparison);
    let dense_comp = rates(Scenario::StNonsparse, Mode::Comparison);
    let ridge_single = rates(Scenario::RidgeFixed, Mode::Single);
    let ridge_comp = rates(Scenario::RidgeFixed, Mode::Comparison);

    criterion_1(&mut report, &st_single, st_single_secs);
    criterion_2(&mut report, &st_comp);
    slope_check(&mut report, "3a", "single ST", st_single.fit_gamma.slope, -2.0, 0.15);
    slope_check(
        &mut report,
        "3b",
        "comparison ST, sparse",
        st_comp.fit_gamma.slope,
        -2.5,
        0.2,
    );
    slope_check(
        &mut report,
        "3c",
        "comparison ST, dense",
        dense_comp.fit_gamma.slope,
        -4.0,
        0.3,
    );
    slope_check(
        &mut report,
        "3d",
        "single ridge",
        ridge_single.fit_gamma.slope,
        -2.0,
        0.2,
    );
    slope_check(
        &mut report,
        "3e",
        "comparison ridge",
        ridge_comp.fit_gamma.slope,
        -4.0,
        0.3,
    );
    let r1 = st_single.fit_r.slope;
    report.record(
        "4a",
        (r1 + 1.0).abs() <= 0.15,
        format!("single ST: r slope {r1:+.3} (target -1 ± 0.15)"),
    );
    let r2 = st_comp.fit_r.slope;
    report.record(
        "4b",
        (r2 - 0.5).abs() <= 0.2,
        format!("comparison ST: r slope {r2:+.3} (target +0.5 ± 0.2)"),
    );
    criterion_5(&mut report, &st_single);
    criterion_6(&mut report);
    criterion_7(&mut report);
    criterion_8(&mut report);
    criterion_9(&mut report);
    criterion_10(&mut report);

    let failed: Vec<&Outcome> = report.0.iter().filter(|o| !o.pass).collect();
    println!(
        "acceptance: {} passed, {} failed in {:.1}s",
        report.0.len() - failed.len(),
        failed.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        for o in &failed {
            eprintln!("FAILED criterion {}: {}", o.id, o.detail);
        }
        std::process::exit(1);
    }
}
