use relstab::estimators::{EstimatorConfig, Learner, PenaltyRule};
use relstab::harness::{
    run_clt_experiment, run_coverage_experiment, run_lambda_experiment, run_rate_experiment, ExperimentConfig, Mode,
    Scenario,
};
use relstab::linmodel::ModelSpec;
use relstab::rng::StreamKey;
use relstab::stability::{mc_gamma, mc_sigma2, with_workers};

fn small(scenario: Scenario, mode: Mode) -> ExperimentConfig {
    let mut c = ExperimentConfig::preset(scenario, mode);
    c.n_grid = vec![18, 90, 180];
    c.m_stability = 3_000;
    c.m_clt = 50;
    c
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let spec = ModelSpec::sparse_default();
    let learner = Learner::Single(EstimatorConfig::st(PenaltyRule::sqrt_n()));
    let run = || {
        let s = mc_sigma2(&spec, &learner, 90, 5_000, StreamKey::new(1, 1)).unwrap();
        let g = mc_gamma(&spec, &learner, 90, 5_000, StreamKey::new(1, 2)).unwrap();
        (
            s.value.to_bits(),
            s.std_err.to_bits(),
            g.value.to_bits(),
            g.std_err.to_bits(),
        )
    };
    let one = with_workers(Some(1), run).unwrap();
    for w in [2, 3, 8] {
        assert_eq!(with_workers(Some(w), run).unwrap(), one, "{w} workers");
    }
}

#[test]
fn experiment_output_is_byte_identical_across_workers() {
    let outputs = |w: usize| {
        with_workers(Some(w), || {
            let rates = run_rate_experiment(&small(Scenario::StFixed, Mode::Comparison), None).unwrap();
            let clt = run_clt_experiment(&small(Scenario::StFixed, Mode::Single), None).unwrap();
            let cov = run_coverage_experiment(&small(Scenario::RidgeFixed, Mode::Comparison)).unwrap();
            let lam = run_lambda_experiment(&small(Scenario::LassoInnercv, Mode::Single), 3).unwrap();
            [rates, clt, cov, lam].map(|r| r.to_csv_string().unwrap())
        })
        .unwrap()
    };
    let serial = outputs(1);
    assert_eq!(outputs(4), serial);
    assert_eq!(outputs(1), serial);
}
