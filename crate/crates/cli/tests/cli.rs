use std::path::Path;
use std::process::{Command, Output};

fn relstab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relstab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn rates_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = relstab(
        &[
            "rates",
            "--scenario",
            "st-fixed",
            "--mode",
            "comparison",
            "--n-grid",
            "18,90,180",
            "--m",
            "2000",
            "--out",
            "rates.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,mode,n,sigma2,sigma2_se,gamma,gamma_se,r,r_se,slope_sigma2,slope_gamma,slope_r"
    );
    assert_eq!(lines.count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("st-fixed,comparison,18,"));
    let meta = std::fs::read_to_string(dir.path().join("rates.csv.meta.json")).unwrap();
    assert!(meta.contains("\"elapsed_secs\"") && meta.contains("\"version\""));
    assert!(stderr(&o).contains("slopes:"));
}

#[test]
fn clt_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        [
            "clt", "--n", "90", "--reps", "200", "--m", "5000", "--seed", "7", "--out", out,
        ]
    };
    let a = relstab(&args("a.csv"), dir.path());
    assert!(a.status.success(), "{}", stderr(&a));
    // The second run reads the cached sigma^2; a third skips the cache and uses one worker.
    let b = relstab(&args("b.csv"), dir.path());
    let mut no_cache: Vec<&str> = args("c.csv").to_vec();
    no_cache.extend(["--no-cache", "--workers", "1"]);
    let c = relstab(&no_cache, dir.path());
    assert!(b.status.success() && c.status.success());
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.csv"), read("c.csv"));
    let text = String::from_utf8(read("a.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "scenario,mode,n,rep,stat_true_sigma,stat_hat_sigma"
    );
    assert_eq!(text.lines().count(), 201);
}

#[test]
fn coverage_and_stability_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let o = relstab(
        &["coverage", "--mode", "comparison", "--n", "90", "--reps", "100"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        out.lines().next().unwrap(),
        "scenario,mode,n,method,covered_count,total,coverage,binomial_se"
    );
    assert!(out.contains("naive-diff") && out.contains("prop1-diff"));

    let o = relstab(
        &[
            "stability",
            "--scenario",
            "ridge-fixed",
            "--n",
            "90",
            "--m",
            "2000",
            "--no-cache",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 2);
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.toml"),
        "mode = \"comparison\"\nn_grid = [18, 90, 180]\nm_stability = 1000\nseed = 3\n",
    )
    .unwrap();
    let o = relstab(
        &[
            "rates",
            "--config",
            "exp.toml",
            "--scenario",
            "ridge-fixed",
            "--no-cache",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.lines().nth(1).unwrap().starts_with("ridge-fixed,comparison,18,"));
}

#[test]
fn config_errors_exit_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "alpah = 0.1\n").unwrap();
    let o = relstab(&["rates", "--config", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpah"), "{}", stderr(&o));

    let o = relstab(&["clt", "--n", "91"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_grid"), "{}", stderr(&o));

    let o = relstab(&["rates", "--n-grid", "90,900"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = relstab(&["rates", "--scenario", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = relstab(&["lambdas", "--n-grid", "90,180,270"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = relstab(
        &[
            "clt",
            "--mode",
            "comparison",
            "--delta",
            "0",
            "--n",
            "90",
            "--reps",
            "10",
            "--m",
            "100",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("sigma"), "{}", stderr(&o));
}

#[test]
fn selftest_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let o = relstab(&["selftest"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.trim_end().ends_with("passed, 0 failed"), "{out}");
}
