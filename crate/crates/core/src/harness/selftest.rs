//! Small-instance oracle checks runnable from the command line.

use nalgebra::{DMatrix, DVector};

use crate::estimators::{fit_lasso, fit_ols, fit_ridge, soft_threshold, EstimatorConfig, PenaltyRule};
use crate::linmodel::{cond_risk_single, loss_single, sample_dataset, sample_point, Dataset, ModelSpec};
use crate::rng::StreamKey;
use crate::stability::mc_constant_c;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> Check {
    match f() {
        Ok(detail) => Check {
            name,
            passed: true,
            detail,
        },
        Err(detail) => Check {
            name,
            passed: false,
            detail,
        },
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// 3×3 inverse by cofactors.
fn inverse3(m: &DMatrix<f64>) -> DMatrix<f64> {
    let c = |r: usize, s: usize| m[(r % 3, s % 3)];
    let mut inv = DMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            inv[(j, i)] = c(i + 1, j + 1) * c(i + 2, j + 2) - c(i + 1, j + 2) * c(i + 2, j + 1);
        }
    }
    let det: f64 = (0..3).map(|j| m[(0, j)] * inv[(j, 0)]).sum();
    inv / det
}

pub fn run(seed: u64) -> SelftestReport {
    let mut checks = Vec::new();

    checks.push(check("ols-vs-explicit-3x3-inverse", || {
        let spec = ModelSpec::new(vec![1.0, -2.0, 0.5], 1.0).map_err(err)?;
        let data = sample_dataset(&spec, 50, &mut StreamKey::new(seed, 1).stream(0)).map_err(err)?;
        let x = data.x();
        let want = inverse3(&(x.transpose() * x)) * (x.transpose() * data.y());
        let got = fit_ols(&data).map_err(err)?.beta_hat;
        let gap = (got - want).amax();
        if gap < 1e-10 {
            Ok(format!("max gap {gap:.1e}"))
        } else {
            Err(format!("max gap {gap:.1e}"))
        }
    }));

    checks.push(check("ridge-vs-explicit-2x2-inverse", || {
        let spec = ModelSpec::new(vec![2.0, 0.0], 1.0).map_err(err)?;
        let data = sample_dataset(&spec, 20, &mut StreamKey::new(seed, 2).stream(0)).map_err(err)?;
        let lam = 3.5;
        let x = data.x();
        let a = x.transpose() * x + DMatrix::identity(2, 2) * lam;
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        let inv = DMatrix::from_row_slice(2, 2, &[a[(1, 1)], -a[(0, 1)], -a[(1, 0)], a[(0, 0)]]) / det;
        let want = inv * (x.transpose() * data.y());
        let got = fit_ridge(&data, &EstimatorConfig::ridge(PenaltyRule::Fixed { value: lam }))
            .map_err(err)?
            .beta_hat;
        let gap = (got - want).amax();
        if gap < 1e-10 {
            Ok(format!("max gap {gap:.1e}"))
        } else {
            Err(format!("max gap {gap:.1e}"))
        }
    }));

    checks.push(check("lasso-equals-st-on-orthogonal-design", || {
        // Columns of a scaled Hadamard-type design are exactly orthogonal with XᵀX = nI.
        let n = 8;
        let rows: [[f64; 4]; 8] = [
            [1., 1., 1., 1.],
            [1., -1., 1., -1.],
            [1., 1., -1., -1.],
            [1., -1., -1., 1.],
            [1., 1., 1., 1.],
            [1., -1., 1., -1.],
            [1., 1., -1., -1.],
            [1., -1., -1., 1.],
        ];
        let x = DMatrix::from_fn(n, 4, |i, j| rows[i][j]);
        let mut rng = StreamKey::new(seed, 3).stream(0);
        let spec = ModelSpec::new(vec![3.0, 0.0, -1.0, 0.2], 1.0).map_err(err)?;
        let y = DVector::from_fn(n, |i, _| {
            let z = sample_point(&spec, &mut rng);
            x.row(i).transpose().dot(spec.beta_star()) + (z.y - z.x.dot(spec.beta_star()))
        });
        let data = Dataset::new(x, y).map_err(err)?;
        let lam = 4.0;
        let tol = 1e-10;
        let lasso = fit_lasso(
            &data,
            &EstimatorConfig::lasso(PenaltyRule::Fixed { value: lam }),
            tol,
            10_000,
        )
        .map_err(err)?;
        let st = soft_threshold(&fit_ols(&data).map_err(err)?.beta_hat, lam, n).map_err(err)?;
        let gap = (lasso.beta_hat - st).amax();
        if gap <= 10.0 * tol {
            Ok(format!("max gap {gap:.1e}"))
        } else {
            Err(format!("max gap {gap:.1e}"))
        }
    }));

    checks.push(check("cond-risk-vs-nested-mc", || {
        let spec = ModelSpec::new(vec![1.0, 0.0, -1.0], 2.0).map_err(err)?;
        let beta = DVector::from_vec(vec![0.5, 0.3, -1.2]);
        let mut rng = StreamKey::new(seed, 4).stream(0);
        let m = 200_000;
        let losses: Vec<f64> = (0..m)
            .map(|_| loss_single(&sample_point(&spec, &mut rng), &beta).unwrap())
            .collect();
        let (mean, var) = crate::numeric::mean_var(&losses);
        let se = (var / m as f64).sqrt();
        let want = cond_risk_single(&beta, &spec).map_err(err)?;
        let z = (mean - want) / se;
        let msg = format!("nested mean {mean:.5} vs closed form {want:.5} ({z:+.2} SE)");
        if z.abs() < 3.0 {
            Ok(msg)
        } else {
            Err(msg)
        }
    }));

    checks.push(check("constant-c-vs-closed-form", || {
        // With isotropic Gaussian features C = 8 p τ⁴ for any β*.
        let spec = ModelSpec::new(vec![0.0], 1.0).map_err(err)?;
        let est = mc_constant_c(&spec, 200_000, StreamKey::new(seed, 5)).map_err(err)?;
        let z = (est.value - 8.0) / est.std_err;
        let msg = format!("MC {:.4} ± {:.4} vs 8 ({z:+.2} SE)", est.value, est.std_err);
        if z.abs() < 3.0 {
            Ok(msg)
        } else {
            Err(msg)
        }
    }));

    SelftestReport { checks }
}
