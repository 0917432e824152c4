use nalgebra::DVector;

use super::LassoSettings;
use crate::error::{Error, Result};
use crate::linmodel::GramStats;

#[derive(Debug, Clone)]
pub struct CdOutcome {
    pub beta: DVector<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Largest coordinate change in the final sweep.
    pub last_update: f64,
    /// Objective after each sweep, when tracing was requested.
    pub objective_trace: Option<Vec<f64>>,
}

/// `½‖y − Xβ‖² + λ‖β‖₁`, from sufficient statistics.
pub fn lasso_objective(stats: &GramStats, beta: &DVector<f64>, lambda: f64) -> f64 {
    0.5 * stats.sse(beta) + lambda * beta.lp_norm(1)
}

/// Cyclic coordinate descent on the Gram form of the Lasso.
///
/// Coordinate `j` is set to `S(Xⱼᵀy − Σ_{k≠j} Gⱼₖβₖ, λ) / Gⱼⱼ`, where `S` is
/// scalar soft-thresholding. `G β` is updated incrementally.
pub fn coordinate_descent(
    stats: &GramStats,
    lambda: f64,
    settings: &LassoSettings,
    warm_start: Option<&DVector<f64>>,
    trace: bool,
) -> Result<CdOutcome> {
    let p = stats.p();
    let g = &stats.xtx;
    let mut beta = match warm_start {
        Some(b) if b.len() == p => b.clone(),
        Some(b) => {
            return Err(Error::InvalidInput(format!(
                "warm start has length {}, expected {p}",
                b.len()
            )));
        }
        None => DVector::zeros(p),
    };
    let mut g_beta = g * &beta;
    let mut objectives = trace.then(Vec::new);
    let mut last_update = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < settings.max_iter {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..p {
            let gjj = g[(j, j)];
            let old = beta[j];
            let new = if gjj > 0.0 {
                let rho = stats.xty[j] - g_beta[j] + gjj * old;
                soft(rho, lambda) / gjj
            } else {
                0.0
            };
            let change = new - old;
            if change != 0.0 {
                beta[j] = new;
                g_beta.axpy(change, &g.column(j), 1.0);
                max_change = max_change.max(change.abs());
            }
        }
        if let Some(objs) = objectives.as_mut() {
            objs.push(lasso_objective(stats, &beta, lambda));
        }
        last_update = max_change;
        if max_change < settings.tol {
            return Ok(CdOutcome {
                beta,
                sweeps,
                converged: true,
                last_update,
                objective_trace: objectives,
            });
        }
    }
    Ok(CdOutcome {
        beta,
        sweeps,
        converged: false,
        last_update,
        objective_trace: objectives,
    })
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}
