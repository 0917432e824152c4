//! Gaussian linear model `y = X β* + ε` with isotropic standard-normal
//! features, its per-point squared losses and closed-form conditional risks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dims, Error, Result};

/// Ground-truth model: coefficients `beta_star` and noise standard deviation `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSpec", into = "RawModelSpec")]
pub struct ModelSpec {
    beta_star: DVector<f64>,
    tau: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModelSpec {
    beta_star: Vec<f64>,
    tau: f64,
}

impl TryFrom<RawModelSpec> for ModelSpec {
    type Error = Error;
    fn try_from(raw: RawModelSpec) -> Result<Self> {
        ModelSpec::new(raw.beta_star, raw.tau)
    }
}

impl From<ModelSpec> for RawModelSpec {
    fn from(spec: ModelSpec) -> Self {
        RawModelSpec {
            beta_star: spec.beta_star.iter().copied().collect(),
            tau: spec.tau,
        }
    }
}

impl ModelSpec {
    /// `tau == 0` is accepted so that noiseless sanity cases can be expressed.
    pub fn new(beta_star: Vec<f64>, tau: f64) -> Result<Self> {
        if beta_star.is_empty() {
            return Err(Error::InvalidInput("beta_star must have p >= 1 entries".into()));
        }
        if beta_star.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("beta_star entries must be finite".into()));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidInput(format!("tau must be finite and >= 0, got {tau}")));
        }
        Ok(Self {
            beta_star: DVector::from_vec(beta_star),
            tau,
        })
    }

    /// `β* = (3, 1, −5, 3, 0, …, 0)` in dimension 10 with `τ = 10`.
    pub fn sparse_default() -> Self {
        Self::new(vec![3.0, 1.0, -5.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 10.0).unwrap()
    }

    /// Fully dense `β* = (3, 1, −5, 3, 4, −3, 10, 8, 5, 2)` with `τ = 10`.
    pub fn dense_default() -> Self {
        Self::new(vec![3.0, 1.0, -5.0, 3.0, 4.0, -3.0, 10.0, 8.0, 5.0, 2.0], 10.0).unwrap()
    }

    pub fn beta_star(&self) -> &DVector<f64> {
        &self.beta_star
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn p(&self) -> usize {
        self.beta_star.len()
    }

    /// Number of exact zeros in `β*`.
    pub fn sparsity(&self) -> usize {
        self.beta_star.iter().filter(|b| **b == 0.0).count()
    }

    /// `‖β*‖₀`
    pub fn support_size(&self) -> usize {
        self.p() - self.sparsity()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    pub x: DVector<f64>,
    pub y: f64,
}

/// `n` rows of features with their responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::InvalidInput(format!(
                "feature matrix has {} rows but response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn point(&self, i: usize) -> DataPoint {
        DataPoint {
            x: self.x.row(i).transpose(),
            y: self.y[i],
        }
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let x = self.x.select_rows(rows);
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i]));
        Dataset { x, y }
    }

    /// Sufficient statistics over all rows.
    pub fn gram_stats(&self) -> GramStats {
        let all: Vec<usize> = (0..self.n()).collect();
        self.gram_stats_of(&all)
    }

    /// Sufficient statistics over the given rows.
    pub fn gram_stats_of(&self, rows: &[usize]) -> GramStats {
        let p = self.p();
        let mut stats = GramStats::zeros(p);
        for &i in rows {
            let row = self.x.row(i);
            let y = self.y[i];
            for a in 0..p {
                let xa = row[a];
                stats.xty[a] += xa * y;
                for b in 0..=a {
                    stats.xtx[(a, b)] += xa * row[b];
                }
            }
            stats.yty += y * y;
        }
        stats.n = rows.len();
        stats.symmetrize();
        stats
    }
}

/// Sufficient statistics `(XᵀX, Xᵀy, yᵀy, n)` of a block of data points.
///
/// Every learner in this crate depends on its training data only through
/// these, and the held-out squared error of a linear predictor on a block is
/// `yᵀy − 2βᵀXᵀy + βᵀXᵀXβ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramStats {
    pub n: usize,
    pub xtx: DMatrix<f64>,
    pub xty: DVector<f64>,
    pub yty: f64,
}

impl GramStats {
    pub fn zeros(p: usize) -> Self {
        Self {
            n: 0,
            xtx: DMatrix::zeros(p, p),
            xty: DVector::zeros(p),
            yty: 0.0,
        }
    }

    pub fn p(&self) -> usize {
        self.xty.len()
    }

    pub fn add_point(&mut self, z: &DataPoint) {
        self.xtx.ger(1.0, &z.x, &z.x, 1.0);
        self.xty.axpy(z.y, &z.x, 1.0);
        self.yty += z.y * z.y;
        self.n += 1;
    }

    pub fn merged(&self, other: &GramStats) -> GramStats {
        GramStats {
            n: self.n + other.n,
            xtx: &self.xtx + &other.xtx,
            xty: &self.xty + &other.xty,
            yty: self.yty + other.yty,
        }
    }

    /// Statistics of `self` with the rows summarized by `part` removed.
    pub fn without(&self, part: &GramStats) -> GramStats {
        GramStats {
            n: self.n - part.n,
            xtx: &self.xtx - &part.xtx,
            xty: &self.xty - &part.xty,
            yty: self.yty - part.yty,
        }
    }

    pub fn sum<'a>(p: usize, parts: impl IntoIterator<Item = &'a GramStats>) -> GramStats {
        let mut acc = GramStats::zeros(p);
        for part in parts {
            acc.n += part.n;
            acc.xtx += &part.xtx;
            acc.xty += &part.xty;
            acc.yty += part.yty;
        }
        acc
    }

    /// Sum of squared residuals `Σ (yᵢ − xᵢᵀβ)²` over the summarized rows.
    pub fn sse(&self, beta: &DVector<f64>) -> f64 {
        let quad = (&self.xtx * beta).dot(beta);
        (self.yty - 2.0 * beta.dot(&self.xty) + quad).max(0.0)
    }

    fn symmetrize(&mut self) {
        let p = self.p();
        for a in 0..p {
            for b in 0..a {
                self.xtx[(b, a)] = self.xtx[(a, b)];
            }
        }
    }
}

pub fn sample_point<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> DataPoint {
    let p = spec.p();
    let x = DVector::from_iterator(p, (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let noise: f64 = rng.sample(StandardNormal);
    let y = x.dot(spec.beta_star()) + spec.tau() * noise;
    DataPoint { x, y }
}

/// Draws `n` i.i.d. points: standard-normal features, then `y = Xβ* + ε`.
///
/// Each row consumes `p` feature normals followed by one noise normal, so a
/// dataset of size `n` is a prefix-extension of one of size `n − 1` drawn
/// from the same stream.
pub fn sample_dataset<R: Rng + ?Sized>(spec: &ModelSpec, n: usize, rng: &mut R) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be >= 1".into()));
    }
    let p = spec.p();
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let z = sample_point(spec, rng);
        x.row_mut(i).copy_from(&z.x.transpose());
        y[i] = z.y;
    }
    Dataset::new(x, y)
}

/// Draws the sufficient statistics of `n` i.i.d. model points directly.
///
/// For `n ≥ p` this uses the Bartlett decomposition `XᵀX = LLᵀ`, with
/// `L` lower triangular, `L_ii² ~ χ²(n − i)` (zero-based `i`) and standard
/// normal sub-diagonal entries. Writing `X = Q Lᵀ` with orthonormal `Q`,
/// the noise projects as `Qᵀε = τ g` with `g ~ N(0, I_p)` and an independent
/// residual `‖(I − QQᵀ)ε‖² ~ τ² χ²(n − p)`. The result is equal in
/// distribution to `sample_dataset(..).gram_stats()` at O(p²) cost.
/// Below `p` points it falls back to explicit sampling.
pub fn sample_gram_stats<R: Rng + ?Sized>(spec: &ModelSpec, n: usize, rng: &mut R) -> GramStats {
    let p = spec.p();
    if n < p {
        let mut stats = GramStats::zeros(p);
        for _ in 0..n {
            stats.add_point(&sample_point(spec, rng));
        }
        return stats;
    }
    let mut l = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let dof = (n - i) as f64;
        let c2: f64 = ChiSquared::new(dof).expect("positive dof").sample(rng);
        l[(i, i)] = c2.sqrt();
        for j in 0..i {
            l[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let g = DVector::from_iterator(p, (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let residual = if n > p {
        ChiSquared::new((n - p) as f64).expect("positive dof").sample(rng)
    } else {
        0.0
    };
    let tau = spec.tau();
    let beta = spec.beta_star();
    let xtx = &l * l.transpose();
    let lg = &l * &g;
    let xtx_beta = &xtx * beta;
    let xty = &xtx_beta + &lg * tau;
    let yty = beta.dot(&xtx_beta) + 2.0 * tau * beta.dot(&lg) + tau * tau * (g.norm_squared() + residual);
    GramStats { n, xtx, xty, yty }
}

/// `(y₀ − x₀ᵀβ̂)²`
pub fn loss_single(z0: &DataPoint, beta_hat: &DVector<f64>) -> Result<f64> {
    ensure_dims("loss_single", z0.x.len(), beta_hat.len())?;
    let r = z0.y - z0.x.dot(beta_hat);
    Ok(r * r)
}

/// `(y₀ − x₀ᵀβ₁)² − (y₀ − x₀ᵀβ₂)²`; negative values favor `beta1`.
///
/// Evaluated in the factored form `x₀ᵀ(β₂ − β₁)·(2y₀ − x₀ᵀ(β₁ + β₂))`, which
/// avoids cancellation when the two predictors are close.
pub fn loss_diff(z0: &DataPoint, beta1: &DVector<f64>, beta2: &DVector<f64>) -> Result<f64> {
    ensure_dims("loss_diff", z0.x.len(), beta1.len())?;
    ensure_dims("loss_diff", z0.x.len(), beta2.len())?;
    let (mut gap, mut sum) = (0.0, 0.0);
    for i in 0..z0.x.len() {
        gap += z0.x[i] * (beta2[i] - beta1[i]);
        sum += z0.x[i] * (beta1[i] + beta2[i]);
    }
    Ok(gap * (2.0 * z0.y - sum))
}

/// `E[(Y₀ − X₀ᵀβ̂)² | β̂] = τ² + ‖β* − β̂‖²` for isotropic features.
pub fn cond_risk_single(beta_hat: &DVector<f64>, spec: &ModelSpec) -> Result<f64> {
    ensure_dims("cond_risk_single", spec.p(), beta_hat.len())?;
    Ok(spec.tau() * spec.tau() + (spec.beta_star() - beta_hat).norm_squared())
}

/// `‖β* − β₁‖² − ‖β* − β₂‖²`, evaluated as `(β₂ − β₁)ᵀ(2β* − β₁ − β₂)`.
pub fn cond_risk_diff(beta1: &DVector<f64>, beta2: &DVector<f64>, spec: &ModelSpec) -> Result<f64> {
    ensure_dims("cond_risk_diff", spec.p(), beta1.len())?;
    ensure_dims("cond_risk_diff", spec.p(), beta2.len())?;
    let b = spec.beta_star();
    Ok((0..b.len())
        .map(|i| (beta2[i] - beta1[i]) * (2.0 * b[i] - beta1[i] - beta2[i]))
        .sum())
}
