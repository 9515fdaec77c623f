//! Two-class normal discrimination with a common covariance matrix: the
//! logistic coefficients it implies, simulation, and exact error rates of
//! linear rules.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dataio::LabelledDataset;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, Matrix, Vector};
use crate::models::{dot, LogisticModel};
use crate::special::std_normal_cdf;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianProblem {
    /// Mahalanobis distance between the class means.
    pub delta: f64,
    /// Prior probability of the positive class (class 1).
    pub prior1: f64,
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    pub sigma: Matrix,
}

impl GaussianProblem {
    /// `Σ = I`, `μ₁ = (Δ/2, 0, …)`, `μ₂ = (−Δ/2, 0, …)`.
    pub fn canonical(delta: f64, p: usize, prior1: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!("delta must be positive, got {delta}")));
        }
        if p == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let mut mu1 = vec![0.0; p];
        let mut mu2 = vec![0.0; p];
        mu1[0] = delta / 2.0;
        mu2[0] = -delta / 2.0;
        Self::new(mu1, mu2, Matrix::identity(p, p), prior1)
    }

    /// Priors of exactly 0 or 1 are accepted for simulation; they have no
    /// finite logistic intercept.
    pub fn new(mu1: Vec<f64>, mu2: Vec<f64>, sigma: Matrix, prior1: f64) -> Result<Self> {
        let p = mu1.len();
        if mu2.len() != p || sigma.nrows() != p || sigma.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, actual: mu2.len() });
        }
        if !(0.0..=1.0).contains(&prior1) {
            return Err(Error::invalid(format!("prior1 must lie in [0, 1], got {prior1}")));
        }
        let diff = Vector::from_iterator(p, mu1.iter().zip(&mu2).map(|(a, b)| a - b));
        let delta = diff.dot(&cholesky(&sigma)?.solve(&diff)).sqrt();
        Ok(Self { delta, prior1, mu1, mu2, sigma })
    }

    pub fn p(&self) -> usize {
        self.mu1.len()
    }

    pub fn prior2(&self) -> f64 {
        1.0 - self.prior1
    }
}

/// `β₁ = Σ⁻¹(μ₁ − μ₂)`, `β₀ = −½(μ₁ + μ₂)ᵀβ₁ + log(π₁/π₂)`.
pub fn beta_from_gaussian(problem: &GaussianProblem) -> Result<LogisticModel> {
    if !(problem.prior1 > 0.0 && problem.prior1 < 1.0) {
        return Err(Error::invalid("priors of 0 or 1 have no finite logistic intercept"));
    }
    let p = problem.p();
    let diff = Vector::from_iterator(p, problem.mu1.iter().zip(&problem.mu2).map(|(a, b)| a - b));
    let slopes = cholesky(&problem.sigma)?.solve(&diff);
    let mid: Vec<f64> = problem.mu1.iter().zip(&problem.mu2).map(|(a, b)| a + b).collect();
    let intercept = -0.5 * dot(&mid, slopes.as_slice()) + (problem.prior1 / problem.prior2()).ln();
    LogisticModel::new(intercept, slopes.as_slice().to_vec())
}

/// `n` draws of (label, features): label positive with probability π₁, then
/// features from the class-conditional normal.
pub fn sample_dataset<R: Rng + ?Sized>(problem: &GaussianProblem, n: usize, rng: &mut R) -> Result<LabelledDataset> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let p = problem.p();
    let chol = cholesky(&problem.sigma)?;
    let l = chol.l();
    let identity = problem.sigma == Matrix::identity(p, p);
    let mut features = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    let mut z = vec![0.0; p];
    for _ in 0..n {
        let positive = rng.random::<f64>() < problem.prior1;
        let mu = if positive { &problem.mu1 } else { &problem.mu2 };
        for zk in z.iter_mut() {
            *zk = rng.sample(StandardNormal);
        }
        for r in 0..p {
            let noise = if identity { z[r] } else { (0..=r).map(|c| l[(r, c)] * z[c]).sum() };
            features.push(mu[r] + noise);
        }
        labels.push(positive);
    }
    let names = (1..=p).map(|k| format!("y{k}")).collect();
    LabelledDataset::new(n, p, features, names, Some(labels), None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRate {
    pub value: f64,
    /// The rule had no slope and classified on the intercept sign alone.
    pub degenerate: bool,
}

/// Exact misclassification probability of "positive when β₀ + β₁ᵀy > 0" under
/// the Gaussian problem: with `s = √(β₁ᵀΣβ₁)`,
/// `π₁Φ(−(β₀ + β₁ᵀμ₁)/s) + π₂Φ((β₀ + β₁ᵀμ₂)/s)`.
pub fn conditional_error_rate(beta_hat: &LogisticModel, problem: &GaussianProblem) -> Result<ErrorRate> {
    if beta_hat.dim() != problem.p() {
        return Err(Error::DimensionMismatch { expected: problem.p(), actual: beta_hat.dim() });
    }
    let b = Vector::from_column_slice(&beta_hat.slopes);
    let s = b.dot(&(&problem.sigma * &b)).sqrt();
    if s == 0.0 {
        let value = if beta_hat.intercept > 0.0 { problem.prior2() } else { problem.prior1 };
        return Ok(ErrorRate { value, degenerate: true });
    }
    let eta1 = beta_hat.intercept + dot(&beta_hat.slopes, &problem.mu1);
    let eta2 = beta_hat.intercept + dot(&beta_hat.slopes, &problem.mu2);
    let value = problem.prior1 * std_normal_cdf(-eta1 / s) + problem.prior2() * std_normal_cdf(eta2 / s);
    Ok(ErrorRate { value, degenerate: false })
}

pub fn bayes_error(problem: &GaussianProblem) -> Result<f64> {
    Ok(conditional_error_rate(&beta_from_gaussian(problem)?, problem)?.value)
}
