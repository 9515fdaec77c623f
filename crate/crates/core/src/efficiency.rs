//! Asymptotic relative efficiency of vote-trained logistic regression and the
//! Monte-Carlo study of its finite-sample counterpart.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{bayes_error, beta_from_gaussian, conditional_error_rate, sample_dataset, GaussianProblem};
use crate::logreg::{fit, FitOptions, Responses};
use crate::models::{posterior_probs, sample_votes_dm, GroupModel};
use crate::rng::{derive_seed, stream_rng};

/// `m(1 + α₀)/(m + α₀)`.
pub fn theoretical_are(m: u32, alpha0: f64) -> f64 {
    let m = m as f64;
    m * (1.0 + alpha0) / (m + alpha0)
}

/// `err − bayes`, floored at zero to absorb rounding.
pub fn excess_error(err: f64, bayes: f64) -> f64 {
    (err - bayes).max(0.0)
}

const MAX_BOOTSTRAP_REDRAW_FRACTION: f64 = 0.01;
const MAX_FAILURE_FRACTION: f64 = 0.05;

/// Standard deviation (`B − 1` denominator) of `mean(g*)/mean(m*)` over `b`
/// joint resamples of the pairs. Resamples with a zero denominator are redrawn.
pub fn bootstrap_se_of_ratio<R: Rng + ?Sized>(pairs: &[(f64, f64)], b: usize, rng: &mut R) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::invalid("bootstrap needs at least two pairs"));
    }
    if b < 100 {
        return Err(Error::invalid(format!("at least 100 bootstrap resamples are required, got {b}")));
    }
    let n = pairs.len();
    let mut ratios = Vec::with_capacity(b);
    let mut redraws = 0usize;
    while ratios.len() < b {
        let (mut sg, mut sm) = (0.0, 0.0);
        for _ in 0..n {
            let (g, m) = pairs[rng.random_range(0..n)];
            sg += g;
            sm += m;
        }
        if sm == 0.0 {
            redraws += 1;
            if redraws as f64 > MAX_BOOTSTRAP_REDRAW_FRACTION * b as f64 {
                return Err(Error::TooManyFailures {
                    what: "bootstrap resamples with zero denominator".into(),
                    failed: redraws,
                    attempted: redraws + ratios.len(),
                });
            }
            continue;
        }
        ratios.push(sg / sm);
    }
    let mean = ratios.iter().sum::<f64>() / b as f64;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    Ok(var.sqrt())
}

/// Seed of one `(m, α₀, Δ)` cell of a simulation grid, keyed by the values
/// rather than the position so a cell reproduces inside any grid.
pub fn grid_cell_seed(seed: u64, m: u32, alpha0: f64, delta: f64) -> u64 {
    derive_seed(derive_seed(derive_seed(seed, m as u64), alpha0.to_bits()), delta.to_bits())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreConfig {
    pub n: usize,
    pub p: usize,
    pub delta: f64,
    pub prior1: f64,
    pub m: u32,
    pub alpha0: f64,
    pub replications: usize,
    pub seed: u64,
    pub bootstrap_resamples: usize,
}

impl AreConfig {
    /// The simulation design of the reference study: `n = 500`, `p = 2`,
    /// equal priors, 1000 replications.
    pub fn reference(m: u32, alpha0: f64, delta: f64, seed: u64) -> Self {
        Self { n: 500, p: 2, delta, prior1: 0.5, m, alpha0, replications: 1000, seed, bootstrap_resamples: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreResult {
    pub theoretical_are: f64,
    pub simulated_re: f64,
    /// Absent with fewer than two successful replications.
    pub bootstrap_se: Option<f64>,
    pub mean_excess_error_g: f64,
    pub mean_excess_error_m: f64,
    pub bayes_error: f64,
    /// Replications excluded because a fit failed.
    pub failures: usize,
    pub replications: usize,
}

/// Test-error excess of the ground-truth fit and the vote fit for one
/// simulated training set.
fn replicate(config: &AreConfig, problem: &GaussianProblem, group: &GroupModel, bayes: f64, r: usize) -> Result<Option<(f64, f64)>> {
    let mut rng = stream_rng(config.seed, r as u64);
    let beta = beta_from_gaussian(problem)?;
    let data = sample_dataset(problem, config.n, &mut rng)?;
    let x = data.design()?;
    let votes = (0..config.n)
        .map(|j| Ok(sample_votes_dm(group, &posterior_probs(data.row(j), &beta)?, &mut rng).positive()))
        .collect::<Result<Vec<u32>>>()?;
    let labels = data.labels.as_ref().expect("simulated data are labelled");
    let opts = FitOptions::default();
    let fits = (fit(&x, &Responses::labels(labels), &opts), fit(&x, &Responses::votes(votes, config.m)?, &opts));
    match fits {
        (Ok(g), Ok(m)) => {
            let err_g = conditional_error_rate(&g.model, problem)?.value;
            let err_m = conditional_error_rate(&m.model, problem)?.value;
            Ok(Some((excess_error(err_g, bayes), excess_error(err_m, bayes))))
        }
        (Err(e), _) | (_, Err(e)) => match e {
            Error::Separation { .. } | Error::Rank(_) => Ok(None),
            other => Err(other),
        },
    }
}

/// Simulated relative efficiency `mean(excess_G)/mean(excess_M)` on the
/// canonical Gaussian problem, with a joint bootstrap SE.
pub fn simulate_relative_efficiency(config: &AreConfig) -> Result<AreResult> {
    if config.replications == 0 {
        return Err(Error::invalid("at least one replication is required"));
    }
    if config.n < config.p + 1 {
        return Err(Error::invalid(format!("n must exceed p, got n = {} and p = {}", config.n, config.p)));
    }
    let group = GroupModel::new(config.m, config.alpha0)?;
    let problem = GaussianProblem::canonical(config.delta, config.p, config.prior1)?;
    let bayes = bayes_error(&problem)?;

    let outcomes: Vec<Option<(f64, f64)>> = (0..config.replications)
        .into_par_iter()
        .map(|r| replicate(config, &problem, &group, bayes, r))
        .collect::<Result<_>>()?;
    let pairs: Vec<(f64, f64)> = outcomes.iter().flatten().copied().collect();
    let failures = config.replications - pairs.len();
    if failures as f64 > MAX_FAILURE_FRACTION * config.replications as f64 || pairs.is_empty() {
        return Err(Error::TooManyFailures { what: "replications".into(), failed: failures, attempted: config.replications });
    }

    let k = pairs.len() as f64;
    let mean_g = pairs.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_m = pairs.iter().map(|p| p.1).sum::<f64>() / k;
    let bootstrap_se = if pairs.len() >= 2 {
        let mut rng = stream_rng(derive_seed(config.seed, u64::MAX), 0);
        Some(bootstrap_se_of_ratio(&pairs, config.bootstrap_resamples, &mut rng)?)
    } else {
        None
    };
    Ok(AreResult {
        theoretical_are: theoretical_are(config.m, config.alpha0),
        simulated_re: mean_g / mean_m,
        bootstrap_se,
        mean_excess_error_g: mean_g,
        mean_excess_error_m: mean_m,
        bayes_error: bayes,
        failures,
        replications: config.replications,
    })
}
