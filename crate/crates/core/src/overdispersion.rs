//! Maximum likelihood for the overdispersion α₀ with β held at a plug-in
//! estimate, and percentile bootstrap intervals for it.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logreg::{fit, DesignMatrix, FitOptions, Responses};
use crate::models::{dm_log_pmf_binary, LogisticModel};
use crate::rng::stream_rng;

pub const SEARCH_LO: f64 = 1e-4;
pub const SEARCH_HI: f64 = 1e7;
const GRID_POINTS: usize = 60;
const LOG_TOLERANCE: f64 = 1e-6;
const BOUNDARY_MARGIN: f64 = 1e-3;
const FLAT_RANGE: f64 = 1e-10;
const MAX_FAILURE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub alpha0_hat: f64,
    pub log_likelihood: f64,
    /// The maximiser lies within 1e-3 (in log α₀) of a search bound.
    pub boundary_flag: bool,
}

/// `Σⱼ log DM(sⱼ; m, α₀τⱼ)` for fixed posteriors.
pub fn profile_log_lik(taus: &[f64], votes: &[u32], m: u32, alpha0: f64) -> f64 {
    taus.iter().zip(votes).map(|(&t, &s)| dm_log_pmf_binary(s, m, alpha0, t)).sum()
}

fn check_votes(x: &DesignMatrix, votes: &[u32], m: u32) -> Result<()> {
    if x.n() != votes.len() {
        return Err(Error::DimensionMismatch { expected: x.n(), actual: votes.len() });
    }
    if m == 0 {
        return Err(Error::invalid("group size must be at least 1"));
    }
    if m == 1 {
        return Err(Error::Identifiability("a single vote per item carries no information on α₀".into()));
    }
    if let Some(&s) = votes.iter().find(|&&s| s > m) {
        return Err(Error::invalid(format!("vote count {s} exceeds m = {m}")));
    }
    Ok(())
}

/// Maximises the profile likelihood over `log α₀ ∈ [log 1e-4, log 1e7]`:
/// a 60-point grid scan, then golden-section search in the bracket around
/// the best grid point.
pub fn estimate_alpha0(x: &DesignMatrix, votes: &[u32], m: u32, beta_hat: &LogisticModel) -> Result<AlphaEstimate> {
    check_votes(x, votes, m)?;
    let taus = x.posteriors(beta_hat)?;
    estimate_from_posteriors(&taus, votes, m)
}

pub fn estimate_from_posteriors(taus: &[f64], votes: &[u32], m: u32) -> Result<AlphaEstimate> {
    let f = |t: f64| profile_log_lik(taus, votes, m, t.exp());
    let (lo, hi) = (SEARCH_LO.ln(), SEARCH_HI.ln());
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|k| lo + k as f64 * step).collect();
    let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("log-likelihood is not finite on the search grid".into()));
    }
    let (best, &vmax) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    let vmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    if vmax - vmin < FLAT_RANGE {
        return Err(Error::Degenerate("log-likelihood is flat in α₀".into()));
    }

    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(GRID_POINTS - 1)];
    let (t, v) = golden_section_max(&f, a, b, LOG_TOLERANCE);
    // Keep the grid point if refinement did not improve on it.
    let (t, v) = if v >= vmax { (t, v) } else { (grid[best], vmax) };
    Ok(AlphaEstimate {
        alpha0_hat: t.exp(),
        log_likelihood: v,
        boundary_flag: t - lo < BOUNDARY_MARGIN || hi - t < BOUNDARY_MARGIN,
    })
}

/// Golden-section search for a maximum of `f` on `[a, b]`, including the
/// endpoints as candidates.
fn golden_section_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let (fa0, fb0, a0, b0) = (f(a), f(b), a, b);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for cand in [(a0, fa0), (b0, fb0)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    best
}

/// How β̂ is obtained on each bootstrap resample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BetaRefit {
    /// Keep the supplied β̂.
    Fixed,
    /// Refit on the resampled ground-truth labels.
    GroundTruth(Vec<bool>),
    /// Refit on the resampled votes.
    Votes,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaBootstrap {
    /// Ordered by resample index.
    pub estimates: Vec<f64>,
    pub ci: (f64, f64),
    pub level: f64,
    /// Resamples whose estimation failed and were redrawn.
    pub failures: usize,
}

/// Quantile by linear interpolation between order statistics (type 7).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

const MAX_ATTEMPTS_PER_RESAMPLE: usize = 50;

/// Nonparametric bootstrap over rows `(yⱼ, sⱼ)`: each resample refits β̂ as
/// `refit` directs and re-estimates α₀. Returns the estimates and the
/// equal-tail percentile interval at `level`.
pub fn bootstrap_alpha0<R: Rng + ?Sized>(
    x: &DesignMatrix,
    votes: &[u32],
    m: u32,
    beta_hat: &LogisticModel,
    refit: &BetaRefit,
    b: usize,
    level: f64,
    rng: &mut R,
) -> Result<AlphaBootstrap> {
    check_votes(x, votes, m)?;
    if b < 100 {
        return Err(Error::invalid(format!("at least 100 bootstrap resamples are required, got {b}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("level must lie in (0, 1), got {level}")));
    }
    if let BetaRefit::GroundTruth(labels) = refit {
        if labels.len() != x.n() {
            return Err(Error::DimensionMismatch { expected: x.n(), actual: labels.len() });
        }
    }
    let base_seed: u64 = rng.random();
    let n = x.n();
    let y_votes = Responses::votes(votes.to_vec(), m)?;

    let one = |idx: &[usize]| -> Result<f64> {
        let xb = x.select(idx)?;
        let sb: Vec<u32> = idx.iter().map(|&j| votes[j]).collect();
        let beta = match refit {
            BetaRefit::Fixed => beta_hat.clone(),
            BetaRefit::GroundTruth(labels) => {
                let zb: Vec<bool> = idx.iter().map(|&j| labels[j]).collect();
                fit(&xb, &Responses::labels(&zb), &FitOptions::default())?.model
            }
            BetaRefit::Votes => fit(&xb, &y_votes.select(idx), &FitOptions::default())?.model,
        };
        Ok(estimate_alpha0(&xb, &sb, m, &beta)?.alpha0_hat)
    };

    let outcomes: Vec<Result<(f64, usize)>> = (0..b)
        .into_par_iter()
        .map(|k| {
            let mut stream = stream_rng(base_seed, k as u64);
            let mut failed = 0;
            for _ in 0..MAX_ATTEMPTS_PER_RESAMPLE {
                let idx: Vec<usize> = (0..n).map(|_| stream.random_range(0..n)).collect();
                match one(&idx) {
                    Ok(a) => return Ok((a, failed)),
                    Err(Error::Separation { .. } | Error::Rank(_) | Error::Degenerate(_)) => failed += 1,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::TooManyFailures { what: "bootstrap resample".into(), failed, attempted: failed })
        })
        .collect();
    let outcomes: Vec<(f64, usize)> = outcomes.into_iter().collect::<Result<_>>()?;
    let failures: usize = outcomes.iter().map(|o| o.1).sum();
    if failures as f64 > MAX_FAILURE_FRACTION * b as f64 {
        return Err(Error::TooManyFailures { what: "bootstrap α₀ estimates".into(), failed: failures, attempted: b + failures });
    }
    let estimates: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let mut sorted = estimates.clone();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(AlphaBootstrap { ci: (quantile(&sorted, tail), quantile(&sorted, 1.0 - tail)), estimates, level, failures })
}
