//! Posterior class-probabilities, posterior-driven label noise, and the
//! Multinomial / Dirichlet-Multinomial models for labels aggregated over a
//! group of annotators.
//!
//! Class indices are zero-based. For two-class problems class 0 is the
//! "positive" class whose probability is the logistic function of the linear
//! predictor, and `VoteCounts::counts[0]` is the number of positive votes.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_factorial, ln_rising_factorial, log_sum_exp, sigmoid};

/// Entries of `τ` are clamped to this distance from {0, 1} before they are
/// used as Dirichlet parameters.
pub const TAU_CLAMP: f64 = 1e-12;

const SUM_TOLERANCE: f64 = 1e-12;

/// A vector of `g ≥ 2` class probabilities summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::invalid("a probability vector needs at least two classes"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid(format!("probabilities out of [0, 1]: {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self(probs))
    }

    /// `(tau1, 1 − tau1)`
    pub fn binary(tau1: f64) -> Result<Self> {
        Self::new(vec![tau1, 1.0 - tau1])
    }

    pub fn uniform(g: usize) -> Result<Self> {
        Self::new(vec![1.0 / g as f64; g])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }

    /// Probability of class 0.
    pub fn first(&self) -> f64 {
        self.0[0]
    }

    /// Entries clamped to `[TAU_CLAMP, 1 − TAU_CLAMP]` and renormalised, so that
    /// every Dirichlet parameter `α₀τᵢ` is strictly positive.
    pub fn clamped(&self) -> Vec<f64> {
        let clamped: Vec<f64> = self.0.iter().map(|p| p.clamp(TAU_CLAMP, 1.0 - TAU_CLAMP)).collect();
        let sum: f64 = clamped.iter().sum();
        clamped.into_iter().map(|p| p / sum).collect()
    }
}

/// Coefficients `(β₀, β₁)` of a binary logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub slopes: Vec<f64>,
}

impl LogisticModel {
    pub fn new(intercept: f64, slopes: Vec<f64>) -> Result<Self> {
        if !intercept.is_finite() || slopes.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("logistic coefficients must be finite"));
        }
        Ok(Self { intercept, slopes })
    }

    pub fn zeros(p: usize) -> Self {
        Self { intercept: 0.0, slopes: vec![0.0; p] }
    }

    /// Builds a model from the stacked vector `(β₀, β₁ᵀ)ᵀ`.
    pub fn from_stacked(beta: &[f64]) -> Result<Self> {
        let (b0, rest) = beta
            .split_first()
            .ok_or_else(|| Error::invalid("empty coefficient vector"))?;
        Self::new(*b0, rest.to_vec())
    }

    pub fn stacked(&self) -> Vec<f64> {
        std::iter::once(self.intercept).chain(self.slopes.iter().copied()).collect()
    }

    pub fn dim(&self) -> usize {
        self.slopes.len()
    }

    pub fn linear_predictor(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.slopes.len() {
            return Err(Error::DimensionMismatch { expected: self.slopes.len(), actual: y.len() });
        }
        Ok(self.intercept + dot(&self.slopes, y))
    }

    /// Probability of the positive class at `y`.
    pub fn tau1(&self, y: &[f64]) -> Result<f64> {
        self.linear_predictor(y).map(sigmoid)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            intercept: self.intercept * c,
            slopes: self.slopes.iter().map(|b| b * c).collect(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Size and overdispersion of a labelling group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupModel {
    pub group_size: u32,
    pub alpha0: f64,
}

impl GroupModel {
    pub fn new(group_size: u32, alpha0: f64) -> Result<Self> {
        if group_size == 0 {
            return Err(Error::invalid("group size must be at least 1"));
        }
        if !(alpha0 > 0.0 && alpha0.is_finite()) {
            return Err(Error::invalid(format!("alpha0 must be positive and finite, got {alpha0}")));
        }
        Ok(Self { group_size, alpha0 })
    }

    pub fn m(&self) -> u32 {
        self.group_size
    }
}

/// A single annotated label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OneHotLabel {
    pub class_index: usize,
}

impl OneHotLabel {
    pub fn one_hot(&self, g: usize) -> Vec<u32> {
        let mut v = vec![0; g];
        v[self.class_index] = 1;
        v
    }
}

/// Per-class vote tallies for one item.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VoteCounts {
    pub counts: Vec<u32>,
}

impl VoteCounts {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn binary(positive: u32, m: u32) -> Result<Self> {
        if positive > m {
            return Err(Error::invalid(format!("{positive} positive votes exceed group size {m}")));
        }
        Ok(Self { counts: vec![positive, m - positive] })
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn positive(&self) -> u32 {
        self.counts[0]
    }
}

/// `τ(y)` under a logistic model, as `(τ₁, 1 − τ₁)`.
///
/// The second entry is evaluated as `σ(−η)` rather than `1 − σ(η)` so that
/// neither tail underflows to zero for `|η|` up to ~700.
pub fn posterior_probs(y: &[f64], model: &LogisticModel) -> Result<ProbabilityVector> {
    let eta = model.linear_predictor(y)?;
    Ok(ProbabilityVector(vec![sigmoid(eta), sigmoid(-eta)]))
}

/// Probability that a label drawn from `τ` differs from an independent draw
/// of the true class from `τ`: `1 − Σ τᵢ²`.
pub fn label_error_prob(tau: &ProbabilityVector) -> f64 {
    (1.0 - tau.0.iter().map(|t| t * t).sum::<f64>()).max(0.0)
}

/// One annotator's label drawn from the posterior class-probabilities.
pub fn sample_label<R: Rng + ?Sized>(tau: &ProbabilityVector, rng: &mut R) -> OneHotLabel {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &p) in tau.0.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        cumulative += p;
        if u < cumulative {
            return OneHotLabel { class_index: i };
        }
    }
    OneHotLabel { class_index: last_positive }
}

/// Multinomial(n, probs) by sequential conditional binomials.
fn sample_multinomial<R: Rng + ?Sized>(n: u32, probs: &[f64], rng: &mut R) -> Vec<u32> {
    let g = probs.len();
    let mut counts = vec![0u32; g];
    let mut remaining = n;
    let mut mass_left = 1.0;
    for i in 0..g - 1 {
        if remaining == 0 {
            break;
        }
        let p = if mass_left > 0.0 { (probs[i] / mass_left).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(remaining as u64, p)
            .expect("conditional probability is clamped into [0, 1]")
            .sample(rng) as u32;
        counts[i] = k;
        remaining -= k;
        mass_left -= probs[i];
    }
    counts[g - 1] += remaining;
    counts
}

/// Votes from `m` annotators who each label independently from `τ`.
pub fn sample_votes_multinomial<R: Rng + ?Sized>(
    group: &GroupModel,
    tau: &ProbabilityVector,
    rng: &mut R,
) -> VoteCounts {
    VoteCounts { counts: sample_multinomial(group.group_size, &tau.0, rng) }
}

/// Log of a Gamma(shape, 1) variate.
///
/// Marsaglia–Tsang squeeze for shape ≥ 1; for shape < 1 the usual boost
/// `G(a) = G(a + 1)·U^{1/a}` is applied in log space, which keeps very small
/// shapes (α₀τᵢ ≪ 1) from underflowing to an exact zero.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let u: f64 = 1.0 - rng.random::<f64>();
        return ln_gamma_variate(shape + 1.0, rng) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = 1.0 - rng.random::<f64>();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d.ln() + v.ln();
        }
    }
}

/// Dirichlet(α) draw via normalised Gamma variates, normalised in log space.
pub fn sample_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let logs: Vec<f64> = alpha.iter().map(|&a| ln_gamma_variate(a, rng)).collect();
    let norm = log_sum_exp(&logs);
    logs.iter().map(|l| (l - norm).exp()).collect()
}

/// Votes from the Dirichlet-Multinomial group model: `p ~ Dirichlet(α₀τ)`,
/// then `counts ~ Multinomial(m, p)`.
pub fn sample_votes_dm<R: Rng + ?Sized>(
    group: &GroupModel,
    tau: &ProbabilityVector,
    rng: &mut R,
) -> VoteCounts {
    let alpha: Vec<f64> = tau.clamped().iter().map(|t| group.alpha0 * t).collect();
    let p = sample_dirichlet(&alpha, rng);
    VoteCounts { counts: sample_multinomial(group.group_size, &p, rng) }
}

/// Log-pmf of the Dirichlet-Multinomial(m, α₀τ) at `s`.
///
/// The Gamma-function ratios `Γ(sᵢ + α₀τᵢ)/Γ(α₀τᵢ)` and `Γ(m + α₀)/Γ(α₀)` are
/// rising factorials in the integer counts and are summed term by term, which
/// stays accurate for α₀ far beyond where the log-Gamma differences cancel.
pub fn dm_log_pmf(s: &VoteCounts, group: &GroupModel, tau: &ProbabilityVector) -> Result<f64> {
    if s.counts.len() != tau.classes() {
        return Err(Error::DimensionMismatch { expected: tau.classes(), actual: s.counts.len() });
    }
    let m = group.group_size;
    if s.total() != m {
        return Err(Error::invalid(format!("vote counts sum to {}, expected {m}", s.total())));
    }
    let clamped = tau.clamped();
    Ok(ln_dm_kernel(&s.counts, m, group.alpha0, &clamped))
}

fn ln_dm_kernel(counts: &[u32], m: u32, alpha0: f64, clamped_tau: &[f64]) -> f64 {
    let mut lp = ln_factorial(m as u64) - ln_rising_factorial(alpha0, m);
    for (&s, &t) in counts.iter().zip(clamped_tau) {
        lp += ln_rising_factorial(alpha0 * t, s) - ln_factorial(s as u64);
    }
    lp
}

/// Log-pmf of the positive-vote count under the two-class model. This is
/// the beta-binomial law of `S₁` and the inner loop of α₀ estimation.
pub fn dm_log_pmf_binary(positive: u32, m: u32, alpha0: f64, tau1: f64) -> f64 {
    let t = tau1.clamp(TAU_CLAMP, 1.0 - TAU_CLAMP);
    ln_dm_kernel(&[positive, m - positive], m, alpha0, &[t, 1.0 - t])
}

/// `Var(S₁) = m τ (1 − τ) (m + α₀) / (1 + α₀)`
pub fn dm_variance(group: &GroupModel, tau1: f64) -> f64 {
    let m = group.group_size as f64;
    m * tau1 * (1.0 - tau1) * (m + group.alpha0) / (1.0 + group.alpha0)
}

/// Equal-tailed prediction interval for the class-0 count.
///
/// `lo` is the largest count with `Pr(S₁ < lo) ≤ (1 − level)/2` and `hi` the
/// smallest with `Pr(S₁ > hi) ≤ (1 − level)/2`, from the exact pmf of the
/// class-0 marginal, so coverage is never below `level`.
pub fn dm_prediction_interval(group: &GroupModel, tau: &ProbabilityVector, level: f64) -> Result<(u32, u32)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("level must lie in (0, 1), got {level}")));
    }
    let m = group.group_size;
    let pmf = binary_pmf(m, group.alpha0, tau.first());
    let tail = (1.0 - level) / 2.0;

    let mut lo = 0;
    let mut below = 0.0;
    for (s, &p) in pmf.iter().enumerate() {
        if below + p > tail {
            lo = s as u32;
            break;
        }
        below += p;
    }
    let mut hi = m;
    let mut above = 0.0;
    for (s, &p) in pmf.iter().enumerate().rev() {
        if above + p > tail {
            hi = s as u32;
            break;
        }
        above += p;
    }
    Ok((lo, hi.max(lo)))
}

/// Exact pmf of the class-0 count over `0..=m`.
pub fn binary_pmf(m: u32, alpha0: f64, tau1: f64) -> Vec<f64> {
    (0..=m).map(|s| dm_log_pmf_binary(s, m, alpha0, tau1).exp()).collect()
}
