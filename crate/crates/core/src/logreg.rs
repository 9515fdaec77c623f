//! Maximum-likelihood logistic regression on ground-truth labels and on
//! aggregated vote counts, with empirical Fisher and sandwich information.
//!
//! Both likelihoods are binomial-logit with `m` trials per row: ground truth
//! is the `m = 1` case, so a single fitting routine serves both.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, Matrix, Vector};
use crate::models::{dot, LogisticModel};
use crate::special::{sigmoid, softplus};

/// `n` feature vectors with an implicit leading column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    /// Row-major `n × (p + 1)`, first entry of every row is 1.
    augmented: Vec<f64>,
    n: usize,
    p: usize,
}

impl DesignMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut flat = Vec::with_capacity(rows.len() * p);
        for row in rows {
            if row.len() != p {
                return Err(Error::DimensionMismatch { expected: p, actual: row.len() });
            }
            flat.extend_from_slice(row);
        }
        Self::from_row_major(rows.len(), p, &flat)
    }

    /// `features` is row-major `n × p` without the intercept column.
    pub fn from_row_major(n: usize, p: usize, features: &[f64]) -> Result<Self> {
        if features.len() != n * p {
            return Err(Error::DimensionMismatch { expected: n * p, actual: features.len() });
        }
        if n < p + 1 {
            return Err(Error::invalid(format!("need at least p + 1 = {} rows, got {n}", p + 1)));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("design matrix contains non-finite entries"));
        }
        let mut augmented = Vec::with_capacity(n * (p + 1));
        for row in features.chunks_exact(p.max(1)).take(n) {
            augmented.push(1.0);
            augmented.extend_from_slice(&row[..p]);
        }
        if p == 0 {
            augmented = vec![1.0; n];
        }
        Ok(Self { augmented, n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of features, excluding the intercept.
    pub fn p(&self) -> usize {
        self.p
    }

    /// `(1, yⱼ)`
    pub fn augmented_row(&self, j: usize) -> &[f64] {
        let w = self.p + 1;
        &self.augmented[j * w..(j + 1) * w]
    }

    pub fn features(&self, j: usize) -> &[f64] {
        &self.augmented_row(j)[1..]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.augmented.chunks_exact(self.p + 1)
    }

    /// Rows at `indices`, in that order, repeats allowed.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut flat = Vec::with_capacity(indices.len() * self.p);
        for &j in indices {
            flat.extend_from_slice(self.features(j));
        }
        Self::from_row_major(indices.len(), self.p, &flat)
    }

    pub fn linear_predictors(&self, beta: &LogisticModel) -> Result<Vec<f64>> {
        if beta.dim() != self.p {
            return Err(Error::DimensionMismatch { expected: self.p, actual: beta.dim() });
        }
        let b = beta.stacked();
        Ok(self.rows().map(|x| dot(x, &b)).collect())
    }

    pub fn posteriors(&self, beta: &LogisticModel) -> Result<Vec<f64>> {
        Ok(self.linear_predictors(beta)?.into_iter().map(sigmoid).collect())
    }
}

/// Positive counts out of `trials` per row. Ground-truth labels are `trials = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Responses {
    pub positives: Vec<u32>,
    pub trials: u32,
}

impl Responses {
    pub fn labels(labels: &[bool]) -> Self {
        Self { positives: labels.iter().map(|&z| z as u32).collect(), trials: 1 }
    }

    pub fn votes(positives: Vec<u32>, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("group size must be at least 1"));
        }
        if let Some((j, s)) = positives.iter().enumerate().find(|(_, &s)| s > m) {
            return Err(Error::invalid(format!("row {j}: {s} positive votes exceed m = {m}")));
        }
        Ok(Self { positives, trials: m })
    }

    pub fn len(&self) -> usize {
        self.positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self { positives: indices.iter().map(|&j| self.positives[j]).collect(), trials: self.trials }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Convergence threshold on the ∞-norm of the score.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Refit with a `1e-6·‖β₁‖²` penalty when the data are separable.
    pub ridge_fallback: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 100, max_halvings: 30, ridge_fallback: false }
    }
}

pub const RIDGE_PENALTY: f64 = 1e-6;
const DIVERGENCE_NORM: f64 = 1e6;
const ROUNDING_SLACK: f64 = 1e-12;
/// Fits whose largest |η| on a unanimous row exceeds this are checked for separation.
const SEPARATION_SCREEN: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: LogisticModel,
    pub converged: bool,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    /// Unpenalised log-likelihood at `model`.
    pub log_likelihood: f64,
    /// Penalty weight when the ridge fallback was used.
    pub ridge: Option<f64>,
    /// Objective after each accepted step, starting from β = 0.
    pub objective_trace: Vec<f64>,
}

fn check_lengths(x: &DesignMatrix, len: usize) -> Result<()> {
    if x.n() != len {
        return Err(Error::DimensionMismatch { expected: x.n(), actual: len });
    }
    Ok(())
}

/// `Σⱼ sⱼηⱼ − m·log(1 + exp ηⱼ)`
pub fn log_lik(x: &DesignMatrix, y: &Responses, beta: &LogisticModel) -> Result<f64> {
    check_lengths(x, y.len())?;
    let m = y.trials as f64;
    let ll: f64 = x
        .linear_predictors(beta)?
        .iter()
        .zip(&y.positives)
        .map(|(&eta, &s)| s as f64 * eta - m * softplus(eta))
        .sum();
    if !ll.is_finite() {
        return Err(Error::invalid("log-likelihood is not finite"));
    }
    Ok(ll)
}

/// Log-likelihood of ground-truth binary labels (`true` = positive class).
pub fn log_lik_ground_truth(x: &DesignMatrix, labels: &[bool], beta: &LogisticModel) -> Result<f64> {
    log_lik(x, &Responses::labels(labels), beta)
}

/// Log-likelihood of positive-vote counts out of `m` annotators.
pub fn log_lik_votes(x: &DesignMatrix, votes: &[u32], m: u32, beta: &LogisticModel) -> Result<f64> {
    log_lik(x, &Responses::votes(votes.to_vec(), m)?, beta)
}

/// Score `Σⱼ (sⱼ − m τⱼ) x̃ⱼ`.
pub fn score(x: &DesignMatrix, y: &Responses, beta: &LogisticModel) -> Result<Vector> {
    check_lengths(x, y.len())?;
    let m = y.trials as f64;
    let mut g = Vector::zeros(x.p() + 1);
    for ((row, eta), &s) in x.rows().zip(x.linear_predictors(beta)?).zip(&y.positives) {
        let r = s as f64 - m * sigmoid(eta);
        for (gk, xk) in g.iter_mut().zip(row) {
            *gk += r * xk;
        }
    }
    Ok(g)
}

/// `Σⱼ wⱼ x̃ⱼ x̃ⱼᵀ`
fn weighted_gram(x: &DesignMatrix, weights: impl Iterator<Item = f64>) -> Matrix {
    let k = x.p() + 1;
    let mut a = Matrix::zeros(k, k);
    for (row, w) in x.rows().zip(weights) {
        for r in 0..k {
            let wr = w * row[r];
            for c in 0..=r {
                a[(r, c)] += wr * row[c];
            }
        }
    }
    for r in 0..k {
        for c in 0..r {
            a[(c, r)] = a[(r, c)];
        }
    }
    a
}

/// Hessian of the count log-likelihood, `−Σⱼ m τⱼ(1 − τⱼ) x̃ⱼ x̃ⱼᵀ`.
pub fn hessian(x: &DesignMatrix, m: u32, beta: &LogisticModel) -> Result<Matrix> {
    let m = m as f64;
    let etas = x.linear_predictors(beta)?;
    Ok(-weighted_gram(x, etas.into_iter().map(|eta| m * sigmoid(eta) * sigmoid(-eta))))
}

/// Fails with a rank error when the columns of `(1, Y)` are (numerically)
/// linearly dependent.
fn check_design_rank(x: &DesignMatrix) -> Result<()> {
    let gram = weighted_gram(x, std::iter::repeat(1.0));
    let d: Vec<f64> = gram.diagonal().iter().map(|v| v.sqrt().max(f64::MIN_POSITIVE)).collect();
    let k = gram.nrows();
    let scaled = Matrix::from_fn(k, k, |r, c| gram[(r, c)] / (d[r] * d[c]));
    let eig = SymmetricEigen::new(scaled).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if !(min > 1e-12 * max) {
        return Err(Error::Rank(format!(
            "design columns are collinear (eigenvalue ratio {:.3e})",
            min / max
        )));
    }
    Ok(())
}

/// True when some nonzero direction `b` weakly separates the responses:
/// `b·x̃ ≥ 0` on rows with every vote positive, `≤ 0` on rows with none, `= 0`
/// on mixed rows, strictly on at least one row. This is exactly the condition
/// under which the likelihood has no finite maximiser.
pub fn is_separable(x: &DesignMatrix, y: &Responses) -> Result<bool> {
    check_lengths(x, y.len())?;
    let k = x.p() + 1;
    let mut scale = vec![0.0f64; k];
    for row in x.rows() {
        for (s, v) in scale.iter_mut().zip(row) {
            *s = s.max(v.abs());
        }
    }
    let scale: Vec<f64> = scale.into_iter().map(|s| if s > 0.0 { s } else { 1.0 }).collect();

    let signs: Vec<f64> = y
        .positives
        .iter()
        .map(|&s| if s == y.trials { 1.0 } else if s == 0 { -1.0 } else { 0.0 })
        .collect();
    let mut objective = vec![0.0; k];
    for (row, &sign) in x.rows().zip(&signs) {
        for c in 0..k {
            objective[c] += sign * row[c] / scale[c];
        }
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = objective.iter().map(|&o| lp.add_var(o, (-1.0, 1.0))).collect();
    for (row, &sign) in x.rows().zip(&signs) {
        let expr: Vec<_> = vars.iter().zip(row).zip(&scale).map(|((&v, &a), s)| (v, a / s)).collect();
        if sign == 0.0 {
            lp.add_constraint(expr, ComparisonOp::Eq, 0.0);
        } else {
            let signed: Vec<_> = expr.into_iter().map(|(v, a)| (v, sign * a)).collect();
            lp.add_constraint(signed, ComparisonOp::Ge, 0.0);
        }
    }
    match lp.solve() {
        Ok(sol) => {
            let unanimous = signs.iter().filter(|s| **s != 0.0).count().max(1);
            Ok(sol.objective() > 1e-7 * unanimous as f64)
        }
        // b = 0 is always feasible and the box bounds the objective.
        Err(_) => Ok(false),
    }
}

/// Newton–Raphson / IRLS maximisation of the count log-likelihood.
///
/// Steps are halved (up to `max_halvings` times) until the objective does not
/// decrease. Separable data are reported as [`Error::Separation`] unless
/// `ridge_fallback` is set, in which case the fit is repeated with a small
/// penalty on the slopes.
pub fn fit(x: &DesignMatrix, y: &Responses, options: &FitOptions) -> Result<FitResult> {
    check_lengths(x, y.len())?;
    check_design_rank(x)?;
    match newton(x, y, options, None) {
        Err(Error::Separation { .. }) if options.ridge_fallback => newton(x, y, options, Some(RIDGE_PENALTY)),
        other => other,
    }
}

fn penalised(x: &DesignMatrix, y: &Responses, beta: &LogisticModel, ridge: Option<f64>) -> Result<f64> {
    let ll = log_lik(x, y, beta)?;
    Ok(match ridge {
        Some(lambda) => ll - lambda * beta.slopes.iter().map(|b| b * b).sum::<f64>(),
        None => ll,
    })
}

fn newton(x: &DesignMatrix, y: &Responses, options: &FitOptions, ridge: Option<f64>) -> Result<FitResult> {
    let k = x.p() + 1;
    let mut beta = LogisticModel::zeros(x.p());
    let mut objective = penalised(x, y, &beta, ridge)?;
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;
    let mut grad_norm;

    loop {
        let mut grad = score(x, y, &beta)?;
        let mut info = -hessian(x, y.trials, &beta)?;
        if let Some(lambda) = ridge {
            for c in 1..k {
                grad[c] -= 2.0 * lambda * beta.slopes[c - 1];
                info[(c, c)] += 2.0 * lambda;
            }
        }
        grad_norm = grad.amax();
        if grad_norm <= options.tolerance {
            converged = true;
            break;
        }
        if iterations >= options.max_iterations {
            break;
        }
        let beta_norm = beta.stacked().iter().map(|b| b * b).sum::<f64>().sqrt();
        if beta_norm > DIVERGENCE_NORM {
            return Err(Error::Separation { last: Box::new(beta), iterations });
        }
        let step = match cholesky(&info) {
            Ok(c) => c.solve(&grad),
            Err(_) if ridge.is_none() && is_separable(x, y)? => {
                return Err(Error::Separation { last: Box::new(beta), iterations })
            }
            Err(e) => return Err(e),
        };

        let current = Vector::from_vec(beta.stacked());
        // Near the optimum the predicted gain drops below the rounding level of
        // the objective and comparisons stop being informative.
        let slack = if 0.5 * grad.dot(&step) <= ROUNDING_SLACK * (1.0 + objective.abs()) {
            ROUNDING_SLACK * (1.0 + objective.abs())
        } else {
            0.0
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_halvings {
            let candidate = &current + t * &step;
            if candidate.iter().all(|v| v.is_finite()) {
                let model = LogisticModel::from_stacked(candidate.as_slice())?;
                if let Ok(obj) = penalised(x, y, &model, ridge) {
                    if obj >= objective - slack {
                        accepted = Some((model, obj));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((model, obj)) => {
                beta = model;
                objective = obj;
                trace.push(obj);
            }
            None => break,
        }
    }

    if ridge.is_none() && looks_separated(x, y, &beta, converged)? && is_separable(x, y)? {
        return Err(Error::Separation { last: Box::new(beta), iterations });
    }
    Ok(FitResult {
        log_likelihood: log_lik(x, y, &beta)?,
        model: beta,
        converged,
        iterations,
        final_gradient_norm: grad_norm,
        ridge,
        objective_trace: trace,
    })
}

/// Cheap screen before the LP: at a separated "optimum" the separated rows sit
/// far out on the logistic tails.
fn looks_separated(x: &DesignMatrix, y: &Responses, beta: &LogisticModel, converged: bool) -> Result<bool> {
    if !converged {
        return Ok(true);
    }
    let etas = x.linear_predictors(beta)?;
    Ok(etas.iter().zip(&y.positives).any(|(&eta, &s)| {
        (s == y.trials && eta > SEPARATION_SCREEN) || (s == 0 && eta < -SEPARATION_SCREEN)
    }))
}

/// Fraction of rows misclassified by the rule "positive when η > 0".
pub fn misclassification_rate(x: &DesignMatrix, labels: &[bool], beta: &LogisticModel) -> Result<f64> {
    check_lengths(x, labels.len())?;
    let wrong = x
        .linear_predictors(beta)?
        .iter()
        .zip(labels)
        .filter(|(&eta, &z)| (eta > 0.0) != z)
        .count();
    Ok(wrong as f64 / labels.len() as f64)
}

/// Per-observation Fisher information of the ground-truth likelihood,
/// `n⁻¹ Σⱼ τⱼ(1 − τⱼ) x̃ⱼ x̃ⱼᵀ`.
pub fn fisher_information(x: &DesignMatrix, beta: &LogisticModel) -> Result<Matrix> {
    let n = x.n() as f64;
    Ok(-hessian(x, 1, beta)? / n)
}

/// Empirical sandwich pieces for the count likelihood, per observation, with
/// the closed-form prediction alongside.
#[derive(Debug, Clone)]
pub struct InformationMatrices {
    /// `n⁻¹ Σ m τ(1 − τ) x̃x̃ᵀ`, the negative mean Hessian.
    pub h: Matrix,
    /// `n⁻¹ Σ (s − mτ)² x̃x̃ᵀ`, the mean outer product of per-row scores.
    pub g: Matrix,
    /// `H G⁻¹ H`
    pub godambe: Matrix,
    /// Ground-truth Fisher information at the same β.
    pub fisher: Matrix,
    /// `m(1 + α₀)/(m + α₀)`, when α₀ is supplied.
    pub theoretical_factor: Option<f64>,
    /// `theoretical_factor · fisher`
    pub theoretical: Option<Matrix>,
}

pub fn godambe_information(
    x: &DesignMatrix,
    votes: &[u32],
    m: u32,
    beta: &LogisticModel,
    alpha0: Option<f64>,
) -> Result<InformationMatrices> {
    let y = Responses::votes(votes.to_vec(), m)?;
    check_lengths(x, y.len())?;
    let n = x.n() as f64;
    let mf = m as f64;
    let taus = x.posteriors(beta)?;
    let h = -hessian(x, m, beta)? / n;
    let g = weighted_gram(x, taus.iter().zip(votes).map(|(&t, &s)| (s as f64 - mf * t).powi(2))) / n;
    let g_chol = nalgebra::Cholesky::new(g.clone())
        .ok_or_else(|| Error::Rank("score covariance G is singular".into()))?;
    let godambe = &h * g_chol.solve(&h);
    let fisher = fisher_information(x, beta)?;
    let theoretical_factor = alpha0.map(|a| mf * (1.0 + a) / (mf + a));
    let theoretical = theoretical_factor.map(|c| &fisher * c);
    Ok(InformationMatrices { h, g, godambe, fisher, theoretical_factor, theoretical })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{beta_from_gaussian, sample_dataset, GaussianProblem};
    use crate::models::{posterior_probs, sample_votes_dm, GroupModel};
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn toy() -> (DesignMatrix, Vec<bool>) {
        let x = DesignMatrix::new(&[
            vec![0.1, 1.2],
            vec![-0.7, 0.3],
            vec![1.5, -0.4],
            vec![0.2, 0.2],
            vec![-1.1, -0.9],
            vec![0.9, 1.4],
        ])
        .unwrap();
        (x, vec![true, false, true, false, false, true])
    }

    #[test]
    fn ground_truth_log_lik_examples() {
        let (x, _) = toy();
        let zero = LogisticModel::zeros(2);
        let x4 = x.select(&[0, 1, 2, 3]).unwrap();
        assert_relative_eq!(
            log_lik_ground_truth(&x4, &[true, false, true, true], &zero).unwrap(),
            -2.772588722239781,
            max_relative = 1e-15
        );

        let single = DesignMatrix::new(&[vec![1.0], vec![0.0]]).unwrap();
        let beta = LogisticModel::new(0.0, vec![2.0]).unwrap();
        let ll = log_lik_ground_truth(&single, &[true, false], &beta).unwrap() - (-std::f64::consts::LN_2);
        assert_relative_eq!(ll, -0.12692801104297250, max_relative = 1e-13);
    }

    #[test]
    fn vote_log_lik_reductions() {
        let (x, z) = toy();
        let beta = LogisticModel::new(0.3, vec![-0.5, 1.1]).unwrap();
        let gt = log_lik_ground_truth(&x, &z, &beta).unwrap();
        let ones: Vec<u32> = z.iter().map(|&b| b as u32).collect();
        assert_relative_eq!(log_lik_votes(&x, &ones, 1, &beta).unwrap(), gt, max_relative = 1e-15);
        let unanimous: Vec<u32> = ones.iter().map(|s| s * 7).collect();
        assert_relative_eq!(log_lik_votes(&x, &unanimous, 7, &beta).unwrap(), 7.0 * gt, max_relative = 1e-14);

        let zero = LogisticModel::zeros(2);
        let ll = log_lik_votes(&x, &[3, 1, 4, 0, 7, 2], 7, &zero).unwrap();
        assert_relative_eq!(ll, -6.0 * 7.0 * std::f64::consts::LN_2, max_relative = 1e-15);

        assert!(log_lik_votes(&x, &[8, 1, 4, 0, 7, 2], 7, &zero).is_err());
    }

    #[test]
    fn vote_log_lik_matches_termwise_sum() {
        let mut rng = stream_rng(11, 0);
        let rows: Vec<Vec<f64>> = (0..5).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let x = DesignMatrix::new(&rows).unwrap();
        let votes: Vec<u32> = (0..5).map(|_| rng.random_range(0..=7)).collect();
        let beta = LogisticModel::new(0.4, vec![-1.3, 0.8]).unwrap();
        // Naive summation with the textbook formula; fine for these moderate η.
        let oracle: f64 = rows
            .iter()
            .zip(&votes)
            .map(|(r, &s)| {
                let eta = 0.4 - 1.3 * r[0] + 0.8 * r[1];
                s as f64 * eta - 7.0 * (1.0 + eta.exp()).ln()
            })
            .sum();
        assert_relative_eq!(log_lik_votes(&x, &votes, 7, &beta).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn score_and_hessian_match_finite_differences() {
        let mut rng = stream_rng(12, 0);
        for _ in 0..20 {
            let n = 15;
            let m = rng.random_range(1..=9);
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let x = DesignMatrix::new(&rows).unwrap();
            let y = Responses::votes((0..n).map(|_| rng.random_range(0..=m)).collect(), m).unwrap();
            let b: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let beta = LogisticModel::from_stacked(&b).unwrap();
            let g = score(&x, &y, &beta).unwrap();
            let h = hessian(&x, m, &beta).unwrap();
            let step = 1e-5;
            for k in 0..4 {
                let mut up = b.clone();
                let mut dn = b.clone();
                up[k] += step;
                dn[k] -= step;
                let (bu, bd) = (LogisticModel::from_stacked(&up).unwrap(), LogisticModel::from_stacked(&dn).unwrap());
                let fd = (log_lik(&x, &y, &bu).unwrap() - log_lik(&x, &y, &bd).unwrap()) / (2.0 * step);
                assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1.0), "{fd} vs {}", g[k]);
                let gu = score(&x, &y, &bu).unwrap();
                let gd = score(&x, &y, &bd).unwrap();
                for r in 0..4 {
                    let fd = (gu[r] - gd[r]) / (2.0 * step);
                    assert!((fd - h[(r, k)]).abs() <= 1e-6 * h[(r, k)].abs().max(1.0));
                }
            }
            let eig = SymmetricEigen::new(h).eigenvalues;
            assert!(eig.max() <= 1e-10);
        }
    }

    #[test]
    fn separable_data_is_reported() {
        let x = DesignMatrix::new(&[vec![-1.0], vec![1.0], vec![-1.0], vec![1.0]]).unwrap();
        let y = Responses::labels(&[false, true, false, true]);
        assert!(is_separable(&x, &y).unwrap());
        assert!(matches!(fit(&x, &y, &FitOptions::default()), Err(Error::Separation { .. })));

        let ridge = FitOptions { ridge_fallback: true, ..Default::default() };
        let r = fit(&x, &y, &ridge).unwrap();
        assert!(r.converged);
        assert_eq!(r.ridge, Some(RIDGE_PENALTY));
        assert!(r.model.slopes[0].is_finite() && r.model.slopes[0] > 5.0);
        assert!(r.model.intercept.abs() < 1e-6);
    }

    #[test]
    fn quasi_separation_is_detected() {
        // Two tied rows at y = 0 with mixed labels; everything else separates.
        let x = DesignMatrix::new(&[vec![-2.0], vec![-1.0], vec![0.0], vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let y = Responses::labels(&[false, false, false, true, true, true]);
        assert!(is_separable(&x, &y).unwrap());
        assert!(matches!(fit(&x, &y, &FitOptions::default()), Err(Error::Separation { .. })));

        let overlapping = Responses::labels(&[false, true, false, true, false, true]);
        assert!(!is_separable(&x, &overlapping).unwrap());
        assert!(fit(&x, &overlapping, &FitOptions::default()).unwrap().converged);
    }

    #[test]
    fn collinear_design_is_a_rank_error() {
        let x = DesignMatrix::new(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0], vec![4.0, 8.0]]).unwrap();
        let y = Responses::labels(&[true, false, true, false]);
        assert!(matches!(fit(&x, &y, &FitOptions::default()), Err(Error::Rank(_))));
    }

    fn simulated(n: usize, seed: u64) -> (DesignMatrix, Vec<bool>, Vec<u32>, LogisticModel) {
        let problem = GaussianProblem::canonical(2.0, 2, 0.5).unwrap();
        let beta = beta_from_gaussian(&problem).unwrap();
        let mut rng = stream_rng(seed, 0);
        let data = sample_dataset(&problem, n, &mut rng).unwrap();
        let group = GroupModel::new(7, 3.0).unwrap();
        let votes = (0..n)
            .map(|j| {
                let tau = posterior_probs(data.row(j), &beta).unwrap();
                sample_votes_dm(&group, &tau, &mut rng).positive()
            })
            .collect();
        (data.design().unwrap(), data.labels.unwrap(), votes, beta)
    }

    #[test]
    fn fit_satisfies_score_equations_and_is_monotone() {
        let (x, z, votes, _) = simulated(300, 21);
        for y in [Responses::labels(&z), Responses::votes(votes, 7).unwrap()] {
            let r = fit(&x, &y, &FitOptions::default()).unwrap();
            assert!(r.converged);
            assert!(r.final_gradient_norm <= 1e-8);
            assert!(score(&x, &y, &r.model).unwrap().amax() <= 1e-8);
            assert!(r.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs())));
        }
    }

    #[test]
    fn fit_is_invariant_to_row_order() {
        let (x, _, votes, _) = simulated(200, 22);
        let y = Responses::votes(votes, 7).unwrap();
        let base = fit(&x, &y, &FitOptions::default()).unwrap();
        let mut idx: Vec<usize> = (0..200).collect();
        idx.shuffle(&mut stream_rng(1, 1));
        let shuffled = fit(&x.select(&idx).unwrap(), &y.select(&idx), &FitOptions::default()).unwrap();
        for (a, b) in base.model.stacked().iter().zip(shuffled.model.stacked()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn vote_fit_equals_expanded_label_fit() {
        let (x, _, votes, _) = simulated(120, 23);
        let m = 7;
        let counts = fit(&x, &Responses::votes(votes.clone(), m).unwrap(), &FitOptions::default()).unwrap();
        let mut idx = Vec::new();
        let mut labels = Vec::new();
        for (j, &s) in votes.iter().enumerate() {
            for k in 0..m {
                idx.push(j);
                labels.push(k < s);
            }
        }
        let expanded = fit(&x.select(&idx).unwrap(), &Responses::labels(&labels), &FitOptions::default()).unwrap();
        for (a, b) in counts.model.stacked().iter().zip(expanded.model.stacked()) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn fisher_information_examples() {
        let (x, _) = toy();
        let zero = LogisticModel::zeros(2);
        let info = fisher_information(&x, &zero).unwrap();
        let gram = weighted_gram(&x, std::iter::repeat(0.25)) / x.n() as f64;
        assert!((info - gram).amax() < 1e-15);

        // Finite-difference Hessian of the ground-truth likelihood.
        let (x, z) = toy();
        let y = Responses::labels(&z);
        let b = [0.2, -0.4, 0.7];
        let beta = LogisticModel::from_stacked(&b).unwrap();
        let info = fisher_information(&x, &beta).unwrap();
        let h = 1e-4;
        for r in 0..3 {
            for c in 0..3 {
                let f = |dr: f64, dc: f64| {
                    let mut v = b.to_vec();
                    v[r] += dr;
                    v[c] += dc;
                    log_lik(&x, &y, &LogisticModel::from_stacked(&v).unwrap()).unwrap()
                };
                let fd = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
                assert!((-fd / x.n() as f64 - info[(r, c)]).abs() < 1e-6);
            }
        }

        let h7 = -hessian(&x, 7, &beta).unwrap() / x.n() as f64;
        assert!((h7 - info * 7.0).amax() < 1e-14);
    }

    #[test]
    fn godambe_closed_form_limits() {
        let (x, _, votes, beta) = simulated(300, 24);
        let info = godambe_information(&x, &votes, 7, &beta, Some(1e9)).unwrap();
        let theo = info.theoretical.as_ref().unwrap();
        assert!(crate::linalg::frobenius_relative(theo, &(&info.fisher * 7.0)) < 1e-3);

        let labels: Vec<u32> = votes.iter().map(|&s| (s > 3) as u32).collect();
        let info = godambe_information(&x, &labels, 1, &beta, Some(4.0)).unwrap();
        assert_eq!(info.theoretical_factor, Some(1.0));
        assert_eq!(info.theoretical.unwrap(), info.fisher);
    }

    #[test]
    fn singular_score_covariance_is_a_rank_error() {
        // Every residual underflows to zero when β is huge and votes are unanimous.
        let (x, _, _, beta) = simulated(50, 25);
        let huge = beta.scaled(1e4);
        let votes: Vec<u32> = x
            .linear_predictors(&huge)
            .unwrap()
            .iter()
            .map(|&eta| if eta > 0.0 { 7 } else { 0 })
            .collect();
        assert!(matches!(godambe_information(&x, &votes, 7, &huge, None), Err(Error::Rank(_))));
    }
}
