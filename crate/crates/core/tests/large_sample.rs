use noisylab::gaussian::{beta_from_gaussian, sample_dataset, GaussianProblem};
use noisylab::linalg::frobenius_relative;
use noisylab::logreg::{fit, godambe_information, DesignMatrix, FitOptions, Responses};
use noisylab::models::{posterior_probs, sample_votes_dm, GroupModel};
use noisylab::overdispersion::{bootstrap_alpha0, estimate_alpha0, BetaRefit};
use noisylab::rng::{derive_seed, stream_rng};
use noisylab::LogisticModel;

struct Sim {
    x: DesignMatrix,
    labels: Vec<bool>,
    votes: Vec<u32>,
    beta: LogisticModel,
}

fn simulate(n: usize, m: u32, alpha0: f64, seed: u64, stream: u64) -> Sim {
    let problem = GaussianProblem::canonical(2.0, 2, 0.5).unwrap();
    let beta = beta_from_gaussian(&problem).unwrap();
    let mut rng = stream_rng(seed, stream);
    let data = sample_dataset(&problem, n, &mut rng).unwrap();
    let group = GroupModel::new(m, alpha0).unwrap();
    let votes = (0..n)
        .map(|j| sample_votes_dm(&group, &posterior_probs(data.row(j), &beta).unwrap(), &mut rng).positive())
        .collect();
    Sim { x: data.design().unwrap(), labels: data.labels.clone().unwrap(), votes, beta }
}

fn max_abs_diff(a: &LogisticModel, b: &LogisticModel) -> f64 {
    a.stacked().iter().zip(b.stacked()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn estimates_approach_truth_at_large_n() {
    let sim = simulate(100_000, 10, 10.0, 31, 0);
    let opts = FitOptions::default();
    let g = fit(&sim.x, &Responses::labels(&sim.labels), &opts).unwrap().model;
    let m = fit(&sim.x, &Responses::votes(sim.votes.clone(), 10).unwrap(), &opts).unwrap().model;
    assert!(max_abs_diff(&g, &sim.beta) < 0.05, "{g:?}");
    assert!(max_abs_diff(&m, &sim.beta) < 0.05, "{m:?}");
}

#[test]
fn sandwich_matches_scaled_fisher_information() {
    let sim = simulate(100_000, 10, 10.0, 32, 0);
    let y = Responses::votes(sim.votes.clone(), 10).unwrap();
    let beta = fit(&sim.x, &y, &FitOptions::default()).unwrap().model;
    let info = godambe_information(&sim.x, &sim.votes, 10, &beta, Some(10.0)).unwrap();
    let expected = &info.fisher * (10.0 * 11.0 / 20.0);
    assert!(frobenius_relative(&info.godambe, &expected) < 0.10);
}

#[test]
fn alpha0_interval_covers_truth() {
    let seed = 33;
    let covered = (0..100u64)
        .filter(|&r| {
            let sim = simulate(500, 7, 5.0, seed, r);
            let y = Responses::votes(sim.votes.clone(), 7).unwrap();
            let beta = fit(&sim.x, &y, &FitOptions::default()).unwrap().model;
            assert!(estimate_alpha0(&sim.x, &sim.votes, 7, &beta).unwrap().alpha0_hat > 0.0);
            let mut rng = stream_rng(derive_seed(seed, 1), r);
            let bs = bootstrap_alpha0(&sim.x, &sim.votes, 7, &beta, &BetaRefit::Votes, 200, 0.95, &mut rng).unwrap();
            bs.ci.0 <= 5.0 && 5.0 <= bs.ci.1
        })
        .count();
    assert!(covered >= 85, "{covered}/100");
}
