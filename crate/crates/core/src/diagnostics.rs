//! Goodness-of-fit summaries for vote data: posterior means by vote group and
//! observed counts against model prediction bands.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{dm_prediction_interval, GroupModel, ProbabilityVector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoteGroupSummary {
    pub votes: u32,
    pub n_v: usize,
    pub mean_tau: f64,
    /// Standard error of the mean; absent for singleton groups.
    pub se: Option<f64>,
}

/// Mean posterior probability among items with each observed vote count.
/// Empty groups are omitted; output is ordered by vote count.
pub fn vote_group_means(taus: &[f64], votes: &[u32], m: u32) -> Result<Vec<VoteGroupSummary>> {
    if taus.len() != votes.len() {
        return Err(Error::DimensionMismatch { expected: taus.len(), actual: votes.len() });
    }
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); m as usize + 1];
    for (&t, &s) in taus.iter().zip(votes) {
        if s > m {
            return Err(Error::invalid(format!("vote count {s} exceeds m = {m}")));
        }
        groups[s as usize].push(t);
    }
    Ok(groups
        .into_iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(v, mut g)| {
            // Sorting makes the sums independent of input order.
            g.sort_by(f64::total_cmp);
            let n = g.len() as f64;
            let mean = g.iter().sum::<f64>() / n;
            let se = (g.len() > 1)
                .then(|| (g.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt());
            VoteGroupSummary { votes: v as u32, n_v: g.len(), mean_tau: mean, se }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedObserved {
    pub tau: f64,
    pub expected: f64,
    pub observed: u32,
    pub lo: u32,
    pub hi: u32,
    pub in_band: bool,
}

/// Per item: `E[S] = mτ`, the observed count, and whether it falls inside
/// the equal-tail prediction interval at `level`.
pub fn expected_vs_observed(taus: &[f64], votes: &[u32], group: &GroupModel, level: f64) -> Result<Vec<ExpectedObserved>> {
    if taus.len() != votes.len() {
        return Err(Error::DimensionMismatch { expected: taus.len(), actual: votes.len() });
    }
    let m = group.group_size;
    taus.iter()
        .zip(votes)
        .map(|(&t, &s)| {
            if s > m {
                return Err(Error::invalid(format!("vote count {s} exceeds m = {m}")));
            }
            let tau = ProbabilityVector::binary(t)?;
            let (lo, hi) = dm_prediction_interval(group, &tau, level)?;
            let t = tau.clamped()[0];
            Ok(ExpectedObserved { tau: t, expected: m as f64 * t, observed: s, lo, hi, in_band: lo <= s && s <= hi })
        })
        .collect()
}

/// Fraction of rows inside their band.
pub fn band_coverage(rows: &[ExpectedObserved]) -> f64 {
    rows.iter().filter(|r| r.in_band).count() as f64 / rows.len() as f64
}
