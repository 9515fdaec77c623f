//! Dataset ingestion, standardisation, random train/test splits, and the
//! train/test experiment with simulated Dirichlet-Multinomial votes.
//!
//! CSV dialect: comma separated, UTF-8, one header row, `.` as the decimal
//! separator. Binary labels are `1` (positive class) or `0`.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::efficiency::theoretical_are;
use crate::error::{Error, Result};
use crate::logreg::{fit, misclassification_rate, DesignMatrix, FitOptions, Responses};
use crate::models::{posterior_probs, sample_votes_dm, GroupModel, LogisticModel};
use crate::rng::{derive_seed, stream_rng};

/// Features plus whatever labelling information is available for them.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledDataset {
    pub n: usize,
    pub p: usize,
    /// Row-major `n × p`.
    pub features: Vec<f64>,
    pub column_names: Vec<String>,
    /// Ground truth, `true` for the positive class.
    pub labels: Option<Vec<bool>>,
    /// Positive votes per row out of `votes.trials` annotators.
    pub votes: Option<Responses>,
    /// Per-annotator labels (`n × m`) when they were supplied individually.
    pub annotator_labels: Option<Vec<Vec<bool>>>,
}

impl LabelledDataset {
    pub fn new(
        n: usize,
        p: usize,
        features: Vec<f64>,
        column_names: Vec<String>,
        labels: Option<Vec<bool>>,
        votes: Option<Responses>,
    ) -> Result<Self> {
        if features.len() != n * p {
            return Err(Error::DimensionMismatch { expected: n * p, actual: features.len() });
        }
        if column_names.len() != p {
            return Err(Error::DimensionMismatch { expected: p, actual: column_names.len() });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("features contain non-finite values"));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: l.len() });
            }
        }
        if let Some(v) = &votes {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: v.len() });
            }
        }
        Ok(Self { n, p, features, column_names, labels, votes, annotator_labels: None })
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.features[j * self.p..(j + 1) * self.p]
    }

    pub fn design(&self) -> Result<DesignMatrix> {
        DesignMatrix::from_row_major(self.n, self.p, &self.features)
    }

    pub fn group_size(&self) -> Option<u32> {
        self.votes.as_ref().map(|v| v.trials)
    }

    /// Rows at `indices`, in order; repeats allowed.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.p);
        for &j in indices {
            features.extend_from_slice(self.row(j));
        }
        Self {
            n: indices.len(),
            p: self.p,
            features,
            column_names: self.column_names.clone(),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&j| l[j]).collect()),
            votes: self.votes.as_ref().map(|v| v.select(indices)),
            annotator_labels: self
                .annotator_labels
                .as_ref()
                .map(|a| indices.iter().map(|&j| a[j].clone()).collect()),
        }
    }

    /// Keeps only the named feature columns, in the given order.
    pub fn with_features(&self, names: &[String]) -> Result<Self> {
        let cols: Vec<usize> = names
            .iter()
            .map(|name| {
                self.column_names.iter().position(|c| c == name).ok_or_else(|| Error::Parse {
                    row: 0,
                    column: name.clone(),
                    message: "no such feature column".into(),
                })
            })
            .collect::<Result<_>>()?;
        let mut features = Vec::with_capacity(self.n * cols.len());
        for j in 0..self.n {
            let row = self.row(j);
            features.extend(cols.iter().map(|&c| row[c]));
        }
        Ok(Self { p: cols.len(), features, column_names: names.to_vec(), ..self.clone() })
    }
}

/// How vote information is laid out in a CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VoteSchema {
    /// One column holding the number of positive votes out of `m`.
    Total { column: String, m: u32 },
    /// One count column per class; each row must sum to the group size.
    ClassCounts { positive: String, negative: String, m: Option<u32> },
    /// One binary column per annotator, aggregated into counts on load.
    Annotators(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub features: Vec<String>,
    pub label: Option<String>,
    pub votes: Option<VoteSchema>,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<LabelledDataset> {
    read_csv(std::fs::File::open(path)?, schema)
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
        row: 0,
        column: name.to_string(),
        message: "column missing from header".into(),
    })
}

fn parse_cell<T: std::str::FromStr>(record: &csv::StringRecord, col: usize, row: usize, name: &str) -> Result<T> {
    let raw = record.get(col).unwrap_or("").trim();
    raw.parse().map_err(|_| Error::Parse { row, column: name.to_string(), message: format!("cannot parse `{raw}`") })
}

fn parse_binary(record: &csv::StringRecord, col: usize, row: usize, name: &str) -> Result<bool> {
    match parse_cell::<u32>(record, col, row, name)? {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(Error::Parse { row, column: name.to_string(), message: format!("expected 0 or 1, got {other}") }),
    }
}

/// Parses a CSV stream. Row numbers in errors count data rows from 1.
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<LabelledDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let feature_cols: Vec<usize> = schema.features.iter().map(|f| column_index(&headers, f)).collect::<Result<_>>()?;
    let label_col = schema.label.as_deref().map(|l| column_index(&headers, l)).transpose()?;
    let vote_cols: Vec<(usize, String)> = match &schema.votes {
        None => vec![],
        Some(VoteSchema::Total { column, .. }) => vec![(column_index(&headers, column)?, column.clone())],
        Some(VoteSchema::ClassCounts { positive, negative, .. }) => vec![
            (column_index(&headers, positive)?, positive.clone()),
            (column_index(&headers, negative)?, negative.clone()),
        ],
        Some(VoteSchema::Annotators(cols)) => {
            cols.iter().map(|c| Ok((column_index(&headers, c)?, c.clone()))).collect::<Result<_>>()?
        }
    };

    let p = feature_cols.len();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut positives = Vec::new();
    let mut annotators = Vec::new();
    let mut group_size = match &schema.votes {
        Some(VoteSchema::Total { m, .. }) => Some(*m),
        Some(VoteSchema::ClassCounts { m, .. }) => *m,
        Some(VoteSchema::Annotators(cols)) => Some(cols.len() as u32),
        None => None,
    };

    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        for (&c, name) in feature_cols.iter().zip(&schema.features) {
            let v: f64 = parse_cell(&record, c, row, name)?;
            if !v.is_finite() {
                return Err(Error::Parse { row, column: name.clone(), message: "non-finite value".into() });
            }
            features.push(v);
        }
        if let (Some(c), Some(name)) = (label_col, &schema.label) {
            labels.push(parse_binary(&record, c, row, name)?);
        }
        match &schema.votes {
            None => {}
            Some(VoteSchema::Total { column, m }) => {
                let s: u32 = parse_cell(&record, vote_cols[0].0, row, column)?;
                if s > *m {
                    return Err(Error::Parse { row, column: column.clone(), message: format!("{s} votes exceed m = {m}") });
                }
                positives.push(s);
            }
            Some(VoteSchema::ClassCounts { positive, negative, .. }) => {
                let s: u32 = parse_cell(&record, vote_cols[0].0, row, positive)?;
                let t: u32 = parse_cell(&record, vote_cols[1].0, row, negative)?;
                let m = *group_size.get_or_insert(s + t);
                if s + t != m {
                    return Err(Error::Parse {
                        row,
                        column: format!("{positive}+{negative}"),
                        message: format!("vote total {} differs from m = {m}", s + t),
                    });
                }
                positives.push(s);
            }
            Some(VoteSchema::Annotators(_)) => {
                let votes: Vec<bool> = vote_cols
                    .iter()
                    .map(|(c, name)| parse_binary(&record, *c, row, name))
                    .collect::<Result<_>>()?;
                positives.push(votes.iter().filter(|&&v| v).count() as u32);
                annotators.push(votes);
            }
        }
    }

    let n = features.len() / p.max(1);
    let votes = match group_size {
        Some(m) if schema.votes.is_some() => Some(Responses::votes(positives, m)?),
        _ => None,
    };
    let mut ds = LabelledDataset::new(
        if p == 0 { labels.len().max(votes.as_ref().map_or(0, |v| v.len())) } else { n },
        p,
        features,
        schema.features.clone(),
        schema.label.as_ref().map(|_| labels),
        votes,
    )?;
    if matches!(schema.votes, Some(VoteSchema::Annotators(_))) {
        ds.annotator_labels = Some(annotators);
    }
    Ok(ds)
}

/// Writes features, then `label` and `votes` columns when present.
pub fn write_csv<W: Write>(ds: &LabelledDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = ds.column_names.clone();
    if ds.labels.is_some() {
        header.push("label".into());
    }
    if ds.votes.is_some() {
        header.push("votes".into());
    }
    w.write_record(&header)?;
    for j in 0..ds.n {
        let mut rec: Vec<String> = ds.row(j).iter().map(|v| v.to_string()).collect();
        if let Some(l) = &ds.labels {
            rec.push((l[j] as u8).to_string());
        }
        if let Some(v) = &ds.votes {
            rec.push(v.positives[j].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-column centring and scaling (sample sd, `n − 1` denominator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardization {
    pub fn fit(ds: &LabelledDataset) -> Result<Self> {
        let n = ds.n as f64;
        let mut means = vec![0.0; ds.p];
        let mut sds = vec![0.0; ds.p];
        for c in 0..ds.p {
            let mean = (0..ds.n).map(|j| ds.row(j)[c]).sum::<f64>() / n;
            let var = (0..ds.n).map(|j| (ds.row(j)[c] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            if !(var > 0.0) {
                return Err(Error::ZeroVariance(ds.column_names[c].clone()));
            }
            means[c] = mean;
            sds[c] = var.sqrt();
        }
        Ok(Self { means, sds })
    }

    pub fn apply(&self, ds: &LabelledDataset) -> Result<LabelledDataset> {
        if ds.p != self.means.len() {
            return Err(Error::DimensionMismatch { expected: self.means.len(), actual: ds.p });
        }
        let mut out = ds.clone();
        for (k, v) in out.features.iter_mut().enumerate() {
            let c = k % ds.p;
            *v = (*v - self.means[c]) / self.sds[c];
        }
        Ok(out)
    }
}

/// Centres and scales every feature column; returns the transform for reuse.
pub fn standardize(ds: &LabelledDataset) -> Result<(LabelledDataset, Standardization)> {
    let t = Standardization::fit(ds)?;
    Ok((t.apply(ds)?, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_size: usize,
    pub seed: u64,
    pub repetitions: usize,
}

/// Uniform random partition of `0..total` into sorted train and test indices.
pub fn random_split<R: Rng + ?Sized>(total: usize, train_size: usize, rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..total).collect();
    idx.shuffle(rng);
    let mut train = idx[..train_size].to_vec();
    let mut test = idx[train_size..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// What to do when a training fit has no finite maximum likelihood estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeparationPolicy {
    /// Draw a new split (ground-truth fit) or new votes (vote fit).
    Redraw,
    /// Refit with the small ridge penalty.
    Ridge,
    /// Use the iterate at which Newton stopped, as unpenalised IRLS software does.
    Accept,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub separation: SeparationPolicy,
    /// Abort when redraws exceed this fraction of the attempted fits.
    pub max_redraw_fraction: f64,
    pub fit: FitOptions,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self { separation: SeparationPolicy::Redraw, max_redraw_fraction: 0.1, fit: FitOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub mean: f64,
    pub se: f64,
}

impl ErrorSummary {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let se = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            f64::NAN
        };
        Self { mean, se }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentCell {
    pub m: u32,
    pub alpha0: f64,
    pub error: ErrorSummary,
    /// `(err_G − bayes)/(err_M − bayes)` with the apparent error as `bayes`;
    /// `None` when the denominator is not positive.
    pub relative_efficiency: Option<f64>,
    pub theoretical_are: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentTables {
    pub beta_full: LogisticModel,
    /// Apparent (training) error of `beta_full` on all rows.
    pub bayes_proxy: f64,
    pub baseline: ErrorSummary,
    pub cells: Vec<ExperimentCell>,
    pub repetitions: usize,
    pub split_redraws: usize,
    pub vote_redraws: usize,
    /// Per-split test errors of the ground-truth rule.
    pub baseline_errors: Vec<f64>,
}

struct SplitOutcome {
    err_g: f64,
    err_m: Vec<f64>,
    split_redraws: usize,
    vote_redraws: usize,
}

const MAX_ATTEMPTS: usize = 1000;

fn fit_with_policy(x: &DesignMatrix, y: &Responses, options: &ExperimentOptions) -> Result<Option<LogisticModel>> {
    let fit_opts = FitOptions { ridge_fallback: options.separation == SeparationPolicy::Ridge, ..options.fit };
    match fit(x, y, &fit_opts) {
        Ok(r) => Ok(Some(r.model)),
        Err(Error::Separation { last, .. }) => match options.separation {
            SeparationPolicy::Accept => Ok(Some(*last)),
            _ => Ok(None),
        },
        Err(Error::Rank(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Repeated train/test evaluation of ground-truth and vote-trained rules.
///
/// The full-data maximum likelihood fit is taken as the true β. Each
/// repetition draws a split, standardises with training-row statistics, fits
/// the ground-truth rule, and for every group model simulates DM votes on the
/// training rows from `τ(y; β_full)` and fits the vote rule. Test errors are
/// 0–1 loss on the held-out rows. The same splits are shared by every group
/// model.
pub fn run_dataset_experiment(
    ds: &LabelledDataset,
    plan: &SplitPlan,
    groups: &[GroupModel],
    options: &ExperimentOptions,
) -> Result<ExperimentTables> {
    let labels = ds.labels.as_ref().ok_or_else(|| Error::invalid("experiment needs ground-truth labels"))?;
    if plan.repetitions == 0 {
        return Err(Error::invalid("at least one repetition is required"));
    }
    if plan.train_size >= ds.n || plan.train_size < ds.p + 1 {
        return Err(Error::invalid(format!(
            "training size must lie in [{}, {}), got {}",
            ds.p + 1,
            ds.n,
            plan.train_size
        )));
    }

    let (full_std, _) = standardize(ds)?;
    let full_x = full_std.design()?;
    let full_fit = fit(&full_x, &Responses::labels(labels), &options.fit)?;
    let beta_full = full_fit.model;
    let bayes_proxy = misclassification_rate(&full_x, labels, &beta_full)?;
    let taus_full = full_x.posteriors(&beta_full)?;

    let outcomes: Vec<Result<SplitOutcome>> = (0..plan.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(plan.seed, rep as u64);
            let mut split_redraws = 0;
            for _ in 0..MAX_ATTEMPTS {
                let (train, test) = random_split(ds.n, plan.train_size, &mut rng);
                let train_ds = ds.select(&train);
                let Ok(scaler) = Standardization::fit(&train_ds) else {
                    split_redraws += 1;
                    continue;
                };
                let train_x = scaler.apply(&train_ds)?.design()?;
                let test_ds = ds.select(&test);
                let test_x = scaler.apply(&test_ds)?.design()?;
                let test_labels = test_ds.labels.as_ref().expect("labels checked above");
                let train_labels = train_ds.labels.as_ref().expect("labels checked above");

                let Some(beta_g) = fit_with_policy(&train_x, &Responses::labels(train_labels), options)? else {
                    split_redraws += 1;
                    continue;
                };
                let err_g = misclassification_rate(&test_x, test_labels, &beta_g)?;

                let mut vote_redraws = 0;
                let mut err_m = Vec::with_capacity(groups.len());
                for (cell, group) in groups.iter().enumerate() {
                    let mut vote_rng = stream_rng(derive_seed(plan.seed, cell as u64 + 1), rep as u64);
                    let mut done = None;
                    for _ in 0..MAX_ATTEMPTS {
                        let votes: Vec<u32> = train
                            .iter()
                            .map(|&j| {
                                let tau = crate::models::ProbabilityVector::binary(taus_full[j])?;
                                Ok(sample_votes_dm(group, &tau, &mut vote_rng).positive())
                            })
                            .collect::<Result<_>>()?;
                        let y = Responses::votes(votes, group.group_size)?;
                        match fit_with_policy(&train_x, &y, options)? {
                            Some(beta_m) => {
                                done = Some(misclassification_rate(&test_x, test_labels, &beta_m)?);
                                break;
                            }
                            None => vote_redraws += 1,
                        }
                    }
                    err_m.push(done.ok_or_else(|| Error::TooManyFailures {
                        what: "vote fits".into(),
                        failed: MAX_ATTEMPTS,
                        attempted: MAX_ATTEMPTS,
                    })?);
                }
                return Ok(SplitOutcome { err_g, err_m, split_redraws, vote_redraws });
            }
            Err(Error::TooManyFailures { what: "training splits".into(), failed: MAX_ATTEMPTS, attempted: MAX_ATTEMPTS })
        })
        .collect();
    let outcomes: Vec<SplitOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let split_redraws: usize = outcomes.iter().map(|o| o.split_redraws).sum();
    let vote_redraws: usize = outcomes.iter().map(|o| o.vote_redraws).sum();
    let split_attempts = plan.repetitions + split_redraws;
    if split_redraws as f64 > options.max_redraw_fraction * split_attempts as f64 {
        return Err(Error::TooManyFailures { what: "separable training splits".into(), failed: split_redraws, attempted: split_attempts });
    }
    let vote_attempts = plan.repetitions * groups.len() + vote_redraws;
    if vote_redraws as f64 > options.max_redraw_fraction * vote_attempts as f64 {
        return Err(Error::TooManyFailures { what: "separable vote fits".into(), failed: vote_redraws, attempted: vote_attempts });
    }

    let baseline_errors: Vec<f64> = outcomes.iter().map(|o| o.err_g).collect();
    let baseline = ErrorSummary::of(&baseline_errors);
    let cells = groups
        .iter()
        .enumerate()
        .map(|(c, group)| {
            let errs: Vec<f64> = outcomes.iter().map(|o| o.err_m[c]).collect();
            let error = ErrorSummary::of(&errs);
            let denom = error.mean - bayes_proxy;
            ExperimentCell {
                m: group.group_size,
                alpha0: group.alpha0,
                relative_efficiency: (denom > 0.0).then(|| (baseline.mean - bayes_proxy) / denom),
                theoretical_are: theoretical_are(group.group_size, group.alpha0),
                error,
            }
        })
        .collect();

    Ok(ExperimentTables {
        beta_full,
        bayes_proxy,
        baseline,
        cells,
        repetitions: plan.repetitions,
        split_redraws,
        vote_redraws,
        baseline_errors,
    })
}

/// Convenience for callers holding a feature list: simulated votes for every
/// row of `ds` from `τ(y; beta)`.
pub fn simulate_votes<R: Rng + ?Sized>(
    ds: &LabelledDataset,
    beta: &LogisticModel,
    group: &GroupModel,
    rng: &mut R,
) -> Result<Responses> {
    let votes = (0..ds.n)
        .map(|j| Ok(sample_votes_dm(group, &posterior_probs(ds.row(j), beta)?, rng).positive()))
        .collect::<Result<Vec<u32>>>()?;
    Responses::votes(votes, group.group_size)
}
