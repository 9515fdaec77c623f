//! Dataset flags shared by the commands that read a CSV file.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use noisylab::dataio::{load_csv, standardize, LabelledDataset, Schema, VoteSchema};
use noisylab::logreg::{fit, FitOptions, Responses};
use noisylab::LogisticModel;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DataArgs {
    /// Input CSV: comma separated, one header row, `.` decimals.
    #[arg(long)]
    pub data: PathBuf,

    /// Feature columns. Default: every column not used for labels or votes.
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,

    /// Ground-truth 0/1 column, used when present in the header.
    #[arg(long, default_value = "label")]
    pub label: String,

    /// Column with the number of positive votes out of --m.
    #[arg(long, default_value = "votes")]
    pub votes: String,

    /// Per-annotator 0/1 columns, summed into vote totals.
    #[arg(long, value_delimiter = ',')]
    pub annotators: Vec<String>,

    /// Positive and negative vote-count columns.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub counts: Vec<String>,

    /// Number of annotators per item.
    #[arg(long)]
    pub m: Option<u32>,

    /// Centre and scale each feature column before use.
    #[arg(long)]
    pub standardize: bool,
}

fn header(path: &PathBuf) -> Result<Vec<String>, CliError> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.headers()?.iter().map(str::to_string).collect())
}

impl DataArgs {
    /// Loads the file. `need_votes` turns a missing `--m` for a vote-total
    /// column into a usage error instead of silently ignoring the votes.
    pub fn load(&self, need_labels: bool, need_votes: bool) -> Result<LabelledDataset, CliError> {
        let cols = header(&self.data)?;
        let has = |c: &str| cols.iter().any(|h| h == c);

        let votes = if !self.annotators.is_empty() {
            Some(VoteSchema::Annotators(self.annotators.clone()))
        } else if self.counts.len() == 2 {
            Some(VoteSchema::ClassCounts { positive: self.counts[0].clone(), negative: self.counts[1].clone(), m: self.m })
        } else if has(&self.votes) {
            match self.m {
                Some(m) => Some(VoteSchema::Total { column: self.votes.clone(), m }),
                None if need_votes => {
                    return Err(CliError::Usage(format!("--m is required with the vote column `{}`", self.votes)))
                }
                None => None,
            }
        } else {
            None
        };
        if need_votes && votes.is_none() {
            return Err(CliError::Usage(
                "no vote columns: pass --votes with --m, --annotators, or --counts".into(),
            ));
        }
        let label = has(&self.label).then(|| self.label.clone());
        if need_labels && label.is_none() {
            return Err(CliError::Usage(format!("label column `{}` not found", self.label)));
        }

        let mut used: Vec<&String> = label.iter().collect();
        match &votes {
            Some(VoteSchema::Total { column, .. }) => used.push(column),
            Some(VoteSchema::ClassCounts { positive, negative, .. }) => used.extend([positive, negative]),
            Some(VoteSchema::Annotators(c)) => used.extend(c.iter()),
            None => {
                if has(&self.votes) {
                    used.push(&self.votes);
                }
            }
        }
        let features = if self.features.is_empty() {
            cols.iter().filter(|c| !used.contains(c)).cloned().collect()
        } else {
            self.features.clone()
        };
        if features.is_empty() {
            return Err(CliError::Usage("no feature columns".into()));
        }

        let ds = load_csv(&self.data, &Schema { features, label, votes })?;
        Ok(if self.standardize { standardize(&ds)?.0 } else { ds })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaSource {
    /// Fit to the ground-truth labels.
    GroundTruth,
    /// Fit to the vote counts.
    Votes,
    /// Read from --beta-file.
    File,
}

/// Reads `{"intercept": .., "slopes": [..]}`, or the `model` entry of a fit
/// output file.
pub fn read_beta(path: &PathBuf) -> Result<LogisticModel, CliError> {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let v = v.get("model").cloned().unwrap_or(v);
    let m: LogisticModel = serde_json::from_value(v)?;
    Ok(LogisticModel::new(m.intercept, m.slopes)?)
}

pub fn plug_in_beta(
    ds: &LabelledDataset,
    source: BetaSource,
    file: &Option<PathBuf>,
) -> Result<LogisticModel, CliError> {
    let x = ds.design()?;
    let opts = FitOptions::default();
    let beta = match source {
        BetaSource::GroundTruth => {
            let labels = ds.labels.as_ref().ok_or_else(|| CliError::Usage("ground-truth β needs a label column".into()))?;
            fit(&x, &Responses::labels(labels), &opts)?.model
        }
        BetaSource::Votes => {
            let y: &Responses = ds.votes.as_ref().expect("votes are loaded for this command");
            fit(&x, y, &opts)?.model
        }
        BetaSource::File => {
            let path = file.as_ref().ok_or_else(|| CliError::Usage("--beta-source file needs --beta-file".into()))?;
            read_beta(path)?
        }
    };
    if beta.dim() != ds.p {
        return Err(CliError::Core(noisylab::Error::DimensionMismatch { expected: ds.p, actual: beta.dim() }));
    }
    Ok(beta)
}
