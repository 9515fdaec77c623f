use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use noisylab::dataio::{run_dataset_experiment, write_csv, ExperimentOptions, SeparationPolicy, SplitPlan};
use noisylab::diagnostics::{band_coverage, expected_vs_observed, vote_group_means};
use noisylab::efficiency::{grid_cell_seed, simulate_relative_efficiency, theoretical_are, AreConfig};
use noisylab::gaussian::{beta_from_gaussian, sample_dataset, GaussianProblem};
use noisylab::linalg::Matrix;
use noisylab::logreg::{fisher_information, godambe_information, FitOptions, Responses};
use noisylab::models::{posterior_probs, sample_votes_dm, sample_votes_multinomial};
use noisylab::overdispersion::{bootstrap_alpha0, estimate_alpha0, BetaRefit};
use noisylab::rng::stream_rng;
use noisylab::GroupModel;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::data::{plug_in_beta, BetaSource, DataArgs};
use crate::svg::{Axes, Scale};
use crate::CliError;

/// One per run, written last. Holds everything needed to reproduce the
/// outputs except the output directory itself.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: Value,
    pub outputs: Vec<String>,
    pub failures: BTreeMap<String, usize>,
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        fs::write(self.dir.join(name), contents)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        self.write(name, bytes)
    }

    fn finish(
        self,
        command: &str,
        seed: u64,
        config: &impl Serialize,
        failures: BTreeMap<String, usize>,
    ) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config: serde_json::to_value(config)?,
            outputs: self.written.clone(),
            failures,
        };
        let mut s = serde_json::to_string_pretty(&manifest)?;
        s.push('\n');
        fs::write(self.dir.join("manifest.json"), s)?;
        Ok(())
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn usage(cond: bool, msg: &str) -> Result<(), CliError> {
    if cond {
        Err(CliError::Usage(msg.into()))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------- simulate-are

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct AreArgs {
    #[arg(long, value_delimiter = ',', default_value = "5,10,50")]
    pub m_list: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
    pub alpha0_list: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pub delta_list: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    #[arg(long, default_value_t = 0.5)]
    pub prior1: f64,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Bootstrap resamples for the standard error.
    #[arg(long, default_value_t = 500)]
    pub bootstrap: usize,
    /// Also write a plot of relative efficiency against α₀.
    #[arg(long)]
    pub svg: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

pub fn simulate_are(args: &AreArgs, seed: u64) -> Result<(), CliError> {
    usage(args.m_list.is_empty() || args.alpha0_list.is_empty() || args.delta_list.is_empty(), "grid lists must be non-empty")?;
    usage(args.reps == 0, "--reps must be at least 1")?;
    usage(args.bootstrap < 100, "--bootstrap must be at least 100")?;
    let mut out = Outputs::new(&args.out)?;
    let mut rows = Vec::new();
    let mut failures = 0;
    let mut plot: Vec<(u32, Vec<(f64, f64, f64)>)> = Vec::new();
    for &m in &args.m_list {
        let mut series = Vec::new();
        for &alpha0 in &args.alpha0_list {
            let mut re_sum = 0.0;
            for &delta in &args.delta_list {
                let config = AreConfig {
                    n: args.n,
                    p: args.p,
                    delta,
                    prior1: args.prior1,
                    m,
                    alpha0,
                    replications: args.reps,
                    seed: grid_cell_seed(seed, m, alpha0, delta),
                    bootstrap_resamples: args.bootstrap,
                };
                let r = simulate_relative_efficiency(&config)?;
                failures += r.failures;
                re_sum += r.simulated_re;
                rows.push(vec![
                    m.to_string(),
                    num(alpha0),
                    num(delta),
                    num(r.theoretical_are),
                    num(r.simulated_re),
                    r.bootstrap_se.map(num).unwrap_or_default(),
                    num(r.bayes_error),
                ]);
            }
            series.push((alpha0, re_sum / args.delta_list.len() as f64, theoretical_are(m, alpha0)));
        }
        plot.push((m, series));
    }
    out.csv(
        "are.csv",
        &["m", "alpha0", "delta", "are_theoretical", "re_simulated", "se_bootstrap", "bayes_error"],
        &rows,
    )?;
    if args.svg {
        out.write("are.svg", are_plot(&plot))?;
    }
    out.finish("simulate-are", seed, args, BTreeMap::from([("replications".into(), failures)]))
}

fn are_plot(series: &[(u32, Vec<(f64, f64, f64)>)]) -> String {
    let xs: Vec<f64> = series.iter().flat_map(|s| s.1.iter().map(|p| p.0)).collect();
    let ys: Vec<f64> = series.iter().flat_map(|s| s.1.iter().flat_map(|p| [p.1, p.2])).collect();
    let fold = |v: &[f64], f: fn(f64, f64) -> f64, init| v.iter().copied().fold(init, f);
    let positive = xs.iter().all(|&x| x > 0.0);
    let scale = if positive { Scale::Log10 } else { Scale::Linear };
    let mut axes = Axes::new(
        "Relative efficiency (solid: simulated, mean over Δ; dashed: asymptotic)",
        "alpha0",
        "relative efficiency",
        scale,
        (fold(&xs, f64::min, f64::INFINITY), fold(&xs, f64::max, f64::NEG_INFINITY)),
        (0.0, fold(&ys, f64::max, 1.0)),
    );
    for (k, (m, pts)) in series.iter().enumerate() {
        let c = Axes::colour(k);
        let sim: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, p.1)).collect();
        let are: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, p.2)).collect();
        axes.line(&sim, c, Some(&format!("m = {m}")), false);
        axes.points(&sim, c, 3.0);
        axes.line(&are, c, None, true);
    }
    axes.render()
}

// --------------------------------------------------------------- simulate-data

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SimulateDataArgs {
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    #[arg(long, default_value_t = 2.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub prior1: f64,
    /// Annotators per item.
    #[arg(long, default_value_t = 7)]
    pub m: u32,
    /// Overdispersion of the votes; `inf` gives multinomial votes.
    #[arg(long, default_value_t = 5.0)]
    pub alpha0: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

pub fn simulate_data(args: &SimulateDataArgs, seed: u64) -> Result<(), CliError> {
    usage(args.m == 0, "--m must be at least 1")?;
    usage(!(args.alpha0 > 0.0), "--alpha0 must be positive")?;
    let problem = GaussianProblem::canonical(args.delta, args.p, args.prior1)?;
    let beta = beta_from_gaussian(&problem)?;
    let mut rng = stream_rng(seed, 0);
    let mut ds = sample_dataset(&problem, args.n, &mut rng)?;
    let group = GroupModel::new(args.m, if args.alpha0.is_finite() { args.alpha0 } else { 1.0 })?;
    let votes = (0..ds.n)
        .map(|j| {
            let tau = posterior_probs(ds.row(j), &beta)?;
            Ok(if args.alpha0.is_finite() {
                sample_votes_dm(&group, &tau, &mut rng)
            } else {
                sample_votes_multinomial(&group, &tau, &mut rng)
            }
            .positive())
        })
        .collect::<Result<Vec<u32>, noisylab::Error>>()?;
    ds.votes = Some(Responses::votes(votes, args.m)?);

    let mut out = Outputs::new(&args.out)?;
    let mut buf = Vec::new();
    write_csv(&ds, &mut buf)?;
    out.write("data.csv", buf)?;
    out.json("truth.json", &json!({ "model": beta, "bayes_error": noisylab::gaussian::bayes_error(&problem)? }))?;
    out.finish("simulate-data", seed, args, BTreeMap::new())
}

// ------------------------------------------------------------------------- fit

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    GroundTruth,
    Votes,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub mode: FitMode,
    /// Fall back to a small ridge penalty when the data are separable.
    #[arg(long)]
    pub ridge: bool,
    /// Overdispersion for the closed-form information in votes mode.
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

pub fn fit(args: &FitArgs, seed: u64) -> Result<(), CliError> {
    let votes_mode = args.mode == FitMode::Votes;
    let ds = args.data.load(!votes_mode, votes_mode)?;
    let x = ds.design()?;
    let y = match args.mode {
        FitMode::GroundTruth => Responses::labels(ds.labels.as_ref().expect("labels required above")),
        FitMode::Votes => ds.votes.clone().expect("votes required above"),
    };
    let options = FitOptions { ridge_fallback: args.ridge, ..FitOptions::default() };
    let r = noisylab::logreg::fit(&x, &y, &options)?;
    let information = match args.mode {
        FitMode::GroundTruth => json!({ "fisher": matrix_rows(&fisher_information(&x, &r.model)?) }),
        FitMode::Votes => {
            let info = godambe_information(&x, &y.positives, y.trials, &r.model, args.alpha0)?;
            json!({
                "h": matrix_rows(&info.h),
                "g": matrix_rows(&info.g),
                "godambe": matrix_rows(&info.godambe),
                "fisher": matrix_rows(&info.fisher),
                "theoretical_factor": info.theoretical_factor,
                "theoretical": info.theoretical.as_ref().map(matrix_rows),
            })
        }
    };
    let mut out = Outputs::new(&args.out)?;
    out.json(
        "fit.json",
        &json!({
            "mode": args.mode,
            "n": ds.n,
            "features": ds.column_names,
            "m": y.trials,
            "model": r.model,
            "converged": r.converged,
            "iterations": r.iterations,
            "final_gradient_norm": r.final_gradient_norm,
            "log_likelihood": r.log_likelihood,
            "ridge": r.ridge,
            "information": information,
        }),
    )?;
    out.finish("fit", seed, args, BTreeMap::new())
}

// -------------------------------------------------------------- estimate-alpha

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct AlphaArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Where the plug-in β comes from.
    #[arg(long, value_enum, default_value = "ground-truth")]
    pub beta_source: BetaSource,
    /// JSON with `intercept` and `slopes`, or a fit output.
    #[arg(long)]
    pub beta_file: Option<PathBuf>,
    /// Bootstrap resamples; 0 skips the interval.
    #[arg(long, default_value_t = 500)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Keep β fixed in every resample instead of refitting it.
    #[arg(long)]
    pub fixed_beta: bool,
    #[arg(long)]
    pub svg: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

const HISTOGRAM_BINS: usize = 20;

pub fn estimate_alpha(args: &AlphaArgs, seed: u64) -> Result<(), CliError> {
    usage(args.bootstrap != 0 && args.bootstrap < 100, "--bootstrap must be 0 or at least 100")?;
    usage(!(args.level > 0.0 && args.level < 1.0), "--level must lie in (0, 1)")?;
    let ds = args.data.load(args.beta_source == BetaSource::GroundTruth, true)?;
    let y = ds.votes.clone().expect("votes required above");
    let beta = plug_in_beta(&ds, args.beta_source, &args.beta_file)?;
    let x = ds.design()?;
    let est = estimate_alpha0(&x, &y.positives, y.trials, &beta)?;

    let mut out = Outputs::new(&args.out)?;
    let mut failures = BTreeMap::new();
    let mut bootstrap = Value::Null;
    if args.bootstrap > 0 {
        let refit = match (args.fixed_beta, args.beta_source) {
            (true, _) | (_, BetaSource::File) => BetaRefit::Fixed,
            (false, BetaSource::GroundTruth) => BetaRefit::GroundTruth(ds.labels.clone().expect("labels required above")),
            (false, BetaSource::Votes) => BetaRefit::Votes,
        };
        let bs = bootstrap_alpha0(&x, &y.positives, y.trials, &beta, &refit, args.bootstrap, args.level, &mut stream_rng(seed, 0))?;
        failures.insert("bootstrap_resamples".into(), bs.failures);
        let rows: Vec<Vec<String>> = bs.estimates.iter().enumerate().map(|(k, a)| vec![k.to_string(), num(*a)]).collect();
        out.csv("alpha_bootstrap.csv", &["resample", "alpha0"], &rows)?;

        let logs: Vec<f64> = bs.estimates.iter().map(|a| a.log10()).collect();
        let (lo, hi) = logs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let width = if hi > lo { (hi - lo) / HISTOGRAM_BINS as f64 } else { 1.0 };
        let mut counts = vec![0usize; HISTOGRAM_BINS];
        for v in &logs {
            counts[(((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1)] += 1;
        }
        let hist: Vec<Vec<String>> = counts
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let a = lo + k as f64 * width;
                vec![num(10f64.powf(a)), num(10f64.powf(a + width)), c.to_string()]
            })
            .collect();
        out.csv("alpha_histogram.csv", &["alpha0_lo", "alpha0_hi", "count"], &hist)?;
        if args.svg {
            let top = *counts.iter().max().unwrap_or(&1) as f64;
            let mut axes = Axes::new(
                "Bootstrap estimates of alpha0",
                "alpha0",
                "count",
                Scale::Log10,
                (10f64.powf(lo), 10f64.powf(lo + width * HISTOGRAM_BINS as f64)),
                (0.0, top),
            );
            for (k, &c) in counts.iter().enumerate() {
                let a = lo + k as f64 * width;
                axes.bar(10f64.powf(a), 10f64.powf(a + width), c as f64, Axes::colour(0));
            }
            axes.line(&[(est.alpha0_hat, 0.0), (est.alpha0_hat, top)], Axes::colour(1), Some("estimate"), false);
            out.write("alpha_bootstrap.svg", axes.render())?;
        }
        bootstrap = json!({
            "resamples": args.bootstrap,
            "level": bs.level,
            "refit": match refit { BetaRefit::Fixed => "fixed", BetaRefit::GroundTruth(_) => "ground-truth", BetaRefit::Votes => "votes" },
            "ci": [bs.ci.0, bs.ci.1],
            "failures": bs.failures,
        });
    }
    out.json(
        "alpha.json",
        &json!({
            "alpha0_hat": est.alpha0_hat,
            "log_likelihood": est.log_likelihood,
            "boundary_flag": est.boundary_flag,
            "m": y.trials,
            "n": ds.n,
            "beta_source": args.beta_source,
            "beta": beta,
            "bootstrap": bootstrap,
        }),
    )?;
    out.finish("estimate-alpha", seed, args, failures)
}

// -------------------------------------------------------------------- diagnose

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "ground-truth")]
    pub beta_source: BetaSource,
    #[arg(long)]
    pub beta_file: Option<PathBuf>,
    /// Overdispersion for the prediction bands; estimated when absent.
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub svg: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

pub fn diagnose(args: &DiagnoseArgs, seed: u64) -> Result<(), CliError> {
    usage(!(args.level > 0.0 && args.level < 1.0), "--level must lie in (0, 1)")?;
    let ds = args.data.load(args.beta_source == BetaSource::GroundTruth, true)?;
    let y = ds.votes.clone().expect("votes required above");
    let m = y.trials;
    let beta = plug_in_beta(&ds, args.beta_source, &args.beta_file)?;
    let x = ds.design()?;
    let (alpha0, estimated) = match args.alpha0 {
        Some(a) => (a, false),
        None => (estimate_alpha0(&x, &y.positives, m, &beta)?.alpha0_hat, true),
    };
    let group = GroupModel::new(m, alpha0)?;
    let taus = x.posteriors(&beta)?;
    let groups = vote_group_means(&taus, &y.positives, m)?;
    let table = expected_vs_observed(&taus, &y.positives, &group, args.level)?;

    let mut out = Outputs::new(&args.out)?;
    let rows: Vec<Vec<String>> = groups
        .iter()
        .map(|g| vec![g.votes.to_string(), g.n_v.to_string(), num(g.mean_tau), g.se.map(num).unwrap_or_default()])
        .collect();
    out.csv("vote_groups.csv", &["votes", "n_v", "mean_tau", "se"], &rows)?;
    let rows: Vec<Vec<String>> = table
        .iter()
        .enumerate()
        .map(|(j, r)| {
            vec![
                j.to_string(),
                num(r.tau),
                num(r.expected),
                r.observed.to_string(),
                r.lo.to_string(),
                r.hi.to_string(),
                (r.in_band as u8).to_string(),
            ]
        })
        .collect();
    out.csv("expected_observed.csv", &["row", "tau", "expected", "observed", "lo", "hi", "in_band"], &rows)?;

    if args.svg {
        let mut a = Axes::new("Mean posterior probability by vote count", "positive votes", "mean tau", Scale::Linear, (0.0, m as f64), (0.0, 1.0));
        let pts: Vec<(f64, f64)> = groups.iter().map(|g| (g.votes as f64, g.mean_tau)).collect();
        for g in &groups {
            if let Some(se) = g.se {
                a.error_bar(g.votes as f64, g.mean_tau - se, g.mean_tau + se, Axes::colour(0));
            }
        }
        a.points(&pts, Axes::colour(0), 3.5);
        out.write("vote_groups.svg", a.render())?;

        let mut b = Axes::new("Observed and expected positive votes", "expected votes", "observed votes", Scale::Linear, (0.0, m as f64), (0.0, m as f64));
        let mut order: Vec<usize> = (0..table.len()).collect();
        order.sort_by(|&i, &j| table[i].tau.total_cmp(&table[j].tau));
        let line = |f: &dyn Fn(&noisylab::diagnostics::ExpectedObserved) -> f64| -> Vec<(f64, f64)> {
            order.iter().map(|&i| (table[i].expected, f(&table[i]))).collect()
        };
        b.line(&line(&|r| r.expected), Axes::colour(1), Some("mean"), false);
        b.line(&line(&|r| r.lo as f64), Axes::colour(1), Some("prediction band"), true);
        b.line(&line(&|r| r.hi as f64), Axes::colour(1), None, true);
        b.points(&line(&|r| r.observed as f64), Axes::colour(0), 2.5);
        out.write("expected_observed.svg", b.render())?;
    }
    out.json(
        "diagnostics.json",
        &json!({
            "alpha0": alpha0,
            "alpha0_estimated": estimated,
            "beta_source": args.beta_source,
            "beta": beta,
            "level": args.level,
            "band_coverage": band_coverage(&table),
            "m": m,
            "n": ds.n,
        }),
    )?;
    out.finish("diagnose", seed, args, BTreeMap::new())
}

// ------------------------------------------------------------------ experiment

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparationArg {
    Redraw,
    Ridge,
    Accept,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 50)]
    pub n_train: usize,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,50,100")]
    pub m_list: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
    pub alpha0_list: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Handling of training fits without a finite maximum likelihood estimate.
    #[arg(long, value_enum, default_value = "redraw")]
    pub separation: SeparationArg,
    /// Largest tolerated fraction of redrawn splits or vote sets.
    #[arg(long, default_value_t = 0.1)]
    pub max_redraw_fraction: f64,
    #[arg(long)]
    pub svg: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

pub fn experiment(args: &ExperimentArgs, seed: u64) -> Result<(), CliError> {
    usage(args.m_list.is_empty() || args.alpha0_list.is_empty(), "grid lists must be non-empty")?;
    usage(args.reps == 0, "--reps must be at least 1")?;
    let ds = args.data.load(true, false)?;
    let groups = args
        .m_list
        .iter()
        .flat_map(|&m| args.alpha0_list.iter().map(move |&a| GroupModel::new(m, a)))
        .collect::<Result<Vec<_>, _>>()?;
    let options = ExperimentOptions {
        separation: match args.separation {
            SeparationArg::Redraw => SeparationPolicy::Redraw,
            SeparationArg::Ridge => SeparationPolicy::Ridge,
            SeparationArg::Accept => SeparationPolicy::Accept,
        },
        max_redraw_fraction: args.max_redraw_fraction,
        fit: FitOptions::default(),
    };
    let plan = SplitPlan { train_size: args.n_train, seed, repetitions: args.reps };
    let t = run_dataset_experiment(&ds, &plan, &groups, &options)?;

    let opt = |v: f64| if v.is_finite() { num(v) } else { String::new() };
    let mut rows = vec![vec!["ground_truth".into(), String::new(), String::new(), num(t.baseline.mean), opt(t.baseline.se)]];
    rows.extend(t.cells.iter().map(|c| vec!["votes".into(), c.m.to_string(), num(c.alpha0), num(c.error.mean), opt(c.error.se)]));
    let mut out = Outputs::new(&args.out)?;
    out.csv("experiment_errors.csv", &["rule", "m", "alpha0", "mean_error", "se"], &rows)?;
    let rows: Vec<Vec<String>> = t
        .cells
        .iter()
        .map(|c| vec![c.m.to_string(), num(c.alpha0), c.relative_efficiency.map(num).unwrap_or_default(), num(c.theoretical_are)])
        .collect();
    out.csv("experiment_efficiency.csv", &["m", "alpha0", "re_simulated", "are_theoretical"], &rows)?;
    if args.svg {
        let ys: Vec<f64> = t.cells.iter().map(|c| c.error.mean).chain([t.baseline.mean]).collect();
        let top = ys.iter().copied().fold(0.0, f64::max);
        let (amin, amax) = args.alpha0_list.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let mut axes = Axes::new("Mean test error", "alpha0", "error", Scale::Log10, (amin, amax), (0.0, top));
        for (k, &m) in args.m_list.iter().enumerate() {
            let pts: Vec<(f64, f64)> = t.cells.iter().filter(|c| c.m == m).map(|c| (c.alpha0, c.error.mean)).collect();
            axes.line(&pts, Axes::colour(k), Some(&format!("m = {m}")), false);
            axes.points(&pts, Axes::colour(k), 3.0);
        }
        axes.line(&[(amin, t.baseline.mean), (amax, t.baseline.mean)], "#444444", Some("ground truth"), true);
        out.write("experiment_errors.svg", axes.render())?;
    }
    out.json(
        "experiment.json",
        &json!({
            "bayes_proxy": t.bayes_proxy,
            "beta_full": t.beta_full,
            "baseline": t.baseline,
            "repetitions": t.repetitions,
            "split_redraws": t.split_redraws,
            "vote_redraws": t.vote_redraws,
        }),
    )?;
    let failures = BTreeMap::from([("split_redraws".into(), t.split_redraws), ("vote_redraws".into(), t.vote_redraws)]);
    out.finish("experiment", seed, args, failures)
}

// ---------------------------------------------------------------------- replay

fn config<T: for<'de> Deserialize<'de>>(m: &RunManifest) -> Result<T, CliError> {
    Ok(serde_json::from_value(m.config.clone())?)
}

pub fn replay(manifest: &Path, out: PathBuf) -> Result<(), CliError> {
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(manifest)?)?;
    match m.command.as_str() {
        "simulate-are" => simulate_are(&AreArgs { out, ..config(&m)? }, m.seed),
        "simulate-data" => simulate_data(&SimulateDataArgs { out, ..config(&m)? }, m.seed),
        "fit" => fit(&FitArgs { out, ..config(&m)? }, m.seed),
        "estimate-alpha" => estimate_alpha(&AlphaArgs { out, ..config(&m)? }, m.seed),
        "diagnose" => diagnose(&DiagnoseArgs { out, ..config(&m)? }, m.seed),
        "experiment" => experiment(&ExperimentArgs { out, ..config(&m)? }, m.seed),
        other => Err(CliError::Usage(format!("unknown command `{other}` in manifest"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 12345.678] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
