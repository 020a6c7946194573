//! Seeded Monte Carlo experiments over random games.
//!
//! Trial `i` draws its game and its dynamics from a stream seeded by
//! `(base_seed, K, i)` alone, and results are gathered in trial order, so a
//! report does not depend on the number of worker threads.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundParams;
use crate::dynamics::{run_best_response, run_better_response, RunOptions};
use crate::error::{invalid, Error, Result};
use crate::game::{Game, Profile};
use crate::graph::{build_graph, classify_large_trap, delta_event_occurs, sink_decomposition, GraphKind, TrapClass};
use crate::stats::{mean_std, trial_rng, trial_seed, Estimate, DEFAULT_CONFIDENCE};

/// Largest response graph the harness will build, in profiles.
pub const MAX_GRAPH_NODES: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    PneCensus,
    BrdConvergence,
    BetterConvergence,
    TrapCensus,
    DeltaEvent,
    Coexistence,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::PneCensus,
        Experiment::BrdConvergence,
        Experiment::BetterConvergence,
        Experiment::TrapCensus,
        Experiment::DeltaEvent,
        Experiment::Coexistence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::PneCensus => "pne-census",
            Experiment::BrdConvergence => "brd-convergence",
            Experiment::BetterConvergence => "better-convergence",
            Experiment::TrapCensus => "trap-census",
            Experiment::DeltaEvent => "delta-event",
            Experiment::Coexistence => "coexistence",
        }
    }

    fn needs_graph(self) -> bool {
        matches!(
            self,
            Experiment::BetterConvergence | Experiment::TrapCensus | Experiment::Coexistence
        )
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Experiment> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(rename = "K")]
    pub k: usize,
    pub trials: u64,
    pub base_seed: u64,
    /// Worker threads; 0 uses rayon's default.
    #[serde(skip)]
    pub parallelism: usize,
    pub params: Option<BoundParams>,
    pub start: Option<Profile>,
    pub confidence: f64,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, k: usize, trials: u64, base_seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            experiment,
            k,
            trials,
            base_seed,
            parallelism: 0,
            params: None,
            start: None,
            confidence: DEFAULT_CONFIDENCE,
        }
    }

    pub fn with_parallelism(mut self, workers: usize) -> Self {
        self.parallelism = workers;
        self
    }

    pub fn with_params(mut self, params: BoundParams) -> Self {
        self.params = Some(params);
        self
    }

    pub fn with_start(mut self, start: Profile) -> Self {
        self.start = Some(start);
        self
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn start_profile(&self) -> Profile {
        self.start.unwrap_or(Profile::new(1, 1))
    }

    pub fn bound_params(&self) -> BoundParams {
        self.params.unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("K must be at least 1"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if !self.start_profile().is_valid(self.k) {
            return Err(invalid(format!("start {} outside [1, {}]^2", self.start_profile(), self.k)));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(invalid(format!("confidence must lie in (0,1), got {}", self.confidence)));
        }
        if let Some(p) = self.params {
            p.validate()?;
        }
        let nodes = self.k.saturating_mul(self.k);
        if self.experiment.needs_graph() && nodes > MAX_GRAPH_NODES {
            return Err(Error::Capacity {
                nodes,
                limit: MAX_GRAPH_NODES,
            });
        }
        Ok(())
    }
}

/// One trap in a census line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrapSummary {
    pub size: usize,
    #[serde(rename = "R")]
    pub row_counts: Vec<usize>,
    #[serde(rename = "C")]
    pub col_counts: Vec<usize>,
    pub class: TrapClass,
}

/// One game of a trap census.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrapCensusRecord {
    pub seed: u64,
    #[serde(rename = "K")]
    pub k: usize,
    pub n_pne: usize,
    pub traps: Vec<TrapSummary>,
}

#[derive(Debug, Clone, PartialEq)]
enum Trial {
    Pne { count: usize, start_is_pne: bool },
    Brd { converged: bool },
    Better { converged: bool, has_pne: bool },
    Traps(TrapCensusRecord),
    Delta(bool),
    Coexist { has_trap: bool, has_pne: bool },
}

fn run_trial(cfg: &ExperimentConfig, index: u64) -> Result<Trial> {
    let k = cfg.k;
    let mut rng = trial_rng(cfg.base_seed, k, index);
    let g = Game::random(k, &mut rng)?;
    let start = cfg.start_profile();
    let quiet = RunOptions {
        trajectory_cap: Some(0),
        confirm_cycle: false,
    };
    Ok(match cfg.experiment {
        Experiment::PneCensus => Trial::Pne {
            count: g.enumerate_pne().len(),
            start_is_pne: g.is_pne(start),
        },
        Experiment::BrdConvergence => {
            let (outcome, _) = run_best_response(&g, &mut rng, start, &quiet)?;
            Trial::Brd {
                converged: outcome.converged(),
            }
        }
        Experiment::BetterConvergence => {
            let sinks = sink_decomposition(&build_graph(&g, GraphKind::Better));
            let has_pne = !sinks.singleton_sinks().is_empty();
            let (outcome, _) = run_better_response(&g, &mut rng, &sinks, start, &quiet)?;
            Trial::Better {
                converged: outcome.converged(),
                has_pne,
            }
        }
        Experiment::TrapCensus => {
            let sinks = sink_decomposition(&build_graph(&g, GraphKind::Better));
            let alpha = cfg.bound_params().alpha;
            let traps = sinks
                .trap_reports()
                .into_iter()
                .map(|t| {
                    Ok(TrapSummary {
                        class: classify_large_trap(&t, alpha)?,
                        size: t.size,
                        row_counts: t.row_counts,
                        col_counts: t.col_counts,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Trial::Traps(TrapCensusRecord {
                seed: trial_seed(cfg.base_seed, k, index),
                k,
                n_pne: sinks.singleton_sinks().len(),
                traps,
            })
        }
        Experiment::DeltaEvent => Trial::Delta(delta_event_occurs(&g, cfg.bound_params().sigma)?),
        Experiment::Coexistence => {
            let sinks = sink_decomposition(&build_graph(&g, GraphKind::Better));
            let has_trap = sinks.trap_components().next().is_some();
            Trial::Coexist {
                has_trap,
                has_pne: !sinks.singleton_sinks().is_empty(),
            }
        }
    })
}

fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<Trial>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| (0..cfg.trials).into_par_iter().map(|i| run_trial(cfg, i)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedEstimate {
    pub name: String,
    #[serde(flatten)]
    pub estimate: Estimate,
}

/// Distribution of a per-game count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Census {
    pub histogram: BTreeMap<usize, u64>,
    pub mean: f64,
    pub std: f64,
}

impl Census {
    fn of(counts: &[usize]) -> Census {
        let mut histogram = BTreeMap::new();
        for &c in counts {
            *histogram.entry(c).or_insert(0) += 1;
        }
        let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let (mean, std) = mean_std(&xs);
        Census { histogram, mean, std }
    }

    /// `|mean − target| ≤ sigmas · std / √n`.
    pub fn mean_within(&self, target: f64, sigmas: f64) -> bool {
        let n: u64 = self.histogram.values().sum();
        (self.mean - target).abs() <= sigmas * self.std / (n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub experiment: Experiment,
    #[serde(rename = "K")]
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    pub estimates: Vec<NamedEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub census: Option<Census>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<TrapCensusRecord>,
}

impl Report {
    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name).map(|e| &e.estimate)
    }

    /// The estimate named `name`, or an error naming what is available.
    pub fn require(&self, name: &str) -> Result<&Estimate> {
        self.estimate(name).ok_or_else(|| {
            let known: Vec<&str> = self.estimates.iter().map(|e| e.name.as_str()).collect();
            Error::InsufficientData(format!("no estimate '{name}' in report (have {})", known.join(", ")))
        })
    }
}

struct Builder<'a> {
    cfg: &'a ExperimentConfig,
    estimates: Vec<NamedEstimate>,
}

impl Builder<'_> {
    fn add(&mut self, name: impl Into<String>, successes: u64, trials: u64) -> Result<()> {
        let estimate = Estimate::from_counts(successes, trials, self.cfg.base_seed, self.cfg.confidence)?;
        self.estimates.push(NamedEstimate {
            name: name.into(),
            estimate,
        });
        Ok(())
    }

    /// Skipped when nothing satisfies the condition.
    fn add_conditional(&mut self, name: impl Into<String>, successes: u64, trials: u64) -> Result<()> {
        if trials > 0 {
            self.add(name, successes, trials)?;
        }
        Ok(())
    }
}

fn count<T>(xs: &[T], pred: impl Fn(&T) -> bool) -> u64 {
    xs.iter().filter(|x| pred(x)).count() as u64
}

/// Runs every trial of `cfg` and summarizes them.
///
/// Estimate names, by experiment:
/// - pne-census: `n=0` .. `n=K` (count distribution), `start-is-pne`
/// - brd-convergence: `converged`
/// - better-convergence: `converged`, `converged|pne` (games with a PNE only)
/// - trap-census: `has-trap`, `has-A1`, `has-A2`, `has-small`
/// - delta-event: `delta`
/// - coexistence: `trap-and-pne`, `has-trap`, `has-pne`, `trap|pne`
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let trials = run_trials(cfg)?;
    let n = cfg.trials;
    let mut b = Builder {
        cfg,
        estimates: Vec::new(),
    };
    let mut census = None;
    let mut records = Vec::new();

    match cfg.experiment {
        Experiment::PneCensus => {
            let counts: Vec<usize> = trials
                .iter()
                .map(|t| match t {
                    Trial::Pne { count, .. } => *count,
                    _ => unreachable!(),
                })
                .collect();
            for c in 0..=cfg.k {
                b.add(format!("n={c}"), count(&counts, |&x| x == c), n)?;
            }
            b.add(
                "start-is-pne",
                count(&trials, |t| matches!(t, Trial::Pne { start_is_pne: true, .. })),
                n,
            )?;
            census = Some(Census::of(&counts));
        }
        Experiment::BrdConvergence => {
            b.add("converged", count(&trials, |t| matches!(t, Trial::Brd { converged: true })), n)?;
        }
        Experiment::BetterConvergence => {
            let pairs: Vec<(bool, bool)> = trials
                .iter()
                .map(|t| match t {
                    Trial::Better { converged, has_pne } => (*converged, *has_pne),
                    _ => unreachable!(),
                })
                .collect();
            b.add("converged", count(&pairs, |p| p.0), n)?;
            b.add_conditional("converged|pne", count(&pairs, |p| p.0 && p.1), count(&pairs, |p| p.1))?;
        }
        Experiment::TrapCensus => {
            records = trials
                .into_iter()
                .map(|t| match t {
                    Trial::Traps(r) => r,
                    _ => unreachable!(),
                })
                .collect();
            let with = |class: Option<TrapClass>| {
                count(&records, |r| r.traps.iter().any(|t| class.is_none_or(|c| t.class == c)))
            };
            b.add("has-trap", with(None), n)?;
            b.add("has-A1", with(Some(TrapClass::A1)), n)?;
            b.add("has-A2", with(Some(TrapClass::A2)), n)?;
            b.add("has-small", with(Some(TrapClass::Small)), n)?;
            let counts: Vec<usize> = records.iter().map(|r| r.traps.len()).collect();
            census = Some(Census::of(&counts));
        }
        Experiment::DeltaEvent => {
            b.add("delta", count(&trials, |t| matches!(t, Trial::Delta(true))), n)?;
        }
        Experiment::Coexistence => {
            let pairs: Vec<(bool, bool)> = trials
                .iter()
                .map(|t| match t {
                    Trial::Coexist { has_trap, has_pne } => (*has_trap, *has_pne),
                    _ => unreachable!(),
                })
                .collect();
            b.add("trap-and-pne", count(&pairs, |p| p.0 && p.1), n)?;
            b.add("has-trap", count(&pairs, |p| p.0), n)?;
            b.add("has-pne", count(&pairs, |p| p.1), n)?;
            b.add_conditional("trap|pne", count(&pairs, |p| p.0 && p.1), count(&pairs, |p| p.1))?;
        }
    }

    Ok(Report {
        experiment: cfg.experiment,
        k: cfg.k,
        trials: n,
        seed: cfg.base_seed,
        estimates: b.estimates,
        census,
        records,
    })
}

/// Which games a conditional convergence rate is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    HasPne,
    NoPne,
}

/// Better-response convergence rate among games that satisfy `condition`.
/// The estimate's `trials` is the number of such games.
pub fn conditional_rate(cfg: &ExperimentConfig, condition: Condition) -> Result<Estimate> {
    if cfg.experiment != Experiment::BetterConvergence {
        return Err(invalid(format!(
            "conditional rates need better-convergence, got {}",
            cfg.experiment
        )));
    }
    let trials = run_trials(cfg)?;
    let want = condition == Condition::HasPne;
    let (mut hits, mut kept) = (0u64, 0u64);
    for t in &trials {
        if let Trial::Better { converged, has_pne } = *t {
            if has_pne == want {
                kept += 1;
                hits += u64::from(converged);
            }
        }
    }
    if kept == 0 {
        return Err(Error::InsufficientData(format!(
            "no game among {} trials satisfies the condition",
            cfg.trials
        )));
    }
    Estimate::from_counts(hits, kept, cfg.base_seed, cfg.confidence)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(invalid(format!("unknown format '{s}', expected csv or json"))),
        }
    }
}

pub const CSV_HEADER: [&str; 7] = ["experiment", "K", "trials", "seed", "p_hat", "ci_low", "ci_high"];

/// CSV: one row per estimate, `experiment` column `<experiment>:<estimate>`,
/// `trials` the estimate's own sample size. JSON: the whole report, except
/// for a trap census, which is written as one JSON line per game.
pub fn write_report<W: Write>(report: &Report, format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            for e in &report.estimates {
                w.write_record([
                    format!("{}:{}", report.experiment, e.name),
                    report.k.to_string(),
                    e.estimate.trials.to_string(),
                    report.seed.to_string(),
                    e.estimate.p_hat.to_string(),
                    e.estimate.ci_low.to_string(),
                    e.estimate.ci_high.to_string(),
                ])?;
            }
            w.flush().map_err(|e| Error::Internal(format!("csv flush: {e}")))?;
        }
        Format::Json if report.experiment == Experiment::TrapCensus => {
            let mut out = out;
            for r in &report.records {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n").map_err(|e| Error::Internal(format!("write: {e}")))?;
            }
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n").map_err(|e| Error::Internal(format!("write: {e}")))?;
        }
    }
    Ok(())
}

pub fn report_to_string(report: &Report, format: Format) -> Result<String> {
    let mut buf = Vec::new();
    write_report(report, format, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn emit_report(report: &Report, format: Format, path: Option<&Path>) -> Result<()> {
    let text = report_to_string(report, format)?;
    match path {
        Some(p) => {
            let io_err = |source| Error::Io {
                path: p.to_path_buf(),
                source,
            };
            let mut f = BufWriter::new(File::create(p).map_err(io_err)?);
            f.write_all(text.as_bytes()).map_err(io_err)?;
            f.flush().map_err(io_err)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
