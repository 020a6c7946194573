use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use brlab::bounds::{
    brd_convergence_formula, brd_upper_bound, kais1_ratio, kais2_gap, riemann_chain, stirling_bounds_check,
    sweep_exhaustive, sweep_random, BoundParams, CombCheck, SweepSummary,
};
use brlab::dynamics::{run_best_response, run_better_response, RunOptions};
use brlab::exact::exact_summary;
use brlab::graph::{build_graph, sink_decomposition, GraphKind};
use brlab::harness::{emit_report, run_experiment, Experiment, ExperimentConfig, Format};
use brlab::{Error, Game, Profile};

#[derive(Parser)]
#[command(name = "brlab", version, about = "Best- and better-response dynamics on random games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Strategies per player.
    #[arg(long = "K", global = true, default_value_t = 10)]
    k: usize,
    #[arg(long, global = true, default_value_t = 1000)]
    trials: u64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    parallelism: usize,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Start profile "s1,s2", 1-based.
    #[arg(long, global = true)]
    start: Option<Profile>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Confidence level of the reported intervals.
    #[arg(long, global = true, default_value_t = 0.95)]
    confidence: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Process {
    Best,
    Better,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Comb,
    Cocomb,
    Prodratio,
    Kais1,
    Kais2,
    Stirling,
    Riemann,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence rate of best (BRD) or better (bRD) response dynamics.
    Simulate {
        #[arg(long, value_enum, default_value_t = Process::Better)]
        process: Process,
    },
    /// Distribution of the number of pure Nash equilibria.
    PneCensus,
    /// Sink components of size two or more, one JSON line per game with --format json.
    TrapCensus,
    /// Frequency of the row-domination event at --sigma.
    DeltaEvent,
    /// Games holding both a trap and a pure Nash equilibrium.
    Coexistence,
    /// Exact distributions for K = 2 or 3, as JSON.
    Exact,
    /// Check a combinatorial inequality or numeric claim over a grid.
    VerifyBounds {
        #[arg(long, value_enum)]
        which: Which,
        /// Largest K (or n for stirling) checked.
        #[arg(long = "K-max")]
        k_max: Option<usize>,
        /// Explicit grid, comma separated (kais1, kais2, riemann).
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        /// Extra random cases at K-max + 1 (comb, cocomb, prodratio).
        #[arg(long, default_value_t = 0)]
        random_cases: u64,
    },
    /// Replay one run on a game read from JSON and print its trajectory as CSV.
    Trajectory {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, value_enum, default_value_t = Process::Best)]
        process: Process,
    },
}

/// Failure of a command, mapped to an exit code.
enum Failure {
    Usage(String),
    Runtime(String),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::UnsupportedSize(_) | Error::Capacity { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("brlab: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("brlab: {msg}");
            ExitCode::from(2)
        }
    }
}

impl Global {
    fn params(&self) -> Option<BoundParams> {
        if self.alpha.is_none() && self.beta.is_none() && self.sigma.is_none() {
            return None;
        }
        let d = BoundParams::default();
        Some(BoundParams {
            alpha: self.alpha.unwrap_or(d.alpha),
            beta: self.beta.unwrap_or(d.beta),
            sigma: self.sigma.unwrap_or(d.sigma),
            cnst: d.cnst,
        })
    }

    fn config(&self, experiment: Experiment) -> ExperimentConfig {
        ExperimentConfig {
            params: self.params(),
            start: self.start,
            ..ExperimentConfig::new(experiment, self.k, self.trials, self.seed)
                .with_parallelism(self.parallelism)
                .with_confidence(self.confidence)
        }
    }

    fn format(&self) -> Format {
        match self.format {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(format!("stdout: {e}"))),
    }
}

fn experiment(g: &Global, e: Experiment) -> Result<(), Failure> {
    let report = run_experiment(&g.config(e))?;
    emit_report(&report, g.format(), g.out.as_deref())?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    match cli.command {
        Command::Simulate { process } => experiment(
            g,
            match process {
                Process::Best => Experiment::BrdConvergence,
                Process::Better => Experiment::BetterConvergence,
            },
        ),
        Command::PneCensus => experiment(g, Experiment::PneCensus),
        Command::TrapCensus => experiment(g, Experiment::TrapCensus),
        Command::DeltaEvent => experiment(g, Experiment::DeltaEvent),
        Command::Coexistence => experiment(g, Experiment::Coexistence),
        Command::Exact => {
            let summary = exact_summary(g.k)?;
            write_text(g.out.as_deref(), &(summary.to_json() + "\n"))
        }
        Command::VerifyBounds {
            which,
            k_max,
            grid,
            random_cases,
        } => {
            let report = verify_bounds(g, which, k_max, grid, random_cases)?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))?;
            write_text(g.out.as_deref(), &(text + "\n"))?;
            if report.violations > 0 {
                Err(Failure::Check)
            } else {
                Ok(())
            }
        }
        Command::Trajectory { game, process } => {
            let json = fs::read_to_string(&game).map_err(|e| Failure::Runtime(format!("{}: {e}", game.display())))?;
            let game =
                Game::from_json(&json).map_err(|e| Failure::Usage(format!("{}: {e}", game.display())))?;
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            let start = g.start.unwrap_or(Profile::new(1, 1));
            let opts = RunOptions {
                trajectory_cap: Some(usize::MAX),
                confirm_cycle: false,
            };
            let (outcome, traj) = match process {
                Process::Best => run_best_response(&game, &mut rng, start, &opts)?,
                Process::Better => {
                    let sinks = sink_decomposition(&build_graph(&game, GraphKind::Better));
                    run_better_response(&game, &mut rng, &sinks, start, &opts)?
                }
            };
            eprintln!(
                "{:?} after {} transitions{}",
                outcome.kind,
                outcome.detection_step,
                outcome.pne.map(|p| format!(" at ({p})")).unwrap_or_default()
            );
            write_text(g.out.as_deref(), &traj.to_csv_string())
        }
    }
}

#[derive(Serialize)]
struct GridValue {
    #[serde(rename = "K")]
    k: usize,
    value: f64,
}

#[derive(Serialize)]
struct BoundsReport {
    which: &'static str,
    checked: u64,
    violations: u64,
    grid_values: Vec<GridValue>,
    /// Counterexamples `(K, m, c)` of the combinatorial sweeps.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    examples: Vec<(usize, usize, Vec<usize>)>,
}

fn sweep_report(which: CombCheck, name: &'static str, k_max: usize, random_cases: u64, seed: u64) -> BoundsReport {
    // Per-K violation counts, from differences of cumulative sweeps.
    let mut grid_values = Vec::new();
    let mut previous = SweepSummary::default();
    for k in 1..=k_max {
        let s = sweep_exhaustive(which, k);
        grid_values.push(GridValue {
            k,
            value: (s.violations - previous.violations) as f64,
        });
        previous = s;
    }
    let mut total = previous;
    if random_cases > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let extra = sweep_random(which, k_max + 1, random_cases, &mut rng);
        grid_values.push(GridValue {
            k: k_max + 1,
            value: extra.violations as f64,
        });
        total.checked += extra.checked;
        total.violations += extra.violations;
        total.examples.extend(extra.examples);
    }
    BoundsReport {
        which: name,
        checked: total.checked,
        violations: total.violations,
        grid_values,
        examples: total.examples,
    }
}

/// Grid evaluation where a violation is a step in the wrong direction, plus
/// any extra per-point failure.
fn trend_report(
    name: &'static str,
    grid: &[usize],
    value: impl Fn(usize) -> brlab::Result<f64>,
    step_ok: impl Fn(f64, f64) -> bool,
    last_ok: impl Fn(f64) -> bool,
) -> Result<BoundsReport, Failure> {
    let values = grid.iter().map(|&k| value(k)).collect::<brlab::Result<Vec<f64>>>()?;
    let mut violations = values.windows(2).filter(|w| !step_ok(w[0], w[1])).count() as u64;
    if let Some(&last) = values.last() {
        violations += u64::from(!last_ok(last));
    }
    Ok(BoundsReport {
        which: name,
        checked: values.len() as u64,
        violations,
        grid_values: grid.iter().zip(values).map(|(&k, value)| GridValue { k, value }).collect(),
        examples: Vec::new(),
    })
}

fn verify_bounds(
    g: &Global,
    which: Which,
    k_max: Option<usize>,
    grid: Option<Vec<usize>>,
    random_cases: u64,
) -> Result<BoundsReport, Failure> {
    let params = g.params().unwrap_or_default();
    params.validate()?;
    let grid_or = |default: Vec<usize>| grid.clone().unwrap_or(default);
    match which {
        Which::Comb => Ok(sweep_report(CombCheck::Comb, "comb", k_max.unwrap_or(5), random_cases, g.seed)),
        Which::Cocomb => Ok(sweep_report(CombCheck::Cocomb, "cocomb", k_max.unwrap_or(5), random_cases, g.seed)),
        Which::Prodratio => Ok(sweep_report(CombCheck::ProdRatio, "prodratio", k_max.unwrap_or(5), random_cases, g.seed)),
        Which::Kais1 => {
            let top = k_max.unwrap_or(800);
            let default = std::iter::successors(Some(100), |k| Some(k * 2)).take_while(|&k| k <= top).collect();
            trend_report("kais1", &grid_or(default), |k| kais1_ratio(k, params.alpha), |a, b| b <= a, |_| true)
        }
        Which::Kais2 => {
            let top = k_max.unwrap_or(400);
            let default = (1..).map(|i| 100 * i).take_while(|&k| k <= top).collect();
            trend_report(
                "kais2",
                &grid_or(default),
                |k| kais2_gap(k, params.alpha, params.beta),
                |a, b| b < a,
                |last| last < 0.0,
            )
        }
        Which::Stirling => {
            let top = k_max.unwrap_or(170) as u64;
            let mut report = BoundsReport {
                which: "stirling",
                checked: 0,
                violations: 0,
                grid_values: Vec::new(),
                examples: Vec::new(),
            };
            for n in 1..=top {
                let ok = stirling_bounds_check(n)?;
                report.checked += 1;
                report.violations += u64::from(!ok);
                report.grid_values.push(GridValue {
                    k: n as usize,
                    value: f64::from(u8::from(ok)),
                });
            }
            Ok(report)
        }
        Which::Riemann => {
            let top = k_max.unwrap_or(1000);
            let ks = grid_or((2..=top).collect());
            let mut report = BoundsReport {
                which: "riemann",
                checked: 0,
                violations: 0,
                grid_values: Vec::new(),
                examples: Vec::new(),
            };
            for k in ks {
                let chain = riemann_chain(k)?;
                let formula = brd_convergence_formula(k)?;
                let ok = chain.holds() && formula <= brd_upper_bound(k);
                report.checked += 1;
                report.violations += u64::from(!ok);
                report.grid_values.push(GridValue { k, value: formula });
            }
            Ok(report)
        }
    }
}
