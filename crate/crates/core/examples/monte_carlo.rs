//! Seeded Monte Carlo estimates with Wilson intervals, written as CSV.
use brlab::harness::{conditional_rate, emit_report, run_experiment, Condition, Experiment, ExperimentConfig, Format};

fn main() -> brlab::Result<()> {
    for (experiment, k, trials) in [
        (Experiment::PneCensus, 10, 5_000),
        (Experiment::BrdConvergence, 100, 2_000),
        (Experiment::BetterConvergence, 30, 1_000),
        (Experiment::Coexistence, 12, 1_000),
    ] {
        let report = run_experiment(&ExperimentConfig::new(experiment, k, trials, 1))?;
        emit_report(&report, Format::Csv, None)?;
    }
    let cfg = ExperimentConfig::new(Experiment::BetterConvergence, 30, 1_000, 1);
    let given_pne = conditional_rate(&cfg, Condition::HasPne)?;
    println!(
        "P(converge | equilibrium exists) = {:.4} [{:.4}, {:.4}] over {} games",
        given_pne.p_hat, given_pne.ci_low, given_pne.ci_high, given_pne.trials
    );
    Ok(())
}
