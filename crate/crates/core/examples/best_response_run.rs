//! Best-response dynamics on a K = 25 game: outcome, trajectory, and the confirmed cycle when trapped.
use brlab::dynamics::{confirm_best_response_cycle, run_best_response, RunOptions};
use brlab::{Game, Profile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> brlab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = Game::random(25, &mut rng)?;
    let (outcome, traj) = run_best_response(&g, &mut rng, Profile::new(1, 1), &RunOptions::default())?;
    println!("{outcome:?}");
    print!("{}", traj.to_csv_string());
    if !outcome.converged() {
        let last = *traj.steps().last().expect("trajectory has a start");
        if let Some(cycle) = confirm_best_response_cycle(&g, last) {
            let cycle: Vec<String> = cycle.iter().map(|p| format!("({p})")).collect();
            println!("cycle of length {}: {}", cycle.len(), cycle.join(" -> "));
        }
    }
    Ok(())
}
