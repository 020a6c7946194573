//! Sink decomposition of the better-response graph, trap reports, and a few better-response runs.
use brlab::dynamics::{run_better_response, RunOptions};
use brlab::graph::{build_graph, classify_large_trap, sink_decomposition, GraphKind};
use brlab::{Game, Profile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> brlab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // Keep drawing until a game with a trap turns up.
    let g = loop {
        let g = Game::random(8, &mut rng)?;
        if !brlab::graph::find_traps(&g).is_empty() {
            break g;
        }
    };
    let sinks = sink_decomposition(&build_graph(&g, GraphKind::Better));
    println!("{} components, equilibria {:?}", sinks.component_count(), sinks.singleton_sinks());
    for t in sinks.trap_reports() {
        println!(
            "trap of size {}: R = {:?}, C = {:?}, class {}",
            t.size,
            t.row_counts,
            t.col_counts,
            classify_large_trap(&t, 0.5)?.as_str()
        );
    }
    for _ in 0..5 {
        let (outcome, traj) = run_better_response(&g, &mut rng, &sinks, Profile::new(1, 1), &RunOptions::default())?;
        println!("{:?} after {} transitions", outcome.kind, traj.transitions());
    }
    Ok(())
}
