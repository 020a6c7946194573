//! Absorption probabilities of both dynamics from every start of a small game, in floats and exactly.
use brlab::exact::format_rational;
use brlab::graph::{absorption_probabilities, absorption_probabilities_exact, GraphKind};
use brlab::{Game, Profile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> brlab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = Game::random(3, &mut rng)?;
    println!("equilibria {:?}", g.enumerate_pne());
    for kind in [GraphKind::Better, GraphKind::Best] {
        println!("{kind:?}");
        for s1 in 1..=3 {
            for s2 in 1..=3 {
                let start = Profile::new(s1, s2);
                let float = absorption_probabilities(&g, kind, start)?;
                let exact = absorption_probabilities_exact(&g, kind, start)?;
                println!(
                    "  from ({start}): converge {:.6} = {}",
                    float.converge_probability(),
                    format_rational(&exact.converge_probability())
                );
            }
        }
    }
    Ok(())
}
