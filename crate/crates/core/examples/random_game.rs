//! Draw a random game, list its equilibria and response sets, round-trip it through JSON.
use brlab::{Game, Player, Profile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> brlab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let g = Game::random(4, &mut rng)?;
    println!("player 1 ranks: {:?}", g.ranks(Player::One));
    println!("player 2 ranks: {:?}", g.ranks(Player::Two));
    println!("pure equilibria: {:?}", g.enumerate_pne());

    let s = Profile::new(1, 1);
    for p in Player::BOTH {
        println!(
            "player {p} at {s}: better {:?}, best {:?}",
            g.better_responses(s, p),
            g.best_response(s, p)
        );
    }

    let json = g.to_json();
    assert_eq!(Game::from_json(&json)?, g);
    println!("{json}");
    Ok(())
}
