//! Simulates the opponent pool: a developing model that improves steadily
//! plays pool members, and a snapshot is admitted every 20 games.

use polyzero::tournament::{expected_score, EloPool, GameResult, Opponent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pool = EloPool::default();
    // Hidden true strength of every snapshot, in ELO.
    let mut strength = std::collections::HashMap::new();
    for game in 0..400u32 {
        let dev_strength = 1000.0 + game as f64;
        if game % 20 == 0 {
            let id = format!("step-{game}");
            strength.insert(id.clone(), dev_strength);
            if let Some(gone) = pool.admit(&id)? {
                println!(
                    "game {game}: pool full, dropped {} ({:.0})",
                    gone.id, gone.rating
                );
            }
        }
        if let Opponent::Member(id) = pool.select_opponent(&mut rng) {
            let p = expected_score(dev_strength, strength[&id]);
            let result = if rng.random_bool(p) {
                GameResult::Win
            } else {
                GameResult::Loss
            };
            pool.record_result(&id, result)?;
        }
    }
    println!("\ndev rating {:.1}", pool.dev_rating());
    for (m, w) in pool.members().iter().zip(pool.selection_weights()) {
        println!(
            "{:>10} rating {:7.1}  games {:3}  p(select) {:.3}",
            m.id, m.rating, m.games, w
        );
    }
    Ok(())
}
