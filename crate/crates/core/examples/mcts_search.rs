//! Vanilla UCT on Connect-3 4×4: prints the visit counts of the first move
//! and of a position where the second player must block.

use polyzero::game::Game;
use polyzero::games::ConnectK;
use polyzero::mcts::{run_search, SearchConfig, UniformEvaluator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = ConnectK::new(4, 4, 3)?;
    let config = SearchConfig::uct(20_000, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let mut state = game.initial_state();
    let result = run_search(&game, &state, &UniformEvaluator, &config, &mut rng)?;
    println!("empty board, value for the mover {:+.3}", result.value);
    for (a, v) in result.actions.iter().zip(&result.visits) {
        println!("  column {} : {v} visits", a % 4);
    }

    // First plays columns 1 and 2 on the bottom row; Second has played column 0.
    for col in [1, 0, 2] {
        let landing = game
            .legal_actions(&state)?
            .into_iter()
            .find(|a| a % 4 == col)
            .expect("column open");
        state = game.apply(&state, landing)?;
    }
    let result = run_search(&game, &state, &UniformEvaluator, &config, &mut rng)?;
    println!(
        "\nSecond to move, First threatens column 3: chooses column {}",
        result.chosen % 4
    );
    for (a, v) in result.actions.iter().zip(&result.visits) {
        println!("  column {} : {v} visits", a % 4);
    }
    Ok(())
}
