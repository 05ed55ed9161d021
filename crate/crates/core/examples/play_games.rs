//! Plays one random game of every catalogue game and prints the final board.
//! The Hex game demonstrates the pie rule: the second player swaps at ply 1.

use polyzero::cli::render_board;
use polyzero::game::{Action, Game, GameStatus};
use polyzero::games::{AnyGame, CATALOG};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for id in CATALOG {
        let game = AnyGame::from_id(id)?;
        let mut state = game.initial_state();
        let mut rolls = 0;
        while game.status(&state) == GameStatus::Ongoing {
            if game.is_chance(&state) {
                let outcomes = game.chance_outcomes(&state)?;
                state = outcomes.choose(&mut rng).expect("outcomes").state.clone();
                rolls += 1;
                continue;
            }
            let legal = game.legal_actions(&state)?;
            let swap = game.action_space().index(Action {
                channel: 1,
                row: 0,
                col: 0,
            });
            let action = match swap {
                Some(s) if game.family() == "hex" && legal.contains(&s) => s,
                _ => *legal.choose(&mut rng).expect("legal moves"),
            };
            state = game.apply(&state, action)?;
        }
        println!(
            "{id}: {:?} after {} plies ({rolls} die rolls)",
            game.status(&state),
            game.ply(&state)
        );
        println!("{}", render_board(&game, &state));
    }
    Ok(())
}
