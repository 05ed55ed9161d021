//! Head-to-head matches on 5×5 Hex: UCT against a random player, and UCT
//! with 400 simulations against UCT with 50. Colors alternate between games.

use polyzero::arena::{play_match, ArenaConfig, MctsAgent, RandomAgent};
use polyzero::games::AnyGame;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = AnyGame::from_id("hex5")?;
    let config = ArenaConfig {
        games: 20,
        seed: 1,
        ..ArenaConfig::default()
    };
    let strong = MctsAgent::uct(400, 1.0).with_sample_plies(2);
    let weak = MctsAgent::uct(50, 1.0).with_sample_plies(2);
    for (name, report) in [
        (
            "uct-400 vs random",
            play_match(&game, &strong, &RandomAgent, &config)?,
        ),
        (
            "uct-400 vs uct-50",
            play_match(&game, &strong, &weak, &config)?,
        ),
    ] {
        println!(
            "{name}: {} / {} / {}  elo {:+.0}",
            report.a_wins,
            report.draws,
            report.b_wins,
            report.elo_delta().unwrap_or(0.0)
        );
    }
    Ok(())
}
