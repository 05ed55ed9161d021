//! Trains Connect-3 on a 4×4 board from scratch and evaluates the result
//! against a random player and against the untrained network.
//!
//! ```text
//! cargo run --release --example train_connect3 -- [games] [out_dir]
//! ```

use std::sync::Arc;
use std::time::Instant;

use polyzero::arena::{play_match, ArenaConfig, MctsAgent, RandomAgent};
use polyzero::games::AnyGame;
use polyzero::nn::load_checkpoint;
use polyzero::training::{checkpoint_path, TrainConfig, Trainer, FINAL_CHECKPOINT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let games: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2000);
    let out = args.next().unwrap_or_else(|| "run-connect3".into());

    let config = TrainConfig::from_text(&format!(
        "game = connect4x4k3\n\
         trunk_channels = 16\n\
         residual_blocks = 2\n\
         simulations = 64\n\
         max_games = {games}\n\
         batch_size = 64\n\
         buffer_capacity = 4000\n\
         checkpoint_interval = 500\n\
         learning_rate = 0.02\n\
         value_pool_channels = 16\n\
         value_hidden = 64\n\
         out_dir = {out}\n"
    ))?;
    let dir = config.out_dir.clone();
    let start = Instant::now();
    let summary = Trainer::new(config)?.run_synchronous()?;
    println!(
        "{} games, {} steps, max reuse {}, {:.0}s",
        summary.games,
        summary.steps,
        summary.buffer.max_reuse,
        start.elapsed().as_secs_f64()
    );

    let game = AnyGame::from_id("connect4x4k3")?;
    let trained = Arc::new(load_checkpoint(dir.join(FINAL_CHECKPOINT))?.network);
    let initial = Arc::new(load_checkpoint(checkpoint_path(&dir, "step-0"))?.network);
    let arena = ArenaConfig {
        games: 100,
        seed: 7,
        ..ArenaConfig::default()
    };
    let me = MctsAgent::network("final", trained, 64).with_sample_plies(2);
    let vs_random = play_match(&game, &me, &RandomAgent, &arena)?;
    println!(
        "vs random: {} / {} / {}",
        vs_random.a_wins, vs_random.draws, vs_random.b_wins
    );
    let old = MctsAgent::network("step-0", initial, 64).with_sample_plies(2);
    let vs_initial = play_match(&game, &me, &old, &arena)?;
    println!(
        "vs step-0: {} / {} / {}",
        vs_initial.a_wins, vs_initial.draws, vs_initial.b_wins
    );
    let as_second = vs_initial
        .games
        .iter()
        .filter(|g| !g.a_first && g.a_score() == 1.0)
        .count();
    println!("  wins as second player: {as_second} of 50");
    Ok(())
}
