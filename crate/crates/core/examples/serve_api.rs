//! Drives the match API in-process with an untrained Hex 7×7 engine: the
//! human opens in the centre, the engine replies. With a port argument the
//! same store is served over HTTP instead.
//!
//! ```text
//! cargo run --example serve_api            # scripted exchange
//! cargo run --example serve_api -- 8080    # GET /games, POST /matches, ...
//! ```

use std::sync::Arc;

use polyzero::game::Game;
use polyzero::games::Hex;
use polyzero::nn::{Checkpoint, Network, NetworkSpec};
use polyzero::serve::{run_server, ActionJson, CreateMatch, Engine, MatchStore, SubmitMove};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = Hex::new(7)?;
    let spec = NetworkSpec {
        input_channels: 3,
        trunk_channels: 8,
        residual_blocks: 1,
        kernel_size: 3,
        policy_channels: game.action_space().channels,
        value_pool_channels: 4,
        value_hidden: 8,
    };
    let net = Network::new(spec, &mut ChaCha8Rng::seed_from_u64(2))?;
    let engine = Engine::from_checkpoint(Checkpoint::new(game.id(), net), 64)?;
    let store = Arc::new(MatchStore::new(engine, None, 1));

    if let Some(port) = std::env::args().nth(1) {
        let addr = format!("127.0.0.1:{port}").parse()?;
        let runtime = tokio::runtime::Runtime::new()?;
        return Ok(runtime.block_on(run_server(store, addr))?);
    }

    let (view, _) = store.create(&CreateMatch::default())?;
    println!("created match {} ({})", view.id, view.game.id);
    let (_, engine_turn) = store.submit(
        &view.id,
        &SubmitMove {
            ply: Some(0),
            action: ActionJson {
                channel: 0,
                r: 3,
                c: 3,
            },
        },
    )?;
    if engine_turn {
        store.settle(&view.id)?;
    }
    println!("{}", serde_json::to_string_pretty(&store.get(&view.id)?)?);
    Ok(())
}
