//! Plays a few self-play games of EWN with an untrained network, writes the
//! samples in the wire format and reads them back.

use polyzero::game::Game;
use polyzero::games::Ewn;
use polyzero::mcts::NetworkEvaluator;
use polyzero::nn::{Network, NetworkSpec};
use polyzero::training::wire::{read_record, spec_hash, write_record, SampleRecord};
use polyzero::training::{self_play_game, SelfPlayConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let game = Ewn::new();
    let spec = NetworkSpec {
        input_channels: 3,
        trunk_channels: 8,
        residual_blocks: 1,
        kernel_size: 3,
        policy_channels: game.action_space().channels,
        value_pool_channels: 4,
        value_hidden: 8,
    };
    let net = Arc::new(Network::new(spec, &mut rng)?);
    let model = NetworkEvaluator::new(net);
    let mut config = SelfPlayConfig::default();
    config.search.simulations = 32;

    let mut bytes = Vec::new();
    for i in 0..3 {
        let record = self_play_game(&game, &model, &config, &mut rng)?;
        println!(
            "game {i}: {:?}, {} moves, {} samples",
            record.status,
            record.moves,
            record.samples.len()
        );
        let wire = SampleRecord {
            game_id: game.id(),
            spec_hash: spec_hash(&spec),
            samples: record.samples,
        };
        write_record(&mut bytes, &wire)?;
    }
    println!("{} bytes on the wire", bytes.len());
    let mut input = bytes.as_slice();
    while let Some(record) = read_record(&mut input)? {
        let rewards: Vec<f32> = record.samples.iter().map(|s| s.reward).collect();
        println!("{}: rewards {rewards:?}", record.game_id);
    }
    Ok(())
}
