//! Grows a network three ways, checks that every grown copy computes the
//! same function, and round-trips one through a checkpoint file.

use polyzero::game::Game;
use polyzero::games::Hex;
use polyzero::nn::{
    grow_add_block, grow_add_channels, grow_kernel, load_checkpoint, save_checkpoint, ChannelGroup,
    Checkpoint, Network, NetworkSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let spec = NetworkSpec {
        input_channels: 3,
        trunk_channels: 8,
        residual_blocks: 1,
        kernel_size: 3,
        policy_channels: 2,
        value_pool_channels: 4,
        value_hidden: 16,
    };
    let net: Network = Network::new(spec, &mut rng)?;
    let game = Hex::new(9)?;
    let input = game.encode(&game.initial_state())?;
    let before = net.forward(&input)?;

    let grown = grow_kernel(
        &grow_add_channels(
            &grow_add_block(&net, &mut rng),
            ChannelGroup::Trunk,
            8,
            &mut rng,
        )?,
        5,
    )?;
    let after = grown.forward(&input)?;
    println!(
        "{} -> {} parameters",
        spec.param_count(),
        grown.spec().param_count()
    );
    println!("{:?}", grown.spec());
    println!(
        "max policy diff {:e}, value {} vs {}",
        before.policy.max_abs_diff(&after.policy),
        before.value,
        after.value
    );

    let path = std::env::temp_dir().join("grown.pzck");
    let mut ckpt = Checkpoint::new(game.id(), grown);
    ckpt.step = 1;
    save_checkpoint(&ckpt, &path)?;
    let loaded = load_checkpoint(&path)?;
    println!("round trip identical: {}", loaded == ckpt);
    Ok(())
}
