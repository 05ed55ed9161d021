//! Self-play data generation, the replay buffer and the training loop.

mod buffer;
mod config;
mod selfplay;
mod trainer;
pub mod wire;

use thiserror::Error;

use crate::game::GameError;
use crate::mcts::SearchError;
use crate::nn::{CheckpointError, NnError};
use crate::tournament::TournamentError;

pub use buffer::{BufferStats, ReplayBuffer, Sample, Starved, MAX_REUSE};
pub use config::TrainConfig;
pub use selfplay::{play_game, self_play_game, GameRecord, Recorded, SelfPlayConfig};
pub use trainer::{
    checkpoint_id, checkpoint_path, TrainSummary, Trainer, FINAL_CHECKPOINT, POOL_LEDGER,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Tournament(#[from] TournamentError),
    #[error(transparent)]
    Wire(#[from] wire::WireError),
}
