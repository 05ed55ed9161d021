pub mod arena;
pub mod cli;
pub mod game;
pub mod games;
pub mod mcts;
pub mod nn;
pub mod serve;
pub mod tournament;
pub mod training;
