//! Training configuration and its flat `key = value` file format.
//!
//! ```text
//! # connect-3 on 4x4, desk scale
//! game = connect4x4k3
//! simulations = 64
//! trunk_channels = 16
//! residual_blocks = 2
//! max_games = 2000
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! errors, so typos do not silently fall back to defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::TrainError;
use crate::game::FEATURE_PLANES;
use crate::mcts::SearchConfig;
use crate::nn::NetworkSpec;
use crate::training::SelfPlayConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub game: String,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Training steps between checkpoints.
    pub checkpoint_interval: u64,
    pub buffer_capacity: usize,
    /// PUCT simulations per move (`M`).
    pub simulations: u32,
    /// Self-play threads. With `synchronous = true` games are still spread
    /// over the rayon pool, but in a fixed order.
    pub workers: usize,
    pub seed: u64,
    /// Alternate fixed rounds of self-play and training in one thread of
    /// control; reproducible for a fixed seed.
    pub synchronous: bool,
    /// Games per self-play round in synchronous mode.
    pub games_per_round: usize,
    /// Stop after this many self-play games (0 = no limit).
    pub max_games: u64,
    /// Stop after this many training steps (0 = no limit).
    pub max_steps: u64,
    /// Share of games played against a pool member rather than dev itself.
    pub pool_game_fraction: f64,
    pub sample_plies: u32,
    pub dirichlet_alpha: f64,
    pub dirichlet_epsilon: f64,
    pub trunk_channels: usize,
    pub residual_blocks: usize,
    pub kernel_size: usize,
    pub value_pool_channels: usize,
    pub value_hidden: usize,
    pub out_dir: PathBuf,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            game: "hex7".into(),
            batch_size: 256,
            learning_rate: 0.01,
            weight_decay: 1e-4,
            checkpoint_interval: 1000,
            buffer_capacity: 100_000,
            simulations: 600,
            workers: 1,
            seed: 0,
            synchronous: true,
            games_per_round: 16,
            max_games: 0,
            max_steps: 0,
            pool_game_fraction: 0.5,
            sample_plies: 8,
            dirichlet_alpha: 0.3,
            dirichlet_epsilon: 0.25,
            trunk_channels: 32,
            residual_blocks: 4,
            kernel_size: 3,
            value_pool_channels: 4,
            value_hidden: 32,
            out_dir: PathBuf::from("run"),
        }
    }
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, TrainError> {
    value.parse().map_err(|_| TrainError::Config {
        line,
        reason: format!("bad value `{value}` for `{key}`"),
    })
}

impl TrainConfig {
    pub fn network_spec(&self, policy_channels: usize) -> NetworkSpec {
        NetworkSpec {
            input_channels: FEATURE_PLANES,
            trunk_channels: self.trunk_channels,
            residual_blocks: self.residual_blocks,
            kernel_size: self.kernel_size,
            policy_channels,
            value_pool_channels: self.value_pool_channels,
            value_hidden: self.value_hidden,
        }
    }

    pub fn self_play(&self) -> SelfPlayConfig {
        SelfPlayConfig {
            search: SearchConfig {
                simulations: self.simulations,
                dirichlet_alpha: self.dirichlet_alpha,
                dirichlet_epsilon: self.dirichlet_epsilon,
                root_noise: true,
                seed: self.seed,
                ..SearchConfig::default()
            },
            sample_plies: self.sample_plies,
            ..SelfPlayConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |reason: String| Err(TrainError::Config { line: 0, reason });
        let positive = [
            ("batch_size", self.batch_size as u64),
            ("checkpoint_interval", self.checkpoint_interval),
            ("buffer_capacity", self.buffer_capacity as u64),
            ("simulations", u64::from(self.simulations)),
            ("games_per_round", self.games_per_round as u64),
        ];
        for (key, v) in positive {
            if v == 0 {
                return bad(format!("`{key}` must be positive"));
            }
        }
        if self.batch_size > self.buffer_capacity {
            return bad("`batch_size` cannot exceed `buffer_capacity`".into());
        }
        if self.learning_rate.is_nan()
            || self.learning_rate <= 0.0
            || self.weight_decay.is_nan()
            || self.weight_decay < 0.0
        {
            return bad("`learning_rate` must be > 0 and `weight_decay` >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.pool_game_fraction) {
            return bad("`pool_game_fraction` must be in [0, 1]".into());
        }
        if self.synchronous && self.max_games == 0 && self.max_steps == 0 {
            return bad("a synchronous run needs `max_games` or `max_steps`".into());
        }
        self.self_play()
            .search
            .validate()
            .map_err(|e| TrainError::Config {
                line: 0,
                reason: e.to_string(),
            })?;
        Ok(())
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), TrainError> {
        self.set_at(0, key, value)
    }

    fn set_at(&mut self, line: usize, key: &str, value: &str) -> Result<(), TrainError> {
        match key {
            "game" => self.game = value.to_string(),
            "batch_size" => self.batch_size = parse(line, key, value)?,
            "learning_rate" => self.learning_rate = parse(line, key, value)?,
            "weight_decay" => self.weight_decay = parse(line, key, value)?,
            "checkpoint_interval" => self.checkpoint_interval = parse(line, key, value)?,
            "buffer_capacity" => self.buffer_capacity = parse(line, key, value)?,
            "simulations" => self.simulations = parse(line, key, value)?,
            "workers" => self.workers = parse(line, key, value)?,
            "seed" => self.seed = parse(line, key, value)?,
            "synchronous" => self.synchronous = parse(line, key, value)?,
            "games_per_round" => self.games_per_round = parse(line, key, value)?,
            "max_games" => self.max_games = parse(line, key, value)?,
            "max_steps" => self.max_steps = parse(line, key, value)?,
            "pool_game_fraction" => self.pool_game_fraction = parse(line, key, value)?,
            "sample_plies" => self.sample_plies = parse(line, key, value)?,
            "dirichlet_alpha" => self.dirichlet_alpha = parse(line, key, value)?,
            "dirichlet_epsilon" => self.dirichlet_epsilon = parse(line, key, value)?,
            "trunk_channels" => self.trunk_channels = parse(line, key, value)?,
            "residual_blocks" => self.residual_blocks = parse(line, key, value)?,
            "kernel_size" => self.kernel_size = parse(line, key, value)?,
            "value_pool_channels" => self.value_pool_channels = parse(line, key, value)?,
            "value_hidden" => self.value_hidden = parse(line, key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => {
                return Err(TrainError::Config {
                    line,
                    reason: format!("unknown key `{key}`"),
                })
            }
        }
        Ok(())
    }

    /// Applies the settings of a config text on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), TrainError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| TrainError::Config {
                line: n + 1,
                reason: "expected `key = value`".into(),
            })?;
            self.set_at(n + 1, key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, TrainError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("string write");
        kv("game", self.game.clone());
        kv("batch_size", self.batch_size.to_string());
        kv("learning_rate", self.learning_rate.to_string());
        kv("weight_decay", self.weight_decay.to_string());
        kv("checkpoint_interval", self.checkpoint_interval.to_string());
        kv("buffer_capacity", self.buffer_capacity.to_string());
        kv("simulations", self.simulations.to_string());
        kv("workers", self.workers.to_string());
        kv("seed", self.seed.to_string());
        kv("synchronous", self.synchronous.to_string());
        kv("games_per_round", self.games_per_round.to_string());
        kv("max_games", self.max_games.to_string());
        kv("max_steps", self.max_steps.to_string());
        kv("pool_game_fraction", self.pool_game_fraction.to_string());
        kv("sample_plies", self.sample_plies.to_string());
        kv("dirichlet_alpha", self.dirichlet_alpha.to_string());
        kv("dirichlet_epsilon", self.dirichlet_epsilon.to_string());
        kv("trunk_channels", self.trunk_channels.to_string());
        kv("residual_blocks", self.residual_blocks.to_string());
        kv("kernel_size", self.kernel_size.to_string());
        kv("value_pool_channels", self.value_pool_channels.to_string());
        kv("value_hidden", self.value_hidden.to_string());
        kv("out_dir", self.out_dir.display().to_string());
        out
    }
}
