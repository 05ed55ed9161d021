//! Head-to-head evaluation between two agents.

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::game::{Game, GameStatus, HistoryEntry, Player};
use crate::mcts::{
    run_search, Evaluator, NetworkEvaluator, SearchConfig, SearchError, UniformEvaluator,
};
use crate::nn::Network;

/// Something that picks a move in a decision state.
pub trait Agent<G: Game>: Send + Sync {
    fn name(&self) -> String;

    fn choose(
        &self,
        game: &G,
        state: &G::State,
        rng: &mut dyn rand::RngCore,
    ) -> Result<usize, SearchError>;
}

/// Uniformly random legal moves.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomAgent;

impl<G: Game> Agent<G> for RandomAgent {
    fn name(&self) -> String {
        "random".into()
    }

    fn choose(
        &self,
        game: &G,
        state: &G::State,
        rng: &mut dyn rand::RngCore,
    ) -> Result<usize, SearchError> {
        let legal = game.legal_actions(state)?;
        legal.choose(rng).copied().ok_or(SearchError::EmptyMask)
    }
}

/// Tree search with a fixed evaluator. Moves before `sample_plies` are drawn
/// from the visit distribution, later ones are the most visited action.
pub struct MctsAgent<G: Game> {
    name: String,
    evaluator: Box<dyn Evaluator<G>>,
    pub config: SearchConfig,
    pub sample_plies: u32,
}

impl<G: Game> MctsAgent<G> {
    pub fn new(
        name: impl Into<String>,
        evaluator: Box<dyn Evaluator<G>>,
        config: SearchConfig,
    ) -> Self {
        Self {
            name: name.into(),
            evaluator,
            config,
            sample_plies: 0,
        }
    }

    /// PUCT guided by a network, without root noise.
    pub fn network(name: impl Into<String>, net: Arc<Network<f32>>, simulations: u32) -> Self {
        Self::new(
            name,
            Box::new(NetworkEvaluator::new(net)),
            SearchConfig::puct(simulations),
        )
    }

    /// Plain UCT with random rollouts.
    pub fn uct(simulations: u32, exploration: f64) -> Self {
        Self::new(
            format!("uct{simulations}"),
            Box::new(UniformEvaluator),
            SearchConfig::uct(simulations, exploration),
        )
    }

    pub fn with_sample_plies(mut self, plies: u32) -> Self {
        self.sample_plies = plies;
        self
    }
}

impl<G: Game> Agent<G> for MctsAgent<G> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn choose(
        &self,
        game: &G,
        state: &G::State,
        rng: &mut dyn rand::RngCore,
    ) -> Result<usize, SearchError> {
        let result = run_search(game, state, self.evaluator.as_ref(), &self.config, rng)?;
        Ok(result.pick(game.ply(state), self.sample_plies, rng))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArenaConfig {
    pub games: u32,
    pub seed: u64,
    /// Games longer than `move_cap_factor × cells` decisions count as draws.
    pub move_cap_factor: u32,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        Self {
            games: 100,
            seed: 0,
            move_cap_factor: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArenaGame {
    pub a_first: bool,
    pub status: GameStatus,
    pub history: Vec<HistoryEntry>,
}

impl ArenaGame {
    pub fn a_score(&self) -> f64 {
        let a = if self.a_first {
            Player::First
        } else {
            Player::Second
        };
        match self.status {
            GameStatus::Win(p) if p == a => 1.0,
            GameStatus::Win(_) => 0.0,
            _ => 0.5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ArenaReport {
    pub a_wins: u32,
    pub draws: u32,
    pub b_wins: u32,
    pub games: Vec<ArenaGame>,
}

impl ArenaReport {
    pub fn played(&self) -> u32 {
        self.a_wins + self.draws + self.b_wins
    }

    /// A's mean score, draws counting one half.
    pub fn a_score(&self) -> Option<f64> {
        let n = self.played();
        (n > 0).then(|| (f64::from(self.a_wins) + 0.5 * f64::from(self.draws)) / f64::from(n))
    }

    /// Logistic rating difference implied by A's score. Perfect scores are
    /// pulled in by half a game so the estimate stays finite.
    pub fn elo_delta(&self) -> Option<f64> {
        let n = f64::from(self.played());
        let s = self.a_score()?.clamp(0.5 / n, 1.0 - 0.5 / n);
        Some(400.0 * (s / (1.0 - s)).log10())
    }
}

fn pair_seed(seed: u64, pair: u64) -> u64 {
    seed ^ pair.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Plays one game, A taking the first seat when `a_first`.
pub fn play_one<G: Game>(
    game: &G,
    a: &dyn Agent<G>,
    b: &dyn Agent<G>,
    a_first: bool,
    move_cap_factor: u32,
    rng: &mut dyn rand::RngCore,
) -> Result<ArenaGame, SearchError> {
    let space = game.action_space();
    let cap = move_cap_factor as usize * game.cell_count();
    let mut state = game.initial_state();
    let mut history = Vec::new();
    let mut decisions = 0;
    loop {
        let status = game.status(&state);
        if status.is_terminal() {
            return Ok(ArenaGame {
                a_first,
                status,
                history,
            });
        }
        if game.is_chance(&state) {
            let outcomes = game.chance_outcomes(&state)?;
            let mut u: f64 = rng.random();
            let mut pick = outcomes.len() - 1;
            for (i, o) in outcomes.iter().enumerate() {
                if u < o.probability {
                    pick = i;
                    break;
                }
                u -= o.probability;
            }
            history.push(HistoryEntry::Roll(pick));
            state = outcomes.into_iter().nth(pick).expect("outcome index").state;
            continue;
        }
        if decisions >= cap {
            return Ok(ArenaGame {
                a_first,
                status: GameStatus::Draw,
                history,
            });
        }
        let first_to_move = game.player_to_move(&state) == Player::First;
        let agent = if first_to_move == a_first { a } else { b };
        let action = agent.choose(game, &state, rng)?;
        history.push(HistoryEntry::Action(
            space.action(action).expect("action in space"),
        ));
        state = game.apply(&state, action)?;
        decisions += 1;
    }
}

/// Plays `config.games` games, alternating seats. Games `2j` and `2j + 1`
/// share a seed, so swapping the agents replays a pair move for move.
pub fn play_match<G: Game>(
    game: &G,
    a: &dyn Agent<G>,
    b: &dyn Agent<G>,
    config: &ArenaConfig,
) -> Result<ArenaReport, SearchError> {
    let games: Vec<ArenaGame> = (0..config.games)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(pair_seed(config.seed, u64::from(i / 2)));
            play_one(game, a, b, i % 2 == 0, config.move_cap_factor, &mut rng)
        })
        .collect::<Result<_, _>>()?;
    let mut report = ArenaReport::default();
    for g in &games {
        match g.a_score() {
            1.0 => report.a_wins += 1,
            0.0 => report.b_wins += 1,
            _ => report.draws += 1,
        }
    }
    report.games = games;
    Ok(report)
}
