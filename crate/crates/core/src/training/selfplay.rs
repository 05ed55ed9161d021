use rand::Rng;

use super::buffer::Sample;
use crate::game::{Game, GameStatus, Player};
use crate::mcts::{run_search, Evaluator, SearchConfig, SearchError};

#[derive(Clone, Debug, PartialEq)]
pub struct SelfPlayConfig {
    pub search: SearchConfig,
    /// Moves are sampled from the visit counts before this ply, greedy after.
    pub sample_plies: u32,
    /// A game longer than `move_cap_factor × cells` decision moves is abandoned.
    pub move_cap_factor: u32,
}

impl Default for SelfPlayConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig {
                root_noise: true,
                ..SearchConfig::default()
            },
            sample_plies: 8,
            move_cap_factor: 10,
        }
    }
}

/// Whose positions become training samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recorded {
    Both,
    Only(Player),
}

impl Recorded {
    fn includes(self, p: Player) -> bool {
        match self {
            Recorded::Both => true,
            Recorded::Only(q) => p == q,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GameRecord {
    /// Empty when the game was abandoned.
    pub samples: Vec<Sample>,
    pub status: GameStatus,
    /// Decision moves played.
    pub moves: u32,
    pub abandoned: bool,
}

/// Plays one game with `players[0]` moving for First and `players[1]` for
/// Second. Each decision runs a search with the mover's evaluator; chance
/// nodes are resolved with `rng`. Rewards are backfilled from each
/// recorded mover's perspective once the game ends.
pub fn play_game<G, R>(
    game: &G,
    players: [&dyn Evaluator<G>; 2],
    record: Recorded,
    config: &SelfPlayConfig,
    rng: &mut R,
) -> Result<GameRecord, SearchError>
where
    G: Game,
    R: Rng + ?Sized,
{
    let cap = config.move_cap_factor as usize * game.cell_count();
    let mut state = game.initial_state();
    let mut pending: Vec<(Sample, Player)> = Vec::new();
    let mut moves = 0u32;
    loop {
        let status = game.status(&state);
        if status.is_terminal() {
            let samples = pending
                .into_iter()
                .map(|(mut s, mover)| {
                    s.reward = game.outcome(&state, mover).expect("terminal state");
                    s
                })
                .collect();
            return Ok(GameRecord {
                samples,
                status,
                moves,
                abandoned: false,
            });
        }
        if game.is_chance(&state) {
            let mut outcomes = game.chance_outcomes(&state)?;
            let mut u: f64 = rng.random();
            let mut pick = outcomes.len() - 1;
            for (i, o) in outcomes.iter().enumerate() {
                if u < o.probability {
                    pick = i;
                    break;
                }
                u -= o.probability;
            }
            state = outcomes.swap_remove(pick).state;
            continue;
        }
        if moves as usize >= cap {
            return Ok(GameRecord {
                samples: Vec::new(),
                status: GameStatus::Ongoing,
                moves,
                abandoned: true,
            });
        }
        let mover = game.player_to_move(&state);
        let result = run_search(game, &state, players[mover.index()], &config.search, rng)?;
        if record.includes(mover) {
            pending.push((
                Sample {
                    input: game.encode(&state)?,
                    policy: result.policy_target(game, &state),
                    mask: game.legal_mask(&state)?,
                    reward: 0.0,
                },
                mover,
            ));
        }
        let action = result.pick(moves, config.sample_plies, rng);
        state = game.apply(&state, action)?;
        moves += 1;
    }
}

/// One game of a model against itself; every position is recorded.
pub fn self_play_game<G, R>(
    game: &G,
    model: &dyn Evaluator<G>,
    config: &SelfPlayConfig,
    rng: &mut R,
) -> Result<GameRecord, SearchError>
where
    G: Game,
    R: Rng + ?Sized,
{
    play_game(game, [model, model], Recorded::Both, config, rng)
}
