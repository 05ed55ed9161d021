use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{format_history, Action, Game, GameError, GameStatus, HistoryEntry, Player};
use crate::games::{AnyGame, AnyState, CATALOG};
use crate::mcts::{run_search, NetworkEvaluator, SearchConfig};
use crate::nn::{Checkpoint, Network};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("unknown game `{0}`")]
    UnknownGame(String),
    #[error("invalid board size: {0}")]
    InvalidSize(String),
    #[error("checkpoint does not fit this game: {0}")]
    Incompatible(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("no match with id `{0}`")]
    NotFound(String),
    #[error("it is not your turn")]
    NotYourTurn,
    #[error("illegal move: {0}")]
    Illegal(String),
    #[error("the match is over")]
    Finished,
    #[error("a different move was already played at ply {0}")]
    Conflict(usize),
    #[error("engine failure: {0}")]
    Engine(String),
}

impl MatchError {
    /// Stable machine-readable name.
    pub fn code(&self) -> &'static str {
        match self {
            MatchError::UnknownGame(_) => "unknown_game",
            MatchError::InvalidSize(_) => "invalid_size",
            MatchError::Incompatible(_) => "incompatible_checkpoint",
            MatchError::BadRequest(_) => "bad_request",
            MatchError::NotFound(_) => "not_found",
            MatchError::NotYourTurn => "not_your_turn",
            MatchError::Illegal(_) => "illegal_move",
            MatchError::Finished => "match_finished",
            MatchError::Conflict(_) => "conflict",
            MatchError::Engine(_) => "engine_failure",
        }
    }
}

/// The network that plays every match, plus its defaults.
#[derive(Clone, Debug)]
pub struct Engine {
    pub game_id: String,
    pub net: Arc<Network<f32>>,
    pub simulations: u32,
}

impl Engine {
    pub fn from_checkpoint(ckpt: Checkpoint, simulations: u32) -> Result<Self, MatchError> {
        AnyGame::from_id(&ckpt.game_id)
            .map_err(|_| MatchError::UnknownGame(ckpt.game_id.clone()))?;
        Ok(Self {
            game_id: ckpt.game_id,
            net: Arc::new(ckpt.network),
            simulations,
        })
    }

    fn family(&self) -> &'static str {
        AnyGame::from_id(&self.game_id)
            .expect("validated id")
            .family()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionJson {
    pub channel: usize,
    pub r: usize,
    pub c: usize,
}

impl From<Action> for ActionJson {
    fn from(a: Action) -> Self {
        Self {
            channel: a.channel,
            r: a.row,
            c: a.col,
        }
    }
}

impl From<ActionJson> for Action {
    fn from(a: ActionJson) -> Self {
        Action {
            channel: a.channel,
            row: a.r,
            col: a.c,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct CreateMatch {
    /// Registry id; defaults to the checkpoint's game.
    pub game: Option<String>,
    /// Board size override (N for Hex, base for Havannah, side for Connect-K).
    pub size: Option<usize>,
    pub simulations: Option<u32>,
    /// `"first"` or `"second"`; defaults to first.
    pub human: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct SubmitMove {
    /// Move number the client believes it is playing; makes resubmission safe.
    pub ply: Option<usize>,
    pub action: ActionJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CellJson {
    pub r: usize,
    pub c: usize,
    pub owner: Option<&'static str>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VisitJson {
    pub channel: usize,
    pub r: usize,
    pub c: usize,
    pub visits: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "error")]
pub enum EngineState {
    Idle,
    Thinking,
    Failed(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct GameInfo {
    pub id: String,
    pub family: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub cells: usize,
    pub action_channels: usize,
}

impl GameInfo {
    fn of(game: &AnyGame) -> Self {
        let (rows, cols) = game.board_dims();
        Self {
            id: game.id(),
            family: game.family(),
            rows,
            cols,
            cells: game.cell_count(),
            action_channels: game.action_space().channels,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MatchView {
    pub id: String,
    pub game: GameInfo,
    pub human: &'static str,
    pub simulations: u32,
    /// Number of history entries so far; the `ply` to send with the next move.
    pub ply: usize,
    pub to_move: Option<&'static str>,
    /// `ongoing`, `draw` or `win`.
    pub status: &'static str,
    pub winner: Option<&'static str>,
    pub engine: EngineState,
    /// Hex only: the color each seat plays, which the pie rule can exchange.
    pub colors: Option<[&'static str; 2]>,
    pub board: Vec<CellJson>,
    /// Legal actions when it is the human's turn, empty otherwise.
    pub legal: Vec<ActionJson>,
    /// The human's last move and the engine's reply.
    pub last_moves: Vec<ActionJson>,
    /// Visit counts of the engine's last search; they sum to `simulations`.
    pub visits: Vec<VisitJson>,
    pub history: String,
}

fn player_name(p: Player) -> &'static str {
    match p {
        Player::First => "first",
        Player::Second => "second",
    }
}

struct Match {
    id: String,
    game: AnyGame,
    state: AnyState,
    human: Player,
    config: SearchConfig,
    seed: u64,
    rng: ChaCha8Rng,
    history: Vec<HistoryEntry>,
    engine: EngineState,
    last_moves: Vec<ActionJson>,
    visits: Vec<VisitJson>,
}

impl Match {
    fn status(&self) -> GameStatus {
        self.game.status(&self.state)
    }

    fn engine_to_move(&self) -> bool {
        !self.status().is_terminal() && self.game.player_to_move(&self.state) != self.human
    }

    fn resolve_chance(&mut self) -> Result<(), GameError> {
        while !self.status().is_terminal() && self.game.is_chance(&self.state) {
            let outcomes = self.game.chance_outcomes(&self.state)?;
            let mut u: f64 = self.rng.random();
            let mut pick = outcomes.len() - 1;
            for (i, o) in outcomes.iter().enumerate() {
                if u < o.probability {
                    pick = i;
                    break;
                }
                u -= o.probability;
            }
            self.history.push(HistoryEntry::Roll(pick));
            self.state = outcomes.into_iter().nth(pick).expect("outcome index").state;
        }
        Ok(())
    }

    fn apply(&mut self, action: usize) -> Result<(), GameError> {
        let a = self
            .game
            .action_space()
            .action(action)
            .expect("action in space");
        self.state = self.game.apply(&self.state, action)?;
        self.history.push(HistoryEntry::Action(a));
        self.last_moves.push(a.into());
        self.resolve_chance()
    }

    fn after_move(&mut self) {
        self.engine = if self.engine_to_move() {
            EngineState::Thinking
        } else {
            EngineState::Idle
        };
    }

    fn history_text(&self) -> String {
        format!(
            "# game {}\n# human {}\n# seed {}\n{}",
            self.game.id(),
            player_name(self.human),
            self.seed,
            format_history(&self.history)
        )
    }

    fn view(&self) -> MatchView {
        let status = self.status();
        let (rows, cols) = self.game.board_dims();
        let mut board = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if self.game.on_board(r, c) {
                    board.push(CellJson {
                        r,
                        c,
                        owner: self.game.owner_at(&self.state, r, c).map(player_name),
                    });
                }
            }
        }
        let chance = self.game.is_chance(&self.state);
        let human_turn = !status.is_terminal()
            && !chance
            && self.engine == EngineState::Idle
            && self.game.player_to_move(&self.state) == self.human;
        let space = self.game.action_space();
        let legal = if human_turn {
            self.game
                .legal_actions(&self.state)
                .unwrap_or_default()
                .into_iter()
                .filter_map(|i| space.action(i).map(ActionJson::from))
                .collect()
        } else {
            Vec::new()
        };
        let colors = match &self.state {
            AnyState::Hex(s) => Some([Player::First, Player::Second].map(
                |p| match s.color_of(p) {
                    crate::games::Color::Black => "black",
                    crate::games::Color::White => "white",
                },
            )),
            _ => None,
        };
        MatchView {
            id: self.id.clone(),
            game: GameInfo::of(&self.game),
            human: player_name(self.human),
            simulations: self.config.simulations,
            ply: self.history.len(),
            to_move: (!status.is_terminal() && !chance)
                .then(|| player_name(self.game.player_to_move(&self.state))),
            status: match status {
                GameStatus::Ongoing => "ongoing",
                GameStatus::Draw => "draw",
                GameStatus::Win(_) => "win",
            },
            winner: match status {
                GameStatus::Win(p) => Some(player_name(p)),
                _ => None,
            },
            engine: self.engine.clone(),
            colors,
            board,
            legal,
            last_moves: self.last_moves.clone(),
            visits: self.visits.clone(),
            history: format_history(&self.history),
        }
    }
}

/// Every live match, each behind its own lock so matches never wait on
/// each other.
pub struct MatchStore {
    engine: Engine,
    matches: Mutex<HashMap<String, Arc<Mutex<Match>>>>,
    ids: Mutex<ChaCha8Rng>,
    dir: Option<PathBuf>,
}

impl MatchStore {
    /// `dir`, when given, receives one move-history file per match.
    pub fn new(engine: Engine, dir: Option<PathBuf>, seed: u64) -> Self {
        Self {
            engine,
            matches: Mutex::new(HashMap::new()),
            ids: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            dir,
        }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn games(&self) -> Vec<GameInfo> {
        let family = self.engine.family();
        let mut ids: Vec<String> = CATALOG.iter().map(|s| s.to_string()).collect();
        if !ids.contains(&self.engine.game_id) {
            ids.insert(0, self.engine.game_id.clone());
        }
        ids.iter()
            .filter_map(|id| AnyGame::from_id(id).ok())
            .filter(|g| g.family() == family)
            .map(|g| GameInfo::of(&g))
            .collect()
    }

    fn lookup(&self, id: &str) -> Result<Arc<Mutex<Match>>, MatchError> {
        self.matches
            .lock()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| MatchError::NotFound(id.to_string()))
    }

    fn persist(&self, m: &Match) {
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{}.txt", m.id));
            if let Err(e) = std::fs::write(&path, m.history_text()) {
                log::warn!("could not save {}: {e}", path.display());
            }
        }
    }

    /// Creates a match. The returned flag is true when the engine moves
    /// next and [`MatchStore::engine_move`] should be scheduled.
    pub fn create(&self, req: &CreateMatch) -> Result<(MatchView, bool), MatchError> {
        let game_id = req
            .game
            .clone()
            .unwrap_or_else(|| self.engine.game_id.clone());
        let mut game = AnyGame::from_id(&game_id).map_err(|e| match e {
            GameError::InvalidSize(s) => MatchError::InvalidSize(s),
            _ => MatchError::UnknownGame(game_id.clone()),
        })?;
        if let Some(size) = req.size {
            game = game
                .resized(size)
                .map_err(|e| MatchError::InvalidSize(e.to_string()))?;
        }
        if game.family() != self.engine.family() {
            return Err(MatchError::Incompatible(format!(
                "checkpoint plays {}, not {}",
                self.engine.game_id,
                game.id()
            )));
        }
        let channels = game.action_space().channels;
        if self.engine.net.spec().policy_channels != channels {
            return Err(MatchError::Incompatible(format!(
                "network has {} policy channels, {} needs {channels}",
                self.engine.net.spec().policy_channels,
                game.id()
            )));
        }
        let human = match req.human.as_deref() {
            None | Some("first") => Player::First,
            Some("second") => Player::Second,
            Some(other) => {
                return Err(MatchError::BadRequest(format!(
                    "human must be first or second, got `{other}`"
                )))
            }
        };
        let simulations = req.simulations.unwrap_or(self.engine.simulations);
        if simulations == 0 {
            return Err(MatchError::BadRequest(
                "simulations must be positive".into(),
            ));
        }
        let (id, default_seed) = {
            let mut ids = self.ids.lock().expect("id lock");
            (format!("{:016x}", ids.random::<u64>()), ids.random::<u64>())
        };
        let seed = req.seed.unwrap_or(default_seed);
        let mut m = Match {
            id: id.clone(),
            state: game.initial_state(),
            game,
            human,
            config: SearchConfig {
                root_noise: false,
                seed,
                ..SearchConfig::puct(simulations)
            },
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            history: Vec::new(),
            engine: EngineState::Idle,
            last_moves: Vec::new(),
            visits: Vec::new(),
        };
        m.resolve_chance()
            .map_err(|e| MatchError::Engine(e.to_string()))?;
        m.after_move();
        let needs_engine = m.engine == EngineState::Thinking;
        self.persist(&m);
        let view = m.view();
        self.matches
            .lock()
            .expect("store lock")
            .insert(id, Arc::new(Mutex::new(m)));
        Ok((view, needs_engine))
    }

    pub fn get(&self, id: &str) -> Result<MatchView, MatchError> {
        Ok(self.lookup(id)?.lock().expect("match lock").view())
    }

    /// Applies a human move. Resubmitting a move already recorded at `ply`
    /// returns the current match unchanged.
    pub fn submit(&self, id: &str, req: &SubmitMove) -> Result<(MatchView, bool), MatchError> {
        let handle = self.lookup(id)?;
        let mut m = handle.lock().expect("match lock");
        let action: Action = req.action.into();
        if let Some(ply) = req.ply {
            if ply < m.history.len() {
                return if m.history[ply] == HistoryEntry::Action(action) {
                    Ok((m.view(), false))
                } else {
                    Err(MatchError::Conflict(ply))
                };
            }
            if ply > m.history.len() {
                return Err(MatchError::Conflict(ply));
            }
        }
        if m.status().is_terminal() {
            return Err(MatchError::Finished);
        }
        if m.engine == EngineState::Thinking || m.game.player_to_move(&m.state) != m.human {
            return Err(MatchError::NotYourTurn);
        }
        let index = m
            .game
            .action_space()
            .index(action)
            .ok_or_else(|| MatchError::Illegal(format!("{action} is outside the board")))?;
        if !m
            .game
            .legal_actions(&m.state)
            .map_err(|e| MatchError::Illegal(e.to_string()))?
            .contains(&index)
        {
            return Err(MatchError::Illegal(format!("{action} is not legal here")));
        }
        m.last_moves.clear();
        m.visits.clear();
        m.apply(index)
            .map_err(|e| MatchError::Illegal(e.to_string()))?;
        m.after_move();
        self.persist(&m);
        let needs_engine = m.engine == EngineState::Thinking;
        Ok((m.view(), needs_engine))
    }

    /// Searches and plays the engine's reply. Blocks for the whole search;
    /// the match lock is released meanwhile, so reads keep being served.
    pub fn engine_move(&self, id: &str) -> Result<MatchView, MatchError> {
        let handle = self.lookup(id)?;
        let (game, state, config, mut rng, at) = {
            let m = handle.lock().expect("match lock");
            if m.engine != EngineState::Thinking || !m.engine_to_move() {
                return Ok(m.view());
            }
            (
                m.game.clone(),
                m.state.clone(),
                m.config.clone(),
                m.rng.clone(),
                m.history.len(),
            )
        };
        let evaluator = NetworkEvaluator::new(Arc::clone(&self.engine.net));
        let searched = run_search(&game, &state, &evaluator, &config, &mut rng);
        let mut m = handle.lock().expect("match lock");
        if m.history.len() != at {
            return Ok(m.view());
        }
        match searched {
            Ok(result) => {
                let space = game.action_space();
                m.visits = result
                    .actions
                    .iter()
                    .zip(&result.visits)
                    .map(|(&a, &visits)| {
                        let a = space.action(a).expect("action in space");
                        VisitJson {
                            channel: a.channel,
                            r: a.row,
                            c: a.col,
                            visits,
                        }
                    })
                    .collect();
                m.rng = rng;
                if let Err(e) = m.apply(result.chosen) {
                    m.engine = EngineState::Failed(e.to_string());
                    return Err(MatchError::Engine(e.to_string()));
                }
                m.after_move();
                self.persist(&m);
                Ok(m.view())
            }
            Err(e) => {
                m.engine = EngineState::Failed(e.to_string());
                Err(MatchError::Engine(e.to_string()))
            }
        }
    }

    /// Runs engine replies until the human is to move or the game ends.
    pub fn settle(&self, id: &str) -> Result<MatchView, MatchError> {
        loop {
            let view = self.engine_move(id)?;
            if view.engine != EngineState::Thinking {
                return Ok(view);
            }
        }
    }
}
