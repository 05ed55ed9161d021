//! Abstract game interface shared by the rules, the search and the trainer.
//!
//! Every action lives at a `(channel, row, col)` position of the policy
//! tensor, so a network's policy head can score actions without any
//! fully connected layer. States are immutable values: `apply` returns a
//! new state and never touches its input.

use std::fmt;

use thiserror::Error;

use crate::nn::Tensor;

/// Number of input feature planes produced by [`Game::encode`].
pub const FEATURE_PLANES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    First,
    Second,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::First => Player::Second,
            Player::Second => Player::First,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Player::First => 0,
            Player::Second => 1,
        }
    }

    /// `+1` for `First`, `-1` for `Second`.
    pub fn sign(self) -> f32 {
        match self {
            Player::First => 1.0,
            Player::Second => -1.0,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::First => f.write_str("first"),
            Player::Second => f.write_str("second"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GameStatus {
    Ongoing,
    Win(Player),
    Draw,
}

impl GameStatus {
    pub fn is_terminal(self) -> bool {
        !matches!(self, GameStatus::Ongoing)
    }
}

/// A decoded action: a position in the `channels × height × width` policy tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Action {
    pub channel: usize,
    pub row: usize,
    pub col: usize,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.channel, self.row, self.col)
    }
}

/// Shape of a game's policy tensor. Flat indices are channel-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActionSpace {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl ActionSpace {
    pub fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    pub fn total(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn index(&self, action: Action) -> Option<usize> {
        if action.channel < self.channels && action.row < self.height && action.col < self.width {
            Some((action.channel * self.height + action.row) * self.width + action.col)
        } else {
            None
        }
    }

    pub fn action(&self, index: usize) -> Option<Action> {
        if index >= self.total() {
            return None;
        }
        let plane = self.height * self.width;
        Some(Action {
            channel: index / plane,
            row: (index % plane) / self.width,
            col: index % self.width,
        })
    }
}

/// One possible resolution of a chance node.
#[derive(Clone, Debug)]
pub struct ChanceOutcome<S> {
    /// Game-specific label of the outcome (the die face for dice games).
    pub label: u32,
    pub probability: f64,
    pub state: S,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("illegal action {action}: {reason}")]
    IllegalAction { action: usize, reason: String },
    #[error("the game is already over")]
    Terminal,
    #[error("the game is not over yet")]
    NotTerminal,
    #[error("operation not defined on a chance node")]
    ChanceNode,
    #[error("operation only defined on a chance node")]
    NotChanceNode,
    #[error("unknown game id `{0}`")]
    UnknownGame(String),
    #[error("invalid board size: {0}")]
    InvalidSize(String),
    #[error("move history line {line}: {reason}")]
    History { line: usize, reason: String },
}

/// Rules of a two-player, perfect-information game (possibly with chance nodes).
pub trait Game: Send + Sync {
    type State: Clone + fmt::Debug + PartialEq + Send + Sync;

    /// Registry id, e.g. `hex11` or `connect4x4k3`.
    fn id(&self) -> String;

    /// Id prefix shared by all sizes of the same game (`hex`, `havannah`, ...).
    fn family(&self) -> &'static str;

    /// `(height, width)` of the board tensor.
    fn board_dims(&self) -> (usize, usize);

    fn action_space(&self) -> ActionSpace;

    fn initial_state(&self) -> Self::State;

    fn player_to_move(&self, state: &Self::State) -> Player;

    fn ply(&self, state: &Self::State) -> u32;

    fn is_chance(&self, _state: &Self::State) -> bool {
        false
    }

    fn status(&self, state: &Self::State) -> GameStatus;

    /// Legal action indices in increasing order. Terminal states yield an
    /// empty list; chance nodes are an error.
    fn legal_actions(&self, state: &Self::State) -> Result<Vec<usize>, GameError>;

    fn apply(&self, state: &Self::State, action: usize) -> Result<Self::State, GameError>;

    fn chance_outcomes(
        &self,
        _state: &Self::State,
    ) -> Result<Vec<ChanceOutcome<Self::State>>, GameError> {
        Err(GameError::NotChanceNode)
    }

    /// Owner of the stone/piece on a cell, in player terms.
    fn owner_at(&self, state: &Self::State, row: usize, col: usize) -> Option<Player>;

    /// Cells outside a non-rectangular board (Havannah) report `false`.
    fn on_board(&self, _row: usize, _col: usize) -> bool {
        true
    }

    /// Number of playable cells.
    fn cell_count(&self) -> usize {
        let (h, w) = self.board_dims();
        (0..h)
            .flat_map(|r| (0..w).map(move |c| (r, c)))
            .filter(|&(r, c)| self.on_board(r, c))
            .count()
    }

    /// Maps a board cell into the mover-canonical frame used by the network.
    /// Must be a bijection on the board rectangle.
    fn canonical_cell(&self, _state: &Self::State, row: usize, col: usize) -> (usize, usize) {
        (row, col)
    }

    /// Feature planes from the mover's perspective: mover stones, opponent
    /// stones, and a plane of ones over the playable cells.
    fn encode(&self, state: &Self::State) -> Result<Tensor<f32>, GameError> {
        if self.is_chance(state) {
            return Err(GameError::ChanceNode);
        }
        let (h, w) = self.board_dims();
        let mover = self.player_to_move(state);
        let mut t = Tensor::zeros(&[FEATURE_PLANES, h, w]);
        let plane = h * w;
        let data = t.data_mut();
        for r in 0..h {
            for c in 0..w {
                if !self.on_board(r, c) {
                    continue;
                }
                let (cr, cc) = self.canonical_cell(state, r, c);
                let at = cr * w + cc;
                match self.owner_at(state, r, c) {
                    Some(p) if p == mover => data[at] = 1.0,
                    Some(_) => data[plane + at] = 1.0,
                    None => {}
                }
                data[2 * plane + at] = 1.0;
            }
        }
        Ok(t)
    }

    /// Index of `action` inside the canonical-frame policy tensor.
    fn policy_index(&self, state: &Self::State, action: usize) -> usize {
        let space = self.action_space();
        let a = space
            .action(action)
            .expect("action inside the action space");
        let (row, col) = self.canonical_cell(state, a.row, a.col);
        space
            .index(Action {
                channel: a.channel,
                row,
                col,
            })
            .expect("canonical cell inside the action space")
    }

    /// Final reward for `perspective`: `+1` win, `-1` loss, `0` draw.
    fn outcome(&self, state: &Self::State, perspective: Player) -> Result<f32, GameError> {
        match self.status(state) {
            GameStatus::Ongoing => Err(GameError::NotTerminal),
            GameStatus::Draw => Ok(0.0),
            GameStatus::Win(p) if p == perspective => Ok(1.0),
            GameStatus::Win(_) => Ok(-1.0),
        }
    }

    /// Legal-action mask laid out like the policy tensor in the canonical frame.
    fn legal_mask(&self, state: &Self::State) -> Result<Vec<bool>, GameError> {
        let mut mask = vec![false; self.action_space().total()];
        for a in self.legal_actions(state)? {
            mask[self.policy_index(state, a)] = true;
        }
        Ok(mask)
    }
}

/// One entry of a recorded game: a player action or a chance outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HistoryEntry {
    Action(Action),
    /// Position of the chosen outcome in `chance_outcomes`.
    Roll(usize),
}

/// Renders a move history, one entry per line (`channel,row,col` or `roll,i`).
pub fn format_history(entries: &[HistoryEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        match e {
            HistoryEntry::Action(a) => out.push_str(&a.to_string()),
            HistoryEntry::Roll(i) => out.push_str(&format!("roll,{i}")),
        }
        out.push('\n');
    }
    out
}

pub fn parse_history(text: &str) -> Result<Vec<HistoryEntry>, GameError> {
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: &str| GameError::History {
            line: n + 1,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match fields.as_slice() {
            ["roll", i] => {
                let i = i.parse().map_err(|_| err("bad roll index"))?;
                entries.push(HistoryEntry::Roll(i));
            }
            [ch, r, c] => {
                let parse = |s: &str| s.parse::<usize>().map_err(|_| err("expected an integer"));
                entries.push(HistoryEntry::Action(Action {
                    channel: parse(ch)?,
                    row: parse(r)?,
                    col: parse(c)?,
                }));
            }
            _ => return Err(err("expected `channel,row,col` or `roll,i`")),
        }
    }
    Ok(entries)
}

/// Replays a history from the initial state.
pub fn replay<G: Game>(game: &G, entries: &[HistoryEntry]) -> Result<G::State, GameError> {
    let space = game.action_space();
    let mut state = game.initial_state();
    for (n, e) in entries.iter().enumerate() {
        state = match *e {
            HistoryEntry::Action(a) => {
                let idx = space.index(a).ok_or_else(|| GameError::History {
                    line: n + 1,
                    reason: format!("action {a} outside the action space"),
                })?;
                game.apply(&state, idx)?
            }
            HistoryEntry::Roll(i) => {
                let mut outcomes = game.chance_outcomes(&state)?;
                if i >= outcomes.len() {
                    return Err(GameError::History {
                        line: n + 1,
                        reason: format!("roll index {i} out of range"),
                    });
                }
                outcomes.swap_remove(i).state
            }
        };
    }
    Ok(state)
}
