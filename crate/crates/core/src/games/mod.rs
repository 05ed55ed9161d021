//! Concrete games and a registry that selects one by id at run time.
//!
//! | id                    | game                                  |
//! |-----------------------|---------------------------------------|
//! | `hex{N}`              | Hex on an N×N rhombus, pie rule       |
//! | `havannah{S}`         | Havannah with base S, pie rule        |
//! | `connect{W}x{H}k{K}`  | Connect-K with gravity                |
//! | `ewn`                 | EinStein würfelt nicht! (5×5, dice)   |

pub mod connect;
pub mod ewn;
pub mod havannah;
pub mod hex;
mod union_find;

use crate::game::{ActionSpace, ChanceOutcome, Game, GameError, GameStatus, Player};
use crate::nn::Tensor;

pub use connect::{ConnectK, ConnectState};
pub use ewn::{Ewn, EwnState};
pub use havannah::{Havannah, HavannahState, WinKind};
pub use hex::{Hex, HexState};

/// Stone colour in the connection games. Black moves first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Color {
    Black,
    White,
}

impl Color {
    pub fn opponent(self) -> Color {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }
}

/// Colour played by `player`; the pie rule swap exchanges the colours.
pub fn color_of(player: Player, swapped: bool) -> Color {
    match (player, swapped) {
        (Player::First, false) | (Player::Second, true) => Color::Black,
        _ => Color::White,
    }
}

pub fn player_of(color: Color, swapped: bool) -> Player {
    match (color, swapped) {
        (Color::Black, false) | (Color::White, true) => Player::First,
        _ => Player::Second,
    }
}

/// The six hexagonal neighbours of `(row, col)` that fall inside an
/// `h×w` rectangle: the four orthogonal cells plus `(r−1, c+1)` and
/// `(r+1, c−1)`.
pub fn hex_neighbors(
    row: usize,
    col: usize,
    h: usize,
    w: usize,
) -> impl Iterator<Item = (usize, usize)> {
    const OFFSETS: [(isize, isize); 6] = [(-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0)];
    OFFSETS.into_iter().filter_map(move |(dr, dc)| {
        let r = row as isize + dr;
        let c = col as isize + dc;
        (r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w)
            .then_some((r as usize, c as usize))
    })
}

/// Any registered game.
#[derive(Clone, Debug)]
pub enum AnyGame {
    Hex(Hex),
    Havannah(Havannah),
    Connect(ConnectK),
    Ewn(Ewn),
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnyState {
    Hex(HexState),
    Havannah(HavannahState),
    Connect(ConnectState),
    Ewn(EwnState),
}

/// Ids offered by default in listings such as the HTTP game catalogue.
pub const CATALOG: &[&str] = &[
    "hex5",
    "hex7",
    "hex9",
    "hex11",
    "hex13",
    "havannah4",
    "havannah5",
    "havannah8",
    "connect4x4k3",
    "connect7x6k4",
    "ewn",
];

fn parse_num(text: &str, id: &str) -> Result<usize, GameError> {
    text.parse()
        .map_err(|_| GameError::UnknownGame(id.to_string()))
}

impl AnyGame {
    /// Builds a game from its registry id.
    pub fn from_id(id: &str) -> Result<AnyGame, GameError> {
        let unknown = || GameError::UnknownGame(id.to_string());
        if id == "ewn" {
            Ok(AnyGame::Ewn(Ewn::new()))
        } else if let Some(rest) = id.strip_prefix("havannah") {
            Ok(AnyGame::Havannah(Havannah::new(parse_num(rest, id)?)?))
        } else if let Some(rest) = id.strip_prefix("hex") {
            Ok(AnyGame::Hex(Hex::new(parse_num(rest, id)?)?))
        } else if let Some(rest) = id.strip_prefix("connect") {
            let (w, rest) = rest.split_once('x').ok_or_else(unknown)?;
            let (h, k) = rest.split_once('k').ok_or_else(unknown)?;
            Ok(AnyGame::Connect(ConnectK::new(
                parse_num(w, id)?,
                parse_num(h, id)?,
                parse_num(k, id)?,
            )?))
        } else {
            Err(unknown())
        }
    }

    /// The same game on another board size (`size` is N for Hex, the base
    /// for Havannah and the width and height for Connect-K).
    pub fn resized(&self, size: usize) -> Result<AnyGame, GameError> {
        match self {
            AnyGame::Hex(_) => Ok(AnyGame::Hex(Hex::new(size)?)),
            AnyGame::Havannah(_) => Ok(AnyGame::Havannah(Havannah::new(size)?)),
            AnyGame::Connect(g) => Ok(AnyGame::Connect(ConnectK::new(size, size, g.k())?)),
            AnyGame::Ewn(_) => Err(GameError::InvalidSize("ewn has a fixed 5x5 board".into())),
        }
    }
}

macro_rules! dispatch {
    ($game:expr, $state:expr, |$g:ident, $s:ident| $body:expr) => {
        match ($game, $state) {
            (AnyGame::Hex($g), AnyState::Hex($s)) => $body,
            (AnyGame::Havannah($g), AnyState::Havannah($s)) => $body,
            (AnyGame::Connect($g), AnyState::Connect($s)) => $body,
            (AnyGame::Ewn($g), AnyState::Ewn($s)) => $body,
            _ => panic!("state does not belong to this game"),
        }
    };
}

macro_rules! dispatch_game {
    ($game:expr, |$g:ident| $body:expr) => {
        match $game {
            AnyGame::Hex($g) => $body,
            AnyGame::Havannah($g) => $body,
            AnyGame::Connect($g) => $body,
            AnyGame::Ewn($g) => $body,
        }
    };
}

fn wrap_outcomes<S>(
    outcomes: Vec<ChanceOutcome<S>>,
    wrap: impl Fn(S) -> AnyState,
) -> Vec<ChanceOutcome<AnyState>> {
    outcomes
        .into_iter()
        .map(|o| ChanceOutcome {
            label: o.label,
            probability: o.probability,
            state: wrap(o.state),
        })
        .collect()
}

impl Game for AnyGame {
    type State = AnyState;

    fn id(&self) -> String {
        dispatch_game!(self, |g| g.id())
    }

    fn family(&self) -> &'static str {
        dispatch_game!(self, |g| g.family())
    }

    fn board_dims(&self) -> (usize, usize) {
        dispatch_game!(self, |g| g.board_dims())
    }

    fn action_space(&self) -> ActionSpace {
        dispatch_game!(self, |g| g.action_space())
    }

    fn initial_state(&self) -> AnyState {
        match self {
            AnyGame::Hex(g) => AnyState::Hex(g.initial_state()),
            AnyGame::Havannah(g) => AnyState::Havannah(g.initial_state()),
            AnyGame::Connect(g) => AnyState::Connect(g.initial_state()),
            AnyGame::Ewn(g) => AnyState::Ewn(g.initial_state()),
        }
    }

    fn player_to_move(&self, state: &AnyState) -> Player {
        dispatch!(self, state, |g, s| g.player_to_move(s))
    }

    fn ply(&self, state: &AnyState) -> u32 {
        dispatch!(self, state, |g, s| g.ply(s))
    }

    fn is_chance(&self, state: &AnyState) -> bool {
        dispatch!(self, state, |g, s| g.is_chance(s))
    }

    fn status(&self, state: &AnyState) -> GameStatus {
        dispatch!(self, state, |g, s| g.status(s))
    }

    fn legal_actions(&self, state: &AnyState) -> Result<Vec<usize>, GameError> {
        dispatch!(self, state, |g, s| g.legal_actions(s))
    }

    fn apply(&self, state: &AnyState, action: usize) -> Result<AnyState, GameError> {
        match (self, state) {
            (AnyGame::Hex(g), AnyState::Hex(s)) => g.apply(s, action).map(AnyState::Hex),
            (AnyGame::Havannah(g), AnyState::Havannah(s)) => {
                g.apply(s, action).map(AnyState::Havannah)
            }
            (AnyGame::Connect(g), AnyState::Connect(s)) => {
                g.apply(s, action).map(AnyState::Connect)
            }
            (AnyGame::Ewn(g), AnyState::Ewn(s)) => g.apply(s, action).map(AnyState::Ewn),
            _ => panic!("state does not belong to this game"),
        }
    }

    fn chance_outcomes(&self, state: &AnyState) -> Result<Vec<ChanceOutcome<AnyState>>, GameError> {
        match (self, state) {
            (AnyGame::Hex(g), AnyState::Hex(s)) => {
                Ok(wrap_outcomes(g.chance_outcomes(s)?, AnyState::Hex))
            }
            (AnyGame::Havannah(g), AnyState::Havannah(s)) => {
                Ok(wrap_outcomes(g.chance_outcomes(s)?, AnyState::Havannah))
            }
            (AnyGame::Connect(g), AnyState::Connect(s)) => {
                Ok(wrap_outcomes(g.chance_outcomes(s)?, AnyState::Connect))
            }
            (AnyGame::Ewn(g), AnyState::Ewn(s)) => {
                Ok(wrap_outcomes(g.chance_outcomes(s)?, AnyState::Ewn))
            }
            _ => panic!("state does not belong to this game"),
        }
    }

    fn owner_at(&self, state: &AnyState, row: usize, col: usize) -> Option<Player> {
        dispatch!(self, state, |g, s| g.owner_at(s, row, col))
    }

    fn on_board(&self, row: usize, col: usize) -> bool {
        dispatch_game!(self, |g| g.on_board(row, col))
    }

    fn cell_count(&self) -> usize {
        dispatch_game!(self, |g| g.cell_count())
    }

    fn canonical_cell(&self, state: &AnyState, row: usize, col: usize) -> (usize, usize) {
        dispatch!(self, state, |g, s| g.canonical_cell(s, row, col))
    }

    fn encode(&self, state: &AnyState) -> Result<Tensor<f32>, GameError> {
        dispatch!(self, state, |g, s| g.encode(s))
    }

    fn policy_index(&self, state: &AnyState, action: usize) -> usize {
        dispatch!(self, state, |g, s| g.policy_index(s, action))
    }

    fn outcome(&self, state: &AnyState, perspective: Player) -> Result<f32, GameError> {
        dispatch!(self, state, |g, s| g.outcome(s, perspective))
    }

    fn legal_mask(&self, state: &AnyState) -> Result<Vec<bool>, GameError> {
        dispatch!(self, state, |g, s| g.legal_mask(s))
    }
}
