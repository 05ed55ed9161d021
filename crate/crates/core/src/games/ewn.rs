//! EinStein würfelt nicht! on a 5×5 board.
//!
//! Each player owns six pieces numbered 1 to 6, set up in their home
//! corner triangle. Before every move a die is rolled: the mover must move
//! the piece with that number or, if it was captured, the nearest surviving
//! piece above or below it. First moves right, down or diagonally
//! down-right; Second moves the opposite way. Landing on any piece, own or
//! enemy, captures it. A player wins by reaching the opposite corner or by
//! capturing every enemy piece.
//!
//! The die roll is a chance node that belongs to the player about to move.
//! Action `(channel, row, col)` moves the piece standing on `(row, col)` in
//! direction `channel` (0 horizontal, 1 vertical, 2 diagonal).

use crate::game::{ActionSpace, ChanceOutcome, Game, GameError, GameStatus, Player};

pub const EWN_SIZE: usize = 5;
const CELLS: usize = EWN_SIZE * EWN_SIZE;

/// Home triangle of First as `(row, col, number)`. Second uses the same
/// layout rotated by 180 degrees.
const SETUP: [(usize, usize, u8); 6] = [
    (0, 0, 1),
    (0, 1, 2),
    (0, 2, 3),
    (1, 0, 4),
    (1, 1, 5),
    (2, 0, 6),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Piece {
    pub owner: Player,
    pub number: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EwnState {
    cells: [Option<Piece>; CELLS],
    to_move: Player,
    ply: u32,
    die: Option<u8>,
    status: GameStatus,
}

impl EwnState {
    pub fn piece_at(&self, row: usize, col: usize) -> Option<Piece> {
        self.cells[row * EWN_SIZE + col]
    }

    /// The die value the mover must honour, `None` before the roll.
    pub fn die(&self) -> Option<u8> {
        self.die
    }

    fn find(&self, owner: Player, number: u8) -> Option<usize> {
        self.cells
            .iter()
            .position(|p| *p == Some(Piece { owner, number }))
    }

    /// Cells holding the pieces allowed to move for a given roll.
    pub fn movable(&self, owner: Player, roll: u8) -> Vec<usize> {
        if let Some(at) = self.find(owner, roll) {
            return vec![at];
        }
        let below = (1..roll).rev().find_map(|n| self.find(owner, n));
        let above = (roll + 1..=6).find_map(|n| self.find(owner, n));
        let mut cells: Vec<usize> = below.into_iter().chain(above).collect();
        cells.sort_unstable();
        cells
    }

    fn count(&self, owner: Player) -> usize {
        self.cells
            .iter()
            .filter(|p| p.map(|p| p.owner) == Some(owner))
            .count()
    }
}

fn directions(player: Player) -> [(isize, isize); 3] {
    match player {
        Player::First => [(0, 1), (1, 0), (1, 1)],
        Player::Second => [(0, -1), (-1, 0), (-1, -1)],
    }
}

fn target_corner(player: Player) -> usize {
    match player {
        Player::First => CELLS - 1,
        Player::Second => 0,
    }
}

fn step(from: usize, (dr, dc): (isize, isize)) -> Option<usize> {
    let r = (from / EWN_SIZE) as isize + dr;
    let c = (from % EWN_SIZE) as isize + dc;
    let range = 0..EWN_SIZE as isize;
    (range.contains(&r) && range.contains(&c)).then(|| r as usize * EWN_SIZE + c as usize)
}

#[derive(Clone, Debug, Default)]
pub struct Ewn;

impl Ewn {
    pub fn new() -> Self {
        Ewn
    }
}

impl Game for Ewn {
    type State = EwnState;

    fn id(&self) -> String {
        "ewn".to_string()
    }

    fn family(&self) -> &'static str {
        "ewn"
    }

    fn board_dims(&self) -> (usize, usize) {
        (EWN_SIZE, EWN_SIZE)
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::new(3, EWN_SIZE, EWN_SIZE)
    }

    fn initial_state(&self) -> EwnState {
        let mut cells = [None; CELLS];
        for (r, c, number) in SETUP {
            cells[r * EWN_SIZE + c] = Some(Piece {
                owner: Player::First,
                number,
            });
            cells[(EWN_SIZE - 1 - r) * EWN_SIZE + (EWN_SIZE - 1 - c)] = Some(Piece {
                owner: Player::Second,
                number,
            });
        }
        EwnState {
            cells,
            to_move: Player::First,
            ply: 0,
            die: None,
            status: GameStatus::Ongoing,
        }
    }

    fn player_to_move(&self, s: &EwnState) -> Player {
        s.to_move
    }

    fn ply(&self, s: &EwnState) -> u32 {
        s.ply
    }

    fn is_chance(&self, s: &EwnState) -> bool {
        !s.status.is_terminal() && s.die.is_none()
    }

    fn status(&self, s: &EwnState) -> GameStatus {
        s.status
    }

    fn legal_actions(&self, s: &EwnState) -> Result<Vec<usize>, GameError> {
        if s.status.is_terminal() {
            return Ok(Vec::new());
        }
        let roll = s.die.ok_or(GameError::ChanceNode)?;
        let mut actions = Vec::new();
        for from in s.movable(s.to_move, roll) {
            for (ch, dir) in directions(s.to_move).into_iter().enumerate() {
                if step(from, dir).is_some() {
                    actions.push(ch * CELLS + from);
                }
            }
        }
        actions.sort_unstable();
        Ok(actions)
    }

    fn apply(&self, s: &EwnState, action: usize) -> Result<EwnState, GameError> {
        if s.status.is_terminal() {
            return Err(GameError::Terminal);
        }
        let roll = s.die.ok_or(GameError::ChanceNode)?;
        let illegal = |reason: &str| GameError::IllegalAction {
            action,
            reason: reason.to_string(),
        };
        if action >= 3 * CELLS {
            return Err(illegal("outside the action space"));
        }
        let (channel, from) = (action / CELLS, action % CELLS);
        if !s.movable(s.to_move, roll).contains(&from) {
            return Err(illegal("that piece may not move on this roll"));
        }
        let to = step(from, directions(s.to_move)[channel])
            .ok_or_else(|| illegal("move leaves the board"))?;
        let mut next = s.clone();
        next.cells[to] = next.cells[from].take();
        next.ply += 1;
        next.die = None;
        let mover = s.to_move;
        if to == target_corner(mover) || next.count(mover.opponent()) == 0 {
            next.status = GameStatus::Win(mover);
        }
        next.to_move = mover.opponent();
        Ok(next)
    }

    fn chance_outcomes(&self, s: &EwnState) -> Result<Vec<ChanceOutcome<EwnState>>, GameError> {
        if !self.is_chance(s) {
            return Err(GameError::NotChanceNode);
        }
        Ok((1..=6u8)
            .map(|face| {
                let mut state = s.clone();
                state.die = Some(face);
                ChanceOutcome {
                    label: face as u32,
                    probability: 1.0 / 6.0,
                    state,
                }
            })
            .collect())
    }

    fn owner_at(&self, s: &EwnState, row: usize, col: usize) -> Option<Player> {
        s.piece_at(row, col).map(|p| p.owner)
    }

    /// Second sees the board rotated by 180 degrees, which also maps its
    /// move directions onto First's.
    fn canonical_cell(&self, s: &EwnState, row: usize, col: usize) -> (usize, usize) {
        match s.to_move {
            Player::First => (row, col),
            Player::Second => (EWN_SIZE - 1 - row, EWN_SIZE - 1 - col),
        }
    }
}
