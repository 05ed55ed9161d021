//! Connect-K with gravity on a `W×H` board. Row 0 is the top; a piece
//! dropped in a column lands on the lowest empty row. An action is the
//! landing cell itself, so the policy stays a `1×H×W` map.

use crate::game::{ActionSpace, Game, GameError, GameStatus, Player};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConnectBoard {
    width: usize,
    height: usize,
    k: usize,
    cells: Vec<Option<Player>>,
}

impl ConnectBoard {
    pub fn new(width: usize, height: usize, k: usize) -> Self {
        Self {
            width,
            height,
            k,
            cells: vec![None; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> Option<Player> {
        self.cells[row * self.width + col]
    }

    /// Lowest empty row of a column.
    pub fn landing_row(&self, col: usize) -> Option<usize> {
        (0..self.height).rev().find(|&r| self.get(r, col).is_none())
    }

    /// Drops a piece; `None` when the column is full.
    pub fn drop_piece(&mut self, col: usize, player: Player) -> Option<usize> {
        let row = self.landing_row(col)?;
        self.cells[row * self.width + col] = Some(player);
        Some(row)
    }

    pub fn is_full(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    fn line_through(&self, row: usize, col: usize, dr: isize, dc: isize) -> bool {
        let Some(p) = self.get(row, col) else {
            return false;
        };
        (1..self.k).all(|i| {
            let r = row as isize + dr * i as isize;
            let c = col as isize + dc * i as isize;
            r >= 0
                && c >= 0
                && (r as usize) < self.height
                && (c as usize) < self.width
                && self.get(r as usize, c as usize) == Some(p)
        })
    }
}

/// Win if any `K` in a row exists (horizontal, vertical, both diagonals),
/// draw if the board is full, ongoing otherwise.
pub fn connect_winner(board: &ConnectBoard) -> GameStatus {
    for r in 0..board.height {
        for c in 0..board.width {
            for (dr, dc) in [(0, 1), (1, 0), (1, 1), (1, -1)] {
                if board.line_through(r, c, dr, dc) {
                    return GameStatus::Win(board.get(r, c).expect("line owner"));
                }
            }
        }
    }
    if board.is_full() {
        GameStatus::Draw
    } else {
        GameStatus::Ongoing
    }
}

#[derive(Clone, Debug)]
pub struct ConnectK {
    width: usize,
    height: usize,
    k: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConnectState {
    pub board: ConnectBoard,
    to_move: Player,
    ply: u32,
    status: GameStatus,
}

impl ConnectK {
    pub fn new(width: usize, height: usize, k: usize) -> Result<Self, GameError> {
        if width == 0 || height == 0 || width > 32 || height > 32 {
            return Err(GameError::InvalidSize(format!(
                "connect board must be between 1x1 and 32x32, got {width}x{height}"
            )));
        }
        if k == 0 || k > width.max(height) {
            return Err(GameError::InvalidSize(format!(
                "line length {k} does not fit a {width}x{height} board"
            )));
        }
        Ok(Self { width, height, k })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl Game for ConnectK {
    type State = ConnectState;

    fn id(&self) -> String {
        format!("connect{}x{}k{}", self.width, self.height, self.k)
    }

    fn family(&self) -> &'static str {
        "connect"
    }

    fn board_dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::new(1, self.height, self.width)
    }

    fn initial_state(&self) -> ConnectState {
        ConnectState {
            board: ConnectBoard::new(self.width, self.height, self.k),
            to_move: Player::First,
            ply: 0,
            status: GameStatus::Ongoing,
        }
    }

    fn player_to_move(&self, s: &ConnectState) -> Player {
        s.to_move
    }

    fn ply(&self, s: &ConnectState) -> u32 {
        s.ply
    }

    fn status(&self, s: &ConnectState) -> GameStatus {
        s.status
    }

    fn legal_actions(&self, s: &ConnectState) -> Result<Vec<usize>, GameError> {
        if s.status.is_terminal() {
            return Ok(Vec::new());
        }
        let mut actions: Vec<usize> = (0..self.width)
            .filter_map(|c| s.board.landing_row(c).map(|r| r * self.width + c))
            .collect();
        actions.sort_unstable();
        Ok(actions)
    }

    fn apply(&self, s: &ConnectState, action: usize) -> Result<ConnectState, GameError> {
        if s.status.is_terminal() {
            return Err(GameError::Terminal);
        }
        let (row, col) = (action / self.width, action % self.width);
        if action >= self.width * self.height || s.board.landing_row(col) != Some(row) {
            return Err(GameError::IllegalAction {
                action,
                reason: "not the landing cell of a non-full column".into(),
            });
        }
        let mut next = s.clone();
        next.board.drop_piece(col, s.to_move);
        next.status = connect_winner(&next.board);
        next.to_move = s.to_move.opponent();
        next.ply += 1;
        Ok(next)
    }

    fn owner_at(&self, s: &ConnectState, row: usize, col: usize) -> Option<Player> {
        s.board.get(row, col)
    }
}
