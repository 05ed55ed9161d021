//! Hex on an `N×N` rhombus, with the pie rule.
//!
//! Black connects the North (row 0) and South (row N−1) edges, White the
//! West (col 0) and East (col N−1) edges. The first player plays Black
//! unless the second player swaps at ply 1, in which case the two players
//! exchange colors and the first player continues as White.

use super::union_find::UnionFind;
use super::{hex_neighbors, Color};
use crate::game::{ActionSpace, Game, GameError, GameStatus, Player};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HexBoard {
    size: usize,
    cells: Vec<Option<Color>>,
}

impl HexBoard {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            cells: vec![None; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> Option<Color> {
        self.cells[row * self.size + col]
    }

    pub fn set(&mut self, row: usize, col: usize, color: Option<Color>) {
        self.cells[row * self.size + col] = color;
    }

    pub fn is_full(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    pub fn cells(&self) -> &[Option<Color>] {
        &self.cells
    }
}

/// Union-find over the cells plus four virtual edge nodes.
pub fn hex_winner(board: &HexBoard) -> Option<Color> {
    let n = board.size;
    let cells = n * n;
    let (north, south, west, east) = (cells, cells + 1, cells + 2, cells + 3);
    let mut uf = UnionFind::new(cells + 4);
    for r in 0..n {
        for c in 0..n {
            let Some(color) = board.get(r, c) else {
                continue;
            };
            let at = r * n + c;
            for (nr, nc) in hex_neighbors(r, c, n, n) {
                if board.get(nr, nc) == Some(color) {
                    uf.union(at, nr * n + nc);
                }
            }
            match color {
                Color::Black => {
                    if r == 0 {
                        uf.union(at, north);
                    }
                    if r == n - 1 {
                        uf.union(at, south);
                    }
                }
                Color::White => {
                    if c == 0 {
                        uf.union(at, west);
                    }
                    if c == n - 1 {
                        uf.union(at, east);
                    }
                }
            }
        }
    }
    if uf.connected(north, south) {
        Some(Color::Black)
    } else if uf.connected(west, east) {
        Some(Color::White)
    } else {
        None
    }
}

#[derive(Clone, Debug)]
pub struct Hex {
    size: usize,
    pie_rule: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HexState {
    pub board: HexBoard,
    to_move: Player,
    ply: u32,
    swapped: bool,
    winner: Option<Color>,
}

impl HexState {
    pub fn swapped(&self) -> bool {
        self.swapped
    }

    pub fn color_of(&self, player: Player) -> Color {
        super::color_of(player, self.swapped)
    }

    pub fn player_of(&self, color: Color) -> Player {
        super::player_of(color, self.swapped)
    }
}

impl Hex {
    pub fn new(size: usize) -> Result<Self, GameError> {
        if !(1..=32).contains(&size) {
            return Err(GameError::InvalidSize(format!(
                "hex board size must be in 1..=32, got {size}"
            )));
        }
        Ok(Self {
            size,
            pie_rule: true,
        })
    }

    pub fn without_pie_rule(mut self) -> Self {
        self.pie_rule = false;
        self
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn swap_action(&self) -> usize {
        self.size * self.size
    }

    fn swap_legal(&self, s: &HexState) -> bool {
        self.pie_rule && s.ply == 1 && s.winner.is_none()
    }
}

impl Game for Hex {
    type State = HexState;

    fn id(&self) -> String {
        format!("hex{}", self.size)
    }

    fn family(&self) -> &'static str {
        "hex"
    }

    fn board_dims(&self) -> (usize, usize) {
        (self.size, self.size)
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::new(2, self.size, self.size)
    }

    fn initial_state(&self) -> HexState {
        HexState {
            board: HexBoard::new(self.size),
            to_move: Player::First,
            ply: 0,
            swapped: false,
            winner: None,
        }
    }

    fn player_to_move(&self, s: &HexState) -> Player {
        s.to_move
    }

    fn ply(&self, s: &HexState) -> u32 {
        s.ply
    }

    fn status(&self, s: &HexState) -> GameStatus {
        match s.winner {
            Some(color) => GameStatus::Win(s.player_of(color)),
            None => GameStatus::Ongoing,
        }
    }

    fn legal_actions(&self, s: &HexState) -> Result<Vec<usize>, GameError> {
        if s.winner.is_some() {
            return Ok(Vec::new());
        }
        let mut actions: Vec<usize> = (0..self.size * self.size)
            .filter(|&i| s.board.cells[i].is_none())
            .collect();
        if self.swap_legal(s) {
            actions.push(self.swap_action());
        }
        Ok(actions)
    }

    fn apply(&self, s: &HexState, action: usize) -> Result<HexState, GameError> {
        if s.winner.is_some() {
            return Err(GameError::Terminal);
        }
        let illegal = |reason: &str| GameError::IllegalAction {
            action,
            reason: reason.to_string(),
        };
        let mut next = s.clone();
        if action == self.swap_action() {
            if !self.swap_legal(s) {
                return Err(illegal("swap is only allowed at ply 1"));
            }
            next.swapped = !s.swapped;
        } else if action < self.size * self.size {
            if s.board.cells[action].is_some() {
                return Err(illegal("cell is occupied"));
            }
            next.board.cells[action] = Some(s.color_of(s.to_move));
            next.winner = hex_winner(&next.board);
        } else {
            return Err(illegal("outside the action space"));
        }
        next.to_move = s.to_move.opponent();
        next.ply += 1;
        Ok(next)
    }

    fn owner_at(&self, s: &HexState, row: usize, col: usize) -> Option<Player> {
        s.board.get(row, col).map(|c| s.player_of(c))
    }

    /// White to move sees the board transposed, so the mover always
    /// connects the top and bottom rows in the network's frame.
    fn canonical_cell(&self, s: &HexState, row: usize, col: usize) -> (usize, usize) {
        match s.color_of(s.to_move) {
            Color::Black => (row, col),
            Color::White => (col, row),
        }
    }
}
