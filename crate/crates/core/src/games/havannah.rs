//! Havannah on a hexagonal board of base `S` (edge length `S` cells).
//!
//! The board is embedded in a `(2S−1)×(2S−1)` grid with the same
//! adjacency as Hex; cell `(r, c)` is playable when
//! `|r + c − 2(S−1)| ≤ S−1`. A player wins with a bridge (two corners),
//! a fork (three sides, corners excluded) or a ring (a loop of own stones
//! around at least one cell of any content).

use super::{color_of, hex_neighbors, player_of, Color};
use crate::game::{ActionSpace, Game, GameError, GameStatus, Player};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WinKind {
    Bridge,
    Fork,
    Ring,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HavannahBoard {
    base: usize,
    cells: Vec<Option<Color>>,
}

impl HavannahBoard {
    pub fn new(base: usize) -> Self {
        let d = 2 * base - 1;
        Self {
            base,
            cells: vec![None; d * d],
        }
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// Side length of the embedding grid.
    pub fn dim(&self) -> usize {
        2 * self.base - 1
    }

    pub fn on_board(&self, row: usize, col: usize) -> bool {
        let d = self.dim();
        let m = (self.base - 1) as isize;
        row < d && col < d && (row as isize + col as isize - 2 * m).abs() <= m
    }

    pub fn cell_count(&self) -> usize {
        3 * self.base * self.base - 3 * self.base + 1
    }

    pub fn get(&self, row: usize, col: usize) -> Option<Color> {
        self.cells[row * self.dim() + col]
    }

    pub fn set(&mut self, row: usize, col: usize, color: Option<Color>) {
        assert!(self.on_board(row, col), "({row},{col}) is off the board");
        let d = self.dim();
        self.cells[row * d + col] = color;
    }

    fn neighbors(&self, row: usize, col: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d = self.dim();
        hex_neighbors(row, col, d, d).filter(|&(r, c)| self.on_board(r, c))
    }

    /// Which of the three bounding constraints are tight at a cell:
    /// `[x = ±m, y = ±m, x + y = ±m]` mapped to side ids 0..6.
    fn tight_sides(&self, row: usize, col: usize) -> Vec<usize> {
        let m = (self.base - 1) as isize;
        let x = row as isize - m;
        let y = col as isize - m;
        let mut sides = Vec::new();
        if x == -m {
            sides.push(0);
        }
        if y == m {
            sides.push(1);
        }
        if x + y == m {
            sides.push(2);
        }
        if x == m {
            sides.push(3);
        }
        if y == -m {
            sides.push(4);
        }
        if x + y == -m {
            sides.push(5);
        }
        sides
    }

    pub fn is_corner(&self, row: usize, col: usize) -> bool {
        self.on_board(row, col) && self.tight_sides(row, col).len() >= 2
    }

    /// Side id of a non-corner edge cell.
    pub fn side(&self, row: usize, col: usize) -> Option<usize> {
        if !self.on_board(row, col) {
            return None;
        }
        match self.tight_sides(row, col).as_slice() {
            [s] => Some(*s),
            _ => None,
        }
    }

    pub fn corners(&self) -> Vec<(usize, usize)> {
        let d = self.dim();
        (0..d)
            .flat_map(|r| (0..d).map(move |c| (r, c)))
            .filter(|&(r, c)| self.is_corner(r, c))
            .collect()
    }

    fn is_edge(&self, row: usize, col: usize) -> bool {
        !self.tight_sides(row, col).is_empty()
    }

    fn is_full(&self) -> bool {
        let d = self.dim();
        (0..d * d).all(|i| !self.on_board(i / d, i % d) || self.cells[i].is_some())
    }
}

/// Win created by the stone on `last_move`, for the owner of that stone.
pub fn havannah_win(board: &HavannahBoard, last_move: (usize, usize)) -> Option<WinKind> {
    let color = board.get(last_move.0, last_move.1)?;
    let d = board.dim();

    let mut seen = vec![false; d * d];
    let mut stack = vec![last_move];
    seen[last_move.0 * d + last_move.1] = true;
    let mut corners = 0;
    let mut sides = [false; 6];
    while let Some((r, c)) = stack.pop() {
        if board.is_corner(r, c) {
            corners += 1;
        }
        if let Some(s) = board.side(r, c) {
            sides[s] = true;
        }
        for (nr, nc) in board.neighbors(r, c) {
            if !seen[nr * d + nc] && board.get(nr, nc) == Some(color) {
                seen[nr * d + nc] = true;
                stack.push((nr, nc));
            }
        }
    }
    if corners >= 2 {
        return Some(WinKind::Bridge);
    }
    if sides.iter().filter(|&&s| s).count() >= 3 {
        return Some(WinKind::Fork);
    }
    has_ring(board, color).then_some(WinKind::Ring)
}

/// A ring exists iff some cell is cut off from the board edge by `color`
/// stones. Cells not of `color` are checked with one flood fill from the
/// edge; a `color` stone is enclosed exactly when its six neighbors are
/// all `color`, which is itself a ring.
fn has_ring(board: &HavannahBoard, color: Color) -> bool {
    let d = board.dim();
    let open = |r: usize, c: usize| board.on_board(r, c) && board.get(r, c) != Some(color);
    let mut reached = vec![false; d * d];
    let mut stack = Vec::new();
    for r in 0..d {
        for c in 0..d {
            if open(r, c) && board.is_edge(r, c) {
                reached[r * d + c] = true;
                stack.push((r, c));
            }
        }
    }
    while let Some((r, c)) = stack.pop() {
        for (nr, nc) in board.neighbors(r, c) {
            if open(nr, nc) && !reached[nr * d + nc] {
                reached[nr * d + nc] = true;
                stack.push((nr, nc));
            }
        }
    }
    for r in 0..d {
        for c in 0..d {
            if !board.on_board(r, c) {
                continue;
            }
            if open(r, c) {
                if !reached[r * d + c] {
                    return true;
                }
            } else if !board.is_edge(r, c)
                && board
                    .neighbors(r, c)
                    .all(|(nr, nc)| board.get(nr, nc) == Some(color))
            {
                return true;
            }
        }
    }
    false
}

#[derive(Clone, Debug)]
pub struct Havannah {
    base: usize,
    pie_rule: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HavannahState {
    pub board: HavannahBoard,
    to_move: Player,
    ply: u32,
    swapped: bool,
    status: GameStatus,
    win_kind: Option<WinKind>,
}

impl HavannahState {
    pub fn win_kind(&self) -> Option<WinKind> {
        self.win_kind
    }

    pub fn swapped(&self) -> bool {
        self.swapped
    }
}

impl Havannah {
    pub fn new(base: usize) -> Result<Self, GameError> {
        if !(2..=16).contains(&base) {
            return Err(GameError::InvalidSize(format!(
                "havannah base must be in 2..=16, got {base}"
            )));
        }
        Ok(Self {
            base,
            pie_rule: true,
        })
    }

    pub fn base(&self) -> usize {
        self.base
    }

    fn dim(&self) -> usize {
        2 * self.base - 1
    }

    fn swap_action(&self) -> usize {
        self.dim() * self.dim()
    }

    fn swap_legal(&self, s: &HavannahState) -> bool {
        self.pie_rule && s.ply == 1 && s.status == GameStatus::Ongoing
    }
}

impl Game for Havannah {
    type State = HavannahState;

    fn id(&self) -> String {
        format!("havannah{}", self.base)
    }

    fn family(&self) -> &'static str {
        "havannah"
    }

    fn board_dims(&self) -> (usize, usize) {
        (self.dim(), self.dim())
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::new(2, self.dim(), self.dim())
    }

    fn initial_state(&self) -> HavannahState {
        HavannahState {
            board: HavannahBoard::new(self.base),
            to_move: Player::First,
            ply: 0,
            swapped: false,
            status: GameStatus::Ongoing,
            win_kind: None,
        }
    }

    fn player_to_move(&self, s: &HavannahState) -> Player {
        s.to_move
    }

    fn ply(&self, s: &HavannahState) -> u32 {
        s.ply
    }

    fn status(&self, s: &HavannahState) -> GameStatus {
        s.status
    }

    fn legal_actions(&self, s: &HavannahState) -> Result<Vec<usize>, GameError> {
        if s.status.is_terminal() {
            return Ok(Vec::new());
        }
        let d = self.dim();
        let mut actions: Vec<usize> = (0..d * d)
            .filter(|&i| s.board.on_board(i / d, i % d) && s.board.cells[i].is_none())
            .collect();
        if self.swap_legal(s) {
            actions.push(self.swap_action());
        }
        Ok(actions)
    }

    fn apply(&self, s: &HavannahState, action: usize) -> Result<HavannahState, GameError> {
        if s.status.is_terminal() {
            return Err(GameError::Terminal);
        }
        let illegal = |reason: &str| GameError::IllegalAction {
            action,
            reason: reason.to_string(),
        };
        let d = self.dim();
        let mut next = s.clone();
        if action == self.swap_action() {
            if !self.swap_legal(s) {
                return Err(illegal("swap is only allowed at ply 1"));
            }
            next.swapped = !s.swapped;
        } else if action < d * d {
            let (r, c) = (action / d, action % d);
            if !s.board.on_board(r, c) {
                return Err(illegal("cell is off the board"));
            }
            if s.board.get(r, c).is_some() {
                return Err(illegal("cell is occupied"));
            }
            next.board.set(r, c, Some(color_of(s.to_move, s.swapped)));
            if let Some(kind) = havannah_win(&next.board, (r, c)) {
                next.status = GameStatus::Win(s.to_move);
                next.win_kind = Some(kind);
            } else if next.board.is_full() {
                next.status = GameStatus::Draw;
            }
        } else {
            return Err(illegal("outside the action space"));
        }
        next.to_move = s.to_move.opponent();
        next.ply += 1;
        Ok(next)
    }

    fn owner_at(&self, s: &HavannahState, row: usize, col: usize) -> Option<Player> {
        if !s.board.on_board(row, col) {
            return None;
        }
        s.board.get(row, col).map(|c| player_of(c, s.swapped))
    }

    fn on_board(&self, row: usize, col: usize) -> bool {
        let d = self.dim();
        let m = (self.base - 1) as isize;
        row < d && col < d && (row as isize + col as isize - 2 * m).abs() <= m
    }

    fn cell_count(&self) -> usize {
        3 * self.base * self.base - 3 * self.base + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cells at axial offset `(x, y)` from the center.
    fn at(base: usize, x: isize, y: isize) -> (usize, usize) {
        let m = base as isize - 1;
        ((x + m) as usize, (y + m) as usize)
    }

    fn place(b: &mut HavannahBoard, cells: &[(usize, usize)], color: Color) {
        for &(r, c) in cells {
            b.set(r, c, Some(color));
        }
    }

    #[test]
    fn geometry_counts() {
        for base in 2..=10 {
            let b = HavannahBoard::new(base);
            let d = b.dim();
            let cells = (0..d * d).filter(|&i| b.on_board(i / d, i % d)).count();
            assert_eq!(cells, 3 * base * base - 3 * base + 1);
            assert_eq!(b.corners().len(), 6);
            let mut per_side = [0; 6];
            for i in 0..d * d {
                if let Some(s) = b.side(i / d, i % d) {
                    per_side[s] += 1;
                }
            }
            assert_eq!(per_side, [base - 2; 6]);
        }
    }

    #[test]
    fn bridge_along_an_edge() {
        let base = 4;
        let mut b = HavannahBoard::new(base);
        // side x = -3 runs from corner (-3,0) to corner (-3,3)
        let edge: Vec<_> = (0..=3).map(|y| at(base, -3, y)).collect();
        place(&mut b, &edge, Color::Black);
        assert_eq!(havannah_win(&b, edge[2]), Some(WinKind::Bridge));
        b.set(edge[1].0, edge[1].1, Some(Color::White));
        assert_eq!(havannah_win(&b, edge[3]), None);
    }

    #[test]
    fn fork_touches_three_sides() {
        let base = 4;
        let mut b = HavannahBoard::new(base);
        // a Y from the center to the middles of three alternate sides
        let cells = [
            at(base, 0, 0),
            at(base, -1, 0),
            at(base, -2, 0),
            at(base, -3, 1),
            at(base, 0, 1),
            at(base, 0, 2),
            at(base, -1, 3),
            at(base, 1, -1),
            at(base, 2, -2),
            at(base, 2, -3),
        ];
        place(&mut b, &cells, Color::White);
        assert_eq!(havannah_win(&b, cells[0]), Some(WinKind::Fork));
    }

    #[test]
    fn ring_around_any_content() {
        let base = 5;
        let center = at(base, 0, 0);
        let ring: Vec<_> = hex_neighbors(center.0, center.1, 9, 9).collect();
        assert_eq!(ring.len(), 6);
        for inside in [None, Some(Color::White), Some(Color::Black)] {
            let mut b = HavannahBoard::new(base);
            place(&mut b, &ring, Color::Black);
            b.set(center.0, center.1, inside);
            assert_eq!(havannah_win(&b, ring[0]), Some(WinKind::Ring), "{inside:?}");
        }
        let mut open = HavannahBoard::new(base);
        place(&mut open, &ring[..5], Color::Black);
        assert_eq!(havannah_win(&open, ring[0]), None);
    }

    #[test]
    fn triangle_is_not_a_ring() {
        let base = 4;
        let mut b = HavannahBoard::new(base);
        let tri = [at(base, 0, 0), at(base, 0, 1), at(base, 1, 0)];
        place(&mut b, &tri, Color::Black);
        assert_eq!(havannah_win(&b, tri[0]), None);
    }

    #[test]
    fn larger_ring_around_two_cells() {
        let base = 5;
        let mut b = HavannahBoard::new(base);
        let a = at(base, 0, 0);
        let c = at(base, 0, 1);
        let mut ring: Vec<(usize, usize)> = hex_neighbors(a.0, a.1, 9, 9)
            .chain(hex_neighbors(c.0, c.1, 9, 9))
            .filter(|&p| p != a && p != c)
            .collect();
        ring.sort();
        ring.dedup();
        assert_eq!(ring.len(), 8);
        place(&mut b, &ring, Color::White);
        assert_eq!(havannah_win(&b, ring[3]), Some(WinKind::Ring));
    }

    #[test]
    fn game_plays_and_swaps() {
        let game = Havannah::new(3).unwrap();
        let s0 = game.initial_state();
        assert_eq!(game.legal_actions(&s0).unwrap().len(), 19);
        assert_eq!(game.cell_count(), 19);
        assert!(matches!(
            game.apply(&s0, 0),
            Err(GameError::IllegalAction { .. })
        ));
        let s1 = game.apply(&s0, 12).unwrap();
        let legal = game.legal_actions(&s1).unwrap();
        assert!(legal.contains(&25));
        let s2 = game.apply(&s1, 25).unwrap();
        assert_eq!(game.owner_at(&s2, 2, 2), Some(Player::Second));
        assert_eq!(game.player_to_move(&s2), Player::First);
    }

    #[test]
    fn encoding_marks_only_playable_cells() {
        let game = Havannah::new(2).unwrap();
        let t = game.encode(&game.initial_state()).unwrap();
        let ones: f32 = t.data()[18..].iter().sum();
        assert_eq!(ones, 7.0);
        assert_eq!(t.data()[18], 0.0);
    }
}
