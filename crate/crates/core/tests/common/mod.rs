//! Independent reference implementations used as oracles by the
//! integration tests. Nothing here calls into the library's rules.

#![allow(dead_code)]

use std::collections::HashMap;

/// Connect-K with gravity, written from the rules alone. Cells are
/// `0` empty, `1` first player, `2` second player; row 0 is the top.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RefConnect {
    pub w: usize,
    pub h: usize,
    pub k: usize,
    pub cells: Vec<u8>,
}

impl RefConnect {
    pub fn new(w: usize, h: usize, k: usize) -> Self {
        Self {
            w,
            h,
            k,
            cells: vec![0; w * h],
        }
    }

    pub fn at(&self, r: usize, c: usize) -> u8 {
        self.cells[r * self.w + c]
    }

    /// The player (1 or 2) owning a line of `k`, if any.
    pub fn winner(&self) -> Option<u8> {
        let (w, h, k) = (self.w as isize, self.h as isize, self.k as isize);
        for r in 0..h {
            for c in 0..w {
                let p = self.at(r as usize, c as usize);
                if p == 0 {
                    continue;
                }
                for (dr, dc) in [(0, 1), (1, 0), (1, 1), (1, -1)] {
                    let end_r = r + dr * (k - 1);
                    let end_c = c + dc * (k - 1);
                    if end_r < 0 || end_r >= h || end_c < 0 || end_c >= w {
                        continue;
                    }
                    if (1..k).all(|i| self.at((r + dr * i) as usize, (c + dc * i) as usize) == p) {
                        return Some(p);
                    }
                }
            }
        }
        None
    }

    pub fn full(&self) -> bool {
        self.cells.iter().all(|&x| x != 0)
    }

    pub fn terminal(&self) -> bool {
        self.winner().is_some() || self.full()
    }

    pub fn to_move(&self) -> u8 {
        let stones = self.cells.iter().filter(|&&x| x != 0).count();
        if stones % 2 == 0 {
            1
        } else {
            2
        }
    }

    /// Landing cells `r * w + c`, ascending; empty when terminal.
    pub fn moves(&self) -> Vec<usize> {
        if self.terminal() {
            return Vec::new();
        }
        let mut out: Vec<usize> = (0..self.w)
            .filter_map(|c| {
                (0..self.h)
                    .rev()
                    .find(|&r| self.at(r, c) == 0)
                    .map(|r| r * self.w + c)
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn play(&self, cell: usize) -> Self {
        let mut next = self.clone();
        next.cells[cell] = self.to_move();
        next
    }
}

/// Exact game values by memoised negamax.
#[derive(Default)]
pub struct Minimax {
    memo: HashMap<Vec<u8>, i8>,
}

impl Minimax {
    /// Value for the player to move: +1 win, 0 draw, -1 loss.
    pub fn value(&mut self, s: &RefConnect) -> i8 {
        if let Some(w) = s.winner() {
            return if w == s.to_move() { 1 } else { -1 };
        }
        if s.full() {
            return 0;
        }
        if let Some(&v) = self.memo.get(&s.cells) {
            return v;
        }
        let v = s
            .moves()
            .into_iter()
            .map(|m| -self.value(&s.play(m)))
            .max()
            .expect("moves exist");
        self.memo.insert(s.cells.clone(), v);
        v
    }

    /// Value of each move for the player making it.
    pub fn move_values(&mut self, s: &RefConnect) -> Vec<(usize, i8)> {
        s.moves()
            .into_iter()
            .map(|m| (m, -self.value(&s.play(m))))
            .collect()
    }
}

/// Whether `color` stones connect its two sides of an N×N Hex rhombus.
/// Color 1 joins row 0 to row N-1, color 2 joins column 0 to column N-1.
/// Neighbours of (r, c): (r-1, c), (r-1, c+1), (r, c-1), (r, c+1),
/// (r+1, c-1), (r+1, c).
pub fn hex_connected(n: usize, cells: &[u8], color: u8) -> bool {
    let mut seen = vec![false; n * n];
    let mut stack = Vec::new();
    for i in 0..n {
        let start = if color == 1 { i } else { i * n };
        if cells[start] == color {
            seen[start] = true;
            stack.push(start);
        }
    }
    while let Some(x) = stack.pop() {
        let (r, c) = ((x / n) as isize, (x % n) as isize);
        if (color == 1 && r as usize == n - 1) || (color == 2 && c as usize == n - 1) {
            return true;
        }
        for (dr, dc) in [(-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0)] {
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 || nr >= n as isize || nc >= n as isize {
                continue;
            }
            let y = nr as usize * n + nc as usize;
            if !seen[y] && cells[y] == color {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    false
}

/// Minimax that prefers quick wins and slow losses. Scores are `±(100 -
/// plies to the end)` for the player to move, 0 for a draw.
#[derive(Default)]
pub struct DelayMinimax {
    memo: HashMap<Vec<u8>, i32>,
}

impl DelayMinimax {
    pub fn value(&mut self, s: &RefConnect) -> i32 {
        if let Some(w) = s.winner() {
            return if w == s.to_move() { 100 } else { -100 };
        }
        if s.full() {
            return 0;
        }
        if let Some(&v) = self.memo.get(&s.cells) {
            return v;
        }
        let v = s
            .moves()
            .into_iter()
            .map(|m| {
                let c = -self.value(&s.play(m));
                c - c.signum()
            })
            .max()
            .expect("moves exist");
        self.memo.insert(s.cells.clone(), v);
        v
    }

    /// Moves with the best delay-adjusted score, ascending.
    pub fn best_moves(&mut self, s: &RefConnect) -> Vec<usize> {
        let scored: Vec<(usize, i32)> = s
            .moves()
            .into_iter()
            .map(|m| (m, -self.value(&s.play(m))))
            .collect();
        let best = scored.iter().map(|&(_, v)| v).max().expect("moves exist");
        scored
            .into_iter()
            .filter(|&(_, v)| v == best)
            .map(|(m, _)| m)
            .collect()
    }
}
