//! ELO pool of past checkpoints used as self-play opponents.
//!
//! The pool keeps at most [`POOL_CAPACITY`] members. Each is rated only
//! through games against the model under training ("dev"). Opponents are
//! drawn with weight `exp(−(ELO_dev − ELO_i)/400)`, so members close to or
//! above dev's strength are picked most often.
//!
//! The pool persists as a text ledger:
//!
//! ```text
//! dev 1016
//! member step-100 984 3
//! member step-200 1000 0
//! ```

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

pub const POOL_CAPACITY: usize = 10;
pub const ELO_K: f64 = 32.0;
pub const INITIAL_RATING: f64 = 1000.0;

#[derive(Debug, Error)]
pub enum TournamentError {
    #[error("no pool member named `{0}`")]
    UnknownMember(String),
    #[error("member id `{0}` must be non-empty and contain no whitespace")]
    BadId(String),
    #[error("pool ledger line {line}: {reason}")]
    Ledger { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GameResult {
    Win,
    Loss,
    Draw,
}

impl GameResult {
    pub fn score(self) -> f64 {
        match self {
            GameResult::Win => 1.0,
            GameResult::Draw => 0.5,
            GameResult::Loss => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatedCheckpoint {
    pub id: String,
    pub rating: f64,
    /// Games played against dev.
    pub games: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Opponent {
    SelfPlay,
    Member(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EloPool {
    /// Kept in admission order, oldest first.
    members: Vec<RatedCheckpoint>,
    dev_rating: f64,
}

impl Default for EloPool {
    fn default() -> Self {
        Self::new(INITIAL_RATING)
    }
}

/// Expected score of a player rated `a` against one rated `b`.
pub fn expected_score(a: f64, b: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf((b - a) / 400.0))
}

impl EloPool {
    pub fn new(dev_rating: f64) -> Self {
        Self {
            members: Vec::new(),
            dev_rating,
        }
    }

    pub fn dev_rating(&self) -> f64 {
        self.dev_rating
    }

    pub fn members(&self) -> &[RatedCheckpoint] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&RatedCheckpoint> {
        self.members.iter().find(|m| m.id == id)
    }

    /// Normalised selection probabilities, aligned with [`members`](Self::members).
    pub fn selection_weights(&self) -> Vec<f64> {
        let logits: Vec<f64> = self
            .members
            .iter()
            .map(|m| -(self.dev_rating - m.rating) / 400.0)
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    pub fn select_opponent<R: Rng + ?Sized>(&self, rng: &mut R) -> Opponent {
        if self.members.is_empty() {
            return Opponent::SelfPlay;
        }
        let weights = self.selection_weights();
        let mut u: f64 = rng.random();
        for (m, w) in self.members.iter().zip(&weights) {
            if u < *w {
                return Opponent::Member(m.id.clone());
            }
            u -= w;
        }
        Opponent::Member(self.members.last().expect("non-empty").id.clone())
    }

    /// Logistic ELO update with `K = 32`; dev gains exactly what the member loses.
    pub fn record_result(&mut self, id: &str, result: GameResult) -> Result<f64, TournamentError> {
        let dev = self.dev_rating;
        let member = self
            .members
            .iter_mut()
            .find(|m| m.id == id)
            .ok_or_else(|| TournamentError::UnknownMember(id.to_string()))?;
        let delta = ELO_K * (result.score() - expected_score(dev, member.rating));
        self.dev_rating += delta;
        member.rating -= delta;
        member.games += 1;
        Ok(delta)
    }

    /// Adds a member rated at dev's current rating. At capacity the lowest
    /// rated member (oldest on ties) is removed first and returned.
    pub fn admit(&mut self, id: &str) -> Result<Option<RatedCheckpoint>, TournamentError> {
        validate_id(id)?;
        let removed = if self.members.len() >= POOL_CAPACITY {
            let worst = (0..self.members.len())
                .min_by(|&a, &b| self.members[a].rating.total_cmp(&self.members[b].rating))
                .expect("pool at capacity is non-empty");
            Some(self.members.remove(worst))
        } else {
            None
        };
        self.members.retain(|m| m.id != id);
        self.members.push(RatedCheckpoint {
            id: id.to_string(),
            rating: self.dev_rating,
            games: 0,
        });
        Ok(removed)
    }

    pub fn to_ledger(&self) -> String {
        let mut out = String::new();
        writeln!(out, "dev {}", self.dev_rating).expect("string write");
        for m in &self.members {
            writeln!(out, "member {} {} {}", m.id, m.rating, m.games).expect("string write");
        }
        out
    }

    pub fn from_ledger(text: &str) -> Result<Self, TournamentError> {
        let mut pool: Option<EloPool> = None;
        for (n, line) in text.lines().enumerate() {
            let err = |reason: &str| TournamentError::Ledger {
                line: n + 1,
                reason: reason.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let rating = |s: &str| -> Result<f64, TournamentError> {
                s.parse::<f64>()
                    .ok()
                    .filter(|r| r.is_finite())
                    .ok_or_else(|| err("rating must be a finite number"))
            };
            match fields.as_slice() {
                [] => {}
                ["dev", r] if pool.is_none() => pool = Some(EloPool::new(rating(r)?)),
                ["member", id, r, games] => {
                    let p = pool
                        .as_mut()
                        .ok_or_else(|| err("member listed before the dev line"))?;
                    if p.members.len() >= POOL_CAPACITY {
                        return Err(err("more than ten members"));
                    }
                    if p.get(id).is_some() {
                        return Err(err("duplicate member id"));
                    }
                    p.members.push(RatedCheckpoint {
                        id: id.to_string(),
                        rating: rating(r)?,
                        games: games.parse().map_err(|_| err("bad game count"))?,
                    });
                }
                _ => {
                    return Err(err(
                        "expected `dev <rating>` or `member <id> <rating> <games>`",
                    ))
                }
            }
        }
        pool.ok_or(TournamentError::Ledger {
            line: 0,
            reason: "missing dev line".into(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), TournamentError> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_ledger())?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TournamentError> {
        Self::from_ledger(&std::fs::read_to_string(path)?)
    }
}

fn validate_id(id: &str) -> Result<(), TournamentError> {
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        Err(TournamentError::BadId(id.to_string()))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pool_with(ratings: &[f64], dev: f64) -> EloPool {
        let mut p = EloPool::new(dev);
        for (i, &r) in ratings.iter().enumerate() {
            p.members.push(RatedCheckpoint {
                id: format!("m{i}"),
                rating: r,
                games: 0,
            });
        }
        p
    }

    #[test]
    fn selection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            EloPool::default().select_opponent(&mut rng),
            Opponent::SelfPlay
        );
        let uniform = pool_with(&[1200.0; 4], 1200.0);
        assert!(uniform
            .selection_weights()
            .iter()
            .all(|&w| (w - 0.25).abs() < 1e-15));
        let two = pool_with(&[1000.0, 1400.0], 1000.0);
        let w = two.selection_weights();
        let e = std::f64::consts::E;
        assert!((w[1] - e / (1.0 + e)).abs() < 1e-12);
        assert!((w[1] - 0.731_058_578_630_004_9).abs() < 1e-12);
    }

    #[test]
    fn extreme_ratings_do_not_overflow() {
        let p = pool_with(&[1e6, 0.0], 0.0);
        let w = p.selection_weights();
        assert!(w.iter().all(|x| x.is_finite()));
        assert!((w[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn update_examples() {
        let mut p = pool_with(&[1500.0], 1500.0);
        let d = p.record_result("m0", GameResult::Win).unwrap();
        assert_eq!(d, 16.0);
        assert_eq!(p.dev_rating(), 1516.0);
        assert_eq!(p.members()[0].rating, 1484.0);
        assert_eq!(p.members()[0].games, 1);

        let mut p = pool_with(&[1500.0], 1500.0);
        p.record_result("m0", GameResult::Draw).unwrap();
        assert_eq!(p.dev_rating(), 1500.0);

        let mut p = pool_with(&[1400.0], 1000.0);
        let d = p.record_result("m0", GameResult::Loss).unwrap();
        // expected = 1/11
        assert!((d + 32.0 / 11.0).abs() < 1e-12);
        assert!((d + 2.909_090_909_090_909).abs() < 1e-12);
        assert!(matches!(
            p.record_result("ghost", GameResult::Win),
            Err(TournamentError::UnknownMember(_))
        ));
    }

    #[test]
    fn admission_removes_the_weakest() {
        let mut p = pool_with(&[1000.0, 900.0, 1100.0], 1050.0);
        assert_eq!(p.admit("new").unwrap(), None);
        assert_eq!(p.len(), 4);
        assert_eq!(p.get("new").unwrap().rating, 1050.0);

        let mut full = pool_with(
            &[
                1000.0, 950.0, 1010.0, 950.0, 1200.0, 1001.0, 999.0, 1300.0, 990.0, 1020.0,
            ],
            1000.0,
        );
        let removed = full.admit("fresh").unwrap().unwrap();
        // two members share the minimum; the older one goes
        assert_eq!(removed.id, "m1");
        assert_eq!(full.len(), POOL_CAPACITY);
        assert!(full.get("m3").is_some());
        assert!(full.admit("has space").is_err());
    }

    #[test]
    fn ledger_round_trip() {
        let mut p = pool_with(&[1000.123456789, 987.5], 1003.25);
        p.record_result("m1", GameResult::Win).unwrap();
        let text = p.to_ledger();
        assert_eq!(EloPool::from_ledger(&text).unwrap(), p);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.txt");
        p.save(&path).unwrap();
        assert_eq!(EloPool::load(&path).unwrap(), p);
        assert!(EloPool::from_ledger("member a 1 2\n").is_err());
        assert!(EloPool::from_ledger("dev x\n").is_err());
        assert!(EloPool::from_ledger("").is_err());
    }
}
