use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::nn::{Example, Tensor};

/// A slot may be drawn at most this many times before it is overwritten.
pub const MAX_REUSE: u8 = 8;

/// One training example: a position, the search's visit distribution over
/// the canonical policy layout, and the final reward for the player to move.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: Tensor<f32>,
    pub policy: Vec<f32>,
    pub mask: Vec<bool>,
    pub reward: f32,
}

impl Sample {
    pub fn example(&self) -> Example<'_, f32> {
        Example {
            input: &self.input,
            policy: &self.policy,
            mask: &self.mask,
            reward: self.reward,
        }
    }
}

/// Not enough slots below the reuse cap to fill a batch.
#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("starved: {eligible} eligible samples, batch needs {requested}")]
pub struct Starved {
    pub eligible: usize,
    pub requested: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BufferStats {
    pub len: usize,
    pub capacity: usize,
    pub eligible: usize,
    pub total_pushed: u64,
    pub total_sampled: u64,
    /// Largest reuse counter any slot has reached so far.
    pub max_reuse: u8,
    /// Slots whose counter had reached the cap when they were overwritten.
    pub exhausted_overwrites: u64,
}

/// Cyclic replay buffer. Writes go to the cursor, which advances modulo the
/// capacity, so once full the oldest sample is always the one replaced.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    slots: Vec<Sample>,
    reuse: Vec<u8>,
    cursor: usize,
    total_pushed: u64,
    total_sampled: u64,
    max_reuse: u8,
    exhausted_overwrites: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        Self {
            capacity,
            slots: Vec::new(),
            reuse: Vec::new(),
            cursor: 0,
            total_pushed: 0,
            total_sampled: 0,
            max_reuse: 0,
            exhausted_overwrites: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn slot(&self, i: usize) -> Option<&Sample> {
        self.slots.get(i)
    }

    pub fn reuse(&self, i: usize) -> Option<u8> {
        self.reuse.get(i).copied()
    }

    pub fn eligible(&self) -> usize {
        self.reuse.iter().filter(|&&r| r < MAX_REUSE).count()
    }

    pub fn stats(&self) -> BufferStats {
        BufferStats {
            len: self.len(),
            capacity: self.capacity,
            eligible: self.eligible(),
            total_pushed: self.total_pushed,
            total_sampled: self.total_sampled,
            max_reuse: self.max_reuse,
            exhausted_overwrites: self.exhausted_overwrites,
        }
    }

    /// Stores a sample at the cursor and returns its slot.
    pub fn push(&mut self, sample: Sample) -> usize {
        let slot = self.cursor;
        if slot < self.slots.len() {
            if self.reuse[slot] >= MAX_REUSE {
                self.exhausted_overwrites += 1;
            }
            self.slots[slot] = sample;
            self.reuse[slot] = 0;
        } else {
            self.slots.push(sample);
            self.reuse.push(0);
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        self.total_pushed += 1;
        slot
    }

    /// Draws `batch` distinct slots uniformly among those used fewer than
    /// [`MAX_REUSE`] times and bumps their counters. Returns the slot indices.
    pub fn sample_slots<R: Rng + ?Sized>(
        &mut self,
        batch: usize,
        rng: &mut R,
    ) -> Result<Vec<usize>, Starved> {
        let eligible: Vec<usize> = (0..self.slots.len())
            .filter(|&i| self.reuse[i] < MAX_REUSE)
            .collect();
        if batch == 0 || eligible.len() < batch {
            return Err(Starved {
                eligible: eligible.len(),
                requested: batch,
            });
        }
        let picked: Vec<usize> = index::sample(rng, eligible.len(), batch)
            .into_iter()
            .map(|i| eligible[i])
            .collect();
        for &i in &picked {
            self.reuse[i] += 1;
            self.max_reuse = self.max_reuse.max(self.reuse[i]);
        }
        self.total_sampled += batch as u64;
        Ok(picked)
    }

    pub fn sample_batch<R: Rng + ?Sized>(
        &mut self,
        batch: usize,
        rng: &mut R,
    ) -> Result<Vec<Sample>, Starved> {
        let slots = self.sample_slots(batch, rng)?;
        Ok(slots.into_iter().map(|i| self.slots[i].clone()).collect())
    }
}
