use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What happened in one training round (one episode's updates).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub episode: usize,
    pub buffer_len: usize,
    pub batch_size: usize,
    pub updates: usize,
    /// Target parameters equal the training parameters bit for bit after the
    /// refresh.
    pub target_synced: bool,
}

/// Ties the batch size to the buffer size, B = max(1, ⌊L/U⌋), and refreshes
/// the target parameters after every round of U updates.
#[derive(Debug, Clone)]
pub struct Coordinator {
    updates_per_round: usize,
    rounds: Vec<RoundRecord>,
}

impl Coordinator {
    pub fn new(updates_per_round: usize) -> Result<Self> {
        if updates_per_round == 0 {
            return Err(Error::Config("updates per round must be at least 1".into()));
        }
        Ok(Self {
            updates_per_round,
            rounds: Vec::new(),
        })
    }

    pub fn updates_per_round(&self) -> usize {
        self.updates_per_round
    }

    pub fn batch_size(&self, buffer_len: usize) -> usize {
        (buffer_len / self.updates_per_round).max(1)
    }

    /// U batches of buffer indices. When U divides L the batches partition a
    /// random permutation of the buffer; otherwise indices are drawn
    /// uniformly with replacement.
    pub fn plan<R: Rng + ?Sized>(&self, buffer_len: usize, rng: &mut R) -> Vec<Vec<usize>> {
        if buffer_len == 0 {
            return Vec::new();
        }
        let u = self.updates_per_round;
        let b = self.batch_size(buffer_len);
        if buffer_len % u == 0 {
            let mut order: Vec<usize> = (0..buffer_len).collect();
            order.shuffle(rng);
            order.chunks(b).map(<[usize]>::to_vec).collect()
        } else {
            (0..u).map(|_| (0..b).map(|_| rng.gen_range(0..buffer_len)).collect()).collect()
        }
    }

    /// Copies `params` into `target` and records the round.
    pub fn refresh(&mut self, episode: usize, buffer_len: usize, updates: usize, params: &[f64], target: &mut [f64]) {
        target.copy_from_slice(params);
        let target_synced = params.iter().zip(target.iter()).all(|(p, t)| p.to_bits() == t.to_bits());
        self.rounds.push(RoundRecord {
            episode,
            buffer_len,
            batch_size: self.batch_size(buffer_len),
            updates,
            target_synced,
        });
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    pub fn into_rounds(self) -> Vec<RoundRecord> {
        self.rounds
    }
}
