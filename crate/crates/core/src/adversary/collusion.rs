use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::protocol::{combine_shares, Secret};

/// Colluders' reconstruction attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollusionGuess {
    pub secret: Secret,
    /// Party indices whose shares were available.
    pub known: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollusionAccuracy {
    pub tuples: usize,
    pub tuples_correct: usize,
    /// Every bit in a known column matched the secret.
    pub known_columns_exact: bool,
}

impl CollusionAccuracy {
    pub fn per_tuple(&self) -> f64 {
        self.tuples_correct as f64 / self.tuples as f64
    }

    pub fn full_secret(&self) -> bool {
        self.tuples_correct == self.tuples
    }
}

/// Combines the shares that are present exactly and guesses every missing
/// column bit with a fair coin.
pub fn collusion_reconstruct<R: Rng + ?Sized>(
    published: &[Vec<u8>],
    shares: &[Option<&[u8]>],
    rng: &mut R,
) -> Result<CollusionGuess> {
    if shares.iter().all(Option::is_some) {
        return Err(usage("all shares present; use ordinary reconstruction"));
    }
    let rows: Vec<Vec<u8>> = combine_shares(published, shares)?
        .into_iter()
        .map(|row| row.into_iter().map(|b| b.unwrap_or_else(|| rng.gen_range(0..2))).collect())
        .collect();
    let known = shares.iter().enumerate().filter(|(_, s)| s.is_some()).map(|(i, _)| i).collect();
    Ok(CollusionGuess { secret: Secret::from_bit_rows(&rows)?, known })
}

pub fn collusion_accuracy(guess: &CollusionGuess, truth: &Secret) -> CollusionAccuracy {
    let tuples = truth.len();
    let tuples_correct = guess.secret.values().iter().zip(truth.values()).filter(|(a, b)| a == b).count();
    let known_columns_exact = (0..tuples).all(|j| {
        let (g, t) = (guess.secret.bits(j), truth.bits(j));
        guess.known.iter().all(|&i| g[i] == t[i])
    });
    CollusionAccuracy { tuples, tuples_correct, known_columns_exact }
}
