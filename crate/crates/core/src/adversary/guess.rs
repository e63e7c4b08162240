use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EveReport;
use crate::protocol::Permutation;

/// How Eve turns her transit records into guesses of the parties'
/// operation bits at key positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuessStrategy {
    /// Fair coin; ignores the records.
    #[default]
    Uniform,
    /// Pairs forward and backward records at the same transit index.
    Positional,
    /// Re-pairs forward and backward classical records using the order the
    /// party announces after the qubits are stored. Probe outcomes cannot be
    /// re-paired after the fact and fall back to positional use.
    AnnouncedOrder,
}

impl GuessStrategy {
    pub fn label(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Positional => "positional",
            Self::AnnouncedOrder => "announced-order",
        }
    }
}

/// Ground truth for one party, available to the harness only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuessTruth {
    /// Full operation string `R_i` in original order.
    pub ops: Vec<u8>,
    /// Key (non-decoy) positions, public once decoys are announced.
    pub key_positions: Vec<usize>,
    /// Return order, public once announced.
    pub order: Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessOutcome {
    pub strategy: GuessStrategy,
    /// Guessed `r′` bits per party, in key-position order.
    pub guesses: Vec<Vec<u8>>,
    pub correct: usize,
    pub total: usize,
    /// Plug-in estimate, in bits, between guess and true bit.
    pub mutual_information: f64,
}

impl GuessOutcome {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

pub fn eve_guess<R: Rng + ?Sized>(
    report: &EveReport,
    strategy: GuessStrategy,
    truth: &[GuessTruth],
    rng: &mut R,
) -> GuessOutcome {
    let mut guesses = Vec::with_capacity(truth.len());
    let mut pairs = Vec::new();
    let mut correct = 0;
    for (party, t) in truth.iter().enumerate() {
        let records = report.party_records(party);
        let mut returned_at = vec![0; t.order.len()];
        for (slot, &original) in t.order.order().iter().enumerate() {
            returned_at[original] = slot;
        }
        let row: Vec<u8> = t
            .key_positions
            .iter()
            .map(|&p| {
                let out = records.get(p).copied().unwrap_or_default();
                let back_index = match strategy {
                    GuessStrategy::AnnouncedOrder => returned_at[p],
                    _ => p,
                };
                let back = records.get(back_index).and_then(|r| r.backward);
                let sent = out.fake.map(usize::from).or(out.forward);
                match (strategy, sent, back, out.backward) {
                    (GuessStrategy::Uniform, ..) => rng.gen_range(0..2),
                    (_, Some(s), Some(b), _) => ((s ^ b) & 1) as u8,
                    (_, None, _, Some(probe)) => (probe & 1) as u8,
                    _ => rng.gen_range(0..2),
                }
            })
            .collect();
        for (&g, &p) in row.iter().zip(&t.key_positions) {
            let actual = t.ops[p];
            correct += usize::from(g == actual);
            pairs.push((g as usize, actual as usize));
        }
        guesses.push(row);
    }
    GuessOutcome {
        strategy,
        guesses,
        correct,
        total: pairs.len(),
        mutual_information: mutual_information(&pairs),
    }
}

/// Plug-in mutual information (bits) of an empirical joint sample.
pub fn mutual_information(pairs: &[(usize, usize)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut xs: BTreeMap<usize, usize> = BTreeMap::new();
    let mut ys: BTreeMap<usize, usize> = BTreeMap::new();
    for &(x, y) in pairs {
        *joint.entry((x, y)).or_default() += 1;
        *xs.entry(x).or_default() += 1;
        *ys.entry(y).or_default() += 1;
    }
    let total = pairs.len() as f64;
    joint
        .iter()
        .map(|(&(x, y), &c)| {
            let pxy = c as f64 / total;
            let px = xs[&x] as f64 / total;
            let py = ys[&y] as f64 / total;
            pxy * (pxy / (px * py)).log2()
        })
        .sum::<f64>()
        .max(0.0)
}
