use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::quantum::{bits_to_k, k_to_bits, SingleState, MAX_PARTIES};

/// The dealer's secret `K = (k_1, …, k_L)`, each value in `[0, 2^n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Secret {
    n: usize,
    values: Vec<u64>,
}

impl Secret {
    pub fn new(n: usize, values: Vec<u64>) -> Result<Self> {
        if n == 0 || n > MAX_PARTIES {
            return Err(Error::Domain(format!("party count {n} outside [1, {MAX_PARTIES}]")));
        }
        if values.is_empty() {
            return Err(Error::Domain("secret must hold at least one value".into()));
        }
        if let Some(&bad) = values.iter().find(|&&k| k >= 1u64 << n) {
            return Err(Error::Domain(format!("secret value {bad} does not fit in {n} bits")));
        }
        Ok(Self { n, values })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, len: usize, rng: &mut R) -> Result<Self> {
        if n == 0 || n > MAX_PARTIES {
            return Err(Error::Domain(format!("party count {n} outside [1, {MAX_PARTIES}]")));
        }
        let values = (0..len).map(|_| rng.gen_range(0..1u64 << n)).collect();
        Self::new(n, values)
    }

    /// Assembles `k_j` from per-tuple bit rows `a_1 … a_n`.
    pub fn from_bit_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        let values = rows.iter().map(|r| bits_to_k(r)).collect::<Result<Vec<_>>>()?;
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// `a^j_1 … a^j_n` for tuple `j` (0-based).
    pub fn bits(&self, j: usize) -> Vec<u8> {
        k_to_bits(self.values[j], self.n).expect("values validated at construction")
    }
}

/// A classical party's per-qubit choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartyOp {
    Reflect,
    MeasureFlip,
}

impl PartyOp {
    /// 1 for measure-flip, 0 for reflect.
    pub fn bit(self) -> u8 {
        match self {
            Self::Reflect => 0,
            Self::MeasureFlip => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Self::Reflect
        } else {
            Self::MeasureFlip
        }
    }
}

/// How a party picks operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpPolicy {
    /// Independent fair coin per position.
    #[default]
    Random,
    ReflectAll,
    FlipAll,
    /// A uniformly random half of the positions (rounded down) are
    /// measure-flipped.
    Balanced,
}

/// How a party reorders its return sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReorderPolicy {
    #[default]
    Random,
    /// No reorder. Only for analysis; removes the pairing protection.
    Identity,
    /// Outgoing position `t` carries original position `t + 1 (mod len)`,
    /// so no photon returns at its own transit index.
    CyclicShift,
}

/// Which states decoys are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoyPolicy {
    #[default]
    Uniform,
    ZOnly,
    XOnly,
}

impl DecoyPolicy {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> SingleState {
        let pool: &[SingleState] = match self {
            Self::Uniform => &SingleState::ALL,
            Self::ZOnly => &[SingleState::Zero, SingleState::One],
            Self::XOnly => &[SingleState::Plus, SingleState::Minus],
        };
        *pool.choose(rng).expect("non-empty state set")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub n: usize,
    /// Number of GHZ tuples `L`.
    pub len: usize,
    pub decoys_per_party: usize,
    pub seed: u64,
    /// Largest tolerated failed-decoy fraction per party.
    pub abort_threshold: f64,
    pub op_policy: OpPolicy,
    pub reorder_policy: ReorderPolicy,
    pub decoy_policy: DecoyPolicy,
    pub record_transcript: bool,
}

impl SessionConfig {
    /// Protocol defaults: `L` decoys per party, zero error tolerance.
    pub fn new(n: usize, len: usize, seed: u64) -> Self {
        Self {
            n,
            len,
            decoys_per_party: len,
            seed,
            abort_threshold: 0.0,
            op_policy: OpPolicy::Random,
            reorder_policy: ReorderPolicy::Random,
            decoy_policy: DecoyPolicy::Uniform,
            record_transcript: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_PARTIES {
            return Err(usage(format!("n = {} outside [1, {MAX_PARTIES}]", self.n)));
        }
        if self.len == 0 {
            return Err(usage("L must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.abort_threshold) {
            return Err(usage(format!(
                "abort threshold {} outside [0, 1)",
                self.abort_threshold
            )));
        }
        Ok(())
    }

    /// Length of each `S*_i`.
    pub fn sequence_len(&self) -> usize {
        self.len + self.decoys_per_party
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoyRecord {
    pub prepared: SingleState,
    pub position: usize,
}

/// Return order: outgoing position `t` carries the qubit originally at
/// `order[t]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &o in &order {
            if o >= order.len() || std::mem::replace(&mut seen[o], true) {
                return Err(Error::ProtocolViolation(format!(
                    "order {order:?} is not a permutation"
                )));
            }
        }
        Ok(Self { order })
    }

    pub fn identity(len: usize) -> Self {
        Self { order: (0..len).collect() }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (0..len).collect();
        order.shuffle(rng);
        Self { order }
    }

    pub fn cyclic_shift(len: usize) -> Self {
        Self { order: (0..len).map(|t| (t + 1) % len).collect() }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Reorders `items` (in original order) into outgoing order.
    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.order.iter().map(|&o| items[o].clone()).collect()
    }

    /// Restores original order from an outgoing sequence.
    pub fn restore<T: Clone>(&self, outgoing: &[T]) -> Vec<T> {
        let mut out = outgoing.to_vec();
        for (t, &o) in self.order.iter().enumerate() {
            out[o] = outgoing[t].clone();
        }
        out
    }
}

/// A party's operation string `R_i` and its sifted key `R′_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationRecord {
    /// `r^h_i` per received position (1 = measure-flip).
    pub bits: Vec<u8>,
    /// Z outcome at each measure-flipped position.
    pub measured_outcomes: Vec<Option<u8>>,
    /// Bits at non-decoy positions, in sequence order; empty until sifted.
    pub sifted: Vec<u8>,
}

impl OperationRecord {
    pub fn op(&self, position: usize) -> PartyOp {
        PartyOp::from_bit(self.bits[position])
    }

    pub fn flips(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Drops the decoy positions, leaving `R′_i`.
    pub fn sift(&mut self, decoy_positions: &[usize]) {
        let mut is_decoy = vec![false; self.bits.len()];
        for &p in decoy_positions {
            is_decoy[p] = true;
        }
        self.sifted = self
            .bits
            .iter()
            .zip(&is_decoy)
            .filter(|(_, &d)| !d)
            .map(|(&b, _)| b)
            .collect();
    }
}

/// A party's public statement about one decoy position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoyAnnouncement {
    pub position: usize,
    pub op: PartyOp,
    pub outcome: Option<u8>,
}

/// Generated-qubit tally for efficiency accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QubitCounts {
    pub ghz: u64,
    pub decoy: u64,
    pub fresh: u64,
}

impl QubitCounts {
    pub fn total(&self) -> u64 {
        self.ghz + self.decoy + self.fresh
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn secret_validation() {
        assert!(Secret::new(2, vec![3, 0]).is_ok());
        assert!(matches!(Secret::new(2, vec![4]), Err(Error::Domain(_))));
        assert!(Secret::new(0, vec![0]).is_err());
        assert!(Secret::new(2, vec![]).is_err());
        assert_eq!(Secret::new(3, vec![5]).unwrap().bits(0), vec![1, 0, 1]);
    }

    #[test]
    fn permutation_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let items: Vec<u32> = (10..18).collect();
        for _ in 0..20 {
            let p = Permutation::random(items.len(), &mut rng);
            assert_eq!(p.restore(&p.apply(&items)), items);
        }
        let shift = Permutation::cyclic_shift(4);
        assert_eq!(shift.apply(&[0, 1, 2, 3]), vec![1, 2, 3, 0]);
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![1, 2]).is_err());
    }

    #[test]
    fn sifting_keeps_sequence_order() {
        let mut rec = OperationRecord {
            bits: vec![1, 0, 0, 1, 1, 0],
            measured_outcomes: vec![None; 6],
            sifted: vec![],
        };
        rec.sift(&[1, 4, 5]);
        assert_eq!(rec.sifted, vec![1, 0, 1]);
    }

    #[test]
    fn config_validation() {
        assert!(SessionConfig::new(1, 1, 0).validate().is_ok());
        assert!(SessionConfig::new(0, 1, 0).validate().is_err());
        assert!(SessionConfig::new(2, 0, 0).validate().is_err());
        let mut c = SessionConfig::new(2, 2, 0);
        c.abort_threshold = 1.0;
        assert!(c.validate().is_err());
    }
}
