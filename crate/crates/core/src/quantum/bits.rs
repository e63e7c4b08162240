//! Big-endian bit encoding of GHZ indices.
//!
//! A tuple index `k` over `n` parties is written `a_1 … a_n` with `a_1` the
//! most significant bit, so party `i` always holds the bit of weight
//! `2^(n-i)`.

use crate::error::{Error, Result};

/// Largest party count whose index space fits in a `u64`.
pub const MAX_PARTIES: usize = 63;

pub fn k_to_bits(k: u64, n: usize) -> Result<Vec<u8>> {
    if n == 0 || n > MAX_PARTIES {
        return Err(Error::Domain(format!("party count {n} outside [1, {MAX_PARTIES}]")));
    }
    if k >= 1u64 << n {
        return Err(Error::Domain(format!("k = {k} does not fit in {n} bits")));
    }
    Ok((0..n).map(|i| ((k >> (n - 1 - i)) & 1) as u8).collect())
}

pub fn bits_to_k(bits: &[u8]) -> Result<u64> {
    if bits.is_empty() {
        return Err(Error::Domain("empty bit list".into()));
    }
    if bits.len() > MAX_PARTIES {
        return Err(Error::Domain(format!("{} bits exceed a u64 index", bits.len())));
    }
    bits.iter().try_fold(0u64, |acc, &b| match b {
        0 | 1 => Ok((acc << 1) | u64::from(b)),
        other => Err(Error::Domain(format!("bit value {other} is not 0 or 1"))),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GhzSign {
    Plus,
    Minus,
}

/// Classical description of one `|G±_k⟩` instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GhzSpec {
    n: usize,
    k: u64,
    sign: GhzSign,
    a_bits: Vec<u8>,
}

impl GhzSpec {
    pub fn new(n: usize, k: u64, sign: GhzSign) -> Result<Self> {
        let a_bits = k_to_bits(k, n)?;
        Ok(Self { n, k, sign, a_bits })
    }

    pub fn plus(n: usize, k: u64) -> Result<Self> {
        Self::new(n, k, GhzSign::Plus)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn sign(&self) -> GhzSign {
        self.sign
    }

    /// `a_1 … a_n`.
    pub fn a_bits(&self) -> &[u8] {
        &self.a_bits
    }

    /// `ā_1 … ā_n`.
    pub fn complement_bits(&self) -> Vec<u8> {
        self.a_bits.iter().map(|b| b ^ 1).collect()
    }

    /// Basis-state indices (slot 0 most significant) of the two branches
    /// `|0 a_1…a_n⟩` and `|1 ā_1…ā_n⟩`.
    pub fn branch_indices(&self) -> (usize, usize) {
        let width = self.n + 1;
        let low = self.k as usize;
        let high = (1usize << (width - 1)) | (!low & ((1usize << self.n) - 1));
        (low, high)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encodes_examples() {
        assert_eq!(k_to_bits(2, 2).unwrap(), vec![1, 0]);
        assert_eq!(k_to_bits(0, 3).unwrap(), vec![0, 0, 0]);
        assert_eq!(k_to_bits(5, 3).unwrap(), vec![1, 0, 1]);
        assert_eq!(bits_to_k(&[1, 1]).unwrap(), 3);
        assert_eq!(bits_to_k(&[0]).unwrap(), 0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(k_to_bits(4, 2), Err(Error::Domain(_))));
        assert!(matches!(k_to_bits(0, 0), Err(Error::Domain(_))));
        assert!(matches!(bits_to_k(&[]), Err(Error::Domain(_))));
        assert!(matches!(bits_to_k(&[0, 2]), Err(Error::Domain(_))));
    }

    #[test]
    fn round_trips_exhaustively() {
        for n in 1..=10 {
            for k in 0..(1u64 << n) {
                assert_eq!(bits_to_k(&k_to_bits(k, n).unwrap()).unwrap(), k);
            }
        }
    }

    #[test]
    fn complement_bits_xor_to_one() {
        let spec = GhzSpec::plus(4, 0b1011).unwrap();
        for (a, c) in spec.a_bits().iter().zip(spec.complement_bits()) {
            assert_eq!(a ^ c, 1);
        }
    }

    #[test]
    fn branch_indices_match_bit_strings() {
        let spec = GhzSpec::plus(2, 1).unwrap();
        assert_eq!(spec.branch_indices(), (0b001, 0b110));
        let spec = GhzSpec::new(2, 2, GhzSign::Minus).unwrap();
        assert_eq!(spec.branch_indices(), (0b010, 0b101));
    }
}
