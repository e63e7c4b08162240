//! Exhaustive correctness checks driven by forced measurement outcomes.

use std::fmt;

use serde::Serialize;

use crate::adversary::AttackModel;
use crate::error::{usage, Result};
use crate::protocol::{run_session_with, PartyOp, Secret, SessionConfig, SessionHooks};
use crate::quantum::{inner_product, GhzSign, GhzSpec, StatePool};
use crate::seed::derive_seed;

/// Largest number of sessions one `(n, L)` cell may enumerate.
pub const MAX_CELL_SESSIONS: u64 = 1 << 22;
pub const GHZ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub n_max: usize,
    pub l_max: usize,
    /// Flip the published bit of party `i` on tuple `j`, given as `(i, j)`.
    pub inject_fault: Option<(usize, usize)>,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { n_max: 3, l_max: 2, inject_fault: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub n: usize,
    pub l: usize,
    pub secret: Vec<u64>,
    /// Key operation bits, `[i][j]`.
    pub key_ops: Vec<Vec<u8>>,
    pub branches: Vec<u8>,
    /// `(party, tuple)` of a wrong published bit, 0-based.
    pub location: Option<(usize, usize)>,
    pub detail: String,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} L={} secret={:?} ops={:?} branches={:?}: ", self.n, self.l, self.secret, self.key_ops, self.branches)?;
        if let Some((i, j)) = self.location {
            write!(f, "party i={} tuple j={}: ", i + 1, j + 1)?;
        }
        f.write_str(&self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GhzFailure {
    pub n: usize,
    pub k: u64,
    pub k_prime: u64,
    pub same_sign: bool,
    pub overlap: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub sessions: u64,
    pub ghz_pairs: u64,
    pub failures: Vec<Counterexample>,
    pub ghz_failures: Vec<GhzFailure>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.ghz_failures.is_empty()
    }

    fn merge(&mut self, other: VerifyReport) {
        self.sessions += other.sessions;
        self.ghz_pairs += other.ghz_pairs;
        self.failures.extend(other.failures);
        self.ghz_failures.extend(other.ghz_failures);
    }
}

pub fn verify_all(options: &VerifyOptions) -> Result<VerifyReport> {
    if options.n_max == 0 || options.l_max == 0 {
        return Err(usage("n_max and L_max must be at least 1"));
    }
    let mut report = VerifyReport::default();
    for n in 1..=options.n_max {
        report.merge(verify_ghz_orthonormality(n));
        for l in 1..=options.l_max {
            report.merge(verify_algebra(n, l, options)?);
        }
    }
    Ok(report)
}

/// Every secret, every key-operation assignment and every GHZ collapse
/// branch for one `(n, L)`. Checks `m′ = a ⊕ r′` entrywise, a clean decoy
/// check, and exact reconstruction.
pub fn verify_algebra(n: usize, l: usize, options: &VerifyOptions) -> Result<VerifyReport> {
    let bits = n * l;
    let cell = 1u64
        .checked_shl((2 * bits + l) as u32)
        .filter(|&c| bits < 32 && c <= MAX_CELL_SESSIONS)
        .ok_or_else(|| usage(format!("n = {n}, L = {l} is too large to enumerate exhaustively")))?;
    let mut report = VerifyReport::default();
    let mut index = 0u64;
    for secret_code in 0..1u64 << bits {
        let values: Vec<u64> = (0..l).map(|j| (secret_code >> (j * n)) & ((1 << n) - 1)).collect();
        let secret = Secret::new(n, values)?;
        for op_code in 0..1u64 << bits {
            let key_ops: Vec<Vec<PartyOp>> = (0..n)
                .map(|i| (0..l).map(|j| PartyOp::from_bit(((op_code >> (i * l + j)) & 1) as u8)).collect())
                .collect();
            for branch_code in 0..1u64 << l {
                let branches: Vec<u8> = (0..l).map(|j| ((branch_code >> j) & 1) as u8).collect();
                let mut config = SessionConfig::new(n, l, derive_seed(options.seed, index));
                config.record_transcript = false;
                index += 1;
                let hooks = SessionHooks {
                    key_ops: Some(key_ops.clone()),
                    ghz_branches: Some(branches.clone()),
                    flip_published: options.inject_fault.filter(|&(i, j)| i < n && j < l).map(|(i, j)| (j, i)),
                    ..Default::default()
                };
                let result = run_session_with(&config, &secret, &AttackModel::None, &hooks)?;
                report.sessions += 1;
                let op_bits: Vec<Vec<u8>> = key_ops.iter().map(|row| row.iter().map(|o| o.bit()).collect()).collect();
                let counterexample = |location: Option<(usize, usize)>, detail: String| Counterexample {
                    n,
                    l,
                    secret: secret.values().to_vec(),
                    key_ops: op_bits.clone(),
                    branches: branches.clone(),
                    location,
                    detail,
                };
                let Some(published) = &result.published else {
                    report.failures.push(counterexample(None, format!("honest session aborted: {:?}", result.outcome)));
                    continue;
                };
                for (j, row) in published.iter().enumerate() {
                    let a = secret.bits(j);
                    for (i, &got) in row.iter().enumerate() {
                        let expected = a[i] ^ result.records[i].sifted[j];
                        if got != expected {
                            report.failures.push(counterexample(
                                Some((i, j)),
                                format!("published m' = {got}, expected a xor r' = {expected}"),
                            ));
                        }
                    }
                }
                match result.outcome.secret() {
                    Some(got) if got != &secret => {
                        report.failures.push(counterexample(None, format!("reconstructed {:?}", got.values())));
                    }
                    _ => {}
                }
            }
        }
    }
    debug_assert_eq!(report.sessions, cell);
    Ok(report)
}

/// `⟨G^s_k | G^s′_k′⟩ = δ_kk′ δ_ss′` for every pair at party count `n`.
pub fn verify_ghz_orthonormality(n: usize) -> VerifyReport {
    let mut pool = StatePool::new();
    let mut states = Vec::new();
    for sign in [GhzSign::Plus, GhzSign::Minus] {
        for k in 0..1u64 << n {
            let spec = GhzSpec::new(n, k, sign).expect("k in range");
            let slots = pool.prepare_ghz(&spec);
            states.push((k, sign, pool.factor_of(slots[0]).expect("fresh factor").clone()));
        }
    }
    let mut report = VerifyReport::default();
    for (k, s, a) in &states {
        for (k2, s2, b) in &states {
            let overlap = inner_product(a, b).expect("same shape");
            let expected = if k == k2 && s == s2 { 1.0 } else { 0.0 };
            let deviation = ((overlap.re - expected).powi(2) + overlap.im.powi(2)).sqrt();
            report.ghz_pairs += 1;
            if deviation >= GHZ_TOL {
                report.ghz_failures.push(GhzFailure { n, k: *k, k_prime: *k2, same_sign: s == s2, overlap: overlap.re });
            }
        }
    }
    report
}
