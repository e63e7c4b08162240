use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::check::decoy_expectation;
use super::types::{DecoyAnnouncement, DecoyRecord, Permutation, PartyOp, Secret, SessionConfig};
use crate::error::{usage, Error, Result};
use crate::quantum::{Basis, GhzSpec, SlotId, StatePool};

/// Failed and total decoy checks for one party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CheckTally {
    pub errors: usize,
    pub checked: usize,
}

impl CheckTally {
    pub fn error_fraction(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.errors as f64 / self.checked as f64
        }
    }
}

/// The dealer's bookkeeping for one party's sequence `S*_i`.
#[derive(Debug, Clone)]
pub struct PartyLedger {
    sent: Vec<SlotId>,
    decoys: Vec<DecoyRecord>,
    key_positions: Vec<usize>,
    restored: Option<Vec<SlotId>>,
    tally: Option<CheckTally>,
}

impl PartyLedger {
    pub fn sent(&self) -> &[SlotId] {
        &self.sent
    }

    pub fn decoys(&self) -> &[DecoyRecord] {
        &self.decoys
    }

    pub fn decoy_positions(&self) -> Vec<usize> {
        self.decoys.iter().map(|d| d.position).collect()
    }

    /// Position of `g^j_i` in `S*_i`, for each tuple `j`.
    pub fn key_positions(&self) -> &[usize] {
        &self.key_positions
    }

    pub fn tally(&self) -> Option<CheckTally> {
        self.tally
    }
}

/// Dealer-side measurement results (private) and the published `m′`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DealerOutcomes {
    /// `m^j_0`.
    pub m0: Vec<u8>,
    /// `m^j_i`, indexed `[j][i]`.
    pub m: Vec<Vec<u8>>,
    /// `m′^j_i = m^j_i ⊕ m^j_0`, indexed `[j][i]`.
    pub m_prime: Vec<Vec<u8>>,
}

#[derive(Debug, Clone)]
pub struct DealerState {
    secret: Secret,
    specs: Vec<GhzSpec>,
    tuples: Vec<Vec<SlotId>>,
    parties: Vec<PartyLedger>,
    outcomes: Option<DealerOutcomes>,
}

impl DealerState {
    pub fn secret(&self) -> &Secret {
        &self.secret
    }

    pub fn specs(&self) -> &[GhzSpec] {
        &self.specs
    }

    /// `S_0`, the slots the dealer keeps.
    pub fn kept(&self) -> Vec<SlotId> {
        self.tuples.iter().map(|t| t[0]).collect()
    }

    /// All `n+1` slots of tuple `j`.
    pub fn tuple(&self, j: usize) -> &[SlotId] {
        &self.tuples[j]
    }

    pub fn party(&self, i: usize) -> &PartyLedger {
        &self.parties[i]
    }

    pub fn parties(&self) -> &[PartyLedger] {
        &self.parties
    }

    pub fn outcomes(&self) -> Option<&DealerOutcomes> {
        self.outcomes.as_ref()
    }

    pub fn all_checked(&self) -> bool {
        self.parties.iter().all(|p| p.tally.is_some())
    }
}

/// Prepares the `L` GHZ tuples and each party's decoy-interleaved sequence.
/// Returns the dealer state and `S*_1 … S*_n`.
pub fn dealer_prepare<R: Rng + ?Sized>(
    config: &SessionConfig,
    secret: &Secret,
    pool: &mut StatePool,
    rng: &mut R,
) -> Result<(DealerState, Vec<Vec<SlotId>>)> {
    config.validate()?;
    if secret.n() != config.n || secret.len() != config.len {
        return Err(usage(format!(
            "secret has n = {}, L = {} but the session expects n = {}, L = {}",
            secret.n(),
            secret.len(),
            config.n,
            config.len
        )));
    }
    let specs = secret
        .values()
        .iter()
        .map(|&k| GhzSpec::plus(config.n, k))
        .collect::<Result<Vec<_>>>()?;
    let tuples: Vec<Vec<SlotId>> = specs.iter().map(|s| pool.prepare_ghz(s)).collect();

    let total = config.sequence_len();
    let mut parties = Vec::with_capacity(config.n);
    for i in 1..=config.n {
        let mut is_decoy = vec![false; total];
        for p in sample(rng, total, config.decoys_per_party) {
            is_decoy[p] = true;
        }
        let mut sent = Vec::with_capacity(total);
        let mut decoys = Vec::with_capacity(config.decoys_per_party);
        let mut key_positions = Vec::with_capacity(config.len);
        let mut ghz = tuples.iter().map(|t| t[i]);
        for (position, &decoy) in is_decoy.iter().enumerate() {
            if decoy {
                let prepared = config.decoy_policy.draw(rng);
                decoys.push(DecoyRecord { prepared, position });
                sent.push(pool.prepare_single(prepared));
            } else {
                key_positions.push(position);
                sent.push(ghz.next().expect("L non-decoy positions"));
            }
        }
        parties.push(PartyLedger { sent, decoys, key_positions, restored: None, tally: None });
    }
    let outgoing = parties.iter().map(|p| p.sent.clone()).collect();
    let state = DealerState { secret: secret.clone(), specs, tuples, parties, outcomes: None };
    Ok((state, outgoing))
}

/// Restores party `party`'s returned sequence, measures every decoy in the
/// basis its announcement calls for, and counts failed checks.
pub fn dealer_check<R: Rng + ?Sized>(
    state: &mut DealerState,
    party: usize,
    returned: &[SlotId],
    announced_order: &Permutation,
    announced_ops: &[DecoyAnnouncement],
    pool: &mut StatePool,
    rng: &mut R,
) -> Result<CheckTally> {
    let ledger = state
        .parties
        .get_mut(party)
        .ok_or_else(|| usage(format!("no party with index {party}")))?;
    if ledger.tally.is_some() {
        return Err(usage(format!("party {party} was already checked")));
    }
    if returned.len() != ledger.sent.len() || announced_order.len() != ledger.sent.len() {
        return Err(Error::ProtocolViolation(format!(
            "expected {} returned qubits and order entries, got {} and {}",
            ledger.sent.len(),
            returned.len(),
            announced_order.len()
        )));
    }
    let mut announced: Vec<DecoyAnnouncement> = announced_ops.to_vec();
    announced.sort_by_key(|a| a.position);
    let positions: Vec<usize> = announced.iter().map(|a| a.position).collect();
    if positions != ledger.decoy_positions() {
        return Err(Error::ProtocolViolation(
            "operation announcement does not cover exactly the decoy positions".into(),
        ));
    }

    let restored = announced_order.restore(returned);
    let mut tally = CheckTally::default();
    for (decoy, announcement) in ledger.decoys.iter().zip(&announced) {
        let expectation = decoy_expectation(decoy.prepared, announcement.op, announcement.outcome)
            .map_err(|e| Error::ProtocolViolation(e.to_string()))?;
        let slot = restored[decoy.position];
        let outcome = pool.measure(slot, expectation.dealer_basis, rng)?;
        pool.discard(slot)?;
        tally.checked += 1;
        if !expectation.passes(outcome) {
            tally.errors += 1;
        }
    }
    ledger.restored = Some(restored);
    ledger.tally = Some(tally);
    Ok(tally)
}

/// Measures `S_0` and every retained returned qubit in Z and computes
/// `m′^j_i = m^j_i ⊕ m^j_0`, indexed `[j][i]`.
pub fn dealer_measure_publish<R: Rng + ?Sized>(
    state: &mut DealerState,
    pool: &mut StatePool,
    rng: &mut R,
) -> Result<Vec<Vec<u8>>> {
    if !state.all_checked() {
        return Err(usage("decoy checks must complete before publishing"));
    }
    if state.outcomes.is_some() {
        return Err(usage("results were already published"));
    }
    let n = state.parties.len();
    let mut m0 = Vec::with_capacity(state.tuples.len());
    let mut m = Vec::with_capacity(state.tuples.len());
    for (j, tuple) in state.tuples.iter().enumerate() {
        let kept = tuple[0];
        let bit0 = pool.measure(kept, Basis::Z, rng)?;
        pool.discard(kept)?;
        m0.push(bit0);
        let mut row = Vec::with_capacity(n);
        for ledger in &state.parties {
            let restored = ledger.restored.as_ref().expect("checked parties are restored");
            let slot = restored[ledger.key_positions[j]];
            let bit = pool.measure(slot, Basis::Z, rng)?;
            pool.discard(slot)?;
            row.push(bit);
        }
        m.push(row);
    }
    let m_prime: Vec<Vec<u8>> = m
        .iter()
        .zip(&m0)
        .map(|(row, b0)| row.iter().map(|b| b ^ b0).collect())
        .collect();
    state.outcomes = Some(DealerOutcomes { m0, m, m_prime: m_prime.clone() });
    Ok(m_prime)
}

/// Announcements a party makes for the given decoy positions.
pub fn announce_decoy_ops(record: &super::types::OperationRecord, decoy_positions: &[usize]) -> Vec<DecoyAnnouncement> {
    decoy_positions
        .iter()
        .map(|&position| {
            let op = record.op(position);
            let outcome = match op {
                PartyOp::MeasureFlip => record.measured_outcomes[position],
                PartyOp::Reflect => None,
            };
            DecoyAnnouncement { position, op, outcome }
        })
        .collect()
}
