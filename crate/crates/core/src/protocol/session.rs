//! Full-session orchestration.

use rand::RngCore;
use serde::Serialize;

use super::dealer::{announce_decoy_ops, dealer_check, dealer_measure_publish, dealer_prepare, CheckTally, DealerOutcomes};
use super::party::{party_process_with, PartyBehavior};
use super::reconstruct::reconstruct;
use super::transcript::{party_name, EventKind, Transcript, ALL_PARTIES, DEALER};
use super::types::{DecoyRecord, OperationRecord, PartyOp, Permutation, QubitCounts, Secret, SessionConfig};
use crate::adversary::{
    collusion_accuracy, collusion_reconstruct, AttackModel, ChannelTap, CollusionAccuracy, CollusionGuess, EveReport,
    GuessTruth,
};
use crate::error::{usage, Result};
use crate::quantum::{SlotId, StatePool};
use crate::seed::stream_rng;

const DEALER_STREAM: u64 = 0;
const EVE_STREAM: u64 = 1;
const PARTY_STREAM_BASE: u64 = 2;
const COLLUSION_STREAM: u64 = u64::MAX;

/// Test and analysis overrides. Every field defaults to "no override".
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SessionHooks {
    /// Operation of party `i` on key tuple `j`, indexed `[i][j]`.
    pub key_ops: Option<Vec<Vec<PartyOp>>>,
    /// Operation of party `i` on its `d`-th decoy, indexed `[i][d]`.
    pub decoy_ops: Option<Vec<Vec<PartyOp>>>,
    /// Forces GHZ tuple `j` into its `b`-branch: `S_0` measures `b` and
    /// party `i` measures `a_i ⊕ b`.
    pub ghz_branches: Option<Vec<u8>>,
    /// Flips the published bit `m′^j_i` given as `(j, i)`.
    pub flip_published: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SessionOutcome {
    Reconstructed { secret: Secret },
    Aborted { party: usize, errors: usize, checked: usize },
}

impl SessionOutcome {
    pub fn is_abort(&self) -> bool {
        matches!(self, Self::Aborted { .. })
    }

    pub fn secret(&self) -> Option<&Secret> {
        match self {
            Self::Reconstructed { secret } => Some(secret),
            Self::Aborted { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CollusionResult {
    pub guess: CollusionGuess,
    pub accuracy: CollusionAccuracy,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionResult {
    pub config: SessionConfig,
    pub secret: Secret,
    pub attack: String,
    pub outcome: SessionOutcome,
    /// Per-party decoy check tallies.
    pub tallies: Vec<CheckTally>,
    #[serde(skip)]
    pub transcript: Transcript,
    pub records: Vec<OperationRecord>,
    pub permutations: Vec<Permutation>,
    pub decoys: Vec<Vec<DecoyRecord>>,
    pub key_positions: Vec<Vec<usize>>,
    /// `m′` indexed `[j][i]`; absent on abort.
    pub published: Option<Vec<Vec<u8>>>,
    pub dealer_outcomes: Option<DealerOutcomes>,
    pub counts: QubitCounts,
    /// Every slot the pool allocated, including adversary probes.
    pub slots_created: u64,
    pub eve: Option<EveReport>,
    pub collusion: Option<CollusionResult>,
}

impl SessionResult {
    pub fn decoy_errors(&self) -> usize {
        self.tallies.iter().map(|t| t.errors).sum()
    }

    pub fn decoys_checked(&self) -> usize {
        self.tallies.iter().map(|t| t.checked).sum()
    }

    pub fn decoy_positions(&self, party: usize) -> Vec<usize> {
        self.decoys[party].iter().map(|d| d.position).collect()
    }

    /// Harness-side ground truth for scoring Eve's guesses.
    pub fn guess_truth(&self) -> Vec<GuessTruth> {
        self.records
            .iter()
            .zip(&self.permutations)
            .zip(&self.key_positions)
            .map(|((record, order), keys)| GuessTruth {
                ops: record.bits.clone(),
                key_positions: keys.clone(),
                order: order.clone(),
            })
            .collect()
    }
}

pub fn run_session(config: &SessionConfig, secret: &Secret, attack: &AttackModel) -> Result<SessionResult> {
    run_session_with(config, secret, attack, &SessionHooks::default())
}

pub fn run_session_with(
    config: &SessionConfig,
    secret: &Secret,
    attack: &AttackModel,
    hooks: &SessionHooks,
) -> Result<SessionResult> {
    attack.validate(config.n)?;
    let mut tap = attack.tap();
    let mut result = run_session_with_tap(config, secret, Some(tap.as_mut()), hooks)?;
    result.attack = attack.label().into();

    if let (AttackModel::Collusion { dishonest }, Some(published)) = (attack, &result.published) {
        let shares: Vec<Option<&[u8]>> = (0..config.n)
            .map(|i| dishonest.contains(&i).then(|| result.records[i].sifted.as_slice()))
            .collect();
        let mut rng = stream_rng(config.seed, COLLUSION_STREAM);
        let guess = collusion_reconstruct(published, &shares, &mut rng)?;
        let accuracy = collusion_accuracy(&guess, secret);
        result.collusion = Some(CollusionResult { guess, accuracy });
    }
    Ok(result)
}

/// Runs one session, routing every qubit transit through `tap`.
pub fn run_session_with_tap(
    config: &SessionConfig,
    secret: &Secret,
    mut tap: Option<&mut dyn ChannelTap>,
    hooks: &SessionHooks,
) -> Result<SessionResult> {
    config.validate()?;
    let n = config.n;
    let mut dealer_rng = stream_rng(config.seed, DEALER_STREAM);
    let mut eve_rng = stream_rng(config.seed, EVE_STREAM);
    let mut pool = StatePool::new();
    let mut transcript = Transcript::new(config.record_transcript);

    let (mut dealer, outgoing) = dealer_prepare(config, secret, &mut pool, &mut dealer_rng)?;
    let mut counts = QubitCounts {
        ghz: (config.len * (n + 1)) as u64,
        decoy: (n * config.decoys_per_party) as u64,
        fresh: 0,
    };

    if let Some(branches) = &hooks.ghz_branches {
        if branches.len() != config.len {
            return Err(usage("one GHZ branch per tuple required"));
        }
        for (j, &b) in branches.iter().enumerate() {
            let a = secret.bits(j);
            let tuple = dealer.tuple(j).to_vec();
            pool.force_outcome(tuple[0], usize::from(b & 1));
            for i in 0..n {
                pool.force_outcome(tuple[i + 1], usize::from(a[i] ^ (b & 1)));
            }
        }
    }

    let behavior = PartyBehavior { ops: config.op_policy, reorder: config.reorder_policy };
    let mut outputs = Vec::with_capacity(n);
    let mut returned_all = Vec::with_capacity(n);
    for (i, sequence) in outgoing.iter().enumerate() {
        let ledger = dealer.party(i);
        let mut is_decoy = vec![false; sequence.len()];
        for d in ledger.decoys() {
            is_decoy[d.position] = true;
        }
        let script = party_script(hooks, i, ledger.key_positions(), &ledger.decoy_positions(), sequence.len())?;

        let mut delivered = Vec::with_capacity(sequence.len());
        for (t, &slot) in sequence.iter().enumerate() {
            transcript.push(DEALER, party_name(i), EventKind::QubitForward, || format!("position {t}"), Some(is_decoy[t]));
            delivered.push(forward(&mut tap, i, t, slot, &mut pool, &mut eve_rng)?);
        }

        let mut party_rng = stream_rng(config.seed, PARTY_STREAM_BASE + i as u64);
        let output = party_process_with(&delivered, &mut pool, &mut party_rng, behavior, script.as_deref())?;
        counts.fresh += output.record.flips() as u64;

        let mut returned = Vec::with_capacity(output.outgoing.len());
        for (t, &slot) in output.outgoing.iter().enumerate() {
            let original = output.permutation.order()[t];
            transcript.push(party_name(i), DEALER, EventKind::QubitReturn, || format!("position {t}"), Some(is_decoy[original]));
            returned.push(backward(&mut tap, i, t, slot, &mut pool, &mut eve_rng)?);
        }
        outputs.push(output);
        returned_all.push(returned);
    }

    // Orders are announced only after the dealer holds every returned qubit.
    for (i, output) in outputs.iter().enumerate() {
        transcript.push(party_name(i), DEALER, EventKind::OrderAnnouncement, || format!("{:?}", output.permutation.order()), None);
    }
    let mut tallies = Vec::with_capacity(n);
    for (i, output) in outputs.iter().enumerate() {
        let positions = dealer.party(i).decoy_positions();
        transcript.push(DEALER, party_name(i), EventKind::DecoyPositions, || format!("{positions:?}"), None);
        let ops = announce_decoy_ops(&output.record, &positions);
        transcript.push(
            party_name(i),
            DEALER,
            EventKind::DecoyOperations,
            || ops.iter().map(|a| format!("{}:{}{}", a.position, a.op.bit(), a.outcome.map_or(String::new(), |o| format!("/{o}")))).collect::<Vec<_>>().join(" "),
            None,
        );
        let tally = dealer_check(&mut dealer, i, &returned_all[i], &output.permutation, &ops, &mut pool, &mut dealer_rng)?;
        transcript.push(DEALER, party_name(i), EventKind::CheckResult, || format!("{}/{} failed", tally.errors, tally.checked), None);
        tallies.push(tally);
    }

    let mut records: Vec<OperationRecord> = outputs.iter().map(|o| o.record.clone()).collect();
    let permutations: Vec<Permutation> = outputs.into_iter().map(|o| o.permutation).collect();
    let decoys: Vec<Vec<DecoyRecord>> = dealer.parties().iter().map(|p| p.decoys().to_vec()).collect();
    let key_positions: Vec<Vec<usize>> = dealer.parties().iter().map(|p| p.key_positions().to_vec()).collect();

    let failing = tallies
        .iter()
        .enumerate()
        .find(|(_, t)| t.error_fraction() > config.abort_threshold);
    let (outcome, published) = if let Some((party, tally)) = failing {
        transcript.push(DEALER, ALL_PARTIES, EventKind::Abort, || format!("{} failed {}/{}", party_name(party), tally.errors, tally.checked), None);
        (SessionOutcome::Aborted { party, errors: tally.errors, checked: tally.checked }, None)
    } else {
        let mut published = dealer_measure_publish(&mut dealer, &mut pool, &mut dealer_rng)?;
        if let Some((j, i)) = hooks.flip_published {
            let bit = published
                .get_mut(j)
                .and_then(|row| row.get_mut(i))
                .ok_or_else(|| usage(format!("no published bit at tuple {j}, party {i}")))?;
            *bit ^= 1;
        }
        transcript.push(DEALER, ALL_PARTIES, EventKind::Publish, || format!("{published:?}"), None);
        for (record, d) in records.iter_mut().zip(&decoys) {
            let positions: Vec<usize> = d.iter().map(|d| d.position).collect();
            record.sift(&positions);
        }
        let shares: Vec<Option<&[u8]>> = records.iter().map(|r| Some(r.sifted.as_slice())).collect();
        let secret = reconstruct(&published, &shares)?;
        (SessionOutcome::Reconstructed { secret }, Some(published))
    };

    Ok(SessionResult {
        config: config.clone(),
        secret: secret.clone(),
        attack: tap.as_ref().map_or("none", |t| t.name()).to_string(),
        outcome,
        tallies,
        transcript,
        records,
        permutations,
        decoys,
        key_positions,
        published,
        dealer_outcomes: dealer.outcomes().cloned(),
        counts,
        slots_created: pool.slots_created(),
        eve: tap.as_ref().map(|t| t.report()),
        collusion: None,
    })
}

fn forward(
    tap: &mut Option<&mut dyn ChannelTap>,
    party: usize,
    position: usize,
    slot: SlotId,
    pool: &mut StatePool,
    rng: &mut dyn RngCore,
) -> Result<SlotId> {
    match tap {
        Some(t) => t.on_forward(party, position, slot, pool, rng),
        None => Ok(slot),
    }
}

fn backward(
    tap: &mut Option<&mut dyn ChannelTap>,
    party: usize,
    position: usize,
    slot: SlotId,
    pool: &mut StatePool,
    rng: &mut dyn RngCore,
) -> Result<SlotId> {
    match tap {
        Some(t) => t.on_backward(party, position, slot, pool, rng),
        None => Ok(slot),
    }
}

fn party_script(
    hooks: &SessionHooks,
    party: usize,
    key_positions: &[usize],
    decoy_positions: &[usize],
    len: usize,
) -> Result<Option<Vec<Option<PartyOp>>>> {
    if hooks.key_ops.is_none() && hooks.decoy_ops.is_none() {
        return Ok(None);
    }
    let mut script = vec![None; len];
    for (ops, positions, what) in [(&hooks.key_ops, key_positions, "key"), (&hooks.decoy_ops, decoy_positions, "decoy")] {
        if let Some(ops) = ops {
            let row = ops.get(party).ok_or_else(|| usage(format!("no scripted {what} operations for party {party}")))?;
            if row.len() != positions.len() {
                return Err(usage(format!("party {party} needs {} scripted {what} operations", positions.len())));
            }
            for (&p, &op) in positions.iter().zip(row) {
                script[p] = Some(op);
            }
        }
    }
    Ok(Some(script))
}
