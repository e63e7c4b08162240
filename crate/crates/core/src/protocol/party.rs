use rand::seq::index::sample;
use rand::Rng;

use super::types::{OpPolicy, OperationRecord, PartyOp, Permutation, ReorderPolicy};
use crate::error::Result;
use crate::quantum::{Basis, SingleState, SlotId, StatePool};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PartyBehavior {
    pub ops: OpPolicy,
    pub reorder: ReorderPolicy,
}

#[derive(Debug, Clone)]
pub struct PartyOutput {
    /// `S′_i`, in return order.
    pub outgoing: Vec<SlotId>,
    pub record: OperationRecord,
    pub permutation: Permutation,
}

/// Measure-flip or reflect each received qubit at random, then reorder.
pub fn party_process<R: Rng + ?Sized>(received: &[SlotId], pool: &mut StatePool, rng: &mut R) -> Result<PartyOutput> {
    party_process_with(received, pool, rng, PartyBehavior::default(), None)
}

/// As [`party_process`], with an explicit behaviour. `scripted[h] = Some(op)`
/// overrides the policy at position `h`.
pub fn party_process_with<R: Rng + ?Sized>(
    received: &[SlotId],
    pool: &mut StatePool,
    rng: &mut R,
    behavior: PartyBehavior,
    scripted: Option<&[Option<PartyOp>]>,
) -> Result<PartyOutput> {
    let len = received.len();
    let mut ops: Vec<PartyOp> = match behavior.ops {
        OpPolicy::Random => (0..len).map(|_| PartyOp::from_bit(rng.gen_bool(0.5) as u8)).collect(),
        OpPolicy::ReflectAll => vec![PartyOp::Reflect; len],
        OpPolicy::FlipAll => vec![PartyOp::MeasureFlip; len],
        OpPolicy::Balanced => {
            let mut ops = vec![PartyOp::Reflect; len];
            for h in sample(rng, len, len / 2) {
                ops[h] = PartyOp::MeasureFlip;
            }
            ops
        }
    };
    if let Some(script) = scripted {
        for (op, forced) in ops.iter_mut().zip(script) {
            if let Some(f) = forced {
                *op = *f;
            }
        }
    }

    let mut emitted = Vec::with_capacity(len);
    let mut measured_outcomes = Vec::with_capacity(len);
    for (&slot, op) in received.iter().zip(&ops) {
        match op {
            PartyOp::Reflect => {
                emitted.push(slot);
                measured_outcomes.push(None);
            }
            PartyOp::MeasureFlip => {
                let outcome = pool.measure(slot, Basis::Z, rng)?;
                pool.discard(slot)?;
                emitted.push(pool.prepare_single(SingleState::computational(outcome ^ 1)));
                measured_outcomes.push(Some(outcome));
            }
        }
    }

    let permutation = match behavior.reorder {
        ReorderPolicy::Random => Permutation::random(len, rng),
        ReorderPolicy::Identity => Permutation::identity(len),
        ReorderPolicy::CyclicShift => Permutation::cyclic_shift(len),
    };
    let record = OperationRecord {
        bits: ops.iter().map(|o| o.bit()).collect(),
        measured_outcomes,
        sifted: Vec::new(),
    };
    Ok(PartyOutput { outgoing: permutation.apply(&emitted), record, permutation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::GhzSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_reflect() -> PartyBehavior {
        PartyBehavior { ops: OpPolicy::ReflectAll, reorder: ReorderPolicy::Identity }
    }

    #[test]
    fn reflect_keeps_slot() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut pool = StatePool::new();
        let plus = pool.prepare_single(SingleState::Plus);
        let out = party_process_with(&[plus], &mut pool, &mut rng, identity_reflect(), None).unwrap();
        assert_eq!(out.outgoing, vec![plus]);
        let probs = pool.probabilities(plus, Basis::X).unwrap();
        assert!((probs[0] - 1.0).abs() < 1e-12 && probs[1].abs() < 1e-12);
        assert_eq!(out.record.bits, vec![0]);
    }

    #[test]
    fn measure_flip_regenerates_opposite_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut pool = StatePool::new();
        let zero = pool.prepare_single(SingleState::Zero);
        let behavior = PartyBehavior { ops: OpPolicy::FlipAll, reorder: ReorderPolicy::Identity };
        let out = party_process_with(&[zero], &mut pool, &mut rng, behavior, None).unwrap();
        assert_eq!(out.record.measured_outcomes, vec![Some(0)]);
        let fresh = out.outgoing[0];
        assert_ne!(fresh, zero);
        assert!(!pool.is_live(zero));
        assert_eq!(pool.probabilities(fresh, Basis::Z).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn measure_flip_on_bell_member_anticorrelates() {
        // The kept slot ends up equal to the party's outcome, so it differs
        // from the emitted fresh qubit.
        let behavior = PartyBehavior { ops: OpPolicy::FlipAll, reorder: ReorderPolicy::Identity };
        for seed in 0..40 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pool = StatePool::new();
            let bell = pool.prepare_ghz(&GhzSpec::plus(1, 0).unwrap());
            let out = party_process_with(&[bell[1]], &mut pool, &mut rng, behavior, None).unwrap();
            let outcome = out.record.measured_outcomes[0].unwrap();
            let kept = pool.measure(bell[0], Basis::Z, &mut rng).unwrap();
            let fresh = pool.measure(out.outgoing[0], Basis::Z, &mut rng).unwrap();
            assert_eq!(kept, outcome);
            assert_eq!(kept ^ 1, fresh);
        }
    }

    #[test]
    fn balanced_policy_flips_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pool = StatePool::new();
        let slots: Vec<_> = (0..10).map(|_| pool.prepare_single(SingleState::Zero)).collect();
        let behavior = PartyBehavior { ops: OpPolicy::Balanced, reorder: ReorderPolicy::Random };
        let out = party_process_with(&slots, &mut pool, &mut rng, behavior, None).unwrap();
        assert_eq!(out.record.flips(), 5);
    }

    #[test]
    fn script_overrides_policy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pool = StatePool::new();
        let slots: Vec<_> = (0..3).map(|_| pool.prepare_single(SingleState::One)).collect();
        let script = [Some(PartyOp::MeasureFlip), None, Some(PartyOp::Reflect)];
        let behavior = PartyBehavior { ops: OpPolicy::FlipAll, reorder: ReorderPolicy::Identity };
        let out = party_process_with(&slots, &mut pool, &mut rng, behavior, Some(&script)).unwrap();
        assert_eq!(out.record.bits, vec![1, 1, 0]);
    }
}
