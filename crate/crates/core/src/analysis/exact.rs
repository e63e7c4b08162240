//! Exhaustive branch enumeration for a single decoy, plus the matching
//! Monte Carlo scenario driven by the real channel taps.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{AttackModel, EmAttack};
use crate::error::{usage, Error, Result};
use crate::protocol::{decoy_expectation, PartyOp};
use crate::quantum::{Basis, Operator, SingleState, SlotId, StatePool};

const BRANCH_EPS: f64 = 1e-15;
const DYADIC_BITS: u32 = 40;
const MAX_DENOM_BITS: u32 = 16;

/// How the decoy's return slot relates to its outgoing slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    /// The decoy returns at its own transit index.
    Aligned,
    /// A `|0⟩` companion travels at transit index 1 with its own random
    /// operation, and the party swaps the two on return.
    SwappedWithZero,
}

/// What to hold fixed in a scenario. `None` means "uniformly random".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScenarioFilter {
    pub decoy: Option<SingleState>,
    pub op: Option<PartyOp>,
}

struct Decision {
    choice: usize,
    weights: Vec<f64>,
}

/// Replays a fixed prefix of choices, then takes the first possible branch.
struct Tape {
    prefix: Vec<usize>,
    decisions: Vec<Decision>,
    weight: f64,
}

impl Tape {
    fn choose(&mut self, weights: &[f64]) -> usize {
        let choice = match self.prefix.get(self.decisions.len()) {
            Some(&c) => c,
            None => weights.iter().position(|&w| w > BRANCH_EPS).expect("some branch is possible"),
        };
        self.weight *= weights[choice];
        self.decisions.push(Decision { choice, weights: weights.to_vec() });
        choice
    }

    fn pick<T: Copy>(&mut self, fixed: Option<T>, options: &[T]) -> T {
        match fixed {
            Some(v) => v,
            None => options[self.choose(&vec![1.0 / options.len() as f64; options.len()])],
        }
    }

    fn measure(&mut self, pool: &mut StatePool, slot: SlotId, basis: Basis) -> Result<usize> {
        let probs = pool.probabilities(slot, basis)?;
        let k = self.choose(&probs);
        pool.collapse(slot, basis, k)?;
        Ok(k)
    }

    /// Prefix for the next unexplored branch, if any.
    fn next_prefix(&self) -> Option<Vec<usize>> {
        for (d, decision) in self.decisions.iter().enumerate().rev() {
            let next = (decision.choice + 1..decision.weights.len()).find(|&c| decision.weights[c] > BRANCH_EPS);
            if let Some(c) = next {
                let mut prefix: Vec<usize> = self.decisions[..d].iter().map(|x| x.choice).collect();
                prefix.push(c);
                return Some(prefix);
            }
        }
        None
    }
}

#[derive(Clone)]
enum ExactEve<'a> {
    InterceptResend,
    MeasureResend,
    DoubleCnot,
    EntangleMeasure(&'a EmAttack),
}

impl<'a> ExactEve<'a> {
    fn from_attack(attack: &'a AttackModel) -> Result<Self> {
        match attack {
            AttackModel::InterceptResend => Ok(Self::InterceptResend),
            AttackModel::MeasureResend => Ok(Self::MeasureResend),
            AttackModel::DoubleCnot => Ok(Self::DoubleCnot),
            AttackModel::EntangleMeasure(em) => Ok(Self::EntangleMeasure(em)),
            other => Err(usage(format!("no exact enumeration for attack {:?}", other.label()))),
        }
    }
}

fn exact_branch(eve: &ExactEve, alignment: Alignment, filter: ScenarioFilter, tape: &mut Tape) -> Result<bool> {
    let mut pool = StatePool::new();
    let decoy = tape.pick(filter.decoy, &SingleState::ALL);
    let mut originals = vec![pool.prepare_single(decoy)];
    if alignment == Alignment::SwappedWithZero {
        originals.push(pool.prepare_single(SingleState::Zero));
    }

    let mut memory = Vec::new();
    let mut delivered = Vec::new();
    for &q in &originals {
        let out = match eve {
            ExactEve::InterceptResend => {
                let fake = tape.choose(&[0.5, 0.5]) as u8;
                pool.prepare_single(SingleState::computational(fake))
            }
            ExactEve::MeasureResend => {
                tape.measure(&mut pool, q, Basis::Z)?;
                q
            }
            ExactEve::DoubleCnot => {
                let a = pool.prepare_single(SingleState::Zero);
                pool.apply_unitary(&[q, a], &Operator::cnot())?;
                memory.push(a);
                q
            }
            ExactEve::EntangleMeasure(em) => {
                let p = pool.prepare_level(em.probe_dim, 0)?;
                pool.apply_unitary(&[q, p], &em.ue)?;
                memory.push(p);
                q
            }
        };
        delivered.push(out);
    }

    let mut first = None;
    let mut emitted = Vec::new();
    for (t, &q) in delivered.iter().enumerate() {
        let op = if t == 0 {
            tape.pick(filter.op, &[PartyOp::Reflect, PartyOp::MeasureFlip])
        } else {
            tape.pick(None, &[PartyOp::Reflect, PartyOp::MeasureFlip])
        };
        let outcome = match op {
            PartyOp::Reflect => {
                emitted.push(q);
                None
            }
            PartyOp::MeasureFlip => {
                let o = tape.measure(&mut pool, q, Basis::Z)? as u8;
                pool.discard(q)?;
                emitted.push(pool.prepare_single(SingleState::computational(o ^ 1)));
                Some(o)
            }
        };
        if t == 0 {
            first = Some((op, outcome));
        }
    }
    let decoy_back = emitted[0];
    if alignment == Alignment::SwappedWithZero {
        emitted.swap(0, 1);
    }

    for (t, &q) in emitted.iter().enumerate() {
        match eve {
            ExactEve::InterceptResend | ExactEve::MeasureResend => {
                tape.measure(&mut pool, q, Basis::Z)?;
            }
            ExactEve::DoubleCnot => {
                pool.apply_unitary(&[q, memory[t]], &Operator::cnot())?;
                tape.measure(&mut pool, memory[t], Basis::Z)?;
            }
            ExactEve::EntangleMeasure(em) => {
                pool.apply_unitary(&[q, memory[t]], &em.uf)?;
                tape.measure(&mut pool, memory[t], Basis::Z)?;
            }
        }
    }

    let (op, outcome) = first.expect("decoy processed");
    let expectation = decoy_expectation(decoy, op, outcome)?;
    let seen = tape.measure(&mut pool, decoy_back, expectation.dealer_basis)? as u8;
    Ok(!expectation.passes(seen))
}

/// Failure probability of one decoy, summed over every branch, under the
/// given filter.
pub fn enumerate_detection(attack: &AttackModel, alignment: Alignment, filter: ScenarioFilter) -> Result<f64> {
    let eve = ExactEve::from_attack(attack)?;
    let mut prefix = Vec::new();
    let mut total = 0.0;
    loop {
        let mut tape = Tape { prefix, decisions: Vec::new(), weight: 1.0 };
        if exact_branch(&eve, alignment, filter, &mut tape)? {
            total += tape.weight;
        }
        match tape.next_prefix() {
            Some(next) => prefix = next,
            None => return Ok(total),
        }
    }
}

/// Per-decoy failure probability as an exact rational. Branch weights are
/// dyadic for every attack except generic entangle-measure parameters, so
/// the float sum is snapped to the nearest multiple of `2^-DYADIC_BITS`;
/// anything not within `1e-12` of a short dyadic is a validation error.
pub fn enumerate_detection_exact(attack: &AttackModel, alignment: Alignment) -> Result<Ratio<i64>> {
    enumerate_detection_exact_for(attack, alignment, ScenarioFilter::default())
}

/// [`enumerate_detection_exact`] restricted to a scenario.
pub fn enumerate_detection_exact_for(attack: &AttackModel, alignment: Alignment, filter: ScenarioFilter) -> Result<Ratio<i64>> {
    let p = enumerate_detection(attack, alignment, filter)?;
    let scale = (1i64 << DYADIC_BITS) as f64;
    let ratio = Ratio::new((p * scale).round() as i64, 1i64 << DYADIC_BITS);
    let close = (*ratio.numer() as f64 / *ratio.denom() as f64 - p).abs() < 1e-12;
    if !close || *ratio.denom() > 1 << MAX_DENOM_BITS {
        return Err(Error::Validation(format!("detection probability {p} is not a short dyadic rational")));
    }
    Ok(ratio)
}

/// Monte Carlo version of the enumerated scenario, using the real taps.
/// Returns `(failures, trials)`.
pub fn simulate_detection(
    attack: &AttackModel,
    alignment: Alignment,
    filter: ScenarioFilter,
    trials: u64,
    seed: u64,
) -> Result<(u64, u64)> {
    ExactEve::from_attack(attack)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let mut pool = StatePool::new();
        let mut tap = attack.tap();
        let decoy = filter.decoy.unwrap_or_else(|| SingleState::ALL[rng.gen_range(0..4)]);
        let mut originals = vec![pool.prepare_single(decoy)];
        if alignment == Alignment::SwappedWithZero {
            originals.push(pool.prepare_single(SingleState::Zero));
        }
        let mut emitted = Vec::new();
        let mut first = None;
        for (t, &q) in originals.iter().enumerate() {
            let q = tap.on_forward(0, t, q, &mut pool, &mut rng)?;
            let op = match (t, filter.op) {
                (0, Some(op)) => op,
                _ => PartyOp::from_bit(rng.gen_range(0..2)),
            };
            let outcome = match op {
                PartyOp::Reflect => {
                    emitted.push(q);
                    None
                }
                PartyOp::MeasureFlip => {
                    let o = pool.measure(q, Basis::Z, &mut rng)?;
                    pool.discard(q)?;
                    emitted.push(pool.prepare_single(SingleState::computational(o ^ 1)));
                    Some(o)
                }
            };
            if t == 0 {
                first = Some((op, outcome));
            }
        }
        let decoy_back = emitted[0];
        if alignment == Alignment::SwappedWithZero {
            emitted.swap(0, 1);
        }
        for (t, &q) in emitted.iter().enumerate() {
            tap.on_backward(0, t, q, &mut pool, &mut rng)?;
        }
        let (op, outcome) = first.expect("decoy processed");
        let expectation = decoy_expectation(decoy, op, outcome)?;
        let seen = pool.measure(decoy_back, expectation.dealer_basis, &mut rng)?;
        failures += u64::from(!expectation.passes(seen));
    }
    Ok((failures, trials))
}

/// Empirical distribution of Eve's backward-transit record for a qubit
/// prepared in `|target⟩`, sent through the tap and returned by a party
/// choosing a random operation, aligned.
pub fn probe_outcome_distribution(attack: &AttackModel, target: u8, trials: u64, seed: u64) -> Result<Vec<f64>> {
    ExactEve::from_attack(attack)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: Vec<u64> = Vec::new();
    for _ in 0..trials {
        let mut pool = StatePool::new();
        let mut tap = attack.tap();
        let q = pool.prepare_single(SingleState::computational(target));
        let q = tap.on_forward(0, 0, q, &mut pool, &mut rng)?;
        let back = if rng.gen_bool(0.5) {
            q
        } else {
            let o = pool.measure(q, Basis::Z, &mut rng)?;
            pool.discard(q)?;
            pool.prepare_single(SingleState::computational(o ^ 1))
        };
        tap.on_backward(0, 0, back, &mut pool, &mut rng)?;
        let level = tap.report().record(0, 0).and_then(|r| r.backward).unwrap_or(0);
        if counts.len() <= level {
            counts.resize(level + 1, 0);
        }
        counts[level] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / trials as f64).collect())
}

/// Total-variation distance between two distributions over levels.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    (0..len).map(|i| (p.get(i).unwrap_or(&0.0) - q.get(i).unwrap_or(&0.0)).abs()).sum::<f64>() / 2.0
}
