use std::collections::HashMap;

use rand::{Rng, RngCore};

use super::{ChannelTap, EmAttack, EveReport};
use crate::error::Result;
use crate::quantum::{Basis, Operator, SingleState, SlotId, StatePool};

/// Forwards everything untouched and draws no randomness.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassThroughTap;

impl ChannelTap for PassThroughTap {
    fn name(&self) -> &str {
        "none"
    }

    fn on_forward(&mut self, _: usize, _: usize, slot: SlotId, _: &mut StatePool, _: &mut dyn RngCore) -> Result<SlotId> {
        Ok(slot)
    }

    fn on_backward(&mut self, _: usize, _: usize, slot: SlotId, _: &mut StatePool, _: &mut dyn RngCore) -> Result<SlotId> {
        Ok(slot)
    }

    fn report(&self) -> EveReport {
        EveReport::new("none")
    }
}

/// Keeps the dealer's qubit and forwards a fake computational-basis qubit
/// with a uniformly random bit; Z-measures whatever comes back.
#[derive(Debug, Clone, Default)]
pub struct InterceptResendTap {
    held: HashMap<(usize, usize), SlotId>,
    report: EveReport,
}

impl InterceptResendTap {
    /// Original qubits held back, keyed by (party, transit index).
    pub fn held(&self) -> &HashMap<(usize, usize), SlotId> {
        &self.held
    }
}

impl ChannelTap for InterceptResendTap {
    fn name(&self) -> &str {
        "intercept-resend"
    }

    fn on_forward(&mut self, party: usize, position: usize, slot: SlotId, pool: &mut StatePool, rng: &mut dyn RngCore) -> Result<SlotId> {
        let fake = rng.gen_range(0..2u8);
        self.held.insert((party, position), slot);
        self.report.record_mut(party, position).fake = Some(fake);
        Ok(pool.prepare_single(SingleState::computational(fake)))
    }

    fn on_backward(&mut self, party: usize, position: usize, slot: SlotId, pool: &mut StatePool, rng: &mut dyn RngCore) -> Result<SlotId> {
        let bit = pool.measure(slot, Basis::Z, rng)?;
        self.report.record_mut(party, position).backward = Some(bit as usize);
        Ok(slot)
    }

    fn report(&self) -> EveReport {
        let mut report = self.report.clone();
        report.attack = self.name().into();
        report.note = Some("fake qubits drawn uniformly from |0>, |1>".into());
        report
    }
}

/// Z-measures every qubit in both directions and forwards it.
#[derive(Debug, Clone, Default)]
pub struct MeasureResendTap {
    report: EveReport,
}

impl ChannelTap for MeasureResendTap {
    fn name(&self) -> &str {
        "measure-resend"
    }

    fn on_forward(&mut self, party: usize, position: usize, slot: SlotId, pool: &mut StatePool, rng: &mut dyn RngCore) -> Result<SlotId> {
        let bit = pool.measure(slot, Basis::Z, rng)?;
        self.report.record_mut(party, position).forward = Some(bit as usize);
        Ok(slot)
    }

    fn on_backward(&mut self, party: usize, position: usize, slot: SlotId, pool: &mut StatePool, rng: &mut dyn RngCore) -> Result<SlotId> {
        let bit = pool.measure(slot, Basis::Z, rng)?;
        self.report.record_mut(party, position).backward = Some(bit as usize);
        Ok(slot)
    }

    fn report(&self) -> EveReport {
        let mut report = self.report.clone();
        report.attack = self.name().into();
        report
    }
}

/// CNOT onto a fresh `|0⟩` ancilla on the way out, a second CNOT from the
/// qubit at the same transit index on the way back, then Z-measure the
/// ancilla.
#[derive(Debug, Clone, Default)]
pub struct DoubleCnotTap {
    ancillas: HashMap<(usize, usize), SlotId>,
    report: EveReport,
}

impl ChannelTap for DoubleCnotTap {
    fn name(&self) -> &str {
        "double-cnot"
    }

    fn on_forward(&mut self, party: usize, position: usize, slot: SlotId, pool: &mut StatePool, _: &mut dyn RngCore) -> Result<SlotId> {
        let ancilla = pool.prepare_single(SingleState::Zero);
        pool.apply_unitary(&[slot, ancilla], &Operator::cnot())?;
        self.ancillas.insert((party, position), ancilla);
        Ok(slot)
    }

    fn on_backward(&mut self, party: usize, position: usize, slot: SlotId, pool: &mut StatePool, rng: &mut dyn RngCore) -> Result<SlotId> {
        let Some(ancilla) = self.ancillas.remove(&(party, position)) else {
            return Ok(slot);
        };
        pool.apply_unitary(&[slot, ancilla], &Operator::cnot())?;
        let bit = pool.measure(ancilla, Basis::Z, rng)?;
        pool.discard(ancilla)?;
        self.report.record_mut(party, position).backward = Some(bit as usize);
        Ok(slot)
    }

    fn report(&self) -> EveReport {
        let mut report = self.report.clone();
        report.attack = self.name().into();
        report
    }
}

/// Applies `U_E` with a fresh probe on the way out and `U_F` with the probe
/// of the same transit index on the way back, then measures the probe.
#[derive(Debug, Clone)]
pub struct EntangleMeasureTap {
    attack: EmAttack,
    probes: HashMap<(usize, usize), SlotId>,
    report: EveReport,
}

impl EntangleMeasureTap {
    pub fn new(attack: EmAttack) -> Self {
        Self { attack, probes: HashMap::new(), report: EveReport::default() }
    }
}

impl ChannelTap for EntangleMeasureTap {
    fn name(&self) -> &str {
        "em"
    }

    fn on_forward(&mut self, party: usize, position: usize, slot: SlotId, pool: &mut StatePool, _: &mut dyn RngCore) -> Result<SlotId> {
        let probe = pool.prepare_level(self.attack.probe_dim, 0)?;
        pool.apply_unitary(&[slot, probe], &self.attack.ue)?;
        self.probes.insert((party, position), probe);
        Ok(slot)
    }

    fn on_backward(&mut self, party: usize, position: usize, slot: SlotId, pool: &mut StatePool, rng: &mut dyn RngCore) -> Result<SlotId> {
        let Some(probe) = self.probes.remove(&(party, position)) else {
            return Ok(slot);
        };
        pool.apply_unitary(&[slot, probe], &self.attack.uf)?;
        let level = pool.measure_level(probe, rng)?;
        pool.discard(probe)?;
        self.report.record_mut(party, position).backward = Some(level);
        Ok(slot)
    }

    fn report(&self) -> EveReport {
        let mut report = self.report.clone();
        report.attack = self.name().into();
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::EmParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn joint_labels(pool: &StatePool, slot: SlotId) -> Vec<(String, f64)> {
        pool.factor_of(slot).unwrap().dump().into_iter().map(|r| (r.label, r.re)).collect()
    }

    #[test]
    fn double_cnot_forward_entangles() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut pool = StatePool::new();
        let mut tap = DoubleCnotTap::default();
        let plus = pool.prepare_single(SingleState::Plus);
        tap.on_forward(0, 0, plus, &mut pool, &mut rng).unwrap();
        let labels = joint_labels(&pool, plus);
        assert_eq!(labels.len(), 2);
        assert_eq!(labels[0].0, "00");
        assert_eq!(labels[1].0, "11");
        assert!((labels[0].1 - FRAC_1_SQRT_2).abs() < 1e-15 && (labels[1].1 - FRAC_1_SQRT_2).abs() < 1e-15);

        let minus = pool.prepare_single(SingleState::Minus);
        tap.on_forward(0, 1, minus, &mut pool, &mut rng).unwrap();
        let labels = joint_labels(&pool, minus);
        assert!((labels[1].1 + FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn aligned_double_cnot_undoes_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for state in SingleState::ALL {
            let mut pool = StatePool::new();
            let mut tap = DoubleCnotTap::default();
            let q = pool.prepare_single(state);
            tap.on_forward(0, 0, q, &mut pool, &mut rng).unwrap();
            tap.on_backward(0, 0, q, &mut pool, &mut rng).unwrap();
            let probs = pool.probabilities(q, state.basis()).unwrap();
            assert!((probs[state.bit() as usize] - 1.0).abs() < 1e-12);
            assert_eq!(tap.report().record(0, 0).unwrap().backward, Some(0));
        }
    }

    #[test]
    fn swapped_double_cnot_decoheres_plus_decoy() {
        // |+> at transit 0, |0> at transit 1; the party reflects both and
        // swaps them on the way back.
        let trials = 4000;
        let mut minus = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..trials {
            let mut pool = StatePool::new();
            let mut tap = DoubleCnotTap::default();
            let plus = pool.prepare_single(SingleState::Plus);
            let zero = pool.prepare_single(SingleState::Zero);
            tap.on_forward(0, 0, plus, &mut pool, &mut rng).unwrap();
            tap.on_forward(0, 1, zero, &mut pool, &mut rng).unwrap();
            tap.on_backward(0, 0, zero, &mut pool, &mut rng).unwrap();
            tap.on_backward(0, 1, plus, &mut pool, &mut rng).unwrap();
            minus += pool.measure(plus, Basis::X, &mut rng).unwrap() as usize;
        }
        let freq = minus as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.03, "{freq}");
    }

    #[test]
    fn intercept_resend_substitutes_fake() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pool = StatePool::new();
        let mut tap = InterceptResendTap::default();
        let q = pool.prepare_single(SingleState::Plus);
        let fake = tap.on_forward(0, 0, q, &mut pool, &mut rng).unwrap();
        assert_ne!(fake, q);
        let bit = tap.report().record(0, 0).unwrap().fake.unwrap();
        assert_eq!(pool.probabilities(fake, Basis::Z).unwrap()[bit as usize], 1.0);
        assert_eq!(tap.held()[&(0, 0)], q);
        tap.on_backward(0, 0, fake, &mut pool, &mut rng).unwrap();
        assert_eq!(tap.report().record(0, 0).unwrap().backward, Some(bit as usize));
    }

    #[test]
    fn measure_resend_leaves_z_states_alone() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut pool = StatePool::new();
        let mut tap = MeasureResendTap::default();
        let q = pool.prepare_single(SingleState::One);
        assert_eq!(tap.on_forward(0, 0, q, &mut pool, &mut rng).unwrap(), q);
        assert_eq!(tap.report().record(0, 0).unwrap().forward, Some(1));
        assert_eq!(pool.probabilities(q, Basis::Z).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn zero_point_probe_is_blind() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let em = EmAttack::canonical(&EmParams::zero_point()).unwrap();
        for bit in [0u8, 1] {
            let mut pool = StatePool::new();
            let mut tap = EntangleMeasureTap::new(em.clone());
            let q = pool.prepare_single(SingleState::computational(bit));
            tap.on_forward(0, 0, q, &mut pool, &mut rng).unwrap();
            tap.on_backward(0, 0, q, &mut pool, &mut rng).unwrap();
            assert_eq!(tap.report().record(0, 0).unwrap().backward, Some(0));
            assert_eq!(pool.probabilities(q, Basis::Z).unwrap()[bit as usize], 1.0);
        }
    }
}
