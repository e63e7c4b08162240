use std::collections::{BTreeMap, HashMap, HashSet};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bits::{GhzSign, GhzSpec};
use super::matrix::{Amplitude, Operator, UNITARY_TOL};
use crate::error::{usage, Error, Result};

/// Factors must stay normalised to this tolerance.
pub const NORM_TOL: f64 = 1e-12;

/// Branch probabilities below this are treated as impossible.
const ZERO_PROB: f64 = 1e-15;

/// Relative squared-norm residual allowed when testing a slot for
/// separability.
const SEPARABLE_TOL: f64 = 1e-14;

const ZERO: Amplitude = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotId(u64);

impl SlotId {
    pub fn raw(self) -> u64 {
        self.0
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

/// The four single-qubit states used for decoys and regenerated photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SingleState {
    Zero,
    One,
    Plus,
    Minus,
}

impl SingleState {
    pub const ALL: [SingleState; 4] = [Self::Zero, Self::One, Self::Plus, Self::Minus];

    pub fn basis(self) -> Basis {
        match self {
            Self::Zero | Self::One => Basis::Z,
            Self::Plus | Self::Minus => Basis::X,
        }
    }

    /// Outcome label of this state in its own basis (0 for |0⟩ and |+⟩).
    pub fn bit(self) -> u8 {
        match self {
            Self::Zero | Self::Plus => 0,
            Self::One | Self::Minus => 1,
        }
    }

    pub fn computational(bit: u8) -> Self {
        if bit == 0 {
            Self::Zero
        } else {
            Self::One
        }
    }

    pub fn amplitudes(self) -> [Amplitude; 2] {
        let h = FRAC_1_SQRT_2;
        let re = match self {
            Self::Zero => [1.0, 0.0],
            Self::One => [0.0, 1.0],
            Self::Plus => [h, h],
            Self::Minus => [h, -h],
        };
        [Complex64::new(re[0], 0.0), Complex64::new(re[1], 0.0)]
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Zero => "|0>",
            Self::One => "|1>",
            Self::Plus => "|+>",
            Self::Minus => "|->",
        }
    }
}

/// One row of a factor dump: basis-state label and amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisAmplitude {
    pub label: String,
    pub re: f64,
    pub im: f64,
}

/// A pure state over an ordered list of slots. Slot 0 is the most
/// significant digit of the amplitude index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFactor {
    slots: Vec<SlotId>,
    dims: Vec<usize>,
    amps: Vec<Amplitude>,
}

impl StateFactor {
    fn new(slots: Vec<SlotId>, dims: Vec<usize>, amps: Vec<Amplitude>) -> Result<Self> {
        let size: usize = dims.iter().product();
        if slots.len() != dims.len() || size != amps.len() || dims.iter().any(|&d| d < 2) {
            return Err(usage(format!(
                "amplitude vector of length {} does not match dimensions {dims:?}",
                amps.len()
            )));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("non-finite amplitude".into()));
        }
        let factor = Self { slots, dims, amps };
        if (factor.norm() - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(format!(
                "state norm {} is not 1",
                factor.norm()
            )));
        }
        Ok(factor)
    }

    pub fn slots(&self) -> &[SlotId] {
        &self.slots
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn position(&self, slot: SlotId) -> Option<usize> {
        self.slots.iter().position(|&s| s == slot)
    }

    fn stride(&self, pos: usize) -> usize {
        self.dims[pos + 1..].iter().product()
    }

    fn digit(&self, index: usize, pos: usize) -> usize {
        (index / self.stride(pos)) % self.dims[pos]
    }

    /// Amplitude for the given per-slot digits.
    pub fn amplitude(&self, digits: &[usize]) -> Option<Amplitude> {
        if digits.len() != self.dims.len() || digits.iter().zip(&self.dims).any(|(d, m)| d >= m) {
            return None;
        }
        let index = digits.iter().zip(&self.dims).fold(0, |acc, (d, m)| acc * m + d);
        Some(self.amps[index])
    }

    /// Hermitian inner product `⟨self|other⟩`; dimension signatures must match.
    pub fn inner_product(&self, other: &StateFactor) -> Result<Amplitude> {
        if self.dims != other.dims {
            return Err(usage(format!(
                "shape mismatch: {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `self ⊗ other`, slots of `self` first.
    pub fn tensor(&self, other: &StateFactor) -> StateFactor {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        let mut slots = self.slots.clone();
        slots.extend_from_slice(&other.slots);
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        StateFactor { slots, dims, amps }
    }

    /// Nonzero amplitudes as labelled records, in index order.
    pub fn dump(&self) -> Vec<BasisAmplitude> {
        let wide = self.dims.iter().any(|&d| d > 10);
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm_sqr() > 0.0)
            .map(|(index, z)| {
                let digits: Vec<String> = (0..self.dims.len())
                    .map(|p| self.digit(index, p).to_string())
                    .collect();
                let label = if wide { digits.join(".") } else { digits.concat() };
                BasisAmplitude { label, re: z.re, im: z.im }
            })
            .collect()
    }

    fn probabilities(&self, pos: usize) -> Vec<f64> {
        let mut probs = vec![0.0; self.dims[pos]];
        for (index, z) in self.amps.iter().enumerate() {
            probs[self.digit(index, pos)] += z.norm_sqr();
        }
        probs
    }

    /// Applies `op` to the digits at `positions` (first position most
    /// significant within the operator).
    fn apply_local(&mut self, positions: &[usize], op: &Operator) {
        let strides: Vec<usize> = positions.iter().map(|&p| self.stride(p)).collect();
        let local_dims: Vec<usize> = positions.iter().map(|&p| self.dims[p]).collect();
        let offsets: Vec<usize> = (0..op.dim())
            .map(|g| {
                let mut rem = g;
                let mut off = 0;
                for k in (0..positions.len()).rev() {
                    off += (rem % local_dims[k]) * strides[k];
                    rem /= local_dims[k];
                }
                off
            })
            .collect();
        let mut buf = vec![ZERO; op.dim()];
        for base in 0..self.amps.len() {
            if positions.iter().any(|&p| self.digit(base, p) != 0) {
                continue;
            }
            for (g, off) in offsets.iter().enumerate() {
                buf[g] = self.amps[base + off];
            }
            let out = op.apply(&buf);
            for (g, off) in offsets.iter().enumerate() {
                self.amps[base + off] = out[g];
            }
        }
    }

    /// Projects the digit at `pos` onto `outcome` and renormalises.
    fn project(&mut self, pos: usize, outcome: usize, prob: f64) {
        let scale = 1.0 / prob.sqrt();
        for index in 0..self.amps.len() {
            if self.digit(index, pos) == outcome {
                self.amps[index] *= scale;
            } else {
                self.amps[index] = ZERO;
            }
        }
    }

    /// If the slot at `pos` is in a product state with the rest, returns
    /// (slot state, remaining factor).
    fn split_off(&self, pos: usize) -> Option<(Vec<Amplitude>, StateFactor)> {
        let d = self.dims[pos];
        let stride = self.stride(pos);
        let rest_len = self.amps.len() / d;
        // Rows indexed by the slot digit, columns by the remaining digits.
        let rows: Vec<Vec<Amplitude>> = (0..d)
            .map(|v| {
                (0..rest_len)
                    .map(|r| {
                        let high = r / stride;
                        let low = r % stride;
                        self.amps[(high * d + v) * stride + low]
                    })
                    .collect()
            })
            .collect();
        let norms: Vec<f64> = rows
            .iter()
            .map(|row| row.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .collect();
        let (pivot, pivot_norm) = norms
            .iter()
            .copied()
            .enumerate()
            .fold((0, -1.0), |best, (i, n)| if n > best.1 { (i, n) } else { best });
        if pivot_norm <= 0.0 {
            return None;
        }
        let scale = 1.0 / pivot_norm.sqrt();
        let direction: Vec<Amplitude> = rows[pivot].iter().map(|z| z * scale).collect();
        let mut slot_state = Vec::with_capacity(d);
        let mut residual = 0.0;
        for (row, row_norm) in rows.iter().zip(&norms) {
            let c: Amplitude = direction.iter().zip(row).map(|(v, x)| v.conj() * x).sum();
            residual += row_norm - c.norm_sqr();
            slot_state.push(c);
        }
        if residual > SEPARABLE_TOL * norms.iter().sum::<f64>() {
            return None;
        }
        let mut slots = self.slots.clone();
        slots.remove(pos);
        let mut dims = self.dims.clone();
        dims.remove(pos);
        Some((slot_state, StateFactor { slots, dims, amps: direction }))
    }
}

/// Inner product of two factors with matching dimension signatures.
pub fn inner_product(a: &StateFactor, b: &StateFactor) -> Result<Amplitude> {
    a.inner_product(b)
}

/// A collection of independent pure-state factors over registered slots.
///
/// Slots are never reused. Joint unitaries merge the factors they span;
/// measurements split off any slot left in a product state.
#[derive(Debug, Clone, Default)]
pub struct StatePool {
    factors: BTreeMap<u64, StateFactor>,
    owner: HashMap<SlotId, u64>,
    measured: HashSet<SlotId>,
    forced: HashMap<SlotId, usize>,
    next_slot: u64,
    next_factor: u64,
}

impl StatePool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of slots ever created in this pool.
    pub fn slots_created(&self) -> u64 {
        self.next_slot
    }

    pub fn live_slots(&self) -> usize {
        self.owner.len()
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> impl Iterator<Item = &StateFactor> {
        self.factors.values()
    }

    pub fn is_live(&self, slot: SlotId) -> bool {
        self.owner.contains_key(&slot)
    }

    pub fn is_measured(&self, slot: SlotId) -> bool {
        self.measured.contains(&slot)
    }

    fn owner(&self, slot: SlotId) -> Result<u64> {
        self.owner.get(&slot).copied().ok_or(Error::DeadSlot(slot))
    }

    pub fn factor_of(&self, slot: SlotId) -> Result<&StateFactor> {
        Ok(&self.factors[&self.owner(slot)?])
    }

    pub fn dim(&self, slot: SlotId) -> Result<usize> {
        let f = self.factor_of(slot)?;
        Ok(f.dims[f.position(slot).expect("owner map is consistent")])
    }

    fn insert(&mut self, factor: StateFactor) -> u64 {
        let id = self.next_factor;
        self.next_factor += 1;
        for &s in &factor.slots {
            self.owner.insert(s, id);
        }
        self.factors.insert(id, factor);
        id
    }

    /// Registers a new factor over fresh slots.
    pub fn alloc(&mut self, dims: &[usize], amps: Vec<Amplitude>) -> Result<Vec<SlotId>> {
        let slots: Vec<SlotId> = (0..dims.len() as u64)
            .map(|i| SlotId(self.next_slot + i))
            .collect();
        let factor = StateFactor::new(slots.clone(), dims.to_vec(), amps)?;
        self.next_slot += dims.len() as u64;
        self.insert(factor);
        Ok(slots)
    }

    pub fn prepare_single(&mut self, state: SingleState) -> SlotId {
        self.alloc(&[2], state.amplitudes().to_vec()).expect("single-qubit states are normalised")[0]
    }

    /// A `dim`-level slot in computational level `level`.
    pub fn prepare_level(&mut self, dim: usize, level: usize) -> Result<SlotId> {
        if level >= dim {
            return Err(usage(format!("level {level} out of range for dimension {dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[level] = Complex64::new(1.0, 0.0);
        Ok(self.alloc(&[dim], amps)?[0])
    }

    /// Prepares `|G±_k⟩`; returns slots `g_0, g_1, …, g_n`.
    pub fn prepare_ghz(&mut self, spec: &GhzSpec) -> Vec<SlotId> {
        let width = spec.n() + 1;
        let mut amps = vec![ZERO; 1 << width];
        let (low, high) = spec.branch_indices();
        let h = FRAC_1_SQRT_2;
        amps[low] = Complex64::new(h, 0.0);
        amps[high] = match spec.sign() {
            GhzSign::Plus => Complex64::new(h, 0.0),
            GhzSign::Minus => Complex64::new(-h, 0.0),
        };
        self.alloc(&vec![2; width], amps).expect("GHZ amplitudes are normalised")
    }

    /// Outcome distribution for measuring `slot` in `basis`, without collapse.
    pub fn probabilities(&self, slot: SlotId, basis: Basis) -> Result<Vec<f64>> {
        let factor = self.factor_of(slot)?;
        let pos = factor.position(slot).expect("owner map is consistent");
        match basis {
            Basis::Z => Ok(factor.probabilities(pos)),
            Basis::X => {
                if factor.dims[pos] != 2 {
                    return Err(usage("X-basis measurement needs a qubit slot"));
                }
                let mut rotated = factor.clone();
                rotated.apply_local(&[pos], &Operator::hadamard());
                Ok(rotated.probabilities(pos))
            }
        }
    }

    /// Drives the next measurement of `slot` to `outcome` instead of sampling.
    pub fn force_outcome(&mut self, slot: SlotId, outcome: usize) {
        self.forced.insert(slot, outcome);
    }

    /// Collapses `slot` onto `outcome`; returns the branch probability.
    pub fn collapse(&mut self, slot: SlotId, basis: Basis, outcome: usize) -> Result<f64> {
        let probs = self.probabilities(slot, basis)?;
        let prob = probs.get(outcome).copied().unwrap_or(0.0);
        if prob < ZERO_PROB {
            return Err(Error::ImpossibleOutcome { slot, outcome });
        }
        let fid = self.owner(slot)?;
        let factor = self.factors.get_mut(&fid).expect("owner map is consistent");
        let pos = factor.position(slot).expect("owner map is consistent");
        if basis == Basis::X {
            factor.apply_local(&[pos], &Operator::hadamard());
        }
        factor.project(pos, outcome, prob);
        if basis == Basis::X {
            factor.apply_local(&[pos], &Operator::hadamard());
        }
        self.measured.insert(slot);
        self.factorize(fid);
        Ok(prob)
    }

    fn measure_outcome<R: Rng + ?Sized>(&mut self, slot: SlotId, basis: Basis, rng: &mut R) -> Result<usize> {
        let outcome = match self.forced.remove(&slot) {
            Some(o) => o,
            None => {
                let probs = self.probabilities(slot, basis)?;
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut pick = None;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if *p >= ZERO_PROB {
                        pick = Some(i);
                        if u < acc {
                            break;
                        }
                    }
                }
                pick.expect("a normalised factor has a possible outcome")
            }
        };
        self.collapse(slot, basis, outcome)?;
        Ok(outcome)
    }

    /// Projective measurement of a qubit slot. In the X basis, 0 is `|+⟩`
    /// and 1 is `|−⟩`. The slot stays live.
    pub fn measure<R: Rng + ?Sized>(&mut self, slot: SlotId, basis: Basis, rng: &mut R) -> Result<u8> {
        if self.dim(slot)? != 2 {
            return Err(usage(format!("slot {slot} is not a qubit; use measure_level")));
        }
        self.measure_outcome(slot, basis, rng).map(|o| o as u8)
    }

    /// Measures a slot of any dimension in its computational levels.
    pub fn measure_level<R: Rng + ?Sized>(&mut self, slot: SlotId, rng: &mut R) -> Result<usize> {
        self.measure_outcome(slot, Basis::Z, rng)
    }

    /// Applies `op` to `slots` (first slot most significant), merging
    /// factors as needed.
    pub fn apply_unitary(&mut self, slots: &[SlotId], op: &Operator) -> Result<()> {
        let mut seen = HashSet::new();
        let mut fids = Vec::new();
        let mut expected_dim = 1;
        for &s in slots {
            if !seen.insert(s) {
                return Err(usage(format!("slot {s} listed twice")));
            }
            let fid = self.owner(s)?;
            if !fids.contains(&fid) {
                fids.push(fid);
            }
            expected_dim *= self.dim(s)?;
        }
        if slots.is_empty() || expected_dim != op.dim() {
            return Err(usage(format!(
                "operator dimension {} does not match slot dimension {expected_dim}",
                op.dim()
            )));
        }
        let defect = op.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::Validation(format!("operator is not unitary (defect {defect:.3e})")));
        }
        let fid = self.merge(&fids);
        let factor = self.factors.get_mut(&fid).expect("merged factor exists");
        let positions: Vec<usize> = slots
            .iter()
            .map(|&s| factor.position(s).expect("merged factor holds every slot"))
            .collect();
        factor.apply_local(&positions, op);
        for s in slots {
            self.measured.remove(s);
        }
        Ok(())
    }

    fn merge(&mut self, fids: &[u64]) -> u64 {
        if fids.len() == 1 {
            return fids[0];
        }
        let mut merged = self.factors.remove(&fids[0]).expect("factor exists");
        for fid in &fids[1..] {
            let next = self.factors.remove(fid).expect("factor exists");
            merged = merged.tensor(&next);
        }
        self.insert(merged)
    }

    /// Splits every product-state slot out of factor `fid` into its own
    /// factor.
    fn factorize(&mut self, fid: u64) {
        let mut pending = vec![fid];
        while let Some(fid) = pending.pop() {
            let factor = &self.factors[&fid];
            if factor.slots.len() < 2 {
                continue;
            }
            let split = (0..factor.slots.len()).find_map(|pos| factor.split_off(pos).map(|parts| (pos, parts)));
            let Some((pos, (slot_amps, rest))) = split else {
                continue;
            };
            let slot = factor.slots[pos];
            let dim = factor.dims[pos];
            self.factors.remove(&fid);
            let norm = slot_amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let single = StateFactor {
                slots: vec![slot],
                dims: vec![dim],
                amps: slot_amps.into_iter().map(|z| z / norm).collect(),
            };
            self.insert(single);
            pending.push(self.insert(rest));
        }
    }

    /// Removes a measured slot from the pool.
    pub fn discard(&mut self, slot: SlotId) -> Result<()> {
        let fid = self.owner(slot)?;
        if !self.measured.contains(&slot) {
            return Err(usage(format!("slot {slot} must be measured before discard")));
        }
        let factor = &self.factors[&fid];
        if factor.slots.len() > 1 {
            let pos = factor.position(slot).expect("owner map is consistent");
            let (_, rest) = factor
                .split_off(pos)
                .ok_or_else(|| usage(format!("slot {slot} is entangled and cannot be discarded")))?;
            self.factors.remove(&fid);
            self.insert(rest);
        } else {
            self.factors.remove(&fid);
        }
        self.owner.remove(&slot);
        self.measured.remove(&slot);
        self.forced.remove(&slot);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: Amplitude, b: f64) -> bool {
        (a - Complex64::new(b, 0.0)).norm() < 1e-12
    }

    #[test]
    fn prepares_ghz_branches() {
        let mut pool = StatePool::new();
        let slots = pool.prepare_ghz(&GhzSpec::plus(2, 1).unwrap());
        let f = pool.factor_of(slots[0]).unwrap();
        let dump = f.dump();
        assert_eq!(dump.len(), 2);
        assert_eq!(dump[0].label, "001");
        assert_eq!(dump[1].label, "110");
        assert!((dump[1].re - FRAC_1_SQRT_2).abs() < 1e-15);

        let slots = pool.prepare_ghz(&GhzSpec::new(2, 2, GhzSign::Minus).unwrap());
        let dump = pool.factor_of(slots[2]).unwrap().dump();
        assert_eq!(dump[0].label, "010");
        assert_eq!(dump[1].label, "101");
        assert!((dump[1].re + FRAC_1_SQRT_2).abs() < 1e-15);

        let bell = pool.prepare_ghz(&GhzSpec::plus(1, 0).unwrap());
        let labels: Vec<_> = pool.factor_of(bell[0]).unwrap().dump().into_iter().map(|r| r.label).collect();
        assert_eq!(labels, ["00", "11"]);
    }

    #[test]
    fn prepares_single_states() {
        let mut pool = StatePool::new();
        let plus = pool.prepare_single(SingleState::Plus);
        let a = pool.factor_of(plus).unwrap().amplitudes();
        assert!(close(a[0], FRAC_1_SQRT_2) && close(a[1], FRAC_1_SQRT_2));
        let minus = pool.prepare_single(SingleState::Minus);
        let a = pool.factor_of(minus).unwrap().amplitudes();
        assert!(close(a[0], FRAC_1_SQRT_2) && close(a[1], -FRAC_1_SQRT_2));
        let zero = pool.prepare_single(SingleState::Zero);
        let a = pool.factor_of(zero).unwrap().amplitudes();
        assert!(close(a[0], 1.0) && close(a[1], 0.0));
    }

    #[test]
    fn cnot_examples() {
        let mut pool = StatePool::new();
        let c = pool.prepare_single(SingleState::One);
        let t = pool.prepare_single(SingleState::Zero);
        pool.apply_unitary(&[c, t], &Operator::cnot()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // Product |11⟩ splits apart again only after a measurement.
        assert_eq!(pool.measure(t, Basis::Z, &mut rng).unwrap(), 1);
        assert_eq!(pool.measure(c, Basis::Z, &mut rng).unwrap(), 1);

        let c = pool.prepare_single(SingleState::Plus);
        let t = pool.prepare_single(SingleState::Zero);
        pool.apply_unitary(&[c, t], &Operator::cnot()).unwrap();
        let f = pool.factor_of(c).unwrap();
        assert_eq!(f.slots(), &[c, t]);
        let labels: Vec<_> = f.dump().into_iter().map(|r| r.label).collect();
        assert_eq!(labels, ["00", "11"]);
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let mut pool = StatePool::new();
        let slots = pool.prepare_ghz(&GhzSpec::plus(3, 5).unwrap());
        let before = pool.factor_of(slots[0]).unwrap().clone();
        pool.apply_unitary(&slots, &Operator::identity(16)).unwrap();
        assert_eq!(pool.factor_of(slots[0]).unwrap(), &before);
    }

    #[test]
    fn rejects_bad_unitaries() {
        let mut pool = StatePool::new();
        let a = pool.prepare_single(SingleState::Zero);
        let b = pool.prepare_single(SingleState::Zero);
        let skew = Operator::from_real(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(pool.apply_unitary(&[a], &skew), Err(Error::Validation(_))));
        assert!(matches!(pool.apply_unitary(&[a], &Operator::cnot()), Err(Error::Usage(_))));
        assert!(matches!(pool.apply_unitary(&[a, a], &Operator::cnot()), Err(Error::Usage(_))));
        pool.apply_unitary(&[a, b], &Operator::cnot()).unwrap();
    }

    #[test]
    fn entanglement_collapse() {
        let mut pool = StatePool::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bell = pool.prepare_ghz(&GhzSpec::plus(1, 0).unwrap());
        pool.force_outcome(bell[0], 0);
        assert_eq!(pool.measure(bell[0], Basis::Z, &mut rng).unwrap(), 0);
        assert_eq!(pool.probabilities(bell[1], Basis::Z).unwrap(), vec![1.0, 0.0]);
        // Both slots are now separate single-slot factors.
        assert_eq!(pool.factor_count(), 2);
    }

    #[test]
    fn impossible_forced_outcome_is_rejected() {
        let mut pool = StatePool::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = pool.prepare_single(SingleState::Zero);
        pool.force_outcome(z, 1);
        assert!(matches!(pool.measure(z, Basis::Z, &mut rng), Err(Error::ImpossibleOutcome { .. })));
    }

    #[test]
    fn x_measurement_labels() {
        let mut pool = StatePool::new();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = pool.prepare_single(SingleState::Plus);
        let m = pool.prepare_single(SingleState::Minus);
        for _ in 0..5 {
            assert_eq!(pool.measure(p, Basis::X, &mut rng).unwrap(), 0);
            assert_eq!(pool.measure(m, Basis::X, &mut rng).unwrap(), 1);
        }
        let probe = pool.prepare_level(4, 2).unwrap();
        assert!(pool.measure(probe, Basis::Z, &mut rng).is_err());
        assert!(pool.probabilities(probe, Basis::X).is_err());
        assert_eq!(pool.measure_level(probe, &mut rng).unwrap(), 2);
    }

    #[test]
    fn discard_lifecycle() {
        let mut pool = StatePool::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bell = pool.prepare_ghz(&GhzSpec::plus(1, 0).unwrap());
        assert!(matches!(pool.discard(bell[0]), Err(Error::Usage(_))));
        pool.measure(bell[0], Basis::Z, &mut rng).unwrap();
        pool.discard(bell[0]).unwrap();
        let rest = pool.factor_of(bell[1]).unwrap();
        assert_eq!(rest.slots(), &[bell[1]]);
        assert!((rest.norm() - 1.0).abs() < NORM_TOL);
        assert!(matches!(pool.measure(bell[0], Basis::Z, &mut rng), Err(Error::DeadSlot(_))));
        assert!(matches!(pool.discard(bell[0]), Err(Error::DeadSlot(_))));
    }

    #[test]
    fn discard_from_shared_factor() {
        // A measured slot that was later re-entangled cannot be dropped.
        let mut pool = StatePool::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = pool.prepare_single(SingleState::Plus);
        let b = pool.prepare_single(SingleState::Zero);
        pool.measure(a, Basis::X, &mut rng).unwrap();
        pool.apply_unitary(&[a, b], &Operator::cnot()).unwrap();
        assert!(pool.discard(a).is_err());
    }

    #[test]
    fn inner_product_shapes() {
        let mut pool = StatePool::new();
        let z = pool.prepare_single(SingleState::Zero);
        let p = pool.prepare_single(SingleState::Plus);
        let ip = inner_product(pool.factor_of(z).unwrap(), pool.factor_of(p).unwrap()).unwrap();
        assert!(close(ip, FRAC_1_SQRT_2));
        let g = pool.prepare_ghz(&GhzSpec::plus(1, 0).unwrap());
        assert!(inner_product(pool.factor_of(z).unwrap(), pool.factor_of(g[0]).unwrap()).is_err());
    }
}
