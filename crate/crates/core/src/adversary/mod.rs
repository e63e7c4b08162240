//! Channel-tap adversaries.
//!
//! A tap sees each qubit as it crosses the dealer→party channel
//! (`on_forward`) and the party→dealer channel (`on_backward`), identified
//! only by party and transit index. It never sees decoy positions,
//! operation records or the party's reorder.

mod collusion;
mod em;
mod guess;
mod taps;

pub use collusion::{collusion_accuracy, collusion_reconstruct, CollusionAccuracy, CollusionGuess};
pub use em::{build_em_family, EmParams, ProbeLayout};
pub use guess::{eve_guess, mutual_information, GuessOutcome, GuessStrategy, GuessTruth};
pub use taps::{DoubleCnotTap, EntangleMeasureTap, InterceptResendTap, MeasureResendTap, PassThroughTap};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::quantum::{Operator, SlotId, StatePool};

/// What Eve recorded at one transit index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TransitRecord {
    /// Fake bit substituted on the way out.
    pub fake: Option<u8>,
    /// Measurement result on the way out.
    pub forward: Option<usize>,
    /// Measurement result (qubit or probe) on the way back.
    pub backward: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveReport {
    pub attack: String,
    pub note: Option<String>,
    records: Vec<Vec<TransitRecord>>,
}

impl EveReport {
    pub fn new(attack: impl Into<String>) -> Self {
        Self { attack: attack.into(), note: None, records: Vec::new() }
    }

    pub fn record_mut(&mut self, party: usize, position: usize) -> &mut TransitRecord {
        if self.records.len() <= party {
            self.records.resize_with(party + 1, Vec::new);
        }
        let row = &mut self.records[party];
        if row.len() <= position {
            row.resize(position + 1, TransitRecord::default());
        }
        &mut row[position]
    }

    pub fn record(&self, party: usize, position: usize) -> Option<&TransitRecord> {
        self.records.get(party).and_then(|r| r.get(position))
    }

    pub fn party_records(&self, party: usize) -> &[TransitRecord] {
        self.records.get(party).map_or(&[], Vec::as_slice)
    }

    /// Backward-transit outcomes for `party`, by transit index.
    pub fn probe_outcomes(&self, party: usize) -> Vec<Option<usize>> {
        self.party_records(party).iter().map(|r| r.backward).collect()
    }
}

pub trait ChannelTap {
    fn name(&self) -> &str;

    /// Called for each qubit sent to `party`; returns the slot delivered.
    fn on_forward(
        &mut self,
        party: usize,
        position: usize,
        slot: SlotId,
        pool: &mut StatePool,
        rng: &mut dyn RngCore,
    ) -> Result<SlotId>;

    /// Called for each qubit returned by `party`; returns the slot delivered
    /// to the dealer.
    fn on_backward(
        &mut self,
        party: usize,
        position: usize,
        slot: SlotId,
        pool: &mut StatePool,
        rng: &mut dyn RngCore,
    ) -> Result<SlotId>;

    fn report(&self) -> EveReport;
}

/// User-supplied entangle-measure operators on (qubit ⊗ probe).
#[derive(Debug, Clone, PartialEq)]
pub struct EmAttack {
    pub ue: Operator,
    pub uf: Operator,
    pub probe_dim: usize,
}

impl EmAttack {
    pub fn new(ue: Operator, uf: Operator, probe_dim: usize) -> Result<Self> {
        if probe_dim < 2 {
            return Err(Error::Validation("probe dimension must be at least 2".into()));
        }
        for (name, op) in [("U_E", &ue), ("U_F", &uf)] {
            if op.dim() != 2 * probe_dim {
                return Err(Error::Validation(format!(
                    "{name} has dimension {} but qubit ⊗ probe needs {}",
                    op.dim(),
                    2 * probe_dim
                )));
            }
            if !op.is_unitary(crate::quantum::UNITARY_TOL) {
                return Err(Error::Validation(format!("{name} is not unitary")));
            }
        }
        Ok(Self { ue, uf, probe_dim })
    }

    pub fn canonical(params: &EmParams) -> Result<Self> {
        let (ue, uf) = build_em_family(params)?;
        Self::new(ue, uf, params.layout.dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackModel {
    None,
    InterceptResend,
    MeasureResend,
    DoubleCnot,
    EntangleMeasure(EmAttack),
    /// Dishonest parties (0-based) pool their shares without the rest.
    Collusion { dishonest: Vec<usize> },
}

impl AttackModel {
    pub fn label(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::InterceptResend => "intercept-resend",
            Self::MeasureResend => "measure-resend",
            Self::DoubleCnot => "double-cnot",
            Self::EntangleMeasure(_) => "em",
            Self::Collusion { .. } => "collusion",
        }
    }

    /// Parses the parameter-free attack names.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "none" => Ok(Self::None),
            "intercept-resend" => Ok(Self::InterceptResend),
            "measure-resend" => Ok(Self::MeasureResend),
            "double-cnot" => Ok(Self::DoubleCnot),
            "em" | "entangle-measure" => Ok(Self::EntangleMeasure(EmAttack::canonical(&EmParams::zero_point())?)),
            other => Err(Error::Parse(format!("unknown attack {other:?}"))),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Self::Collusion { dishonest } = self {
            let mut sorted = dishonest.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != dishonest.len() {
                return Err(usage("colluding party listed twice"));
            }
            if dishonest.iter().any(|&p| p >= n) {
                return Err(usage(format!("colluding party index out of range for n = {n}")));
            }
            if dishonest.len() >= n {
                return Err(usage("colluders must be a strict subset of the parties"));
            }
        }
        Ok(())
    }

    /// Channel tap implementing this model. Collusion and `None` leave the
    /// channel untouched.
    pub fn tap(&self) -> Box<dyn ChannelTap> {
        match self {
            Self::None | Self::Collusion { .. } => Box::new(PassThroughTap),
            Self::InterceptResend => Box::new(InterceptResendTap::default()),
            Self::MeasureResend => Box::new(MeasureResendTap::default()),
            Self::DoubleCnot => Box::new(DoubleCnotTap::default()),
            Self::EntangleMeasure(em) => Box::new(EntangleMeasureTap::new(em.clone())),
        }
    }
}
