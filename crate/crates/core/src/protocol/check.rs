use serde::{Deserialize, Serialize};

use super::types::PartyOp;
use crate::error::{usage, Result};
use crate::quantum::{Basis, SingleState};

/// What the dealer must observe on one returned decoy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoyExpectation {
    pub dealer_basis: Basis,
    /// Required dealer outcome (X basis: 0 = `|+⟩`).
    pub expected_outcome: u8,
    /// Whether the party's reported outcome is consistent with the
    /// prepared state.
    pub party_consistent: bool,
}

impl DecoyExpectation {
    pub fn passes(&self, dealer_outcome: u8) -> bool {
        self.party_consistent && dealer_outcome == self.expected_outcome
    }
}

/// Decoy check rule.
///
/// A reflected decoy is measured in its preparation basis and must come back
/// unchanged. A measure-flipped decoy is measured in Z and must read the
/// opposite of the party's outcome; for Z-basis decoys the party's outcome
/// must also equal the prepared bit.
pub fn decoy_expectation(prepared: SingleState, op: PartyOp, party_outcome: Option<u8>) -> Result<DecoyExpectation> {
    match (op, party_outcome) {
        (PartyOp::Reflect, None) => Ok(DecoyExpectation {
            dealer_basis: prepared.basis(),
            expected_outcome: prepared.bit(),
            party_consistent: true,
        }),
        (PartyOp::MeasureFlip, Some(outcome)) if outcome <= 1 => Ok(DecoyExpectation {
            dealer_basis: Basis::Z,
            expected_outcome: outcome ^ 1,
            party_consistent: prepared.basis() == Basis::X || outcome == prepared.bit(),
        }),
        (PartyOp::MeasureFlip, Some(outcome)) => Err(usage(format!("party outcome {outcome} is not a bit"))),
        (PartyOp::MeasureFlip, None) => Err(usage("measure-flip announcement is missing its outcome")),
        (PartyOp::Reflect, Some(_)) => Err(usage("reflect announcement carries an outcome")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use SingleState::*;

    #[test]
    fn check_table_rows() {
        // (prepared, op, party outcome, dealer basis, dealer outcome that passes)
        let rows = [
            (Zero, PartyOp::MeasureFlip, Some(0), Basis::Z, 1),
            (Zero, PartyOp::Reflect, None, Basis::Z, 0),
            (One, PartyOp::MeasureFlip, Some(1), Basis::Z, 0),
            (One, PartyOp::Reflect, None, Basis::Z, 1),
            (Plus, PartyOp::MeasureFlip, Some(0), Basis::Z, 1),
            (Plus, PartyOp::MeasureFlip, Some(1), Basis::Z, 0),
            (Plus, PartyOp::Reflect, None, Basis::X, 0),
            (Minus, PartyOp::MeasureFlip, Some(0), Basis::Z, 1),
            (Minus, PartyOp::MeasureFlip, Some(1), Basis::Z, 0),
            (Minus, PartyOp::Reflect, None, Basis::X, 1),
        ];
        for (prepared, op, outcome, basis, good) in rows {
            let e = decoy_expectation(prepared, op, outcome).unwrap();
            assert_eq!(e.dealer_basis, basis, "{prepared:?} {op:?}");
            assert!(e.passes(good));
            assert!(!e.passes(good ^ 1));
        }
    }

    #[test]
    fn wrong_party_outcome_on_z_decoy_fails() {
        let e = decoy_expectation(Zero, PartyOp::MeasureFlip, Some(1)).unwrap();
        assert!(!e.passes(0) && !e.passes(1));
    }

    #[test]
    fn outcome_presence_must_match_op() {
        assert!(decoy_expectation(Plus, PartyOp::MeasureFlip, None).is_err());
        assert!(decoy_expectation(Plus, PartyOp::Reflect, Some(0)).is_err());
    }
}
