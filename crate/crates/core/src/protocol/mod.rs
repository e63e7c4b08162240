//! Dealer and party state machines and full-session orchestration.

mod check;
mod dealer;
mod party;
mod reconstruct;
mod session;
mod transcript;
mod types;

pub use check::{decoy_expectation, DecoyExpectation};
pub use dealer::{
    announce_decoy_ops, dealer_check, dealer_measure_publish, dealer_prepare, CheckTally, DealerOutcomes, DealerState,
    PartyLedger,
};
pub use party::{party_process, party_process_with, PartyBehavior, PartyOutput};
pub(crate) use reconstruct::combine as combine_shares;
pub use reconstruct::reconstruct;
pub use session::{
    run_session, run_session_with, run_session_with_tap, CollusionResult, SessionHooks, SessionOutcome, SessionResult,
};
pub use transcript::{party_name, EventKind, Transcript, TranscriptEvent, ALL_PARTIES, DEALER};
pub use types::{
    DecoyAnnouncement, DecoyPolicy, DecoyRecord, OpPolicy, OperationRecord, PartyOp, Permutation, QubitCounts,
    ReorderPolicy, Secret, SessionConfig,
};
