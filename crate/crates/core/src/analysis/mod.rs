//! Detection estimates, exact enumeration oracles, qubit efficiency and
//! exhaustive correctness checks.

mod detection;
mod efficiency;
mod exact;
mod report;
mod verify;

pub use detection::{estimate_detection, trial_secret, wilson_interval, DetectionEstimate};
pub use efficiency::{
    derive_efficiency_this_work, efficiency_table, formula_qubits, qubit_efficiency, EfficiencyDerivation,
    EfficiencyEntry, ProtocolId,
};
pub use exact::{
    enumerate_detection, enumerate_detection_exact, enumerate_detection_exact_for, probe_outcome_distribution, simulate_detection, total_variation,
    Alignment, ScenarioFilter,
};
pub use report::{
    read_detection_report, read_efficiency_report, write_detection_report, write_efficiency_report, DetectionRow,
    EfficiencyRow, ReportFormat, DETECTION_HEADER, EFFICIENCY_HEADER,
};
pub use verify::{
    verify_algebra, verify_all, verify_ghz_orthonormality, Counterexample, GhzFailure, VerifyOptions, VerifyReport,
    GHZ_TOL, MAX_CELL_SESSIONS,
};
