//! Pure-state quantum substrate: slots, factors, GHZ and single-qubit
//! preparation, projective measurement and joint unitaries.

mod bits;
mod matrix;
mod pool;

pub use bits::{bits_to_k, k_to_bits, GhzSign, GhzSpec, MAX_PARTIES};
pub use matrix::{Amplitude, Operator, UNITARY_TOL};
pub use pool::{inner_product, BasisAmplitude, Basis, SingleState, SlotId, StateFactor, StatePool, NORM_TOL};
