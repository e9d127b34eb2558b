//! DC power-system security toolkit: grid modeling, power flow, contingency
//! sensitivities, state estimation, security-constrained OPF, and synthesis of
//! stealthy false-data-injection attack vectors that cause post-contingency
//! line overloads.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature only adds `std::error::Error` impls for the error types. All
//! algorithms are deterministic: identical inputs produce identical outputs,
//! including tie-breaking inside the optimizers.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod attack_synthesis;
pub mod dc_powerflow;
pub mod fixtures;
pub mod grid_model;
pub mod linalg;
pub mod lodf;
pub mod scopf;
pub mod simplex;
pub mod state_estimation;
pub mod verification;

#[cfg(test)]
mod test_support;

pub use attack_synthesis::{synthesize, AttackVector, SynthesisGoal, SynthesisOutcome};
pub use grid_model::{parse_case, serialize_case, GridCase};
pub use lodf::LodfMatrix;
pub use scopf::{solve_scopf, ScopfSolution};
pub use verification::{contingency_screen, verify, VerificationReport};
