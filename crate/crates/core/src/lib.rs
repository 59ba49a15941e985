//! Finite-dimensional realizations of black-hole transmission channels.
//!
//! The crate builds truncated Fock-space isometries for the perfectly
//! reflecting (Unruh), perfectly absorbing (beam-splitter/squeezer), and
//! vacuum Hawking channels, extracts their direct-sum block structure on a
//! dual-rail qubit, and evaluates coherent information, quantum capacities,
//! clone fidelities, and entanglement-breaking (PPT) tests.
//!
//! Modules:
//! - [`tensor`]: dense complex linear algebra (partial trace/transpose,
//!   Hermitian eigensolves, matrix exponential, entropy).
//! - [`fock`]: truncated Fock states, squeezing/absorbing isometries, and
//!   physical parameter conversions.
//! - [`channels`]: Stinespring/Kraus/Choi representations, block extraction,
//!   and the cloning/depolarizing closed forms.
//! - [`capacity`]: coherent-information optimization, capacity series, PPT
//!   and direct-sum-lemma checks, clone fidelities.
//! - [`verify`]: named check suites shared by the CLI and the test harness.

pub mod capacity;
pub mod channels;
pub mod error;
pub mod fock;
pub mod par;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
