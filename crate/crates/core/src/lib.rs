//! Focused stochastic local search over flaws and actions.
//!
//! An [`Instance`] describes a state space, the flaws that may be present in
//! a state, and randomized actions that address them. The walks in
//! [`walks`] drive such an instance to a flawless state. For small
//! instances whose state space can be listed ([`ExplicitInstance`]) the
//! crate also computes the charges and causality structure that bound the
//! walk's running time, and checks those bounds exactly in [`oracle`].
//!
//! Two applications ship with the crate: Moser–Tardos resampling for CNF
//! formulas in [`sat`] and acyclic edge coloring in [`aec`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aec;
pub mod causality;
pub mod charges;
pub mod conditions;
pub mod corpus;
pub mod error;
pub mod forests;
pub mod format;
pub mod instance;
pub mod oracle;
pub mod sat;
pub mod walks;

pub use error::{Error, Result};
pub use instance::{ExplicitBuilder, ExplicitInstance, FlawOrder, Instance, TOLERANCE};
