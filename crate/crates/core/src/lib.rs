//! Mixing-probability trade-off profiles between two quantum channels.
//!
//! Given channels `E` and `F`, the library computes how much of each must be
//! replaced by a harmonizing channel so that the two mixtures become
//! identical:
//!
//! ```text
//! (1 - p) E + p E_Δ  =  (1 - q) F + q F_Δ
//! ```
//!
//! The `(p, q)` boundary is traced over the ratio `β = (1 - q) / (1 - p)`
//! using cheap analytic bounds on `α = q / (1 - p)` ([`disguise`]) and an
//! exact semidefinite solve ([`sdp_exact`]). Derived
//! relations (containment, triangle combination, composition, diamond-norm
//! bracket, key-rate bound) live in [`relations`].

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod disguise;
mod error;
pub mod io;
mod ipm;
pub mod matkit;
pub mod relations;
pub mod sdp_exact;

pub use channels::{ChoiRep, KrausChannel};
pub use disguise::{BetaSample, ProfileCurve, TradeoffPoint};
pub use error::{Error, Result};
pub use matkit::{ComplexMatrix, EigenSystem, C64};
pub use sdp_exact::{ExactProblem, ExactSolution, SolverMethod, SolverOptions, WarmStart};
