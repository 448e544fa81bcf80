//! Numerical quantum hypothesis testing.
//!
//! This crate computes both sides of the asymptotic identity between the
//! optimal type-II error exponent of quantum hypothesis testing against a
//! free-state family and the regularized relative entropy of resource:
//!
//! - [`hypotest`] solves the minimax type-II error `β_ε(ρ^⊗n ‖ S_n)` with a
//!   primal test, a dual certificate, and a duality gap;
//! - [`resource`] minimizes the relative entropy `D(ρ^⊗n ‖ σ)` over the
//!   free-state set `S_n`;
//! - both are built on extended-real arithmetic ([`xreal`]), Hermitian
//!   spectral calculus ([`herm`]), density matrices ([`state`]), and
//!   entropies with pinching ([`entropy`]).
//!
//! Entropy values live in `[0, ∞]` ([`xreal::XNNReal`]) with the conventions
//! `∞ * 0 = 0` and `log 0 = 0`; the infinite branch of the relative entropy
//! is part of the contract, not an error.
//!
//! Natural logarithms throughout; reporting in other bases is a presentation
//! concern.

pub mod entropy;
pub mod error;
pub mod herm;
pub mod hypotest;
mod lapack;
pub mod parallel;
pub mod resource;
pub mod selftest;
pub mod state;
pub mod xreal;

pub use error::{Error, Result};
pub use herm::{HermitianMat, Spectrum};
pub use state::{Factor, Ket, MState};
pub use xreal::{Prob, XNNReal};
