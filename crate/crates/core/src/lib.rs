//! Learning disentangled linear transformation generators from unlabeled point sets.
//!
//! Points are paired with their nearest neighbours; the differences are explained by a
//! few matrix Lie algebra generators `A_k` acting as `x̄ ≈ x + Σ_k t_k A_k x`. The
//! [`solver`] module fits these through a sampled trace-norm relaxation, a non-convex
//! baseline, or both in sequence, and [`disentangle`] makes the learned factors
//! uncorrelated.

pub mod cli;
pub mod data;
pub mod disentangle;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod expm;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod neighbors;
pub mod solver;
pub mod synth;
pub mod whiten;

pub use data::{Dataset, GeneratorSet, PairSet, Provenance};
pub use error::{Error, Result};
