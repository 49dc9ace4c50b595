//! Continuous structure learning for linear structural equation models.
//!
//! The crate provides a family of differentiable acyclicity constraints over
//! weighted adjacency matrices, a smoothed proximal-gradient solver wrapped in
//! an augmented-Lagrangian outer loop, and the synthetic-data / scoring
//! utilities needed to run recovery experiments end to end.
//!
//! The central promise of the solver is that returned adjacency matrices carry
//! *exact* floating-point zeros on the entries it deems absent: sparsity comes
//! out of the proximal operator, not from thresholding a dense estimate after
//! the fact.
//!
//! The crate is `no_std` (with `alloc`) so the numerical core can be embedded
//! anywhere; IO, file formats and the experiment CLI live in the companion
//! `exdag-cli` crate.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod constraint;
pub mod linalg;
pub mod metrics;
pub mod objective;
pub mod optim;
pub mod sem;

pub use constraint::{ConstraintEval, ConstraintKind, ConstraintSpec};
pub use linalg::DenseMatrix;
pub use objective::AlmParams;
pub use optim::{OptimConfig, RunReport, RunStatus};
