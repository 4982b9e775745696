//! Lattice operations on signed measures, transition kernels and measure
//! operators over finite carriers, plus stability analysis of Markov chains
//! and semigroups.
//!
//! Every Polish space is represented by a finite carrier ([`space`]); measures
//! are weight vectors on it and kernels are dense square arrays. The positive
//! part of a kernel operator is cross-checked against a brute-force supremum
//! over indicator test functions ([`operator`]).

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod exec;
pub mod io;
pub mod kernel;
pub mod measure;
pub mod operator;
pub mod semigroup;
pub mod space;

pub use error::{Error, Result};
pub use exec::Execution;
pub use kernel::TransitionKernel;
pub use measure::SignedMeasure;
pub use operator::{BlackBoxOperator, MeasureOperator};
pub use semigroup::SemigroupModel;
pub use space::{BasisSet, BoundedFunction, SpaceKind, SpaceRef, StateSpace, StateTag};
