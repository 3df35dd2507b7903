//! Convex-linearity of quantum dynamics, checked numerically.
//!
//! Density matrices and epistemic ensembles are kept as distinct types, maps
//! act on states and on ensemble members separately, and audits look for
//! mixtures where the two disagree. The same questions are asked on IC
//! probability vectors and in a simulated Wigner's-friend laboratory.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod gpt;
pub mod kernel;
pub mod lab;
pub mod measurements;
pub mod optimize;
pub mod sampling;
pub mod states;
pub mod suite;

pub use dynamics::{audit_convex_linearity, DecoratedState, DynamicalMap, MapKind, SingleState, Verdict};
pub use error::{Error, Result};
pub use gpt::{equivalence_preservation_certificate, gpt_convex_linearity_check, induce, ProbVector};
pub use kernel::{ComplexMatrix, Subsystem, C64};
pub use measurements::{build_ic_povm, IcPovm, OutcomeDistribution, Povm};
pub use states::{DensityMatrix, Ensemble, Preparation, PureState};
