//! Mean-field spin models solved through their Hamilton-Jacobi description.
//!
//! The pressure of a Curie-Weiss type model with a symmetric, bounded spin
//! measure is minus the solution of a Hamilton-Jacobi equation in the
//! mechanical coordinates `x = βh`, `t = β`. This crate provides the
//! Hopf-Lax solution, its shock structure, finite-size ground truth and the
//! two-party generalization.

pub mod bipartite;
pub mod checks;
pub mod error;
pub mod finite_n;
pub mod io;
pub mod measure;
pub mod optimize;
pub mod quadrature;
pub mod shock;
pub mod single_party;
pub mod sweep;

pub use error::{Error, Result};
pub use measure::{MeasureConfig, MeasureKind, MeasureSpec, SpinMeasure, Symmetry, TiltedState};
pub use single_party::{ModelPoint, SinglePartySolution, ThermoState};
