//! Numerical laboratory for the symmetric simple exclusion process.
//!
//! The crate is `no_std` (with `alloc`) and contains every algorithm of the
//! laboratory: lattice geometry and discrete Hölder distances, Monte Carlo
//! simulation of labelled and unlabelled exclusion, exact transition kernels
//! via uniformization, numerical checks of heat-kernel gradient bounds, joint
//! cumulant estimation, and a splitting solver for the renormalized lattice
//! parabolic Anderson model. IO, configuration and orchestration live in the
//! `exlab` crate.
#![cfg_attr(not(test), no_std)]
// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cumulants;
pub mod error;
pub mod estimates;
pub mod exclusion;
pub mod kernels;
pub mod lattice;
pub mod math;
pub mod pam;

pub use error::{Error, Result};
pub use exclusion::{LabelledState, OccupationField, RngStream};
pub use kernels::{ExclusionSystem, Generator, KernelRow, StateSpace};
pub use lattice::{Geometry, ParticleConfig, Point, SpaceTimePoint};
