//! Ensemble control and observation on matrix Lie groups.
//!
//! Distinguished generator sets, adjoint matrix coefficients, broadcast
//! ensemble simulation, control synthesis by monomial fitting, moment-based
//! observability and the sphere example.

pub mod error;
pub mod linalg;
pub mod lie;
pub mod sampling;
pub mod structure;
pub mod coefficients;
pub mod grid;
pub mod ensemble;
pub mod synthesis;
pub mod observability;
pub mod homogeneous;
pub mod report;

pub use error::{Error, Result};
pub use lie::{
    bracket, btheta, cartan_theta, group_adjoint, group_exp, killing_form, AlgebraDescriptor,
    AlgebraElement, Family, GroupElement, Tolerances,
};
