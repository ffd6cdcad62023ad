//! Tangent-bundle geometry for charged-particle dynamics.
//!
//! A metric and a 4-potential define, for every charge-to-mass ratio α, a
//! Randers-type spray on the tangent bundle. This crate builds that spray and
//! its nonlinear (Ehresmann) and affine connections, computes their curvature
//! and tidal tensors, integrates worldlines and worldline deviations, and
//! checks the tidal-tensor forms of the Maxwell and Einstein equations on
//! concrete spacetimes.
//!
//! Derivatives are exact: catalog fields ship closed-form jets to second
//! order and everything above them is differentiated by nested forward-mode
//! duals (see [`scalar`]).

pub mod connection;
pub mod curvature;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod scalar;
pub mod scenario;
pub mod table;
pub mod tensor;
pub mod verify;

pub use error::{GeometryError, Result};
