//! Parametric finite element simulation of solid-state dewetting for
//! double-bubble thin films.
//!
//! Two adjacent films on a flat substrate are bounded by three open curves
//! meeting at a triple junction. The curves evolve by anisotropic surface
//! diffusion; the time stepping conserves the enclosed area exactly and
//! never increases the discrete interfacial energy.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`, which every driver in the crate uses.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod anisotropy;
pub mod config;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod predicates;
pub mod presets;
pub mod scalar;
pub mod scheme;
pub mod vec2;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use vec2::{Mat2, Vec2};

pub type Point = vec2::Vec2<f64>;
pub type Curve = geometry::CurveState<f64>;
pub type Network = geometry::NetworkState<f64>;
pub type Anisotropy = anisotropy::AnisotropySpec<f64>;
pub type CurveDensity = anisotropy::CurveAnisotropy<f64>;
