//! Solvers and verification tools for time-harmonic elastic scattering by
//! biperiodic rigid surfaces.
//!
//! The crate covers the spectral side (mode data, Rayleigh expansions, the
//! exact and PML transparent boundary matrices, error constants) and two
//! finite element solvers: a per-mode 1D solver in the vertical direction
//! and a structured hexahedral 3D solver with quasi-periodic constraints.
//!
//! Data-parallel loops go through [`par`]; build without the default
//! `parallel` feature to run everything on the calling thread.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dtn;
pub mod efficiency;
pub mod error;
pub mod fields;
pub mod linalg;
pub mod modes;
pub mod par;
pub mod pml;
pub mod solver1d;
pub mod solver3d;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Complex 3-vector.
pub type CVec3 = nalgebra::Vector3<C64>;
/// Complex 3x3 matrix.
pub type CMat3 = nalgebra::Matrix3<C64>;
