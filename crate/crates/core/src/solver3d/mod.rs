//! Structured hexahedral finite elements for one lattice cell.
//!
//! Trilinear vector elements on a uniform box mesh, quasi-periodic in the
//! horizontal directions. The artificial boundary is either the truncated
//! transparent condition on `x3 = h` or an absorbing layer on top of it.
//! The discrete system is solved by GMRES preconditioned with the exact
//! inverse of the flat-surface operator, which is block diagonal after a
//! horizontal DFT.

mod assembly;
mod fourier;
mod mesh;
mod solve;

pub use assembly::{assemble_system, AssembledSystem, AssemblyOptions, Variant};
pub use fourier::{FourierPreconditioner, PlaneFft};
pub use mesh::{build_mesh, Bump, Geometry, HexMesh, NodeTag};
pub use solve::{boundary_mode_coefficients, solve_system, NodalField, SolveReport};
