//! Transfer of axisymmetric Grad-Shafranov equilibria onto a target finite
//! element mesh.
//!
//! Given the poloidal flux `psi` and the toroidal field function `f` as
//! piecewise-linear fields, the crate builds the poloidal/toroidal magnetic
//! field, the current density, the divergence of the poloidal field and the
//! Lorentz force on a target triangulation of the `(r, z)` plane, along three
//! projection paths built from lowest-order compatible spaces (Raviart-Thomas,
//! Nedelec, Lagrange, piecewise constants) or vector Lagrange spaces.

pub mod acceptance;
pub mod assembly;
pub mod config;
pub mod diagnostics;
pub mod equilibria;
mod error;
pub mod fixtures;
pub mod mesh;
pub mod spaces;
pub mod transfer;

pub use error::{Error, Result};
pub use mesh::{Mesh2D, Point2};
pub use spaces::{Field, FunctionSpace, SpaceKind};
