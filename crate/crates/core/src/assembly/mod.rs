//! Quadrature, form assembly and the SPD solver behind every projection.
//!
//! All forms take their coefficients at physical quadrature points, so terms
//! such as `∇⊥(r η)` are expanded pointwise by the caller rather than split
//! into separate integrals.

mod forms;
mod quadrature;
mod solver;
mod sparse;

pub use forms::{
    assemble_boundary_form, assemble_boundary_rhs, assemble_linear_form, assemble_matrix, assemble_rhs,
    assemble_weighted_mass, BoundaryPoint, QuadPoint, TestCoeffs, Weight,
};
pub use quadrature::{EdgeQuadrature, Quadrature};
pub use solver::{solve_spd, DEFAULT_TOL};
pub use sparse::{CsrMatrix, TripletBuilder};
