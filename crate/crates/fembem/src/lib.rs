//! Three-field FEM-BEM coupling for the 2D Helmholtz transmission problem.

pub mod assembly;
pub mod bem;
pub mod discretization;
pub mod driver;
pub mod norms;
pub mod reference;
pub mod geometry;
pub mod specfun;
