//! Numerical kernels shared by the film solvers.

pub mod banded;
pub mod bvp;
pub mod quadrature;
pub mod roots;
