//! Numerical building blocks: special functions, adaptive quadrature,
//! bracketing root finders and a quasi-Newton minimizer.

pub mod optim;
pub mod quad;
pub mod roots;
pub mod special;
