//! Numerical laboratory for the fractional singular stochastic Burgers equation
//! `du = Lambda^gamma u dt + D(u^2) dt + |D|^{1/2} dW` on the torus.

pub mod algebra;
pub mod besov;
pub mod noise;
pub mod quadrature;
pub mod spectral;
pub mod trajectory;
pub mod solver;
pub mod trees;
