//! Space-time spline discretization of the acoustic wave equation.
//!
//! Maximal-regularity B-splines in time with trial and test spaces of the
//! same degree but shifted boundary trimming give a first-order-in-time
//! Galerkin scheme that is stable without a CFL condition. The crate holds
//! the temporal matrices and their nearly-Toeplitz structure, the matrix
//! symbols and CFL constants of the equal-space variant, the conditioning
//! tools, and a Kronecker-structured direct solver.

pub mod spline;
pub mod exact;
pub mod temporal;
pub mod symbol;
pub mod linalg;
pub mod ode;
pub mod spatial;
pub mod spacetime;
pub mod problems;
pub mod conditioning;
pub mod experiments;
pub mod wave_config;
pub mod selfcheck;
