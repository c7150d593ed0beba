//! Time-stepping schemes for cell derivatives.
//!
//! Fixed-step schemes advance one observation interval with the input held
//! constant (zero-order hold). [`dopri45_solve`] is an adaptive integrator used
//! for ground-truth generation and evaluation of the Neural-ODE baseline.

mod config;
mod dopri;
mod fixed;

pub use config::{DopriConfig, Scheme, SolverConfig};
pub use dopri::{dopri45_solve, OdeSolution};
pub use fixed::{euler_advance, hybrid_euler_advance, rk4_advance};
