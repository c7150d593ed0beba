pub mod analysis;
pub mod autodiff;
pub mod cells;
pub mod error;
pub mod linalg;
pub mod math;
pub mod model;
pub mod solvers;
pub mod tasks;
pub mod train;

pub use error::{Error, Result};
