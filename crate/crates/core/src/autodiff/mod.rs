//! Reverse-mode differentiation of unrolled sequences and a finite-difference
//! oracle that shares none of its code.

mod check;
mod gradient;
mod sequence;
pub mod tape;

pub use check::{gradient_pair, half_squared_norm, FD_STEP};
pub use gradient::{
    finite_difference_gradient, relative_error, GradientComparison, GradientSet, GRAD_CHECK_FLOOR,
    GRAD_CHECK_TOL,
};
pub use sequence::{backward_sequence, forward_sequence, ForwardRecord};
