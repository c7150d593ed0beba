//! Certified Lipschitz bounds for STC and LRC networks, the elastance
//! construction that shrinks them, the generalization bound, and the
//! empirical counterparts.

mod construct;
mod correlation;
mod empirical;
mod generalization;
mod lipschitz;

pub use construct::{lrc_from_stc, lrc_model_from_stc, o_star};
pub use correlation::abs_cross_correlation;
pub use empirical::{
    default_h_bound, empirical_lipschitz, hidden_states, lipschitz_probes, LipschitzProbe,
};
pub use generalization::{descriptive_epsilons, generalization_bound, GeneralizationBoundInputs};
pub use lipschitz::{
    elastance_sensitivity_sup, lipschitz_bound, lipschitz_bound_with, stc_derivative_bound,
    LipschitzReport, H_BOUND_MARGIN, POWER_ITERATION_MAX, POWER_ITERATION_TOL,
};
