//! Closed-form and quadrature-based quantities for the edge count.

pub mod bounds;
pub mod moments;
pub mod phase;
pub mod radial;

pub use bounds::{
    calibrated_params, fit_theorem3_constants, gamma1_estimate, gamma2_numeric, gamma3n_numeric, gamma3p_numeric,
    mean_edges, mean_edges_log, solve_lambda, theorem3_form, tv_bound, variance_bracket, variance_quadrature,
    wasserstein_bound, BoundEngine, BoundOptions, BoundReport, DomainChoice, GammaMode, RateSample, VarianceMode,
};
pub use moments::{moment_report, MomentReport};
pub use phase::{phase_diagnostic, PhaseReport, Regime};
pub use radial::{copair_b, local_mean_a, local_mean_a_log, Estimate, RadialProfile};
