//! A numerical laboratory for fixed-momentum optimization schemes and the
//! continuous-time systems they approximate.
//!
//! The crate provides, in order of the pipeline:
//! - [`objective`]: test objectives with exact gradients, Hessian-vector
//!   products, and derivative bounds on boxes;
//! - [`schemes`]: the general momentum iteration (Heavy Ball and Nesterov as
//!   special cases), its two-step form, the rescaled-Euler baseline, and the
//!   exponential split-step method;
//! - [`flows`]: closed-form or Richardson-verified reference solutions of
//!   the limiting and modified differential equations;
//! - [`manifold`]: the attractive invariant graph v = lambda_bar f(u) + h g(u),
//!   its step-size feasibility constants, and the contraction solve for g;
//! - [`analysis`]: sup-norm errors and convergence-order estimation over
//!   dyadic step refinements;
//! - [`toynet`]: a desk-scale autoencoder trained by every scheme to show
//!   the theory survives minibatch noise;
//! - [`csvio`]: byte-stable CSV/JSON writers for all artifacts.

// `!(x >= 0.0)` and friends are used throughout as NaN-rejecting argument
// validation; the positively phrased comparisons clippy suggests would
// silently accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod csvio;
pub mod error;
pub mod flows;
pub mod linalg;
pub mod manifold;
pub mod objective;
pub mod rng;
pub mod schemes;
pub mod toynet;

pub use error::{Error, Result};
pub use objective::{
    derivative_bounds, make_composite, make_quadratic, make_quadratic_centered,
    make_trigonometric, modified_grad, BoxRegion, DerivativeBounds, ObjectiveKind, ObjectiveSpec,
    Region,
};
pub use schemes::{
    lambda_mu, lambda_schedule_n, run_general, run_hb, run_nag, run_rescaled_euler, run_two_form,
    run_wilson, DiscreteTrajectory, MomentumParams,
};
pub use flows::{
    alpha_of, beta_init, c_coefficient, modified_operator_residual, solve_modified_flow,
    solve_rgf, solve_visco, solve_wilson_ode, ContinuousSolution, ExpTrajectory, PolyTrajectory,
    Provenance, SmoothTrajectory,
};
pub use manifold::{
    apply_t, apply_t_at, attraction_bound, check_h_small, constants_report, leading_order_g,
    manifold_distance, solve_inner_xi, solve_manifold_g, AttractionBound, ConstantsReport, GMode,
    ManifoldGraph, ManifoldSolution,
};
pub use analysis::{fit_order, rate_delta, rate_sweep, sup_error, RateReport};
pub use toynet::{
    make_synthetic_dataset, param_rate, train, Dataset, Method, MlpAutoencoder, TrainConfig,
    TrainResult,
};
