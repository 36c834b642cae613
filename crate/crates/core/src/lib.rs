//! Distributed linear parameter estimation over randomly failing networks.
//!
//! Sensors observe noisy linear functions of an unknown parameter and run a
//! mixed time-scale recursion: a consensus potential with weight
//! `β(i) = b/(i+1)^τ₂` pulls neighbouring estimates together over whatever
//! links are alive at iteration `i`, while an innovation potential with weight
//! `α(i) = a/(i+1)^τ₁` folds each new observation in. With `τ₂ < τ₁` the
//! consensus dominates asymptotically and every sensor tracks the centralized
//! estimator that sees all observations.
//!
//! Modules:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`graph`] | Laplacians, Fiedler values, random topology models |
//! | [`sensing`] | Linear observation model with fading noise |
//! | [`estimators`] | Distributed and centralized recursions, parameter validators |
//! | [`analysis`] | Asymptotic covariance, optimal gain, convergence oracles |
//! | [`harness`] | Seeded Monte Carlo trials, configs, result files |

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod sensing;

pub use analysis::{
    asymptotic_covariance, critical_gain_scale, normality_check, optimal_gain,
    quadratic_form_bound, rate_fit, scalar_recursion, solve_lyapunov, AsymptoticCovariance,
    ContractionSchedule, DecaySchedule, NormalityReport, QuadraticFormBound, RateFit,
};
pub use error::{Error, Result};
pub use estimators::{
    centralized_step, consensus_weight, glu_step, innovation_weight, network_average,
    validate_central_params, validate_glu_params, CentralParams, CentralState, GluParams,
    NetworkState, Violation,
};
pub use graph::{
    check_mean_connectivity, fiedler_value, laplacian, mean_laplacian, sample_topology, Graph,
    Laplacian, TopologyModel,
};
pub use harness::{run_experiment, run_trial, Experiment, ExperimentConfig, TrialRecord};
pub use sensing::{
    check_global_observability, fading_gain, grammian, innovation_dispersion, sample_observation,
    NoiseDistribution, SensingModel, StackedObservation,
};
