//! Kinetic models with distributed delay.
//!
//! Particles `x_i` evolve by `x_i'(t) = sum_j w_j K(x_i(t), x_j(t + .))`, where the
//! kernel `K` reads the recent history of each partner on `[-tau, 0]`. The crate
//! provides
//!
//! * history paths and the sup metric ([`paths`]),
//! * discrete measures, exact optimal transport and `W1` ([`measures`], [`ot`]),
//! * Lipschitz kernels and the imperfect-delay construction ([`kernels`]),
//! * a method-of-steps integrator with dense output ([`dde`]),
//! * the mean-field fixed point in path space and its transport counterpart ([`meanfield`]),
//! * a-priori bounds, stability and convergence studies ([`analysis`]),
//! * CSV/JSON serialization ([`io`]).

pub mod analysis;
pub mod dde;
pub mod error;
pub mod io;
pub mod kernels;
pub mod meanfield;
pub mod measures;
pub mod ot;
pub mod paths;

pub use analysis::{
    convergence_study, flow_bounds, groenwall_envelope, imperfect_sensitivity_bound, sensitivity_bound,
    stability_rate, stability_study, stability_study_transport, BoundParams, ConvergenceSetup, ConvergenceTable,
    FlowBounds, InitialSampler, StabilityReport,
};
pub use dde::{simulate_imperfect, simulate_model, simulate_particles, DenseTrajectory, FlowMap, IntegratorConfig, Model, Scheme};
pub use error::{Error, Result};
pub use kernels::{builtin_kernels, compose_imperfect, DelayKernel, DelayMeasure, KernelSpec, PointKernel};
pub use meanfield::{
    coherence_check, ev_curve, gamma, solve_fixed_point, solve_fixed_point_model, solve_transport, CoherenceReport,
    FixedPoint, FixedPointConfig, PathMeasureCurve, PicardRecord, TransportSolution,
};
pub use measures::{sup_wasserstein, wasserstein1, DiscreteMeasure, MeasureCurve};
pub use paths::{History, HistoryPath, Point, Trajectory};

/// Version of this library.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
