//! Constrained Stein variational gradient descent.
//!
//! Builds particle approximations of constrained target densities
//! `p(x) ∝ exp(-alpha f(x))` restricted to a feasible set, via two drivers:
//! the Q method (per-particle constraint gradients outside the kernel
//! average, plus box projection) and the p method (constraints folded into a
//! smooth surrogate density so their gradients are shared through the
//! kernel). Ships four soft constraint formulations, SE(3) geometry and
//! kernels, four benchmark problems, and evaluation tools (rejection-sampled
//! ground truth, exact Earth Mover Distance, gradient checks, trial
//! matrices).
//!
//! All numeric code is generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases below fix the common choice.

pub mod constraints;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod particles;
pub mod problem;
pub mod problems;
pub mod scalar;
pub mod se3;
pub mod solver;
pub mod svgd;

pub use constraints::{
    pool_least, pool_worst, violation, ConstraintFn, ConstraintSet, FormulationParams,
    SoftFormulation, SoftKind, ViolationReport,
};
pub use error::{Error, Result};
pub use kernel::{
    median_bandwidth, rbf_kernel, se3_kernel, se3_kernel_value, se3_median_bandwidth, KernelEval,
};
pub use particles::ParticleSet;
pub use problem::{
    KernelKind, MappingKind, Problem, SolveConfig, SolveReport, ThetaMode,
};
pub use scalar::Real;
pub use solver::{p_log_target, p_log_target_grad, q_log_target_grad, solve_p, solve_q};
pub use svgd::{backtracking_line_search, project_box, svgd_direction, StepControl};

/// Concrete `f64` aliases for the main types.
pub type ParticleSet64 = ParticleSet<f64>;
pub type Problem64 = Problem<f64>;
pub type SolveConfig64 = SolveConfig<f64>;
pub type SolveReport64 = SolveReport<f64>;
pub type SoftFormulation64 = SoftFormulation<f64>;
pub type ConstraintSet64 = ConstraintSet<f64>;
pub type StepControl64 = StepControl<f64>;
pub type Transform64 = se3::Transform<f64>;
pub type Screw64 = se3::Screw<f64>;
