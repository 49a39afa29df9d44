//! Problem bundles and solver configuration/report types.

use std::sync::Arc;
use std::time::Duration;

use crate::constraints::{ConstraintSet, ViolationReport};
use crate::error::{Error, Result};
use crate::particles::ParticleSet;
use crate::scalar::Real;
use crate::svgd::StepControl;

pub type ObjectiveFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type ObjectiveGradFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
pub type SamplerFn<T> = Arc<dyn Fn(&mut dyn rand::RngCore) -> Vec<T> + Send + Sync>;
pub type SweepHook = Arc<dyn Fn(u64) + Send + Sync>;

/// Which kernel the solvers evaluate between particles.
#[derive(Clone, Debug)]
pub enum KernelKind<T> {
    /// RBF on the raw coordinates, bandwidth from the median heuristic.
    EuclideanRbf,
    /// Rigid-pose kernel on packed `[t, axis-angle]` rows (d must be 6).
    /// `bandwidth: None` recomputes the median heuristic over weighted screw
    /// distances every sweep.
    Se3 {
        weights: [T; 6],
        bandwidth: Option<T>,
    },
}

/// One inference target: objective, temperature, constraints, kernel choice,
/// and a seeded initial sampler.
#[derive(Clone)]
pub struct Problem<T> {
    pub name: String,
    pub dim: usize,
    pub f: ObjectiveFn<T>,
    pub grad_f: ObjectiveGradFn<T>,
    /// Temperature of the target `p(x) = exp(-alpha f(x)) / Z`.
    pub alpha: T,
    pub constraints: ConstraintSet<T>,
    pub kernel: KernelKind<T>,
    pub init_sampler: SamplerFn<T>,
    /// Invoked by the solvers at the start of every inner sweep with the
    /// global sweep counter (used by the registration problem to resample
    /// its reference subset; the subset stays frozen within a sweep).
    pub sweep_hook: Option<SweepHook>,
}

impl<T: Real> Problem<T> {
    pub fn f(&self, x: &[T]) -> T {
        (self.f)(x)
    }

    pub fn grad_f(&self, x: &[T]) -> Vec<T> {
        (self.grad_f)(x)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Contract("problem dimension must be >= 1".into()));
        }
        if !(self.alpha > T::zero()) {
            return Err(Error::Parameter("temperature alpha must be positive".into()));
        }
        if self.constraints.lo.len() != self.dim || self.constraints.hi.len() != self.dim {
            return Err(Error::Contract("box bound lengths must match dimension".into()));
        }
        if let KernelKind::Se3 { .. } = self.kernel {
            if self.dim != 6 {
                return Err(Error::Contract("se3 kernel requires 6-dimensional particles".into()));
            }
        }
        Ok(())
    }
}

/// Whether the Q method keeps one formulation per particle or one shared.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaMode {
    PerParticle,
    Shared,
}

/// Coordinate mapping used by the p method for box bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MappingKind {
    /// No mapping; finite bounds are appended as inequality constraints.
    None,
    /// `m(x) = lo + (hi-lo)(tanh(x)+1)/2` per bounded dimension.
    Tanh,
    /// `m(x) = lo + (hi-lo)(sin(x)+1)/2` per bounded dimension.
    Sin,
}

/// Solver configuration shared by both methods.
#[derive(Clone, Debug)]
pub struct SolveConfig<T> {
    pub n_particles: usize,
    /// Inner loop stops when the mean per-particle displacement drops below
    /// this.
    pub inner_tol: T,
    /// Outer loop stops when the worst violation drops below this (and the
    /// inner loop converged).
    pub outer_tol: T,
    pub max_inner: u64,
    pub max_outer: u64,
    pub step: StepControl<T>,
    pub seed: u64,
    /// Q method only.
    pub theta_mode: ThetaMode,
    /// p method only.
    pub mapping: MappingKind,
}

impl<T: Real> SolveConfig<T> {
    pub fn new(n_particles: usize, seed: u64) -> Self {
        Self {
            n_particles,
            inner_tol: T::cast(1e-4),
            outer_tol: T::cast(1e-3),
            max_inner: 500,
            max_outer: 20,
            step: StepControl::default(),
            seed,
            theta_mode: ThetaMode::PerParticle,
            mapping: MappingKind::Tanh,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::Parameter("need at least one particle".into()));
        }
        if !(self.inner_tol > T::zero()) || !(self.outer_tol > T::zero()) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        if self.max_inner == 0 || self.max_outer == 0 {
            return Err(Error::Parameter("iteration caps must be positive".into()));
        }
        self.step.validate()
    }
}

/// Everything a solve produced.
#[derive(Clone, Debug)]
pub struct SolveReport<T> {
    /// Final particles, in original coordinates (the p method maps back).
    pub particles: ParticleSet<T>,
    /// Number of inner-loop particle-update sweeps summed over outer
    /// iterations.
    pub total_gradient_steps: u64,
    pub outer_iterations: u64,
    /// Worst-particle violation after each outer iteration.
    pub feasibility_trace: Vec<ViolationReport<T>>,
    pub converged: bool,
    pub wall_time: Duration,
}

impl<T: Real> SolveReport<T> {
    pub fn final_violation(&self) -> Option<&ViolationReport<T>> {
        self.feasibility_trace.last()
    }
}
