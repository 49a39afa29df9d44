//! The four benchmark problems, each packaged as a [`Benchmark`] bundling a
//! seeded problem builder with tuned solver defaults.

use std::sync::Arc;

use rand::Rng;
use rand::RngCore;

use crate::constraints::FormulationParams;
use crate::problem::{Problem, SolveConfig};
use crate::scalar::Real;

pub mod icp;
pub mod ik;
pub mod toy2d;
pub mod trajectory;

pub use icp::{icp_problem, synthetic_cylinder_scene, IcpProblem, IcpScene};
pub use ik::{ik_problem, reference_arm, IkProblem};
pub use toy2d::toy2d_problem;
pub use trajectory::{trajectory_problem, TrajectoryProblem};

/// A benchmark: a seed-parameterized problem builder plus the solver and
/// formulation defaults it was tuned with.
#[derive(Clone)]
pub struct Benchmark<T> {
    pub name: &'static str,
    pub build: Arc<dyn Fn(u64) -> Problem<T> + Send + Sync>,
    pub config: SolveConfig<T>,
    pub params: FormulationParams<T>,
}

/// Standard normal draw (Box-Muller); keeps samplers generic over the
/// scalar type.
pub(crate) fn gauss<T: Real>(rng: &mut dyn RngCore) -> T {
    let tiny = T::cast(1e-12);
    let u1: T = rng.random_range(tiny..T::one());
    let u2: T = rng.random_range(T::zero()..T::one());
    (-T::two() * u1.ln()).sqrt() * (T::two() * T::PI() * u2).cos()
}

pub fn toy2d_benchmark<T: Real>() -> Benchmark<T> {
    let mut config = SolveConfig::new(50, 0);
    config.inner_tol = T::cast(2e-4);
    config.outer_tol = T::cast(1e-3);
    config.max_inner = 400;
    config.max_outer = 25;
    config.step = crate::svgd::StepControl::new(0.2, 0.5, 40, 1e-9);
    let mut params = FormulationParams::default();
    params.c0 = T::one();
    params.d0 = T::one();
    Benchmark {
        name: "toy2d",
        build: Arc::new(|_seed| toy2d_problem(T::cast(2.0))),
        config,
        params,
    }
}

pub fn trajectory_benchmark<T: Real>() -> Benchmark<T> {
    let mut config = SolveConfig::new(20, 0);
    config.inner_tol = T::cast(1e-4);
    config.outer_tol = T::cast(1e-4);
    config.max_inner = 400;
    config.max_outer = 30;
    config.step = crate::svgd::StepControl::new(0.05, 0.5, 40, 1e-10);
    let mut params = FormulationParams::default();
    params.d0 = T::cast(0.1);
    Benchmark {
        name: "trajectory",
        build: Arc::new(|_seed| {
            trajectory_problem(&TrajectoryProblem::default_scene(T::cast(50.0)))
        }),
        config,
        params,
    }
}

pub fn ik_benchmark<T: Real>() -> Benchmark<T> {
    let mut config = SolveConfig::new(50, 0);
    config.inner_tol = T::cast(3e-5);
    config.outer_tol = T::cast(1e-3);
    config.max_inner = 330;
    config.max_outer = 60;
    config.step = crate::svgd::StepControl::new(0.1, 0.5, 40, 1e-10);
    let mut params = FormulationParams::default();
    params.c0 = T::one();
    Benchmark {
        name: "ik",
        build: Arc::new(|_seed| ik_problem(&IkProblem::default_task(T::cast(5.0)))),
        config,
        params,
    }
}

pub fn icp_benchmark<T: Real>() -> Benchmark<T> {
    let mut config = SolveConfig::new(100, 0);
    config.inner_tol = T::cast(1e-4);
    config.outer_tol = T::cast(1e-6);
    config.max_inner = 150;
    config.max_outer = 12;
    config.step = crate::svgd::StepControl::new(0.05, 0.5, 40, 1e-10);
    let mut params = FormulationParams::default();
    params.c0 = T::cast(10.0);
    params.d0 = T::cast(10.0);
    Benchmark {
        name: "icp",
        build: Arc::new(|seed| {
            let scene = synthetic_cylinder_scene::<T>(seed);
            icp_problem(&IcpProblem::with_defaults(scene, seed))
        }),
        config,
        params,
    }
}

/// All four benchmarks keyed by name.
pub fn benchmark<T: Real>(name: &str) -> Option<Benchmark<T>> {
    match name {
        "toy2d" => Some(toy2d_benchmark()),
        "trajectory" => Some(trajectory_benchmark()),
        "ik" => Some(ik_benchmark()),
        "icp" => Some(icp_benchmark()),
        _ => None,
    }
}
