//! Two-dimensional toy problem: linear cost `f(x) = x_1 + x_2` with the
//! single inequality `x_1^2 + x_2^2 - 2 <= 0` inside the box `[-2, 2]^2`.
//! The constrained minimum (the target's mode) sits at `(-1, -1)`.

use std::sync::Arc;

use rand::Rng;

use crate::constraints::{ConstraintFn, ConstraintSet};
use crate::problem::{KernelKind, Problem};
use crate::scalar::Real;

/// Build the toy problem at temperature `alpha`. Initial particles are
/// drawn uniformly over the feasible disk (so barrier formulations start
/// strictly feasible, which they require).
pub fn toy2d_problem<T: Real>(alpha: T) -> Problem<T> {
    let two = T::two();
    let mut cons = ConstraintSet::unbounded(2).with_box(vec![-two, -two], vec![two, two]);
    cons.inequalities.push(ConstraintFn::new(
        |x: &[T]| x[0] * x[0] + x[1] * x[1] - T::two(),
        |x: &[T]| vec![T::two() * x[0], T::two() * x[1]],
    ));
    Problem {
        name: "toy2d".into(),
        dim: 2,
        f: Arc::new(|x: &[T]| x[0] + x[1]),
        grad_f: Arc::new(|_| vec![T::one(), T::one()]),
        alpha,
        constraints: cons,
        kernel: KernelKind::EuclideanRbf,
        init_sampler: Arc::new(|rng: &mut dyn rand::RngCore| {
            // uniform over the feasible disk by rejection from the box
            loop {
                let x = rng.random_range(-T::two()..T::two());
                let y = rng.random_range(-T::two()..T::two());
                if x * x + y * y <= T::two() {
                    return vec![x, y];
                }
            }
        }),
        sweep_hook: None,
    }
}
