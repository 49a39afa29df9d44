//! Trajectory optimization with circular obstacles: free 2-D waypoints
//! between a fixed start and goal, squared-acceleration cost, and one
//! inequality per (segment, obstacle) pair on the point-to-segment distance.

use std::sync::Arc;

use crate::constraints::{ConstraintFn, ConstraintSet};
use crate::problem::{KernelKind, Problem};
use crate::problems::gauss;
use crate::scalar::Real;

/// Scene description. Decision variables are the `t_free` interior
/// waypoints, flattened as `[x_1, y_1, ..., x_T, y_T]` (dimension `2 T`).
#[derive(Clone, Debug)]
pub struct TrajectoryProblem<T> {
    pub start: [T; 2],
    pub goal: [T; 2],
    pub t_free: usize,
    /// (center, radius) per obstacle.
    pub obstacles: Vec<([T; 2], T)>,
    pub alpha: T,
    /// Std-dev of the Gaussian noise added to the straight-line
    /// initialization.
    pub init_noise: T,
}

impl<T: Real> TrajectoryProblem<T> {
    /// The benchmark scene: straight line blocked by one obstacle, two more
    /// nearby so distinct homotopy classes exist.
    pub fn default_scene(alpha: T) -> Self {
        Self {
            start: [T::cast(-1.0), T::zero()],
            goal: [T::one(), T::zero()],
            t_free: 20,
            obstacles: vec![
                ([T::cast(-0.3), T::zero()], T::cast(0.25)),
                ([T::cast(0.35), T::cast(0.25)], T::cast(0.25)),
                ([T::cast(0.2), T::cast(-0.35)], T::cast(0.2)),
            ],
            alpha,
            init_noise: T::cast(0.15),
        }
    }
}

/// Point `t` of the extended sequence `[start, x_1..x_T, goal]`.
fn point_at<T: Real>(spec: &TrajectoryProblem<T>, x: &[T], t: usize) -> [T; 2] {
    if t == 0 {
        spec.start
    } else if t == spec.t_free + 1 {
        spec.goal
    } else {
        [x[2 * (t - 1)], x[2 * t - 1]]
    }
}

/// Distance from `c` to segment `[a, b]`, plus the clamped projection
/// parameter `u` and the unit normal from `c` to the nearest point.
fn segment_distance<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2]) -> (T, T, [T; 2]) {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ac = [c[0] - a[0], c[1] - a[1]];
    let denom = ab[0] * ab[0] + ab[1] * ab[1];
    let mut u = if denom > T::zero() {
        (ac[0] * ab[0] + ac[1] * ab[1]) / denom
    } else {
        T::zero()
    };
    u = u.max(T::zero()).min(T::one());
    let p = [a[0] + u * ab[0], a[1] + u * ab[1]];
    let diff = [p[0] - c[0], p[1] - c[1]];
    let dist = (diff[0] * diff[0] + diff[1] * diff[1]).sqrt();
    let normal = if dist > T::zero() {
        [diff[0] / dist, diff[1] / dist]
    } else {
        [T::zero(), T::zero()]
    };
    (dist, u, normal)
}

/// Build the SVGD problem for a scene.
pub fn trajectory_problem<T: Real>(spec: &TrajectoryProblem<T>) -> Problem<T> {
    let d = 2 * spec.t_free;
    let mut cons = ConstraintSet::unbounded(d);

    // one inequality g = r - dist(segment_t, center) per segment/obstacle
    for t in 0..=spec.t_free {
        for (center, radius) in spec.obstacles.iter().copied() {
            let sv = spec.clone();
            let sg = spec.clone();
            cons.inequalities.push(ConstraintFn::new(
                move |x: &[T]| {
                    let a = point_at(&sv, x, t);
                    let b = point_at(&sv, x, t + 1);
                    let (dist, _, _) = segment_distance(a, b, center);
                    radius - dist
                },
                move |x: &[T]| {
                    let a = point_at(&sg, x, t);
                    let b = point_at(&sg, x, t + 1);
                    let (dist, u, normal) = segment_distance(a, b, center);
                    let mut grad = vec![T::zero(); x.len()];
                    if dist == T::zero() {
                        // nearest point coincides with the center: no
                        // usable direction, leave the subgradient at zero
                        return grad;
                    }
                    // envelope theorem: d(dist)/da = (1-u) n, d(dist)/db = u n
                    if t >= 1 {
                        grad[2 * (t - 1)] = -(T::one() - u) * normal[0];
                        grad[2 * t - 1] = -(T::one() - u) * normal[1];
                    }
                    if t + 1 <= sg.t_free {
                        grad[2 * t] = -u * normal[0];
                        grad[2 * t + 1] = -u * normal[1];
                    }
                    grad
                },
            ));
        }
    }

    let sf = spec.clone();
    let sg = spec.clone();
    let si = spec.clone();
    let t_free = spec.t_free;
    Problem {
        name: "trajectory".into(),
        dim: d,
        f: Arc::new(move |x: &[T]| {
            let mut total = T::zero();
            for t in 1..=sf.t_free {
                let prev = point_at(&sf, x, t - 1);
                let here = point_at(&sf, x, t);
                let next = point_at(&sf, x, t + 1);
                for k in 0..2 {
                    let acc = next[k] - T::two() * here[k] + prev[k];
                    total += acc * acc;
                }
            }
            total
        }),
        grad_f: Arc::new(move |x: &[T]| {
            let mut grad = vec![T::zero(); x.len()];
            for t in 1..=sg.t_free {
                let prev = point_at(&sg, x, t - 1);
                let here = point_at(&sg, x, t);
                let next = point_at(&sg, x, t + 1);
                for k in 0..2 {
                    let acc = next[k] - T::two() * here[k] + prev[k];
                    let two_acc = T::two() * acc;
                    if t >= 2 {
                        grad[2 * (t - 2) + k] += two_acc;
                    }
                    grad[2 * (t - 1) + k] += -T::two() * two_acc;
                    if t < sg.t_free {
                        grad[2 * t + k] += two_acc;
                    }
                }
            }
            grad
        }),
        alpha: spec.alpha,
        constraints: cons,
        kernel: KernelKind::EuclideanRbf,
        init_sampler: Arc::new(move |rng: &mut dyn rand::RngCore| {
            // straight-line interpolation plus Gaussian noise
            let mut x = Vec::with_capacity(2 * t_free);
            let steps = T::of_usize(t_free + 1);
            for t in 1..=t_free {
                let frac = T::of_usize(t) / steps;
                for k in 0..2 {
                    let base = si.start[k] + (si.goal[k] - si.start[k]) * frac;
                    x.push(base + si.init_noise * gauss::<T>(rng));
                }
            }
            x
        }),
        sweep_hook: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::violation;
    use crate::eval::grad_check;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_scene() -> TrajectoryProblem<f64> {
        TrajectoryProblem {
            start: [-1.0, 0.0],
            goal: [1.0, 0.0],
            t_free: 4,
            obstacles: vec![([0.0, 1.0], 0.5)],
            alpha: 1.0,
            init_noise: 0.1,
        }
    }

    #[test]
    fn collinear_equally_spaced_waypoints_have_zero_cost() {
        let spec = small_scene();
        let p = trajectory_problem(&spec);
        // exact straight line: x_t = -1 + 2 t / 5
        let x: Vec<f64> = (1..=4)
            .flat_map(|t| vec![-1.0 + 2.0 * t as f64 / 5.0, 0.0])
            .collect();
        assert!(p.f(&x).abs() < 1e-28);
    }

    #[test]
    fn segment_obstacle_distance_hand_value() {
        // segment (-1,0)..(1,0), obstacle center (0,1) radius 0.5:
        // distance 1, g = -0.5
        let (dist, u, _) = segment_distance::<f64>([-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        assert!((dist - 1.0).abs() < 1e-15);
        assert!((u - 0.5).abs() < 1e-15);

        let spec = small_scene();
        let p = trajectory_problem(&spec);
        let straight: Vec<f64> = (1..=4)
            .flat_map(|t| vec![-1.0 + 2.0 * t as f64 / 5.0, 0.0])
            .collect();
        let r = violation(&p.constraints, &straight);
        // the segment under the obstacle is at distance exactly 1 (g = -0.5);
        // the others clamp to an endpoint and are farther away
        let max_g = r
            .ineq_values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((max_g - (-0.5)).abs() < 1e-12, "max g = {max_g}");
        for g in &r.ineq_values {
            assert!(*g <= -0.5 + 1e-12);
        }
    }

    #[test]
    fn straight_line_through_obstacle_center_is_infeasible() {
        let spec = TrajectoryProblem {
            obstacles: vec![([0.0, 0.0], 0.5)],
            ..small_scene()
        };
        let p = trajectory_problem(&spec);
        let straight: Vec<f64> = (1..=4)
            .flat_map(|t| vec![-1.0 + 2.0 * t as f64 / 5.0, 0.0])
            .collect();
        let r = violation(&p.constraints, &straight);
        // the straight line passes through the center: dist = 0 somewhere
        assert!((r.max_pos_g - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cost_gradient_matches_finite_differences() {
        let spec = small_scene();
        let p = trajectory_problem(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let points: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..8).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let f = p.f.clone();
        let gf = p.grad_f.clone();
        assert!(grad_check(&move |x: &[f64]| f(x), &move |x: &[f64]| gf(x), &points) < 1e-6);
    }

    #[test]
    fn constraint_gradients_match_finite_differences_away_from_seams() {
        let spec = small_scene();
        let p = trajectory_problem(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 50 {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.5..1.5)).collect();
            // skip configurations where any segment projection parameter is
            // near its clamp (the one-sided seam) or distance is tiny
            let mut near_seam = false;
            for t in 0..=4usize {
                let a = point_at(&spec, &x, t);
                let b = point_at(&spec, &x, t + 1);
                let (dist, u, _) = segment_distance(a, b, [0.0, 1.0]);
                if u < 1e-2 || u > 1.0 - 1e-2 || dist < 1e-2 {
                    near_seam = true;
                }
            }
            if near_seam {
                continue;
            }
            checked += 1;
            for c in &p.constraints.inequalities {
                let (cv, cg) = (c.value.clone(), c.grad.clone());
                let err = grad_check(
                    &move |y: &[f64]| cv(y),
                    &move |y: &[f64]| cg(y),
                    &[x.clone()],
                );
                assert!(err < 1e-5, "constraint gradient error {err}");
            }
        }
    }

    #[test]
    fn cost_and_constraints_translation_invariant() {
        let spec = small_scene();
        let p = trajectory_problem(&spec);
        let shift = [0.7, -0.4];
        let shifted_spec = TrajectoryProblem {
            start: [spec.start[0] + shift[0], spec.start[1] + shift[1]],
            goal: [spec.goal[0] + shift[0], spec.goal[1] + shift[1]],
            obstacles: spec
                .obstacles
                .iter()
                .map(|(c, r)| ([c[0] + shift[0], c[1] + shift[1]], *r))
                .collect(),
            ..spec.clone()
        };
        let ps = trajectory_problem(&shifted_spec);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let xs: Vec<f64> = x
                .iter()
                .enumerate()
                .map(|(k, v)| v + shift[k % 2])
                .collect();
            assert!((p.f(&x) - ps.f(&xs)).abs() < 1e-12);
            let ra = violation(&p.constraints, &x);
            let rb = violation(&ps.constraints, &xs);
            for (ga, gb) in ra.ineq_values.iter().zip(&rb.ineq_values) {
                assert!((ga - gb).abs() < 1e-12);
            }
        }
    }
}
