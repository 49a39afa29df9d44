//! Pose estimation from point clouds: a truncated nearest-neighbor ICP cost
//! over a resampled object subset, with table-placement constraints (above
//! the table, inside its radius, axis vertical) and a rigid-pose kernel.
//!
//! Decision variables are a packed 6-vector `[t_x, t_y, t_z, w_x, w_y, w_z]`
//! (translation plus axis-angle rotation).

use std::sync::{Arc, RwLock};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraints::{ConstraintFn, ConstraintSet};
use crate::problem::{KernelKind, Problem};
use crate::scalar::Real;
use crate::se3::Transform;

/// Synthetic tabletop scene: a cylinder standing on a circular table, seen
/// from one side (hidden half of the cylinder and an occlusion-shadow stripe
/// of the table are missing from the scene cloud).
#[derive(Clone, Debug)]
pub struct IcpScene<T> {
    /// Observed scene cloud (table + visible cylinder surface).
    pub scene: Vec<[T; 3]>,
    /// Full object model cloud in its own frame (origin at the axis
    /// midpoint).
    pub object: Vec<[T; 3]>,
    /// True pose translation of the object frame.
    pub true_center: [T; 3],
    pub table_radius: T,
    pub cylinder_radius: T,
    pub cylinder_height: T,
}

/// Deterministic scene generator.
pub fn synthetic_cylinder_scene<T: Real>(seed: u64) -> IcpScene<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table_radius = T::cast(0.5);
    let cyl_radius = T::cast(0.1);
    let cyl_height = T::cast(0.3);
    let center = [T::cast(0.12), T::cast(-0.09)];
    // camera off in -x; the visible half of the cylinder faces it
    let camera = [T::cast(-1.5), T::zero()];
    let toward = [camera[0] - center[0], camera[1] - center[1]];
    let toward_angle = toward[1].atan2(toward[0]);
    let away_angle = toward_angle + T::PI();

    let mut scene = Vec::new();
    // table disk, minus the object footprint and its occlusion shadow
    let n_table = 700;
    let mut made = 0;
    while made < n_table {
        let u: T = rng.random_range(T::zero()..T::one());
        let phi: T = rng.random_range(T::zero()..T::two() * T::PI());
        let r = table_radius * u.sqrt();
        let p = [r * phi.cos(), r * phi.sin(), T::zero()];
        let rel = [p[0] - center[0], p[1] - center[1]];
        let rel_norm = (rel[0] * rel[0] + rel[1] * rel[1]).sqrt();
        if rel_norm < cyl_radius {
            continue; // under the object
        }
        // shadow stripe: behind the object as seen from the camera
        let away = [away_angle.cos(), away_angle.sin()];
        let along = rel[0] * away[0] + rel[1] * away[1];
        let perp = (rel[0] * away[1] - rel[1] * away[0]).abs();
        if along > T::zero() && perp < cyl_radius {
            continue;
        }
        scene.push(p);
        made += 1;
    }
    // visible half of the cylinder side
    let n_side = 400;
    for _ in 0..n_side {
        let phi = toward_angle
            + rng.random_range(-T::PI() * T::half()..T::PI() * T::half());
        let z: T = rng.random_range(T::zero()..cyl_height);
        scene.push([
            center[0] + cyl_radius * phi.cos(),
            center[1] + cyl_radius * phi.sin(),
            z,
        ]);
    }
    // top disk (camera is elevated, the whole top is visible)
    let n_top = 150;
    for _ in 0..n_top {
        let u: T = rng.random_range(T::zero()..T::one());
        let phi: T = rng.random_range(T::zero()..T::two() * T::PI());
        let r = cyl_radius * u.sqrt();
        scene.push([
            center[0] + r * phi.cos(),
            center[1] + r * phi.sin(),
            cyl_height,
        ]);
    }

    // object model: full side plus top disk, centered on the axis midpoint
    let mut object = Vec::new();
    let half = cyl_height * T::half();
    for _ in 0..420 {
        let phi: T = rng.random_range(T::zero()..T::two() * T::PI());
        let z: T = rng.random_range(-half..half);
        object.push([cyl_radius * phi.cos(), cyl_radius * phi.sin(), z]);
    }
    for _ in 0..140 {
        let u: T = rng.random_range(T::zero()..T::one());
        let phi: T = rng.random_range(T::zero()..T::two() * T::PI());
        let r = cyl_radius * u.sqrt();
        object.push([r * phi.cos(), r * phi.sin(), half]);
    }

    IcpScene {
        scene,
        object,
        true_center: [center[0], center[1], half],
        table_radius,
        cylinder_radius: cyl_radius,
        cylinder_height: cyl_height,
    }
}

/// ICP benchmark parameters.
#[derive(Clone)]
pub struct IcpProblem<T> {
    pub scene: IcpScene<T>,
    /// Object subset size resampled every sweep.
    pub n_subset: usize,
    /// Truncation distance: matches farther than this contribute nothing.
    pub d_max: T,
    pub alpha: T,
    pub seed: u64,
}

impl<T: Real> IcpProblem<T> {
    pub fn with_defaults(scene: IcpScene<T>, seed: u64) -> Self {
        Self {
            scene,
            n_subset: 64,
            d_max: T::cast(0.1),
            alpha: T::cast(100.0),
            seed,
        }
    }
}

fn sample_subset(seed: u64, sweep: u64, total: usize, n: usize) -> Vec<usize> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed.wrapping_add(sweep.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    // partial Fisher-Yates over index vector
    let mut idx: Vec<usize> = (0..total).collect();
    for k in 0..n.min(total) {
        let pick = rng.random_range(k..total);
        idx.swap(k, pick);
    }
    idx.truncate(n.min(total));
    idx
}

fn nearest_distance<T: Real>(scene: &[[T; 3]], p: &[T; 3]) -> T {
    let mut best = T::infinity();
    for s in scene {
        let dx = s[0] - p[0];
        let dy = s[1] - p[1];
        let dz = s[2] - p[2];
        let sq = dx * dx + dy * dy + dz * dz;
        if sq < best {
            best = sq;
        }
    }
    best.sqrt()
}

/// Truncated mean nearest-neighbor cost of the transformed object subset.
pub fn icp_cost<T: Real>(
    scene: &[[T; 3]],
    object: &[[T; 3]],
    subset: &[usize],
    d_max: T,
    pose: &[T],
) -> T {
    let tf = Transform::from_pose_params(pose);
    let mut total = T::zero();
    for &i in subset {
        let p = tf.apply(&object[i]);
        let d = nearest_distance(scene, &p);
        if d < d_max {
            total += d;
        }
    }
    total / (T::one() + T::of_usize(subset.len()))
}

/// Build the SVGD problem. The reference subset is resampled from the seed
/// stream at the start of every sweep (via the sweep hook) and stays frozen
/// within a sweep, so the finite-difference cost gradient is well defined.
pub fn icp_problem<T: Real>(spec: &IcpProblem<T>) -> Problem<T> {
    let scene = Arc::new(spec.scene.scene.clone());
    let object = Arc::new(spec.scene.object.clone());
    let n_subset = spec.n_subset.min(object.len());
    let d_max = spec.d_max;
    let seed = spec.seed;
    let subset = Arc::new(RwLock::new(sample_subset(seed, 0, object.len(), n_subset)));

    let mut cons = ConstraintSet::unbounded(6);
    // g1: above the table (z > 0 encoded as -z <= 0)
    cons.inequalities.push(ConstraintFn::new(
        |x: &[T]| -x[2],
        |x: &[T]| {
            let mut g = vec![T::zero(); x.len()];
            g[2] = -T::one();
            g
        },
    ));
    // g2: inside the table radius
    let r = spec.scene.table_radius;
    cons.inequalities.push(ConstraintFn::new(
        move |x: &[T]| x[0] * x[0] + x[1] * x[1] - r * r,
        |x: &[T]| {
            let mut g = vec![T::zero(); x.len()];
            g[0] = T::two() * x[0];
            g[1] = T::two() * x[1];
            g
        },
    ));
    // h: axis vertical; the pose's own rotation log is its axis-angle part,
    // so the x/y screw components are just the parameters
    cons.equalities.push(ConstraintFn::new(
        |x: &[T]| x[3] * x[3] + x[4] * x[4],
        |x: &[T]| {
            let mut g = vec![T::zero(); x.len()];
            g[3] = T::two() * x[3];
            g[4] = T::two() * x[4];
            g
        },
    ));

    let scene_f = scene.clone();
    let object_f = object.clone();
    let subset_f = subset.clone();
    let scene_g = scene;
    let object_g = object;
    let subset_g = subset.clone();
    let object_len = object_g.len();
    let table_radius = spec.scene.table_radius;
    let init_z_max = spec.scene.cylinder_height;
    Problem {
        name: "icp".into(),
        dim: 6,
        f: Arc::new(move |x: &[T]| {
            let subset = subset_f.read().expect("subset lock");
            icp_cost(&scene_f, &object_f, &subset, d_max, x)
        }),
        grad_f: Arc::new(move |x: &[T]| {
            // central differences over the 6 pose coordinates with the
            // subset frozen
            let subset = subset_g.read().expect("subset lock");
            let step = T::cast(1e-6);
            let mut grad = vec![T::zero(); 6];
            let mut probe = x.to_vec();
            for k in 0..6 {
                let orig = probe[k];
                probe[k] = orig + step;
                let hi = icp_cost(&scene_g, &object_g, &subset, d_max, &probe);
                probe[k] = orig - step;
                let lo = icp_cost(&scene_g, &object_g, &subset, d_max, &probe);
                probe[k] = orig;
                grad[k] = (hi - lo) / (T::two() * step);
            }
            grad
        }),
        alpha: spec.alpha,
        constraints: cons,
        kernel: KernelKind::Se3 {
            weights: [T::one(); 6],
            bandwidth: None,
        },
        init_sampler: Arc::new(move |rng: &mut dyn rand::RngCore| {
            // position uniform over the table disk at a modest height,
            // orientation uniform inside the axis-angle ball of radius pi
            let u: T = rng.random_range(T::zero()..T::one());
            let phi: T = rng.random_range(T::zero()..T::two() * T::PI());
            let rr = table_radius * u.sqrt();
            let z: T = rng.random_range(T::cast(0.02)..init_z_max);
            let w = loop {
                let w = [
                    rng.random_range(-T::PI()..T::PI()),
                    rng.random_range(-T::PI()..T::PI()),
                    rng.random_range(-T::PI()..T::PI()),
                ];
                if (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt() <= T::PI() {
                    break w;
                }
            };
            vec![rr * phi.cos(), rr * phi.sin(), z, w[0], w[1], w[2]]
        }),
        sweep_hook: Some(Arc::new(move |sweep: u64| {
            let mut guard = subset.write().expect("subset lock");
            *guard = sample_subset(seed, sweep, object_len, n_subset);
        })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_scene() -> IcpScene<f64> {
        IcpScene {
            scene: vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.5, 0.5, 0.5],
            ],
            object: vec![[0.0, 0.0, 0.0], [0.6, 0.5, 0.45]],
            true_center: [0.0, 0.0, 0.0],
            table_radius: 1.0,
            cylinder_radius: 0.1,
            cylinder_height: 0.3,
        }
    }

    #[test]
    fn cost_hand_computed_on_tiny_clouds() {
        let s = tiny_scene();
        let identity = [0.0; 6];
        let subset = vec![0usize, 1usize];
        // object point 0 coincides with scene point 0: d = 0
        // object point 1 = (0.6, 0.5, 0.45): nearest scene point is
        // (0.5, 0.5, 0.5) at distance sqrt(0.01 + 0 + 0.0025)
        let d1 = (0.01f64 + 0.0025).sqrt();
        let expect = (0.0 + d1) / 3.0; // 1/(1+N) with N = 2
        let got = icp_cost(&s.scene, &s.object, &subset, 10.0, &identity);
        assert!((got - expect).abs() < 1e-15);
    }

    #[test]
    fn truncation_drops_far_points() {
        let s = tiny_scene();
        let subset = vec![1usize];
        // d_max below the point's NN distance: contributes 0
        let got = icp_cost(&s.scene, &s.object, &subset, 0.05, &[0.0; 6]);
        assert_eq!(got, 0.0);
    }

    #[test]
    fn aligned_object_has_near_zero_cost() {
        let scene = synthetic_cylinder_scene::<f64>(3);
        let spec = IcpProblem::with_defaults(scene.clone(), 3);
        let p = icp_problem(&spec);
        let true_pose = [
            scene.true_center[0],
            scene.true_center[1],
            scene.true_center[2],
            0.0,
            0.0,
            0.0,
        ];
        let f = p.f(&true_pose);
        // dense clouds: every visible-side subset point sits close to the
        // scene surface
        assert!(f < 0.02, "cost at the true pose is {f}");
    }

    #[test]
    fn cost_bounded_by_truncation() {
        let scene = synthetic_cylinder_scene::<f64>(5);
        let spec = IcpProblem::with_defaults(scene, 5);
        let p = icp_problem(&spec);
        let bound = spec.d_max * spec.n_subset as f64 / (1.0 + spec.n_subset as f64);
        for pose in [
            [0.0, 0.0, 0.05, 0.0, 0.0, 0.4],
            [0.3, -0.2, 0.5, 0.1, 0.4, 0.0],
            [5.0, 5.0, 5.0, 0.0, 0.0, 0.0],
        ] {
            let f = p.f(&pose);
            assert!(f >= 0.0 && f <= bound, "cost {f} outside [0, {bound}]");
        }
    }

    #[test]
    fn scene_generator_deterministic_per_seed() {
        let a = synthetic_cylinder_scene::<f64>(11);
        let b = synthetic_cylinder_scene::<f64>(11);
        assert_eq!(a.scene, b.scene);
        assert_eq!(a.object, b.object);
        let c = synthetic_cylinder_scene::<f64>(12);
        assert_ne!(a.scene, c.scene);
    }

    #[test]
    fn subset_resampling_is_deterministic_and_frozen_between_hooks() {
        let scene = synthetic_cylinder_scene::<f64>(7);
        let spec = IcpProblem::with_defaults(scene, 7);
        let p = icp_problem(&spec);
        let hook = p.sweep_hook.as_ref().unwrap();
        hook(0);
        let f0 = p.f(&[0.1, 0.0, 0.1, 0.0, 0.0, 0.0]);
        let f0_again = p.f(&[0.1, 0.0, 0.1, 0.0, 0.0, 0.0]);
        assert_eq!(f0, f0_again);
        hook(1);
        let f1 = p.f(&[0.1, 0.0, 0.1, 0.0, 0.0, 0.0]);
        hook(0);
        let f0_back = p.f(&[0.1, 0.0, 0.1, 0.0, 0.0, 0.0]);
        assert_eq!(f0, f0_back);
        // different sweeps draw different subsets (almost surely)
        assert_ne!(f0, f1);
    }

    #[test]
    fn verticality_constraint_reads_rotation_params() {
        let scene = synthetic_cylinder_scene::<f64>(9);
        let spec = IcpProblem::with_defaults(scene, 9);
        let p = icp_problem(&spec);
        let h = &p.constraints.equalities[0];
        let v = (h.value)(&[0.0, 0.0, 0.1, 0.3, -0.4, 2.0]);
        assert!((v - 0.25).abs() < 1e-15);
        let g = (h.grad)(&[0.0, 0.0, 0.1, 0.3, -0.4, 2.0]);
        assert_eq!(g, vec![0.0, 0.0, 0.0, 0.6, -0.8, 0.0]);
    }

    #[test]
    fn init_sampler_within_bounds() {
        use rand::SeedableRng;
        let scene = synthetic_cylinder_scene::<f64>(13);
        let spec = IcpProblem::with_defaults(scene.clone(), 13);
        let p = icp_problem(&spec);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = (p.init_sampler)(&mut rng);
            assert!(x[0] * x[0] + x[1] * x[1] <= scene.table_radius.powi(2) + 1e-12);
            assert!(x[2] > 0.0 && x[2] <= scene.cylinder_height);
            let wn = (x[3] * x[3] + x[4] * x[4] + x[5] * x[5]).sqrt();
            assert!(wn <= std::f64::consts::PI);
        }
    }
}
