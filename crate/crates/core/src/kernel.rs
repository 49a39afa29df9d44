//! Kernel evaluation: RBF kernel with the median heuristic, and a rigid-pose
//! kernel on the weighted screw distance between transforms.

use crate::error::{Error, Result};
use crate::particles::ParticleSet;
use crate::scalar::Real;
use crate::se3::{se3_log_any, weighted_screw_norm, Transform};

/// Dense kernel matrix plus its gradients.
///
/// `grad(j, i)` holds the gradient of `k(z_j, z_i)` with respect to `z_j`.
#[derive(Clone, Debug)]
pub struct KernelEval<T> {
    n: usize,
    d: usize,
    k: Vec<T>,
    grad: Vec<T>,
}

impl<T: Real> KernelEval<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self, i: usize, j: usize) -> T {
        self.k[i * self.n + j]
    }

    pub fn grad(&self, j: usize, i: usize) -> &[T] {
        let base = (j * self.n + i) * self.d;
        &self.grad[base..base + self.d]
    }
}

pub(crate) fn sqdist<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        let diff = *x - *y;
        acc += diff * diff;
    }
    acc
}

fn median<T: Real>(values: &mut [T]) -> T {
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("non-NaN distances"));
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        (values[m / 2 - 1] + values[m / 2]) * T::half()
    }
}

/// Median-heuristic bandwidth `h = med^2 / log(n+1)` over pairwise Euclidean
/// distances. Falls back to 1 when all particles coincide.
pub fn median_bandwidth<T: Real>(x: &ParticleSet<T>) -> Result<T> {
    let n = x.n();
    if n < 2 {
        return Err(Error::DegenerateInput(
            "median bandwidth needs at least 2 particles".into(),
        ));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(sqdist(x.row(i), x.row(j)).sqrt());
        }
    }
    let med = median(&mut dists);
    if med == T::zero() {
        return Ok(T::one());
    }
    Ok(med * med / T::of_usize(n + 1).ln())
}

/// RBF kernel `k(a, b) = exp(-||a-b||^2 / h)` with gradients
/// `grad(j, i) = (2/h) (x_i - x_j) k(j, i)`.
pub fn rbf_kernel<T: Real>(x: &ParticleSet<T>, h: T) -> Result<KernelEval<T>> {
    if !(h > T::zero()) {
        return Err(Error::Parameter(format!("rbf bandwidth must be positive, got {h}")));
    }
    let (n, d) = (x.n(), x.d());
    let mut k = vec![T::zero(); n * n];
    let mut grad = vec![T::zero(); n * n * d];
    let two_over_h = T::two() / h;
    for i in 0..n {
        k[i * n + i] = T::one();
        for j in (i + 1)..n {
            let kij = (-sqdist(x.row(i), x.row(j)) / h).exp();
            k[i * n + j] = kij;
            k[j * n + i] = kij;
            // grad(j, i) = (2/h)(x_i - x_j) k; grad(i, j) is its negation
            let (ri, rj) = (x.row(i), x.row(j));
            for m in 0..d {
                let g = two_over_h * (ri[m] - rj[m]) * kij;
                grad[(j * n + i) * d + m] = g;
                grad[(i * n + j) * d + m] = -g;
            }
        }
    }
    Ok(KernelEval { n, d, k, grad })
}

/// Kernel value between two rigid transforms:
/// `exp(-||log(a^-1 b)||^2_W / h)`.
///
/// The screw norm is evaluated with the pi-tolerant rotation log, so the
/// value is defined for every pair of valid transforms (at a relative
/// rotation of exactly pi the axis sign is ambiguous but the norm is not).
pub fn se3_kernel_value<T: Real>(
    a: &Transform<T>,
    b: &Transform<T>,
    h: T,
    w: &[T; 6],
) -> Result<T> {
    if !(h > T::zero()) {
        return Err(Error::Parameter(format!("se3 bandwidth must be positive, got {h}")));
    }
    a.check_rotation()?;
    b.check_rotation()?;
    let rel = a.inverse().compose(b);
    Ok((-weighted_screw_norm(&se3_log_any(&rel), w) / h).exp())
}

fn pose_sq_screw_dist<T: Real>(a: &Transform<T>, b: &Transform<T>, w: &[T; 6]) -> T {
    let rel = a.inverse().compose(b);
    weighted_screw_norm(&se3_log_any(&rel), w)
}

/// Median-heuristic bandwidth over pairwise weighted screw distances of
/// packed `[t, axis-angle]` pose rows.
pub fn se3_median_bandwidth<T: Real>(poses: &ParticleSet<T>, w: &[T; 6]) -> Result<T> {
    let n = poses.n();
    if poses.d() != 6 {
        return Err(Error::Contract("pose particles must be 6-dimensional".into()));
    }
    if n < 2 {
        return Err(Error::DegenerateInput(
            "median bandwidth needs at least 2 particles".into(),
        ));
    }
    let transforms: Vec<Transform<T>> = poses.rows().map(Transform::from_pose_params).collect();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(pose_sq_screw_dist(&transforms[i], &transforms[j], w).sqrt());
        }
    }
    let med = median(&mut dists);
    if med == T::zero() {
        return Ok(T::one());
    }
    Ok(med * med / T::of_usize(n + 1).ln())
}

/// Rigid-pose kernel matrix over packed `[t, axis-angle]` pose rows.
///
/// Gradients are taken with respect to the 6 pose parameters of `z_j` by
/// central finite differences through the screw distance (step 1e-6).
pub fn se3_kernel<T: Real>(poses: &ParticleSet<T>, h: T, w: &[T; 6]) -> Result<KernelEval<T>> {
    if !(h > T::zero()) {
        return Err(Error::Parameter(format!("se3 bandwidth must be positive, got {h}")));
    }
    if poses.d() != 6 {
        return Err(Error::Contract("pose particles must be 6-dimensional".into()));
    }
    let n = poses.n();
    let d = 6usize;
    let transforms: Vec<Transform<T>> = poses.rows().map(Transform::from_pose_params).collect();
    let mut k = vec![T::zero(); n * n];
    for i in 0..n {
        k[i * n + i] = T::one();
        for j in (i + 1)..n {
            let kij = (-pose_sq_screw_dist(&transforms[i], &transforms[j], w) / h).exp();
            k[i * n + j] = kij;
            k[j * n + i] = kij;
        }
    }
    let step = T::cast(1e-6);
    let mut grad = vec![T::zero(); n * n * d];
    let mut probe = vec![T::zero(); d];
    for j in 0..n {
        for i in 0..n {
            if i == j {
                continue; // k(z, z) = 1 identically; gradient 0
            }
            probe.copy_from_slice(poses.row(j));
            for m in 0..d {
                let orig = probe[m];
                probe[m] = orig + step;
                let hi = (-pose_sq_screw_dist(&Transform::from_pose_params(&probe), &transforms[i], w)
                    / h)
                    .exp();
                probe[m] = orig - step;
                let lo = (-pose_sq_screw_dist(&Transform::from_pose_params(&probe), &transforms[i], w)
                    / h)
                    .exp();
                probe[m] = orig;
                grad[(j * n + i) * d + m] = (hi - lo) / (T::two() * step);
            }
        }
    }
    Ok(KernelEval { n, d, k, grad })
}
