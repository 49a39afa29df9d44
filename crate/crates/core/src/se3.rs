//! SO(3)/SE(3) exponential and logarithm maps, rigid-transform algebra,
//! weighted screw norms, and serial-chain forward kinematics.
//!
//! Screws are ordered translation-first: `[t_x, t_y, t_z, r_x, r_y, r_z]`.
//! The rotation log uses the principal branch; the public [`se3_log`] refuses
//! rotations within `1e-6` of the branch cut at angle pi, while the kernel
//! path uses an internal pi-tolerant variant (the screw *norm* is still well
//! defined there even though the axis sign is not).

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];

/// Angle threshold below which the series expansions of the exp/log
/// coefficients are used instead of the closed forms.
const SMALL_ANGLE: f64 = 1e-2;

/// Distance from pi at which the rotation log refuses to pick a branch.
const PI_MARGIN: f64 = 1e-6;

fn dot3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3<T: Real>(a: &Vec3<T>) -> T {
    dot3(a, a).sqrt()
}

pub fn mat3_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = T::zero();
            for (k, brow) in b.iter().enumerate() {
                acc += a[i][k] * brow[j];
            }
            out[i][j] = acc;
        }
    }
    out
}

fn mat3_transpose<T: Real>(a: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

fn mat3_vec<T: Real>(a: &Mat3<T>, v: &Vec3<T>) -> Vec3<T> {
    [dot3(&a[0], v), dot3(&a[1], v), dot3(&a[2], v)]
}

fn mat3_det<T: Real>(a: &Mat3<T>) -> T {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

fn hat<T: Real>(w: &Vec3<T>) -> Mat3<T> {
    let z = T::zero();
    [
        [z, -w[2], w[1]],
        [w[2], z, -w[0]],
        [-w[1], w[0], z],
    ]
}

/// A rigid transform: rotation `r` (row-major 3x3) plus translation `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform<T> {
    pub r: Mat3<T>,
    pub t: Vec3<T>,
}

impl<T: Real> Transform<T> {
    pub fn identity() -> Self {
        let mut r = [[T::zero(); 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            row[i] = T::one();
        }
        Self {
            r,
            t: [T::zero(); 3],
        }
    }

    /// Validating constructor: `r` must be orthonormal with determinant +1.
    pub fn new(r: Mat3<T>, t: Vec3<T>) -> Result<Self> {
        let tr = Self { r, t };
        tr.check_rotation()?;
        Ok(tr)
    }

    pub fn from_translation(t: Vec3<T>) -> Self {
        Self {
            r: Self::identity().r,
            t,
        }
    }

    /// Build from a packed 6-vector `[t, axis-angle]` pose parameterization.
    pub fn from_pose_params(p: &[T]) -> Self {
        let w = [p[3], p[4], p[5]];
        Self {
            r: so3_exp(&w),
            t: [p[0], p[1], p[2]],
        }
    }

    pub fn check_rotation(&self) -> Result<()> {
        let tol = T::cast(1e-9);
        let rtr = mat3_mul(&mat3_transpose(&self.r), &self.r);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { T::one() } else { T::zero() };
                if (rtr[i][j] - want).abs() > tol {
                    return Err(Error::Geometry("rotation block is not orthonormal".into()));
                }
            }
        }
        if (mat3_det(&self.r) - T::one()).abs() > tol {
            return Err(Error::Geometry("rotation block has determinant != +1".into()));
        }
        Ok(())
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self {
            r: mat3_mul(&self.r, &other.r),
            t: {
                let rt = mat3_vec(&self.r, &other.t);
                [self.t[0] + rt[0], self.t[1] + rt[1], self.t[2] + rt[2]]
            },
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = mat3_transpose(&self.r);
        let nt = mat3_vec(&rt, &self.t);
        Self {
            r: rt,
            t: [-nt[0], -nt[1], -nt[2]],
        }
    }

    pub fn apply(&self, p: &Vec3<T>) -> Vec3<T> {
        let rp = mat3_vec(&self.r, p);
        [rp[0] + self.t[0], rp[1] + self.t[1], rp[2] + self.t[2]]
    }
}

/// 6-vector image of the SE(3) log map, translation part first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Screw<T>(pub [T; 6]);

impl<T: Real> Screw<T> {
    pub fn zero() -> Self {
        Screw([T::zero(); 6])
    }

    pub fn translation(&self) -> Vec3<T> {
        [self.0[0], self.0[1], self.0[2]]
    }

    pub fn rotation(&self) -> Vec3<T> {
        [self.0[3], self.0[4], self.0[5]]
    }
}

/// xi^T W xi for a diagonal nonnegative weight matrix.
pub fn weighted_screw_norm<T: Real>(xi: &Screw<T>, w: &[T; 6]) -> T {
    let mut acc = T::zero();
    for i in 0..6 {
        acc += w[i] * xi.0[i] * xi.0[i];
    }
    acc
}

pub fn so3_exp<T: Real>(w: &Vec3<T>) -> Mat3<T> {
    let theta = norm3(w);
    let (a, b) = if theta < T::cast(SMALL_ANGLE) {
        // sin(t)/t and (1-cos t)/t^2 series
        let t2 = theta * theta;
        (
            T::one() - t2 / T::cast(6.0) + t2 * t2 / T::cast(120.0),
            T::half() - t2 / T::cast(24.0) + t2 * t2 / T::cast(720.0),
        )
    } else {
        (theta.sin() / theta, (T::one() - theta.cos()) / (theta * theta))
    };
    let h = hat(w);
    let h2 = mat3_mul(&h, &h);
    let mut r = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { T::one() } else { T::zero() };
            r[i][j] = id + a * h[i][j] + b * h2[i][j];
        }
    }
    r
}

/// Rotation angle of `r` in `[0, pi]`, via atan2 of the symmetric and
/// antisymmetric parts (well conditioned at both ends).
fn so3_angle<T: Real>(r: &Mat3<T>) -> T {
    let v = [
        r[2][1] - r[1][2],
        r[0][2] - r[2][0],
        r[1][0] - r[0][1],
    ];
    let s = norm3(&v) * T::half();
    let c = (r[0][0] + r[1][1] + r[2][2] - T::one()) * T::half();
    s.atan2(c)
}

/// Principal-branch rotation log. Errors within [`PI_MARGIN`] of angle pi.
pub fn so3_log<T: Real>(r: &Mat3<T>) -> Result<Vec3<T>> {
    let theta = so3_angle(r);
    if theta > T::PI() - T::cast(PI_MARGIN) {
        return Err(Error::Branch(format!(
            "rotation angle {theta} is within {PI_MARGIN} of pi"
        )));
    }
    Ok(so3_log_any(r))
}

/// Rotation log that tolerates the angle-pi case by picking a deterministic
/// axis sign. Used where only norms (or near-pi robustness) matter.
pub(crate) fn so3_log_any<T: Real>(r: &Mat3<T>) -> Vec3<T> {
    let v = [
        r[2][1] - r[1][2],
        r[0][2] - r[2][0],
        r[1][0] - r[0][1],
    ];
    let s = norm3(&v) * T::half();
    let c = (r[0][0] + r[1][1] + r[2][2] - T::one()) * T::half();
    let theta = s.atan2(c);

    if theta < T::cast(SMALL_ANGLE) {
        // theta/(2 sin theta) = 1/2 + theta^2/12 + 7 theta^4/720
        let t2 = theta * theta;
        let k = T::half() + t2 / T::cast(12.0) + T::cast(7.0 / 720.0) * t2 * t2;
        return [k * v[0], k * v[1], k * v[2]];
    }
    if theta > T::PI() - T::cast(PI_MARGIN) {
        // Near pi the antisymmetric part vanishes; recover the axis from the
        // symmetric part (R + I)/2 = a a^T + cos-terms.
        let one_minus_c = T::one() - c;
        let mut k = 0;
        for i in 1..3 {
            if r[i][i] > r[k][k] {
                k = i;
            }
        }
        let akk = ((r[k][k] - c) / one_minus_c).max(T::zero()).sqrt();
        let mut a = [T::zero(); 3];
        a[k] = akk;
        for j in 0..3 {
            if j != k && akk > T::zero() {
                a[j] = (r[j][k] + r[k][j]) / (T::two() * one_minus_c * akk);
            }
        }
        // Fix the sign: follow the antisymmetric part when it is usable,
        // otherwise make the largest-magnitude component positive.
        let align = dot3(&a, &v);
        let flip = if align.abs() > T::cast(1e-12) {
            align < T::zero()
        } else {
            let mut m = 0;
            for i in 1..3 {
                if a[i].abs() > a[m].abs() {
                    m = i;
                }
            }
            a[m] < T::zero()
        };
        if flip {
            for ai in &mut a {
                *ai = -*ai;
            }
        }
        let n = norm3(&a);
        let scale = if n > T::zero() { theta / n } else { T::zero() };
        return [a[0] * scale, a[1] * scale, a[2] * scale];
    }
    let k = theta / (T::two() * theta.sin());
    [k * v[0], k * v[1], k * v[2]]
}

pub fn se3_exp<T: Real>(xi: &Screw<T>) -> Transform<T> {
    let rho = xi.translation();
    let w = xi.rotation();
    let theta = norm3(&w);
    let (b, c) = if theta < T::cast(SMALL_ANGLE) {
        let t2 = theta * theta;
        (
            T::half() - t2 / T::cast(24.0) + t2 * t2 / T::cast(720.0),
            T::cast(1.0 / 6.0) - t2 / T::cast(120.0) + t2 * t2 / T::cast(5040.0),
        )
    } else {
        let t2 = theta * theta;
        (
            (T::one() - theta.cos()) / t2,
            (theta - theta.sin()) / (t2 * theta),
        )
    };
    let h = hat(&w);
    let h2 = mat3_mul(&h, &h);
    let mut t = [T::zero(); 3];
    for i in 0..3 {
        let mut acc = rho[i];
        for j in 0..3 {
            acc += (b * h[i][j] + c * h2[i][j]) * rho[j];
        }
        t[i] = acc;
    }
    Transform {
        r: so3_exp(&w),
        t,
    }
}

pub fn se3_log<T: Real>(tr: &Transform<T>) -> Result<Screw<T>> {
    let theta = so3_angle(&tr.r);
    if theta > T::PI() - T::cast(PI_MARGIN) {
        return Err(Error::Branch(format!(
            "rotation angle {theta} is within {PI_MARGIN} of pi"
        )));
    }
    Ok(se3_log_any(tr))
}

pub(crate) fn se3_log_any<T: Real>(tr: &Transform<T>) -> Screw<T> {
    let w = so3_log_any(&tr.r);
    let theta = norm3(&w);
    // V^{-1} = I - hat/2 + D hat^2
    let d = if theta < T::cast(SMALL_ANGLE) {
        let t2 = theta * theta;
        T::cast(1.0 / 12.0) + t2 / T::cast(720.0) + t2 * t2 / T::cast(30240.0)
    } else {
        let (s, c) = (theta.sin(), theta.cos());
        (T::one() - theta * s / (T::two() * (T::one() - c))) / (theta * theta)
    };
    let h = hat(&w);
    let h2 = mat3_mul(&h, &h);
    let mut rho = [T::zero(); 3];
    for i in 0..3 {
        let mut acc = tr.t[i];
        for j in 0..3 {
            acc += (-T::half() * h[i][j] + d * h2[i][j]) * tr.t[j];
        }
        rho[i] = acc;
    }
    Screw([rho[0], rho[1], rho[2], w[0], w[1], w[2]])
}

/// One revolute joint: rotation about `axis` followed by the fixed `offset`
/// transform to the next joint (or to the end effector, for the last joint).
#[derive(Clone, Debug)]
pub struct Joint<T> {
    pub axis: Vec3<T>,
    pub offset: Transform<T>,
}

/// Serial chain of revolute joints with box joint limits.
#[derive(Clone, Debug)]
pub struct KinematicChain<T> {
    pub joints: Vec<Joint<T>>,
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Real> KinematicChain<T> {
    pub fn new(joints: Vec<Joint<T>>, lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != joints.len() || hi.len() != joints.len() {
            return Err(Error::Contract("joint limit lengths must match joint count".into()));
        }
        for j in &joints {
            if (norm3(&j.axis) - T::one()).abs() > T::cast(1e-9) {
                return Err(Error::Parameter("joint axis must be unit norm".into()));
            }
        }
        if lo.iter().zip(&hi).any(|(l, h)| !l.is_finite() || !h.is_finite() || *l > *h) {
            return Err(Error::Parameter("joint limits must be finite with lo <= hi".into()));
        }
        Ok(Self { joints, lo, hi })
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    /// Forward kinematics: base-to-end product of per-joint
    /// rotation-then-offset factors.
    pub fn fk(&self, q: &[T]) -> Transform<T> {
        let mut out = Transform::identity();
        for (joint, &angle) in self.joints.iter().zip(q) {
            let w = [
                joint.axis[0] * angle,
                joint.axis[1] * angle,
                joint.axis[2] * angle,
            ];
            let rot = Transform {
                r: so3_exp(&w),
                t: [T::zero(); 3],
            };
            out = out.compose(&rot).compose(&joint.offset);
        }
        out
    }
}

pub fn pose_cost<T: Real>(
    chain: &KinematicChain<T>,
    q: &[T],
    target: &Transform<T>,
    w: &[T; 6],
) -> Result<T> {
    let rel = chain.fk(q).inverse().compose(target);
    Ok(weighted_screw_norm(&se3_log(&rel)?, w))
}

/// IK cost `||log(fk(q)^-1 target)||^2_W` and its gradient in joint space.
///
/// The gradient is central finite differences over `q` (step 1e-6); the
/// chain has few joints, so the extra fk evaluations are cheap and no d(log)
/// Jacobian is needed.
pub fn pose_cost_and_grad<T: Real>(
    chain: &KinematicChain<T>,
    q: &[T],
    target: &Transform<T>,
    w: &[T; 6],
) -> Result<(T, Vec<T>)> {
    let value = pose_cost(chain, q, target, w)?;
    let step = T::cast(1e-6);
    let mut grad = vec![T::zero(); q.len()];
    let mut probe = q.to_vec();
    for k in 0..q.len() {
        let orig = probe[k];
        probe[k] = orig + step;
        let hi = pose_cost(chain, &probe, target, w)?;
        probe[k] = orig - step;
        let lo = pose_cost(chain, &probe, target, w)?;
        probe[k] = orig;
        grad[k] = (hi - lo) / (T::two() * step);
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rot_z(a: f64) -> Mat3<f64> {
        so3_exp(&[0.0, 0.0, a])
    }

    fn frobenius_diff(a: &Mat3<f64>, b: &Mat3<f64>) -> f64 {
        let mut acc = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                acc += (a[i][j] - b[i][j]).powi(2);
            }
        }
        acc.sqrt()
    }

    fn random_screw(rng: &mut ChaCha8Rng, max_angle: f64) -> Screw<f64> {
        // rotation magnitude bounded by max_angle
        let dir: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        let angle = rng.random_range(0.0..max_angle);
        let scale = if n > 0.0 { angle / n } else { 0.0 };
        Screw([
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            dir[0] * scale,
            dir[1] * scale,
            dir[2] * scale,
        ])
    }

    #[test]
    fn log_identity_and_exp_zero() {
        let id = Transform::<f64>::identity();
        let xi = se3_log(&id).unwrap();
        assert_eq!(xi.0, [0.0; 6]);
        let t = se3_exp(&Screw::zero());
        assert_eq!(t.t, [0.0; 3]);
        assert!(frobenius_diff(&t.r, &id.r) == 0.0);
    }

    #[test]
    fn log_pure_rotation_half_pi_about_z() {
        let t = Transform::new(rot_z(std::f64::consts::FRAC_PI_2), [0.0; 3]).unwrap();
        let xi = se3_log(&t).unwrap();
        let expect = [0.0, 0.0, 0.0, 0.0, 0.0, std::f64::consts::FRAC_PI_2];
        for i in 0..6 {
            assert!((xi.0[i] - expect[i]).abs() < 1e-12, "index {i}: {:?}", xi.0);
        }
    }

    #[test]
    fn exp_log_round_trip_1000_random_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let xi = random_screw(&mut rng, 3.0);
            let t = se3_exp(&xi);
            let back = se3_log(&t).unwrap();
            let t2 = se3_exp(&back);
            let mut err = frobenius_diff(&t.r, &t2.r);
            for i in 0..3 {
                err += (t.t[i] - t2.t[i]).abs();
            }
            assert!(err < 1e-9, "round-trip error {err}");
        }
    }

    #[test]
    fn so3_log_of_exp_angle_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let xi = random_screw(&mut rng, 3.0);
            let w = xi.rotation();
            let back = so3_log(&so3_exp(&w)).unwrap();
            let err = ((back[0] - w[0]).powi(2)
                + (back[1] - w[1]).powi(2)
                + (back[2] - w[2]).powi(2))
            .sqrt();
            assert!(err < 1e-9, "log(exp(w)) error {err}");
        }
    }

    #[test]
    fn log_branch_error_at_pi() {
        let t = Transform::new(rot_z(std::f64::consts::PI), [0.0; 3]).unwrap();
        assert!(matches!(se3_log(&t), Err(Error::Branch(_))));
        // but the tolerant variant still returns the correct norm
        let xi = se3_log_any(&t);
        let n = weighted_screw_norm(&xi, &[1.0; 6]);
        assert!((n - std::f64::consts::PI.powi(2)).abs() < 1e-9);
    }

    #[test]
    fn composition_associative_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = se3_exp(&random_screw(&mut rng, 3.0));
            let b = se3_exp(&random_screw(&mut rng, 3.0));
            let c = se3_exp(&random_screw(&mut rng, 3.0));
            let ab_c = a.compose(&b).compose(&c);
            let a_bc = a.compose(&b.compose(&c));
            let mut err = frobenius_diff(&ab_c.r, &a_bc.r);
            for i in 0..3 {
                err += (ab_c.t[i] - a_bc.t[i]).abs();
            }
            assert!(err < 1e-12);

            let ainv = a.inverse();
            let id = a.compose(&ainv);
            let mut ierr = frobenius_diff(&id.r, &Transform::identity().r);
            for i in 0..3 {
                ierr += id.t[i].abs();
            }
            assert!(ierr < 1e-12);
        }
    }

    #[test]
    fn weighted_norm_hand_values() {
        assert_eq!(weighted_screw_norm(&Screw::<f64>::zero(), &[1.0; 6]), 0.0);
        let xi = Screw([1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(weighted_screw_norm(&xi, &[1.0; 6]), 2.0);
        let w = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0];
        assert_eq!(weighted_screw_norm(&xi, &w), 3.0);
    }

    #[test]
    fn invalid_rotation_rejected() {
        let mut r = Transform::<f64>::identity().r;
        r[0][0] = 2.0;
        assert!(Transform::new(r, [0.0; 3]).is_err());
    }

    #[test]
    fn fk_zero_angles_is_product_of_offsets() {
        let chain = KinematicChain::new(
            vec![
                Joint {
                    axis: [0.0, 0.0, 1.0],
                    offset: Transform::from_translation([1.0, 0.0, 0.0]),
                },
                Joint {
                    axis: [0.0, 1.0, 0.0],
                    offset: Transform::from_translation([0.0, 0.0, 0.5]),
                },
            ],
            vec![-3.0, -3.0],
            vec![3.0, 3.0],
        )
        .unwrap();
        let t = chain.fk(&[0.0, 0.0]);
        assert_eq!(t.t, [1.0, 0.0, 0.5]);
    }

    #[test]
    fn fk_single_revolute_z_joint() {
        let chain = KinematicChain::new(
            vec![Joint {
                axis: [0.0, 0.0, 1.0],
                offset: Transform::from_translation([1.0, 0.0, 0.0]),
            }],
            vec![-3.0],
            vec![3.0],
        )
        .unwrap();
        let t = chain.fk(&[std::f64::consts::FRAC_PI_2]);
        assert!((t.t[0] - 0.0).abs() < 1e-12);
        assert!((t.t[1] - 1.0).abs() < 1e-12);
        assert!((t.t[2] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn fk_position_jacobian_consistent_with_central_differences() {
        let chain = KinematicChain::new(
            vec![
                Joint {
                    axis: [0.0, 0.0, 1.0],
                    offset: Transform::from_translation([0.4, 0.0, 0.0]),
                },
                Joint {
                    axis: [0.0, 1.0, 0.0],
                    offset: Transform::from_translation([0.3, 0.0, 0.0]),
                },
                Joint {
                    axis: [0.0, 1.0, 0.0],
                    offset: Transform::from_translation([0.2, 0.0, 0.0]),
                },
            ],
            vec![-3.0; 3],
            vec![3.0; 3],
        )
        .unwrap();
        // fk position under two stencils agrees: step 1e-5 vs 1e-4
        let q = [0.3, -0.4, 0.7];
        for k in 0..3 {
            for coord in 0..3 {
                let fd = |step: f64| {
                    let mut qp = q;
                    qp[k] += step;
                    let hi = chain.fk(&qp).t[coord];
                    qp[k] -= 2.0 * step;
                    let lo = chain.fk(&qp).t[coord];
                    (hi - lo) / (2.0 * step)
                };
                let a = fd(1e-5);
                let b = fd(1e-4);
                assert!((a - b).abs() < 1e-6, "joint {k} coord {coord}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn pose_cost_zero_at_exact_target() {
        let chain = KinematicChain::new(
            vec![
                Joint {
                    axis: [0.0, 0.0, 1.0],
                    offset: Transform::from_translation([0.5, 0.0, 0.0]),
                },
                Joint {
                    axis: [0.0, 1.0, 0.0],
                    offset: Transform::from_translation([0.5, 0.0, 0.0]),
                },
            ],
            vec![-3.0f64; 2],
            vec![3.0; 2],
        )
        .unwrap();
        let q = [0.4, -0.8];
        let target = chain.fk(&q);
        let (cost, grad) = pose_cost_and_grad(&chain, &q, &target, &[1.0; 6]).unwrap();
        assert!(cost < 1e-18);
        for g in grad {
            assert!(g.abs() < 1e-6);
        }
    }

    #[test]
    fn pose_cost_gradient_two_stencil_cross_check() {
        let chain = KinematicChain::new(
            vec![
                Joint {
                    axis: [0.0, 0.0, 1.0],
                    offset: Transform::from_translation([0.5, 0.0, 0.0]),
                },
                Joint {
                    axis: [0.0, 1.0, 0.0],
                    offset: Transform::from_translation([0.5, 0.0, 0.0]),
                },
            ],
            vec![-3.0f64; 2],
            vec![3.0; 2],
        )
        .unwrap();
        let target = chain.fk(&[0.9, -0.3]);
        let q = [0.2, 0.4];
        let (_, grad) = pose_cost_and_grad(&chain, &q, &target, &[1.0; 6]).unwrap();
        // coarser independent stencil
        let step = 1e-4;
        for k in 0..2 {
            let mut qp = q;
            qp[k] += step;
            let hi = pose_cost(&chain, &qp, &target, &[1.0; 6]).unwrap();
            qp[k] -= 2.0 * step;
            let lo = pose_cost(&chain, &qp, &target, &[1.0; 6]).unwrap();
            let fd = (hi - lo) / (2.0 * step);
            assert!((grad[k] - fd).abs() < 1e-3, "joint {k}: {} vs {fd}", grad[k]);
        }
    }

    #[test]
    fn pose_cost_left_invariant() {
        let chain = KinematicChain::new(
            vec![Joint {
                axis: [0.0f64, 0.0, 1.0],
                offset: Transform::from_translation([1.0, 0.0, 0.0]),
            }],
            vec![-3.0],
            vec![3.0],
        )
        .unwrap();
        let q = [0.6];
        let target = chain.fk(&[1.1]);
        let base = pose_cost(&chain, &q, &target, &[1.0; 6]).unwrap();
        // pre-multiplying both frames by a common transform leaves the
        // relative screw unchanged
        let common = se3_exp(&Screw([0.3, -0.2, 0.5, 0.2, 0.1, -0.4]));
        let fk_moved = common.compose(&chain.fk(&q));
        let target_moved = common.compose(&target);
        let rel = fk_moved.inverse().compose(&target_moved);
        let moved = weighted_screw_norm(&se3_log(&rel).unwrap(), &[1.0; 6]);
        assert!((base - moved).abs() < 1e-12);
    }
}
