//! The SVGD functional-gradient particle update, shared-step backtracking
//! line search, and box projection.

use crate::error::{Error, Result};
use crate::kernel::KernelEval;
use crate::particles::ParticleSet;
use crate::scalar::Real;

/// Backtracking line-search control. One shared step is chosen for the whole
/// particle set.
#[derive(Clone, Copy, Debug)]
pub struct StepControl<T> {
    pub eps0: T,
    pub beta: T,
    pub max_backtracks: u32,
    pub min_eps: T,
}

impl<T: Real> StepControl<T> {
    pub fn new(eps0: f64, beta: f64, max_backtracks: u32, min_eps: f64) -> Self {
        Self {
            eps0: T::cast(eps0),
            beta: T::cast(beta),
            max_backtracks,
            min_eps: T::cast(min_eps),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_eps > T::zero() && self.eps0 > self.min_eps) {
            return Err(Error::Parameter(
                "step control requires eps0 > min_eps > 0".into(),
            ));
        }
        if !(self.beta > T::zero() && self.beta < T::one()) {
            return Err(Error::Parameter("backtrack factor must be in (0,1)".into()));
        }
        Ok(())
    }
}

impl<T: Real> Default for StepControl<T> {
    fn default() -> Self {
        Self::new(0.1, 0.5, 40, 1e-8)
    }
}

/// Kernel-averaged steepest-descent direction on KL:
/// `phi(x_i) = (1/n) sum_j [ k(j,i) grad_logp_j + grad_k(j,i) ]`.
///
/// `grad_logp` is flat n-by-d. Pure function; returns a flat n-by-d array.
pub fn svgd_direction<T: Real>(
    x: &ParticleSet<T>,
    grad_logp: &[T],
    ker: &KernelEval<T>,
) -> Result<Vec<T>> {
    let (n, d) = (x.n(), x.d());
    if grad_logp.len() != n * d {
        return Err(Error::Contract(format!(
            "grad_logp has {} entries, expected {}",
            grad_logp.len(),
            n * d
        )));
    }
    if ker.n() != n || ker.d() != d {
        return Err(Error::Contract("kernel shape does not match particle set".into()));
    }
    let inv_n = T::one() / T::of_usize(n);
    let mut out = vec![T::zero(); n * d];
    for i in 0..n {
        let row = &mut out[i * d..(i + 1) * d];
        for j in 0..n {
            let kji = ker.k(j, i);
            let gk = ker.grad(j, i);
            let gl = &grad_logp[j * d..(j + 1) * d];
            for m in 0..d {
                row[m] += kji * gl[m] + gk[m];
            }
        }
        for v in row.iter_mut() {
            *v *= inv_n;
        }
    }
    Ok(out)
}

/// Largest step in `{eps0 * beta^k}` that strictly decreases the objective;
/// `min_eps` when every trial fails. Non-finite trial objectives count as
/// rejected trials (a log-barrier trial stepping outside the feasible set
/// must backtrack, not abort); a NaN objective at the *current* particles is
/// an error.
pub fn backtracking_line_search<T: Real>(
    objective: &dyn Fn(&ParticleSet<T>) -> T,
    x: &ParticleSet<T>,
    direction: &[T],
    ctl: &StepControl<T>,
) -> Result<T> {
    ctl.validate()?;
    if direction.len() != x.n() * x.d() {
        return Err(Error::Contract("direction shape does not match particle set".into()));
    }
    let base = objective(x);
    if base.is_nan() {
        return Err(Error::InvalidState("objective is NaN at current particles".into()));
    }
    let mut eps = ctl.eps0;
    let mut trial = x.clone();
    for _ in 0..=ctl.max_backtracks {
        let data = trial.data_mut();
        for (v, (&x0, &dir)) in data.iter_mut().zip(x.data().iter().zip(direction)) {
            *v = x0 + eps * dir;
        }
        let value = objective(&trial);
        if value.is_finite() && value < base {
            return Ok(eps);
        }
        eps *= ctl.beta;
    }
    Ok(ctl.min_eps)
}

/// Componentwise clamp of every particle into `[lo, hi]`. Infinite bounds
/// pass the coordinate through unchanged.
pub fn project_box<T: Real>(x: &ParticleSet<T>, lo: &[T], hi: &[T]) -> Result<ParticleSet<T>> {
    let d = x.d();
    if lo.len() != d || hi.len() != d {
        return Err(Error::Contract("bound lengths must match dimension".into()));
    }
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return Err(Error::Parameter("box requires lo <= hi componentwise".into()));
    }
    let mut out = x.clone();
    for row in 0..x.n() {
        let r = out.row_mut(row);
        for m in 0..d {
            if r[m] < lo[m] {
                r[m] = lo[m];
            } else if r[m] > hi[m] {
                r[m] = hi[m];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{median_bandwidth, rbf_kernel};
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_particle_direction_is_grad_logp() {
        let x = ParticleSet::from_rows(&[vec![0.3, -0.7]]).unwrap();
        let ker = rbf_kernel(&x, 1.0).unwrap();
        let glp = vec![2.0, -1.5];
        let dir = svgd_direction(&x, &glp, &ker).unwrap();
        assert_eq!(dir, glp);
    }

    #[test]
    fn coincident_particles_zero_grad_gives_zero_direction() {
        let x = ParticleSet::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let ker = rbf_kernel(&x, 1.0).unwrap();
        let dir = svgd_direction(&x, &[0.0; 4], &ker).unwrap();
        assert_eq!(dir, vec![0.0; 4]);
    }

    #[test]
    fn direction_matches_brute_force_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let glp: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = ParticleSet::from_rows(&rows).unwrap();
        let h = median_bandwidth(&x).unwrap();
        let ker = rbf_kernel(&x, h).unwrap();
        let dir = svgd_direction(&x, &glp, &ker).unwrap();

        // independent brute-force evaluation
        for i in 0..3 {
            for m in 0..2 {
                let mut acc = 0.0;
                for j in 0..3 {
                    let sq: f64 = (0..2).map(|k| (rows[j][k] - rows[i][k]).powi(2)).sum();
                    let kji = (-sq / h).exp();
                    let gk = (2.0 / h) * (rows[i][m] - rows[j][m]) * kji;
                    acc += kji * glp[j * 2 + m] + gk;
                }
                acc /= 3.0;
                assert!((dir[i * 2 + m] - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn repulsion_sums_to_zero_over_particles() {
        // pairwise antisymmetry of grad_k makes the total direction vanish
        // when grad_logp is zero
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let x = ParticleSet::from_rows(&rows).unwrap();
        let ker = rbf_kernel(&x, median_bandwidth(&x).unwrap()).unwrap();
        let dir = svgd_direction(&x, &vec![0.0; 18], &ker).unwrap();
        for m in 0..3 {
            let total: f64 = (0..6).map(|i| dir[i * 3 + m]).sum();
            assert!(total.abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let x = ParticleSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let ker = rbf_kernel(&x, 1.0).unwrap();
        assert!(svgd_direction(&x, &[0.0; 3], &ker).is_err());
    }

    #[test]
    fn line_search_accepts_descent_at_full_step() {
        let x = ParticleSet::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let obj = |p: &ParticleSet<f64>| p.data().iter().map(|v| v * v).sum::<f64>();
        let dir = vec![-2.0, -2.0]; // negative gradient
        let ctl = StepControl::new(0.1, 0.5, 10, 1e-8);
        let eps = backtracking_line_search(&obj, &x, &dir, &ctl).unwrap();
        assert_eq!(eps, 0.1);
    }

    #[test]
    fn line_search_zero_direction_returns_floor() {
        let x = ParticleSet::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let obj = |p: &ParticleSet<f64>| p.data().iter().map(|v| v * v).sum::<f64>();
        let ctl = StepControl::new(0.1, 0.5, 10, 1e-8);
        let eps = backtracking_line_search(&obj, &x, &[0.0, 0.0], &ctl).unwrap();
        assert_eq!(eps, 1e-8);
    }

    #[test]
    fn line_search_backtracks_over_barrier_boundary() {
        // 1-d objective -log(1 - x) - 2x, defined for x < 1; start at 0 and
        // push toward the boundary with a step that overshoots it
        let x = ParticleSet::from_rows(&[vec![0.0]]).unwrap();
        let obj = |p: &ParticleSet<f64>| {
            let v = p.data()[0];
            let arg = 1.0 - v;
            if arg <= 0.0 {
                f64::NAN
            } else {
                -arg.ln() - 2.0 * v
            }
        };
        let dir = vec![0.9];
        let ctl = StepControl::new(4.0, 0.5, 20, 1e-10);
        let eps = backtracking_line_search(&obj, &x, &dir, &ctl).unwrap();
        // eps 4 and 2 land at x >= 1 (NaN trials), eps 1 lands feasible but
        // higher, eps 0.5 is the first accepted step
        assert_eq!(eps, 0.5);
        let mut trial = x.clone();
        trial.data_mut()[0] += eps * 0.9;
        assert!(obj(&trial) < obj(&x));
    }

    #[test]
    fn line_search_nan_at_base_is_error() {
        let x = ParticleSet::from_rows(&[vec![2.0]]).unwrap();
        let obj = |p: &ParticleSet<f64>| {
            let arg = 1.0 - p.data()[0];
            if arg <= 0.0 {
                f64::NAN
            } else {
                -arg.ln()
            }
        };
        let ctl = StepControl::new(0.1, 0.5, 5, 1e-8);
        assert!(matches!(
            backtracking_line_search(&obj, &x, &[0.0], &ctl),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn line_search_never_increases_objective_except_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let obj = |p: &ParticleSet<f64>| {
            p.rows()
                .map(|r| (r[0] - 0.3).powi(2) + 0.5 * (r[1] + 0.2).powi(2))
                .sum::<f64>()
        };
        let ctl = StepControl::new(0.5, 0.5, 8, 1e-9);
        for _ in 0..50 {
            let rows: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..2).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let x = ParticleSet::from_rows(&rows).unwrap();
            let dir: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let eps = backtracking_line_search(&obj, &x, &dir, &ctl).unwrap();
            if eps > ctl.min_eps {
                let mut trial = x.clone();
                for (v, (x0, d)) in trial
                    .data_mut()
                    .iter_mut()
                    .zip(rows.iter().flatten().zip(&dir))
                {
                    *v = x0 + eps * d;
                }
                assert!(obj(&trial) < obj(&x));
            }
        }
    }

    #[test]
    fn project_box_examples() {
        let x = ParticleSet::from_rows(&[vec![-1.0, 2.0]]).unwrap();
        let p = project_box(&x, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(p.row(0), &[0.0, 1.0]);

        let interior = ParticleSet::from_rows(&[vec![0.5, 0.5]]).unwrap();
        let q = project_box(&interior, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(q.row(0), &[0.5, 0.5]);

        let unbounded = project_box(
            &x,
            &[f64::NEG_INFINITY, 0.0],
            &[f64::INFINITY, 1.0],
        )
        .unwrap();
        assert_eq!(unbounded.row(0), &[-1.0, 1.0]);
    }

    #[test]
    fn project_box_rejects_inverted_bounds() {
        let x = ParticleSet::from_rows(&[vec![0.0]]).unwrap();
        assert!(project_box(&x, &[1.0], &[0.0]).is_err());
    }

    proptest! {
        #[test]
        fn project_box_idempotent(
            vals in proptest::collection::vec(-10.0f64..10.0, 6),
            lo in -5.0f64..0.0,
            hi in 0.0f64..5.0,
        ) {
            let x = ParticleSet::new(3, 2, vals).unwrap();
            let lo = [lo, lo];
            let hi = [hi, hi];
            let once = project_box(&x, &lo, &hi).unwrap();
            let twice = project_box(&once, &lo, &hi).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
