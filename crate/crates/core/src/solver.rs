//! The two constrained-SVGD drivers.
//!
//! The Q method restricts the variational family: each particle is pushed
//! into the feasible set by adding the soft-constraint gradient to its own
//! update, outside the kernel average, and box bounds are enforced by
//! projection after every sweep.
//!
//! The p method folds the soft-constraint cost into the target density, so
//! constraint gradients are shared between particles through the kernel;
//! box bounds are handled by a smooth coordinate mapping (or appended as
//! inequalities when no mapping is selected). Its formulation parameters are
//! always shared, with multiplier updates min-pooled over particles.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraints::{
    pool_least, pool_worst, violation, ConstraintFn, ConstraintSet, SoftFormulation,
    ViolationReport,
};
use crate::error::{Error, Result};
use crate::kernel::{median_bandwidth, rbf_kernel, se3_kernel, se3_median_bandwidth, KernelEval};
use crate::particles::ParticleSet;
use crate::problem::{KernelKind, MappingKind, Problem, SolveConfig, SolveReport, ThetaMode};
use crate::scalar::Real;
use crate::svgd::{backtracking_line_search, project_box, svgd_direction};

/// Gradient of the unconstrained log target: `-alpha * grad f(x)`.
///
/// The Q method deliberately excludes the constraint gradient here; it is
/// added per particle after the kernel average, so the repulsive term never
/// sees the constraints.
pub fn q_log_target_grad<T: Real>(problem: &Problem<T>, x: &[T]) -> Vec<T> {
    let mut g = problem.grad_f(x);
    for v in &mut g {
        *v = -problem.alpha * *v;
    }
    g
}

fn build_kernel<T: Real>(problem: &Problem<T>, x: &ParticleSet<T>) -> Result<KernelEval<T>> {
    match &problem.kernel {
        KernelKind::EuclideanRbf => {
            let h = if x.n() >= 2 { median_bandwidth(x)? } else { T::one() };
            rbf_kernel(x, h)
        }
        KernelKind::Se3 { weights, bandwidth } => {
            let h = match bandwidth {
                Some(h) => *h,
                None if x.n() >= 2 => se3_median_bandwidth(x, weights)?,
                None => T::one(),
            };
            se3_kernel(x, h, weights)
        }
    }
}

fn init_particles<T: Real>(
    problem: &Problem<T>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ParticleSet<T>> {
    let d = problem.dim;
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let row = (problem.init_sampler)(rng);
        if row.len() != d {
            return Err(Error::Contract(format!(
                "init sampler produced {} entries, expected {d}",
                row.len()
            )));
        }
        data.extend_from_slice(&row);
    }
    let set = ParticleSet::new(n, d, data)?;
    if !set.all_finite() {
        return Err(Error::InvalidState("init sampler produced non-finite values".into()));
    }
    project_box(&set, &problem.constraints.lo, &problem.constraints.hi)
}

fn mean_row_norm<T: Real>(prev: &ParticleSet<T>, next: &ParticleSet<T>) -> T {
    let mut total = T::zero();
    for (a, b) in prev.rows().zip(next.rows()) {
        let mut acc = T::zero();
        for (x, y) in a.iter().zip(b) {
            let diff = *y - *x;
            acc += diff * diff;
        }
        total += acc.sqrt();
    }
    total / T::of_usize(prev.n())
}

/// Q constrained SVGD: inner sweeps move every particle along
/// `phi(x_i) - grad L_theta_i(x_i)` with a shared line-searched step, then a
/// box projection; outer iterations update the formulation parameters from
/// each particle's own violations (or the worst pool in shared mode).
pub fn solve_q<T: Real>(
    problem: &Problem<T>,
    formulation: &SoftFormulation<T>,
    cfg: &SolveConfig<T>,
) -> Result<SolveReport<T>> {
    let start = Instant::now();
    problem.validate()?;
    cfg.validate()?;
    formulation.validate(&problem.constraints)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = init_particles(problem, cfg.n_particles, &mut rng)?;
    let n = cfg.n_particles;
    let d = problem.dim;
    let mut thetas = match cfg.theta_mode {
        ThetaMode::PerParticle => vec![formulation.clone(); n],
        ThetaMode::Shared => vec![formulation.clone()],
    };
    let theta_of = |thetas: &[SoftFormulation<T>], i: usize| {
        if thetas.len() == 1 {
            0
        } else {
            i
        }
    };

    let mut steps: u64 = 0;
    let mut outer_iterations: u64 = 0;
    let mut trace: Vec<ViolationReport<T>> = Vec::new();
    let mut converged = false;

    for _outer in 0..cfg.max_outer {
        let mut inner_converged = false;
        for _inner in 0..cfg.max_inner {
            if let Some(hook) = &problem.sweep_hook {
                hook(steps);
            }
            let ker = build_kernel(problem, &x)?;
            let mut grad_logp = Vec::with_capacity(n * d);
            for i in 0..n {
                grad_logp.extend_from_slice(&q_log_target_grad(problem, x.row(i)));
            }
            let mut dir = svgd_direction(&x, &grad_logp, &ker)?;
            for i in 0..n {
                let lg = thetas[theta_of(&thetas, i)].soft_grad(&problem.constraints, x.row(i))?;
                let row = &mut dir[i * d..(i + 1) * d];
                for (v, g) in row.iter_mut().zip(&lg) {
                    *v = *v - *g;
                }
            }
            let objective = |set: &ParticleSet<T>| {
                let mut total = T::zero();
                for i in 0..set.n() {
                    let r = set.row(i);
                    let l = thetas[theta_of(&thetas, i)]
                        .soft_value(&problem.constraints, r)
                        .unwrap_or_else(|_| T::nan());
                    total += problem.alpha * problem.f(r) + l;
                }
                total
            };
            let eps = backtracking_line_search(&objective, &x, &dir, &cfg.step)?;
            let mut moved = x.clone();
            for (v, g) in moved.data_mut().iter_mut().zip(&dir) {
                *v = *v + eps * *g;
            }
            let next = project_box(&moved, &problem.constraints.lo, &problem.constraints.hi)?;
            let disp = mean_row_norm(&x, &next);
            x = next;
            steps += 1;
            if !x.all_finite() {
                return Err(Error::InvalidState(
                    "particles left the finite domain during a Q sweep".into(),
                ));
            }
            if disp < cfg.inner_tol {
                inner_converged = true;
                break;
            }
        }

        let reports: Vec<ViolationReport<T>> =
            (0..n).map(|i| violation(&problem.constraints, x.row(i))).collect();
        let worst = pool_worst(&reports);
        let feasible = worst.feasible(cfg.outer_tol);
        trace.push(worst);
        outer_iterations += 1;
        if feasible && inner_converged {
            converged = true;
            break;
        }
        match cfg.theta_mode {
            ThetaMode::PerParticle => {
                for (theta, report) in thetas.iter_mut().zip(&reports) {
                    theta.update_params(report, report, cfg.outer_tol);
                }
            }
            ThetaMode::Shared => {
                let worst = trace.last().expect("just pushed");
                let worst = worst.clone();
                thetas[0].update_params(&worst, &worst, cfg.outer_tol);
            }
        }
    }

    Ok(SolveReport {
        particles: x,
        total_gradient_steps: steps,
        outer_iterations,
        feasibility_trace: trace,
        converged,
        wall_time: start.elapsed(),
    })
}

/// Componentwise smooth mapping from unbounded solver coordinates into the
/// box. Dimensions without two finite bounds are passed through unchanged.
#[derive(Clone, Debug)]
struct BoxMapping<T> {
    kind: MappingKind,
    lo: Vec<T>,
    hi: Vec<T>,
    mapped: Vec<bool>,
}

/// Raw-coordinate magnitude beyond which tanh saturates to 1.0 in f64;
/// clamping there keeps mapped coordinates strictly inside the box.
const TANH_GUARD: f64 = 18.0;

impl<T: Real> BoxMapping<T> {
    fn new(kind: MappingKind, lo: &[T], hi: &[T]) -> Self {
        let mapped = lo
            .iter()
            .zip(hi)
            .map(|(l, h)| kind != MappingKind::None && l.is_finite() && h.is_finite())
            .collect();
        Self {
            kind,
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            mapped,
        }
    }

    fn any_mapped(&self) -> bool {
        self.mapped.iter().any(|m| *m)
    }

    fn warp(&self, k: usize, x: T) -> T {
        let s = match self.kind {
            MappingKind::Tanh => x.tanh(),
            MappingKind::Sin => x.sin(),
            MappingKind::None => unreachable!("no dimension is mapped"),
        };
        self.lo[k] + (self.hi[k] - self.lo[k]) * (s + T::one()) * T::half()
    }

    fn dwarp(&self, k: usize, x: T) -> T {
        let ds = match self.kind {
            MappingKind::Tanh => {
                let t = x.tanh();
                T::one() - t * t
            }
            MappingKind::Sin => x.cos(),
            MappingKind::None => unreachable!("no dimension is mapped"),
        };
        (self.hi[k] - self.lo[k]) * T::half() * ds
    }

    fn map(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .enumerate()
            .map(|(k, &v)| if self.mapped[k] { self.warp(k, v) } else { v })
            .collect()
    }

    fn dmap(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .enumerate()
            .map(|(k, &v)| if self.mapped[k] { self.dwarp(k, v) } else { T::one() })
            .collect()
    }

    /// Pull a point inside the box back to solver coordinates, nudging
    /// boundary values strictly inside first.
    fn unmap(&self, y: &[T]) -> Vec<T> {
        y.iter()
            .enumerate()
            .map(|(k, &v)| {
                if !self.mapped[k] {
                    return v;
                }
                let span = self.hi[k] - self.lo[k];
                let mut s = (v - self.lo[k]) / span * T::two() - T::one();
                let margin = T::cast(1e-12);
                s = s.min(T::one() - margin).max(-T::one() + margin);
                match self.kind {
                    MappingKind::Tanh => s.atanh(),
                    MappingKind::Sin => s.asin(),
                    MappingKind::None => unreachable!(),
                }
            })
            .collect()
    }

    /// Keep tanh coordinates out of the saturation region.
    fn guard(&self, x: &mut ParticleSet<T>) {
        if self.kind != MappingKind::Tanh || !self.any_mapped() {
            return;
        }
        let bound = T::cast(TANH_GUARD);
        let d = x.d();
        for i in 0..x.n() {
            let row = x.row_mut(i);
            for k in 0..d {
                if self.mapped[k] {
                    if row[k] > bound {
                        row[k] = bound;
                    } else if row[k] < -bound {
                        row[k] = -bound;
                    }
                }
            }
        }
    }
}

/// The smooth target of the p method: constraints (and, without a mapping,
/// finite box bounds) folded into the log density.
struct PTarget<'a, T> {
    problem: &'a Problem<T>,
    cons: ConstraintSet<T>,
    mapping: BoxMapping<T>,
}

impl<'a, T: Real> PTarget<'a, T> {
    fn new(problem: &'a Problem<T>, kind: MappingKind) -> Result<Self> {
        if let KernelKind::Se3 { .. } = problem.kernel {
            if kind != MappingKind::None && problem.constraints.has_finite_bounds() {
                return Err(Error::UnsupportedCombination(
                    "se3 kernel with a box mapping is not supported; use mapping=none".into(),
                ));
            }
        }
        let mapping = BoxMapping::new(kind, &problem.constraints.lo, &problem.constraints.hi);
        // Finite bounds on unmapped dimensions become inequalities so the
        // soft formulation can see them.
        let mut cons = problem.constraints.clone();
        for k in 0..problem.dim {
            if mapping.mapped[k] {
                continue;
            }
            let lo = problem.constraints.lo[k];
            let hi = problem.constraints.hi[k];
            if lo.is_finite() {
                cons.inequalities.push(ConstraintFn::new(
                    move |x: &[T]| lo - x[k],
                    move |x: &[T]| {
                        let mut g = vec![T::zero(); x.len()];
                        g[k] = -T::one();
                        g
                    },
                ));
            }
            if hi.is_finite() {
                cons.inequalities.push(ConstraintFn::new(
                    move |x: &[T]| x[k] - hi,
                    move |x: &[T]| {
                        let mut g = vec![T::zero(); x.len()];
                        g[k] = T::one();
                        g
                    },
                ));
            }
        }
        Ok(Self {
            problem,
            cons,
            mapping,
        })
    }

    /// Extend a formulation's multipliers to cover appended box
    /// inequalities.
    fn adapt_formulation(&self, f: &SoftFormulation<T>) -> SoftFormulation<T> {
        let mut out = f.clone();
        out.gamma.resize(self.cons.n_ineq(), T::zero());
        out
    }

    /// Unnormalized log density in solver coordinates:
    /// `-alpha f(m(x)) - L_theta(m(x))`.
    fn log_unnorm(&self, theta: &SoftFormulation<T>, x: &[T]) -> T {
        let y = self.mapping.map(x);
        let l = theta
            .soft_value(&self.cons, &y)
            .unwrap_or_else(|_| T::nan());
        -self.problem.alpha * self.problem.f(&y) - l
    }

    /// Gradient of [`Self::log_unnorm`], chained through the mapping.
    fn grad_log(&self, theta: &SoftFormulation<T>, x: &[T]) -> Result<Vec<T>> {
        let y = self.mapping.map(x);
        let gf = self.problem.grad_f(&y);
        let gl = theta.soft_grad(&self.cons, &y)?;
        let dm = self.mapping.dmap(x);
        let mut out = vec![T::zero(); x.len()];
        for k in 0..x.len() {
            out[k] = (-self.problem.alpha * gf[k] - gl[k]) * dm[k];
        }
        Ok(out)
    }
}

/// Unnormalized log of the smooth p-method target at `x` (solver
/// coordinates): `-alpha f(m(x)) - L_theta(m(x))`.
pub fn p_log_target<T: Real>(
    problem: &Problem<T>,
    formulation: &SoftFormulation<T>,
    cfg: &SolveConfig<T>,
    x: &[T],
) -> Result<T> {
    let target = PTarget::new(problem, cfg.mapping)?;
    let theta = target.adapt_formulation(formulation);
    theta.validate(&target.cons)?;
    Ok(target.log_unnorm(&theta, x))
}

/// Gradient of [`p_log_target`] with respect to the solver coordinates.
pub fn p_log_target_grad<T: Real>(
    problem: &Problem<T>,
    formulation: &SoftFormulation<T>,
    cfg: &SolveConfig<T>,
    x: &[T],
) -> Result<Vec<T>> {
    let target = PTarget::new(problem, cfg.mapping)?;
    let theta = target.adapt_formulation(formulation);
    theta.validate(&target.cons)?;
    target.grad_log(&theta, x)
}

/// p constrained SVGD: plain SVGD on the smooth target, with shared
/// formulation parameters updated between inner runs. Multiplier updates use
/// min-pooling over particles (the particle least in violation), penalty
/// growth uses the worst pool. Returns particles mapped back into the box.
pub fn solve_p<T: Real>(
    problem: &Problem<T>,
    formulation: &SoftFormulation<T>,
    cfg: &SolveConfig<T>,
) -> Result<SolveReport<T>> {
    let start = Instant::now();
    problem.validate()?;
    cfg.validate()?;
    formulation.validate(&problem.constraints)?;

    let target = PTarget::new(problem, cfg.mapping)?;
    let mut theta = target.adapt_formulation(formulation);
    theta.validate(&target.cons)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = init_particles(problem, cfg.n_particles, &mut rng)?;
    let n = cfg.n_particles;
    let d = problem.dim;
    let mut x = if target.mapping.any_mapped() {
        let mut data = Vec::with_capacity(n * d);
        for i in 0..n {
            data.extend_from_slice(&target.mapping.unmap(init.row(i)));
        }
        ParticleSet::new(n, d, data)?
    } else {
        init
    };

    let mut steps: u64 = 0;
    let mut outer_iterations: u64 = 0;
    let mut trace: Vec<ViolationReport<T>> = Vec::new();
    let mut converged = false;

    for _outer in 0..cfg.max_outer {
        let mut inner_converged = false;
        for _inner in 0..cfg.max_inner {
            if let Some(hook) = &problem.sweep_hook {
                hook(steps);
            }
            let ker = build_kernel(problem, &x)?;
            let mut grad_logp = Vec::with_capacity(n * d);
            for i in 0..n {
                grad_logp.extend_from_slice(&target.grad_log(&theta, x.row(i))?);
            }
            let dir = svgd_direction(&x, &grad_logp, &ker)?;
            let objective = |set: &ParticleSet<T>| {
                let mut total = T::zero();
                for i in 0..set.n() {
                    total += -target.log_unnorm(&theta, set.row(i));
                }
                total
            };
            let eps = backtracking_line_search(&objective, &x, &dir, &cfg.step)?;
            let mut next = x.clone();
            for (v, g) in next.data_mut().iter_mut().zip(&dir) {
                *v = *v + eps * *g;
            }
            target.mapping.guard(&mut next);
            let disp = mean_row_norm(&x, &next);
            x = next;
            steps += 1;
            if !x.all_finite() {
                return Err(Error::InvalidState(
                    "particles left the finite domain during a p sweep".into(),
                ));
            }
            if disp < cfg.inner_tol {
                inner_converged = true;
                break;
            }
        }

        let mapped_rows: Vec<Vec<T>> = (0..n).map(|i| target.mapping.map(x.row(i))).collect();
        let reports: Vec<ViolationReport<T>> =
            mapped_rows.iter().map(|r| violation(&target.cons, r)).collect();
        let worst = pool_worst(&reports);
        let least = pool_least(&reports);
        let feasible = worst.feasible(cfg.outer_tol);
        trace.push(worst);
        outer_iterations += 1;
        if feasible && inner_converged {
            converged = true;
            break;
        }
        let progress = trace.last().expect("just pushed").clone();
        theta.update_params(&least, &progress, cfg.outer_tol);
    }

    let mut mapped = x.clone();
    if target.mapping.any_mapped() {
        for i in 0..n {
            let y = target.mapping.map(x.row(i));
            mapped.row_mut(i).copy_from_slice(&y);
        }
    }

    Ok(SolveReport {
        particles: mapped,
        total_gradient_steps: steps,
        outer_iterations,
        feasibility_trace: trace,
        converged,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::SoftKind;
    use crate::problem::{MappingKind, ThetaMode};
    use std::sync::Arc;

    fn unconstrained_gaussian(dim: usize) -> Problem<f64> {
        // f = 0.5 ||x||^2 so log p = -alpha f
        Problem {
            name: "gaussian".into(),
            dim,
            f: Arc::new(|x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>()),
            grad_f: Arc::new(|x: &[f64]| x.to_vec()),
            alpha: 1.0,
            constraints: ConstraintSet::unbounded(dim),
            kernel: KernelKind::EuclideanRbf,
            init_sampler: Arc::new(move |rng: &mut dyn rand::RngCore| {
                use rand::Rng;
                (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()
            }),
            sweep_hook: None,
        }
    }

    fn boxed_gaussian(dim: usize) -> Problem<f64> {
        let mut p = unconstrained_gaussian(dim);
        p.constraints = ConstraintSet::unbounded(dim).with_box(vec![-1.5; dim], vec![1.5; dim]);
        p
    }

    #[test]
    fn q_log_target_grad_is_scaled_negative_gradient() {
        let mut p = unconstrained_gaussian(2);
        p.alpha = 3.0;
        assert_eq!(q_log_target_grad(&p, &[1.0, -2.0]), vec![-3.0, 6.0]);
    }

    #[test]
    fn p_log_target_with_zero_weights_is_plain_log_density() {
        let p = unconstrained_gaussian(2);
        let mut f = SoftFormulation::new(SoftKind::QuadraticPenalty, 0, 0);
        f.c = 0.0;
        f.d_w = 0.0;
        let cfg = SolveConfig::new(4, 0);
        let x = [0.7, -0.3];
        let v = p_log_target(&p, &f, &cfg, &x).unwrap();
        assert!((v - (-(0.5 * (0.49 + 0.09)))).abs() < 1e-15);
    }

    #[test]
    fn tanh_mapping_midpoint_and_strict_interior() {
        let p = boxed_gaussian(2);
        let mapping = BoxMapping::new(MappingKind::Tanh, &p.constraints.lo, &p.constraints.hi);
        let mid = mapping.map(&[0.0, 0.0]);
        assert_eq!(mid, vec![0.0, 0.0]); // midpoint of [-1.5, 1.5]
        let far = mapping.map(&[50.0, -50.0]);
        assert!(far[0] <= 1.5 && far[1] >= -1.5);
        // guard keeps coordinates where tanh is not saturated
        let mut set = ParticleSet::from_rows(&[vec![50.0, -50.0]]).unwrap();
        mapping.guard(&mut set);
        let guarded = mapping.map(set.row(0));
        assert!(guarded[0] < 1.5 && guarded[1] > -1.5);
    }

    #[test]
    fn p_log_target_grad_matches_finite_differences_through_mapping() {
        let p = boxed_gaussian(2);
        let mut f = SoftFormulation::new(SoftKind::AugmentedLagrangian, 0, 0);
        f.d_w = 0.8;
        let mut cfg = SolveConfig::new(4, 0);
        for kind in [MappingKind::Tanh, MappingKind::Sin, MappingKind::None] {
            cfg.mapping = kind;
            let x = [0.4, -0.9];
            let g = p_log_target_grad(&p, &f, &cfg, &x).unwrap();
            let step = 1e-6;
            for m in 0..2 {
                let mut hi = x;
                hi[m] += step;
                let mut lo = x;
                lo[m] -= step;
                let fd = (p_log_target(&p, &f, &cfg, &hi).unwrap()
                    - p_log_target(&p, &f, &cfg, &lo).unwrap())
                    / (2.0 * step);
                assert!(
                    ((g[m] - fd) / fd.abs().max(1.0)).abs() < 1e-5,
                    "{kind:?} dim {m}: {} vs {fd}",
                    g[m]
                );
            }
        }
    }

    #[test]
    fn mapping_none_appends_box_inequalities() {
        let p = boxed_gaussian(2);
        let target = PTarget::new(&p, MappingKind::None).unwrap();
        assert_eq!(target.cons.n_ineq(), 4);
        // outside the box the appended constraints report violations
        let r = violation(&target.cons, &[2.0, 0.0]);
        assert!((r.max_pos_g - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_particle_runs() {
        let p = unconstrained_gaussian(2);
        let f = SoftFormulation::new(SoftKind::QuadraticPenalty, 0, 0);
        let mut cfg = SolveConfig::new(1, 3);
        cfg.max_inner = 200;
        cfg.max_outer = 1;
        cfg.inner_tol = 1e-7;
        let report = solve_q(&p, &f, &cfg).unwrap();
        // lone particle descends to the mode at the origin
        let row = report.particles.row(0);
        assert!(row[0].abs() < 1e-2 && row[1].abs() < 1e-2);
    }

    #[test]
    fn determinism_same_seed_same_report() {
        let p = boxed_gaussian(2);
        let f = SoftFormulation::new(SoftKind::QuadraticPenalty, 0, 0);
        let mut cfg = SolveConfig::new(8, 42);
        cfg.max_inner = 50;
        cfg.max_outer = 2;
        let a = solve_q(&p, &f, &cfg).unwrap();
        let b = solve_q(&p, &f, &cfg).unwrap();
        assert_eq!(a.particles, b.particles);
        assert_eq!(a.total_gradient_steps, b.total_gradient_steps);
        let ap = solve_p(&p, &f, &cfg).unwrap();
        let bp = solve_p(&p, &f, &cfg).unwrap();
        assert_eq!(ap.particles, bp.particles);
    }

    #[test]
    fn solve_p_tanh_returns_strictly_interior_particles() {
        let p = boxed_gaussian(2);
        let f = SoftFormulation::new(SoftKind::AugmentedLagrangian, 0, 0);
        let mut cfg = SolveConfig::new(12, 7);
        cfg.max_inner = 100;
        cfg.max_outer = 3;
        cfg.mapping = MappingKind::Tanh;
        let report = solve_p(&p, &f, &cfg).unwrap();
        for row in report.particles.rows() {
            for (k, v) in row.iter().enumerate() {
                assert!(*v > p.constraints.lo[k] && *v < p.constraints.hi[k]);
            }
        }
    }

    #[test]
    fn gradient_step_accounting() {
        let p = unconstrained_gaussian(2);
        let f = SoftFormulation::new(SoftKind::QuadraticPenalty, 0, 0);
        let mut cfg = SolveConfig::new(4, 0);
        cfg.max_inner = 10;
        cfg.max_outer = 3;
        cfg.inner_tol = 1e-300; // never converges early
        let report = solve_q(&p, &f, &cfg).unwrap();
        assert_eq!(report.total_gradient_steps, 30);
        assert_eq!(report.outer_iterations, 3);
        assert!(!report.converged);
        assert!(report.total_gradient_steps >= report.outer_iterations);
    }

    #[test]
    fn q_and_p_identical_with_zero_weights_no_mapping() {
        let p = unconstrained_gaussian(3);
        let mut f = SoftFormulation::new(SoftKind::QuadraticPenalty, 0, 0);
        f.c = 0.0;
        f.d_w = 0.0;
        let mut cfg = SolveConfig::new(6, 11);
        cfg.max_inner = 60;
        cfg.max_outer = 1;
        cfg.inner_tol = 1e-300;
        cfg.mapping = MappingKind::None;
        let q = solve_q(&p, &f, &cfg).unwrap();
        let pp = solve_p(&p, &f, &cfg).unwrap();
        // bitwise identical trajectories -> identical final particles
        assert_eq!(q.particles, pp.particles);
        assert_eq!(q.total_gradient_steps, pp.total_gradient_steps);
    }

    #[test]
    fn shared_theta_mode_runs() {
        let mut p = boxed_gaussian(2);
        // keep particles inside the disk of radius 1
        p.constraints.inequalities.push(ConstraintFn::new(
            |x: &[f64]| x[0] * x[0] + x[1] * x[1] - 1.0,
            |x: &[f64]| vec![2.0 * x[0], 2.0 * x[1]],
        ));
        let f = SoftFormulation::new(SoftKind::AugmentedLagrangian, 0, 1);
        let mut cfg = SolveConfig::new(10, 5);
        cfg.theta_mode = ThetaMode::Shared;
        cfg.max_inner = 100;
        cfg.max_outer = 8;
        let report = solve_q(&p, &f, &cfg).unwrap();
        assert!(report.converged);
        for row in report.particles.rows() {
            assert!(row[0] * row[0] + row[1] * row[1] <= 1.0 + 1e-3);
        }
    }
}
