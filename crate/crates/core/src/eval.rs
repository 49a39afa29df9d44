//! Evaluation protocol: rejection-sampled ground truth, exact Earth Mover
//! Distance via optimal assignment, finite-difference gradient checking, and
//! the trial matrix that sweeps methods x formulations x seeds.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constraints::{pool_worst, violation, FormulationParams, SoftKind};
use crate::error::{Error, Result};
use crate::particles::ParticleSet;
use crate::problem::{Problem, SolveConfig, SolveReport};
use crate::scalar::Real;
use crate::solver::{solve_p, solve_q};

/// Samples drawn from the true constrained target by rejection.
#[derive(Clone, Debug)]
pub struct GroundTruthSet<T> {
    pub samples: ParticleSet<T>,
    pub seed: u64,
}

/// True a problem can be rejection-sampled: finite box, no equalities.
pub fn rejection_eligible<T: Real>(problem: &Problem<T>) -> bool {
    problem.constraints.n_eq() == 0
        && problem
            .constraints
            .lo
            .iter()
            .chain(&problem.constraints.hi)
            .all(|v| v.is_finite())
}

/// Draw `m` samples from `p(x) ∝ exp(-alpha f(x))` restricted to the
/// feasible set, by uniform box proposals accepted with probability
/// `exp(-alpha (f - f_min_est))` when all inequalities hold.
///
/// `f_min_est` comes from a preliminary 1e5-proposal scan. Gives up when the
/// acceptance rate stays below 1e-6 over 1e7 proposals.
pub fn rejection_sample<T: Real>(
    problem: &Problem<T>,
    m: usize,
    seed: u64,
) -> Result<GroundTruthSet<T>> {
    if !rejection_eligible(problem) {
        return Err(Error::Parameter(
            "rejection sampling needs a finite box and inequality constraints only".into(),
        ));
    }
    if m == 0 {
        return Err(Error::Parameter("need at least one sample".into()));
    }
    let d = problem.dim;
    let lo = &problem.constraints.lo;
    let hi = &problem.constraints.hi;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng, buf: &mut Vec<T>| {
        buf.clear();
        for k in 0..d {
            buf.push(rng.random_range(lo[k]..hi[k]));
        }
    };
    let feasible = |x: &[T]| {
        problem
            .constraints
            .inequalities
            .iter()
            .all(|c| (c.value)(x) <= T::zero())
    };

    // preliminary scan for the feasible minimum of f
    let mut x = Vec::with_capacity(d);
    let mut f_min_feasible = T::infinity();
    let mut f_min_any = T::infinity();
    for _ in 0..100_000 {
        draw(&mut rng, &mut x);
        let fx = problem.f(&x);
        f_min_any = f_min_any.min(fx);
        if feasible(&x) {
            f_min_feasible = f_min_feasible.min(fx);
        }
    }
    let f_min = if f_min_feasible.is_finite() {
        f_min_feasible
    } else {
        f_min_any
    };
    if !f_min.is_finite() {
        return Err(Error::InfeasibleTarget(
            "objective has no finite values over the box".into(),
        ));
    }

    let mut samples = Vec::with_capacity(m * d);
    let mut accepted = 0usize;
    let mut proposals = 0u64;
    while accepted < m {
        draw(&mut rng, &mut x);
        proposals += 1;
        if feasible(&x) {
            let p_accept = (-problem.alpha * (problem.f(&x) - f_min)).exp();
            if rng.random_range(T::zero()..T::one()) < p_accept {
                samples.extend_from_slice(&x);
                accepted += 1;
            }
        }
        if proposals >= 10_000_000 && (accepted as f64) < 1e-6 * proposals as f64 {
            return Err(Error::InfeasibleTarget(format!(
                "acceptance rate below 1e-6 after {proposals} proposals"
            )));
        }
    }
    Ok(GroundTruthSet {
        samples: ParticleSet::new(m, d, samples)?,
        seed,
    })
}

/// Minimum-cost perfect assignment on an `n x n` cost matrix, by the
/// shortest-augmenting-path method with dual potentials (O(n^3)).
///
/// Returns `assign[j] = i`: the row matched to column `j`.
pub fn assignment<T: Real>(n: usize, cost: &dyn Fn(usize, usize) -> T) -> Vec<usize> {
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut matched = vec![0usize; n + 1]; // column -> row, 1-based; 0 = free
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[j - 1] = matched[j] - 1;
    }
    assign
}

/// Exact Earth Mover Distance between equal-size point sets under an
/// arbitrary pairwise ground cost: the mean cost of the optimal assignment.
pub fn emd_with<T: Real>(m: usize, cost: &dyn Fn(usize, usize) -> T) -> T {
    let assign = assignment(m, cost);
    let mut total = T::zero();
    for (j, &i) in assign.iter().enumerate() {
        total += cost(i, j);
    }
    total / T::of_usize(m)
}

/// Exact Earth Mover Distance with Euclidean ground cost.
pub fn emd<T: Real>(a: &ParticleSet<T>, b: &ParticleSet<T>) -> Result<T> {
    if a.n() != b.n() {
        return Err(Error::Contract(format!(
            "EMD needs equal counts, got {} and {}",
            a.n(),
            b.n()
        )));
    }
    if a.d() != b.d() {
        return Err(Error::Contract("EMD needs equal dimensions".into()));
    }
    let m = a.n();
    // dense cost matrix; desk-scale m makes this affordable
    let mut c = vec![T::zero(); m * m];
    for i in 0..m {
        for j in 0..m {
            c[i * m + j] = crate::kernel::sqdist(a.row(i), b.row(j)).sqrt();
        }
    }
    Ok(emd_with(m, &|i, j| c[i * m + j]))
}

/// Max relative error between an analytic gradient and central finite
/// differences (step 1e-6) over the given points.
pub fn grad_check<T: Real>(
    value: &dyn Fn(&[T]) -> T,
    grad: &dyn Fn(&[T]) -> Vec<T>,
    points: &[Vec<T>],
) -> T {
    let step = T::cast(1e-6);
    let mut worst = T::zero();
    for x in points {
        let g = grad(x);
        let mut fd = vec![T::zero(); x.len()];
        let mut probe = x.clone();
        for k in 0..x.len() {
            let orig = probe[k];
            probe[k] = orig + step;
            let hi = value(&probe);
            probe[k] = orig - step;
            let lo = value(&probe);
            probe[k] = orig;
            fd[k] = (hi - lo) / (T::two() * step);
        }
        let mut diff = T::zero();
        let mut fd_norm = T::zero();
        for k in 0..x.len() {
            diff += (g[k] - fd[k]) * (g[k] - fd[k]);
            fd_norm += fd[k] * fd[k];
        }
        let err = diff.sqrt() / fd_norm.sqrt().max(T::one());
        worst = worst.max(err);
    }
    worst
}

/// Max relative gradient error over a problem's objective and every
/// constraint pair, probed at `n_points` draws from its own initializer.
pub fn problem_grad_check<T: Real>(problem: &Problem<T>, n_points: usize, seed: u64) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<T>> = (0..n_points)
        .map(|_| (problem.init_sampler)(&mut rng))
        .collect();
    let f = problem.f.clone();
    let gf = problem.grad_f.clone();
    let mut worst = grad_check(&move |x: &[T]| f(x), &move |x: &[T]| gf(x), &points);
    for c in problem
        .constraints
        .equalities
        .iter()
        .chain(&problem.constraints.inequalities)
    {
        let (cv, cg) = (c.value.clone(), c.grad.clone());
        worst = worst.max(grad_check(
            &move |x: &[T]| cv(x),
            &move |x: &[T]| cg(x),
            &points,
        ));
    }
    worst
}

/// Which driver a trial uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodKind {
    Q,
    P,
    /// Plain SVGD: the Q driver with all constraint weights pinned to zero
    /// (box projection still applies).
    Unconstrained,
}

impl MethodKind {
    pub fn tag(&self) -> &'static str {
        match self {
            MethodKind::Q => "q",
            MethodKind::P => "p",
            MethodKind::Unconstrained => "unconstrained",
        }
    }
}

/// One row of the evaluation protocol.
#[derive(Clone, Debug)]
pub struct MetricsRecord<T> {
    pub problem: String,
    pub method: MethodKind,
    pub formulation: SoftKind,
    pub seed: u64,
    pub n_particles: usize,
    pub emd: Option<T>,
    pub total_gradient_steps: u64,
    pub outer_iterations: u64,
    pub max_abs_h: T,
    pub max_pos_g: T,
    pub converged: bool,
}

/// Decouple the ground-truth stream from the solver stream for a trial seed.
pub fn ground_truth_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Run one (method, formulation, seed) cell.
pub fn run_trial<T: Real>(
    problem: &Problem<T>,
    method: MethodKind,
    params: &FormulationParams<T>,
    kind: SoftKind,
    cfg: &SolveConfig<T>,
    ground_truth: Option<&GroundTruthSet<T>>,
) -> Result<(MetricsRecord<T>, SolveReport<T>)> {
    let cons = &problem.constraints;
    let report = match method {
        MethodKind::Q => {
            let f = params.instantiate(kind, cons.n_eq(), cons.n_ineq());
            solve_q(problem, &f, cfg)?
        }
        MethodKind::P => {
            let f = params.instantiate(kind, cons.n_eq(), cons.n_ineq());
            solve_p(problem, &f, cfg)?
        }
        MethodKind::Unconstrained => {
            let mut f =
                params.instantiate(SoftKind::QuadraticPenalty, cons.n_eq(), cons.n_ineq());
            f.c = T::zero();
            f.d_w = T::zero();
            solve_q(problem, &f, cfg)?
        }
    };
    let per_particle: Vec<_> = report
        .particles
        .rows()
        .map(|r| violation(cons, r))
        .collect();
    let worst = pool_worst(&per_particle);
    let emd_value = match ground_truth {
        Some(gt) => Some(emd(&report.particles, &gt.samples)?),
        None => None,
    };
    let record = MetricsRecord {
        problem: problem.name.clone(),
        method,
        formulation: kind,
        seed: cfg.seed,
        n_particles: cfg.n_particles,
        emd: emd_value,
        total_gradient_steps: report.total_gradient_steps,
        outer_iterations: report.outer_iterations,
        max_abs_h: worst.max_abs_h,
        max_pos_g: worst.max_pos_g,
        converged: report.converged,
    };
    Ok((record, report))
}

/// The methods x formulations x seeds sweep for one problem family.
#[derive(Clone, Debug)]
pub struct TrialPlan<T> {
    pub methods: Vec<MethodKind>,
    pub formulations: Vec<SoftKind>,
    pub seeds: Vec<u64>,
    pub config: SolveConfig<T>,
    pub params: FormulationParams<T>,
    /// Compute EMD against a rejection-sampled ground truth of matching size
    /// when the problem is eligible.
    pub compute_emd: bool,
}

/// Run every cell of the plan. Cells run concurrently with isolated seeds;
/// records come back in deterministic (method, formulation, seed) order.
/// Nonconvergence is recorded per cell, not raised.
pub fn trial_matrix<T, F>(
    plan: &TrialPlan<T>,
    build_problem: F,
) -> Result<Vec<(MetricsRecord<T>, SolveReport<T>)>>
where
    T: Real,
    F: Fn(u64) -> Problem<T> + Send + Sync,
{
    let mut cells = Vec::new();
    for &method in &plan.methods {
        for &kind in &plan.formulations {
            for &seed in &plan.seeds {
                cells.push((method, kind, seed));
            }
        }
    }
    cells
        .par_iter()
        .map(|&(method, kind, seed)| {
            let problem = build_problem(seed);
            let mut cfg = plan.config.clone();
            cfg.seed = seed;
            let gt = if plan.compute_emd && rejection_eligible(&problem) {
                Some(rejection_sample(
                    &problem,
                    cfg.n_particles,
                    ground_truth_seed(seed),
                )?)
            } else {
                None
            };
            run_trial(&problem, method, &plan.params, kind, &cfg, gt.as_ref())
        })
        .collect()
}
