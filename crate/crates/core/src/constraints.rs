//! Constraint containers and the soft-constraint formulations that convert
//! equality/inequality constraints into differentiable costs, together with
//! their outer-loop parameter updates.
//!
//! Conventions: equalities `h(x) = 0`, inequalities `g(x) <= 0` feasible.
//! Box bounds live next to the functional constraints but are never folded
//! into a soft cost here; projection (Q method) or coordinate mappings
//! (p method) handle them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type ValueFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type GradFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// One scalar constraint: a value function and its gradient.
#[derive(Clone)]
pub struct ConstraintFn<T> {
    pub value: ValueFn<T>,
    pub grad: GradFn<T>,
}

impl<T: Real> ConstraintFn<T> {
    pub fn new(
        value: impl Fn(&[T]) -> T + Send + Sync + 'static,
        grad: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            grad: Arc::new(grad),
        }
    }
}

/// Equalities, inequalities, and box bounds for one problem.
#[derive(Clone)]
pub struct ConstraintSet<T> {
    pub equalities: Vec<ConstraintFn<T>>,
    pub inequalities: Vec<ConstraintFn<T>>,
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Real> ConstraintSet<T> {
    /// No constraints at all in `d` dimensions (infinite box).
    pub fn unbounded(d: usize) -> Self {
        Self {
            equalities: Vec::new(),
            inequalities: Vec::new(),
            lo: vec![T::neg_infinity(); d],
            hi: vec![T::infinity(); d],
        }
    }

    pub fn with_box(mut self, lo: Vec<T>, hi: Vec<T>) -> Self {
        self.lo = lo;
        self.hi = hi;
        self
    }

    pub fn n_eq(&self) -> usize {
        self.equalities.len()
    }

    pub fn n_ineq(&self) -> usize {
        self.inequalities.len()
    }

    pub fn has_finite_bounds(&self) -> bool {
        self.lo.iter().any(|v| v.is_finite()) || self.hi.iter().any(|v| v.is_finite())
    }
}

/// Which soft formulation converts constraint violations into cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SoftKind {
    QuadraticPenalty,
    AugmentedLagrangian,
    LogBarrier,
    RelaxedLogBarrier,
}

impl SoftKind {
    pub fn tag(&self) -> &'static str {
        match self {
            SoftKind::QuadraticPenalty => "quadpenalty",
            SoftKind::AugmentedLagrangian => "auglag",
            SoftKind::LogBarrier => "logbarrier",
            SoftKind::RelaxedLogBarrier => "relaxedlogbarrier",
        }
    }
}

/// Scalar knobs shared by all formulation kinds, used to instantiate a
/// [`SoftFormulation`] once the constraint counts are known.
#[derive(Clone, Copy, Debug)]
pub struct FormulationParams<T> {
    pub c0: T,
    pub d0: T,
    pub mu0: T,
    pub delta0: T,
    pub growth: T,
    pub shrink: T,
    /// Ceiling on the penalty weights; unbounded growth on a stuck
    /// iterate would otherwise freeze the line search.
    pub penalty_cap: T,
}

impl<T: Real> Default for FormulationParams<T> {
    fn default() -> Self {
        Self {
            c0: T::one(),
            d0: T::one(),
            mu0: T::one(),
            delta0: T::cast(0.1),
            growth: T::cast(10.0),
            shrink: T::half(),
            penalty_cap: T::cast(1e6),
        }
    }
}

impl<T: Real> FormulationParams<T> {
    pub fn instantiate(&self, kind: SoftKind, n_eq: usize, n_ineq: usize) -> SoftFormulation<T> {
        SoftFormulation {
            kind,
            lambda: vec![T::zero(); n_eq],
            gamma: vec![T::zero(); n_ineq],
            c: self.c0,
            d_w: self.d0,
            mu: self.mu0,
            delta: self.delta0,
            growth: self.growth,
            shrink: self.shrink,
            penalty_cap: self.penalty_cap,
            prev_h: None,
            prev_g: None,
        }
    }
}

/// One soft formulation `L_theta` with its live parameters.
#[derive(Clone, Debug)]
pub struct SoftFormulation<T> {
    pub kind: SoftKind,
    /// Per-equality multipliers.
    pub lambda: Vec<T>,
    /// Per-inequality multipliers, kept nonnegative.
    pub gamma: Vec<T>,
    /// Equality penalty weight.
    pub c: T,
    /// Inequality penalty weight.
    pub d_w: T,
    /// Barrier weight.
    pub mu: T,
    /// Relaxed-barrier switch threshold.
    pub delta: T,
    /// Penalty growth factor (> 1).
    pub growth: T,
    /// Barrier shrink factor (in (0,1)).
    pub shrink: T,
    /// Ceiling for `c` and `d_w`.
    pub penalty_cap: T,
    prev_h: Option<T>,
    prev_g: Option<T>,
}

impl<T: Real> SoftFormulation<T> {
    pub fn new(kind: SoftKind, n_eq: usize, n_ineq: usize) -> Self {
        FormulationParams::default().instantiate(kind, n_eq, n_ineq)
    }

    pub fn validate(&self, cons: &ConstraintSet<T>) -> Result<()> {
        if self.lambda.len() != cons.n_eq() || self.gamma.len() != cons.n_ineq() {
            return Err(Error::Contract(
                "multiplier lengths must match constraint counts".into(),
            ));
        }
        if self.gamma.iter().any(|g| *g < T::zero()) {
            return Err(Error::Parameter("gamma multipliers must be nonnegative".into()));
        }
        if matches!(self.kind, SoftKind::LogBarrier | SoftKind::RelaxedLogBarrier)
            && cons.n_eq() > 0
        {
            return Err(Error::UnsupportedCombination(
                "barrier formulations do not support equality constraints".into(),
            ));
        }
        Ok(())
    }

    /// Relaxed-barrier integrand: a log barrier for `g <= -delta`, a
    /// quadratic extension beyond it. Continuous with continuous slope at
    /// the seam.
    fn relaxed_term(&self, g: T) -> T {
        if g <= -self.delta {
            -(-g).ln()
        } else {
            let u = (g + T::two() * self.delta) / self.delta;
            T::half() * (u * u - T::one()) - self.delta.ln()
        }
    }

    fn relaxed_term_slope(&self, g: T) -> T {
        if g <= -self.delta {
            -T::one() / g
        } else {
            (g + T::two() * self.delta) / (self.delta * self.delta)
        }
    }

    /// `L_theta(x)` for this formulation. Log barrier returns `+inf` when
    /// any inequality is violated; barrier kinds reject equality
    /// constraints.
    pub fn soft_value(&self, cons: &ConstraintSet<T>, x: &[T]) -> Result<T> {
        self.validate(cons)?;
        let mut total = T::zero();
        match self.kind {
            SoftKind::QuadraticPenalty => {
                for eq in &cons.equalities {
                    let h = (eq.value)(x);
                    total += self.c * h * h;
                }
                for ineq in &cons.inequalities {
                    let g = (ineq.value)(x).max(T::zero());
                    total += self.d_w * g * g;
                }
            }
            SoftKind::AugmentedLagrangian => {
                for (eq, &lam) in cons.equalities.iter().zip(&self.lambda) {
                    let h = (eq.value)(x);
                    total += lam * h + self.c * h * h;
                }
                for (ineq, &gam) in cons.inequalities.iter().zip(&self.gamma) {
                    let g = (ineq.value)(x);
                    total += gam * g;
                    if g > T::zero() || gam > T::zero() {
                        total += self.d_w * g * g;
                    }
                }
            }
            SoftKind::LogBarrier => {
                for ineq in &cons.inequalities {
                    let g = (ineq.value)(x);
                    if g >= T::zero() {
                        return Ok(T::infinity());
                    }
                    total += -self.mu * (-g).ln();
                }
            }
            SoftKind::RelaxedLogBarrier => {
                for ineq in &cons.inequalities {
                    total += self.mu * self.relaxed_term((ineq.value)(x));
                }
            }
        }
        Ok(total)
    }

    /// Exact gradient of [`Self::soft_value`]. The log barrier errors at an
    /// infeasible point (its value is infinite there, so no descent
    /// direction exists).
    pub fn soft_grad(&self, cons: &ConstraintSet<T>, x: &[T]) -> Result<Vec<T>> {
        self.validate(cons)?;
        let mut out = vec![T::zero(); x.len()];
        let add = |scale: T, grad: &[T], out: &mut Vec<T>| {
            for (o, g) in out.iter_mut().zip(grad) {
                *o += scale * *g;
            }
        };
        match self.kind {
            SoftKind::QuadraticPenalty => {
                for eq in &cons.equalities {
                    let h = (eq.value)(x);
                    add(T::two() * self.c * h, &(eq.grad)(x), &mut out);
                }
                for ineq in &cons.inequalities {
                    let g = (ineq.value)(x);
                    if g > T::zero() {
                        add(T::two() * self.d_w * g, &(ineq.grad)(x), &mut out);
                    }
                }
            }
            SoftKind::AugmentedLagrangian => {
                for (eq, &lam) in cons.equalities.iter().zip(&self.lambda) {
                    let h = (eq.value)(x);
                    add(lam + T::two() * self.c * h, &(eq.grad)(x), &mut out);
                }
                for (ineq, &gam) in cons.inequalities.iter().zip(&self.gamma) {
                    let g = (ineq.value)(x);
                    let mut scale = gam;
                    if g > T::zero() || gam > T::zero() {
                        scale += T::two() * self.d_w * g;
                    }
                    if scale != T::zero() {
                        add(scale, &(ineq.grad)(x), &mut out);
                    }
                }
            }
            SoftKind::LogBarrier => {
                for ineq in &cons.inequalities {
                    let g = (ineq.value)(x);
                    if g >= T::zero() {
                        return Err(Error::BarrierDomain(format!(
                            "log barrier gradient requested at infeasible point (g = {g})"
                        )));
                    }
                    add(-self.mu / g, &(ineq.grad)(x), &mut out);
                }
            }
            SoftKind::RelaxedLogBarrier => {
                for ineq in &cons.inequalities {
                    let g = (ineq.value)(x);
                    add(self.mu * self.relaxed_term_slope(g), &(ineq.grad)(x), &mut out);
                }
            }
        }
        Ok(out)
    }

    /// Outer-loop parameter update.
    ///
    /// `multipliers` supplies the per-constraint raw values that drive the
    /// multiplier steps (for the p method this is the min-pooled report);
    /// `progress` supplies the violation maxima that drive penalty growth
    /// and are remembered for the improvement test.
    pub fn update_params(
        &mut self,
        multipliers: &ViolationReport<T>,
        progress: &ViolationReport<T>,
        tol: T,
    ) {
        match self.kind {
            SoftKind::QuadraticPenalty => {
                if progress.max_abs_h > tol {
                    self.c = (self.c * self.growth).min(self.penalty_cap);
                }
                if progress.max_pos_g > tol {
                    self.d_w = (self.d_w * self.growth).min(self.penalty_cap);
                }
            }
            SoftKind::AugmentedLagrangian => {
                for (lam, &h) in self.lambda.iter_mut().zip(&multipliers.eq_values) {
                    *lam += T::two() * self.c * h;
                }
                for (gam, &g) in self.gamma.iter_mut().zip(&multipliers.ineq_values) {
                    *gam = (*gam + T::two() * self.d_w * g).max(T::zero());
                }
                // Grow penalties only when the violation did not shrink by a
                // factor of 4 since the previous outer iteration.
                let quarter = T::cast(0.25);
                if let Some(prev) = self.prev_h {
                    if progress.max_abs_h > tol && progress.max_abs_h >= quarter * prev {
                        self.c = (self.c * self.growth).min(self.penalty_cap);
                    }
                }
                if let Some(prev) = self.prev_g {
                    if progress.max_pos_g > tol && progress.max_pos_g >= quarter * prev {
                        self.d_w = (self.d_w * self.growth).min(self.penalty_cap);
                    }
                }
                self.prev_h = Some(progress.max_abs_h);
                self.prev_g = Some(progress.max_pos_g);
            }
            SoftKind::LogBarrier => {
                self.mu *= self.shrink;
            }
            SoftKind::RelaxedLogBarrier => {
                self.mu *= self.shrink;
                self.delta *= self.shrink;
            }
        }
    }
}

/// Raw constraint values at a point plus their violation maxima.
#[derive(Clone, Debug)]
pub struct ViolationReport<T> {
    pub max_abs_h: T,
    pub max_pos_g: T,
    pub eq_values: Vec<T>,
    pub ineq_values: Vec<T>,
}

impl<T: Real> ViolationReport<T> {
    pub fn feasible(&self, tol: T) -> bool {
        self.max_abs_h <= tol && self.max_pos_g <= tol
    }
}

/// Evaluate all constraints at `x`. Box bounds are not part of the report;
/// projection and mappings own them.
pub fn violation<T: Real>(cons: &ConstraintSet<T>, x: &[T]) -> ViolationReport<T> {
    let eq_values: Vec<T> = cons.equalities.iter().map(|c| (c.value)(x)).collect();
    let ineq_values: Vec<T> = cons.inequalities.iter().map(|c| (c.value)(x)).collect();
    let max_abs_h = eq_values
        .iter()
        .fold(T::zero(), |acc, h| acc.max(h.abs()));
    let max_pos_g = ineq_values
        .iter()
        .fold(T::zero(), |acc, g| acc.max(g.max(T::zero())));
    ViolationReport {
        max_abs_h,
        max_pos_g,
        eq_values,
        ineq_values,
    }
}

/// Pool per-particle reports by worst violation: per equality the value of
/// largest magnitude, per inequality the largest value.
pub fn pool_worst<T: Real>(reports: &[ViolationReport<T>]) -> ViolationReport<T> {
    pool(reports, true)
}

/// Pool per-particle reports by the particle least in violation: per
/// equality the value of smallest magnitude, per inequality the smallest
/// value. Used for the p method's shared multiplier updates.
pub fn pool_least<T: Real>(reports: &[ViolationReport<T>]) -> ViolationReport<T> {
    pool(reports, false)
}

fn pool<T: Real>(reports: &[ViolationReport<T>], worst: bool) -> ViolationReport<T> {
    assert!(!reports.is_empty(), "cannot pool zero reports");
    let n_eq = reports[0].eq_values.len();
    let n_ineq = reports[0].ineq_values.len();
    let mut eq_values = reports[0].eq_values.clone();
    let mut ineq_values = reports[0].ineq_values.clone();
    for r in &reports[1..] {
        for k in 0..n_eq {
            let replace = if worst {
                r.eq_values[k].abs() > eq_values[k].abs()
            } else {
                r.eq_values[k].abs() < eq_values[k].abs()
            };
            if replace {
                eq_values[k] = r.eq_values[k];
            }
        }
        for k in 0..n_ineq {
            let replace = if worst {
                r.ineq_values[k] > ineq_values[k]
            } else {
                r.ineq_values[k] < ineq_values[k]
            };
            if replace {
                ineq_values[k] = r.ineq_values[k];
            }
        }
    }
    let max_abs_h = eq_values.iter().fold(T::zero(), |a, h| a.max(h.abs()));
    let max_pos_g = ineq_values
        .iter()
        .fold(T::zero(), |a, g| a.max(g.max(T::zero())));
    ViolationReport {
        max_abs_h,
        max_pos_g,
        eq_values,
        ineq_values,
    }
}
