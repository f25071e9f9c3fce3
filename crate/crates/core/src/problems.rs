//! Problem data: coefficients, initial data, source terms and exact solutions,
//! including the four built-in benchmark problems.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;

use crate::error::{invalid, FgpsError, Result};
use crate::fourier::{GridFunction2D, PeriodicGrid};
use crate::frac_diff::fd_oracle;

/// Oracle tolerance used when generating manufactured right-hand sides.
pub const RHS_TOL: f64 = 1e-13;

pub type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type ScalarCurve = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

fn field(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> ScalarField {
    Arc::new(f)
}

fn curve(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ScalarCurve {
    Arc::new(f)
}

/// A known solution together with its first partial derivatives.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarField,
    pub u_x: ScalarField,
    pub u_t: ScalarField,
}

impl ExactSolution {
    pub fn new(
        u: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        u_x: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        u_t: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            u: field(u),
            u_x: field(u_x),
            u_t: field(u_t),
        }
    }
}

/// Right-hand side of the equation.
#[derive(Clone)]
pub enum SourceTerm {
    ClosedForm(ScalarField),
    /// Generated by applying the operator to the exact solution.
    Manufactured,
}

/// `a(x,t) D^α_x u + b(x,t) D^β_t u = f(x,t)`, `u(x,0) = g(x)`, `u(0,t) = h(t)`,
/// with `u` periodic of period `T₁` in `x` and `T₂` in `t`.
#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    period_x: f64,
    period_t: f64,
    alpha: f64,
    beta: f64,
    memory_len: f64,
    coeff_a: ScalarField,
    coeff_b: ScalarField,
    source: SourceTerm,
    init_g: ScalarCurve,
    init_h: ScalarCurve,
    exact: Option<ExactSolution>,
    reference: Option<ExactSolution>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("period_x", &self.period_x)
            .field("period_t", &self.period_t)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("memory_len", &self.memory_len)
            .field("manufactured", &matches!(self.source, SourceTerm::Manufactured))
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

fn check_order(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(invalid(name, format!("order must lie in (0, 1] (got {v})")));
    }
    Ok(())
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(name, format!("must be positive (got {v})")));
    }
    Ok(())
}

impl ProblemSpec {
    /// Builds a problem. A manufactured source requires an exact solution.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        (period_x, period_t): (f64, f64),
        (alpha, beta): (f64, f64),
        memory_len: f64,
        coeff_a: ScalarField,
        coeff_b: ScalarField,
        source: SourceTerm,
        init_g: ScalarCurve,
        init_h: ScalarCurve,
        exact: Option<ExactSolution>,
    ) -> Result<Self> {
        check_positive("period_x", period_x)?;
        check_positive("period_t", period_t)?;
        check_order("alpha", alpha)?;
        check_order("beta", beta)?;
        check_positive("L", memory_len)?;
        if matches!(source, SourceTerm::Manufactured) && exact.is_none() {
            return Err(FgpsError::Unsupported(
                "a manufactured source needs an exact solution".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            period_x,
            period_t,
            alpha,
            beta,
            memory_len,
            coeff_a,
            coeff_b,
            source,
            init_g,
            init_h,
            exact,
            reference: None,
        })
    }

    /// Attaches a reference surface used for limit studies when no exact
    /// solution is known at the chosen orders.
    pub fn with_reference(mut self, reference: ExactSolution) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_memory_len(mut self, memory_len: f64) -> Result<Self> {
        check_positive("L", memory_len)?;
        self.memory_len = memory_len;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn period_x(&self) -> f64 {
        self.period_x
    }

    pub fn period_t(&self) -> f64 {
        self.period_t
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn memory_len(&self) -> f64 {
        self.memory_len
    }

    pub fn coeff_a(&self, x: f64, t: f64) -> f64 {
        (self.coeff_a)(x, t)
    }

    pub fn coeff_b(&self, x: f64, t: f64) -> f64 {
        (self.coeff_b)(x, t)
    }

    pub fn init_g(&self, x: f64) -> f64 {
        (self.init_g)(x)
    }

    pub fn init_h(&self, t: f64) -> f64 {
        (self.init_h)(t)
    }

    pub fn source(&self) -> &SourceTerm {
        &self.source
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        self.exact.as_ref()
    }

    pub fn reference(&self) -> Option<&ExactSolution> {
        self.reference.as_ref()
    }

    /// `f(x, t)`, generated from the exact solution when the source is manufactured.
    pub fn source_at(&self, x: f64, t: f64) -> Result<f64> {
        match &self.source {
            SourceTerm::ClosedForm(f) => Ok(f(x, t)),
            SourceTerm::Manufactured => rhs_from_exact(self, x, t, RHS_TOL),
        }
    }

    /// Source values at interior nodes, ordered like the global unknowns
    /// (`(j − 1)(N₁ − 1) + (l − 1)`).
    pub fn source_on_interior(&self, grid_x: &PeriodicGrid, grid_t: &PeriodicGrid) -> Result<Vec<f64>> {
        let points: Vec<(f64, f64)> = (1..grid_t.len())
            .flat_map(|j| (1..grid_x.len()).map(move |l| (grid_x.node(l), grid_t.node(j))))
            .collect();
        points
            .par_iter()
            .map(|&(x, t)| self.source_at(x, t))
            .collect()
    }
}

/// `a·D^α_x u + b·D^β_t u` at `(x, t)`, with both derivatives from the oracle.
pub fn rhs_from_exact(spec: &ProblemSpec, x: f64, t: f64, tol: f64) -> Result<f64> {
    let exact = spec
        .exact()
        .ok_or_else(|| FgpsError::Unsupported(format!("{} has no exact solution", spec.name)))?;
    let u_x = &exact.u_x;
    let u_t = &exact.u_t;
    let dx = fd_oracle(|y| u_x(y, t), spec.alpha, spec.memory_len, x, tol)?;
    let dt = fd_oracle(|y| u_t(x, y), spec.beta, spec.memory_len, t, tol)?;
    Ok(spec.coeff_a(x, t) * dx + spec.coeff_b(x, t) * dt)
}

/// Memory length used by the built-in problems.
pub const DEFAULT_MEMORY_LEN: f64 = 30.0;

/// Fixed orders of problems 1–3.
pub fn fixed_orders(id: u8) -> Option<(f64, f64)> {
    match id {
        1 => Some((0.5, 0.5)),
        2 => Some((1.0 / 3.0, 2.0 / 3.0)),
        3 => Some((0.7, 0.8)),
        _ => None,
    }
}

/// Closed-form source of problem 4.
pub fn problem4_source(x: f64, t: f64) -> f64 {
    ((t * t - 1.0) * x - 5.0) * (x + t).sin()
        + 0.3f64.sinh() * ((x + 5.0) * x.cos() * t.sin() - x * t * t * x.sin() * t.cos())
}

/// Solution of problem 4 at `α = β = 1`.
pub fn problem4_unit_order_solution() -> ExactSolution {
    let s = 0.3f64.sinh();
    ExactSolution::new(
        move |x, t| (x + t).cos() + s * x.sin() * t.sin(),
        move |x, t| -(x + t).sin() + s * x.cos() * t.sin(),
        move |x, t| -(x + t).sin() + s * x.sin() * t.cos(),
    )
}

/// Built-in benchmark problem `id ∈ 1..=4`.
///
/// Problems 1–3 have fixed orders; `orders` may be omitted or must match them.
/// Problem 4 takes any orders in `(0, 1]` and defaults to `(1, 1)`, the only
/// case with a known exact solution.
pub fn catalog(id: u8, orders: Option<(f64, f64)>) -> Result<ProblemSpec> {
    if let (Some(fixed), Some(given)) = (fixed_orders(id), orders) {
        if (fixed.0 - given.0).abs() > 1e-12 || (fixed.1 - given.1).abs() > 1e-12 {
            return Err(invalid(
                "orders",
                format!(
                    "problem {id} fixes (alpha, beta) = ({}, {}), got ({}, {})",
                    fixed.0, fixed.1, given.0, given.1
                ),
            ));
        }
    }
    let l = DEFAULT_MEMORY_LEN;
    match id {
        1 => ProblemSpec::new(
            "problem 1",
            (2.0 * PI, 2.0 * PI),
            (0.5, 0.5),
            l,
            field(|x, t| x * t),
            field(|x, t| x + t),
            SourceTerm::Manufactured,
            curve(f64::sin),
            curve(|_| 0.0),
            Some(ExactSolution::new(
                |x, t| x.sin() * t.cos(),
                |x, t| x.cos() * t.cos(),
                |x, t| -x.sin() * t.sin(),
            )),
        ),
        2 => ProblemSpec::new(
            "problem 2",
            (2.0 * PI / 3.0, 2.0 * PI),
            (1.0 / 3.0, 2.0 / 3.0),
            l,
            field(|x, t| (x * t).sin()),
            field(|x, t| (x + t * t).cos()),
            SourceTerm::Manufactured,
            curve(|x| (3.0 * x + 1.0).cos()),
            curve(|t| 1f64.cos() - t.sin()),
            Some(ExactSolution::new(
                |x, t| (3.0 * x + 1.0).cos() - t.sin(),
                |x, _| -3.0 * (3.0 * x + 1.0).sin(),
                |_, t| -t.cos(),
            )),
        ),
        3 => ProblemSpec::new(
            "problem 3",
            (PI, 2.0 * PI),
            (0.7, 0.8),
            l,
            field(|x, t| (-x * t).exp()),
            field(|x, t| (x - t + 3.0 * PI).ln()),
            SourceTerm::Manufactured,
            curve(|_| 0.0),
            curve(|_| 0.0),
            Some(ExactSolution::new(
                |x, t| (2.0 * x).sin() * t.sin(),
                |x, t| 2.0 * (2.0 * x).cos() * t.sin(),
                |x, t| (2.0 * x).sin() * t.cos(),
            )),
        ),
        4 => {
            let (alpha, beta) = orders.unwrap_or((1.0, 1.0));
            let unit = problem4_unit_order_solution();
            let exact = (alpha == 1.0 && beta == 1.0).then(|| unit.clone());
            Ok(ProblemSpec::new(
                "problem 4",
                (2.0 * PI, 2.0 * PI),
                (alpha, beta),
                l,
                field(|x, _| x + 5.0),
                field(|x, t| -x * t * t),
                SourceTerm::ClosedForm(field(problem4_source)),
                curve(f64::cos),
                curve(f64::cos),
                exact,
            )?
            .with_reference(unit))
        }
        _ => Err(invalid("problem", format!("unknown problem id {id} (expected 1-4)"))),
    }
}

/// Accuracy summary of a solve on an `m × m` evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub max_abs_err: f64,
    pub rms_err: f64,
    pub kappa: f64,
    pub elapsed: Duration,
    pub eval_grid_size: usize,
}

/// `m` equispaced points covering `[0, period]` inclusive.
pub fn eval_points(period: f64, m: usize) -> Vec<f64> {
    (0..m).map(|i| period * i as f64 / (m - 1) as f64).collect()
}

/// Max and RMS of `|I u − target|` over the `m × m` evaluation grid.
pub fn deviation(
    target: &ExactSolution,
    solution: &GridFunction2D,
    m: usize,
) -> Result<(f64, f64)> {
    if m < 2 {
        return Err(invalid("eval_grid", format!("needs at least 2 points (got {m})")));
    }
    let xs = eval_points(solution.grid_x().period(), m);
    let ts = eval_points(solution.grid_t().period(), m);
    let approx = solution.interpolate_on(&xs, &ts);
    let mut max = 0.0f64;
    let mut sum_sq = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        for (k, &t) in ts.iter().enumerate() {
            let e = (approx[i * m + k] - (target.u)(x, t)).abs();
            max = max.max(e);
            sum_sq += e * e;
        }
    }
    Ok((max, (sum_sq / (m * m) as f64).sqrt()))
}

/// Error of `solution` against the problem's exact solution.
pub fn error_report(
    spec: &ProblemSpec,
    solution: &GridFunction2D,
    m: usize,
    kappa: f64,
    elapsed: Duration,
) -> Result<ErrorReport> {
    let exact = spec.exact().ok_or_else(|| {
        FgpsError::Unsupported(format!("{} has no exact solution at these orders", spec.name))
    })?;
    let (max_abs_err, rms_err) = deviation(exact, solution, m)?;
    Ok(ErrorReport {
        max_abs_err,
        rms_err,
        kappa,
        elapsed,
        eval_grid_size: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn problem1_data() {
        let p = catalog(1, None).unwrap();
        assert_eq!((p.period_x(), p.period_t()), (2.0 * PI, 2.0 * PI));
        assert_eq!((p.alpha(), p.beta()), (0.5, 0.5));
        assert_eq!(p.init_g(0.7), 0.7f64.sin());
        assert_eq!(p.init_h(2.1), 0.0);
        assert!(catalog(1, Some((0.5, 0.5))).is_ok());
        assert!(catalog(1, Some((0.4, 0.5))).is_err());
    }

    #[test]
    fn problem2_data() {
        let p = catalog(2, None).unwrap();
        assert_abs_diff_eq!(p.period_x(), 2.0 * PI / 3.0);
        assert_eq!(p.init_g(0.4), (3.0 * 0.4f64 + 1.0).cos());
        assert_eq!(p.init_h(0.9), 1f64.cos() - 0.9f64.sin());
    }

    #[test]
    fn problem4_source_at_origin() {
        let p = catalog(4, Some((1.0, 1.0))).unwrap();
        assert_eq!(p.source_at(0.0, 0.0).unwrap(), 0.0);
        assert!(p.exact().is_some());
        let frac = catalog(4, Some((0.9, 0.9))).unwrap();
        assert!(frac.exact().is_none());
        assert!(frac.reference().is_some());
        assert!(catalog(4, Some((1.2, 0.9))).is_err());
        assert!(catalog(5, None).is_err());
        assert!(catalog(0, None).is_err());
    }

    #[test]
    fn exact_solutions_match_initial_data() {
        for id in 1..=4 {
            let p = catalog(id, None).unwrap();
            let exact = p.exact().unwrap();
            for i in 0..25 {
                let s = i as f64 * 0.37;
                assert!(((exact.u)(s, 0.0) - p.init_g(s)).abs() <= 1e-12);
                assert!(((exact.u)(0.0, s) - p.init_h(s)).abs() <= 1e-12);
            }
            assert!((p.init_g(0.0) - p.init_h(0.0)).abs() <= 1e-10);
        }
    }

    #[test]
    fn unit_order_solution_satisfies_problem4() {
        let u = problem4_unit_order_solution();
        for &(x, t) in &[(0.3, 1.1), (2.0, 5.0), (6.0, 0.2)] {
            let lhs = (x + 5.0) * (u.u_x)(x, t) - x * t * t * (u.u_t)(x, t);
            assert_abs_diff_eq!(lhs, problem4_source(x, t), epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_coefficients_give_zero_rhs() {
        let p = ProblemSpec::new(
            "zero",
            (1.0, 1.0),
            (0.5, 0.5),
            3.0,
            field(|_, _| 0.0),
            field(|_, _| 0.0),
            SourceTerm::Manufactured,
            curve(|_| 0.0),
            curve(|_| 0.0),
            Some(ExactSolution::new(|_, _| 0.0, |x, _| x.cos(), |_, t| t.sin())),
        )
        .unwrap();
        assert_eq!(rhs_from_exact(&p, 0.3, 0.6, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn near_unit_order_oracle_matches_closed_form() {
        let g = 1.0 - 1e-6;
        let p = ProblemSpec::new(
            "problem 4 near unit order",
            (2.0 * PI, 2.0 * PI),
            (g, g),
            DEFAULT_MEMORY_LEN,
            field(|x, _| x + 5.0),
            field(|x, t| -x * t * t),
            SourceTerm::Manufactured,
            curve(f64::cos),
            curve(f64::cos),
            Some(problem4_unit_order_solution()),
        )
        .unwrap();
        for &(x, t) in &[(0.4, 2.2), (3.3, 1.0), (5.9, 4.4)] {
            let v = rhs_from_exact(&p, x, t, 1e-12).unwrap();
            // The gap is O((1 - γ) ln L) relative.
            let f = problem4_source(x, t);
            assert!((v - f).abs() <= 1e-5 * f.abs().max(1.0), "{v} vs {f}");
        }
    }

    #[test]
    fn missing_exact_is_unsupported() {
        let p = catalog(4, Some((0.8, 0.8))).unwrap();
        let g = PeriodicGrid::new(2.0 * PI, 4).unwrap();
        let u = GridFunction2D::from_fn(g, g, |_, _| 0.0);
        assert!(matches!(
            error_report(&p, &u, 10, 1.0, Duration::ZERO),
            Err(FgpsError::Unsupported(_))
        ));
        assert!(rhs_from_exact(&p, 0.1, 0.1, 1e-12).is_err());
    }

    #[test]
    fn sampled_exact_has_interpolation_error_only() {
        let p = catalog(1, None).unwrap();
        let g = PeriodicGrid::new(2.0 * PI, 4).unwrap();
        let exact = p.exact().unwrap();
        let u = GridFunction2D::from_fn(g, g, |x, t| (exact.u)(x, t));
        let r = error_report(&p, &u, 100, 1.0, Duration::ZERO).unwrap();
        assert!(r.max_abs_err <= 1e-13);
        assert!(r.max_abs_err >= r.rms_err && r.rms_err >= 0.0);
        assert!(error_report(&p, &u, 1, 1.0, Duration::ZERO).is_err());
    }
}
