//! End-to-end solve: operator matrices, assembly, direct solve and timing.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::collocation::{assemble, CollocationSolution, CollocationSystem};
use crate::error::{invalid, Result};
use crate::fourier::PeriodicGrid;
use crate::frac_diff::FracDiffMatrix;
use crate::gegenbauer::QuadratureRule;
use crate::problems::ProblemSpec;

/// Discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub n1: usize,
    pub n2: usize,
    pub n_g: usize,
    pub lambda: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            n1: 4,
            n2: 4,
            n_g: 12,
            lambda: 0.5,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("n1", self.n1), ("n2", self.n2)] {
            if n < 4 || n % 2 != 0 {
                return Err(invalid(name, format!("must be even and at least 4 (got {n})")));
            }
        }
        if self.n_g == 0 {
            return Err(invalid("n_g", "must be positive"));
        }
        crate::gegenbauer::check_lambda(self.lambda)
    }
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub system: CollocationSystem,
    pub solution: CollocationSolution,
    pub kappa: f64,
    /// Wall time of operator construction, assembly and the LU solve.
    pub elapsed: Duration,
}

/// Cache file name that encodes every parameter the matrix depends on.
pub fn cache_file_name(grid: &PeriodicGrid, gamma: f64, memory_len: f64, lambda: f64, n_g: usize) -> String {
    format!(
        "fdm_g{:016x}_L{:016x}_N{}_T{:016x}_lam{:016x}_ng{}.csv",
        gamma.to_bits(),
        memory_len.to_bits(),
        grid.len(),
        grid.period().to_bits(),
        lambda.to_bits(),
        n_g
    )
}

/// Builds the operator matrix, reusing a cached copy in `cache_dir` when one
/// with identical parameters exists and saving a fresh one otherwise.
pub fn operator_matrix(
    grid: &PeriodicGrid,
    rule: &QuadratureRule,
    gamma: f64,
    memory_len: f64,
    cache_dir: Option<&Path>,
) -> Result<FracDiffMatrix> {
    let path: Option<PathBuf> = cache_dir
        .map(|dir| dir.join(cache_file_name(grid, gamma, memory_len, rule.lambda(), rule.n_g())));
    if let Some(path) = &path {
        if path.is_file() {
            match FracDiffMatrix::load(path) {
                Ok(m) if m.matches(grid, gamma, memory_len, rule.lambda(), rule.n_g()) => return Ok(m),
                Ok(_) => log::warn!("ignoring mismatched cache file {}", path.display()),
                Err(e) => log::warn!("ignoring unreadable cache file {}: {e}", path.display()),
            }
        }
    }
    let m = FracDiffMatrix::build(grid, rule, gamma, memory_len)?;
    if let Some(path) = &path {
        m.save(path)?;
    }
    Ok(m)
}

/// Solves `problem` with the given discretization.
pub fn run(problem: &ProblemSpec, params: &SolverParams, cache_dir: Option<&Path>) -> Result<SolveOutcome> {
    params.validate()?;
    let grid_x = PeriodicGrid::new(problem.period_x(), params.n1)?;
    let grid_t = PeriodicGrid::new(problem.period_t(), params.n2)?;
    let rule = QuadratureRule::new(params.n_g, params.lambda)?;
    let l = problem.memory_len();

    let start = Instant::now();
    let d_alpha = operator_matrix(&grid_x, &rule, problem.alpha(), l, cache_dir)?;
    let d_beta = operator_matrix(&grid_t, &rule, problem.beta(), l, cache_dir)?;
    let system = assemble(problem, &d_alpha, &d_beta)?;
    let solution = system.solve()?;
    let elapsed = start.elapsed();

    let kappa = system.condition_number_2norm();
    Ok(SolveOutcome {
        system,
        solution,
        kappa,
        elapsed,
    })
}
