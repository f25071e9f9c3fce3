//! Fourier–Gegenbauer pseudospectral solver for two-dimensional periodic
//! linear PDEs with sliding-memory fractional derivatives in space and time.
//!
//! The fractional operator of order `γ ∈ (0, 1]` with memory length `L` is
//! `D^γ f(t) = (L^{1−γ}/Γ(2−γ)) ∫₀¹ f′(t − L y^{1/(1−γ)}) dy`. It is
//! discretized on an equispaced Fourier grid by a Gegenbauer–Gauss rule, giving
//! a circulant operator matrix; the PDE is then solved by collocation.

pub mod collocation;
pub mod error;
pub mod fourier;
pub mod frac_diff;
pub mod gegenbauer;
pub mod io;
pub mod pipeline;
pub mod problems;

pub use collocation::{assemble, CollocationSolution, CollocationSystem, IndexMap};
pub use error::{FgpsError, Result};
pub use fourier::{GridFunction2D, PeriodicGrid};
pub use frac_diff::{fd_oracle, FracDiffMatrix};
pub use gegenbauer::QuadratureRule;
pub use pipeline::{run, SolveOutcome, SolverParams};
pub use problems::{catalog, error_report, ErrorReport, ExactSolution, ProblemSpec, SourceTerm};
