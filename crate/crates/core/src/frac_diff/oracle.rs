//! Brute-force reference for the sliding-memory fractional derivative.
//!
//! Evaluates `(L^{1−γ}/Γ(2−γ)) ∫₀¹ f′(t − L y^{1/(1−γ)}) dy` by composite
//! 10-point Gauss–Legendre quadrature, doubling the panel count until two
//! successive estimates agree. It shares no code with the matrix route.

use super::{check_memory_len, derivative_scale};
use crate::error::{invalid, FgpsError, Result};

/// Default absolute tolerance for the oracle integral.
pub const DEFAULT_TOL: f64 = 1e-12;

const INITIAL_PANELS: usize = 8;
const MAX_PANELS: usize = 1 << 20;

const GL10_NODES: [f64; 5] = [
    0.148_874_338_981_631_22,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL10_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_753,
    0.269_266_719_309_996_5,
    0.219_086_362_515_982,
    0.149_451_349_150_580_36,
    0.066_671_344_308_688_07,
];

fn composite_gauss(g: &impl Fn(f64) -> f64, panels: usize) -> f64 {
    let h = 1.0 / panels as f64;
    let half = 0.5 * h;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        let mut panel = 0.0;
        for (x, w) in GL10_NODES.iter().zip(&GL10_WEIGHTS) {
            panel += w * (g(mid - half * x) + g(mid + half * x));
        }
        total += panel * half;
    }
    total
}

/// Adaptive estimate of `∫₀¹ g(y) dy` to absolute tolerance `tol`.
pub fn adaptive_unit_integral(g: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    let mut panels = INITIAL_PANELS;
    let mut prev = composite_gauss(&g, panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let next = composite_gauss(&g, panels);
        if (next - prev).abs() <= tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(FgpsError::OracleNonConvergence {
        estimate: prev,
        panels,
    })
}

/// Sliding-memory fractional derivative of order `gamma` at `t`, given `f′`.
///
/// At `gamma = 1` the operator is the ordinary derivative and `f′(t)` is returned.
pub fn fd_oracle(
    f_prime: impl Fn(f64) -> f64,
    gamma: f64,
    memory_len: f64,
    t: f64,
    tol: f64,
) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid("gamma", format!("order must lie in (0, 1] (got {gamma})")));
    }
    check_memory_len(memory_len)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(invalid("tol", format!("must be positive (got {tol})")));
    }
    if gamma == 1.0 {
        return Ok(f_prime(t));
    }
    let power = 1.0 / (1.0 - gamma);
    let integral = adaptive_unit_integral(|y| f_prime(t - memory_len * y.powf(power)), tol)?;
    Ok(derivative_scale(gamma, memory_len) * integral)
}
