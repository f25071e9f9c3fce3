//! Gegenbauer polynomials and Gegenbauer–Gauss quadrature on the unit interval.
//!
//! Polynomials follow the standardization where `C_n^λ(1) = 1` for every degree,
//! so that λ = 0 gives Chebyshev polynomials of the first kind and λ = 1/2 gives
//! Legendre polynomials.
//!
//! A [`QuadratureRule`] holds the zeros of `C_{N_G+1}^λ`, their images on `[0, 1]`
//! and weights that integrate the degree-`N_G` nodal interpolant exactly over
//! `[0, 1]` (plain, unweighted integral).

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, FgpsError, Result};
use crate::io::{fmt17, parse_f64, read_nonempty_lines};

/// Smallest admissible Gegenbauer index; values closer to −1/2 are rejected.
pub const MIN_LAMBDA: f64 = -0.5 + 1e-8;

const NEWTON_MAX_ITER: usize = 100;
const MIN_NODE_SPACING: f64 = 1e-14;

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda <= MIN_LAMBDA {
        return Err(invalid(
            "lambda",
            format!("Gegenbauer index must exceed -1/2 (got {lambda})"),
        ));
    }
    Ok(())
}

/// Standardized Gegenbauer polynomial `C_n^λ(x)` with `C_n^λ(1) = 1`.
pub fn gegenbauer_eval(n: usize, lambda: f64, x: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if n == 0 {
        return Ok(1.0);
    }
    let mut prev = 1.0;
    let mut curr = x;
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 * (kf + lambda) * x * curr - kf * prev) / (kf + 2.0 * lambda);
        prev = curr;
        curr = next;
    }
    Ok(curr)
}

/// Off-diagonal Jacobi-matrix entry `b_k` of the orthonormal family for the
/// weight `(1 - x²)^(λ - 1/2)`: `x p_k = b_{k+1} p_{k+1} + b_k p_{k-1}`.
fn jacobi_offdiag(k: usize, lambda: f64) -> f64 {
    if k == 1 {
        return (0.5 / (1.0 + lambda)).sqrt();
    }
    let kf = k as f64;
    (kf * (kf + 2.0 * lambda - 1.0) / (4.0 * (kf + lambda) * (kf + lambda - 1.0))).sqrt()
}

/// Walks the orthonormal recurrence (scaled so `p_0 = 1`) up to degree `n`,
/// handing each `p_k(x)` to `visit`.
fn for_each_orthonormal(n: usize, lambda: f64, x: f64, mut visit: impl FnMut(usize, f64)) {
    let mut prev = 0.0;
    let mut curr = 1.0;
    visit(0, curr);
    let mut b_curr = 0.0;
    for k in 0..n {
        let b_next = jacobi_offdiag(k + 1, lambda);
        let next = (x * curr - b_curr * prev) / b_next;
        prev = curr;
        curr = next;
        b_curr = b_next;
        visit(k + 1, curr);
    }
}

/// Value and derivative of the scaled orthonormal polynomial of degree `n`.
fn orthonormal_with_derivative(n: usize, lambda: f64, x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    let mut b_curr = 0.0;
    for k in 0..n {
        let b_next = jacobi_offdiag(k + 1, lambda);
        let p_next = (x * p - b_curr * p_prev) / b_next;
        let d_next = (p + x * d - b_curr * d_prev) / b_next;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
        b_curr = b_next;
    }
    (p, d)
}

/// Zeros of the degree-`(n_g + 1)` Gegenbauer polynomial, in increasing order.
///
/// Each zero is refined by Newton's method from an asymptotic Chebyshev-type
/// initial guess, falling back to bisection whenever a step leaves the
/// current sign-change bracket. The zeros are mirrored so the set is exactly
/// symmetric about the origin.
pub fn gg_nodes(n_g: usize, lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let degree = n_g + 1;
    let d = degree as f64;
    let half = degree / 2;
    let angle = |k: f64| (k - 0.5 + 0.5 * lambda) * std::f64::consts::PI / (d + lambda);

    // Positive zeros, largest first (k = 1 is closest to x = 1).
    let mut upper = Vec::with_capacity(half);
    for k in 1..=half {
        let kf = k as f64;
        let guess = angle(kf).cos();
        let hi = angle(kf - 0.5).cos().min(1.0);
        let lo = if degree % 2 == 1 && k == half {
            0.5 * guess
        } else {
            angle(kf + 0.5).cos().max(0.0)
        };
        let root = refine_root(degree, lambda, guess, lo, hi)
            .map_err(|reason| FgpsError::NumericalFailure { index: k - 1, reason })?;
        upper.push(polish_root(degree, lambda, root));
    }

    let mut nodes = Vec::with_capacity(degree);
    nodes.extend(upper.iter().map(|&z| -z));
    if degree % 2 == 1 {
        nodes.push(0.0);
    }
    nodes.extend(upper.iter().rev().copied());

    for (i, pair) in nodes.windows(2).enumerate() {
        if pair[1] - pair[0] <= 0.0 {
            return Err(FgpsError::NumericalFailure {
                index: i + 1,
                reason: "refined zeros are not strictly increasing".into(),
            });
        }
    }
    Ok(nodes)
}

/// Moves a converged zero to the neighbouring float with the smallest residual.
fn polish_root(degree: usize, lambda: f64, x: f64) -> f64 {
    let residual = |y: f64| orthonormal_with_derivative(degree, lambda, y).0.abs();
    let mut best = x;
    let mut best_r = residual(x);
    for _ in 0..8 {
        let (down, up) = (best.next_down(), best.next_up());
        let (rd, ru) = (residual(down), residual(up));
        if rd < best_r && rd <= ru {
            (best, best_r) = (down, rd);
        } else if ru < best_r {
            (best, best_r) = (up, ru);
        } else {
            break;
        }
    }
    best
}

fn refine_root(
    degree: usize,
    lambda: f64,
    guess: f64,
    lo: f64,
    hi: f64,
) -> std::result::Result<f64, String> {
    let value = |x: f64| orthonormal_with_derivative(degree, lambda, x).0;
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (value(a), value(b));
    let bracketed = fa * fb < 0.0;
    let mut fa_sign = fa.signum();

    let mut x = guess;
    for _ in 0..NEWTON_MAX_ITER {
        let (p, dp) = orthonormal_with_derivative(degree, lambda, x);
        if p == 0.0 {
            return Ok(x);
        }
        if bracketed {
            if p.signum() == fa_sign {
                a = x;
                fa_sign = p.signum();
            } else {
                b = x;
            }
        }
        let mut next = x - p / dp;
        if !next.is_finite() || (bracketed && (next <= a.min(b) || next >= a.max(b))) {
            if !bracketed {
                return Err(format!("Newton step diverged from {x}"));
            }
            next = 0.5 * (a + b);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * x.abs().max(1e-3) {
            return Ok(x);
        }
    }
    Err(format!(
        "no convergence after {NEWTON_MAX_ITER} iterations (last iterate {x})"
    ))
}

/// Weights `w_j` with `Σ_j w_j p(y_j) = ∫₀¹ p(y) dy` for all polynomials of
/// degree below the node count, for an arbitrary set of distinct nodes in `(0, 1)`.
///
/// The cardinal polynomials are expanded in orthonormal shifted Legendre
/// polynomials; the moment system `Vᵀ w = e₀` is solved by LU.
pub fn plain_integral_weights(nodes: &[f64]) -> Result<Vec<f64>> {
    if nodes.is_empty() {
        return Err(FgpsError::InvalidInput("empty node list".into()));
    }
    if let Some(&bad) = nodes.iter().find(|y| !(**y > 0.0 && **y < 1.0)) {
        return Err(FgpsError::InvalidInput(format!(
            "node {bad} lies outside (0, 1)"
        )));
    }
    let mut sorted = nodes.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[1] - w[0] < MIN_NODE_SPACING) {
        return Err(FgpsError::InvalidInput(
            "nodes are nearly coincident (spacing below 1e-14)".into(),
        ));
    }

    let n = nodes.len();
    // Row k holds q_k(y_j), so the matrix is already Vᵀ.
    let mut vt = DMatrix::<f64>::zeros(n, n);
    for (j, &y) in nodes.iter().enumerate() {
        let x = 2.0 * y - 1.0;
        let (mut prev, mut curr) = (0.0, 1.0);
        for k in 0..n {
            vt[(k, j)] = curr * (2.0 * k as f64 + 1.0).sqrt();
            let kf = k as f64;
            let next = ((2.0 * kf + 1.0) * x * curr - kf * prev) / (kf + 1.0);
            prev = curr;
            curr = next;
        }
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[0] = 1.0;
    let weights = vt
        .lu()
        .solve(&rhs)
        .ok_or_else(|| FgpsError::InvalidInput("node moment system is singular".into()))?;
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(FgpsError::InvalidInput(
            "node moment system produced non-finite weights".into(),
        ));
    }
    Ok(weights.iter().copied().collect())
}

/// Plain `[0, 1]` weights for Gegenbauer–Gauss nodes via the Christoffel–Darboux
/// form of the cardinal polynomials: `ℓ_j(x) = ϖ_j Σ_k p_k(x_j) p_k(x)`.
fn christoffel_plain_weights(nodes: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n_g = nodes.len() - 1;

    // Unweighted moments ∫_{-1}^{1} p_k dx from a Gauss–Legendre rule exact to degree n_g.
    let legendre_count = n_g / 2 + 1;
    let legendre_nodes = gg_nodes(legendre_count - 1, 0.5)?;
    let mut moments = vec![0.0; n_g + 1];
    for &xi in &legendre_nodes {
        let mut norm = 0.0;
        for_each_orthonormal(legendre_count - 1, 0.5, xi, |_, p| norm += p * p);
        let weight = 2.0 / norm;
        for_each_orthonormal(n_g, lambda, xi, |k, p| moments[k] += weight * p);
    }

    let weights = nodes
        .iter()
        .map(|&x| {
            let (mut norm, mut proj) = (0.0, 0.0);
            for_each_orthonormal(n_g, lambda, x, |k, p| {
                norm += p * p;
                proj += p * moments[k];
            });
            0.5 * proj / norm
        })
        .collect();
    Ok(weights)
}

/// Shifted Gegenbauer–Gauss quadrature for `∫₀¹ g(y) dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    lambda: f64,
    n_g: usize,
    nodes: Vec<f64>,
    shifted_nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds the rule with `n_g + 1` nodes for Gegenbauer index `lambda`.
    pub fn new(n_g: usize, lambda: f64) -> Result<Self> {
        let nodes = gg_nodes(n_g, lambda)?;
        let shifted_nodes: Vec<f64> = nodes.iter().map(|z| (z + 1.0) / 2.0).collect();
        let weights = christoffel_plain_weights(&nodes, lambda)?;
        Ok(Self {
            lambda,
            n_g,
            nodes,
            shifted_nodes,
            weights,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_g(&self) -> usize {
        self.n_g
    }

    /// Zeros on `(-1, 1)`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Zeros mapped to `(0, 1)`.
    pub fn shifted_nodes(&self) -> &[f64] {
        &self.shifted_nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ_j w_j · samples[j]`, where `samples[j] = g(ŷ_j)`.
    pub fn integrate_unit(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.weights.len() {
            return Err(FgpsError::InvalidInput(format!(
                "expected {} samples, got {}",
                self.weights.len(),
                samples.len()
            )));
        }
        Ok(self.weights.iter().zip(samples).map(|(w, s)| w * s).sum())
    }

    /// Applies the rule to a function evaluated at the shifted nodes.
    pub fn integrate_fn(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.shifted_nodes
            .iter()
            .zip(&self.weights)
            .map(|(&y, w)| w * g(y))
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "lambda,n_g")?;
        writeln!(out, "{},{}", fmt17(self.lambda), self.n_g)?;
        for ((z, y), w) in self.nodes.iter().zip(&self.shifted_nodes).zip(&self.weights) {
            writeln!(out, "{},{},{}", fmt17(*z), fmt17(*y), fmt17(*w))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let lines = read_nonempty_lines(input)?;
        let mut it = lines.iter();
        match it.next() {
            Some(h) if h.trim() == "lambda,n_g" => {}
            other => {
                return Err(FgpsError::Format(format!(
                    "expected header `lambda,n_g`, found {other:?}"
                )))
            }
        }
        let params = it
            .next()
            .ok_or_else(|| FgpsError::Format("missing parameter row".into()))?;
        let fields: Vec<&str> = params.split(',').collect();
        if fields.len() != 2 {
            return Err(FgpsError::Format(format!("bad parameter row `{params}`")));
        }
        let lambda = parse_f64(fields[0])?;
        let n_g: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| FgpsError::Format(format!("bad n_g `{}`", fields[1])))?;
        check_lambda(lambda).map_err(|e| FgpsError::Format(e.to_string()))?;

        let (mut nodes, mut shifted_nodes, mut weights) = (vec![], vec![], vec![]);
        for row in it {
            let cols: Vec<&str> = row.split(',').collect();
            if cols.len() != 3 {
                return Err(FgpsError::Format(format!("bad node row `{row}`")));
            }
            nodes.push(parse_f64(cols[0])?);
            shifted_nodes.push(parse_f64(cols[1])?);
            weights.push(parse_f64(cols[2])?);
        }
        if nodes.len() != n_g + 1 {
            return Err(FgpsError::Format(format!(
                "expected {} node rows, found {}",
                n_g + 1,
                nodes.len()
            )));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FgpsError::Format("nodes are not strictly increasing".into()));
        }
        Ok(Self {
            lambda,
            n_g,
            nodes,
            shifted_nodes,
            weights,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomically(path, |w| self.write_csv(w))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}
