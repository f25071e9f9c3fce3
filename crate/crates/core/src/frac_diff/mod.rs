//! Periodic fractional differentiation matrices.
//!
//! For a grid of `N` equispaced nodes, entry `(r, s)` of the matrix is
//!
//! ```text
//! D(r, s) = L^{1−γ}/Γ(2−γ) · ∫₀¹ F′_s(x_r − L y^{1/(1−γ)}) dy
//! ```
//!
//! with the integral replaced by a shifted Gegenbauer–Gauss quadrature. The
//! cardinal functions are translates of one another, so `D(r, s)` depends only
//! on `(r − s) mod N`: the matrix is circulant (hence Toeplitz) and is stored as
//! its first row and first column, `2N − 1` values in total.

pub mod oracle;

use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{invalid, FgpsError, Result};
use crate::fourier::PeriodicGrid;
use crate::gegenbauer::{check_lambda, QuadratureRule};
use crate::io::{fmt17, parse_f64, read_nonempty_lines};

pub use oracle::fd_oracle;

/// Header line of the matrix cache file.
pub const CACHE_HEADER: &str = "gamma,L,N,T,lambda,n_g";

/// `L^{1−γ} / Γ(2−γ)`.
pub fn derivative_scale(gamma: f64, memory_len: f64) -> f64 {
    memory_len.powf(1.0 - gamma) / gamma_fn(2.0 - gamma)
}

pub(crate) fn check_memory_len(memory_len: f64) -> Result<()> {
    if !(memory_len.is_finite() && memory_len > 0.0) {
        return Err(invalid("L", format!("memory length must be positive (got {memory_len})")));
    }
    Ok(())
}

fn check_fractional_order(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(
            "gamma",
            format!("fractional order must lie in (0, 1) (got {gamma})"),
        ));
    }
    Ok(())
}

/// Unscaled quadrature value for diagonal offset `d = (r − s) mod N`.
fn offset_quadrature(grid: &PeriodicGrid, rule: &QuadratureRule, power: f64, memory_len: f64, d: usize) -> f64 {
    let x = grid.node(d);
    rule.integrate_fn(|y| grid.cardinal_deriv(0, x - memory_len * y.powf(power)))
}

/// Quadrature approximation of `∫₀¹ F′_s(x_r − L y^{1/(1−γ)}) dy`.
pub fn fgpsq_entry(
    grid: &PeriodicGrid,
    rule: &QuadratureRule,
    gamma: f64,
    memory_len: f64,
    r: usize,
    s: usize,
) -> Result<f64> {
    check_fractional_order(gamma)?;
    check_memory_len(memory_len)?;
    let n = grid.len();
    if r >= n || s >= n {
        return Err(FgpsError::InvalidInput(format!(
            "entry ({r}, {s}) outside a {n}x{n} matrix"
        )));
    }
    let d = (r + n - s) % n;
    Ok(offset_quadrature(grid, rule, 1.0 / (1.0 - gamma), memory_len, d))
}

/// Toeplitz fractional differentiation matrix of order `gamma` with memory length `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct FracDiffMatrix {
    gamma: f64,
    memory_len: f64,
    grid: PeriodicGrid,
    lambda: f64,
    n_g: usize,
    scale: f64,
    first_row: Vec<f64>,
    first_col: Vec<f64>,
}

impl FracDiffMatrix {
    /// Builds the matrix for `gamma ∈ (0, 1]`.
    ///
    /// `gamma = 1` yields the classical Fourier first-derivative matrix
    /// `F′_s(x_r)` (the integer-order case of the operator); the quadrature
    /// rule is then unused.
    pub fn build(grid: &PeriodicGrid, rule: &QuadratureRule, gamma: f64, memory_len: f64) -> Result<Self> {
        check_memory_len(memory_len)?;
        let n = grid.len();
        let (scale, offsets): (f64, Vec<f64>) = if gamma == 1.0 {
            (1.0, (0..n).map(|d| grid.cardinal_deriv(0, grid.node(d))).collect())
        } else {
            check_fractional_order(gamma)?;
            if memory_len <= 1.0 - gamma {
                log::warn!(
                    "memory length L = {memory_len} does not exceed 1 - gamma = {}; \
                     the quadrature error bound does not apply",
                    1.0 - gamma
                );
            }
            let power = 1.0 / (1.0 - gamma);
            let offsets = (0..n)
                .into_par_iter()
                .map(|d| offset_quadrature(grid, rule, power, memory_len, d))
                .collect();
            (derivative_scale(gamma, memory_len), offsets)
        };

        let first_col: Vec<f64> = offsets.iter().map(|q| scale * q).collect();
        let first_row: Vec<f64> = (0..n).map(|k| first_col[(n - k) % n]).collect();
        Ok(Self {
            gamma,
            memory_len,
            grid: *grid,
            lambda: rule.lambda(),
            n_g: rule.n_g(),
            scale,
            first_row,
            first_col,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn memory_len(&self) -> f64 {
        self.memory_len
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_g(&self) -> usize {
        self.n_g
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn first_col(&self) -> &[f64] {
        &self.first_col
    }

    /// Number of stored values, `2N − 1`.
    pub fn storage_len(&self) -> usize {
        self.first_row.len() + self.first_col.len() - 1
    }

    /// Stored values: the first row followed by the first column without its
    /// leading (shared) entry.
    pub fn diagonals(&self) -> Vec<f64> {
        let mut v = self.first_row.clone();
        v.extend_from_slice(&self.first_col[1..]);
        v
    }

    pub fn entry(&self, r: usize, s: usize) -> f64 {
        if s >= r {
            self.first_row[s - r]
        } else {
            self.first_col[r - s]
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        (0..n).map(|r| (0..n).map(|s| self.entry(r, s)).collect()).collect()
    }

    /// Matrix-vector product using the Toeplitz reconstruction.
    pub fn apply(&self, samples: &[f64]) -> Result<Vec<f64>> {
        let n = self.size();
        if samples.len() != n {
            return Err(FgpsError::InvalidInput(format!(
                "expected {n} samples, got {}",
                samples.len()
            )));
        }
        Ok((0..n)
            .map(|r| samples.iter().enumerate().map(|(s, u)| self.entry(r, s) * u).sum())
            .collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CACHE_HEADER}")?;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt17(self.gamma),
            fmt17(self.memory_len),
            self.size(),
            fmt17(self.grid.period()),
            fmt17(self.lambda),
            self.n_g
        )?;
        let row: Vec<String> = self.diagonals().into_iter().map(fmt17).collect();
        writeln!(out, "{}", row.join(","))?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let lines = read_nonempty_lines(input)?;
        if lines.len() != 3 {
            return Err(FgpsError::Format(format!(
                "expected 3 lines (header, parameters, values), found {}",
                lines.len()
            )));
        }
        if lines[0].trim() != CACHE_HEADER {
            return Err(FgpsError::Format(format!(
                "expected header `{CACHE_HEADER}`, found `{}`",
                lines[0].trim()
            )));
        }
        let params: Vec<&str> = lines[1].split(',').collect();
        if params.len() != 6 {
            return Err(FgpsError::Format(format!("bad parameter row `{}`", lines[1])));
        }
        let gamma = parse_f64(params[0])?;
        let memory_len = parse_f64(params[1])?;
        let n: usize = params[2]
            .trim()
            .parse()
            .map_err(|_| FgpsError::Format(format!("bad N `{}`", params[2])))?;
        let period = parse_f64(params[3])?;
        let lambda = parse_f64(params[4])?;
        let n_g: usize = params[5]
            .trim()
            .parse()
            .map_err(|_| FgpsError::Format(format!("bad n_g `{}`", params[5])))?;

        let as_format = |e: FgpsError| FgpsError::Format(e.to_string());
        let grid = PeriodicGrid::new(period, n).map_err(as_format)?;
        check_memory_len(memory_len).map_err(as_format)?;
        check_lambda(lambda).map_err(as_format)?;
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(FgpsError::Format(format!("order {gamma} outside (0, 1]")));
        }

        let values = lines[2]
            .split(',')
            .map(parse_f64)
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != 2 * n - 1 {
            return Err(FgpsError::Format(format!(
                "expected {} diagonal values, found {}",
                2 * n - 1,
                values.len()
            )));
        }
        let first_row = values[..n].to_vec();
        let mut first_col = Vec::with_capacity(n);
        first_col.push(first_row[0]);
        first_col.extend_from_slice(&values[n..]);
        let scale = if gamma == 1.0 {
            1.0
        } else {
            derivative_scale(gamma, memory_len)
        };
        Ok(Self {
            gamma,
            memory_len,
            grid,
            lambda,
            n_g,
            scale,
            first_row,
            first_col,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomically(path, |w| self.write_csv(w))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    /// Whether this matrix was built for exactly these parameters.
    pub fn matches(&self, grid: &PeriodicGrid, gamma: f64, memory_len: f64, lambda: f64, n_g: usize) -> bool {
        self.grid == *grid
            && self.gamma == gamma
            && self.memory_len == memory_len
            && self.lambda == lambda
            && self.n_g == n_g
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::{adaptive_unit_integral, DEFAULT_TOL};
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn setup(n: usize, n_g: usize) -> (PeriodicGrid, QuadratureRule) {
        (
            PeriodicGrid::new(2.0 * PI, n).unwrap(),
            QuadratureRule::new(n_g, 0.0).unwrap(),
        )
    }

    #[test]
    fn entry_rows_sum_to_zero() {
        let (g, rule) = setup(8, 64);
        for r in 0..8 {
            let s: f64 = (0..8).map(|s| fgpsq_entry(&g, &rule, 0.3, 5.0, r, s).unwrap()).sum();
            assert!(s.abs() <= 1e-10, "row {r}: {s}");
        }
    }

    #[test]
    fn entry_is_shift_invariant() {
        let (g, rule) = setup(6, 40);
        for r in 0..5 {
            for s in 0..5 {
                assert_eq!(
                    fgpsq_entry(&g, &rule, 0.6, 30.0, r, s).unwrap(),
                    fgpsq_entry(&g, &rule, 0.6, 30.0, r + 1, s + 1).unwrap()
                );
            }
        }
    }

    #[test]
    fn entry_matches_adaptive_oracle() {
        let (g, rule) = setup(4, 200);
        let q = fgpsq_entry(&g, &rule, 0.5, 30.0, 0, 1).unwrap();
        let reference =
            adaptive_unit_integral(|y| g.cardinal_deriv(1, -30.0 * y * y), DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(q, reference, epsilon = 1e-8);
    }

    #[test]
    fn entry_rejects_bad_order_and_index() {
        let (g, rule) = setup(4, 8);
        assert!(fgpsq_entry(&g, &rule, 1.0, 30.0, 0, 0).is_err());
        assert!(fgpsq_entry(&g, &rule, 0.0, 30.0, 0, 0).is_err());
        assert!(fgpsq_entry(&g, &rule, 0.5, -1.0, 0, 0).is_err());
        assert!(fgpsq_entry(&g, &rule, 0.5, 30.0, 4, 0).is_err());
    }

    #[test]
    fn build_structure() {
        let (g, rule) = setup(4, 1000);
        let d = FracDiffMatrix::build(&g, &rule, 0.5, 30.0).unwrap();
        assert_eq!(d.storage_len(), 7);
        assert_eq!(d.diagonals().len(), 7);
        assert_eq!(d.first_row()[0], d.first_col()[0]);
        let zero = d.apply(&[1.0; 4]).unwrap();
        assert!(zero.iter().all(|v| v.abs() <= 1e-10));
        assert_abs_diff_eq!(d.scale(), 2.0 * (30.0 / PI).sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn build_sin_matches_oracle() {
        let (g, rule) = setup(4, 1000);
        let d = FracDiffMatrix::build(&g, &rule, 0.5, 30.0).unwrap();
        let samples: Vec<f64> = g.nodes().iter().map(|x| x.sin()).collect();
        let out = d.apply(&samples).unwrap();
        for (r, v) in out.iter().enumerate() {
            let reference = fd_oracle(f64::cos, 0.5, 30.0, g.node(r), DEFAULT_TOL).unwrap();
            assert_abs_diff_eq!(*v, reference, epsilon = 1e-9);
        }
    }

    #[test]
    fn apply_is_linear_and_checks_length() {
        let (g, rule) = setup(8, 100);
        let d = FracDiffMatrix::build(&g, &rule, 0.7, 3.0).unwrap();
        let u: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin()).collect();
        let v: Vec<f64> = (0..8).map(|i| (i as f64 * 1.3).cos() - 0.2).collect();
        let (a, b) = (1.7, -0.4);
        let combo: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let lhs = d.apply(&combo).unwrap();
        let du = d.apply(&u).unwrap();
        let dv = d.apply(&v).unwrap();
        let norm = lhs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..8 {
            assert!((lhs[i] - (a * du[i] + b * dv[i])).abs() <= 1e-12 * norm.max(1.0));
        }
        assert!(d.apply(&u[..7]).is_err());
    }

    #[test]
    fn order_one_is_fourier_derivative() {
        let (g, rule) = setup(8, 4);
        let d = FracDiffMatrix::build(&g, &rule, 1.0, 30.0).unwrap();
        let samples: Vec<f64> = g.nodes().iter().map(|x| (2.0 * x).sin()).collect();
        let out = d.apply(&samples).unwrap();
        for (r, v) in out.iter().enumerate() {
            assert_abs_diff_eq!(*v, 2.0 * (2.0 * g.node(r)).cos(), epsilon = 1e-13);
        }
    }

    #[test]
    fn build_warns_but_accepts_short_memory() {
        let (g, rule) = setup(4, 20);
        assert!(FracDiffMatrix::build(&g, &rule, 0.5, 0.25).is_ok());
        assert!(FracDiffMatrix::build(&g, &rule, 1.2, 30.0).is_err());
        assert!(FracDiffMatrix::build(&g, &rule, 0.5, 0.0).is_err());
    }

    #[test]
    fn cache_round_trip_and_rejections() {
        let (g, rule) = setup(4, 100);
        let d = FracDiffMatrix::build(&g, &rule, 0.5, 30.0).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = FracDiffMatrix::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, d);
        assert_eq!(text.lines().nth(2).unwrap().split(',').count(), 7);

        let bad = text.replacen("gamma,L", "gama,L", 1);
        assert!(matches!(FracDiffMatrix::read_csv(bad.as_bytes()), Err(FgpsError::Format(_))));
        let short: String = text.rsplit_once(',').unwrap().0.to_string();
        assert!(matches!(FracDiffMatrix::read_csv(short.as_bytes()), Err(FgpsError::Format(_))));
    }
}
