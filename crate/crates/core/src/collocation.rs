//! Global collocation system: index map, assembly, direct solve and conditioning.
//!
//! Unknowns are the interior grid values `u_{l,j}`, `(l, j) ∈ 1..N₁ × 1..N₂`.
//! Row `𝒩(j, l)` couples the spatial line `𝒩(j, 1..N₁)` through `a·D^α` and the
//! temporal line `𝒩(1..N₂, l)` through `b·D^β`; boundary values `u_{0,j} = h(t_j)`
//! and `u_{l,0} = g(x_l)` move to the right-hand side.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, FgpsError, Result};
use crate::fourier::{GridFunction2D, PeriodicGrid};
use crate::frac_diff::FracDiffMatrix;
use crate::io::fmt17;
use crate::problems::ProblemSpec;

/// Largest tolerated mismatch between `g(0)` and `h(0)`.
pub const CORNER_TOL: f64 = 1e-10;

/// Affine map `𝒩(j, l) = (l − 1) + (N₁ − 1)(j − 1) + 1` from 1-based interior
/// coordinates to 1-based unknown numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    n1: usize,
    n2: usize,
    /// `(N₂ − 1) × (N₁ − 1)`, row-major by `j`.
    entries: Vec<usize>,
}

impl IndexMap {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        for (name, n) in [("n1", n1), ("n2", n2)] {
            if n < 4 || n % 2 != 0 {
                return Err(invalid(name, format!("must be even and at least 4 (got {n})")));
            }
        }
        let mut entries = Vec::with_capacity((n1 - 1) * (n2 - 1));
        for y in 0..n2 - 1 {
            for x in 0..n1 - 1 {
                entries.push(x + (n1 - 1) * y + 1);
            }
        }
        Ok(Self { n1, n2, entries })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Number of unknowns, `(N₁ − 1)(N₂ − 1)`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `𝒩(j, l)` for 1-based `j ∈ 1..N₂`, `l ∈ 1..N₁`.
    pub fn entry(&self, j: usize, l: usize) -> usize {
        self.entries[(j - 1) * (self.n1 - 1) + (l - 1)]
    }

    /// Zero-based unknown position of interior point `(l, j)`.
    pub fn position(&self, j: usize, l: usize) -> usize {
        self.entry(j, l) - 1
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.entries.chunks(self.n1 - 1).map(<[usize]>::to_vec).collect()
    }
}

/// Dense system `A U = F` plus the data needed to rebuild the full grid.
#[derive(Debug, Clone)]
pub struct CollocationSystem {
    a_matrix: DMatrix<f64>,
    f_vector: DVector<f64>,
    index_map: IndexMap,
    structural_nonzeros: usize,
    grid_x: PeriodicGrid,
    grid_t: PeriodicGrid,
    /// `g(x_l)` for `l = 0..N₁`.
    g_values: Vec<f64>,
    /// `h(t_j)` for `j = 0..N₂`.
    h_values: Vec<f64>,
}

fn check_operator(
    d: &FracDiffMatrix,
    which: &'static str,
    order: f64,
    period: f64,
    memory_len: f64,
) -> Result<()> {
    if d.gamma() != order {
        return Err(invalid(which, format!("built for order {} but problem needs {order}", d.gamma())));
    }
    if d.grid().period() != period {
        return Err(invalid(
            which,
            format!("built for period {} but problem needs {period}", d.grid().period()),
        ));
    }
    if order < 1.0 && d.memory_len() != memory_len {
        return Err(invalid(
            which,
            format!("built for L = {} but problem needs {memory_len}", d.memory_len()),
        ));
    }
    Ok(())
}

/// Assembles the collocation system for `problem` from the spatial operator
/// `d_alpha` (on the x-grid) and the temporal operator `d_beta` (on the t-grid).
pub fn assemble(
    problem: &ProblemSpec,
    d_alpha: &FracDiffMatrix,
    d_beta: &FracDiffMatrix,
) -> Result<CollocationSystem> {
    check_operator(d_alpha, "d_alpha", problem.alpha(), problem.period_x(), problem.memory_len())?;
    check_operator(d_beta, "d_beta", problem.beta(), problem.period_t(), problem.memory_len())?;
    let grid_x = *d_alpha.grid();
    let grid_t = *d_beta.grid();
    let (n1, n2) = (grid_x.len(), grid_t.len());
    let index_map = IndexMap::new(n1, n2)?;

    let g0 = problem.init_g(0.0);
    let h0 = problem.init_h(0.0);
    if (g0 - h0).abs() > CORNER_TOL || g0.is_nan() || h0.is_nan() {
        return Err(FgpsError::InconsistentInitialData { g0, h0 });
    }

    let g_values: Vec<f64> = grid_x.nodes().into_iter().map(|x| problem.init_g(x)).collect();
    let h_values: Vec<f64> = grid_t.nodes().into_iter().map(|t| problem.init_h(t)).collect();
    let source = problem.source_on_interior(&grid_x, &grid_t)?;

    let size = index_map.len();
    let mut a_matrix = DMatrix::<f64>::zeros(size, size);
    let mut f_vector = DVector::<f64>::zeros(size);
    for j in 1..n2 {
        let t = grid_t.node(j);
        for l in 1..n1 {
            let x = grid_x.node(l);
            let a = problem.coeff_a(x, t);
            let b = problem.coeff_b(x, t);
            let row = index_map.position(j, l);
            for k in (1..n1).filter(|&k| k != l) {
                a_matrix[(row, index_map.position(j, k))] = a * d_alpha.entry(l, k);
            }
            for k in (1..n2).filter(|&k| k != j) {
                a_matrix[(row, index_map.position(k, l))] = b * d_beta.entry(j, k);
            }
            a_matrix[(row, row)] = a * d_alpha.entry(l, l) + b * d_beta.entry(j, j);
            f_vector[row] = source[(j - 1) * (n1 - 1) + (l - 1)]
                - a * d_alpha.entry(l, 0) * h_values[j]
                - b * d_beta.entry(j, 0) * g_values[l];
        }
    }

    let structural_nonzeros = size * ((n1 - 1) + (n2 - 2));
    Ok(CollocationSystem {
        a_matrix,
        f_vector,
        index_map,
        structural_nonzeros,
        grid_x,
        grid_t,
        g_values,
        h_values,
    })
}

/// Result of a direct solve.
#[derive(Debug, Clone)]
pub struct CollocationSolution {
    /// Solution vector `U` in unknown order.
    pub unknowns: Vec<f64>,
    /// Full grid, with row 0 equal to `h` and column 0 equal to `g`.
    pub grid: GridFunction2D,
    /// `‖A U − F‖∞`.
    pub residual_inf: f64,
}

impl CollocationSystem {
    /// Builds a system from explicit parts; the structural pattern is not checked.
    pub fn from_parts(
        a_matrix: DMatrix<f64>,
        f_vector: DVector<f64>,
        grid_x: PeriodicGrid,
        grid_t: PeriodicGrid,
        g_values: Vec<f64>,
        h_values: Vec<f64>,
    ) -> Result<Self> {
        let index_map = IndexMap::new(grid_x.len(), grid_t.len())?;
        let size = index_map.len();
        if a_matrix.shape() != (size, size) || f_vector.len() != size {
            return Err(FgpsError::InvalidInput(format!(
                "system must be {size}x{size} with a {size}-vector"
            )));
        }
        if g_values.len() != grid_x.len() || h_values.len() != grid_t.len() {
            return Err(FgpsError::InvalidInput("boundary data length mismatch".into()));
        }
        let structural_nonzeros = size * ((grid_x.len() - 1) + (grid_t.len() - 2));
        Ok(Self {
            a_matrix,
            f_vector,
            index_map,
            structural_nonzeros,
            grid_x,
            grid_t,
            g_values,
            h_values,
        })
    }

    pub fn a_matrix(&self) -> &DMatrix<f64> {
        &self.a_matrix
    }

    pub fn f_vector(&self) -> &DVector<f64> {
        &self.f_vector
    }

    pub fn index_map(&self) -> &IndexMap {
        &self.index_map
    }

    /// Size of the Λ/Υ block pattern, `(N₁−1)(N₂−1)·((N₁−1) + (N₂−2))`.
    pub fn structural_nonzeros(&self) -> usize {
        self.structural_nonzeros
    }

    /// Whether `(row, col)` lies in the Λ/Υ block pattern.
    pub fn in_pattern(&self, row: usize, col: usize) -> bool {
        let m = self.grid_x.len() - 1;
        let (row_j, row_l) = (row / m, row % m);
        let (col_j, col_l) = (col / m, col % m);
        row_j == col_j || row_l == col_l
    }

    /// Solves by LU with partial pivoting.
    pub fn solve(&self) -> Result<CollocationSolution> {
        let size = self.index_map.len();
        let lu = self.a_matrix.clone().lu();
        let u = lu.u();
        let max_pivot = u.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let threshold = size as f64 * f64::EPSILON * max_pivot;
        if let Some(pivot) = u.diagonal().iter().position(|v| v.abs() <= threshold || v.is_nan()) {
            return Err(FgpsError::SingularSystem { pivot });
        }
        let unknowns = lu
            .solve(&self.f_vector)
            .ok_or(FgpsError::SingularSystem { pivot: size.saturating_sub(1) })?;
        let residual_inf = (&self.a_matrix * &unknowns - &self.f_vector).amax();

        let (n1, n2) = (self.grid_x.len(), self.grid_t.len());
        let mut values = vec![0.0; n1 * n2];
        for l in 0..n1 {
            values[l * n2] = self.g_values[l];
        }
        values[..n2].copy_from_slice(&self.h_values);
        for j in 1..n2 {
            for l in 1..n1 {
                values[l * n2 + j] = unknowns[self.index_map.position(j, l)];
            }
        }
        Ok(CollocationSolution {
            unknowns: unknowns.iter().copied().collect(),
            grid: GridFunction2D::new(self.grid_x, self.grid_t, values)?,
            residual_inf,
        })
    }

    /// 2-norm condition number `σ_max / σ_min`; infinite for a singular matrix.
    pub fn condition_number_2norm(&self) -> f64 {
        condition_number_2norm(&self.a_matrix)
    }

    /// Row-major dump of `A`.
    pub fn write_matrix_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for row in self.a_matrix.row_iter() {
            let cols: Vec<String> = row.iter().map(|v| fmt17(*v)).collect();
            writeln!(out, "{}", cols.join(","))?;
        }
        Ok(())
    }

    /// One value of `F` per line.
    pub fn write_rhs_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for v in self.f_vector.iter() {
            writeln!(out, "{}", fmt17(*v))?;
        }
        Ok(())
    }
}

/// 2-norm condition number of a square matrix from its singular values.
pub fn condition_number_2norm(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.iter().fold(0.0f64, |m, v| m.max(*v));
    let min = sv.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn index_map_small() {
        let m = IndexMap::new(4, 4).unwrap();
        assert_eq!(m.rows(), vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]);
        assert_eq!(m.entry(1, 1), 1);
        assert_eq!(*m.rows().iter().flatten().max().unwrap(), 9);
    }

    #[test]
    fn index_map_is_bijective() {
        for (n1, n2) in [(4, 6), (8, 4), (10, 12)] {
            let m = IndexMap::new(n1, n2).unwrap();
            let mut all: Vec<usize> = m.rows().into_iter().flatten().collect();
            all.sort_unstable();
            assert_eq!(all, (1..=(n1 - 1) * (n2 - 1)).collect::<Vec<_>>());
        }
    }

    #[test]
    fn index_map_rejects_bad_sizes() {
        assert!(IndexMap::new(5, 4).is_err());
        assert!(IndexMap::new(4, 2).is_err());
    }

    fn grid4() -> PeriodicGrid {
        PeriodicGrid::new(1.0, 4).unwrap()
    }

    #[test]
    fn identity_system_returns_rhs() {
        let f = DVector::from_vec((0..9).map(|i| i as f64 - 2.5).collect());
        let sys = CollocationSystem::from_parts(
            DMatrix::identity(9, 9),
            f.clone(),
            grid4(),
            grid4(),
            vec![0.0; 4],
            vec![0.0; 4],
        )
        .unwrap();
        let sol = sys.solve().unwrap();
        assert_eq!(sol.unknowns, f.iter().copied().collect::<Vec<_>>());
        assert_eq!(sys.condition_number_2norm(), 1.0);
    }

    #[test]
    fn random_system_residual() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let a = DMatrix::from_fn(9, 9, |i, j| {
            rng.random_range(-1.0..1.0) + if i == j { 4.0 } else { 0.0 }
        });
        let f = DVector::from_fn(9, |_, _| rng.random_range(-1.0..1.0));
        let sys = CollocationSystem::from_parts(
            a,
            f.clone(),
            grid4(),
            grid4(),
            vec![1.0; 4],
            vec![1.0; 4],
        )
        .unwrap();
        let sol = sys.solve().unwrap();
        assert!(sol.residual_inf <= 1e-10 * (1.0 + f.amax()));
    }

    #[test]
    fn singular_system_reports_pivot() {
        let mut a = DMatrix::<f64>::identity(9, 9);
        a[(4, 4)] = 0.0;
        let sys = CollocationSystem::from_parts(
            a,
            DVector::zeros(9),
            grid4(),
            grid4(),
            vec![0.0; 4],
            vec![0.0; 4],
        )
        .unwrap();
        assert_eq!(sys.solve().unwrap_err(), FgpsError::SingularSystem { pivot: 4 });
        assert!(sys.condition_number_2norm().is_infinite());
    }

    #[test]
    fn condition_number_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 10.0]));
        assert_abs_diff_eq!(condition_number_2norm(&a), 10.0, epsilon = 1e-13);
    }
}
