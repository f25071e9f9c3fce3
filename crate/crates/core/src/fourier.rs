//! Equispaced periodic grids and trigonometric Lagrange (cardinal) functions.

use std::f64::consts::PI;

use crate::error::{invalid, FgpsError, Result};

/// Below this `|sin ν|` the cardinal function is evaluated by its Taylor series.
const VALUE_SERIES_THRESHOLD: f64 = 1e-7;
/// Below this `|sin ν|` the cardinal derivative is evaluated by the finite
/// trigonometric sum; the sin·cot form loses digits to cancellation there.
const DERIV_SUM_THRESHOLD: f64 = 0.05;

/// `N` equispaced nodes `t_j = T j / N` on `[0, T)`, with `N` even.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    period: f64,
    n: usize,
}

impl PeriodicGrid {
    pub fn new(period: f64, n: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(invalid("period", format!("must be positive (got {period})")));
        }
        if n == 0 || !n.is_multiple_of(2) {
            return Err(invalid("n", format!("must be a positive even integer (got {n})")));
        }
        Ok(Self { period, n })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn node(&self, j: usize) -> f64 {
        self.period * j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// `ν = π (x − x_l) / T` reduced into `[−π/2, π/2]`. Every quantity below is
    /// π-periodic in ν because `N` is even.
    fn reduced_phase(&self, l: usize, x: f64) -> f64 {
        let nu = PI * (x - self.node(l)) / self.period;
        nu - PI * (nu / PI).round()
    }

    /// Cardinal function `F_l(x) = sin(Nν) cot(ν) / N`.
    pub fn cardinal_eval(&self, l: usize, x: f64) -> f64 {
        let eps = self.reduced_phase(l, x);
        let n = self.n as f64;
        if eps.sin().abs() < VALUE_SERIES_THRESHOLD {
            let e2 = eps * eps;
            let n2 = n * n;
            return 1.0 - (n2 + 2.0) * e2 / 6.0
                + (n2 * n2 / 120.0 + n2 / 18.0 - 1.0 / 45.0) * e2 * e2;
        }
        (n * eps).sin() / (n * eps.tan())
    }

    /// Derivative `F′_l(x)`.
    pub fn cardinal_deriv(&self, l: usize, x: f64) -> f64 {
        let eps = self.reduced_phase(l, x);
        let n = self.n as f64;
        let s = eps.sin();
        if s.abs() < DERIV_SUM_THRESHOLD {
            // F′ = −(2π/(N T)) [2 Σ_{k<N/2} k sin(2kε) + (N/2) sin(Nε)]
            let half = self.n / 2;
            let mut acc = 0.5 * n * (n * eps).sin();
            for k in 1..half {
                let kf = k as f64;
                acc += 2.0 * kf * (2.0 * kf * eps).sin();
            }
            return -2.0 * PI / (n * self.period) * acc;
        }
        let scale = PI / (n * self.period);
        scale * (n * (n * eps).cos() * eps.cos() / s - (n * eps).sin() / (s * s))
    }

    /// All cardinal values `F_0(x), …, F_{N−1}(x)`.
    pub fn cardinal_row(&self, x: f64) -> Vec<f64> {
        (0..self.n).map(|l| self.cardinal_eval(l, x)).collect()
    }

    /// Trigonometric interpolant `Σ_l samples[l] F_l(x)`.
    pub fn interpolate_1d(&self, samples: &[f64], x: f64) -> Result<f64> {
        if samples.len() != self.n {
            return Err(FgpsError::InvalidInput(format!(
                "expected {} samples, got {}",
                self.n,
                samples.len()
            )));
        }
        Ok(samples
            .iter()
            .enumerate()
            .map(|(l, s)| s * self.cardinal_eval(l, x))
            .sum())
    }
}

/// Values `u_{l,j}` on the tensor grid of an x-grid and a t-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction2D {
    grid_x: PeriodicGrid,
    grid_t: PeriodicGrid,
    /// Row-major: index `l * N₂ + j`.
    values: Vec<f64>,
}

impl GridFunction2D {
    pub fn new(grid_x: PeriodicGrid, grid_t: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid_x.len() * grid_t.len() {
            return Err(FgpsError::InvalidInput(format!(
                "grid function needs {}x{} values, got {}",
                grid_x.len(),
                grid_t.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid_x,
            grid_t,
            values,
        })
    }

    pub fn from_fn(grid_x: PeriodicGrid, grid_t: PeriodicGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid_x.len() * grid_t.len());
        for l in 0..grid_x.len() {
            for j in 0..grid_t.len() {
                values.push(f(grid_x.node(l), grid_t.node(j)));
            }
        }
        Self {
            grid_x,
            grid_t,
            values,
        }
    }

    pub fn grid_x(&self) -> &PeriodicGrid {
        &self.grid_x
    }

    pub fn grid_t(&self) -> &PeriodicGrid {
        &self.grid_t
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, l: usize, j: usize) -> f64 {
        self.values[l * self.grid_t.len() + j]
    }

    pub fn set(&mut self, l: usize, j: usize, v: f64) {
        let n2 = self.grid_t.len();
        self.values[l * n2 + j] = v;
    }

    /// Tensor-product interpolant `Σ_l Σ_j u_{l,j} F_l(x) F_j(t)`.
    pub fn tensor_interpolate(&self, x: f64, t: f64) -> f64 {
        let cx = self.grid_x.cardinal_row(x);
        let ct = self.grid_t.cardinal_row(t);
        self.contract(&cx, &ct)
    }

    fn contract(&self, cx: &[f64], ct: &[f64]) -> f64 {
        let n2 = ct.len();
        cx.iter()
            .enumerate()
            .map(|(l, wx)| {
                let row = &self.values[l * n2..(l + 1) * n2];
                wx * row.iter().zip(ct).map(|(u, wt)| u * wt).sum::<f64>()
            })
            .sum()
    }

    /// Interpolant on the tensor grid `xs × ts`, row-major by `x`.
    pub fn interpolate_on(&self, xs: &[f64], ts: &[f64]) -> Vec<f64> {
        let cts: Vec<Vec<f64>> = ts.iter().map(|&t| self.grid_t.cardinal_row(t)).collect();
        let mut out = Vec::with_capacity(xs.len() * ts.len());
        for &x in xs {
            let cx = self.grid_x.cardinal_row(x);
            out.extend(cts.iter().map(|ct| self.contract(&cx, ct)));
        }
        out
    }
}
