//! Subcommand implementations.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fgps_core::frac_diff::{fd_oracle, FracDiffMatrix};
use fgps_core::gegenbauer::QuadratureRule;
use fgps_core::io::{fmt17, write_atomically};
use fgps_core::pipeline::{cache_file_name, run, SolveOutcome};
use fgps_core::problems::{deviation, eval_points, ExactSolution, ProblemSpec};
use fgps_core::PeriodicGrid;

use crate::config::{Overrides, RunConfig};

/// Agreement required between the operator matrix and the oracle.
pub const ORACLE_THRESHOLD: f64 = 1e-8;
const ORACLE_TOL: f64 = 1e-13;
const NEAR_UNIT_ORDER: f64 = 0.999;

fn warn_if_memory_short(cfg: &RunConfig) {
    if cfg.memory_too_short() {
        eprintln!(
            "warning: L = {} does not exceed 1 - min(alpha, beta) = {}; convergence is not guaranteed",
            cfg.memory_len,
            1.0 - cfg.alpha.min(cfg.beta)
        );
    }
}

fn solve_config(cfg: &RunConfig) -> Result<(ProblemSpec, SolveOutcome)> {
    let spec = cfg.problem()?;
    warn_if_memory_short(cfg);
    let outcome = run(&spec, &cfg.params(), cfg.cache_dir.as_deref())?;
    Ok((spec, outcome))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

/// Writes `x,t,u_exact,u_approx,abs_err` over the evaluation grid and returns
/// the max and RMS error when an exact solution is known.
fn write_results(path: &Path, spec: &ProblemSpec, outcome: &SolveOutcome, m: usize) -> Result<Option<(f64, f64)>> {
    let u = &outcome.solution.grid;
    let xs = eval_points(spec.period_x(), m);
    let ts = eval_points(spec.period_t(), m);
    let approx = u.interpolate_on(&xs, &ts);
    let exact = spec.exact();
    write_atomically(path, |w| {
        writeln!(w, "x,t,u_exact,u_approx,abs_err")?;
        for (i, &x) in xs.iter().enumerate() {
            for (k, &t) in ts.iter().enumerate() {
                let a = approx[i * m + k];
                let e = exact.map(|ex| (ex.u)(x, t));
                let err = e.map(|e| (a - e).abs());
                writeln!(w, "{},{},{},{},{}", fmt17(x), fmt17(t), fmt_opt(e), fmt17(a), fmt_opt(err))?;
            }
        }
        Ok(())
    })
    .with_context(|| format!("writing {}", path.display()))?;
    exact.map(|ex| deviation(ex, u, m)).transpose().map_err(Into::into)
}

fn dump_system(dir: &Path, outcome: &SolveOutcome) -> Result<()> {
    let a = dir.join("A.csv");
    let f = dir.join("F.csv");
    write_atomically(&a, |w| outcome.system.write_matrix_csv(w)).with_context(|| format!("writing {}", a.display()))?;
    write_atomically(&f, |w| outcome.system.write_rhs_csv(w)).with_context(|| format!("writing {}", f.display()))?;
    Ok(())
}

pub fn solve(cfg: &RunConfig, dump_dir: Option<&Path>) -> Result<()> {
    let out = cfg.output_path.clone().unwrap_or_else(|| PathBuf::from("results.csv"));
    let (spec, outcome) = solve_config(cfg)?;
    let errors = write_results(&out, &spec, &outcome, cfg.eval_grid)?;
    if let Some(dir) = dump_dir {
        dump_system(dir, &outcome)?;
    }
    let (max_err, rms_err) = match errors {
        Some((max, rms)) => (fmt17(max), fmt17(rms)),
        None => ("n/a".to_string(), "n/a".to_string()),
    };
    println!(
        "max_err={max_err} rms_err={rms_err} kappa={} elapsed_ms={}",
        fmt17(outcome.kappa),
        fmt17(outcome.elapsed.as_secs_f64() * 1e3)
    );
    Ok(())
}

pub struct FdmArgs {
    pub n: usize,
    pub period: f64,
    pub gamma: f64,
    pub memory_len: f64,
    pub n_g: usize,
    pub lambda: f64,
}

/// Builds one operator matrix and writes it to `out`, or into `cache_dir`
/// under the name a solve with the same parameters looks for.
pub fn fdm(args: &FdmArgs, out: Option<&Path>, cache_dir: Option<&Path>) -> Result<PathBuf> {
    let grid = PeriodicGrid::new(args.period, args.n)?;
    let rule = QuadratureRule::new(args.n_g, args.lambda)?;
    if args.memory_len <= 1.0 - args.gamma {
        eprintln!(
            "warning: L = {} does not exceed 1 - gamma = {}; convergence is not guaranteed",
            args.memory_len,
            1.0 - args.gamma
        );
    }
    let path = match (out, cache_dir) {
        (Some(p), None) => p.to_path_buf(),
        (None, Some(dir)) => dir.join(cache_file_name(&grid, args.gamma, args.memory_len, args.lambda, args.n_g)),
        _ => bail!("give exactly one of --out or --cache-dir"),
    };
    let m = FracDiffMatrix::build(&grid, &rule, args.gamma, args.memory_len)?;
    m.save(&path).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {} ({} values)", path.display(), m.storage_len());
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    NG,
    N1N2,
    AlphaBeta,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::NG => "n_g",
            Sweep::N1N2 => "n1n2",
            Sweep::AlphaBeta => "alpha-beta",
        }
    }
}

fn parse_sweep_values(sweep: Sweep, raw: &[String]) -> Result<Vec<f64>> {
    let values: Vec<&str> = raw
        .iter()
        .flat_map(|s| s.split(','))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if values.is_empty() {
        bail!("invalid values: the sweep list is empty");
    }
    values
        .iter()
        .map(|s| {
            let v = crate::config::parse_real(s).filter(|v| v.is_finite());
            match (sweep, v) {
                (Sweep::AlphaBeta, Some(v)) => Ok(v),
                (_, Some(v)) if v >= 0.0 && v.fract() == 0.0 => Ok(v),
                _ => bail!("invalid values: `{s}` is not valid for a {} sweep", sweep.name()),
            }
        })
        .collect()
}

/// One solve per sweep value, written as `param,value,max_err,rms_err,kappa,elapsed_ms`.
/// The error is measured against the exact solution, or against the
/// problem's reference surface when no exact solution exists.
pub fn convergence(base: &Overrides, sweep: Sweep, raw_values: &[String]) -> Result<()> {
    let values = parse_sweep_values(sweep, raw_values)?;
    let mut configs = Vec::with_capacity(values.len());
    for &v in &values {
        let mut o = Overrides::default();
        let as_int = (v as usize).to_string();
        match sweep {
            Sweep::NG => o.n_g = Some(as_int),
            Sweep::N1N2 => {
                o.n1 = Some(as_int.clone());
                o.n2 = Some(as_int);
            }
            Sweep::AlphaBeta => {
                o.alpha = Some(v.to_string());
                o.beta = Some(v.to_string());
            }
        }
        configs.push(RunConfig::from_overrides(&base.clone().overlay(o))?);
    }
    if sweep == Sweep::AlphaBeta && configs[0].problem_id != 4 {
        bail!("invalid sweep: alpha-beta applies to problem 4 only");
    }

    let mut rows = Vec::with_capacity(values.len());
    for (cfg, v) in configs.iter().zip(&values) {
        let (spec, outcome) = solve_config(cfg)?;
        let target: &ExactSolution = spec
            .exact()
            .or(spec.reference())
            .with_context(|| format!("{} has no exact or reference solution", spec.name()))?;
        let (max, rms) = deviation(target, &outcome.solution.grid, cfg.eval_grid)?;
        let value = match sweep {
            Sweep::AlphaBeta => fmt17(*v),
            _ => (*v as usize).to_string(),
        };
        let row = format!(
            "{},{value},{},{},{},{}",
            sweep.name(),
            fmt17(max),
            fmt17(rms),
            fmt17(outcome.kappa),
            fmt17(outcome.elapsed.as_secs_f64() * 1e3)
        );
        println!("{row}");
        rows.push(row);
    }
    let out = configs[0].output_path.clone().unwrap_or_else(|| PathBuf::from("convergence.csv"));
    write_atomically(&out, |w| {
        writeln!(w, "param,value,max_err,rms_err,kappa,elapsed_ms")?;
        for r in &rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    })
    .with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

type TestFn = Box<dyn Fn(f64) -> f64>;

fn battery(period: f64, n: usize) -> Vec<(&'static str, TestFn, TestFn)> {
    let w = 2.0 * PI / period;
    let k = (n / 2 - 1).max(1) as f64;
    vec![
        ("constant", Box::new(|_| 1.0), Box::new(|_| 0.0)),
        ("sin", Box::new(move |x| (w * x).sin()), Box::new(move |x| w * (w * x).cos())),
        ("cos", Box::new(move |x| (w * x).cos()), Box::new(move |x| -w * (w * x).sin())),
        (
            "mixture",
            Box::new(move |x| (w * x).sin() + 0.5 * (k * w * x).cos()),
            Box::new(move |x| w * (w * x).cos() - 0.5 * k * w * (k * w * x).sin()),
        ),
    ]
}

fn max_discrepancy(d: &FracDiffMatrix, grid: &PeriodicGrid, f: &TestFn, df: &TestFn) -> Result<f64> {
    let samples: Vec<f64> = grid.nodes().into_iter().map(f).collect();
    let applied = d.apply(&samples)?;
    let mut worst = 0.0f64;
    for (r, x) in grid.nodes().into_iter().enumerate() {
        let reference = fd_oracle(df, d.gamma(), d.memory_len(), x, ORACLE_TOL)?;
        worst = worst.max((applied[r] - reference).abs());
    }
    Ok(worst)
}

/// Compares the operator matrix of order `alpha` on the x-grid against the
/// oracle; returns whether every battery entry passed.
pub fn oracle_check(cfg: &RunConfig) -> Result<bool> {
    let spec = cfg.problem()?;
    warn_if_memory_short(cfg);
    let grid = PeriodicGrid::new(spec.period_x(), cfg.n1)?;
    let rule = QuadratureRule::new(cfg.n_g, cfg.lambda)?;
    let d = FracDiffMatrix::build(&grid, &rule, cfg.alpha, cfg.memory_len)?;
    let mut all_pass = true;
    for (name, f, df) in battery(grid.period(), grid.len()) {
        match max_discrepancy(&d, &grid, &f, &df) {
            Ok(e) => {
                let pass = e <= ORACLE_THRESHOLD;
                all_pass &= pass;
                println!("{name:<9} gamma={} max_discrepancy={} {}", cfg.alpha, fmt17(e), if pass { "PASS" } else { "FAIL" });
            }
            Err(e) => {
                all_pass = false;
                println!("{name:<9} gamma={} FAIL ({e})", cfg.alpha);
            }
        }
    }
    let near = FracDiffMatrix::build(&grid, &rule, NEAR_UNIT_ORDER, cfg.memory_len)?;
    let (_, f, df) = battery(grid.period(), grid.len()).swap_remove(1);
    match max_discrepancy(&near, &grid, &f, &df) {
        Ok(e) => println!("sin       gamma={NEAR_UNIT_ORDER} max_discrepancy={} INFO", fmt17(e)),
        Err(e) => println!("sin       gamma={NEAR_UNIT_ORDER} INFO ({e})"),
    }
    println!(
        "oracle-check {} (threshold {ORACLE_THRESHOLD:e})",
        if all_pass { "PASS" } else { "FAIL" }
    );
    Ok(all_pass)
}
