//! Run configuration: a flat `key = value` file overlaid by command-line flags.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use fgps_core::gegenbauer::MIN_LAMBDA;
use fgps_core::problems::{self, ProblemSpec, DEFAULT_MEMORY_LEN};
use fgps_core::SolverParams;

/// Every field may come from the config file or a flag; flags win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub problem: Option<String>,
    pub n1: Option<String>,
    pub n2: Option<String>,
    pub n_g: Option<String>,
    pub lambda: Option<String>,
    pub memory_len: Option<String>,
    pub alpha: Option<String>,
    pub beta: Option<String>,
    pub eval_grid: Option<String>,
    pub out: Option<String>,
    pub cache_dir: Option<String>,
}

const KEYS: [&str; 11] = [
    "problem", "n1", "n2", "n_g", "lambda", "L", "alpha", "beta", "eval_grid", "out", "cache_dir",
];

impl Overrides {
    fn slot(&mut self, key: &str) -> Option<&mut Option<String>> {
        Some(match key {
            "problem" => &mut self.problem,
            "n1" => &mut self.n1,
            "n2" => &mut self.n2,
            "n_g" | "ng" => &mut self.n_g,
            "lambda" => &mut self.lambda,
            "L" | "memory_len" => &mut self.memory_len,
            "alpha" => &mut self.alpha,
            "beta" => &mut self.beta,
            "eval_grid" => &mut self.eval_grid,
            "out" => &mut self.out,
            "cache_dir" => &mut self.cache_dir,
            _ => return None,
        })
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_file_text(text: &str) -> Result<Self, ConfigErrors> {
        let mut cfg = Self::default();
        let mut errors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(FieldError::new("config", format!("line {}: expected key = value", i + 1)));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            match cfg.slot(key) {
                Some(slot) => *slot = Some(value.to_string()),
                None => errors.push(FieldError::new(
                    "config",
                    format!("line {}: unknown key `{key}` (expected one of {})", i + 1, KEYS.join(", ")),
                )),
            }
        }
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigErrors(errors))
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigErrors> {
        let text = fs::read_to_string(path).map_err(|e| {
            ConfigErrors(vec![FieldError::new("config", format!("{}: {e}", path.display()))])
        })?;
        Self::parse_file_text(&text)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: Overrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(problem, n1, n2, n_g, lambda, memory_len, alpha, beta, eval_grid, out, cache_dir);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: &'static str,
    pub reason: String,
}

impl FieldError {
    fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

/// All problems found while validating a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<FieldError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self
            .0
            .iter()
            .map(|e| format!("invalid {}: {}", e.field, e.reason))
            .collect();
        write!(f, "{}", lines.join("\n"))
    }
}

impl std::error::Error for ConfigErrors {}

/// Parses a real number, also accepting multiples of π such as `pi`, `2pi`
/// or `2pi/3`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim().parse::<f64>().ok()?)),
        None => (s, None),
    };
    let coeff = num.strip_suffix("pi")?.trim().trim_end_matches('*').trim();
    let coeff = if coeff.is_empty() { 1.0 } else { coeff.parse::<f64>().ok()? };
    let v = coeff * PI;
    Some(match den {
        Some(d) => v / d,
        None => v,
    })
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem_id: u8,
    pub n1: usize,
    pub n2: usize,
    pub n_g: usize,
    pub lambda: f64,
    pub memory_len: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eval_grid: usize,
    pub output_path: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

struct Validator {
    errors: Vec<FieldError>,
}

impl Validator {
    fn int(&mut self, field: &'static str, raw: Option<&str>, default: usize) -> Option<usize> {
        match raw {
            None => Some(default),
            Some(s) => match s.trim().parse::<usize>() {
                Ok(v) => Some(v),
                Err(_) => {
                    self.errors.push(FieldError::new(field, format!("`{s}` is not a non-negative integer")));
                    None
                }
            },
        }
    }

    fn real(&mut self, field: &'static str, raw: Option<&str>) -> Option<Option<f64>> {
        match raw {
            None => Some(None),
            Some(s) => match parse_real(s).filter(|v| v.is_finite()) {
                Some(v) => Some(Some(v)),
                None => {
                    self.errors.push(FieldError::new(field, format!("`{s}` is not a finite number")));
                    None
                }
            },
        }
    }

    fn check(&mut self, ok: bool, field: &'static str, reason: impl FnOnce() -> String) {
        if !ok {
            self.errors.push(FieldError::new(field, reason()));
        }
    }
}

impl RunConfig {
    /// Validates every field, reporting all problems at once.
    pub fn from_overrides(o: &Overrides) -> Result<Self, ConfigErrors> {
        let mut v = Validator { errors: Vec::new() };
        let problem = v.int("problem", o.problem.as_deref(), 1);
        let n1 = v.int("n1", o.n1.as_deref(), 4);
        let n2 = v.int("n2", o.n2.as_deref(), 4);
        let n_g = v.int("n_g", o.n_g.as_deref(), 1000);
        let eval_grid = v.int("eval_grid", o.eval_grid.as_deref(), 100);
        let lambda = v.real("lambda", o.lambda.as_deref());
        let memory_len = v.real("L", o.memory_len.as_deref());
        let alpha = v.real("alpha", o.alpha.as_deref());
        let beta = v.real("beta", o.beta.as_deref());

        if let Some(p) = problem {
            v.check((1..=4).contains(&p), "problem", || format!("must be 1, 2, 3 or 4 (got {p})"));
        }
        for (field, n) in [("n1", n1), ("n2", n2)] {
            if let Some(n) = n {
                v.check(n >= 4 && n % 2 == 0, field, || format!("must be even and at least 4 (got {n})"));
            }
        }
        if let Some(n) = n_g {
            v.check(n >= 1, "n_g", || "must be at least 1".into());
        }
        if let Some(m) = eval_grid {
            v.check(m >= 2, "eval_grid", || format!("must be at least 2 (got {m})"));
        }
        let lambda = lambda.map(|l| l.unwrap_or(0.0));
        if let Some(l) = lambda {
            v.check(l > MIN_LAMBDA, "lambda", || format!("must exceed -1/2 (got {l})"));
        }
        let memory_len = memory_len.map(|l| l.unwrap_or(DEFAULT_MEMORY_LEN));
        if let Some(l) = memory_len {
            v.check(l > 0.0, "L", || format!("must be positive (got {l})"));
        }

        let mut orders = (None, None);
        if let (Some(p), Some(a), Some(b)) = (problem.filter(|p| (1..=4).contains(p)), alpha, beta) {
            let fixed = problems::fixed_orders(p as u8);
            for (field, given, fixed) in [("alpha", a, fixed.map(|f| f.0)), ("beta", b, fixed.map(|f| f.1))] {
                match (given, fixed) {
                    (Some(g), _) if !(g > 0.0 && g <= 1.0) => {
                        v.check(false, field, || format!("order must lie in (0, 1] (got {g})"))
                    }
                    (Some(g), Some(f)) => v.check((g - f).abs() <= 1e-12, field, || {
                        format!("problem {p} fixes {field} = {f} (got {g})")
                    }),
                    (None, None) => v.check(false, field, || {
                        format!("problem {p} needs an explicit {field} in (0, 1]")
                    }),
                    _ => {}
                }
            }
            orders = (a.or(fixed.map(|f| f.0)), b.or(fixed.map(|f| f.1)));
        }

        if !v.errors.is_empty() {
            return Err(ConfigErrors(v.errors));
        }
        Ok(Self {
            problem_id: problem.unwrap() as u8,
            n1: n1.unwrap(),
            n2: n2.unwrap(),
            n_g: n_g.unwrap(),
            lambda: lambda.unwrap(),
            memory_len: memory_len.unwrap(),
            alpha: orders.0.unwrap(),
            beta: orders.1.unwrap(),
            eval_grid: eval_grid.unwrap(),
            output_path: o.out.as_ref().map(PathBuf::from),
            cache_dir: o.cache_dir.as_ref().map(PathBuf::from),
        })
    }

    pub fn params(&self) -> SolverParams {
        SolverParams {
            n1: self.n1,
            n2: self.n2,
            n_g: self.n_g,
            lambda: self.lambda,
        }
    }

    pub fn problem(&self) -> fgps_core::Result<ProblemSpec> {
        problems::catalog(self.problem_id, Some((self.alpha, self.beta)))?.with_memory_len(self.memory_len)
    }

    /// The convergence hypothesis `L > 1 − γ` fails for the smaller order.
    pub fn memory_too_short(&self) -> bool {
        self.memory_len <= 1.0 - self.alpha.min(self.beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with(f: impl FnOnce(&mut Overrides)) -> Overrides {
        let mut o = Overrides::default();
        f(&mut o);
        o
    }

    #[test]
    fn defaults_are_reference_run() {
        let c = RunConfig::from_overrides(&Overrides::default()).unwrap();
        assert_eq!((c.problem_id, c.n1, c.n2, c.n_g), (1, 4, 4, 1000));
        assert_eq!((c.lambda, c.memory_len, c.alpha, c.beta, c.eval_grid), (0.0, 30.0, 0.5, 0.5, 100));
    }

    #[test]
    fn file_parsing_and_overlay() {
        let file = Overrides::parse_file_text("# run\nproblem = 3\nn1=8\nL = 10 # short\n\nng = 64\n").unwrap();
        assert_eq!(file.problem.as_deref(), Some("3"));
        assert_eq!(file.n_g.as_deref(), Some("64"));
        let merged = file.overlay(with(|o| o.n1 = Some("6".into())));
        let c = RunConfig::from_overrides(&merged).unwrap();
        assert_eq!((c.problem_id, c.n1, c.n_g, c.memory_len), (3, 6, 64, 10.0));
        assert_eq!((c.alpha, c.beta), (0.7, 0.8));
    }

    #[test]
    fn file_errors_are_reported() {
        let e = Overrides::parse_file_text("problem 3\nfoo = 1\n").unwrap_err();
        assert_eq!(e.0.len(), 2);
    }

    #[test]
    fn every_bad_field_is_named() {
        let o = with(|o| {
            o.n1 = Some("5".into());
            o.n2 = Some("x".into());
            o.n_g = Some("0".into());
            o.lambda = Some("-0.5".into());
            o.memory_len = Some("-1".into());
            o.eval_grid = Some("1".into());
        });
        let e = RunConfig::from_overrides(&o).unwrap_err();
        let fields: Vec<&str> = e.0.iter().map(|f| f.field).collect();
        assert_eq!(fields, ["n2", "n1", "n_g", "eval_grid", "lambda", "L"]);
    }

    #[test]
    fn order_rules() {
        assert!(RunConfig::from_overrides(&with(|o| o.alpha = Some("0.4".into()))).is_err());
        assert!(RunConfig::from_overrides(&with(|o| o.alpha = Some("1".into()))).is_err());
        let p4 = |a: &str, b: Option<&str>| {
            RunConfig::from_overrides(&with(|o| {
                o.problem = Some("4".into());
                o.alpha = Some(a.into());
                o.beta = b.map(String::from);
            }))
        };
        assert!(p4("0.9", None).is_err());
        assert!(p4("1.2", Some("0.9")).is_err());
        assert!(p4("0", Some("0.9")).is_err());
        let c = p4("1", Some("0.9")).unwrap();
        assert_eq!((c.alpha, c.beta), (1.0, 0.9));
        assert!(RunConfig::from_overrides(&with(|o| o.problem = Some("7".into()))).is_err());
    }

    #[test]
    fn short_memory_is_flagged() {
        let c = RunConfig::from_overrides(&with(|o| o.memory_len = Some("0.4".into()))).unwrap();
        assert!(c.memory_too_short());
        assert!(!RunConfig::from_overrides(&Overrides::default()).unwrap().memory_too_short());
    }

    #[test]
    fn pi_multiples() {
        assert_eq!(parse_real("2pi/3"), Some(2.0 * PI / 3.0));
        assert_eq!(parse_real("pi"), Some(PI));
        assert_eq!(parse_real("2*pi"), Some(2.0 * PI));
        assert_eq!(parse_real("1.5"), Some(1.5));
        assert_eq!(parse_real("pie"), None);
    }
}
