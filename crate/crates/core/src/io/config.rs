use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::solvers::SolverConfig;

/// Flat `key=value` run description: every [`SolverConfig`] field, the
/// problem source and output paths.
///
/// Blank lines and lines starting with `#` are ignored; unknown keys are
/// rejected. Keys that are absent keep their defaults.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub solver: SolverConfig,
    /// `solver` name as understood by the front end (`lsgn`, `fsgn`, ...).
    pub method: Option<String>,
    /// Generator name (`mc`, `sensing`, `clustered`, ...).
    pub generator: Option<String>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub r: Option<usize>,
    pub fraction: Option<f64>,
    pub sigma: Option<f64>,
    pub l_ratio: Option<f64>,
    pub input: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub trace_out: Option<PathBuf>,
    pub result_out: Option<PathBuf>,
}

pub fn read_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    fs::read_to_string(path)?.parse()
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Validation { key: key.into(), msg: format!("cannot parse `{raw}`") })
}

fn keyword<T: FromStr<Err = Error>>(key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|e: Error| Error::Validation { key: key.into(), msg: e.to_string() })
}

impl RunConfig {
    fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let s = &mut self.solver;
        match key {
            "max_iters" => s.max_iters = value(key, raw)?,
            "eps1" => s.eps1 = value(key, raw)?,
            "eps2" => s.eps2 = value(key, raw)?,
            "c1" => s.c1 = value(key, raw)?,
            "beta" => s.beta = value(key, raw)?,
            "alpha0" => s.alpha0 = value(key, raw)?,
            "rho" => s.rho = keyword(key, raw)?,
            "rho_adapt" => s.rho_adapt = value(key, raw)?,
            "option" => s.option = keyword(key, raw)?,
            "gamma_u" => s.gamma_u = value(key, raw)?,
            "gamma_v" => s.gamma_v = value(key, raw)?,
            "linesearch_cap" => s.linesearch_cap = value(key, raw)?,
            "armijo" => s.armijo = keyword(key, raw)?,
            "dual_step" => s.dual_step = keyword(key, raw)?,
            "zero_residual" => s.zero_residual = value(key, raw)?,
            "timing" => s.timing = value(key, raw)?,
            "seed" => s.seed = value(key, raw)?,
            "solver" => self.method = Some(raw.to_string()),
            "generator" => self.generator = Some(raw.to_string()),
            "m" => self.m = Some(value(key, raw)?),
            "n" => self.n = Some(value(key, raw)?),
            "r" => self.r = Some(value(key, raw)?),
            "fraction" => self.fraction = Some(value(key, raw)?),
            "sigma" => self.sigma = Some(value(key, raw)?),
            "l_ratio" => self.l_ratio = Some(value(key, raw)?),
            "input" => self.input = Some(raw.into()),
            "mask" => self.mask = Some(raw.into()),
            "trace_out" => self.trace_out = Some(raw.into()),
            "result_out" => self.result_out = Some(raw.into()),
            _ => return Err(Error::Validation { key: key.into(), msg: "unknown key".into() }),
        }
        Ok(())
    }

    /// Range checks on the solver block and the problem parameters.
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        let bad = |key: &str, msg: &str| Err(Error::Validation { key: key.into(), msg: msg.into() });
        for (key, v) in [("m", self.m), ("n", self.n), ("r", self.r)] {
            if v == Some(0) {
                return bad(key, "must be positive");
            }
        }
        if let Some(f) = self.fraction {
            if !(f > 0.0 && f <= 1.0) {
                return bad("fraction", "must lie in (0, 1]");
            }
        }
        if let Some(s) = self.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return bad("sigma", "must be nonnegative");
            }
        }
        if let Some(l) = self.l_ratio {
            if !(l > 0.0 && l.is_finite()) {
                return bad("l_ratio", "must be positive");
            }
        }
        Ok(())
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, raw)) = line.split_once('=') else {
                return Err(Error::Parse { line: idx + 1, msg: format!("expected key=value, found `{line}`") });
            };
            cfg.set(key.trim(), raw.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for RunConfig {
    /// Canonical form: every solver key, then the present optional keys.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.solver;
        let mut out = String::new();
        let _ = writeln!(out, "max_iters={}", s.max_iters);
        let _ = writeln!(out, "eps1={}", s.eps1);
        let _ = writeln!(out, "eps2={}", s.eps2);
        let _ = writeln!(out, "c1={}", s.c1);
        let _ = writeln!(out, "beta={}", s.beta);
        let _ = writeln!(out, "alpha0={}", s.alpha0);
        let _ = writeln!(out, "rho={}", s.rho);
        let _ = writeln!(out, "rho_adapt={}", s.rho_adapt);
        let _ = writeln!(out, "option={}", s.option);
        let _ = writeln!(out, "gamma_u={}", s.gamma_u);
        let _ = writeln!(out, "gamma_v={}", s.gamma_v);
        let _ = writeln!(out, "linesearch_cap={}", s.linesearch_cap);
        let _ = writeln!(out, "armijo={}", s.armijo);
        let _ = writeln!(out, "dual_step={}", s.dual_step);
        let _ = writeln!(out, "zero_residual={}", s.zero_residual);
        let _ = writeln!(out, "timing={}", s.timing);
        let _ = writeln!(out, "seed={}", s.seed);
        let opt = |out: &mut String, key: &str, v: Option<String>| {
            if let Some(v) = v {
                let _ = writeln!(out, "{key}={v}");
            }
        };
        opt(&mut out, "solver", self.method.clone());
        opt(&mut out, "generator", self.generator.clone());
        opt(&mut out, "m", self.m.map(|v| v.to_string()));
        opt(&mut out, "n", self.n.map(|v| v.to_string()));
        opt(&mut out, "r", self.r.map(|v| v.to_string()));
        opt(&mut out, "fraction", self.fraction.map(|v| v.to_string()));
        opt(&mut out, "sigma", self.sigma.map(|v| v.to_string()));
        opt(&mut out, "l_ratio", self.l_ratio.map(|v| v.to_string()));
        for (key, p) in [
            ("input", &self.input),
            ("mask", &self.mask),
            ("trace_out", &self.trace_out),
            ("result_out", &self.result_out),
        ] {
            opt(&mut out, key, p.as_ref().map(|p| p.display().to_string()));
        }
        f.write_str(&out)
    }
}
