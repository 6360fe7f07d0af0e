use std::fmt;
use std::io::Write;
use std::time::Instant;

use super::StopRule;
use crate::error::Result;

/// Terminal state of a solve.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Converged(StopRule),
    MaxIters,
    RankDeficient,
    LinesearchExhausted,
    NonFinite,
}

impl Status {
    pub fn is_converged(&self) -> bool {
        matches!(self, Status::Converged(_))
    }

    /// Numerical breakdown rather than a budget or tolerance outcome.
    pub fn is_failure(&self) -> bool {
        matches!(self, Status::RankDeficient | Status::LinesearchExhausted | Status::NonFinite)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Converged(rule) => write!(f, "converged;rule={rule}"),
            Status::MaxIters => f.write_str("max_iters"),
            Status::RankDeficient => f.write_str("rank_deficient"),
            Status::LinesearchExhausted => f.write_str("linesearch_exhausted"),
            Status::NonFinite => f.write_str("non_finite"),
        }
    }
}

/// Extra quantities logged by the ADMM schemes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdmmRecord {
    pub rho: f64,
    /// `‖W_{k+1} − W_k‖`.
    pub w_step: f64,
    /// `‖Λ_{k+1} − Λ_k‖`.
    pub multiplier_step: f64,
    /// Surrogate `Q_k` at `(U_k, V_k)` and at `(U_{k+1}, V_{k+1})`.
    pub surrogate_before: f64,
    pub surrogate_after: f64,
    pub u_step: f64,
    pub v_step: f64,
}

/// State at iterate `k` and the step taken from it. The last record of a
/// trace describes the final iterate and carries `alpha = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub alpha: f64,
    pub linesearch: usize,
    pub feasibility: Option<f64>,
    pub lagrangian: Option<f64>,
    pub wall_ms: f64,
    /// `Δ²` used in the sufficient-decrease test of this step.
    pub descent: Option<f64>,
    pub admm: Option<AdmmRecord>,
}

impl IterationRecord {
    pub fn new(k: usize, objective: f64, grad_norm: f64) -> Self {
        Self {
            k,
            objective,
            grad_norm,
            alpha: 0.0,
            linesearch: 0,
            feasibility: None,
            lagrangian: None,
            wall_ms: 0.0,
            descent: None,
            admm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub status: Status,
}

pub const TRACE_HEADER: &str = "k,objective,grad_norm,alpha,linesearch,feasibility,lagrangian,wall_ms";

impl IterationTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("trace is never empty")
    }

    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.last().k
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for r in &self.records {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{},{},{},{:.3}",
                r.k,
                r.objective,
                r.grad_norm,
                r.alpha,
                r.linesearch,
                opt(r.feasibility),
                opt(r.lagrangian),
                r.wall_ms
            )?;
        }
        writeln!(out, "#status={}", self.status)?;
        Ok(())
    }
}

/// Collects records and stamps wall time.
pub(crate) struct TraceBuilder {
    records: Vec<IterationRecord>,
    start: Option<Instant>,
}

impl TraceBuilder {
    pub(crate) fn new(timing: bool) -> Self {
        Self { records: Vec::new(), start: timing.then(Instant::now) }
    }

    pub(crate) fn push(&mut self, mut rec: IterationRecord) {
        if let Some(t0) = self.start {
            rec.wall_ms = t0.elapsed().as_secs_f64() * 1e3;
        }
        self.records.push(rec);
    }

    pub(crate) fn finish(self, status: Status) -> IterationTrace {
        IterationTrace { records: self.records, status }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut rec = IterationRecord::new(0, 2.0, 1.0);
        rec.alpha = 1.0;
        rec.feasibility = Some(0.5);
        let trace = IterationTrace {
            records: vec![rec, IterationRecord::new(1, 1.0, 0.0)],
            status: Status::Converged(StopRule::Cond1),
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,2.0000000000000000e0,"));
        assert_eq!(lines[1].split(',').count(), 8);
        assert_eq!(lines[3], "#status=converged;rule=cond1");
    }
}
