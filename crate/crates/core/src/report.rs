//! Solver outputs shared by every method.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::objective::MEigenpair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// Stopped at (or collapsed toward) a point with a zero block.
    Degenerate,
    MaxIter,
    LsFailure,
    /// Power iteration hit a zero vector during normalization.
    Breakdown,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::Degenerate => "degenerate",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::LsFailure => "ls_failure",
            SolveStatus::Breakdown => "breakdown",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One accepted step.
///
/// For the power baseline `phi` holds the Rayleigh value, `grad_norm` the
/// change in it, `alpha` is 1, `gdot` and `gamma_k` are 0 and `t_shift` is the
/// power shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub phi: f64,
    pub grad_norm: f64,
    pub alpha: f64,
    pub gdot: f64,
    pub gamma_k: f64,
    pub t_shift: f64,
}

/// One phase of the shift driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscalationRecord {
    pub t: f64,
    pub status: SolveStatus,
    pub iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Present iff `status` is [`SolveStatus::Converged`].
    pub pair: Option<MEigenpair>,
    pub trace: Vec<IterationRecord>,
    pub iters: usize,
    /// Seconds.
    pub wall_time: f64,
    /// Shift of the phase that produced the result.
    pub shift_t: f64,
    /// Final iterate `(x, y)` stacked, before normalization.
    pub z: Vec<f64>,
    /// Shifted phases run by the driver, in order; empty for a plain solve.
    pub escalations: Vec<EscalationRecord>,
    /// Diagnostic for failed runs.
    pub message: Option<String>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn lambda(&self) -> Option<f64> {
        self.pair.as_ref().map(|p| p.lambda)
    }

    /// CSV with columns `k,phi,grad_norm,alpha,gdot,gamma_k,t_shift`.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for rec in &self.trace {
            w.serialize(rec)?;
        }
        if self.trace.is_empty() {
            w.write_record([
                "k",
                "phi",
                "grad_norm",
                "alpha",
                "gdot",
                "gamma_k",
                "t_shift",
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> DriverReportJson {
        DriverReportJson {
            status: self.status,
            lambda: self.pair.as_ref().map(|p| p.lambda),
            x: self.pair.as_ref().map(|p| p.x.clone()),
            y: self.pair.as_ref().map(|p| p.y.clone()),
            residual_x: self.pair.as_ref().map(|p| p.residual_x),
            residual_y: self.pair.as_ref().map(|p| p.residual_y),
            shift_t_used: self.shift_t,
            iters: self.iters,
            escalations: self.escalations.clone(),
            message: self.message.clone(),
        }
    }
}

/// Driver report as written by `meig solve --json`.
///
/// The eigenpair fields are `null` when the run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverReportJson {
    pub status: SolveStatus,
    pub lambda: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub residual_x: Option<f64>,
    pub residual_y: Option<f64>,
    pub shift_t_used: f64,
    pub iters: usize,
    pub escalations: Vec<EscalationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}
