//! Shared view of a trace as contracts see it.
//!
//! Both the automata compiler and the direct oracle read from this struct,
//! so any disagreement between them is in the encodings, not the data:
//! numeric signals are stabilized, booleans are taken raw, and everything
//! is indexed by *evaluated row* `k`, i.e. original row `offset + k`.
//!
//! Predicted columns are used when the trace carries them; a truth-only
//! trace is checked as its own predictor.

use crate::trace::{Signal, Trace};

use super::params::ContractParams;
use super::stabilize::stabilize;
use super::ContractError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreparedTrace {
    /// First evaluated original-row index (= stabilization window).
    pub offset: usize,
    /// Time column at evaluated rows.
    pub t: Vec<i64>,
    /// Stabilized numeric signals at evaluated rows.
    pub b_t: Vec<i64>,
    pub bo_t: Vec<i64>,
    pub w_m: Vec<i64>,
    pub wo_m: Vec<i64>,
    /// Raw boolean signals at evaluated rows.
    pub w_a: Vec<bool>,
    pub wo_a: Vec<bool>,
    pub wo_r: Vec<bool>,
    pub wo_d: Vec<bool>,
    /// Plant-side channels at evaluated rows.
    pub burner_on: Vec<bool>,
    pub critical_alarm: Vec<bool>,
    pub t_env: Vec<i64>,
}

impl PreparedTrace {
    pub fn from_trace(trace: &Trace, params: &ContractParams) -> Result<PreparedTrace, ContractError> {
        params.validate()?;
        let m = params.window;
        if trace.len() < m + 1 {
            return Err(ContractError::TraceTooShort {
                need: m + 1,
                got: trace.len(),
            });
        }
        let series = |s: Signal| -> Vec<i64> {
            trace
                .pred_series(s)
                .unwrap_or_else(|| trace.truth_series(s))
        };
        let smoothed = |s: Signal| stabilize(&series(s), m);
        let raw_bool = |s: Signal| -> Vec<bool> { series(s)[m..].iter().map(|&v| v != 0).collect() };

        Ok(PreparedTrace {
            offset: m,
            t: trace.rows[m..].iter().map(|r| r.t).collect(),
            b_t: smoothed(Signal::BT)?,
            bo_t: smoothed(Signal::BoT)?,
            w_m: smoothed(Signal::WM)?,
            wo_m: smoothed(Signal::WoM)?,
            w_a: raw_bool(Signal::WA),
            wo_a: raw_bool(Signal::WoA),
            wo_r: raw_bool(Signal::WoR),
            wo_d: raw_bool(Signal::WoD),
            burner_on: trace.rows[m..].iter().map(|r| r.burner_on).collect(),
            critical_alarm: trace.rows[m..].iter().map(|r| r.critical_alarm).collect(),
            t_env: trace.rows[m..].iter().map(|r| r.t_env).collect(),
        })
    }

    /// Number of evaluated rows.
    pub fn eval_len(&self) -> usize {
        self.t.len()
    }

    /// Stabilized value one evaluated row earlier; the first evaluated row
    /// has no predecessor and reuses its own value (a zero first step).
    pub fn prev(series: &[i64], k: usize) -> i64 {
        series[k.saturating_sub(1)]
    }
}
