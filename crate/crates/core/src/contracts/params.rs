//! Tunable thresholds shared by every contract.

use serde::{Deserialize, Serialize};

use super::ContractError;

/// Thresholds and timing constants for the contract suite. All
/// temperatures and masses are fixed-point values scaled by 100, matching
/// the trace format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContractParams {
    /// Stabilization window: numeric signals are averaged over this many
    /// preceding rows, and evaluation starts at this row index.
    pub window: usize,
    /// Dead band for trend classification: a stabilized step within
    /// `[-epsilon, epsilon]` counts as stable. Also the tolerance around
    /// the boiling plateau.
    pub epsilon: i64,
    /// Grace period: a guarantee may lag its assumption by this many rows
    /// before a mismatch counts as a violation.
    pub lag: usize,
    /// Boiling point of water.
    pub t_boil: i64,
    /// Wood reserve under which a delivery must be requested.
    pub wo_m_min: i64,
    /// Water reserve under which the burner must be shut off.
    pub w_m_min: i64,
    /// Burner operating band; leaving it after having reached it must
    /// raise the critical alarm.
    pub ideal_range: (i64, i64),
    /// Rows an unserved wood request may stay open before the starvation
    /// alarm must fire.
    pub wood_wait: i64,
    /// Rows the critical alarm may stay active before the burner must be
    /// off.
    pub alarm_hold: i64,
    /// Seconds of model time per trace row.
    pub period: i64,
}

impl Default for ContractParams {
    fn default() -> ContractParams {
        ContractParams {
            window: 3,
            epsilon: 50,
            lag: 2,
            t_boil: 10_000,
            wo_m_min: 2_500,
            w_m_min: 1_200,
            ideal_range: (13_000, 16_000),
            wood_wait: 60,
            alarm_hold: 300,
            period: 1,
        }
    }
}

impl ContractParams {
    /// Thresholds aligned with a concrete plant configuration; window,
    /// dead band, lag and period keep their defaults.
    pub fn for_plant(p: &crate::plant::PlantParams) -> ContractParams {
        ContractParams {
            t_boil: p.t_boil,
            wo_m_min: p.wo_m_min,
            w_m_min: p.w_m_min,
            ideal_range: crate::plant::IDEAL_RANGE,
            wood_wait: p.starvation_wait,
            alarm_hold: crate::plant::ALARM_SHUTDOWN_HOLD,
            ..ContractParams::default()
        }
    }

    /// Consecutive rows (beyond the first) a level condition must persist
    /// before a held classifier treats it as established. Never shorter
    /// than the stabilization window: level gates read trailing moving
    /// averages that lag the raw signals by up to `window` rows, so a
    /// shorter hold could pair a fresh alarm with a stale above-threshold
    /// average at a genuine threshold crossing and flag a correct trace.
    pub fn held_lag(&self) -> usize {
        self.lag.max(self.window)
    }

    pub fn validate(&self) -> Result<(), ContractError> {
        let bad = |msg: &str| Err(ContractError::Params(msg.to_string()));
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.period < 1 {
            return bad("period must be at least 1 second");
        }
        if self.epsilon < 0 {
            return bad("epsilon must be nonnegative");
        }
        if self.t_boil <= 0 {
            return bad("t_boil must be positive");
        }
        if self.wo_m_min <= 0 || self.w_m_min <= 0 {
            return bad("mass thresholds must be positive");
        }
        if self.ideal_range.0 >= self.ideal_range.1 {
            return bad("ideal_range must be a nonempty interval");
        }
        if self.wood_wait < 1 || self.alarm_hold < 1 {
            return bad("wait windows must be at least 1 row");
        }
        Ok(())
    }
}
