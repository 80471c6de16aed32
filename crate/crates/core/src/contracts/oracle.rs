//! Direct row-by-row evaluation of every contract, independent of the
//! automata pipeline. Used to cross-check verdicts and first-violation
//! rows produced by the compiled networks.

use super::params::ContractParams;
use super::prepare::PreparedTrace;
use super::ContractId;

/// Trend class of one step: 0 increasing, 1 decreasing, 2 stable.
fn trend(cur: i64, prev: i64, eps: i64) -> u8 {
    let d = cur - prev;
    if d > eps {
        0
    } else if d < -eps {
        1
    } else {
        2
    }
}

/// Previous-row value with the first row repeating itself.
fn prev_of(s: &[i64], k: usize) -> i64 {
    s[k.saturating_sub(1)]
}

/// First index where the assumption/guarantee trend classes stay
/// mismatched beyond the tolerated lag. Class 3 means the assumption is
/// gated off; stable or gated assumptions impose nothing.
fn trend_scan(a: &[u8], g: &[u8], lag: i64) -> Option<usize> {
    let mut miss = 0i64;
    for k in 0..a.len() {
        let binding = a[k] == 0 || a[k] == 1;
        if binding && g[k] != a[k] {
            if miss >= lag {
                return Some(k);
            }
            miss += 1;
        } else {
            miss = 0;
        }
    }
    None
}

/// First index of the `lag + 1`-th consecutive bad row.
fn chain_scan(bad: &[bool], lag: i64) -> Option<usize> {
    let mut run = 0i64;
    for (k, &b) in bad.iter().enumerate() {
        if b {
            if run >= lag {
                return Some(k);
            }
            run += 1;
        } else {
            run = 0;
        }
    }
    None
}

/// Per-row flag that `cond` has held for `lag + 1` consecutive rows.
fn held_series(cond: &[bool], lag: i64) -> Vec<bool> {
    let mut run = 0i64;
    cond.iter()
        .map(|&c| {
            let held = c && run >= lag;
            run = if c { (run + 1).min(lag) } else { 0 };
            held
        })
        .collect()
}

fn trend_series(cur: &[i64], eps: i64, gate: impl Fn(usize) -> bool) -> Vec<u8> {
    (0..cur.len())
        .map(|k| {
            if gate(k) {
                3
            } else {
                trend(cur[k], prev_of(cur, k), eps)
            }
        })
        .collect()
}

/// First violated row of a contract (original trace row index), or `None`
/// when the trace satisfies it.
pub fn direct_oracle(id: ContractId, prep: &PreparedTrace, params: &ContractParams) -> Option<usize> {
    let p = params;
    let len = prep.eval_len();
    let eps = p.epsilon;
    let lag = p.lag as i64;
    let hit = match id {
        ContractId::Mc1 => {
            let a = trend_series(&prep.b_t, eps, |k| prep.bo_t[k] >= p.t_boil);
            let g = trend_series(&prep.bo_t, eps, |_| false);
            trend_scan(&a, &g, lag)
        }
        ContractId::Mc2 => {
            let bad: Vec<bool> = (0..len)
                .map(|k| prep.w_m[k] > 0 && prep.bo_t[k] > p.t_boil + eps)
                .collect();
            chain_scan(&bad, lag)
        }
        ContractId::Mc3 => {
            let a = trend_series(&prep.wo_m, eps, |k| !prep.burner_on[k]);
            let g = trend_series(&prep.b_t, eps, |_| false);
            trend_scan(&a, &g, lag)
        }
        ContractId::Fc1 => {
            let bad: Vec<bool> = (0..len)
                .map(|k| prep.wo_m[k] < p.wo_m_min && !prep.wo_r[k])
                .collect();
            chain_scan(&bad, lag)
        }
        ContractId::Fc2 => {
            let mut wait = 0i64;
            let cap = p.wood_wait + 1;
            let bad: Vec<bool> = (0..len)
                .map(|k| {
                    let pending = prep.wo_r[k] && !prep.wo_d[k];
                    let b = pending
                        && wait >= p.wood_wait
                        && prep.wo_m[k] < p.wo_m_min
                        && !prep.w_a[k];
                    wait = if pending { (wait + 1).min(cap) } else { 0 };
                    b
                })
                .collect();
            chain_scan(&bad, lag)
        }
        ContractId::Fc3 => {
            let bad: Vec<bool> = (0..len)
                .map(|k| prep.wo_m[k] > p.wo_m_min && (prep.wo_r[k] || prep.wo_d[k]))
                .collect();
            chain_scan(&bad, lag)
        }
        ContractId::Fc4 => {
            let (lo, hi) = p.ideal_range;
            let mut latch = false;
            let bad: Vec<bool> = (0..len)
                .map(|k| {
                    let in_range = lo <= prep.b_t[k] && prep.b_t[k] <= hi;
                    let b = latch && !in_range && !prep.critical_alarm[k];
                    latch = latch || in_range;
                    b
                })
                .collect();
            chain_scan(&bad, lag)
        }
        ContractId::Fc5 => {
            let bad: Vec<bool> = (0..len)
                .map(|k| prep.w_a[k] && prep.burner_on[k])
                .collect();
            chain_scan(&bad, lag)
        }
        ContractId::Fc6 => {
            let bad: Vec<bool> = (0..len)
                .map(|k| prep.w_m[k] > p.w_m_min && prep.wo_m[k] <= 0)
                .collect();
            chain_scan(&bad, lag)
        }
        ContractId::Fc7 => {
            let mut latch = false;
            let bad: Vec<bool> = (0..len)
                .map(|k| {
                    let reached = prep.bo_t[k] >= p.t_boil;
                    let off_plateau = prep.bo_t[k] < p.t_boil - eps || prep.bo_t[k] > p.t_boil + eps;
                    let b = latch && prep.w_m[k] > p.w_m_min && off_plateau;
                    latch = latch || reached;
                    b
                })
                .collect();
            chain_scan(&bad, lag)
        }
        ContractId::Fc8 => {
            let bad: Vec<bool> = (0..len)
                .map(|k| prep.w_m[k] < p.w_m_min && (!prep.w_a[k] || prep.burner_on[k]))
                .collect();
            chain_scan(&bad, lag)
        }
        ContractId::Fc9 => {
            // The query watches classifier locations, which a monitor
            // updates one synchronization after the assumption within the
            // same row; a hit can therefore pair row k's water level with
            // row k-1's held alarms. The hold must outlast the averaging
            // window of the gate, not just the lag (see
            // `ContractParams::held_lag`).
            let hold = p.held_lag() as i64;
            let above: Vec<bool> = (0..len).map(|k| prep.w_m[k] > p.w_m_min).collect();
            let off: Vec<bool> = prep.burner_on.iter().map(|&on| !on).collect();
            let alarm_held = held_series(&prep.w_a, hold);
            let off_held = held_series(&off, hold);
            let flagged = |k: usize| alarm_held[k] || off_held[k];
            (0..len).find(|&k| above[k] && (flagged(k) || (k > 0 && flagged(k - 1))))
        }
        ContractId::Fc10 => {
            let bad: Vec<bool> = (0..len)
                .map(|k| {
                    !prep.burner_on[k]
                        && (prep.b_t[k] < prep.t_env[k] || prep.bo_t[k] < prep.t_env[k])
                })
                .collect();
            chain_scan(&bad, lag)
        }
        ContractId::Ic1 => {
            let mut run = 0i64;
            let cap = p.alarm_hold + 1;
            let bad: Vec<bool> = (0..len)
                .map(|k| {
                    let crit = prep.critical_alarm[k];
                    let b = crit && run >= p.alarm_hold && prep.burner_on[k];
                    run = if crit { (run + 1).min(cap) } else { 0 };
                    b
                })
                .collect();
            chain_scan(&bad, lag)
        }
    };
    hit.map(|k| prep.offset + k)
}
