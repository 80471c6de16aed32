//! Random traces and parameter sets for cross-checking the automata
//! pipeline against the direct oracle. The generator favours runs and
//! trends over white noise so counter, latch and trend logic all get
//! exercised, and it intentionally produces physically impossible traces:
//! agreement must hold on any input, not just plant-shaped ones.

use rand::Rng;

use crate::trace::{Signal, SignalFrame, Trace, TraceRow};

use super::params::ContractParams;

/// Parameters drawn small enough that every counter and window is
/// reachable within a short trace; roughly one in five draws returns the
/// defaults unchanged.
pub fn random_params(rng: &mut impl Rng) -> ContractParams {
    if rng.gen_bool(0.2) {
        return ContractParams::default();
    }
    let lo = rng.gen_range(2_000..=14_000);
    let params = ContractParams {
        window: rng.gen_range(1..=4),
        epsilon: rng.gen_range(0..=200),
        lag: rng.gen_range(0..=3),
        t_boil: rng.gen_range(5_000..=15_000),
        wo_m_min: rng.gen_range(500..=5_000),
        w_m_min: rng.gen_range(500..=5_000),
        ideal_range: (lo, lo + rng.gen_range(500..=4_000)),
        wood_wait: rng.gen_range(1..=8),
        alarm_hold: rng.gen_range(1..=8),
        period: rng.gen_range(1..=3),
    };
    params.validate().expect("generated parameters are valid");
    params
}

/// One numeric signal as a piecewise trend with jitter.
fn numeric_series(rng: &mut impl Rng, len: usize, lo: i64, hi: i64) -> Vec<i64> {
    let mut value = rng.gen_range(lo..=hi);
    let mut slope = 0i64;
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.2) {
                slope = match rng.gen_range(0..4) {
                    0 => 0,
                    1 => rng.gen_range(1..=600),
                    2 => -rng.gen_range(1..=600),
                    _ => {
                        value = rng.gen_range(lo..=hi);
                        0
                    }
                };
            }
            let jitter = rng.gen_range(-30..=30);
            value = (value + slope + jitter).clamp(lo, hi);
            value
        })
        .collect()
}

/// One boolean signal as a two-state Markov chain (runs average a handful
/// of rows).
fn boolean_series(rng: &mut impl Rng, len: usize) -> Vec<bool> {
    let mut on = rng.gen_bool(0.5);
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.18) {
                on = !on;
            }
            on
        })
        .collect()
}

/// A random trace of 5..=`max_len` rows. Half the traces carry independent
/// prediction columns, the rest are checked as their own predictor (either
/// truth-only or with predictions equal to truth).
pub fn random_trace(rng: &mut impl Rng, max_len: usize) -> Trace {
    let len = rng.gen_range(5..=max_len.max(5));
    let mut truth_num = Vec::new();
    let mut pred_num = Vec::new();
    let independent_preds = rng.gen_bool(0.5);
    let attach_preds = independent_preds || rng.gen_bool(0.5);
    for (lo, hi) in [
        (0, 25_000), // burner temperature
        (0, 25_000), // boiler temperature
        (0, 30_000), // water mass
        (0, 30_000), // wood mass
    ] {
        truth_num.push(numeric_series(rng, len, lo, hi));
        if independent_preds {
            pred_num.push(numeric_series(rng, len, lo, hi));
        }
    }
    let mut truth_bool = Vec::new();
    let mut pred_bool = Vec::new();
    for _ in 0..4 {
        truth_bool.push(boolean_series(rng, len));
        if independent_preds {
            pred_bool.push(boolean_series(rng, len));
        }
    }
    let burner_on = boolean_series(rng, len);
    let critical_alarm = boolean_series(rng, len);
    let t_env = if rng.gen_bool(0.7) {
        vec![1_800; len]
    } else {
        numeric_series(rng, len, 0, 4_000)
    };

    let numeric_signals = [Signal::BT, Signal::BoT, Signal::WM, Signal::WoM];
    let boolean_signals = [Signal::WA, Signal::WoA, Signal::WoR, Signal::WoD];
    let rows = (0..len)
        .map(|i| {
            let mut truth = SignalFrame::default();
            for (j, s) in numeric_signals.into_iter().enumerate() {
                truth.set(s, truth_num[j][i]);
            }
            for (j, s) in boolean_signals.into_iter().enumerate() {
                truth.set(s, truth_bool[j][i] as i64);
            }
            let pred = if independent_preds {
                let mut f = SignalFrame::default();
                for (j, s) in numeric_signals.into_iter().enumerate() {
                    f.set(s, pred_num[j][i]);
                }
                for (j, s) in boolean_signals.into_iter().enumerate() {
                    f.set(s, pred_bool[j][i] as i64);
                }
                Some(f)
            } else if attach_preds {
                Some(truth)
            } else {
                None
            };
            TraceRow {
                t: i as i64,
                truth,
                pred,
                burner_on: burner_on[i],
                critical_alarm: critical_alarm[i],
                t_env: t_env[i],
            }
        })
        .collect();
    Trace { rows }
}
