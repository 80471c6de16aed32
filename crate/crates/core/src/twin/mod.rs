//! Black-box digital-twin surrogates and fault injection.
//!
//! A [`Surrogate`] maps plant observables to predictions of the eight plant
//! signals. The verification pipeline only ever sees the resulting `pred_*`
//! trace columns, never the predictor internals — an externally produced
//! CSV with prediction columns is just as acceptable as an in-process
//! surrogate.
//!
//! Three predictor families are provided:
//!
//! * [`Surrogate::Identity`] — copies the ground truth; the "perfect twin"
//!   used for clean-run sanity checks.
//! * [`Surrogate::Linear`] — ridge-regression one-step-ahead predictor over
//!   hand-picked features of the previous row plus the scenario knobs
//!   (`alpha`, `beta`, `delta`).
//! * [`Surrogate::Faulted`] — any surrogate wrapped with controlled defect
//!   injectors (stuck output, additive noise, bias, lag) active inside a
//!   time window, used to reproduce the violation modes the verifier must
//!   catch.
//!
//! Predictions for row `t` come from the truth observables of row `t − 1`
//! (row 0 predicts itself); the identity stub copies row `t` exactly.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plant::{self, PlantParams};
use crate::trace::{Signal, SignalFrame, Trace, TraceRow};

/// Upper clamp for predicted temperatures and masses (centi-units).
const MAX_TEMP: i64 = 25_000;
const MAX_MASS: i64 = 30_000;

/// The scenario knobs a twin receives alongside the observables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwinKnobs {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl From<&PlantParams> for TwinKnobs {
    fn from(p: &PlantParams) -> Self {
        TwinKnobs {
            alpha: p.alpha as f64 / 100.0,
            beta: p.beta as f64 / 100.0,
            delta: p.delta as f64 / 100.0,
        }
    }
}

/// Which feature map a linear model uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureMode {
    /// The eight signals only, untransformed. Nonnegative weights over
    /// these make the predictor monotone by construction.
    RawSignals,
    /// Signals, flags, knobs, and regime interaction terms.
    Full,
}

#[derive(Debug, Error)]
pub enum TwinError {
    #[error("cannot fit a surrogate from an empty training set")]
    EmptyTrainingSet,
    #[error("training rows must carry all truth columns; trace {0} is empty")]
    EmptyTrace(usize),
    #[error("normal equations are singular; raise the ridge penalty")]
    Singular,
    #[error("fault window [{from}, {to}] is reversed")]
    ReversedWindow { from: i64, to: i64 },
    #[error("lag of zero steps has no effect; use at least 1")]
    ZeroLag,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed weights file: {0}")]
    Weights(#[from] serde_json::Error),
    #[error(transparent)]
    Plant(#[from] plant::PlantError),
    #[error(transparent)]
    Trace(#[from] crate::trace::TraceError),
}

/// A defect applied to one predicted signal inside a time window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FaultKind {
    /// Hold the signal at its value from the window's first row.
    StuckOutput,
    /// Add a per-row uniform draw from `[-amplitude, +amplitude]`
    /// (centi-units; boolean signals live on a 0–100 scale and are
    /// re-thresholded at 50).
    AdditiveNoise { amplitude: i64, seed: u64 },
    /// Add a constant offset (same scale convention as noise).
    Bias { offset: i64 },
    /// Replay the signal from `steps` rows earlier.
    Lag { steps: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub signal: Signal,
    pub kind: FaultKind,
    /// Activation window in row time, inclusive on both ends.
    pub t_from: i64,
    pub t_to: i64,
}

impl FaultSpec {
    pub fn validate(&self) -> Result<(), TwinError> {
        if self.t_from > self.t_to {
            return Err(TwinError::ReversedWindow {
                from: self.t_from,
                to: self.t_to,
            });
        }
        if let FaultKind::Lag { steps: 0 } = self.kind {
            return Err(TwinError::ZeroLag);
        }
        Ok(())
    }

    fn active(&self, t: i64) -> bool {
        (self.t_from..=self.t_to).contains(&t)
    }
}

/// Ridge-regression weights mapping a feature vector to the eight signals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub mode: FeatureMode,
    /// One weight row per predicted signal, `weights[s][f]`.
    pub weights: Vec<Vec<f64>>,
    pub ridge: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Surrogate {
    Identity,
    Linear(LinearModel),
    Faulted {
        base: Box<Surrogate>,
        faults: Vec<FaultSpec>,
    },
}

fn feature_names(mode: FeatureMode) -> Vec<&'static str> {
    match mode {
        FeatureMode::RawSignals => vec![
            "one", "B_T", "Bo_T", "W_M", "Wo_M", "W_A", "Wo_A", "Wo_R", "Wo_D",
        ],
        FeatureMode::Full => vec![
            "one",
            "B_T",
            "Bo_T",
            "W_M",
            "Wo_M",
            "W_A",
            "Wo_A",
            "Wo_R",
            "Wo_D",
            "burner_on",
            "critical_alarm",
            "T_env",
            "alpha",
            "beta",
            "delta",
            "burner_on*B_T",
            "burner_on*Wo_M",
            "burner_on*delta*Wo_M",
            "beta*(B_T-Bo_T)",
            "off*B_T",
            "off*Bo_T",
        ],
    }
}

fn features(mode: FeatureMode, row: &TraceRow, knobs: &TwinKnobs) -> Vec<f64> {
    let s = &row.truth;
    let f = |v: i64| v as f64 / 100.0;
    let b = |v: bool| v as i64 as f64;
    match mode {
        FeatureMode::RawSignals => vec![
            1.0,
            f(s.b_t),
            f(s.bo_t),
            f(s.w_m),
            f(s.wo_m),
            b(s.w_a),
            b(s.wo_a),
            b(s.wo_r),
            b(s.wo_d),
        ],
        FeatureMode::Full => {
            let on = b(row.burner_on);
            let off = 1.0 - on;
            vec![
                1.0,
                f(s.b_t),
                f(s.bo_t),
                f(s.w_m),
                f(s.wo_m),
                b(s.w_a),
                b(s.wo_a),
                b(s.wo_r),
                b(s.wo_d),
                on,
                b(row.critical_alarm),
                f(row.t_env),
                knobs.alpha,
                knobs.beta,
                knobs.delta,
                on * f(s.b_t),
                on * f(s.wo_m),
                on * knobs.delta * f(s.wo_m),
                knobs.beta * (f(s.b_t) - f(s.bo_t)),
                off * f(s.b_t),
                off * f(s.bo_t),
            ]
        }
    }
}

/// Regression targets: numeric signals on the unit scale, booleans as 0/1.
fn targets(truth: &SignalFrame) -> [f64; 8] {
    let mut y = [0.0; 8];
    for (s, sig) in Signal::ALL.iter().enumerate() {
        let v = truth.get(*sig) as f64;
        y[s] = if sig.is_boolean() { v } else { v / 100.0 };
    }
    y
}

impl LinearModel {
    /// Raw (unclamped) model output for one input row, in signal units.
    fn eval(&self, row: &TraceRow, knobs: &TwinKnobs) -> [f64; 8] {
        let x = features(self.mode, row, knobs);
        let mut out = [0.0; 8];
        for (s, w) in self.weights.iter().enumerate() {
            out[s] = w.iter().zip(&x).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Clamp to signal ranges and threshold booleans at 0.5.
    fn to_frame(&self, raw: [f64; 8], t_env: i64) -> SignalFrame {
        let scale = |v: f64| (v * 100.0).round() as i64;
        let mut frame = SignalFrame::default();
        for (i, sig) in Signal::ALL.iter().enumerate() {
            let v = raw[i];
            let stored = if sig.is_boolean() {
                (v >= 0.5) as i64
            } else {
                match sig {
                    Signal::BT | Signal::BoT => scale(v).clamp(t_env, MAX_TEMP),
                    _ => scale(v).clamp(0, MAX_MASS),
                }
            };
            frame.set(*sig, stored);
        }
        frame
    }

    pub fn save(&self, path: &Path) -> Result<(), TwinError> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<LinearModel, TwinError> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(file)?)
    }
}

/// A predictor whose weights over the raw signals are all nonnegative, so
/// componentwise-larger inputs can only raise its outputs.
pub fn monotone_demo() -> Surrogate {
    let mut weights = vec![vec![0.0; 9]; 8];
    for (s, row) in weights.iter_mut().enumerate() {
        row[0] = 0.5; // intercept
        row[s + 1] = 0.8; // own signal
        row[(s + 1) % 8 + 1] = 0.1; // a neighbor, still nonnegative
    }
    Surrogate::Linear(LinearModel {
        mode: FeatureMode::RawSignals,
        weights,
        ridge: 0.0,
    })
}

/// Like [`monotone_demo`] but with one negative weight, so a larger input
/// can lower an output.
pub fn anti_monotone_demo() -> Surrogate {
    let mut weights = vec![vec![0.0; 9]; 8];
    for (s, row) in weights.iter_mut().enumerate() {
        row[0] = 0.5;
        row[s + 1] = 0.8;
    }
    weights[0][4] = -0.6; // hotter burner predicted from *less* wood
    Surrogate::Linear(LinearModel {
        mode: FeatureMode::RawSignals,
        weights,
        ridge: 0.0,
    })
}

/// Fit a ridge regression mapping each row's features to the next row's
/// eight signals, pooled over all training runs. Deterministic; the seed
/// is reserved for stochastic trainers and currently unused.
pub fn fit(runs: &[(PlantParams, Trace)], ridge: f64, _seed: u64) -> Result<Surrogate, TwinError> {
    if runs.is_empty() {
        return Err(TwinError::EmptyTrainingSet);
    }
    let mode = FeatureMode::Full;
    let n_feat = feature_names(mode).len();
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<[f64; 8]> = Vec::new();
    for (i, (params, trace)) in runs.iter().enumerate() {
        if trace.is_empty() {
            return Err(TwinError::EmptyTrace(i));
        }
        let knobs = TwinKnobs::from(params);
        for pair in trace.rows.windows(2) {
            xs.push(features(mode, &pair[0], &knobs));
            ys.push(targets(&pair[1].truth));
        }
    }
    if xs.is_empty() {
        // Single-row traces: fall back to predicting each row from itself.
        for (params, trace) in runs {
            let knobs = TwinKnobs::from(params);
            for row in &trace.rows {
                xs.push(features(mode, row, &knobs));
                ys.push(targets(&row.truth));
            }
        }
    }

    let n = xs.len();
    let x = DMatrix::from_fn(n, n_feat, |r, c| xs[r][c]);
    let xt = x.transpose();
    let mut gram = &xt * &x;
    for d in 0..n_feat {
        gram[(d, d)] += ridge;
    }
    let chol = gram.cholesky().ok_or(TwinError::Singular)?;
    let mut weights = Vec::with_capacity(8);
    for s in 0..8 {
        let y = DVector::from_fn(n, |r, _| ys[r][s]);
        let rhs = &xt * y;
        let w = chol.solve(&rhs);
        weights.push(w.iter().copied().collect());
    }
    Ok(Surrogate::Linear(LinearModel {
        mode,
        weights,
        ridge,
    }))
}

impl Surrogate {
    /// Wrap this surrogate with a fault, validating the spec first.
    pub fn inject_fault(self, fault: FaultSpec) -> Result<Surrogate, TwinError> {
        fault.validate()?;
        match self {
            Surrogate::Faulted { base, mut faults } => {
                faults.push(fault);
                Ok(Surrogate::Faulted { base, faults })
            }
            other => Ok(Surrogate::Faulted {
                base: Box::new(other),
                faults: vec![fault],
            }),
        }
    }

    fn base(&self) -> &Surrogate {
        match self {
            Surrogate::Faulted { base, .. } => base.base(),
            other => other,
        }
    }

    fn fault_list(&self) -> Vec<FaultSpec> {
        match self {
            Surrogate::Faulted { base, faults } => {
                let mut all = base.fault_list();
                all.extend(faults.iter().copied());
                all
            }
            _ => Vec::new(),
        }
    }

    /// Fault-free prediction for a single row given its predecessor.
    /// `prev` is `None` for the first row, which predicts itself.
    pub fn predict(
        &self,
        prev: Option<&TraceRow>,
        row: &TraceRow,
        knobs: &TwinKnobs,
    ) -> SignalFrame {
        match self.base() {
            Surrogate::Identity => row.truth,
            Surrogate::Linear(model) => match prev {
                Some(p) => model.to_frame(model.eval(p, knobs), p.t_env),
                None => row.truth,
            },
            Surrogate::Faulted { .. } => unreachable!("base() never returns Faulted"),
        }
    }

    /// Predictions for a whole trace, faults applied. This is the form the
    /// pipeline uses; history-dependent faults (stuck, lag) need the whole
    /// series.
    pub fn predict_series(&self, rows: &[TraceRow], knobs: &TwinKnobs) -> Vec<SignalFrame> {
        let mut preds: Vec<SignalFrame> = rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let prev = if i == 0 { None } else { Some(&rows[i - 1]) };
                self.predict(prev, row, knobs)
            })
            .collect();
        for fault in self.fault_list() {
            apply_fault(&mut preds, rows, &fault);
        }
        // Re-apply the physical floors after fault arithmetic.
        for (pred, row) in preds.iter_mut().zip(rows) {
            pred.b_t = pred.b_t.max(row.t_env).min(MAX_TEMP);
            pred.bo_t = pred.bo_t.max(row.t_env).min(MAX_TEMP);
            pred.w_m = pred.w_m.clamp(0, MAX_MASS);
            pred.wo_m = pred.wo_m.clamp(0, MAX_MASS);
        }
        preds
    }

    /// Run the plant and this surrogate side by side; every row of the
    /// result carries both truth and `pred_*` columns.
    pub fn rollout(
        &self,
        p: &PlantParams,
        horizon: usize,
        seed: u64,
    ) -> Result<Trace, TwinError> {
        let truth = plant::run(p, horizon, seed)?;
        let preds = self.predict_series(&truth.rows, &TwinKnobs::from(p));
        Ok(truth.attach_predictions(&preds)?)
    }
}

/// Noise draws are stateless per (seed, row time, signal) so that reruns
/// and window slicing reproduce identical values.
fn noise_draw(seed: u64, t: i64, signal: Signal, amplitude: i64) -> i64 {
    let mix = seed
        ^ (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (signal as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    let mut rng = ChaCha8Rng::seed_from_u64(mix);
    rng.gen_range(-amplitude..=amplitude)
}

fn apply_fault(preds: &mut [SignalFrame], rows: &[TraceRow], fault: &FaultSpec) {
    let sig = fault.signal;
    let on_scale = |frame: &SignalFrame| {
        let v = frame.get(sig);
        if sig.is_boolean() {
            v * 100
        } else {
            v
        }
    };
    let store = |frame: &mut SignalFrame, scaled: i64| {
        if sig.is_boolean() {
            frame.set(sig, (scaled >= 50) as i64);
        } else {
            frame.set(sig, scaled.max(0));
        }
    };
    match fault.kind {
        FaultKind::StuckOutput => {
            let mut held: Option<i64> = None;
            for (pred, row) in preds.iter_mut().zip(rows) {
                if fault.active(row.t) {
                    let v = *held.get_or_insert_with(|| pred.get(sig));
                    pred.set(sig, v);
                }
            }
        }
        FaultKind::AdditiveNoise { amplitude, seed } => {
            for (pred, row) in preds.iter_mut().zip(rows) {
                if fault.active(row.t) {
                    let d = noise_draw(seed, row.t, sig, amplitude);
                    store(pred, on_scale(pred) + d);
                }
            }
        }
        FaultKind::Bias { offset } => {
            for (pred, row) in preds.iter_mut().zip(rows) {
                if fault.active(row.t) {
                    store(pred, on_scale(pred) + offset);
                }
            }
        }
        FaultKind::Lag { steps } => {
            let series: Vec<i64> = preds.iter().map(|p| p.get(sig)).collect();
            for (i, (pred, row)) in preds.iter_mut().zip(rows).enumerate() {
                if fault.active(row.t) {
                    pred.set(sig, series[i.saturating_sub(steps)]);
                }
            }
        }
    }
}
