//! Plant/twin traces and their CSV form.
//!
//! A trace is a sequence of rows sampled at a fixed period (the `t` column
//! is in seconds and must be strictly increasing). Temperatures and masses
//! are fixed-point integers scaled by 100 (`2550` = 25.5 units); booleans
//! are `0`/`1`.
//!
//! Column order is part of the format:
//!
//! ```text
//! t,B_T,Bo_T,W_M,Wo_M,W_A,Wo_A,Wo_R,Wo_D,burner_on,critical_alarm,T_env
//! ```
//!
//! optionally followed by the twin's predictions for the eight plant
//! signals, prefixed `pred_`:
//!
//! ```text
//! ...,pred_B_T,pred_Bo_T,pred_W_M,pred_Wo_M,pred_W_A,pred_Wo_A,pred_Wo_R,pred_Wo_D
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scale factor for fixed-point temperatures and masses.
pub const SCALE: i64 = 100;

/// The eight plant signals a twin predicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Signal {
    /// Burner temperature.
    #[serde(rename = "B_T")]
    BT,
    /// Boiler temperature.
    #[serde(rename = "Bo_T")]
    BoT,
    /// Water mass left in the boiler (drains through evaporation).
    #[serde(rename = "W_M")]
    WM,
    /// Wood mass available to the burner.
    #[serde(rename = "Wo_M")]
    WoM,
    /// Low-water alarm; doubles as the plant's burner turn-off request.
    #[serde(rename = "W_A")]
    WA,
    /// Wood-starvation alarm (no delivery within the wait window).
    #[serde(rename = "Wo_A")]
    WoA,
    /// Wood delivery requested.
    #[serde(rename = "Wo_R")]
    WoR,
    /// Wood delivery completed.
    #[serde(rename = "Wo_D")]
    WoD,
}

impl Signal {
    pub const ALL: [Signal; 8] = [
        Signal::BT,
        Signal::BoT,
        Signal::WM,
        Signal::WoM,
        Signal::WA,
        Signal::WoA,
        Signal::WoR,
        Signal::WoD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Signal::BT => "B_T",
            Signal::BoT => "Bo_T",
            Signal::WM => "W_M",
            Signal::WoM => "Wo_M",
            Signal::WA => "W_A",
            Signal::WoA => "Wo_A",
            Signal::WoR => "Wo_R",
            Signal::WoD => "Wo_D",
        }
    }

    pub fn is_boolean(self) -> bool {
        matches!(self, Signal::WA | Signal::WoA | Signal::WoR | Signal::WoD)
    }
}

/// One time step's worth of the eight signals (truth or prediction).
/// Boolean signals are stored as 0/1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SignalFrame {
    pub b_t: i64,
    pub bo_t: i64,
    pub w_m: i64,
    pub wo_m: i64,
    pub w_a: bool,
    pub wo_a: bool,
    pub wo_r: bool,
    pub wo_d: bool,
}

impl SignalFrame {
    pub fn get(&self, s: Signal) -> i64 {
        match s {
            Signal::BT => self.b_t,
            Signal::BoT => self.bo_t,
            Signal::WM => self.w_m,
            Signal::WoM => self.wo_m,
            Signal::WA => self.w_a as i64,
            Signal::WoA => self.wo_a as i64,
            Signal::WoR => self.wo_r as i64,
            Signal::WoD => self.wo_d as i64,
        }
    }

    pub fn set(&mut self, s: Signal, v: i64) {
        match s {
            Signal::BT => self.b_t = v,
            Signal::BoT => self.bo_t = v,
            Signal::WM => self.w_m = v,
            Signal::WoM => self.wo_m = v,
            Signal::WA => self.w_a = v != 0,
            Signal::WoA => self.wo_a = v != 0,
            Signal::WoR => self.wo_r = v != 0,
            Signal::WoD => self.wo_d = v != 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRow {
    /// Sample time in seconds.
    pub t: i64,
    pub truth: SignalFrame,
    /// Twin predictions; `None` for plant-only traces.
    pub pred: Option<SignalFrame>,
    pub burner_on: bool,
    pub critical_alarm: bool,
    /// Environment temperature, scaled by 100.
    pub t_env: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: {msg}")]
    Malformed { line: u64, msg: String },
    #[error("empty trace: no data rows")]
    Empty,
    #[error("predictions cover {preds} rows but the trace has {rows}")]
    PredictionLength { preds: usize, rows: usize },
}

const TRUTH_COLUMNS: [&str; 12] = [
    "t",
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
];

fn full_header() -> Vec<String> {
    let mut cols: Vec<String> = TRUTH_COLUMNS.iter().map(|s| s.to_string()).collect();
    for s in Signal::ALL {
        cols.push(format!("pred_{}", s.name()));
    }
    cols
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// True when every row carries predictions. Mixed traces are rejected
    /// at construction and ingest.
    pub fn has_predictions(&self) -> bool {
        self.rows.first().map(|r| r.pred.is_some()).unwrap_or(false)
    }

    /// Ground-truth series for one signal, booleans as 0/1.
    pub fn truth_series(&self, s: Signal) -> Vec<i64> {
        self.rows.iter().map(|r| r.truth.get(s)).collect()
    }

    /// Predicted series for one signal, if predictions are present.
    pub fn pred_series(&self, s: Signal) -> Option<Vec<i64>> {
        if !self.has_predictions() {
            return None;
        }
        Some(
            self.rows
                .iter()
                .map(|r| r.pred.expect("uniform predictions").get(s))
                .collect(),
        )
    }

    pub fn burner_on_series(&self) -> Vec<i64> {
        self.rows.iter().map(|r| r.burner_on as i64).collect()
    }

    pub fn critical_alarm_series(&self) -> Vec<i64> {
        self.rows.iter().map(|r| r.critical_alarm as i64).collect()
    }

    /// Attach one prediction frame per row, replacing any existing ones.
    pub fn attach_predictions(&self, preds: &[SignalFrame]) -> Result<Trace, TraceError> {
        if preds.len() != self.rows.len() {
            return Err(TraceError::PredictionLength {
                preds: preds.len(),
                rows: self.rows.len(),
            });
        }
        let rows = self
            .rows
            .iter()
            .zip(preds)
            .map(|(r, p)| TraceRow {
                pred: Some(*p),
                ..r.clone()
            })
            .collect();
        Ok(Trace { rows })
    }

    pub fn read_csv_file(path: &Path) -> Result<Trace, TraceError> {
        let file = std::fs::File::open(path)?;
        Trace::read_csv(file)
    }

    pub fn read_csv(reader: impl Read) -> Result<Trace, TraceError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let header: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
        let with_preds = if header == TRUTH_COLUMNS {
            false
        } else if header == full_header() {
            true
        } else {
            return Err(TraceError::Header {
                expected: format!(
                    "{} (optionally + {})",
                    TRUTH_COLUMNS.join(","),
                    full_header()[TRUTH_COLUMNS.len()..].join(",")
                ),
                found: header.join(","),
            });
        };

        let mut rows = Vec::new();
        let mut prev_t: Option<i64> = None;
        for record in rdr.records() {
            let record = record?;
            let line = record
                .position()
                .map(|p| p.line())
                .unwrap_or(rows.len() as u64 + 2);
            let field = |i: usize| -> Result<i64, TraceError> {
                let raw = record.get(i).ok_or(TraceError::Malformed {
                    line,
                    msg: format!("missing column `{}`", column_name(i)),
                })?;
                raw.parse::<i64>().map_err(|_| TraceError::Malformed {
                    line,
                    msg: format!("column `{}`: `{raw}` is not an integer", column_name(i)),
                })
            };
            let flag = |i: usize| -> Result<bool, TraceError> {
                match field(i)? {
                    0 => Ok(false),
                    1 => Ok(true),
                    other => Err(TraceError::Malformed {
                        line,
                        msg: format!("column `{}`: `{other}` is not a 0/1 flag", column_name(i)),
                    }),
                }
            };

            let t = field(0)?;
            if let Some(p) = prev_t {
                if t <= p {
                    return Err(TraceError::Malformed {
                        line,
                        msg: format!("time must increase strictly: {t} after {p}"),
                    });
                }
            }
            prev_t = Some(t);

            let truth = SignalFrame {
                b_t: field(1)?,
                bo_t: field(2)?,
                w_m: field(3)?,
                wo_m: field(4)?,
                w_a: flag(5)?,
                wo_a: flag(6)?,
                wo_r: flag(7)?,
                wo_d: flag(8)?,
            };
            let burner_on = flag(9)?;
            let critical_alarm = flag(10)?;
            let t_env = field(11)?;
            let pred = if with_preds {
                Some(SignalFrame {
                    b_t: field(12)?,
                    bo_t: field(13)?,
                    w_m: field(14)?,
                    wo_m: field(15)?,
                    w_a: flag(16)?,
                    wo_a: flag(17)?,
                    wo_r: flag(18)?,
                    wo_d: flag(19)?,
                })
            } else {
                None
            };

            rows.push(TraceRow {
                t,
                truth,
                pred,
                burner_on,
                critical_alarm,
                t_env,
            });
        }

        if rows.is_empty() {
            return Err(TraceError::Empty);
        }
        Ok(Trace { rows })
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<(), TraceError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(file)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<(), TraceError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let with_preds = self.has_predictions();
        if with_preds {
            wtr.write_record(full_header())?;
        } else {
            wtr.write_record(TRUTH_COLUMNS)?;
        }
        for row in &self.rows {
            let mut rec: Vec<String> = vec![
                row.t.to_string(),
                row.truth.b_t.to_string(),
                row.truth.bo_t.to_string(),
                row.truth.w_m.to_string(),
                row.truth.wo_m.to_string(),
                (row.truth.w_a as i64).to_string(),
                (row.truth.wo_a as i64).to_string(),
                (row.truth.wo_r as i64).to_string(),
                (row.truth.wo_d as i64).to_string(),
                (row.burner_on as i64).to_string(),
                (row.critical_alarm as i64).to_string(),
                row.t_env.to_string(),
            ];
            if with_preds {
                let p = row.pred.ok_or(TraceError::PredictionLength {
                    preds: 0,
                    rows: self.rows.len(),
                })?;
                rec.extend([
                    p.b_t.to_string(),
                    p.bo_t.to_string(),
                    p.w_m.to_string(),
                    p.wo_m.to_string(),
                    (p.w_a as i64).to_string(),
                    (p.wo_a as i64).to_string(),
                    (p.wo_r as i64).to_string(),
                    (p.wo_d as i64).to_string(),
                ]);
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn column_name(i: usize) -> String {
    full_header()
        .get(i)
        .cloned()
        .unwrap_or_else(|| format!("#{i}"))
}
