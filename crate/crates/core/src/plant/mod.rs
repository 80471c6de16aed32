//! Reference simulator of the wood-fired burner/boiler plant.
//!
//! The plant is a discrete-time difference-equation model sampled once per
//! second, computed entirely in scaled `i64` (centi-units: `100` = 1 °C or
//! 1 kg) so that runs are byte-identical across platforms. It produces the
//! ground truth against which twin predictions are judged, and its dynamics
//! are shaped so that fault-free traces satisfy the whole contract suite:
//!
//! * the burner tracks an equilibrium `T_env + alpha + delta·Wo_M`, so its
//!   temperature follows the wood mass trend exactly;
//! * the boiler relaxes toward the burner (`beta`) and leaks heat to the
//!   environment (`cooling_rate`), clamped just above the boiling point
//!   while water remains, so it starts falling the moment the burner drops
//!   past it;
//! * water evaporates only while the boiler is above the boiling point, and
//!   never refills;
//! * wood is re-ordered below `wo_m_min` and arrives after a fixed latency;
//!   an unserved request past `starvation_wait` raises the starvation
//!   alarms;
//! * low water raises the water alarm and turns the burner off the same
//!   step; off-burner temperatures decay toward `T_env` and never drop
//!   below it;
//! * the critical-temperature alarm fires exactly when the burner leaves
//!   its ideal band after having reached it, and a long-held alarm forces a
//!   shutdown.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::trace::{SignalFrame, Trace, TraceRow, SCALE};

/// Ideal burner operating band, scaled by 100 (130.00 °C – 160.00 °C).
pub const IDEAL_RANGE: (i64, i64) = (13_000, 16_000);

/// How far above the boiling point the clamped boiler sits while water
/// remains (0.30 °C). Strictly positive so evaporation is active at the
/// clamp, and comfortably inside the contract tolerance band.
pub const BOIL_OVERSHOOT: i64 = 30;

/// Consecutive seconds of critical alarm after which the plant controller
/// forces the burner off (5 minutes).
pub const ALARM_SHUTDOWN_HOLD: i64 = 300;

/// Scenario parameters. All temperatures and masses are scaled by 100
/// (`SCALE`); `beta` and `cooling_rate` are percentages of the remaining
/// difference applied per second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PlantParams {
    /// Wood consumed per second while the burner is on (centi-kg/s).
    pub burn_rate: i64,
    /// Burner base heat above ambient with no wood (centi-°C).
    pub alpha: i64,
    /// Boiler-to-burner coupling per second (percent).
    pub beta: i64,
    /// Burner heat gain per kilogram of wood (centi-°C per kg).
    pub delta: i64,
    /// Water evaporated per second while the boiler is above the boiling
    /// point (centi-kg/s).
    pub liquid_heat_rate: i64,
    /// Boiling point of the liquid (centi-°C).
    pub t_boil: i64,
    /// Environment temperature (centi-°C).
    pub t_env: i64,
    /// Wood mass at start (centi-kg).
    pub initial_wo_m: i64,
    /// Water mass at start (centi-kg).
    pub initial_w_m: i64,
    /// Wood added by one delivery (centi-kg).
    pub delivery_size: i64,
    /// Wood re-order threshold (centi-kg).
    pub wo_m_min: i64,
    /// Low-water threshold (centi-kg).
    pub w_m_min: i64,
    /// Off-burner decay toward `t_env` per second (percent).
    pub cooling_rate: i64,
    /// Seconds between a wood request and its delivery.
    pub delivery_latency: i64,
    /// Seconds an unserved request may stand before the starvation alarms
    /// fire.
    pub starvation_wait: i64,
}

impl Default for PlantParams {
    fn default() -> Self {
        PlantParams {
            burn_rate: 4,
            alpha: 11_400,
            beta: 20,
            delta: 35,
            liquid_heat_rate: 25,
            t_boil: 10_000,
            t_env: 1_800,
            initial_wo_m: 4_000,
            initial_w_m: 5_000,
            delivery_size: 1_200,
            wo_m_min: 2_500,
            w_m_min: 1_200,
            cooling_rate: 8,
            delivery_latency: 30,
            starvation_wait: 60,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlantError {
    #[error("parameter `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("t_boil ({t_boil}) must exceed t_env ({t_env})")]
    BoilBelowEnv { t_boil: i64, t_env: i64 },
    #[error("beta + cooling_rate must stay below 100 percent, got {0}")]
    UnstableCoupling(i64),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), PlantError> {
        let positives = [
            ("burn_rate", self.burn_rate),
            ("beta", self.beta),
            ("delta", self.delta),
            ("liquid_heat_rate", self.liquid_heat_rate),
            ("initial_wo_m", self.initial_wo_m),
            ("initial_w_m", self.initial_w_m),
            ("delivery_size", self.delivery_size),
            ("cooling_rate", self.cooling_rate),
            ("delivery_latency", self.delivery_latency),
            ("starvation_wait", self.starvation_wait),
        ];
        for (name, v) in positives {
            if v <= 0 {
                return Err(PlantError::NonPositive(name));
            }
        }
        if self.wo_m_min < 0 || self.w_m_min < 0 || self.alpha < 0 {
            return Err(PlantError::NonPositive("threshold"));
        }
        if self.t_boil <= self.t_env {
            return Err(PlantError::BoilBelowEnv {
                t_boil: self.t_boil,
                t_env: self.t_env,
            });
        }
        if self.beta + self.cooling_rate >= 100 {
            return Err(PlantError::UnstableCoupling(self.beta + self.cooling_rate));
        }
        Ok(())
    }

    /// Burner equilibrium temperature for a given wood mass.
    fn burner_equilibrium(&self, wo_m: i64) -> i64 {
        self.t_env + self.alpha + self.delta * wo_m / SCALE
    }

    /// Boiler ceiling while water remains.
    fn boil_clamp(&self) -> i64 {
        self.t_boil + BOIL_OVERSHOOT
    }
}

/// Full simulator state. The observable part of each step is recorded as a
/// trace row; the trailing fields are controller bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlantState {
    pub b_t: i64,
    pub bo_t: i64,
    pub w_m: i64,
    pub wo_m: i64,
    pub burner_on: bool,
    pub w_a: bool,
    pub wo_a: bool,
    pub wo_r: bool,
    pub wo_d: bool,
    pub critical_alarm: bool,
    /// Set the first time the burner enters the ideal band; never cleared.
    pub reached_ideal_range: bool,
    /// Set the first time the boiler reaches the boiling point; never
    /// cleared.
    pub reached_boiling_state: bool,
    /// Seconds until the pending wood delivery arrives (0 = none pending).
    pub delivery_countdown: i64,
    /// Consecutive seconds the current wood request has gone unserved.
    pub request_age: i64,
    /// Consecutive seconds the critical alarm has been active.
    pub alarm_run: i64,
}

fn in_ideal(b_t: i64) -> bool {
    (IDEAL_RANGE.0..=IDEAL_RANGE.1).contains(&b_t)
}

/// State at time zero: the plant starts pre-heated, with the burner at its
/// wood-dependent equilibrium and the boiler already boiling (or at its
/// unclamped equilibrium if the parameters cannot sustain a boil).
pub fn initial_state(p: &PlantParams) -> PlantState {
    let b_t = p.burner_equilibrium(p.initial_wo_m);
    let bo_eq = (p.beta * b_t + p.cooling_rate * p.t_env) / (p.beta + p.cooling_rate);
    let bo_t = bo_eq.min(p.boil_clamp()).max(p.t_env);
    let low_water = p.initial_w_m < p.w_m_min;
    let reached_ideal = in_ideal(b_t);
    let critical_alarm = reached_ideal && !in_ideal(b_t);
    PlantState {
        b_t,
        bo_t,
        w_m: p.initial_w_m,
        wo_m: p.initial_wo_m,
        burner_on: !low_water,
        w_a: low_water,
        wo_a: false,
        wo_r: p.initial_wo_m < p.wo_m_min,
        wo_d: false,
        critical_alarm,
        reached_ideal_range: reached_ideal,
        reached_boiling_state: bo_t >= p.t_boil,
        delivery_countdown: if p.initial_wo_m < p.wo_m_min {
            p.delivery_latency
        } else {
            0
        },
        request_age: 0,
        alarm_run: if critical_alarm { 1 } else { 0 },
    }
}

/// Advance the plant by one second.
pub fn step(s: &PlantState, p: &PlantParams) -> PlantState {
    let mut n = *s;

    // Wood burns while the burner is lit.
    if n.burner_on {
        n.wo_m = (n.wo_m - p.burn_rate).max(0);
    }

    // A pending delivery gets one second closer; on arrival the wood lands
    // in the same step and the delivered flag pulses for exactly one row.
    n.wo_d = false;
    if n.delivery_countdown > 0 {
        n.delivery_countdown -= 1;
        if n.delivery_countdown == 0 {
            n.wo_m += p.delivery_size;
            n.wo_d = true;
        }
    }

    // Re-order wood below the threshold; one request in flight at a time.
    n.wo_r = n.wo_m < p.wo_m_min;
    if n.wo_r && n.delivery_countdown == 0 && !n.wo_d {
        n.delivery_countdown = p.delivery_latency;
    }
    if n.wo_r && !n.wo_d {
        n.request_age += 1;
    } else {
        n.request_age = 0;
    }
    // An unserved request past the wait window starves the burner. The
    // water alarm doubles as the plant-wide trouble signal here as well.
    let starved = n.request_age > p.starvation_wait;
    n.wo_a = starved;

    // Evaporation while the boiler runs above the boiling point. Water is
    // never replenished.
    if n.bo_t > p.t_boil {
        n.w_m = (n.w_m - p.liquid_heat_rate).max(0);
    }

    // Low water raises the alarm and turns the burner off immediately.
    if n.w_m < p.w_m_min {
        n.w_a = true;
        n.burner_on = false;
    } else {
        n.w_a = starved;
    }

    // Burner: pinned to its equilibrium while lit, first-order decay toward
    // the environment when off.
    if n.burner_on {
        n.b_t = p.burner_equilibrium(n.wo_m);
    } else {
        n.b_t = (n.b_t - p.cooling_rate * (n.b_t - p.t_env) / 100).max(p.t_env);
    }

    // Boiler: relaxes toward the burner and leaks heat to the environment,
    // capped just above boiling while any water remains.
    let relaxed =
        n.bo_t + p.beta * (n.b_t - n.bo_t) / 100 - p.cooling_rate * (n.bo_t - p.t_env) / 100;
    n.bo_t = if n.w_m > 0 {
        relaxed.min(p.boil_clamp())
    } else {
        relaxed
    };
    n.bo_t = n.bo_t.max(p.t_env);

    // Latches, critical alarm, and the long-alarm forced shutdown.
    n.reached_ideal_range |= in_ideal(n.b_t);
    n.reached_boiling_state |= n.bo_t >= p.t_boil;
    n.critical_alarm = n.reached_ideal_range && !in_ideal(n.b_t);
    n.alarm_run = if n.critical_alarm { n.alarm_run + 1 } else { 0 };
    if n.alarm_run >= ALARM_SHUTDOWN_HOLD {
        n.burner_on = false;
    }

    n
}

/// Deterministic scenario parameters drawn from documented ranges.
///
/// Two parameters are derived rather than sampled directly: `alpha` from a
/// sampled mid-band target temperature, so the burner equilibrium stays
/// inside the ideal band for every wood mass the run can visit, and `beta`
/// from the sampled cooling rate, so the boiler equilibrium stays above the
/// boiling clamp while the burner runs.
pub fn random_scenario(seed: u64) -> PlantParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_env = rng.gen_range(1_500..=2_200);
    let delta = rng.gen_range(25..=45);
    let burn_rate = rng.gen_range(2..=6);
    let liquid_heat_rate = rng.gen_range(15..=35);
    // The floor of this range matters: off-burner temperatures must sweep
    // through the contract trend band (epsilon around zero slope) in fewer
    // consecutive rows than the contracts' mismatch lag tolerates, or a
    // fault-free cooldown could read as a burner/boiler trend mismatch.
    // At 7 %/s the slope near the band moves ~4 centi-degrees per row,
    // crossing the band plus sensor jitter in at most two rows.
    let cooling_rate = rng.gen_range(7..=10);
    let wo_m_min = rng.gen_range(2_200..=2_800);
    let w_m_min = rng.gen_range(1_000..=1_500);
    let initial_wo_m = rng.gen_range(3_000..=4_500);
    let initial_w_m = rng.gen_range(3_000..=6_000);
    let delivery_size = rng.gen_range(1_000..=1_500);
    let delivery_latency = rng.gen_range(20..=40);
    let t_boil = rng.gen_range(9_600..=10_400);

    // Anchor the burner equilibrium to the middle of the ideal band at the
    // midpoint of the wood masses this scenario can visit.
    let t_mid = rng.gen_range(14_200..=14_800);
    let wo_low = wo_m_min - 300;
    let wo_high = initial_wo_m.max(wo_m_min + delivery_size);
    let wo_mid = (wo_low + wo_high) / 2;
    let alpha = t_mid - t_env - delta * wo_mid / SCALE;

    // Derive the burner-to-boiler coupling so the boiler equilibrium sits
    // above the boiling clamp (with 1 °C to spare) even at the lowest wood
    // mass the run can visit. Otherwise the boiler would hover below the
    // boiling point, where wood-delivery jumps move the burner trend while
    // the boiler barely responds.
    let clamp = t_boil + BOIL_OVERSHOOT;
    let b_low = t_env + alpha + delta * wo_low / SCALE;
    let margin = 100;
    let beta_floor =
        (cooling_rate * (clamp + margin - t_env) + (b_low - clamp - margin) - 1)
            / (b_low - clamp - margin);
    let beta = beta_floor + rng.gen_range(2..=10);

    PlantParams {
        burn_rate,
        alpha,
        beta,
        delta,
        liquid_heat_rate,
        t_boil,
        t_env,
        initial_wo_m,
        initial_w_m,
        delivery_size,
        wo_m_min,
        w_m_min,
        cooling_rate,
        delivery_latency,
        starvation_wait: 60,
    }
}

fn record(s: &PlantState, t: i64, p: &PlantParams, rng: &mut ChaCha8Rng) -> TraceRow {
    // Reported temperatures carry +/-0.01 degree sensor jitter; the floor at
    // t_env is re-applied so reported values still respect it.
    let b_d: i64 = rng.gen_range(-1..=1);
    let bo_d: i64 = rng.gen_range(-1..=1);
    TraceRow {
        t,
        truth: SignalFrame {
            b_t: (s.b_t + b_d).max(p.t_env),
            bo_t: (s.bo_t + bo_d).max(p.t_env),
            w_m: s.w_m,
            wo_m: s.wo_m,
            w_a: s.w_a,
            wo_a: s.wo_a,
            wo_r: s.wo_r,
            wo_d: s.wo_d,
        },
        pred: None,
        burner_on: s.burner_on,
        critical_alarm: s.critical_alarm,
        t_env: p.t_env,
    }
}

/// Simulate `horizon` rows (row 0 is the initial state). The seed drives
/// only the reported-temperature jitter; identical `(params, horizon,
/// seed)` produce byte-identical traces.
pub fn run(p: &PlantParams, horizon: usize, seed: u64) -> Result<Trace, PlantError> {
    p.validate()?;
    if horizon == 0 {
        return Err(PlantError::ZeroHorizon);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x74_77_69_6e));
    let mut state = initial_state(p);
    let mut rows = Vec::with_capacity(horizon);
    rows.push(record(&state, 0, p, &mut rng));
    for t in 1..horizon as i64 {
        state = step(&state, p);
        rows.push(record(&state, t, p, &mut rng));
    }
    Ok(Trace { rows })
}
