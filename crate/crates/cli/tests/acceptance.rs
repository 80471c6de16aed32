//! Release gate for the whole stack: ten scripted checks covering the
//! symbolic engine, the contract suite, the plant, the twin layer and the
//! fault-injection reproductions. Each check prints exactly one
//! `ACCEPT #k PASS/FAIL` line; the process exits non-zero if any fail.
//!
//! Expected values and tolerances are pinned here, in code. The whole run
//! is required to finish inside five minutes.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use twincheck_core::automata::parse_network;
use twincheck_core::contracts::{
    build_contract, check_dual, componentwise_leq, direct_oracle, stabilize,
    testgen as contract_gen, verify_contract, ContractId, ContractParams, PreparedTrace,
};
use twincheck_core::plant::{self, PlantParams};
use twincheck_core::trace::{Signal, SignalFrame, Trace, TraceRow};
use twincheck_core::twin::{
    anti_monotone_demo, monotone_demo, FaultKind, FaultSpec, Surrogate, TwinKnobs,
};
use twincheck_core::verify::{
    check, explicit_check, parse_query, testgen::random_case, CheckLimits, Verdict,
};

fn main() {
    // Assertion failures are reported through the one-line verdicts below;
    // keep the default hook from also dumping its own message.
    panic::set_hook(Box::new(|_| {}));

    let checks: [(&str, fn()); 10] = [
        ("lamp reachability with witness, slow-user variant unreachable", check_01_lamp),
        ("stuck boiler prediction breaks MC1 inside the fault window", check_02_stuck_mc1),
        ("noisy wood-request prediction breaks FC3", check_03_noisy_fc3),
        ("noisy water-alarm prediction breaks FC9 and its dual finds a witness", check_04_noisy_fc9),
        ("invariance/reachability duality on random networks", check_05_duality),
        ("symbolic checker agrees with the explicit-state oracle", check_06_engine_agreement),
        ("contract automata agree with the direct trace oracles", check_07_contract_agreement),
        ("random fault-free plant runs satisfy the whole suite", check_08_plant_compliance),
        ("stabilization: constants, window bounds, unit-window shift", check_09_stabilize_properties),
        ("monotone surrogate passes, anti-monotone surrogate fails", check_10_monotonicity),
    ];

    let suite_start = Instant::now();
    let mut failures = 0usize;
    for (i, (what, run)) in checks.iter().enumerate() {
        let k = i + 1;
        let start = Instant::now();
        match panic::catch_unwind(AssertUnwindSafe(run)) {
            Ok(()) => {
                println!("ACCEPT #{k:<2} PASS  ({:>6} ms)  {what}", start.elapsed().as_millis());
            }
            Err(payload) => {
                failures += 1;
                let msg = payload
                    .downcast_ref::<String>()
                    .map(String::as_str)
                    .or_else(|| payload.downcast_ref::<&str>().copied())
                    .unwrap_or("panic without message");
                println!("ACCEPT #{k:<2} FAIL  ({:>6} ms)  {what}: {msg}", start.elapsed().as_millis());
            }
        }
    }

    let total = suite_start.elapsed();
    println!(
        "acceptance: {}/{} passed in {:.1} s",
        checks.len() - failures,
        checks.len(),
        total.as_secs_f64()
    );
    if total > Duration::from_secs(300) {
        println!("acceptance: exceeded the five-minute budget");
        std::process::exit(1);
    }
    if failures > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// #1 — lamp golden check
// ---------------------------------------------------------------------------

/// Press once to turn the lamp on low; press again within 5 time units for
/// bright. The eager user may press at any moment.
const LAMP_EAGER: &str = "
network lamp {
  channel press
  clock y
  template Lamp {
    location off
    location low
    location bright
    init off
    edge off -> low { sync press?; update y := 0 }
    edge low -> bright { guard y < 5; sync press? }
    edge low -> off { guard y >= 5; sync press? }
    edge bright -> off { sync press? }
  }
  template User {
    location idle
    init idle
    edge idle -> idle { sync press! }
  }
}
";

/// Same lamp, but this user always rests at least 5 time units between the
/// press that turns the lamp on and the next one.
const LAMP_SLOW: &str = "
network lamp_slow {
  channel press
  clock y
  clock x
  template Lamp {
    location off
    location low
    location bright
    init off
    edge off -> low { sync press?; update y := 0 }
    edge low -> bright { guard y < 5; sync press? }
    edge low -> off { guard y >= 5; sync press? }
    edge bright -> off { sync press? }
  }
  template User {
    location idle
    location waiting
    init idle
    edge idle -> waiting { sync press!; update x := 0 }
    edge waiting -> idle { guard x >= 5; sync press! }
  }
}
";

fn check_01_lamp() {
    let start = Instant::now();

    let net = parse_network(LAMP_EAGER).expect("eager lamp parses");
    let query = parse_query("E<> Lamp.bright", &net).expect("query parses");
    let outcome = check(&net, &query, &CheckLimits::default()).expect("check runs");
    assert_eq!(outcome.verdict, Verdict::Satisfied, "two quick presses reach bright");

    let witness = outcome.trace.expect("reachability verdicts carry a witness");
    let presses = witness
        .steps
        .iter()
        .filter(|s| s.action.starts_with("press!"))
        .count();
    assert_eq!(
        presses, 2,
        "the shortest witness is exactly two presses, got actions {:?}",
        witness.steps.iter().map(|s| &s.action).collect::<Vec<_>>()
    );
    let end = witness.steps.last().expect("non-empty witness");
    assert!(
        end.locations.iter().any(|l| l == "Lamp.bright"),
        "witness ends in Lamp.bright, got {:?}",
        end.locations
    );

    let slow = parse_network(LAMP_SLOW).expect("slow lamp parses");
    let query = parse_query("E<> Lamp.bright", &slow).expect("query parses");
    let outcome = check(&slow, &query, &CheckLimits::default()).expect("check runs");
    assert_eq!(
        outcome.verdict,
        Verdict::Violated,
        "a user who rests 5 units between presses can never reach bright"
    );

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "lamp checks took {elapsed:?}, budget is 1 s");
}

// ---------------------------------------------------------------------------
// #2–#4 — fault-injection reproductions on the default scenario
// ---------------------------------------------------------------------------

const REPRO_HORIZON: usize = 420;
const REPRO_SEED: u64 = 1;

fn repro_setup() -> (PlantParams, ContractParams, Trace) {
    let p = PlantParams::default();
    let params = ContractParams::for_plant(&p);
    let clean = Surrogate::Identity
        .rollout(&p, REPRO_HORIZON, REPRO_SEED)
        .expect("clean rollout");
    (p, params, clean)
}

fn verdict_on(trace: &Trace, params: &ContractParams, id: ContractId) -> (bool, Option<usize>) {
    let prep = PreparedTrace::from_trace(trace, params).expect("prepare");
    let contract = build_contract(id, &prep, params).expect("build");
    let outcome = verify_contract(&contract, &CheckLimits::default()).expect("verify");
    (outcome.verdict.is_satisfied(), outcome.violation.map(|v| v.row))
}

fn check_02_stuck_mc1() {
    let (p, params, clean) = repro_setup();

    let (clean_ok, _) = verdict_on(&clean, &params, ContractId::Mc1);
    assert!(clean_ok, "the identity twin keeps MC1 on the default scenario");

    // The scenario runs the plant dry: the water alarm stops the burner and
    // the boiler drops out of the boiling band. Freeze the predicted boiler
    // temperature just after that drop while the real temperatures keep
    // falling.
    let fall = clean
        .rows
        .iter()
        .position(|r| r.truth.bo_t < p.t_boil)
        .expect("the boiler leaves the boiling band within the horizon") as i64;
    let (from, to) = (fall + 3, fall + 40);
    assert!(
        clean.rows[from as usize].truth.b_t > clean.rows[to as usize].truth.b_t,
        "the burner must be cooling across the stuck window"
    );

    let twin = Surrogate::Identity
        .inject_fault(FaultSpec {
            signal: Signal::BoT,
            kind: FaultKind::StuckOutput,
            t_from: from,
            t_to: to,
        })
        .expect("valid fault");
    let faulted = twin.rollout(&p, REPRO_HORIZON, REPRO_SEED).expect("faulted rollout");

    let (ok, row) = verdict_on(&faulted, &params, ContractId::Mc1);
    assert!(!ok, "a stuck boiler prediction against falling temperatures must break MC1");
    let row = row.expect("violated verdicts carry a row") as i64;
    assert!(
        (from..=to).contains(&row),
        "violation row {row} must fall inside the stuck window [{from}, {to}]"
    );
}

fn check_03_noisy_fc3() {
    let (p, params, clean) = repro_setup();

    let (clean_ok, _) = verdict_on(&clean, &params, ContractId::Fc3);
    assert!(clean_ok, "the identity twin keeps FC3 on the default scenario");

    let (from, to) = (5, 45);
    let twin = Surrogate::Identity
        .inject_fault(FaultSpec {
            signal: Signal::WoR,
            kind: FaultKind::AdditiveNoise { amplitude: 400, seed: 0 },
            t_from: from,
            t_to: to,
        })
        .expect("valid fault");
    let faulted = twin.rollout(&p, REPRO_HORIZON, REPRO_SEED).expect("faulted rollout");

    let (ok, row) = verdict_on(&faulted, &params, ContractId::Fc3);
    assert!(!ok, "phantom wood requests while wood is plentiful must break FC3");
    let row = row.expect("violated verdicts carry a row");
    assert!(
        (from..=to).contains(&(row as i64)),
        "violation row {row} must fall inside the noise window [{from}, {to}]"
    );
    assert!(
        faulted.rows[row].truth.wo_m > p.wo_m_min,
        "the wood store is above its minimum at the violation row"
    );
}

fn check_04_noisy_fc9() {
    let (p, params, clean) = repro_setup();

    let (clean_ok, _) = verdict_on(&clean, &params, ContractId::Fc9);
    assert!(clean_ok, "the identity twin keeps FC9 on the default scenario");

    let (from, to) = (5, 45);
    let twin = Surrogate::Identity
        .inject_fault(FaultSpec {
            signal: Signal::WA,
            kind: FaultKind::AdditiveNoise { amplitude: 400, seed: 0 },
            t_from: from,
            t_to: to,
        })
        .expect("valid fault");
    let faulted = twin.rollout(&p, REPRO_HORIZON, REPRO_SEED).expect("faulted rollout");

    let prep = PreparedTrace::from_trace(&faulted, &params).expect("prepare");
    let contract = build_contract(ContractId::Fc9, &prep, &params).expect("build");
    assert!(contract.queries[0].text.starts_with("A[]"), "{}", contract.queries[0].text);
    assert!(contract.queries[1].text.starts_with("E<>"), "{}", contract.queries[1].text);

    let outcome = verify_contract(&contract, &CheckLimits::default()).expect("verify");
    assert!(
        !outcome.verdict.is_satisfied(),
        "a phantom water alarm with water above minimum must break FC9"
    );
    let row = outcome.violation.expect("violated verdicts carry a row").row;
    assert!(
        (from..=to).contains(&(row as i64)),
        "violation row {row} must fall inside the noise window [{from}, {to}]"
    );
    assert!(
        faulted.rows[row].truth.w_m > p.w_m_min,
        "the water level is above its minimum at the violation row"
    );

    // The existential dual of the safety query must find the same situation
    // as a witness.
    let dual = check_dual(&contract, &CheckLimits::default()).expect("dual check");
    assert_eq!(dual.verdict, Verdict::Satisfied, "the dual query reaches the flagged state");
    assert!(dual.trace.is_some(), "satisfied reachability verdicts carry a witness");
}

// ---------------------------------------------------------------------------
// #5–#6 — engine-level randomized checks
// ---------------------------------------------------------------------------

fn check_05_duality() {
    for seed in 0..120u64 {
        let case = random_case(seed);
        let limits = CheckLimits {
            horizon: Some(case.horizon),
            ..CheckLimits::default()
        };
        let direct = check(&case.net, &case.query, &limits).expect("direct check");
        let dual = check(&case.net, &case.query.dual(&case.net), &limits).expect("dual check");
        assert_eq!(
            direct.verdict.is_satisfied(),
            !dual.verdict.is_satisfied(),
            "a query and its dual must have complementary verdicts (seed {seed})"
        );
    }
}

fn check_06_engine_agreement() {
    for seed in 1_000..1_220u64 {
        let case = random_case(seed);
        let limits = CheckLimits {
            horizon: Some(case.horizon),
            ..CheckLimits::default()
        };
        let symbolic = check(&case.net, &case.query, &limits).expect("symbolic check");
        let explicit = explicit_check(&case.net, &case.query, case.horizon, 1_000_000)
            .expect("explicit check");
        assert_eq!(
            symbolic.verdict, explicit.verdict,
            "zone-based and explicit-state verdicts must agree (seed {seed})"
        );
    }
}

// ---------------------------------------------------------------------------
// #7 — contract automata vs. direct trace oracles
// ---------------------------------------------------------------------------

fn check_07_contract_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acc_e701);
    let mut cases = 0usize;
    for trace_no in 0..1_000 {
        let params = contract_gen::random_params(&mut rng);
        let trace = contract_gen::random_trace(&mut rng, 200);
        let prep = PreparedTrace::from_trace(&trace, &params).expect("prepare");
        for id in ContractId::ALL {
            let contract = build_contract(id, &prep, &params).expect("build");
            let outcome = verify_contract(&contract, &CheckLimits::default()).expect("verify");
            let oracle = direct_oracle(id, &prep, &params);
            assert_eq!(
                outcome.verdict.is_satisfied(),
                oracle.is_none(),
                "verdict disagrees with the oracle for {id} on trace {trace_no}"
            );
            assert_eq!(
                outcome.violation.map(|v| v.row),
                oracle,
                "first-violation row disagrees with the oracle for {id} on trace {trace_no}"
            );
            cases += 1;
        }
    }
    assert_eq!(cases, 1_000 * ContractId::ALL.len());
}

// ---------------------------------------------------------------------------
// #8 — plant compliance
// ---------------------------------------------------------------------------

fn check_08_plant_compliance() {
    for seed in 0..100u64 {
        let p = plant::random_scenario(seed);
        let trace = plant::run(&p, 300, seed).expect("plant run");
        let params = ContractParams::for_plant(&p);
        let prep = PreparedTrace::from_trace(&trace, &params).expect("prepare");
        for id in ContractId::ALL {
            let contract = build_contract(id, &prep, &params).expect("build");
            let outcome = verify_contract(&contract, &CheckLimits::default()).expect("verify");
            assert!(
                outcome.verdict.is_satisfied(),
                "fault-free scenario seed {seed} violates {id} at {:?}",
                outcome.violation
            );
        }
    }
}

// ---------------------------------------------------------------------------
// #9 — stabilization properties
// ---------------------------------------------------------------------------

fn check_09_stabilize_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acc_e709);
    for _ in 0..10_000 {
        let len = rng.gen_range(1..=60);
        let m = rng.gen_range(1..=len);
        let series: Vec<i64> = (0..len).map(|_| rng.gen_range(-10_000..=10_000)).collect();

        // Every stabilized value stays inside the min/max of its window.
        let out = stabilize(&series, m).expect("window fits");
        assert_eq!(out.len(), len - m);
        for (k, &v) in out.iter().enumerate() {
            let window = &series[k..k + m];
            let lo = *window.iter().min().unwrap();
            let hi = *window.iter().max().unwrap();
            assert!(
                (lo..=hi).contains(&v),
                "stabilized value {v} outside window bounds [{lo}, {hi}]"
            );
        }

        // A window of one is the series shifted by one row.
        let shifted = stabilize(&series, 1).expect("unit window fits");
        assert_eq!(shifted, series[..len - 1], "unit-window stabilization is a one-row shift");

        // Constant series are fixed points.
        let c = rng.gen_range(-10_000..=10_000);
        let constant = vec![c; len];
        let out = stabilize(&constant, m).expect("window fits");
        assert!(out.iter().all(|&v| v == c), "constants must stabilize to themselves");
    }
}

// ---------------------------------------------------------------------------
// #10 — monotonicity brute force
// ---------------------------------------------------------------------------

/// One prediction step of `twin` on an input frame.
fn predict_frame(twin: &Surrogate, input: SignalFrame, knobs: &TwinKnobs) -> Vec<i64> {
    let row = TraceRow {
        t: 0,
        truth: input,
        pred: None,
        burner_on: true,
        critical_alarm: false,
        t_env: 1_800,
    };
    let out = twin.predict(Some(&row), &row, knobs);
    Signal::ALL.iter().map(|&s| out.get(s)).collect()
}

fn check_10_monotonicity() {
    let knobs = TwinKnobs::from(&PlantParams::default());
    let monotone = monotone_demo();
    let anti = anti_monotone_demo();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acc_e710);
    let mut anti_failures = 0usize;

    for pair in 0..10_000 {
        // Draw a lower frame, then raise each component by a nonnegative
        // amount to get an upper frame.
        let mut lower = SignalFrame::default();
        let mut upper = SignalFrame::default();
        for s in Signal::ALL {
            if s.is_boolean() {
                let a = rng.gen_bool(0.5) as i64;
                let b = if a == 1 { 1 } else { rng.gen_bool(0.5) as i64 };
                lower.set(s, a);
                upper.set(s, b);
            } else {
                let a = rng.gen_range(1_800..=20_000);
                lower.set(s, a);
                upper.set(s, a + rng.gen_range(0..=2_000));
            }
        }
        let lo_in: Vec<i64> = Signal::ALL.iter().map(|&s| lower.get(s)).collect();
        let hi_in: Vec<i64> = Signal::ALL.iter().map(|&s| upper.get(s)).collect();
        assert!(componentwise_leq(&lo_in, &hi_in).unwrap());

        let lo_out = predict_frame(&monotone, lower, &knobs);
        let hi_out = predict_frame(&monotone, upper, &knobs);
        assert!(
            componentwise_leq(&lo_out, &hi_out).expect("equal lengths"),
            "monotone surrogate reordered outputs on pair {pair}: {lo_out:?} vs {hi_out:?}"
        );

        let lo_out = predict_frame(&anti, lower, &knobs);
        let hi_out = predict_frame(&anti, upper, &knobs);
        if !componentwise_leq(&lo_out, &hi_out).expect("equal lengths") {
            anti_failures += 1;
        }
    }

    assert!(
        anti_failures > 0,
        "the anti-monotone surrogate must fail the componentwise check at least once"
    );
}
