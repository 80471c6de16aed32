//! Cross-validation of the symbolic zone engine against the explicit-time
//! interpreter on randomly generated closed networks.
//!
//! Every case runs the same query through both engines with the same
//! horizon; any divergence is a bug in one of them. Seeds are fixed, so a
//! failure here reproduces exactly.

use twincheck_core::verify::check::{check, reachable_keys, CheckError, CheckLimits};
use twincheck_core::verify::oracle::{explicit_check, explicit_reachable_keys};
use twincheck_core::verify::testgen::random_case;

const MAX_STATES: usize = 200_000;
const REQUIRED_CONCLUSIVE: usize = 200;

#[test]
fn symbolic_and_explicit_verdicts_agree_on_closed_networks() {
    let mut conclusive = 0usize;
    let mut seed = 0u64;
    while conclusive < REQUIRED_CONCLUSIVE {
        assert!(
            seed < 10 * REQUIRED_CONCLUSIVE as u64,
            "too many inconclusive cases: {conclusive} conclusive after {seed} seeds"
        );
        let case = random_case(seed);
        seed += 1;

        let limits = CheckLimits {
            max_states: MAX_STATES,
            horizon: Some(case.horizon),
            ..CheckLimits::default()
        };
        let symbolic = match check(&case.net, &case.query, &limits) {
            Ok(out) => out,
            Err(CheckError::Inconclusive { .. }) => continue,
            Err(e) => panic!("seed {}: symbolic engine failed: {e}", seed - 1),
        };
        let concrete = match explicit_check(&case.net, &case.query, case.horizon, MAX_STATES) {
            Ok(out) => out,
            Err(CheckError::Inconclusive { .. }) => continue,
            Err(e) => panic!("seed {}: explicit engine failed: {e}", seed - 1),
        };
        assert_eq!(
            symbolic.verdict,
            concrete.verdict,
            "seed {}: engines disagree on `{}` at horizon {}",
            seed - 1,
            case.query.text,
            case.horizon
        );
        conclusive += 1;
    }
}

#[test]
fn symbolic_and_explicit_reachable_states_coincide() {
    let mut conclusive = 0usize;
    let mut seed = 0u64;
    while conclusive < 100 {
        assert!(seed < 1000, "too many inconclusive cases");
        let case = random_case(seed);
        seed += 1;

        let limits = CheckLimits {
            max_states: MAX_STATES,
            horizon: Some(case.horizon),
            ..CheckLimits::default()
        };
        let symbolic = match reachable_keys(&case.net, &limits) {
            Ok(keys) => keys,
            Err(CheckError::Inconclusive { .. }) => continue,
            Err(e) => panic!("seed {}: symbolic exploration failed: {e}", seed - 1),
        };
        let concrete = match explicit_reachable_keys(&case.net, case.horizon, MAX_STATES) {
            Ok(keys) => keys,
            Err(CheckError::Inconclusive { .. }) => continue,
            Err(e) => panic!("seed {}: explicit exploration failed: {e}", seed - 1),
        };
        assert_eq!(
            symbolic,
            concrete,
            "seed {}: reachable discrete states differ at horizon {}",
            seed - 1,
            case.horizon
        );
        conclusive += 1;
    }
}

#[test]
fn invariance_and_reachability_are_dual() {
    let mut conclusive = 0usize;
    let mut seed = 10_000u64; // disjoint seed range from the agreement tests
    while conclusive < 100 {
        assert!(seed < 11_000, "too many inconclusive cases");
        let case = random_case(seed);
        seed += 1;

        let limits = CheckLimits {
            max_states: MAX_STATES,
            horizon: Some(case.horizon),
            ..CheckLimits::default()
        };
        let direct = match check(&case.net, &case.query, &limits) {
            Ok(out) => out,
            Err(CheckError::Inconclusive { .. }) => continue,
            Err(e) => panic!("seed {}: {e}", seed - 1),
        };
        let dual = check(&case.net, &case.query.dual(&case.net), &limits)
            .expect("dual explores the same state space");
        assert_ne!(
            direct.verdict.is_satisfied(),
            dual.verdict.is_satisfied(),
            "seed {}: `{}` and its dual agree, which is impossible",
            seed - 1,
            case.query.text
        );
        conclusive += 1;
    }
}

#[test]
fn subsumption_never_changes_a_verdict() {
    let mut conclusive = 0usize;
    let mut seed = 20_000u64;
    while conclusive < 100 {
        assert!(seed < 21_000, "too many inconclusive cases");
        let case = random_case(seed);
        seed += 1;

        let with = CheckLimits {
            max_states: MAX_STATES,
            horizon: Some(case.horizon),
            disable_subsumption: false,
        };
        let without = CheckLimits {
            disable_subsumption: true,
            ..with
        };
        let a = match check(&case.net, &case.query, &with) {
            Ok(out) => out,
            Err(CheckError::Inconclusive { .. }) => continue,
            Err(e) => panic!("seed {}: {e}", seed - 1),
        };
        let b = match check(&case.net, &case.query, &without) {
            Ok(out) => out,
            Err(CheckError::Inconclusive { .. }) => continue,
            Err(e) => panic!("seed {}: {e}", seed - 1),
        };
        assert_eq!(a.verdict, b.verdict, "seed {}: `{}`", seed - 1, case.query.text);
        // Subsumption only ever prunes states.
        assert!(a.states_explored <= b.states_explored, "seed {}", seed - 1);
        conclusive += 1;
    }
}

#[test]
fn generated_network_files_round_trip() {
    use twincheck_core::automata::{parse_network, serialize_network};
    for seed in 0..50 {
        let case = random_case(seed);
        let text = serialize_network(&case.net);
        let reparsed = parse_network(&text)
            .unwrap_or_else(|e| panic!("seed {seed}: serialised network failed to parse: {e}\n{text}"));
        assert_eq!(reparsed, case.net, "seed {seed}");
        assert_eq!(serialize_network(&reparsed), text, "seed {seed}");
    }
}

#[test]
fn exploration_is_deterministic_across_runs() {
    for seed in [3u64, 17, 91] {
        let case = random_case(seed);
        let limits = CheckLimits {
            max_states: MAX_STATES,
            horizon: Some(case.horizon),
            ..CheckLimits::default()
        };
        let a = check(&case.net, &case.query, &limits);
        let b = check(&case.net, &case.query, &limits);
        match (a, b) {
            (Ok(x), Ok(y)) => {
                assert_eq!(x.verdict, y.verdict);
                assert_eq!(x.states_explored, y.states_explored);
                assert_eq!(x.trace, y.trace);
            }
            (Err(CheckError::Inconclusive { .. }), Err(CheckError::Inconclusive { .. })) => {}
            (a, b) => panic!("nondeterministic outcome: {a:?} vs {b:?}"),
        }
    }
}
