use super::*;

use proptest::prelude::*;

use fixtures::subject;

fn opts(cases: usize) -> CheckOptions {
    CheckOptions {
        cases,
        ..CheckOptions::default()
    }
}

fn failing(name: &str, check: Check) -> Counterexample {
    let s = subject(name).unwrap();
    let report = run_check(check, &s, &opts(300));
    assert_eq!(report.verdict, Verdict::Fail, "{name} should fail {}", check.name());
    report.counterexample.unwrap()
}

#[test]
fn case_seeds_are_distinct_per_case() {
    assert_eq!(case_seed(0, 3), 3);
    assert_ne!(case_seed(1, 0), case_seed(2, 0));
    assert_eq!(case_seed(9, 4), case_seed(9, 4));
}

#[test]
fn check_names_parse_back() {
    for c in [Check::Eager, Check::Progress, Check::RankAndPreservation, Check::Determinism, Check::EventLoop] {
        assert_eq!(Check::parse(c.name()), Some(c));
    }
    assert_eq!(Check::parse("preservation"), Some(Check::RankAndPreservation));
    assert_eq!(Check::parse("speed"), None);
}

#[test]
fn every_registered_subject_can_be_found_by_name() {
    let names = fixtures::subject_names();
    assert!(names.len() >= 19);
    for n in &names {
        assert_eq!(&subject(n).unwrap().name, n);
    }
    assert!(subject("no_such_subject").is_none());
}

#[test]
fn well_behaved_operators_pass_every_obligation() {
    for name in ["map@U", "fold", "window@U", "zset_join", "nest@defer"] {
        let s = subject(name).unwrap();
        for check in Check::all_obligations() {
            let r = run_check(check, &s, &opts(40));
            assert!(r.passed(), "{name} failed {}: {:?}", check.name(), r.counterexample);
            assert_eq!(r.cases, 40);
        }
    }
}

#[test]
fn negative_fixtures_fail_their_property() {
    assert_eq!(failing("to_sequence_naive", Check::Eager).property, Property::EagerExecution);
    assert_eq!(failing("fold@U", Check::Progress).property, Property::OutputMaximality);
    assert_eq!(failing("stutter", Check::RankAndPreservation).property, Property::RankDescent);
    let racy = failing("racy_merge", Check::Determinism);
    assert_eq!(racy.property, Property::Determinism);
    assert!(racy.schedules.len() >= 2);
}

#[test]
fn counterexamples_replay_and_round_trip_through_json() {
    let cx = failing("racy_merge", Check::Determinism);
    let back = Counterexample::from_json(&cx.to_json()).unwrap();
    assert_eq!(back, cx);
    let s = subject(&cx.subject).unwrap();
    match replay(&s, &back, DEFAULT_MAX_CONFIGS) {
        CaseOutcome::Fail { property, .. } => assert_eq!(property, cx.property),
        other => panic!("replay did not fail: {other:?}"),
    }
}

#[test]
fn counterexample_json_requires_known_names() {
    let mut v = failing("stutter", Check::RankAndPreservation).to_json();
    v["property"] = "Speed".into();
    assert!(Counterexample::from_json(&v).is_none());
    assert!(Counterexample::from_json(&serde_json::json!({})).is_none());
}

#[test]
fn report_json_carries_the_verdict() {
    let s = subject("map").unwrap();
    let r = run_check(Check::Determinism, &s, &opts(5));
    let j = r.to_json();
    assert_eq!(j["verdict"], "Pass");
    assert_eq!(j["check"], "determinism");
    assert_eq!(j["cases"], 5);
    assert!(j["configs"].as_u64().unwrap() > 0);
    assert!(j["counterexample"].is_null());
}

#[test]
fn stopping_at_first_failure_counts_cases() {
    let r = run_check(Check::RankAndPreservation, &subject("stutter").unwrap(), &opts(300));
    assert!(r.cases <= 300);
    assert_eq!(r.counterexample.unwrap().case_seed, case_seed(0, r.cases - 1));
}

#[test]
fn settle_matches_first_choice_schedule() {
    let s = subject("tee").unwrap();
    let (cfg, _) = determinism_start(&s, 11).unwrap();
    let a = settle(&cfg).unwrap();
    let b = crate::scheduler::run_schedule(&cfg, &[], SETTLE_BUDGET).unwrap();
    assert_eq!(a, b);
    let (c, picks) = settle_with(&cfg, &mut Schedule::random(5)).unwrap();
    assert_eq!(crate::scheduler::run_schedule(&cfg, &picks, SETTLE_BUDGET).unwrap(), c);
}

#[test]
fn root_operator_names() {
    assert_eq!(root_op_name(&subject("zip@pad").unwrap()), Some("zip"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn event_loop_agrees_for_composed_subjects(seed in any::<u64>()) {
        for s in fixtures::composed_subjects().into_iter().take(4) {
            prop_assert!(!event_loop_case(&s, seed).is_fail(), "{}", s.name);
        }
    }

    #[test]
    fn cases_are_reproducible_from_their_seed(seed in any::<u64>()) {
        let s = subject("edge_join@U").unwrap();
        prop_assert_eq!(eager_case(&s, seed), eager_case(&s, seed));
        prop_assert_eq!(rank_case(&s, seed), rank_case(&s, seed));
    }
}
