use proptest::prelude::*;

use vanet_core::sim::{
    compare, simulate, run, run_baseline, AdversarySpec, MessageClass, Mode, PresenceSpan, ReportSpec, SimConfig,
    SimError,
};

fn short(duration_s: u64) -> SimConfig {
    SimConfig {
        duration_s,
        ..SimConfig::canonical()
    }
}

#[test]
fn identical_config_gives_identical_logs() {
    for mode in [Mode::AdversaryList, Mode::CrlBaseline] {
        let cfg = short(60).with_mode(mode);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.log.to_jsonl(), b.log.to_jsonl());
        assert_eq!(a.metrics, b.metrics);
    }
}

#[test]
fn different_seeds_change_beacon_phases() {
    let a = run(&SimConfig { seed: 1, ..short(5) }).unwrap().0;
    let b = run(&SimConfig { seed: 2, ..short(5) }).unwrap().0;
    assert_ne!(a.to_jsonl(), b.to_jsonl());
}

#[test]
fn log_is_time_ordered_and_deliveries_follow_sends() {
    let out = simulate(&short(40)).unwrap();
    assert!(out.log.is_time_ordered());
    // every receive refers to a frame sent at least one delivery delay earlier
    let mut sent = std::collections::HashMap::new();
    for r in out.log.iter() {
        if r.event == "send" {
            sent.entry(r.digest.clone().unwrap()).or_insert(r.time_ms);
        }
        if r.event == "receive" {
            let at = sent[r.digest.as_ref().unwrap()];
            assert!(r.time_ms >= at + 10, "{r:?} delivered before {at}+10");
        }
    }
}

#[test]
fn zero_adversaries_produce_no_revocation_traffic() {
    let cfg = SimConfig {
        adversaries: vec![],
        ..short(60)
    };
    let out = simulate(&cfg).unwrap();
    assert_eq!(out.metrics.accusations_sent, 0);
    assert_eq!(out.metrics.warnings_sent, 0);
    assert!(out.metrics.crl.is_empty());
    assert_eq!(out.metrics.revocation_bytes(), 0);
    assert_eq!(out.metrics.time_to_isolation_ms(), None);
}

#[test]
fn per_class_bytes_sum_to_the_total() {
    for mode in [Mode::AdversaryList, Mode::CrlBaseline] {
        let m = run(&short(40).with_mode(mode)).unwrap().1;
        let sum: u64 = MessageClass::ALL.iter().map(|c| m.bytes(*c)).sum();
        assert_eq!(sum, m.total_channel_bytes());
        assert_eq!(m.total_channel_bytes(), m.bytes(MessageClass::Data) + m.revocation_bytes());
    }
}

#[test]
fn adversary_is_ignored_everywhere_after_isolation() {
    let out = simulate(&short(120)).unwrap();
    let isolated = out.metrics.isolation[&9].isolated_ms.expect("isolated");
    let after: Vec<_> = out
        .log
        .iter()
        .filter(|r| r.event == "receive" && r.subject == Some(9) && r.time_ms > isolated)
        .collect();
    assert!(!after.is_empty());
    for r in after {
        assert_eq!(r.decision.as_deref(), Some("ignore_known_adversary"), "{r:?}");
    }
    assert_eq!(out.metrics.acceptance_after_isolation_count, 0);
}

#[test]
fn baseline_late_joiner_accepts_a_revoked_sender_until_the_next_push() {
    let cfg = SimConfig {
        mode: Mode::CrlBaseline,
        duration_s: 30,
        schedule: vec![PresenceSpan {
            vehicle: 3,
            join_s: 12.0,
            leave_s: None,
        }],
        ..SimConfig::canonical()
    };
    let out = simulate(&cfg).unwrap();
    assert!(out.metrics.acceptance_of_adversary_count > 0);
    let accepted: Vec<_> = out
        .log
        .iter()
        .filter(|r| r.agent == "vehicle:3" && r.subject == Some(9) && r.decision.as_deref() == Some("accept"))
        .collect();
    assert!(!accepted.is_empty());
    // the push at t=20 s reaches the joiner at 20.010 s
    assert!(accepted.iter().all(|r| r.time_ms < 20_010));
}

#[test]
fn baseline_with_empty_list_sends_headers_only() {
    let cfg = SimConfig {
        crl_seed_size: 0,
        duration_s: 50,
        mode: Mode::CrlBaseline,
        ..SimConfig::canonical()
    };
    let m = run(&cfg).unwrap().1;
    assert_eq!(m.bytes(MessageClass::CrlBroadcast), 5 * 62);
    let al = run(&cfg.with_mode(Mode::AdversaryList)).unwrap().1;
    assert!(compare(&al, &m).unwrap().degenerate_baseline);
}

#[test]
fn empty_roads_have_no_revocation_bytes_in_either_mode() {
    let cfg = SimConfig {
        vehicles: 0,
        crl_seed_size: 100,
        ..SimConfig::default()
    };
    let al = run(&cfg).unwrap().1;
    let crl = run_baseline(&cfg).unwrap().1;
    let report = compare(&al, &crl).unwrap();
    assert_eq!((report.al_revocation_bytes, report.crl_revocation_bytes), (0, 0));
}

#[test]
fn runs_with_different_vehicle_counts_are_incomparable() {
    let al = run(&short(5)).unwrap().1;
    let crl = run_baseline(&SimConfig { vehicles: 11, ..short(5) }).unwrap().1;
    assert!(matches!(compare(&al, &crl), Err(SimError::IncomparableRuns(_))));
}

#[test]
fn departing_adversary_is_purged_from_lists() {
    let cfg = SimConfig {
        schedule: vec![PresenceSpan {
            vehicle: 9,
            join_s: 0.0,
            leave_s: Some(40.0),
        }],
        ..short(60)
    };
    let out = simulate(&cfg).unwrap();
    assert!(out.metrics.isolation[&9].isolated_ms.is_some());
    assert!(out.final_state.adversary_lists.values().all(|al| al.is_empty()));
    assert!(!out.final_state.on_road.contains(&9));
}

#[test]
fn non_compliant_adversary_is_still_isolated() {
    let mut cfg = short(60);
    cfg.adversaries[0].compliant = false;
    let out = simulate(&cfg).unwrap();
    assert!(out.final_state.erased.is_empty());
    assert!(out.metrics.isolation[&9].isolated_ms.is_some());
    assert_eq!(out.metrics.acceptance_after_isolation_count, 0);
}

#[test]
fn two_adversaries_out_of_ten_are_both_revoked() {
    let cfg = SimConfig {
        adversaries: vec![
            AdversarySpec { id: 8, compliant: true, false_claim: 55 },
            AdversarySpec { id: 9, compliant: true, false_claim: 55 },
        ],
        ..short(60)
    };
    let out = simulate(&cfg).unwrap();
    let mut revoked: Vec<_> = out.metrics.crl.iter().map(|e| e.accused_id).collect();
    revoked.sort();
    assert_eq!(revoked, vec![8, 9]);
    assert!(out.metrics.time_to_isolation_ms().is_some());
}

#[test]
fn loss_is_seeded() {
    let cfg = SimConfig {
        loss_probability: 0.2,
        ..short(40)
    };
    let a = simulate(&cfg).unwrap();
    let b = simulate(&cfg).unwrap();
    assert!(a.metrics.lost > 0);
    assert_eq!(a.log.to_jsonl(), b.log.to_jsonl());
}

#[test]
fn crl_requests_are_answered() {
    let cfg = SimConfig {
        crl_requests: vec![vanet_core::sim::CrlRequestSpec { vehicle: 2, at_s: 30.0 }],
        ..short(40)
    };
    let out = simulate(&cfg).unwrap();
    let reply = out
        .log
        .iter()
        .find(|r| r.agent == "vehicle:2" && r.event == "crl_response")
        .expect("response delivered");
    assert_eq!(reply.decision.as_deref(), Some("entries=1"));
    assert!(out.metrics.bytes(MessageClass::CrlExchange) > 0);
}

#[test]
fn config_errors_name_the_field() {
    let cfg = SimConfig {
        report: Some(ReportSpec { category: 1, claim: 1, period_s: 0.0 }),
        ..SimConfig::default()
    };
    match run(&cfg) {
        Err(SimError::Config { field, .. }) => assert_eq!(field, "report.period_s"),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn counters_and_conservation_hold_for_random_scenarios(
        seed in any::<u64>(),
        vehicles in 3u64..12,
        loss in 0.0f64..0.3,
        baseline in any::<bool>(),
    ) {
        let cfg = SimConfig {
            seed,
            vehicles,
            duration_s: 30,
            loss_probability: loss,
            adversaries: vec![AdversarySpec { id: vehicles - 1, compliant: true, false_claim: 55 }],
            mode: if baseline { Mode::CrlBaseline } else { Mode::AdversaryList },
            ..SimConfig::canonical()
        };
        let a = simulate(&cfg).unwrap();
        prop_assert!(a.log.is_time_ordered());
        let sum: u64 = MessageClass::ALL.iter().map(|c| a.metrics.bytes(*c)).sum();
        prop_assert_eq!(sum, a.metrics.total_channel_bytes());
        if !baseline {
            prop_assert_eq!(a.metrics.acceptance_after_isolation_count, 0);
        }
        let b = simulate(&cfg).unwrap();
        prop_assert_eq!(a.log.to_jsonl(), b.log.to_jsonl());
    }
}
