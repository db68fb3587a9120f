use bqsdc::adversary::{AttackConfig, FakePolicy, Strategy, Transmission};
use bqsdc::codebook::{op_to_message, CompositeOp, GhzLabel, MessageTriple};
use bqsdc::protocol::{
    random_messages, run_session, DecoyCounts, SessionConfig, SessionTranscript, CAPACITY_BITS_PER_GROUP,
};

fn cfg(groups: usize, seed: u64) -> SessionConfig {
    SessionConfig::new(groups, seed)
}

fn with_attack(mut c: SessionConfig, target: Transmission, strategy: Strategy) -> SessionConfig {
    c.attack = Some(AttackConfig::new(target, strategy).unwrap());
    c
}

fn intercept_uniform() -> Strategy {
    Strategy::InterceptResend {
        fake: FakePolicy::Uniform,
    }
}

#[test]
fn every_initial_label_and_op_pair_round_trips_through_state_vectors() {
    let mut seed = 0;
    for p in GhzLabel::ALL {
        for a in CompositeOp::ALL {
            for b in CompositeOp::ALL {
                seed += 1;
                let c = SessionConfig {
                    initial: Some(p),
                    decoys: DecoyCounts::uniform(2),
                    ..cfg(1, seed)
                };
                let (ma, mb) = (op_to_message(a), op_to_message(b));
                let t = run_session(&c, &[ma], &[mb]).unwrap();
                assert!(!t.aborted());
                let g = &t.groups[0];
                assert_eq!(g.decoded_by_alice, Some(mb), "{p} {a} {b}");
                assert_eq!(g.decoded_by_bob, Some(ma), "{p} {a} {b}");
                assert_eq!(g.p_label, Some(p));
                assert_eq!(t.exchanged_bits(), CAPACITY_BITS_PER_GROUP);
            }
        }
    }
}

#[test]
fn long_random_session_decodes() {
    let n = 200;
    let alice = random_messages(n, 42, 0);
    let bob = random_messages(n, 42, 1);
    let t = run_session(&cfg(n, 42), &alice, &bob).unwrap();
    let to_alice: Vec<MessageTriple> = t.groups.iter().map(|g| g.decoded_by_alice.unwrap()).collect();
    let to_bob: Vec<MessageTriple> = t.groups.iter().map(|g| g.decoded_by_bob.unwrap()).collect();
    assert_eq!(to_alice, bob);
    assert_eq!(to_bob, alice);
    assert_eq!(t.exchanged_bits(), 6 * n);
    assert_eq!(t.bits_decoded_by_alice().unwrap().len(), 3 * n);
}

fn json(t: &SessionTranscript) -> String {
    serde_json::to_string(t).unwrap()
}

#[test]
fn identical_seeds_give_identical_transcripts() {
    let c = with_attack(cfg(8, 1), Transmission::SB, Strategy::entangle(0.3).unwrap());
    let m = random_messages(8, 1, 0);
    let a = run_session(&c, &m, &m).unwrap();
    let b = run_session(&c, &m, &m).unwrap();
    assert_eq!(json(&a), json(&b));
    let other = run_session(&cfg(8, 2), &m, &m).unwrap();
    assert_ne!(json(&a), json(&other));
}

#[test]
fn transcript_field_order_is_stable() {
    let t = run_session(&cfg(1, 3), &random_messages(1, 3, 0), &random_messages(1, 3, 1)).unwrap();
    let s = json(&t);
    let pos = |k: &str| s.find(&format!("\"{k}\"")).unwrap_or_else(|| panic!("{k} missing"));
    assert!(pos("config") < pos("groups") && pos("groups") < pos("checks") && pos("checks") < pos("abort"));
    let keys = [
        "n",
        "prepared_label",
        "a_op",
        "p_label",
        "b_op",
        "bell_triple",
        "announcement",
        "decoded_by_alice",
        "decoded_by_bob",
    ];
    let group = &s[pos("groups")..pos("checks")];
    let offsets: Vec<usize> = keys.iter().map(|k| group.find(&format!("\"{k}\"")).unwrap()).collect();
    assert!(offsets.windows(2).all(|w| w[0] < w[1]), "{group}");
}

#[test]
fn intercept_resend_with_64_samples_always_aborts_at_first_check() {
    for seed in 0..1_000 {
        let c = with_attack(
            SessionConfig {
                decoys: DecoyCounts::uniform(64),
                ..cfg(1, seed)
            },
            Transmission::SC,
            intercept_uniform(),
        );
        let t = run_session(&c, &[MessageTriple::from_value(5).unwrap()], &[MessageTriple::from_value(2).unwrap()]).unwrap();
        let abort = t.abort.as_ref().expect("attack must be caught");
        assert_eq!(abort.step, 2, "seed {seed}");
        assert!(t.groups[0].decoded_by_bob.is_none());
    }
}

#[test]
fn abort_probability_grows_with_sample_count() {
    let mut rates = Vec::new();
    for d in [1, 2, 4] {
        let aborted = (0..1_000)
            .filter(|&seed| {
                let c = with_attack(
                    SessionConfig {
                        decoys: DecoyCounts::uniform(d),
                        ..cfg(1, seed)
                    },
                    Transmission::SC,
                    intercept_uniform(),
                );
                let m = [MessageTriple::from_value(0).unwrap()];
                run_session(&c, &m, &m).unwrap().aborted()
            })
            .count();
        rates.push(aborted);
    }
    assert!(rates[0] < rates[1] && rates[1] < rates[2], "{rates:?}");
}

#[test]
fn attack_on_sb_leaves_other_checks_untouched() {
    for seed in 0..50 {
        let honest = SessionConfig {
            check_threshold: 0.99,
            decoys: DecoyCounts::uniform(24),
            ..cfg(3, seed)
        };
        let attacked = with_attack(honest.clone(), Transmission::SB, intercept_uniform());
        let m = random_messages(3, seed, 0);
        let a = run_session(&honest, &m, &m).unwrap();
        let b = run_session(&attacked, &m, &m).unwrap();
        assert_eq!(a.check(2), b.check(2));
        assert_eq!(a.check(5), b.check(5));
        assert_eq!(a.check(4).unwrap().errors, 0);
    }
}

#[test]
fn attack_on_sb_is_seen_at_the_second_check() {
    let c = with_attack(
        SessionConfig {
            decoys: DecoyCounts::uniform(64),
            ..cfg(2, 11)
        },
        Transmission::SB,
        Strategy::MeasureResend {
            basis: "uniform".parse().unwrap(),
        },
    );
    let m = random_messages(2, 11, 0);
    let t = run_session(&c, &m, &m).unwrap();
    assert_eq!(t.abort.unwrap().step, 4);
}

#[test]
fn attack_on_sa_is_seen_at_the_third_check() {
    let c = with_attack(
        SessionConfig {
            decoys: DecoyCounts::uniform(64),
            ..cfg(2, 12)
        },
        Transmission::SA,
        intercept_uniform(),
    );
    let m = random_messages(2, 12, 0);
    let t = run_session(&c, &m, &m).unwrap();
    assert_eq!(t.check(2).unwrap().errors, 0);
    assert_eq!(t.check(4).unwrap().errors, 0);
    assert_eq!(t.abort.unwrap().step, 5);
}

#[test]
fn entangling_sc_without_flips_still_decodes() {
    // β = 0 never flips a Z value; the even triple is re-prepared by Bob and
    // the odd triple keeps an ancilla that the swap ignores
    let c = with_attack(
        SessionConfig {
            check_threshold: 0.99,
            ..cfg(4, 5)
        },
        Transmission::SC,
        Strategy::entangle(0.0).unwrap(),
    );
    let alice = random_messages(4, 5, 0);
    let bob = random_messages(4, 5, 1);
    let t = run_session(&c, &alice, &bob).unwrap();
    assert!(!t.aborted());
    assert!(t.groups.iter().all(|g| g.bell_triple.is_some()));
}
