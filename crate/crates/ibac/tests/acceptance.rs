//! The acceptance gate: one test per shipping criterion, each printing a
//! PASS/FAIL line (run with `-- --nocapture` to see them). Every numeric
//! value here is frozen; a drift in any of them is a regression, not a
//! reason to update the test.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::Rng;

use common::{criterion, mi_schema, seeded_rng};
use ibac::dominance::{self, cross_check, subset_oracle, NameSet};
use ibac::hierarchy::{flatten, graph_dominates, HierarchyGraph};
use ibac::process::{
    check_write_via_process, Decision, DenyReason, ProcessTuple, TupleRegistry,
};
use ibac::{bench, codec, demo, LabelSet, PolicySchema, Scheme, Token, Transform};

fn names(items: &[&str]) -> NameSet {
    items.iter().map(|s| s.to_string()).collect()
}

fn expand(schema: &PolicySchema, level: Option<&str>, marks: &[&str]) -> NameSet {
    schema
        .expand_subject(&LabelSet::of(level, marks))
        .unwrap()
        .included()
        .clone()
}

#[test]
fn criterion_1_worked_example_fidelity() {
    criterion(1, "worked-example-fidelity", || {
        let start = Instant::now();
        let schema = mi_schema();
        let expsum = Scheme::expsum_of(&schema);

        let user = expand(&schema, Some("Secret"), &["MI5", "MI6"]);
        let user_names: Vec<&str> = user.iter().map(String::as_str).collect();
        let user_e = codec::encode(&schema, expsum, user_names.iter().copied()).unwrap();
        let user_p = codec::encode(&schema, Scheme::PrimeProd, user_names.iter().copied()).unwrap();
        assert_eq!(user_e.to_string(), "e3:1011");
        assert_eq!(user_p.to_string(), "p:124355");

        let object1 = ["Secret", "MI5"];
        let object2 = ["Secret", "GCHQ", "MI6"];
        let o1_e = codec::encode(&schema, expsum, object1).unwrap();
        let o1_p = codec::encode(&schema, Scheme::PrimeProd, object1).unwrap();
        let o2_e = codec::encode(&schema, expsum, object2).unwrap();
        let o2_p = codec::encode(&schema, Scheme::PrimeProd, object2).unwrap();
        assert_eq!(o1_e.to_string(), "e3:246");
        assert_eq!(o1_p.to_string(), "p:85");
        assert_eq!(o2_e.to_string(), "e3:813");
        assert_eq!(o2_p.to_string(), "p:1235");

        // one modulo decides: 124355 mod 85 == 0, so object1 is readable
        assert_eq!(user_p.value() % o1_p.value(), BigUint::ZERO);
        assert!(dominance::prime_modulo(&schema, &user_p, &o1_p)
            .unwrap()
            .holds());
        assert!(!dominance::prime_modulo(&schema, &user_p, &o2_p)
            .unwrap()
            .holds());
        assert!(dominance::expsum_walk(&schema, &user_e, &o1_e).unwrap().holds());
        assert!(!dominance::expsum_walk(&schema, &user_e, &o2_e).unwrap().holds());

        // token maintenance: dropping MI5 subtracts 3^5 / divides by 17
        let trimmed_e = codec::remove_label(&schema, &user_e, "MI5").unwrap();
        let trimmed_p = codec::remove_label(&schema, &user_p, "MI5").unwrap();
        assert_eq!(trimmed_e.to_string(), "e3:768");
        assert_eq!(trimmed_p.to_string(), "p:7315");

        // transit obfuscation under foreign prime 31
        let obf = codec::obfuscate(&schema, &user_p, Transform::SubtractPrime, 31).unwrap();
        assert_eq!(obf.value.to_string(), "124324");
        assert_eq!(codec::deobfuscate(&schema, &obf, 31).unwrap(), user_p);

        // index extraction, largest power first
        assert_eq!(
            codec::decode_indices(o1_e.value(), 3).unwrap(),
            vec![5, 1]
        );

        assert!(start.elapsed() < Duration::from_secs(1), "criterion overran");
    });
}

/// Subsets of `labels` selected by mask bit positions.
fn mask_set(labels: &[String], mask: u32) -> NameSet {
    labels
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, l)| l.clone())
        .collect()
}

fn assert_unanimous(schema: &PolicySchema, subject: &NameSet, object: &NameSet) {
    let cross = cross_check(schema, subject, object).unwrap();
    assert!(
        !cross.disagreement,
        "routes split on subject {subject:?} object {object:?} under {}: {:?}",
        schema.id(),
        cross.results
    );
}

#[test]
fn criterion_2_five_way_dominance_equivalence() {
    criterion(2, "five-way-dominance-equivalence", || {
        let start = Instant::now();

        // exhaustive: every (subject, object) subset pair on 1..=7 labels
        for n in 1..=7u32 {
            let schema = equivalence_schema("exh", n as usize, 3);
            let labels: Vec<String> = schema.label_order().map(str::to_string).collect();
            for s_mask in 0..1u32 << n {
                let subject = mask_set(&labels, s_mask);
                for o_mask in 0..1u32 << n {
                    assert_unanimous(&schema, &subject, &mask_set(&labels, o_mask));
                }
            }
        }

        // 8..=10 labels: every subject against stratified objects
        for n in 8..=10u32 {
            let schema = equivalence_schema("strat", n as usize, 3);
            let labels: Vec<String> = schema.label_order().map(str::to_string).collect();
            let full = (1u32 << n) - 1;
            for s_mask in 0..=full {
                let subject = mask_set(&labels, s_mask);
                let low = s_mask & s_mask.wrapping_neg(); // lowest set bit
                let objects = [
                    0,
                    full,
                    s_mask,
                    s_mask & !low,
                    s_mask | (low << 1 | 1),
                    0x55555555 & full,
                    full ^ s_mask,
                    s_mask >> 1,
                ];
                for o_mask in objects {
                    assert_unanimous(&schema, &subject, &mask_set(&labels, o_mask & full));
                }
            }
        }

        // randomized: 12 schemas of 11..=30 labels over several bases
        let mut rng = seeded_rng(2);
        let mut random_pairs = 0u32;
        for schema_idx in 0..12 {
            let size = rng.random_range(11..=30usize);
            let base = [2u64, 3, 5, 10][schema_idx % 4];
            let schema = equivalence_schema(&format!("rand{schema_idx}"), size, base);
            let labels: Vec<String> = schema.label_order().map(str::to_string).collect();
            for _ in 0..900 {
                let subject: NameSet = labels
                    .iter()
                    .filter(|_| rng.random_bool(0.5))
                    .cloned()
                    .collect();
                let object: NameSet = labels
                    .iter()
                    .filter(|_| rng.random_bool(0.3))
                    .cloned()
                    .collect();
                assert_unanimous(&schema, &subject, &object);
                random_pairs += 1;
            }
        }
        assert!(random_pairs >= 10_000);

        assert!(
            start.elapsed() < Duration::from_secs(60),
            "criterion overran: {:?}",
            start.elapsed()
        );
    });
}

/// A schema of `n` labels, half levels and half compartments, under the
/// given expsum base. Routes are scheme-generic, so the split is enough.
fn equivalence_schema(tag: &str, n: usize, base: u64) -> PolicySchema {
    let levels: Vec<String> = (0..n / 2).map(|i| format!("L{i}")).collect();
    let compartments: Vec<String> = (n / 2..n).map(|i| format!("C{i}")).collect();
    PolicySchema::build(&format!("eq-{tag}-{n}-{base}"))
        .levels(levels)
        .compartments(compartments)
        .base(base)
        .finish()
}

#[test]
fn criterion_3_flattening_equivalence() {
    criterion(3, "flattening-equivalence", || {
        // the three-node chain and its frozen inclusion sets
        let chain = HierarchyGraph::new(
            "topSecret",
            ["topSecret", "Secret", "Public"].map(String::from),
            vec![
                ("topSecret".into(), "Secret".into()),
                ("Secret".into(), "Public".into()),
            ],
        )
        .unwrap();
        let enc = flatten(&chain).unwrap();
        assert_eq!(
            enc.set("topSecret").unwrap(),
            &names(&["topSecret", "Secret", "Public"])
        );
        assert_eq!(enc.set("Secret").unwrap(), &names(&["Secret", "Public"]));
        assert_eq!(enc.set("Public").unwrap(), &names(&["Public"]));

        // random trees: subset-of-flattened must match graph dominance, all pairs
        let mut rng = seeded_rng(3);
        for _ in 0..200 {
            let size = rng.random_range(2..=12usize);
            let vertices: Vec<String> = (0..size).map(|i| format!("v{i}")).collect();
            let edges: Vec<(String, String)> = (1..size)
                .map(|i| {
                    let parent = rng.random_range(0..i);
                    (vertices[parent].clone(), vertices[i].clone())
                })
                .collect();
            let graph = HierarchyGraph::new("v0", vertices.iter().cloned(), edges).unwrap();
            let enc = flatten(&graph).unwrap();
            for u in &vertices {
                for v in &vertices {
                    assert_eq!(
                        graph_dominates(&graph, u, v).unwrap(),
                        enc.dominates(u, v).unwrap(),
                        "({u}, {v}) in {graph:?}"
                    );
                }
            }
        }
    });
}

#[test]
fn criterion_4_process_extension_scenarios() {
    criterion(4, "process-extension-scenarios", || {
        let schema = mi_schema();
        let alice = LabelSet::of(Some("Secret"), &["MI5"]);
        let object = LabelSet::of(Some("Protected"), &[]);

        // printer: ALLOW with the tuple registered
        let mut registry = TupleRegistry::new();
        registry
            .register(ProcessTuple {
                subject: "alice".into(),
                process: "printer".into(),
                clearance: LabelSet::of(Some("Protected"), &[]),
            })
            .unwrap();
        assert_eq!(
            check_write_via_process(&schema, &registry, "alice", &alice, "printer", &object)
                .unwrap(),
            Decision::Allow
        );

        // DENY once the tuple is someone else's
        let mut other = TupleRegistry::new();
        other
            .register(ProcessTuple {
                subject: "mallory".into(),
                process: "printer".into(),
                clearance: LabelSet::of(Some("Protected"), &[]),
            })
            .unwrap();
        assert!(matches!(
            check_write_via_process(&schema, &other, "alice", &alice, "printer", &object).unwrap(),
            Decision::Deny(DenyReason::TupleMissing { .. })
        ));

        // briefing room: viewer inside the context reads, outsider denied
        let mut room = TupleRegistry::new();
        for (who, level, marks) in [
            ("rapporteur", "Secret", &["MI6"][..]),
            ("listener", "Secret", &["MI6"][..]),
        ] {
            room.register(ProcessTuple {
                subject: who.into(),
                process: "briefing-room".into(),
                clearance: LabelSet::of(Some(level), marks),
            })
            .unwrap();
        }
        let rapporteur = LabelSet::of(Some("Secret"), &["MI6"]);
        let briefed = LabelSet::of(Some("Secret"), &["MI6"]);
        let inside = ibac::process::check_disclosure_in_context(
            &schema,
            &room,
            "rapporteur",
            &rapporteur,
            "listener",
            "briefing-room",
            &briefed,
            ibac::process::DisclosureOptions::default(),
        )
        .unwrap();
        assert_eq!(inside, Decision::Allow);
        let outside = ibac::process::check_disclosure_in_context(
            &schema,
            &room,
            "rapporteur",
            &rapporteur,
            "outsider",
            "briefing-room",
            &briefed,
            ibac::process::DisclosureOptions::default(),
        )
        .unwrap();
        assert!(matches!(
            outside,
            Decision::Deny(DenyReason::TupleMissing { ref subject, .. }) if subject == "outsider"
        ));

        // reduction: tuple clearance == subject clearance reduces to plain dominance
        let mut rng = seeded_rng(4);
        let levels = ["TopSecret", "Secret", "Protected", "Public"];
        let marks = ["GCHQ", "MI5", "MI6"];
        for case in 0..100 {
            let pick = |rng: &mut rand_chacha::ChaCha8Rng| {
                let level = levels[rng.random_range(0..levels.len())];
                let chosen: Vec<&str> = marks
                    .iter()
                    .filter(|_| rng.random_bool(0.5))
                    .copied()
                    .collect();
                LabelSet::of(Some(level), &chosen)
            };
            let clearance = pick(&mut rng);
            let object = pick(&mut rng);
            let mut registry = TupleRegistry::new();
            registry
                .register(ProcessTuple {
                    subject: "s".into(),
                    process: "p".into(),
                    clearance: clearance.clone(),
                })
                .unwrap();
            let via = check_write_via_process(&schema, &registry, "s", &clearance, "p", &object)
                .unwrap()
                .allowed();
            let plain = subset_oracle(
                schema.expand_subject(&clearance).unwrap().included(),
                &object.names(),
            )
            .holds();
            assert_eq!(via, plain, "case {case}: {clearance} vs {object}");
        }
    });
}

#[test]
fn criterion_5_benchmark_parity() {
    criterion(5, "benchmark-parity", || {
        let start = Instant::now();
        let config = bench::BenchConfig {
            counts: vec![1_000_000],
            ..bench::BenchConfig::default()
        };
        // run() re-checks both routes against the positional/factorial
        // oracle before timing; reaching a report means verdicts matched
        let report = bench::run(&config).unwrap();
        assert_eq!(report.pairs.len(), 2);
        assert!(!report.pairs[0].holds, "dense pair must fail dominance");
        assert!(report.pairs[1].holds, "sparse pair must hold dominance");
        for pair in &report.pairs {
            let row = &pair.rows[0];
            assert_eq!(row.reads, 1_000_000);
            let ratio = row.modulo_seconds / row.and_seconds;
            assert!(
                (0.5..=2.0).contains(&ratio),
                "pair {}: modulo/AND ratio {ratio:.3} outside [0.5, 2.0]",
                pair.name
            );
        }
        assert!(
            start.elapsed() < Duration::from_secs(300),
            "criterion overran: {:?}",
            start.elapsed()
        );
    });
}

#[test]
fn criterion_6_storage_ordering() {
    criterion(6, "storage-ordering", || {
        let schema = PolicySchema::build("abc")
            .compartments(["A", "B", "C"])
            .finish();
        let report = codec::storage_report(&schema).unwrap();
        let row = |scheme: &str| {
            report
                .rows
                .iter()
                .find(|r| r.scheme == scheme)
                .unwrap_or_else(|| panic!("no {scheme} row"))
        };
        // {A,B,C} in full: 0b111, 1+3+9, 3*5*7
        assert_eq!((row("bitvec").value.as_str(), row("bitvec").bits), ("7", 3));
        assert_eq!((row("expsum").value.as_str(), row("expsum").bits), ("13", 4));
        assert_eq!(
            (row("primeprod").value.as_str(), row("primeprod").bits),
            ("105", 7)
        );
    });
}

#[test]
fn criterion_7_filter_soundness() {
    criterion(7, "filter-soundness", || {
        let schema = demo::demo_policy();
        let store = demo::demo_store(&schema).unwrap();
        let levels: Vec<&str> = schema.levels().iter().map(String::as_str).collect();
        let marks: Vec<&str> = schema
            .compartments()
            .iter()
            .chain(schema.project_nodes())
            .map(String::as_str)
            .collect();

        let mut rng = seeded_rng(7);
        for case in 0..100 {
            let level = levels[rng.random_range(0..levels.len())];
            let chosen: Vec<&str> = marks
                .iter()
                .filter(|_| rng.random_bool(0.4))
                .copied()
                .collect();
            let clearance = LabelSet::of(Some(level), &chosen);
            let included = schema.expand_subject(&clearance).unwrap().included().clone();
            let token = codec::encode(
                &schema,
                Scheme::PrimeProd,
                included.iter().map(String::as_str),
            )
            .unwrap();

            let filtered: BTreeSet<&str> = store
                .filter(&schema, &token)
                .unwrap()
                .iter()
                .map(|r| r.id.as_str())
                .collect();
            let expected: BTreeSet<&str> = store
                .records()
                .iter()
                .filter(|r| {
                    let labels = codec::decode(&schema, &r.tag).unwrap();
                    subset_oracle(&included, &labels).holds()
                })
                .map(|r| r.id.as_str())
                .collect();
            assert_eq!(filtered, expected, "case {case}: clearance {clearance}");
        }

        // the documented secretary run is byte-stable
        let options = demo::DemoOptions::default();
        let first = demo::run_demo(&options).unwrap();
        let second = demo::run_demo(&options).unwrap();
        assert_eq!(first, second);
        let starred: Vec<&str> = first
            .lines()
            .filter(|l| l.starts_with(" * "))
            .map(|l| l.split_whitespace().nth(1).unwrap())
            .collect();
        assert_eq!(starred, ["r1", "r4", "r5", "r9", "r10"]);
    });
}

#[test]
fn criterion_8_mersenne_forgery() {
    criterion(8, "mersenne-forgery", || {
        // seven labels: the all-ones word is 2^7 - 1
        let schema = mi_schema();
        let forged = Token::parse("b:0b1111111", &schema).unwrap();
        assert_eq!(forged.value(), &BigUint::from(127u32));
        let labels: Vec<String> = schema.label_order().map(str::to_string).collect();
        for mask in 0..1u32 << labels.len() {
            let object_names = mask_set(&labels, mask);
            let object = codec::encode(
                &schema,
                Scheme::BitVec,
                object_names.iter().map(String::as_str),
            )
            .unwrap();
            assert!(
                dominance::bitvec_and(&schema, &forged, &object).unwrap().holds(),
                "forged token failed to dominate {object_names:?}"
            );
        }

        // and the demo universe falls to its own all-ones word
        let demo_schema = demo::demo_policy();
        let forged = codec::universe_token(&demo_schema, Scheme::BitVec).unwrap();
        let store = demo::demo_store(&demo_schema).unwrap();
        for record in store.records() {
            let labels = codec::decode(&demo_schema, &record.tag).unwrap();
            let object = codec::encode(
                &demo_schema,
                Scheme::BitVec,
                labels.iter().map(String::as_str),
            )
            .unwrap();
            assert!(
                dominance::bitvec_and(&demo_schema, &forged, &object)
                    .unwrap()
                    .holds(),
                "row {} resisted the forged token",
                record.id
            );
        }
    });
}
