use std::collections::BTreeSet;

use ilrepair::fstruct::{AtomicValue, FeaturePath, FeatureStructure, SlotValue, Symbol};
use ilrepair::minet::{units, MiNetwork};
use ilrepair::{print_fs, read_fs};
use proptest::prelude::*;

fn atom() -> impl Strategy<Value = AtomicValue> {
    prop_oneof![
        (-1000i64..1000).prop_map(AtomicValue::Integer),
        "[a-z*+][a-z0-9-]{0,6}".prop_filter_map("reads as an integer", |s| Symbol::new(&s).map(AtomicValue::Symbol)),
        "[ -~]{0,8}".prop_map(AtomicValue::String),
    ]
}

fn slot_name() -> impl Strategy<Value = Symbol> {
    prop::sample::select(vec!["frame", "who", "when", "day", "hour", "value", "items", "why"])
        .prop_map(|s| Symbol::new(s).unwrap())
}

fn structure() -> impl Strategy<Value = FeatureStructure> {
    let leaf = prop::collection::vec((slot_name(), atom()), 0..4).prop_map(|slots| {
        let mut fs = FeatureStructure::new();
        for (s, a) in slots {
            fs.set(s, SlotValue::Atomic(a));
        }
        fs
    });
    leaf.prop_recursive(3, 24, 4, |inner| {
        let value = prop_oneof![
            atom().prop_map(SlotValue::Atomic),
            inner.clone().prop_map(SlotValue::Structure),
            prop::collection::vec(inner.prop_map(SlotValue::Structure), 2..4)
                .prop_map(|v| SlotValue::multiple(v).unwrap()),
        ];
        prop::collection::vec((slot_name(), value), 0..4).prop_map(|slots| {
            let mut fs = FeatureStructure::new();
            for (s, v) in slots {
                fs.set(s, v);
            }
            fs
        })
    })
}

proptest! {
    #[test]
    fn print_then_read_is_identity(fs in structure()) {
        prop_assert_eq!(read_fs(&print_fs(&fs)).unwrap(), fs);
    }

    #[test]
    fn flatten_paths_lead_back_to_their_atoms(fs in structure()) {
        for (path, a) in fs.flatten() {
            prop_assert_eq!(fs.get_path(&path), Some(&SlotValue::Atomic(a)));
        }
    }

    #[test]
    fn set_path_on_a_leaf_changes_only_that_leaf(fs in structure(), replacement in atom()) {
        let leaves: Vec<(FeaturePath, AtomicValue)> = fs.flatten().into_iter().collect();
        prop_assume!(!leaves.is_empty());
        let (path, _) = &leaves[0];
        let out = fs.set_path(path, SlotValue::Atomic(replacement.clone())).unwrap();
        prop_assert_eq!(out.get_path(path), Some(&SlotValue::Atomic(replacement)));
        for (p, a) in &leaves[1..] {
            prop_assert_eq!(out.get_path(p), Some(&SlotValue::Atomic(a.clone())));
        }
        prop_assert_eq!(out.flatten().len(), leaves.len());
    }

    #[test]
    fn constituent_count_matches_structure_nodes(fs in structure()) {
        fn nodes(fs: &FeatureStructure) -> usize {
            1 + fs.slots().map(|(_, v)| match v {
                SlotValue::Structure(inner) => nodes(inner),
                SlotValue::Multiple(items) => items.iter().filter_map(SlotValue::as_structure).map(nodes).sum(),
                SlotValue::Atomic(_) => 0,
            }).sum::<usize>()
        }
        prop_assert_eq!(fs.constituents().len(), nodes(&fs));
        for (path, c) in fs.constituents_with_paths() {
            if path.is_root() {
                prop_assert_eq!(c, &fs);
            } else {
                prop_assert_eq!(fs.get_path(&path), Some(&SlotValue::Structure(c.clone())));
            }
        }
    }

    #[test]
    fn unseen_inputs_change_no_score(
        events in prop::collection::vec((prop::collection::btree_set(0u8..4, 0..4), 0u8..3), 1..30),
        lambda in 0.05f64..2.0,
    ) {
        let mut net = MiNetwork::new(lambda);
        for (active, out) in &events {
            net.train(&units(active.iter().map(|i| format!("c{i}"))), &format!("v{out}"));
        }
        let seen: BTreeSet<String> = units(events[0].0.iter().map(|i| format!("c{i}")));
        let mut widened = seen.clone();
        widened.insert("never-seen".into());
        for (v, _) in net.outputs() {
            prop_assert_eq!(net.score(&seen, v).to_bits(), net.score(&widened, v).to_bits());
            prop_assert_eq!(net.mi("never-seen", v), 0.0);
        }
    }

    #[test]
    fn saved_networks_load_back_unchanged(
        events in prop::collection::vec((prop::collection::btree_set(0u8..5, 0..4), 0u8..4), 0..30),
    ) {
        let mut net = MiNetwork::new(0.5);
        for (active, out) in &events {
            net.train(&units(active.iter().map(|i| format!("c{i}"))), &format!("v{out}"));
        }
        prop_assert_eq!(MiNetwork::load(&net.save()).unwrap(), net);
    }

    #[test]
    fn training_raises_the_trained_output(
        events in prop::collection::vec((prop::collection::btree_set(0u8..4, 1..4), 0u8..3), 1..20),
        target in 0u8..3,
    ) {
        let mut net = MiNetwork::new(0.5);
        net.register_outputs((0..3).map(|i| format!("v{i}")));
        for (active, out) in &events {
            net.train(&units(active.iter().map(|i| format!("c{i}"))), &format!("v{out}"));
        }
        let probe = units(["c0"]);
        let v = format!("v{target}");
        let before = net.predict(&probe, None).iter().position(|p| p.output == v).unwrap();
        net.train(&probe, &v);
        let after = net.predict(&probe, None).iter().position(|p| p.output == v).unwrap();
        prop_assert!(after <= before);
    }
}

#[test]
fn hand_computed_scores() {
    // two events: {a} -> x, {a, b} -> y; lambda 0.5, outputs {x, y}
    let mut net = MiNetwork::new(0.5);
    net.train(&units(["a"]), "x");
    net.train(&units(["a", "b"]), "y");
    let prior_x = (1.5f64 / 3.0).ln();
    assert!((net.log_prior("x") - prior_x).abs() < 1e-12);
    // P(x|b) = 0.5 / 2, P(x) = 1.5 / 3
    assert!((net.mi("b", "x") - (0.25f64 / 0.5).ln()).abs() < 1e-12);
    assert!((net.mi("b", "y") - (0.75f64 / 0.5).ln()).abs() < 1e-12);
    assert_eq!(net.mi("a", "x"), 0.0);
    let ranked: Vec<String> = net.predict(&units(["a", "b"]), None).into_iter().map(|p| p.output).collect();
    assert_eq!(ranked, ["y", "x"]);
    // tie on an empty input set goes to the name
    let ranked: Vec<String> = net.predict(&units(Vec::<String>::new()), None).into_iter().map(|p| p.output).collect();
    assert_eq!(ranked, ["x", "y"]);
}
