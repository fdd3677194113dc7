mod common;

use std::collections::BTreeMap;

use proptest::collection::{btree_map, vec};
use proptest::prelude::*;

use hpsg_lmf::fs::{parse_fs, serialize_fs, serialize_lexicon, FeatureStructure, FeatureValue};
use hpsg_lmf::lmf::{
    parse_tei, serialize_tei, ArgumentLink, LmfForm, LmfLexicalEntry, LmfLexicalResource,
    LmfLexicon, SemanticArgument, SemanticPredicate, SubcatFrame, SyntacticArgument, TeiOptions,
    SEMANTIC_ROLES,
};
use hpsg_lmf::synth::{generate_entries, SynthCounts};

use common::{convert_docs, entries};

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z0-9ء-ي]{1,6}",
        "[a-z&<>\"'ـ]{1,3}( [a-zَُِّ]{1,3})?",
        Just("ghair mutaṣṣarf".to_string()),
    ]
}

fn feature_name() -> impl Strategy<Value = String> {
    "[A-Z][A-Z-]{0,6}"
}

fn feature_value() -> impl Strategy<Value = FeatureValue> {
    let leaf = prop_oneof![word().prop_map(FeatureValue::Atom), word().prop_map(FeatureValue::Text)];
    leaf.prop_recursive(4, 40, 4, |inner| {
        prop_oneof![
            vec(inner.clone(), 0..4).prop_map(FeatureValue::List),
            (
                proptest::option::of("[a-z]{1,5}"),
                btree_map(feature_name(), inner, 0..4)
            )
                .prop_map(|(type_label, features)| FeatureValue::Avm(FeatureStructure {
                    type_label,
                    features: features.into_iter().collect(),
                })),
        ]
    })
}

fn feature_structure() -> impl Strategy<Value = FeatureStructure> {
    (
        proptest::option::of("[a-z]{1,5}"),
        btree_map(feature_name(), feature_value(), 0..6),
    )
        .prop_map(|(type_label, features)| FeatureStructure {
            type_label,
            features: features.into_iter().collect(),
        })
}

fn attributes() -> impl Strategy<Value = BTreeMap<String, String>> {
    let name = prop_oneof![
        Just("partOfSpeech".to_string()),
        Just("grammaticalNumber".to_string()),
        Just("gender".to_string()),
        Just("ar:nature".to_string()),
        Just("x-hpsg:EXTRA".to_string()),
        "[a-z][a-zA-Z]{0,8}",
    ];
    btree_map(name, word(), 0..4)
}

fn entry(index: usize) -> impl Strategy<Value = LmfLexicalEntry> {
    let argument = (word(), word(), attributes())
        .prop_map(|(function, constituent, attributes)| SyntacticArgument {
            attributes,
            ..SyntacticArgument::new(function, constituent)
        });
    let frame = vec(argument, 1..3);
    let sem_argument = (
        proptest::sample::select(SEMANTIC_ROLES),
        proptest::option::of(word()),
        proptest::option::of("[XYZ]"),
    )
        .prop_map(|(role, value, label)| SemanticArgument {
            role: role.to_string(),
            value: value.unwrap_or_default(),
            label,
        });
    (
        word(),
        attributes(),
        vec((word(), attributes()), 0..3),
        vec(frame, 0..3),
        vec(vec(sem_argument, 1..3), 0..2),
        any::<bool>(),
    )
        .prop_map(move |(lemma, attrs, forms, frames, preds, link)| {
            let mut e = LmfLexicalEntry::new(format!("ar:noun:{index}"), LmfForm::lemma(lemma));
            e.attributes = attrs;
            for (orth, attributes) in forms {
                let mut f = LmfForm::inflected(orth);
                f.attributes = attributes;
                e.inflected_forms.push(f);
            }
            e.syntactic_behaviours = frames
                .into_iter()
                .map(|arguments| SubcatFrame {
                    id: String::new(),
                    arguments,
                })
                .collect();
            e.senses = preds
                .into_iter()
                .map(|arguments| SemanticPredicate {
                    id: String::new(),
                    arguments,
                    links: Vec::new(),
                })
                .collect();
            e.renumber_children();
            if link {
                if let (Some(frame), Some(pred)) = (e.syntactic_behaviours.first(), e.senses.first_mut()) {
                    pred.links.push(ArgumentLink {
                        role: pred.arguments[0].role.clone(),
                        target: frame.arguments[0].id.clone(),
                    });
                }
            }
            e
        })
}

fn resource() -> impl Strategy<Value = LmfLexicalResource> {
    (1usize..4)
        .prop_flat_map(|n| (0..n).map(entry).collect::<Vec<_>>())
        .prop_map(|entries| {
            let mut r = LmfLexicalResource::default();
            r.global_info.insert("language".into(), "ar".into());
            r.lexicons.push(LmfLexicon {
                language: "ar".into(),
                entries,
            });
            r
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn feature_structures_round_trip(fs in feature_structure()) {
        prop_assert_eq!(parse_fs(&serialize_fs(&fs)).unwrap(), fs);
    }

    #[test]
    fn tei_round_trip(r in resource()) {
        let bytes = serialize_tei(&r, TeiOptions::default()).unwrap();
        let parsed = parse_tei(&bytes).unwrap();
        prop_assert!(parsed.diagnostics.is_empty(), "{:?}", parsed.diagnostics);
        prop_assert_eq!(parsed.resource, r);
    }

    #[test]
    fn compat_output_keeps_forms(r in resource()) {
        let parsed = parse_tei(&serialize_tei(&r, TeiOptions { compat: true }).unwrap()).unwrap();
        for (a, b) in entries(&parsed.resource).zip(entries(&r)) {
            prop_assert_eq!(a.forms().collect::<Vec<_>>(), b.forms().collect::<Vec<_>>());
            prop_assert!(a.syntactic_behaviours.is_empty() && a.senses.is_empty());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    /// Strict-mode soundness and stats conservation, with unregistered
    /// features sprinkled over some entries.
    #[test]
    fn strict_exit_zero_means_no_loss(seed in any::<u64>(), verbs in 1usize..20, nouns in 0usize..8, every in 0usize..6) {
        let mut fs = generate_entries(seed, SynthCounts::new(verbs, nouns, 2));
        if every > 0 {
            for e in fs.iter_mut().step_by(every) {
                e.push("UNHEARD-OF", FeatureValue::atom("x"));
            }
        }
        let out = convert_docs(&[("l.xml", &serialize_lexicon(&fs))], 2);
        prop_assert!(out.stats.is_conserved());
        if out.exit_code(true) == 0 {
            prop_assert!(out.loss_report().is_empty());
        }
        prop_assert_eq!(every == 0, out.loss_report().is_empty());
        if every > 0 {
            prop_assert!(String::from_utf8_lossy(&out.tei).contains("x-hpsg:UNHEARD-OF"));
        }
    }

    /// Splitting one lexicon over two files, in either order, changes nothing.
    #[test]
    fn multi_file_associativity(seed in any::<u64>(), verbs in 1usize..25, nouns in 0usize..10, cut in 0usize..=100) {
        let fs = generate_entries(seed, SynthCounts::new(verbs, nouns, 3));
        let (a, b) = fs.split_at(cut * fs.len() / 100);
        let (a, b) = (serialize_lexicon(a), serialize_lexicon(b));
        let ab = convert_docs(&[("a.xml", &a), ("b.xml", &b)], 1);
        let ba = convert_docs(&[("b.xml", &b), ("a.xml", &a)], 3);
        prop_assert!(ab.tei == ba.tei);
        prop_assert_eq!(ab.merge_report(), ba.merge_report());
    }
}
