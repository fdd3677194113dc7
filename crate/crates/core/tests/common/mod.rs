#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use hpsg_lmf::fs::{FeatureStructure, FeatureValue};
use hpsg_lmf::lmf::{LmfLexicalEntry, LmfLexicalResource};
use hpsg_lmf::pipeline::{run, RunConfig, RunOutcome};
use hpsg_lmf::text::nfc;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Writes each `(file name, document)` into a fresh directory and converts
/// them in the given order.
pub fn convert_docs(docs: &[(&str, &[u8])], jobs: usize) -> RunOutcome {
    let dir = tempfile::tempdir().unwrap();
    let inputs = docs
        .iter()
        .map(|(name, bytes)| {
            let p = dir.path().join(name);
            std::fs::write(&p, bytes).unwrap();
            p
        })
        .collect();
    let mut config = RunConfig::new(inputs);
    config.jobs = Some(jobs);
    run(&config).unwrap()
}

pub fn convert_files(paths: &[PathBuf]) -> RunOutcome {
    let mut config = RunConfig::new(paths.to_vec());
    config.jobs = Some(2);
    run(&config).unwrap()
}

pub fn entries(resource: &LmfLexicalResource) -> impl Iterator<Item = &LmfLexicalEntry> {
    resource.lexicons.iter().flat_map(|l| l.entries.iter())
}

/// Every atomic value in `fs`, NFC-normalized.
pub fn leaf_values(fs: &FeatureStructure, out: &mut Vec<String>) {
    fn walk(v: &FeatureValue, out: &mut Vec<String>) {
        match v {
            FeatureValue::Atom(s) | FeatureValue::Text(s) => out.push(nfc(s)),
            FeatureValue::List(items) => items.iter().for_each(|i| walk(i, out)),
            FeatureValue::Avm(fs) => leaf_values(fs, out),
        }
    }
    for (_, v) in &fs.features {
        walk(v, out);
    }
}

/// Every string an entry carries: orthographies, attribute values,
/// argument functions and constituents, semantic roles, values and labels.
pub fn entry_strings(e: &LmfLexicalEntry) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    out.extend(e.attributes.values().cloned());
    for f in e.forms() {
        out.insert(f.orthography.clone());
        out.extend(f.attributes.values().cloned());
    }
    for frame in &e.syntactic_behaviours {
        for a in &frame.arguments {
            out.insert(a.function.clone());
            out.insert(a.constituent.clone());
            out.extend(a.attributes.values().cloned());
        }
    }
    for p in &e.senses {
        for a in &p.arguments {
            out.insert(a.role.clone());
            out.insert(a.value.clone());
            out.extend(a.label.clone());
        }
    }
    out.into_iter().map(|s| nfc(&s)).collect()
}
