//! Feature structures (attribute-value matrices) and the TEI feature-structure
//! XML encoding used to store HPSG lexica.

mod xml;

use std::collections::VecDeque;
use std::fmt;

use crate::diag::SourceRef;

pub use xml::{
    parse_fs, parse_lexicon, serialize_fs, serialize_lexicon, write_fs, FsError, LexiconReader,
    ParsedLexicon, ReadItem, TEI_NS,
};

/// A feature value: an atomic symbol, a string, a list, or a nested AVM.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FeatureValue {
    Atom(String),
    Text(String),
    List(Vec<FeatureValue>),
    Avm(FeatureStructure),
}

impl FeatureValue {
    pub fn atom(s: impl Into<String>) -> Self {
        FeatureValue::Atom(s.into())
    }

    pub fn text(s: impl Into<String>) -> Self {
        FeatureValue::Text(s.into())
    }

    /// The string content of an atomic value.
    pub fn as_str(&self) -> Option<&str> {
        match self {
            FeatureValue::Atom(s) | FeatureValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_avm(&self) -> Option<&FeatureStructure> {
        match self {
            FeatureValue::Avm(fs) => Some(fs),
            _ => None,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, FeatureValue::Atom(_) | FeatureValue::Text(_))
    }

    /// Empty lists and AVMs without features carry no information.
    pub fn is_empty(&self) -> bool {
        match self {
            FeatureValue::Atom(_) | FeatureValue::Text(_) => false,
            FeatureValue::List(items) => items.is_empty(),
            FeatureValue::Avm(fs) => fs.is_empty(),
        }
    }
}

/// Compact bracket notation: `[A: x, B: "text"]`, lists as `<x, y>`.
impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureValue::Atom(s) => f.write_str(s),
            FeatureValue::Text(s) => write!(f, "\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
            FeatureValue::List(items) => {
                f.write_str("<")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", item)?;
                }
                f.write_str(">")
            }
            FeatureValue::Avm(fs) => write!(f, "{}", fs),
        }
    }
}

/// An ordered attribute-value matrix. Feature names are unique per level.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FeatureStructure {
    pub type_label: Option<String>,
    pub features: Vec<(String, FeatureValue)>,
}

impl FeatureStructure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn typed(label: impl Into<String>) -> Self {
        FeatureStructure {
            type_label: Some(label.into()),
            features: Vec::new(),
        }
    }

    /// Builder-style append. Callers keep names unique.
    pub fn with(mut self, name: impl Into<String>, value: FeatureValue) -> Self {
        self.features.push((name.into(), value));
        self
    }

    pub fn push(&mut self, name: impl Into<String>, value: FeatureValue) {
        self.features.push((name.into(), value));
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn get(&self, name: &str) -> Option<&FeatureValue> {
        self.features
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }

    /// Follows `path` through nested AVMs. Lists end the descent.
    pub fn get_path<S: AsRef<str>>(&self, path: &[S]) -> Option<&FeatureValue> {
        let (first, rest) = path.split_first()?;
        let value = self.get(first.as_ref())?;
        if rest.is_empty() {
            return Some(value);
        }
        match value {
            FeatureValue::Avm(inner) => inner.get_path(rest),
            _ => None,
        }
    }

    /// Shallowest occurrence of a feature named `name`, searching nested
    /// AVMs breadth-first in document order. Lists are not entered.
    pub fn find(&self, name: &str) -> Option<&FeatureValue> {
        let mut queue: VecDeque<&FeatureStructure> = VecDeque::from([self]);
        while let Some(fs) = queue.pop_front() {
            for (n, v) in &fs.features {
                if n == name {
                    return Some(v);
                }
            }
            for (_, v) in &fs.features {
                if let FeatureValue::Avm(inner) = v {
                    queue.push_back(inner);
                }
            }
        }
        None
    }

    /// First duplicated feature name at any level, if any.
    pub fn duplicate_name(&self) -> Option<&str> {
        for (i, (name, _)) in self.features.iter().enumerate() {
            if self.features[..i].iter().any(|(n, _)| n == name) {
                return Some(name);
            }
        }
        self.features.iter().find_map(|(_, v)| duplicate_in_value(v))
    }

    /// Renames every feature `from` to `to`, recursively.
    pub fn rename_features(&mut self, from: &str, to: &str) {
        for (name, value) in &mut self.features {
            if name == from {
                *name = to.to_string();
            }
            rename_in_value(value, from, to);
        }
    }
}

fn duplicate_in_value(value: &FeatureValue) -> Option<&str> {
    match value {
        FeatureValue::Avm(fs) => fs.duplicate_name(),
        FeatureValue::List(items) => items.iter().find_map(duplicate_in_value),
        _ => None,
    }
}

fn rename_in_value(value: &mut FeatureValue, from: &str, to: &str) {
    match value {
        FeatureValue::Avm(fs) => fs.rename_features(from, to),
        FeatureValue::List(items) => items
            .iter_mut()
            .for_each(|item| rename_in_value(item, from, to)),
        _ => {}
    }
}

impl fmt::Display for FeatureStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        if let Some(label) = &self.type_label {
            write!(f, "*{}*", label)?;
            if !self.features.is_empty() {
                f.write_str(" ")?;
            }
        }
        for (i, (name, value)) in self.features.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}: {}", name, value)?;
        }
        f.write_str("]")
    }
}

/// One lexical entry of an HPSG lexicon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HpsgEntry {
    /// Surface form (value of PHON), kept exactly as decoded.
    pub phon: String,
    pub body: FeatureStructure,
    pub source: SourceRef,
}

impl HpsgEntry {
    /// Atomic value of the entry's MAJ feature.
    pub fn major(&self) -> Option<&str> {
        self.body.find("MAJ").and_then(FeatureValue::as_str)
    }

    /// Atomic value of the shallowest feature named `name`.
    pub fn atom(&self, name: &str) -> Option<&str> {
        self.body.find(name).and_then(FeatureValue::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure17() -> FeatureStructure {
        let head = FeatureStructure::new()
            .with("MAJ", FeatureValue::atom("verbe"))
            .with("RADICAL", FeatureValue::atom("أ خ ر ج"))
            .with("SCHEME", FeatureValue::atom("أفعل"));
        let cat = FeatureStructure::new().with("TETE", FeatureValue::Avm(head));
        let loc = FeatureStructure::new().with("CAT", FeatureValue::Avm(cat));
        let synsem = FeatureStructure::new().with("LOC", FeatureValue::Avm(loc));
        FeatureStructure::new()
            .with("PHON", FeatureValue::text("أخرج"))
            .with("SYNSEM", FeatureValue::Avm(synsem))
    }

    #[test]
    fn path_reaches_major_category() {
        let fs = figure17();
        assert_eq!(
            fs.get_path(&["SYNSEM", "LOC", "CAT", "TETE", "MAJ"]),
            Some(&FeatureValue::atom("verbe"))
        );
        assert_eq!(fs.get_path(&["MISSING"]), None);
        assert_eq!(fs.get_path::<&str>(&[]), None);
    }

    #[test]
    fn path_stops_at_lists() {
        let arg = FeatureStructure::new().with("CAT", FeatureValue::atom("NP"));
        let fs = FeatureStructure::new().with(
            "COMPS",
            FeatureValue::List(vec![FeatureValue::Avm(arg)]),
        );
        assert!(matches!(fs.get_path(&["COMPS"]), Some(FeatureValue::List(_))));
        assert_eq!(fs.get_path(&["COMPS", "CAT"]), None);
        assert_eq!(fs.find("CAT"), None);
    }

    #[test]
    fn find_prefers_shallow_occurrences() {
        let spec = FeatureStructure::new().with("MAJ", FeatureValue::atom("verb"));
        let head = FeatureStructure::new()
            .with("SPEC", FeatureValue::Avm(spec))
            .with("MAJ", FeatureValue::atom("particle"));
        let fs = FeatureStructure::new().with("HEAD", FeatureValue::Avm(head));
        assert_eq!(fs.find("MAJ"), Some(&FeatureValue::atom("particle")));
    }

    #[test]
    fn rename_and_duplicates() {
        let mut fs = figure17();
        fs.rename_features("TETE", "HEAD");
        assert!(fs.get_path(&["SYNSEM", "LOC", "CAT", "HEAD", "MAJ"]).is_some());
        assert_eq!(fs.duplicate_name(), None);

        let dup = FeatureStructure::new()
            .with("A", FeatureValue::atom("x"))
            .with(
                "B",
                FeatureValue::Avm(
                    FeatureStructure::new()
                        .with("C", FeatureValue::atom("1"))
                        .with("C", FeatureValue::atom("2")),
                ),
            );
        assert_eq!(dup.duplicate_name(), Some("C"));
    }

    #[test]
    fn compact_rendering() {
        let fs = FeatureStructure::new()
            .with("A", FeatureValue::atom("x"))
            .with("B", FeatureValue::text("say \"hi\""))
            .with("C", FeatureValue::List(vec![]));
        assert_eq!(fs.to_string(), r#"[A: x, B: "say \"hi\"", C: <>]"#);
    }
}
