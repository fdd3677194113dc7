//! LMF object model: core package plus the morphological, syntactic and
//! semantic extensions, and its TEI serialization.

mod tei;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::text::nfc;

pub use tei::{parse_tei, serialize_tei, LmfError, ParsedResource, TeiOptions, LMF_EXT_NS};

/// Data-category name to value. Sorted by name, which fixes the
/// serialization order.
pub type Attributes = BTreeMap<String, String>;

/// Semantic argument roles accepted without a diagnostic.
pub const SEMANTIC_ROLES: &[&str] = &[
    "agent-noun",
    "patient-noun",
    "restriction",
    "quantifier",
    "other",
];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LmfLexicalResource {
    pub global_info: Attributes,
    pub lexicons: Vec<LmfLexicon>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LmfLexicon {
    pub language: String,
    pub entries: Vec<LmfLexicalEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormKind {
    Lemma,
    Inflected,
}

impl FormKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FormKind::Lemma => "lemma",
            FormKind::Inflected => "inflected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LmfForm {
    pub orthography: String,
    pub attributes: Attributes,
    pub kind: FormKind,
}

impl LmfForm {
    pub fn lemma(orthography: impl Into<String>) -> Self {
        LmfForm {
            orthography: orthography.into(),
            attributes: Attributes::new(),
            kind: FormKind::Lemma,
        }
    }

    pub fn inflected(orthography: impl Into<String>) -> Self {
        LmfForm {
            orthography: orthography.into(),
            attributes: Attributes::new(),
            kind: FormKind::Inflected,
        }
    }

    pub fn with(mut self, attribute: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(attribute.into(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SyntacticArgument {
    pub id: String,
    pub function: String,
    pub constituent: String,
    pub attributes: Attributes,
}

impl SyntacticArgument {
    pub fn new(function: impl Into<String>, constituent: impl Into<String>) -> Self {
        SyntacticArgument {
            id: String::new(),
            function: function.into(),
            constituent: constituent.into(),
            attributes: Attributes::new(),
        }
    }

    pub fn with(mut self, attribute: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(attribute.into(), value.into());
        self
    }

    /// Equality ignoring the identifier.
    pub fn same_content(&self, other: &Self) -> bool {
        self.function == other.function
            && self.constituent == other.constituent
            && self.attributes == other.attributes
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubcatFrame {
    pub id: String,
    pub arguments: Vec<SyntacticArgument>,
}

impl SubcatFrame {
    pub fn same_content(&self, other: &Self) -> bool {
        self.arguments.len() == other.arguments.len()
            && self
                .arguments
                .iter()
                .zip(&other.arguments)
                .all(|(a, b)| a.same_content(b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SemanticArgument {
    pub role: String,
    pub value: String,
    /// Co-label shared with a syntactic argument (the X/Y of a
    /// syntax-semantics link).
    pub label: Option<String>,
}

/// Cross-reference from a semantic role to a syntactic argument id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArgumentLink {
    pub role: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SemanticPredicate {
    pub id: String,
    pub arguments: Vec<SemanticArgument>,
    pub links: Vec<ArgumentLink>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LmfLexicalEntry {
    pub id: String,
    pub attributes: Attributes,
    pub lemma: LmfForm,
    pub inflected_forms: Vec<LmfForm>,
    pub syntactic_behaviours: Vec<SubcatFrame>,
    pub senses: Vec<SemanticPredicate>,
}

impl LmfLexicalEntry {
    pub fn new(id: impl Into<String>, lemma: LmfForm) -> Self {
        LmfLexicalEntry {
            id: id.into(),
            attributes: Attributes::new(),
            lemma,
            inflected_forms: Vec::new(),
            syntactic_behaviours: Vec::new(),
            senses: Vec::new(),
        }
    }

    /// Lemma first, then inflected forms.
    pub fn forms(&self) -> impl Iterator<Item = &LmfForm> {
        std::iter::once(&self.lemma).chain(self.inflected_forms.iter())
    }

    /// Category segment of a `<language>:<category>:<ordinal>` id.
    pub fn category_segment(&self) -> &str {
        self.id.split(':').nth(1).unwrap_or("")
    }

    /// Reassigns frame, argument and predicate ids from the entry id,
    /// keeping links pointed at the same arguments.
    pub fn renumber_children(&mut self) {
        let mut remap: HashMap<String, String> = HashMap::new();
        for (fi, frame) in self.syntactic_behaviours.iter_mut().enumerate() {
            frame.id = format!("{}.f{}", self.id, fi);
            for (ai, arg) in frame.arguments.iter_mut().enumerate() {
                let new_id = format!("{}.a{}", frame.id, ai);
                if !arg.id.is_empty() {
                    remap.insert(std::mem::take(&mut arg.id), new_id.clone());
                }
                arg.id = new_id;
            }
        }
        for (pi, pred) in self.senses.iter_mut().enumerate() {
            pred.id = format!("{}.p{}", self.id, pi);
            for link in &mut pred.links {
                if let Some(new) = remap.get(&link.target) {
                    link.target = new.clone();
                }
            }
        }
    }

    /// Comparison key over content only: ids are blanked and link targets
    /// replaced by argument positions.
    fn content_key(&self) -> String {
        let mut positions: HashMap<&str, (usize, usize)> = HashMap::new();
        for (fi, frame) in self.syntactic_behaviours.iter().enumerate() {
            for (ai, arg) in frame.arguments.iter().enumerate() {
                positions.insert(arg.id.as_str(), (fi, ai));
            }
        }
        let frames: Vec<_> = self
            .syntactic_behaviours
            .iter()
            .map(|f| {
                f.arguments
                    .iter()
                    .map(|a| (&a.function, &a.constituent, &a.attributes))
                    .collect::<Vec<_>>()
            })
            .collect();
        let senses: Vec<_> = self
            .senses
            .iter()
            .map(|p| {
                let links: Vec<_> = p
                    .links
                    .iter()
                    .map(|l| (&l.role, positions.get(l.target.as_str())))
                    .collect();
                (&p.arguments, links)
            })
            .collect();
        format!(
            "{}\u{1}{}\u{1}{:?}\u{1}{:?}\u{1}{:?}\u{1}{:?}\u{1}{:?}",
            self.category_segment(),
            nfc(&self.lemma.orthography),
            self.lemma.attributes,
            self.attributes,
            self.inflected_forms,
            frames,
            senses
        )
    }
}

/// One invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entry_id: Option<String>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.entry_id {
            Some(id) => write!(f, "{}: {}", id, self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every invariant violation of the resource; empty iff it is valid.
pub fn validate(resource: &LmfLexicalResource) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |entry: Option<&str>, message: String| {
        out.push(Violation {
            entry_id: entry.map(str::to_string),
            message,
        })
    };
    if resource.lexicons.is_empty() {
        push(None, "resource must contain at least one lexicon".into());
    }
    let mut ids = BTreeSet::new();
    for lexicon in &resource.lexicons {
        if lexicon.language.is_empty() {
            push(None, "lexicon without a language".into());
        }
        if lexicon.entries.is_empty() {
            push(
                None,
                format!(
                    "lexicon {:?} must contain at least one lexical entry",
                    lexicon.language
                ),
            );
        }
        for entry in &lexicon.entries {
            let id = Some(entry.id.as_str());
            if entry.id.is_empty() {
                push(id, "entry without an id".into());
            } else if !ids.insert(entry.id.as_str()) {
                push(id, "duplicate entry id".into());
            }
            if entry.lemma.kind != FormKind::Lemma {
                push(id, "lemma form is not of kind lemma".into());
            }
            for form in entry.forms() {
                if form.orthography.is_empty() {
                    push(id, "form with an empty orthography".into());
                }
            }
            let extra_lemmas = entry
                .inflected_forms
                .iter()
                .filter(|f| f.kind == FormKind::Lemma)
                .count();
            if extra_lemmas > 0 {
                push(id, format!("{} lemma forms (exactly one allowed)", extra_lemmas + 1));
            }
            let attr_names = entry
                .attributes
                .keys()
                .chain(entry.forms().flat_map(|f| f.attributes.keys()));
            for name in attr_names {
                if name.is_empty() {
                    push(id, "attribute with an empty name".into());
                }
            }
            let mut arg_ids = BTreeSet::new();
            for frame in &entry.syntactic_behaviours {
                if frame.arguments.is_empty() {
                    push(id, format!("subcategorisation frame {} has no argument", frame.id));
                }
                for arg in &frame.arguments {
                    if arg.function.is_empty() || arg.constituent.is_empty() {
                        push(
                            id,
                            format!("syntactic argument {} lacks a function or constituent", arg.id),
                        );
                    }
                    arg_ids.insert(arg.id.as_str());
                }
            }
            for pred in &entry.senses {
                if pred.arguments.is_empty() {
                    push(id, format!("semantic predicate {} has no argument", pred.id));
                }
                for arg in &pred.arguments {
                    if !SEMANTIC_ROLES.contains(&arg.role.as_str()) {
                        push(id, format!("unknown semantic role {:?}", arg.role));
                    }
                }
                for link in &pred.links {
                    if !arg_ids.contains(link.target.as_str()) {
                        push(id, format!("link {} points to no syntactic argument", link.target));
                    }
                }
            }
        }
    }
    out
}

/// Puts a resource in an order that does not depend on input order:
/// inflected forms, frames and predicates sorted by content, entries
/// sorted by content within each lexicon, then ids reassigned as
/// `<language>:<category>:<n>` counting per category. Returns the map
/// from old to new entry ids.
pub fn canonicalize(resource: &mut LmfLexicalResource) -> BTreeMap<String, String> {
    let mut renamed = BTreeMap::new();
    for lexicon in &mut resource.lexicons {
        for entry in &mut lexicon.entries {
            entry.inflected_forms.sort_by(|a, b| {
                (nfc(&a.orthography), &a.attributes, a.kind)
                    .cmp(&(nfc(&b.orthography), &b.attributes, b.kind))
            });
            sort_frames_and_senses(entry);
        }
        let mut keyed: Vec<(String, LmfLexicalEntry)> = lexicon
            .entries
            .drain(..)
            .map(|e| (e.content_key(), e))
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        let mut counters: BTreeMap<String, usize> = BTreeMap::new();
        for (_, mut entry) in keyed {
            let category = entry.category_segment().to_string();
            let n = counters.entry(category.clone()).or_insert(0);
            let id = format!("{}:{}:{}", lexicon.language, category, n);
            renamed.insert(std::mem::replace(&mut entry.id, id.clone()), id);
            *n += 1;
            entry.renumber_children();
            lexicon.entries.push(entry);
        }
    }
    renamed
}

fn sort_frames_and_senses(entry: &mut LmfLexicalEntry) {
    let frame_key = |f: &SubcatFrame| {
        format!(
            "{:?}",
            f.arguments
                .iter()
                .map(|a| (&a.function, &a.constituent, &a.attributes))
                .collect::<Vec<_>>()
        )
    };
    entry
        .syntactic_behaviours
        .sort_by_cached_key(|f| frame_key(f));
    // links target argument ids, which renumber_children rewrites after
    // this sort, so predicates are ordered by arguments and roles only
    entry.senses.sort_by_cached_key(|p| {
        format!(
            "{:?}{:?}",
            p.arguments,
            p.links.iter().map(|l| &l.role).collect::<Vec<_>>()
        )
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn ayn_entry() -> LmfLexicalEntry {
        let mut e = LmfLexicalEntry::new("ar:noun:0", LmfForm::lemma("عَيْن"));
        e.attributes.insert("partOfSpeech".into(), "commonNoun".into());
        e.inflected_forms
            .push(LmfForm::inflected("عَيْن").with("grammaticalNumber", "مفرد"));
        e.inflected_forms
            .push(LmfForm::inflected("عَيون").with("grammaticalNumber", "جمع"));
        e
    }

    fn resource(entries: Vec<LmfLexicalEntry>) -> LmfLexicalResource {
        LmfLexicalResource {
            global_info: Attributes::new(),
            lexicons: vec![LmfLexicon {
                language: "ar".into(),
                entries,
            }],
        }
    }

    #[test]
    fn valid_two_entry_resource() {
        let mut verb = LmfLexicalEntry::new("ar:verb:0", LmfForm::lemma("كتب"));
        verb.attributes.insert("partOfSpeech".into(), "verb".into());
        assert!(validate(&resource(vec![ayn_entry(), verb])).is_empty());
    }

    #[test]
    fn two_lemma_forms_is_one_violation() {
        let mut e = ayn_entry();
        e.inflected_forms.push(LmfForm::lemma("عين"));
        let v = validate(&resource(vec![e]));
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].entry_id.as_deref(), Some("ar:noun:0"));
    }

    #[test]
    fn empty_frame_is_one_violation() {
        let mut e = ayn_entry();
        e.syntactic_behaviours.push(SubcatFrame {
            id: "ar:noun:0.f0".into(),
            arguments: vec![],
        });
        assert_eq!(validate(&resource(vec![e])).len(), 1);
    }

    #[test]
    fn structural_violations() {
        assert_eq!(validate(&LmfLexicalResource::default()).len(), 1);
        assert_eq!(validate(&resource(vec![])).len(), 1);

        let mut e = ayn_entry();
        e.senses.push(SemanticPredicate {
            id: "p".into(),
            arguments: vec![SemanticArgument {
                role: "beneficiary".into(),
                value: "x".into(),
                label: None,
            }],
            links: vec![ArgumentLink {
                role: "beneficiary".into(),
                target: "nowhere".into(),
            }],
        });
        let dup = ayn_entry();
        assert_eq!(validate(&resource(vec![e, dup])).len(), 3);
    }

    #[test]
    fn canonical_order_ignores_input_order() {
        let mut a = LmfLexicalEntry::new("ar:verb:7", LmfForm::lemma("ذهب"));
        a.inflected_forms.push(LmfForm::inflected("ذهبنا"));
        a.inflected_forms.push(LmfForm::inflected("ذهبت"));
        let b = LmfLexicalEntry::new("ar:verb:3", LmfForm::lemma("كتب"));
        let mut r1 = resource(vec![a.clone(), b.clone()]);
        a.inflected_forms.reverse();
        let mut r2 = resource(vec![b, a]);
        canonicalize(&mut r1);
        canonicalize(&mut r2);
        assert_eq!(r1, r2);
        let ids: Vec<_> = r1.lexicons[0].entries.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["ar:verb:0", "ar:verb:1"]);
    }

    #[test]
    fn renumbering_keeps_links() {
        let mut e = LmfLexicalEntry::new("old", LmfForm::lemma("كتب"));
        let mut arg = SyntacticArgument::new("subject", "NP");
        arg.id = "old.f0.a0".into();
        e.syntactic_behaviours.push(SubcatFrame {
            id: "old.f0".into(),
            arguments: vec![arg],
        });
        e.senses.push(SemanticPredicate {
            id: "old.p0".into(),
            arguments: vec![SemanticArgument {
                role: "agent-noun".into(),
                value: "walad".into(),
                label: Some("X".into()),
            }],
            links: vec![ArgumentLink {
                role: "agent-noun".into(),
                target: "old.f0.a0".into(),
            }],
        });
        e.id = "ar:verb:0".into();
        e.renumber_children();
        assert_eq!(e.syntactic_behaviours[0].arguments[0].id, "ar:verb:0.f0.a0");
        assert_eq!(e.senses[0].links[0].target, "ar:verb:0.f0.a0");
    }
}
