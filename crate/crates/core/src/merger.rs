//! Placement of projected entries into LMF entries.
//!
//! Every projected HPSG entry becomes a new LMF entry, an inflected form of
//! an existing entry, or the lemma of an entry previously seeded by its own
//! inflected forms. The decision rests on a [`MergeKey`]:
//!
//! * denuded verbs: `(RADICAL, DENUDE)`;
//! * other verbs: `(RADICAL, SCHEME)`;
//! * nouns: `(NATURE, RADICAL)`, with ROOT standing in for RADICAL;
//!
//! plus the vocalized lemma (NFC), which keeps homographs such as
//! خَرَجَ / خَرِجَ apart. Particles and non-inflecting entries have no key.
//!
//! An inflected form knows its vocalized lemma only through a LEMMA
//! feature, and a derived verb's inflected form does not know the lemma's
//! SCHEME; such unknown fields are wildcards. Fully known keys are placed
//! immediately; wildcard keys are resolved once the whole input has been
//! seen, against every entry agreeing on the known fields. Together with
//! content-ordered output this makes the result independent of input order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::diag::{Diagnostic, DiagnosticKind, SourceRef};
use crate::fs::HpsgEntry;
use crate::lmf::{
    canonicalize, ArgumentLink, Attributes, FormKind, LmfForm, LmfLexicalEntry,
    LmfLexicalResource, LmfLexicon, SemanticArgument, SemanticPredicate, SubcatFrame,
    SyntacticArgument,
};
use crate::rules::{
    Emission, Projection, TargetClass, ATTR_CONSTITUENT, ATTR_FUNCTION, ATTR_LABEL,
    ATTR_WRITTEN_FORM, PASSTHROUGH_PREFIX,
};
use crate::schema::{LexicalCategory, Registry};
use crate::text::{nfc, scheme_key};

/// Identity of a word family. `None` fields are unknown (wildcards).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MergeKey {
    pub category: LexicalCategory,
    pub key_fields: Vec<(String, Option<String>)>,
    pub vocalized_lemma: Option<String>,
}

impl MergeKey {
    pub fn is_bound(&self) -> bool {
        self.vocalized_lemma.is_some() && self.key_fields.iter().all(|(_, v)| v.is_some())
    }

    /// Whether the bound key `other` agrees with every known field.
    pub fn admits(&self, other: &MergeKey) -> bool {
        let agree = |a: &Option<String>, b: &Option<String>| a.is_none() || a == b;
        self.category == other.category
            && self.key_fields.len() == other.key_fields.len()
            && self
                .key_fields
                .iter()
                .zip(&other.key_fields)
                .all(|((na, va), (nb, vb))| na == nb && agree(va, vb))
            && agree(&self.vocalized_lemma, &other.vocalized_lemma)
    }
}

impl fmt::Display for MergeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.category)?;
        for (i, (name, value)) in self.key_fields.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}={}", name, value.as_deref().unwrap_or("*"))?;
        }
        write!(f, "]@{}", self.vocalized_lemma.as_deref().unwrap_or("*"))
    }
}

/// Key and canonical status of one projected entry.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyInfo {
    pub key: Option<MergeKey>,
    pub canonical: bool,
    pub diagnostics: Vec<Diagnostic>,
}

fn radical_key(value: &str) -> String {
    nfc(value)
        .chars()
        .filter(|c| !c.is_whitespace() && !matches!(c, '-' | '_' | '.' | 'ـ'))
        .collect()
}

/// Whether the form-level features of a projection carry canonical values.
pub fn is_canonical(entry: &HpsgEntry, projection: &Projection, registry: &Registry) -> bool {
    if let Some(lemma) = projection.value_of("LEMMA", TargetClass::LexicalEntry) {
        if nfc(lemma) != nfc(&entry.phon) {
            return false;
        }
    }
    for e in projection.emissions.iter().filter(|e| e.target_class == TargetClass::Form) {
        let Some(d) = registry.lookup(&e.source) else { continue };
        if d.is_canonical_value(&e.value) == Some(false) {
            return false;
        }
        if projection.category == LexicalCategory::Verb
            && d.name == "SCHEME"
            && !registry.is_base_scheme(&e.value)
        {
            return false;
        }
    }
    true
}

pub fn compute_merge_key(entry: &HpsgEntry, projection: &Projection, registry: &Registry) -> KeyInfo {
    let category = projection.category;
    let canonical = is_canonical(entry, projection, registry);
    let mut info = KeyInfo {
        key: None,
        canonical,
        diagnostics: Vec::new(),
    };
    if category == LexicalCategory::Particle || !projection.inflecting {
        return info;
    }
    let entry_value =
        |name: &str| projection.value_of(name, TargetClass::LexicalEntry).map(str::to_string);
    let missing = |info: &mut KeyInfo, feature: &str| {
        info.diagnostics.push(
            Diagnostic::new(
                DiagnosticKind::MergeKey,
                format!("{category} {} has no {feature}; it stands alone", entry.phon),
            )
            .at(&entry.source)
            .on(feature),
        );
    };
    let radical = entry_value("RADICAL").or_else(|| entry_value("ROOT"));
    let Some(radical) = radical.map(|r| radical_key(&r)) else {
        missing(&mut info, "RADICAL");
        return info;
    };
    let key_fields = match category {
        LexicalCategory::Noun => {
            let Some(nature) = entry_value("NATURE") else {
                missing(&mut info, "NATURE");
                return info;
            };
            vec![
                ("NATURE".to_string(), Some(nfc(&nature))),
                ("RADICAL".to_string(), Some(radical)),
            ]
        }
        LexicalCategory::Verb => match entry_value("DENUDE") {
            Some(d) if registry.is_denuded(&d) => vec![
                ("RADICAL".to_string(), Some(radical)),
                ("DENUDE".to_string(), Some(nfc(&d))),
            ],
            _ => {
                let scheme = projection.value_of("SCHEME", TargetClass::Form);
                if canonical && scheme.is_none() {
                    missing(&mut info, "SCHEME");
                    return info;
                }
                // an inflected form's scheme is not its lemma's
                let scheme = scheme.filter(|_| canonical).map(scheme_key);
                vec![
                    ("RADICAL".to_string(), Some(radical)),
                    ("SCHEME".to_string(), scheme),
                ]
            }
        },
        LexicalCategory::Particle => unreachable!(),
    };
    let vocalized_lemma = match entry_value("LEMMA") {
        Some(l) => Some(nfc(&l)),
        None if canonical => Some(nfc(&entry.phon)),
        None => None,
    };
    info.key = Some(MergeKey {
        category,
        key_fields,
        vocalized_lemma,
    });
    info
}

/// Outcome of [`Merger::place`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    NewEntry,
    AttachInflected,
    PromoteLemma,
    /// Key has unknown fields; placed by [`Merger::finish`].
    Deferred,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PlacementCounts {
    pub new_entries: usize,
    pub attached: usize,
    pub promoted: usize,
}

/// The LMF pieces one projected entry contributes.
#[derive(Debug, Clone)]
struct Pieces {
    category: LexicalCategory,
    form: LmfForm,
    entry_attributes: Attributes,
    frames: Vec<SubcatFrame>,
    senses: Vec<SemanticPredicate>,
    source: SourceRef,
}

fn set_attribute(
    attrs: &mut Attributes,
    name: &str,
    value: &str,
    source: &str,
    origin: &SourceRef,
    diags: &mut Vec<Diagnostic>,
) {
    match attrs.get(name) {
        None => {
            attrs.insert(name.to_string(), value.to_string());
        }
        Some(v) if v == value => {}
        Some(v) => {
            diags.push(
                Diagnostic::new(
                    DiagnosticKind::AttributeConflict,
                    format!("{name}: {v:?} vs {value:?} from {source}; the latter kept as {PASSTHROUGH_PREFIX}{source}"),
                )
                .at(origin)
                .on(name),
            );
            attrs.insert(format!("{PASSTHROUGH_PREFIX}{source}"), value.to_string());
        }
    }
}

fn pieces(entry: &HpsgEntry, projection: &Projection, diags: &mut Vec<Diagnostic>) -> Pieces {
    let mut form = LmfForm::inflected(entry.phon.clone());
    let mut entry_attributes = Attributes::new();
    for e in &projection.emissions {
        let target = match e.target_class {
            TargetClass::LexicalEntry => &mut entry_attributes,
            TargetClass::Form => &mut form.attributes,
            _ => continue,
        };
        if e.attribute == ATTR_WRITTEN_FORM {
            continue;
        }
        set_attribute(target, &e.attribute, &e.value, &e.source, &entry.source, diags);
    }
    Pieces {
        category: projection.category,
        form,
        entry_attributes,
        frames: frames_from(&projection.emissions),
        senses: senses_from(&projection.emissions),
        source: entry.source.clone(),
    }
}

/// Groups emissions by `<group>/<index>` in order of first appearance.
fn grouped<'e>(
    emissions: &'e [Emission],
    target: TargetClass,
) -> Vec<Vec<Vec<&'e Emission>>> {
    let mut groups: Vec<(&str, Vec<(usize, Vec<&Emission>)>)> = Vec::new();
    for e in emissions.iter().filter(|e| e.target_class == target) {
        let Some((group, index)) = e.group() else { continue };
        let gi = match groups.iter().position(|(g, _)| *g == group) {
            Some(i) => i,
            None => {
                groups.push((group, Vec::new()));
                groups.len() - 1
            }
        };
        let members = &mut groups[gi].1;
        match members.iter_mut().find(|(i, _)| *i == index) {
            Some((_, list)) => list.push(e),
            None => members.push((index, vec![e])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| members.into_iter().map(|(_, list)| list).collect())
        .collect()
}

fn frames_from(emissions: &[Emission]) -> Vec<SubcatFrame> {
    let mut frames: Vec<SubcatFrame> = Vec::new();
    for group in grouped(emissions, TargetClass::SyntacticArgument) {
        let arguments = group
            .into_iter()
            .map(|parts| {
                let mut arg = SyntacticArgument::new("", "");
                for e in parts {
                    match e.attribute.as_str() {
                        ATTR_FUNCTION => arg.function = e.value.clone(),
                        ATTR_CONSTITUENT => arg.constituent = e.value.clone(),
                        other => {
                            arg.attributes.insert(other.to_string(), e.value.clone());
                        }
                    }
                }
                arg
            })
            .collect();
        push_frame(&mut frames, SubcatFrame {
            id: String::new(),
            arguments,
        });
    }
    frames
}

fn push_frame(frames: &mut Vec<SubcatFrame>, frame: SubcatFrame) -> bool {
    if frame.arguments.is_empty() || frames.iter().any(|f| f.same_content(&frame)) {
        return false;
    }
    frames.push(frame);
    true
}

fn senses_from(emissions: &[Emission]) -> Vec<SemanticPredicate> {
    let mut senses = Vec::new();
    for group in grouped(emissions, TargetClass::SemanticArgument) {
        let arguments: Vec<SemanticArgument> = group
            .into_iter()
            .map(|parts| {
                let mut arg = SemanticArgument {
                    role: String::new(),
                    value: String::new(),
                    label: None,
                };
                for e in parts {
                    if e.attribute == ATTR_LABEL {
                        arg.label = Some(e.value.clone());
                    } else {
                        arg.role = e.attribute.clone();
                        arg.value = e.value.clone();
                    }
                }
                arg
            })
            .collect();
        push_sense(&mut senses, SemanticPredicate {
            id: String::new(),
            arguments,
            links: Vec::new(),
        });
    }
    senses
}

fn push_sense(senses: &mut Vec<SemanticPredicate>, sense: SemanticPredicate) {
    if !sense.arguments.is_empty() && !senses.iter().any(|s| s.arguments == sense.arguments) {
        senses.push(sense);
    }
}

#[derive(Debug, Clone)]
struct Draft {
    category: LexicalCategory,
    key: Option<MergeKey>,
    /// `None` while the entry is seeded only by inflected forms.
    lemma: Option<LmfForm>,
    /// Set once a canonical form has supplied the entry attributes.
    canonical_attributes: bool,
    attributes: Attributes,
    inflected: Vec<LmfForm>,
    frames: Vec<SubcatFrame>,
    senses: Vec<SemanticPredicate>,
}

struct Deferred {
    key: MergeKey,
    pieces: Pieces,
}

/// Result of a merge run.
#[derive(Debug, Clone)]
pub struct MergeOutcome {
    pub lexicon: LmfLexicon,
    pub diagnostics: Vec<Diagnostic>,
    pub counts: BTreeMap<LexicalCategory, PlacementCounts>,
}

/// Accumulates placements; [`Merger::finish`] yields the lexicon.
pub struct Merger<'r> {
    registry: &'r Registry,
    drafts: Vec<Draft>,
    index: HashMap<MergeKey, usize>,
    /// Content of keyless entries, for dropping exact repeats.
    standalone: HashMap<String, usize>,
    deferred: Vec<Deferred>,
    /// Merge diagnostics with the draft they concern.
    diagnostics: Vec<(Option<usize>, Diagnostic)>,
    counts: BTreeMap<LexicalCategory, PlacementCounts>,
}

impl<'r> Merger<'r> {
    pub fn new(registry: &'r Registry) -> Self {
        Merger {
            registry,
            drafts: Vec::new(),
            index: HashMap::new(),
            standalone: HashMap::new(),
            deferred: Vec::new(),
            diagnostics: Vec::new(),
            counts: BTreeMap::new(),
        }
    }

    fn count(&mut self, category: LexicalCategory, placement: Placement) {
        let c = self.counts.entry(category).or_default();
        match placement {
            Placement::NewEntry => c.new_entries += 1,
            Placement::AttachInflected => c.attached += 1,
            Placement::PromoteLemma => c.promoted += 1,
            Placement::Deferred => {}
        }
    }

    fn report(&mut self, draft: Option<usize>, diags: Vec<Diagnostic>) {
        self.diagnostics.extend(diags.into_iter().map(|d| (draft, d)));
    }

    /// Places one projected entry.
    pub fn place(&mut self, entry: &HpsgEntry, projection: &Projection) -> Placement {
        let info = compute_merge_key(entry, projection, self.registry);
        self.report(None, info.diagnostics);
        let mut diags = Vec::new();
        let pieces = pieces(entry, projection, &mut diags);
        let category = pieces.category;
        let placement = match info.key {
            None => {
                let (placement, draft) = self.standalone(pieces);
                self.report(Some(draft), diags);
                placement
            }
            Some(key) if !key.is_bound() => {
                self.report(None, diags);
                self.deferred.push(Deferred { key, pieces });
                Placement::Deferred
            }
            Some(key) => {
                let (placement, draft) = self.place_bound(key, pieces, info.canonical);
                self.report(Some(draft), diags);
                placement
            }
        };
        self.count(category, placement);
        placement
    }


    fn new_draft(&mut self, pieces: Pieces, key: Option<MergeKey>, canonical: bool) -> usize {
        let mut form = pieces.form;
        let (lemma, inflected) = if canonical {
            form.kind = FormKind::Lemma;
            (Some(form), Vec::new())
        } else {
            (None, vec![form])
        };
        self.drafts.push(Draft {
            category: pieces.category,
            key,
            lemma,
            canonical_attributes: canonical,
            attributes: pieces.entry_attributes,
            inflected,
            frames: pieces.frames,
            senses: pieces.senses,
        });
        self.drafts.len() - 1
    }

    fn standalone(&mut self, pieces: Pieces) -> (Placement, usize) {
        let content = format!(
            "{:?}\u{1}{}\u{1}{:?}\u{1}{:?}\u{1}{:?}\u{1}{:?}",
            pieces.category,
            pieces.form.orthography,
            pieces.form.attributes,
            pieces.entry_attributes,
            pieces.frames,
            pieces.senses
        );
        if let Some(&draft) = self.standalone.get(&content) {
            let d = Diagnostic::new(
                DiagnosticKind::DuplicateCanonical,
                format!("{} repeats an existing entry; dropped", pieces.form.orthography),
            )
            .at(&pieces.source);
            self.report(Some(draft), vec![d]);
            return (Placement::AttachInflected, draft);
        }
        let draft = self.new_draft(pieces, None, true);
        self.standalone.insert(content, draft);
        (Placement::NewEntry, draft)
    }

    fn place_bound(&mut self, key: MergeKey, pieces: Pieces, canonical: bool) -> (Placement, usize) {
        let Some(&draft) = self.index.get(&key) else {
            let draft = self.new_draft(pieces, Some(key.clone()), canonical);
            self.index.insert(key, draft);
            return (Placement::NewEntry, draft);
        };
        if !canonical {
            self.join(draft, pieces, false);
            return (Placement::AttachInflected, draft);
        }
        if self.drafts[draft].lemma.is_none() {
            let mut form = pieces.form.clone();
            form.kind = FormKind::Lemma;
            self.drafts[draft].lemma = Some(form);
            self.join_entry_level(draft, &pieces, true);
            self.drafts[draft].canonical_attributes = true;
            return (Placement::PromoteLemma, draft);
        }
        self.duplicate_canonical(draft, pieces);
        (Placement::AttachInflected, draft)
    }

    /// Adds the form as an inflected form and folds the entry-level pieces.
    fn join(&mut self, draft: usize, pieces: Pieces, canonical: bool) {
        self.join_entry_level(draft, &pieces, canonical);
        self.attach_form(draft, pieces.form, &pieces.source);
    }

    fn attach_form(&mut self, draft: usize, mut form: LmfForm, source: &SourceRef) {
        form.kind = FormKind::Inflected;
        let d = &mut self.drafts[draft];
        let same = |f: &LmfForm| f.orthography == form.orthography && f.attributes == form.attributes;
        if d.lemma.as_ref().is_some_and(same) || d.inflected.iter().any(same) {
            let diag = Diagnostic::new(
                DiagnosticKind::DuplicateForm,
                format!("form {} is already present; dropped", form.orthography),
            )
            .at(source);
            self.report(Some(draft), vec![diag]);
            return;
        }
        d.inflected.push(form);
    }

    fn join_entry_level(&mut self, draft: usize, pieces: &Pieces, canonical: bool) {
        let mut diags = Vec::new();
        let d = &mut self.drafts[draft];
        let incoming_wins = match (d.canonical_attributes, canonical) {
            (false, true) => Some(true),
            (true, false) => Some(false),
            _ => None,
        };
        fold_attributes(
            &mut d.attributes,
            &pieces.entry_attributes,
            incoming_wins,
            &pieces.source,
            &mut diags,
        );
        for frame in &pieces.frames {
            push_frame(&mut d.frames, frame.clone());
        }
        for sense in &pieces.senses {
            push_sense(&mut d.senses, sense.clone());
        }
        self.report(Some(draft), diags);
    }

    fn duplicate_canonical(&mut self, draft: usize, pieces: Pieces) {
        self.join_entry_level(draft, &pieces, true);
        let mut diags = Vec::new();
        let d = &mut self.drafts[draft];
        let lemma = d.lemma.as_mut().expect("checked by caller");
        let mut incoming = pieces.form;
        if lemma.orthography == incoming.orthography {
            diags.push(
                Diagnostic::new(
                    DiagnosticKind::DuplicateCanonical,
                    format!("canonical form {} seen again; folded", incoming.orthography),
                )
                .at(&pieces.source),
            );
            fold_attributes(&mut lemma.attributes, &incoming.attributes, None, &pieces.source, &mut diags);
            self.report(Some(draft), diags);
            return;
        }
        // same NFC text, different code points: both spellings are kept
        diags.push(
            Diagnostic::new(
                DiagnosticKind::DuplicateCanonical,
                format!(
                    "canonical forms {} and {} differ only in encoding; the smaller is the lemma",
                    lemma.orthography, incoming.orthography
                ),
            )
            .at(&pieces.source),
        );
        if incoming.orthography < lemma.orthography {
            incoming.kind = FormKind::Lemma;
            std::mem::swap(lemma, &mut incoming);
        }
        self.report(Some(draft), diags);
        self.attach_form(draft, incoming, &pieces.source);
    }

    /// Resolves deferred forms and provisional lemmas, then returns the
    /// lexicon in canonical order.
    pub fn finish(mut self, language: &str) -> MergeOutcome {
        let mut bound: Vec<(MergeKey, usize)> =
            self.index.iter().map(|(k, d)| (k.clone(), *d)).collect();
        bound.sort();
        let mut groups: BTreeMap<MergeKey, usize> = BTreeMap::new();
        for Deferred { key, pieces } in std::mem::take(&mut self.deferred) {
            let category = pieces.category;
            let candidates: Vec<usize> = bound
                .iter()
                .filter(|(k, _)| key.admits(k))
                .map(|(_, d)| *d)
                .collect();
            if let [draft] = candidates.as_slice() {
                self.join(*draft, pieces, false);
                self.count(category, Placement::AttachInflected);
                continue;
            }
            if candidates.len() > 1 {
                let diag = Diagnostic::new(
                    DiagnosticKind::AmbiguousFamily,
                    format!(
                        "{} matches {} entries under {key}; kept in a separate entry",
                        pieces.form.orthography,
                        candidates.len()
                    ),
                )
                .at(&pieces.source);
                self.report(None, vec![diag]);
            }
            match groups.get(&key) {
                Some(&draft) => {
                    self.join(draft, pieces, false);
                    self.count(category, Placement::AttachInflected);
                }
                None => {
                    let draft = self.new_draft(pieces, Some(key.clone()), false);
                    groups.insert(key, draft);
                    self.count(category, Placement::NewEntry);
                }
            }
        }

        for i in 0..self.drafts.len() {
            if self.drafts[i].lemma.is_some() {
                continue;
            }
            let d = &mut self.drafts[i];
            let pick = (0..d.inflected.len())
                .min_by(|&a, &b| {
                    let (fa, fb) = (&d.inflected[a], &d.inflected[b]);
                    (nfc(&fa.orthography), &fa.attributes, &fa.orthography)
                        .cmp(&(nfc(&fb.orthography), &fb.attributes, &fb.orthography))
                })
                .expect("pending entries hold at least one form");
            let mut lemma = d.inflected.remove(pick);
            lemma.kind = FormKind::Lemma;
            let message = format!(
                "no canonical form for {}; {} used as provisional lemma",
                d.key.as_ref().map_or_else(String::new, ToString::to_string),
                lemma.orthography
            );
            d.lemma = Some(lemma);
            self.report(Some(i), vec![Diagnostic::new(DiagnosticKind::UnresolvedLemma, message)]);
        }

        let temp_ids: Vec<String> = self
            .drafts
            .iter()
            .enumerate()
            .map(|(i, d)| format!("{language}:{}:{i}", d.category))
            .collect();
        let entries = self
            .drafts
            .into_iter()
            .zip(&temp_ids)
            .map(|(d, id)| build_entry(id.clone(), d))
            .collect();
        let mut resource = LmfLexicalResource {
            global_info: Attributes::new(),
            lexicons: vec![LmfLexicon {
                language: language.to_string(),
                entries,
            }],
        };
        let renamed = canonicalize(&mut resource);
        let diagnostics = self
            .diagnostics
            .into_iter()
            .map(|(draft, mut diag)| {
                diag.entry = draft.and_then(|i| renamed.get(&temp_ids[i]).cloned());
                diag
            })
            .collect();
        MergeOutcome {
            lexicon: resource.lexicons.pop().expect("one lexicon"),
            diagnostics,
            counts: self.counts,
        }
    }
}

/// Folds `incoming` into `target`. On conflict `incoming_wins` decides;
/// `None` keeps the smaller value so the result does not depend on order.
fn fold_attributes(
    target: &mut Attributes,
    incoming: &Attributes,
    incoming_wins: Option<bool>,
    source: &SourceRef,
    diags: &mut Vec<Diagnostic>,
) {
    for (name, value) in incoming {
        let Some(current) = target.get(name) else {
            target.insert(name.clone(), value.clone());
            continue;
        };
        if current == value {
            continue;
        }
        let take = incoming_wins.unwrap_or(value < current);
        let (kept, other) = if take { (value, current) } else { (current, value) };
        diags.push(
            Diagnostic::new(
                DiagnosticKind::AttributeConflict,
                format!("{name}: kept {kept:?}, other value {other:?}"),
            )
            .at(source)
            .on(name.clone()),
        );
        if take {
            target.insert(name.clone(), value.clone());
        }
    }
}

fn build_entry(id: String, draft: Draft) -> LmfLexicalEntry {
    let mut entry = LmfLexicalEntry {
        id,
        attributes: draft.attributes,
        lemma: draft.lemma.expect("lemmas are resolved before building"),
        inflected_forms: draft.inflected,
        syntactic_behaviours: draft.frames,
        senses: draft.senses,
    };
    entry.renumber_children();
    for sense in &mut entry.senses {
        let mut links = Vec::new();
        for arg in &sense.arguments {
            let Some(label) = &arg.label else { continue };
            for frame in &entry.syntactic_behaviours {
                for target in frame.arguments.iter().filter(|a| a.attributes.get(ATTR_LABEL) == Some(label)) {
                    links.push(ArgumentLink {
                        role: arg.role.clone(),
                        target: target.id.clone(),
                    });
                }
            }
        }
        sense.links = links;
    }
    entry
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fs::{FeatureStructure, FeatureValue};
    use crate::rules::{project_entry, RuleSet};
    use crate::schema::classify;

    fn entry(ordinal: usize, features: &[(&str, &str)]) -> HpsgEntry {
        let mut body = FeatureStructure::new();
        for (n, v) in features {
            body.push(*n, FeatureValue::text(*v));
        }
        HpsgEntry {
            phon: features.iter().find(|(n, _)| *n == "PHON").unwrap().1.to_string(),
            body,
            source: SourceRef::new("t.xml", ordinal),
        }
    }

    fn verb(phon: &str, extra: &[(&'static str, &'static str)]) -> Vec<(&'static str, String)> {
        let mut v: Vec<(&str, String)> = vec![
            ("PHON", phon.to_string()),
            ("MAJ", "verbe".into()),
            ("VFORM", "mutaṣṣarf".into()),
            ("DENUDE", "mujarrid".into()),
            ("SCHEME", "فَعَلَ".into()),
        ];
        v.extend(extra.iter().map(|(n, x)| (*n, x.to_string())));
        v
    }

    fn dhahaba() -> Vec<(&'static str, String)> {
        verb("ذَهَبَ", &[("RADICAL", "ذ ه ب"), ("TENSE", "perfect"), ("PERSON", "third"), ("NUMBER", "singular")])
    }

    fn dhahabna() -> Vec<(&'static str, String)> {
        verb("ذَهَبْنَا", &[("RADICAL", "ذ ه ب"), ("TENSE", "perfect"), ("PERSON", "first"), ("NUMBER", "plural")])
    }

    fn run(inputs: &[Vec<(&'static str, String)>]) -> MergeOutcome {
        let reg = Registry::builtin();
        let rules = RuleSet::default();
        let mut merger = Merger::new(&reg);
        for (i, feats) in inputs.iter().enumerate() {
            let borrowed: Vec<(&str, &str)> = feats.iter().map(|(n, v)| (*n, v.as_str())).collect();
            let e = entry(i, &borrowed);
            let p = project_entry(&e, classify(&e).unwrap(), &reg, &rules);
            merger.place(&e, &p);
        }
        merger.finish("ar")
    }

    fn kinds(o: &MergeOutcome) -> Vec<DiagnosticKind> {
        o.diagnostics.iter().map(|d| d.kind).collect()
    }

    #[test]
    fn dhahaba_family_merges_in_both_orders() {
        let a = run(&[dhahaba(), dhahabna()]);
        let b = run(&[dhahabna(), dhahaba()]);
        assert_eq!(a.lexicon, b.lexicon);
        assert_eq!(a.lexicon.entries.len(), 1);
        let e = &a.lexicon.entries[0];
        assert_eq!(e.lemma.orthography, "ذَهَبَ");
        assert_eq!(e.inflected_forms.len(), 1);
        assert_eq!(e.inflected_forms[0].orthography, "ذَهَبْنَا");
        assert_eq!(e.attributes["root"], "ذ ه ب");
        assert_eq!(e.inflected_forms[0].attributes["grammaticalNumber"], "plural");
        assert!(a.diagnostics.is_empty(), "{:?}", a.diagnostics);
    }

    #[test]
    fn bound_inflected_form_seeds_pending_entry_then_promotes() {
        let mut infl = dhahabna();
        infl.push(("LEMMA", "ذَهَبَ".into()));
        let reg = Registry::builtin();
        let rules = RuleSet::default();
        let mut m = Merger::new(&reg);
        let mut places = Vec::new();
        for (i, f) in [infl.clone(), dhahaba()].iter().enumerate() {
            let borrowed: Vec<(&str, &str)> = f.iter().map(|(n, v)| (*n, v.as_str())).collect();
            let e = entry(i, &borrowed);
            let p = project_entry(&e, classify(&e).unwrap(), &reg, &rules);
            places.push(m.place(&e, &p));
        }
        assert_eq!(places, [Placement::NewEntry, Placement::PromoteLemma]);
        let o = m.finish("ar");
        assert_eq!(o.lexicon.entries.len(), 1);
        let c = o.counts[&LexicalCategory::Verb];
        assert_eq!((c.new_entries, c.attached, c.promoted), (1, 0, 1));
        assert_eq!(o.lexicon, run(&[dhahaba(), infl]).lexicon);
    }

    #[test]
    fn homographs_stay_apart() {
        let kharaja = verb("خَرَجَ", &[("RADICAL", "خرج"), ("NUMBER", "singular")]);
        let kharija = verb("خَرِجَ", &[("RADICAL", "خرج"), ("NUMBER", "singular")]);
        let o = run(&[kharaja.clone(), kharija.clone()]);
        assert_eq!(o.lexicon.entries.len(), 2);

        // an unlabeled inflected form cannot choose between them
        let kharajtu = verb("خَرَجْتُ", &[("RADICAL", "خرج"), ("PERSON", "first")]);
        let o = run(&[kharaja.clone(), kharija.clone(), kharajtu.clone()]);
        assert_eq!(o.lexicon.entries.len(), 3);
        assert!(kinds(&o).contains(&DiagnosticKind::AmbiguousFamily));

        let mut labelled = kharajtu;
        labelled.push(("LEMMA", "خَرَجَ".into()));
        let o = run(&[kharaja, kharija, labelled]);
        assert_eq!(o.lexicon.entries.len(), 2);
        let with_form = o.lexicon.entries.iter().find(|e| !e.inflected_forms.is_empty()).unwrap();
        assert_eq!(with_form.lemma.orthography, "خَرَجَ");
    }

    #[test]
    fn orphan_forms_get_a_provisional_lemma() {
        let a = verb("كَتَبْنَا", &[("RADICAL", "كتب"), ("NUMBER", "plural")]);
        let b = verb("كَتَبُوا", &[("RADICAL", "كتب"), ("NUMBER", "plural"), ("PERSON", "third")]);
        let o = run(&[a.clone(), b.clone()]);
        assert_eq!(o.lexicon.entries.len(), 1);
        assert_eq!(o.lexicon.entries[0].inflected_forms.len(), 1);
        assert!(kinds(&o).contains(&DiagnosticKind::UnresolvedLemma));
        assert_eq!(o.lexicon, run(&[b, a]).lexicon);
    }

    #[test]
    fn particles_and_non_inflecting_entries_stand_alone() {
        let fi = vec![("PHON", "في".to_string()), ("MAJ", "preposition".into())];
        let fi2 = vec![("PHON", "فيما".to_string()), ("MAJ", "preposition".into())];
        let o = run(&[fi.clone(), fi2]);
        assert_eq!(o.lexicon.entries.len(), 2);
        let info = {
            let reg = Registry::builtin();
            let e = entry(0, &[("PHON", "في"), ("MAJ", "preposition")]);
            let p = project_entry(&e, LexicalCategory::Particle, &reg, &RuleSet::default());
            compute_merge_key(&e, &p, &reg)
        };
        assert!(info.key.is_none());
    }

    #[test]
    fn noun_key_uses_nature_and_radical() {
        let reg = Registry::builtin();
        let e = entry(
            0,
            &[
                ("PHON", "مَجْمَع"),
                ("MAJ", "nom"),
                ("NFORM", "mutaṣṣarf jāmed"),
                ("NATURE", "masdar mīmī"),
                ("RADICAL", "جمع"),
            ],
        );
        let p = project_entry(&e, LexicalCategory::Noun, &reg, &RuleSet::default());
        let key = compute_merge_key(&e, &p, &reg).key.unwrap();
        let names: Vec<_> = key.key_fields.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["NATURE", "RADICAL"]);
        assert_eq!(key.vocalized_lemma.as_deref(), Some("مَجْمَع"));

        let no_nature = entry(0, &[("PHON", "x"), ("MAJ", "nom"), ("NFORM", "mutaṣṣarf jāmed"), ("RADICAL", "جمع")]);
        let p = project_entry(&no_nature, LexicalCategory::Noun, &reg, &RuleSet::default());
        let info = compute_merge_key(&no_nature, &p, &reg);
        assert!(info.key.is_none());
        assert_eq!(info.diagnostics[0].kind, DiagnosticKind::MergeKey);
    }

    #[test]
    fn repeating_the_input_is_idempotent() {
        let once = run(&[dhahaba(), dhahabna()]);
        let twice = run(&[dhahaba(), dhahabna(), dhahabna(), dhahaba()]);
        assert_eq!(once.lexicon, twice.lexicon);
        let k = kinds(&twice);
        assert!(k.contains(&DiagnosticKind::DuplicateCanonical));
        assert!(k.contains(&DiagnosticKind::DuplicateForm));
    }

    #[test]
    fn conflicting_entry_attributes_are_reported_with_entry_id() {
        let a = verb("ذَهَبَ", &[("RADICAL", "ذهب"), ("CFORM", "thulāthī")]);
        let b = verb("ذَهَبَ", &[("RADICAL", "ذهب"), ("CFORM", "rubāʿī")]);
        let o = run(&[a.clone(), b.clone()]);
        let conflict = o
            .diagnostics
            .iter()
            .find(|d| d.kind == DiagnosticKind::AttributeConflict)
            .unwrap();
        assert_eq!(conflict.entry.as_deref(), Some("ar:verb:0"));
        assert!(conflict.message.contains("thulāthī") && conflict.message.contains("rubāʿī"));
        assert_eq!(o.lexicon, run(&[b, a]).lexicon);
    }

    #[test]
    fn links_follow_shared_labels() {
        let reg = Registry::builtin();
        let e = crate::rules::tests::kataba();
        let p = project_entry(&e, LexicalCategory::Verb, &reg, &RuleSet::default());
        let mut m = Merger::new(&reg);
        m.place(&e, &p);
        let o = m.finish("ar");
        let entry = &o.lexicon.entries[0];
        assert_eq!(entry.syntactic_behaviours.len(), 1);
        assert_eq!(entry.syntactic_behaviours[0].arguments.len(), 2);
        let sense = &entry.senses[0];
        assert_eq!(sense.arguments.len(), 2);
        let targets: Vec<_> = sense.links.iter().map(|l| (l.role.as_str(), l.target.as_str())).collect();
        assert_eq!(targets, [("agent-noun", "ar:verb:0.f0.a0"), ("patient-noun", "ar:verb:0.f0.a1")]);
    }
}
