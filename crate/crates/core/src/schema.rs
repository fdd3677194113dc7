//! Registry of the Arabic-adapted HPSG feature inventory.
//!
//! Each feature is classified by linguistic layer (which LMF component it
//! lands in) and by scope: entry-level features keep one value across a
//! canonical form and its inflected forms, form-level features vary per
//! form. The registry also carries the value spellings that decide whether
//! an entry admits inflected forms and whether a form is canonical.
//!
//! The built-in table can be overridden by a TOML file:
//!
//! ```toml
//! version = 1
//!
//! [[feature]]
//! name = "ASPECT"
//! layer = "morphological"      # morphological | syntactic | semantic
//! scope = "form"               # entry | form
//! categories = ["verb"]        # noun | verb | particle
//! values = ["perfective", "imperfective"]   # optional value domain
//! lmf = "aspect"               # optional LMF data category
//! canonical = ["perfective"]   # optional canonical values
//! container = false            # optional; AVM is descended, not projected
//!
//! [inflection]                 # every list optional; replaces the built-in list
//! nform_non_inflecting = ["ghair mutaṣṣarf"]
//! vform_non_inflecting = ["jāmid"]
//! denuded = ["mujarrid"]
//! base_schemes = ["فعل", "أفعل"]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::{Diagnostic, DiagnosticKind};
use crate::fs::HpsgEntry;
use crate::text::{fold, scheme_key};

pub const REGISTRY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexicalCategory {
    Noun,
    Verb,
    Particle,
}

impl LexicalCategory {
    pub const ALL: [LexicalCategory; 3] = [
        LexicalCategory::Noun,
        LexicalCategory::Verb,
        LexicalCategory::Particle,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LexicalCategory::Noun => "noun",
            LexicalCategory::Verb => "verb",
            LexicalCategory::Particle => "particle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        LexicalCategory::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for LexicalCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureLayer {
    Morphological,
    Syntactic,
    Semantic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureScope {
    #[serde(rename = "entry", alias = "entry_level")]
    EntryLevel,
    #[serde(rename = "form", alias = "form_level")]
    FormLevel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub layer: FeatureLayer,
    pub scope: FeatureScope,
    pub categories: BTreeSet<LexicalCategory>,
    #[serde(default, rename = "values")]
    pub value_domain: Option<BTreeSet<String>>,
    #[serde(default, rename = "lmf")]
    pub lmf_attribute: Option<String>,
    /// Values a form-level feature takes on a canonical form.
    #[serde(default, rename = "canonical")]
    pub canonical_values: Option<BTreeSet<String>>,
    /// The feature only groups other features; its AVM is descended.
    #[serde(default)]
    pub container: bool,
}

impl FeatureDescriptor {
    pub fn applies_to(&self, category: LexicalCategory) -> bool {
        self.categories.contains(&category)
    }

    /// `None` when the feature has no value domain.
    pub fn in_domain(&self, value: &str) -> Option<bool> {
        self.value_domain.as_ref().map(|d| contains_folded(d, value))
    }

    /// `None` when the feature does not take part in canonical detection.
    pub fn is_canonical_value(&self, value: &str) -> Option<bool> {
        self.canonical_values
            .as_ref()
            .map(|d| contains_folded(d, value))
    }
}

fn contains_folded(set: &BTreeSet<String>, value: &str) -> bool {
    let key = fold(value);
    set.iter().any(|v| fold(v) == key)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InflectionSettings {
    /// NFORM values of nouns that admit no inflected form.
    pub nform_non_inflecting: BTreeSet<String>,
    /// VFORM values of verbs that admit no inflected form.
    pub vform_non_inflecting: BTreeSet<String>,
    /// DENUDE values marking a denuded (canonical-class) verb.
    pub denuded: BTreeSet<String>,
    /// Unvocalized base schemes of canonical and derived verbs.
    pub base_schemes: BTreeSet<String>,
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("unrecognized lexical category {0:?}")]
    UnknownCategory(String),
    #[error("registry file: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    features: BTreeMap<String, FeatureDescriptor>,
    pub inflection: InflectionSettings,
}

fn key(name: &str) -> String {
    name.to_ascii_uppercase()
}

fn set(values: &[&str]) -> BTreeSet<String> {
    values.iter().map(|v| v.to_string()).collect()
}

use FeatureLayer::{Morphological as Morph, Semantic as Sem, Syntactic as Syn};
use FeatureScope::{EntryLevel as Entry, FormLevel as Form};
use LexicalCategory::{Noun, Particle, Verb};

const ALL: &[LexicalCategory] = &[Noun, Verb, Particle];
const NV: &[LexicalCategory] = &[Noun, Verb];

fn feat(
    name: &str,
    layer: FeatureLayer,
    scope: FeatureScope,
    categories: &[LexicalCategory],
    lmf: Option<&str>,
) -> FeatureDescriptor {
    FeatureDescriptor {
        name: name.to_string(),
        layer,
        scope,
        categories: categories.iter().copied().collect(),
        value_domain: None,
        lmf_attribute: lmf.map(str::to_string),
        canonical_values: None,
        container: false,
    }
}

impl FeatureDescriptor {
    fn domain(mut self, values: &[&str]) -> Self {
        self.value_domain = Some(set(values));
        self
    }

    fn canonical(mut self, values: &[&str]) -> Self {
        self.canonical_values = Some(set(values));
        self
    }

    fn grouping(mut self) -> Self {
        self.container = true;
        self
    }
}

fn builtin_features() -> Vec<FeatureDescriptor> {
    vec![
        // morphological, mostly under HEAD
        feat("PHON", Morph, Form, ALL, Some("writtenForm")),
        feat("MAJ", Morph, Entry, ALL, Some("partOfSpeech")),
        feat("CFORM", Morph, Entry, NV, Some("ar:cform")).domain(&[
            "thulāthī",
            "rubāʿī",
            "ثلاثي",
            "رباعي",
            "trilateral",
            "quadrilateral",
        ]),
        feat("DENUDE", Morph, Entry, NV, Some("ar:denude")).domain(&[
            "mujarrid", "mazīd", "مجرد", "مزيد", "denuded", "increased",
        ]),
        feat("DIMINUTIVE", Morph, Form, &[Noun], Some("ar:diminutive"))
            .domain(&[
                "ghair muṣaḡḡar",
                "ṣīghat al-ttaṣḡīr",
                "غير مصغر",
                "مصغر",
                "non-diminutive",
                "diminutive",
            ])
            .canonical(&["ghair muṣaḡḡar", "غير مصغر", "non-diminutive"]),
        feat("RELATIVE", Morph, Form, &[Noun], Some("ar:relative"))
            .domain(&[
                "manṣūb",
                "ghair manṣūb",
                "منسوب",
                "غير منسوب",
                "relative",
                "non-relative",
            ])
            .canonical(&["ghair manṣūb", "غير منسوب", "non-relative"]),
        feat("NATURE", Morph, Entry, ALL, Some("ar:nature")),
        feat("RADICAL", Morph, Entry, NV, Some("root")),
        feat("ROOT", Morph, Entry, NV, Some("root")),
        feat("NFORM", Morph, Entry, &[Noun], Some("ar:nform")).domain(&[
            "mutaṣṣarf muchtak",
            "mutaṣṣarf jāmed",
            "ghair mutaṣṣarf",
            "متصرف مشتق",
            "متصرف جامد",
            "غير متصرف",
            "inflectional-derivative",
            "inflectional-inert",
            "non-inflectional",
        ]),
        feat("VFORM", Morph, Form, &[Verb], Some("ar:vform")),
        feat("SCHEME", Morph, Form, &[Verb], Some("scheme")),
        feat("DEFN", Morph, Form, &[Noun], Some("definiteness"))
            .domain(&["definite", "indefinite", "معرفة", "نكرة", "défini", "indéfini"])
            .canonical(&["indefinite", "نكرة", "indéfini"]),
        feat("GENR", Morph, Form, ALL, Some("gender")),
        feat("ORIGIN", Morph, Entry, &[Noun], Some("ar:origin")),
        feat("NUMBER", Morph, Form, ALL, Some("grammaticalNumber"))
            .canonical(&["singular", "sg", "مفرد", "singulier"]),
        feat("GENDER", Morph, Form, ALL, Some("gender")),
        feat("CASE", Morph, Form, ALL, Some("grammaticalCase")),
        feat("PERSON", Morph, Form, NV, Some("person")).canonical(&["third", "3", "غائب"]),
        feat("TENSE", Morph, Form, &[Verb], Some("tense"))
            .canonical(&["perfect", "past", "ماض", "ماضي", "accompli"]),
        feat("MOOD", Morph, Form, &[Verb], Some("mood")),
        feat("PFORM", Morph, Entry, &[Particle], Some("ar:pform")),
        feat("LEMMA", Morph, Entry, NV, Some("ar:lemma")),
        feat("HEAD", Morph, Entry, ALL, None).grouping(),
        // syntactic
        feat("SYNSEM", Syn, Entry, ALL, None).grouping(),
        feat("LOC", Syn, Entry, ALL, None).grouping(),
        feat("CAT", Syn, Entry, ALL, None).grouping(),
        feat("NONLOC", Syn, Entry, ALL, None).grouping(),
        feat("VALENCE", Syn, Entry, ALL, None).grouping(),
        feat("MOD", Syn, Entry, &[Noun], Some("function")),
        feat("SPR", Syn, Entry, NV, Some("function")),
        feat("SPEC", Syn, Entry, &[Particle], Some("function")),
        feat("COMPS", Syn, Entry, ALL, Some("function")),
        feat("SUJ", Syn, Entry, NV, Some("function")),
        feat("S-ARG", Syn, Entry, NV, Some("function")),
        feat("TOPIC", Syn, Entry, NV, Some("function")),
        feat("ATTRIBUT", Syn, Entry, NV, Some("function")),
        feat("VOICE", Syn, Form, &[Verb], Some("voice"))
            .domain(&[
                "active",
                "passive",
                "مبني للمعلوم",
                "مبني للمجهول",
                "actif",
                "passif",
            ])
            .canonical(&["active", "مبني للمعلوم", "actif"]),
        feat("SLASH", Syn, Entry, ALL, None),
        feat("FUNCTION", Syn, Entry, ALL, Some("function")),
        feat("CONSTITUENT", Syn, Entry, ALL, Some("syntacticConstituent")),
        feat("LABEL", Syn, Entry, ALL, Some("label")),
        // semantic, under CONT
        feat("CONT", Sem, Entry, ALL, None).grouping(),
        feat("INDEX", Sem, Entry, ALL, None).grouping(),
        feat("NUCLEUS", Sem, Entry, NV, Some("semanticPredicate")),
        feat("AGENT-NOUN", Sem, Entry, NV, Some("agent-noun")),
        feat("PATIENT-NOUN", Sem, Entry, NV, Some("patient-noun")),
        feat("RESTIND", Sem, Entry, &[Particle], Some("restriction")),
        feat("QUANTS", Sem, Entry, ALL, Some("quantifier")),
    ]
}

fn builtin_inflection() -> InflectionSettings {
    InflectionSettings {
        nform_non_inflecting: set(&["ghair mutaṣṣarf", "غير متصرف", "non-inflectional"]),
        vform_non_inflecting: set(&[
            "jāmid",
            "jāmed",
            "جامد",
            "ghair mutaṣṣarf",
            "غير متصرف",
            "non-inflecting",
        ]),
        denuded: set(&["mujarrid", "مجرد", "denuded"]),
        base_schemes: set(&[
            // denuded triliteral
            "فعل",
            // derived triliteral
            "أفعل",
            "فعّل",
            "فاعل",
            "انفعل",
            "افتعل",
            "افعلّ",
            "تفعّل",
            "تفاعل",
            "استفعل",
            "افعوعل",
            "افعوّل",
            "افعالّ",
            // quadrilateral
            "فعلل",
            "تفعلل",
            "افعنلل",
            "افعللّ",
        ]),
    }
}

/// Result of the inflection-admission test.
#[derive(Debug, Clone, PartialEq)]
pub struct Admission {
    pub admits: bool,
    pub diagnostic: Option<Diagnostic>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OverrideFile {
    version: u32,
    #[serde(default)]
    feature: Vec<FeatureDescriptor>,
    #[serde(default)]
    inflection: Option<InflectionOverride>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InflectionOverride {
    nform_non_inflecting: Option<BTreeSet<String>>,
    vform_non_inflecting: Option<BTreeSet<String>>,
    denuded: Option<BTreeSet<String>>,
    base_schemes: Option<BTreeSet<String>>,
}

impl Registry {
    /// The complete built-in table.
    pub fn builtin() -> Self {
        let mut features = BTreeMap::new();
        for d in builtin_features() {
            features.insert(key(&d.name), d);
        }
        Registry {
            features,
            inflection: builtin_inflection(),
        }
    }

    /// Built-in table with the overrides of a TOML registry file applied.
    pub fn with_overrides(text: &str) -> Result<Self, SchemaError> {
        let mut reg = Registry::builtin();
        reg.apply_overrides(text)?;
        Ok(reg)
    }

    pub fn load(path: &Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path)?;
        Registry::with_overrides(&text)
    }

    pub fn apply_overrides(&mut self, text: &str) -> Result<(), SchemaError> {
        let file: OverrideFile =
            toml::from_str(text).map_err(|e| SchemaError::Config(e.to_string()))?;
        if file.version != REGISTRY_FORMAT_VERSION {
            return Err(SchemaError::Config(format!(
                "unsupported version {} (expected {})",
                file.version, REGISTRY_FORMAT_VERSION
            )));
        }
        let mut seen = BTreeSet::new();
        for d in file.feature {
            if d.name.is_empty() {
                return Err(SchemaError::Config("feature with an empty name".into()));
            }
            if !seen.insert(key(&d.name)) {
                return Err(SchemaError::Config(format!("feature {} listed twice", d.name)));
            }
            self.features.insert(key(&d.name), d);
        }
        if let Some(inf) = file.inflection {
            if let Some(v) = inf.nform_non_inflecting {
                self.inflection.nform_non_inflecting = v;
            }
            if let Some(v) = inf.vform_non_inflecting {
                self.inflection.vform_non_inflecting = v;
            }
            if let Some(v) = inf.denuded {
                self.inflection.denuded = v;
            }
            if let Some(v) = inf.base_schemes {
                self.inflection.base_schemes = v;
            }
        }
        Ok(())
    }

    /// Case-insensitive lookup.
    pub fn lookup(&self, name: &str) -> Option<&FeatureDescriptor> {
        self.features.get(&key(name))
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &FeatureDescriptor> {
        self.features.values()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Whether the entry may have inflected forms (NFORM for nouns, VFORM
    /// for verbs; particles never do).
    pub fn admits_inflected_forms(
        &self,
        entry: &HpsgEntry,
        category: LexicalCategory,
    ) -> Admission {
        let (feature, non_inflecting) = match category {
            LexicalCategory::Particle => {
                return Admission {
                    admits: false,
                    diagnostic: None,
                }
            }
            LexicalCategory::Noun => ("NFORM", &self.inflection.nform_non_inflecting),
            LexicalCategory::Verb => ("VFORM", &self.inflection.vform_non_inflecting),
        };
        match entry.atom(feature) {
            Some(value) => Admission {
                admits: !contains_folded(non_inflecting, value),
                diagnostic: None,
            },
            None => Admission {
                admits: false,
                diagnostic: Some(
                    Diagnostic::new(
                        DiagnosticKind::MissingFeature,
                        format!("{category} {} has no {feature}; treated as non-inflecting", entry.phon),
                    )
                    .at(&entry.source)
                    .on(feature),
                ),
            },
        }
    }

    pub fn is_denuded(&self, denude_value: &str) -> bool {
        contains_folded(&self.inflection.denuded, denude_value)
    }

    pub fn is_base_scheme(&self, scheme: &str) -> bool {
        let k = scheme_key(scheme);
        self.inflection
            .base_schemes
            .iter()
            .any(|s| scheme_key(s) == k)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::builtin()
    }
}

/// Maps a MAJ spelling to a lexical category.
pub fn classify_major(major: &str) -> Result<LexicalCategory, SchemaError> {
    const VERB: &[&str] = &["verbe", "verb", "v", "فعل", "fiʿl", "fil"];
    const NOUN: &[&str] = &[
        "nom",
        "noun",
        "n",
        "اسم",
        "ism",
        "commonnoun",
        "propernoun",
        "nom propre",
        "nom commun",
    ];
    const PARTICLE: &[&str] = &[
        "particle",
        "particule",
        "preposition",
        "préposition",
        "prep",
        "حرف",
        "harf",
        "ḥarf",
        "outil",
        "tool",
    ];
    let k = fold(major);
    let hit = |list: &[&str]| list.iter().any(|s| fold(s) == k);
    if hit(VERB) {
        Ok(LexicalCategory::Verb)
    } else if hit(NOUN) {
        Ok(LexicalCategory::Noun)
    } else if hit(PARTICLE) {
        Ok(LexicalCategory::Particle)
    } else {
        Err(SchemaError::UnknownCategory(major.to_string()))
    }
}

/// Lexical category of an entry, from its MAJ value.
pub fn classify(entry: &HpsgEntry) -> Result<LexicalCategory, SchemaError> {
    match entry.major() {
        Some(m) => classify_major(m),
        None => Err(SchemaError::UnknownCategory(String::new())),
    }
}
