//! Declarative projection rules from HPSG features to LMF placements, and
//! the engine applying them to one entry.
//!
//! Rules are tried in order; the first whose match accepts the feature
//! (name, registry classification, value shape, whether the entry inflects)
//! produces the emissions. Container features (SYNSEM, HEAD, CONT, ...) are
//! descended instead of projected. A feature no rule accepts is kept as a
//! passthrough attribute `x-hpsg:<NAME>` and reported as a loss.
//!
//! Override files are TOML:
//!
//! ```toml
//! version = 1
//!
//! [[rule]]                # rules file: tried before the built-in table
//! id = "U1"
//! feature = "ASPECT"
//! target = "form"         # entry | form
//! attribute = "aspect"
//!
//! [[translate]]           # values file: value spellings rewritten before projection
//! feature = "VOICE"
//! from = "مبني للمعلوم"
//! to = "active"
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::{Diagnostic, DiagnosticKind};
use crate::fs::{FeatureStructure, FeatureValue, HpsgEntry};
use crate::lmf::SEMANTIC_ROLES;
use crate::schema::{FeatureDescriptor, FeatureLayer, FeatureScope, LexicalCategory, Registry};
use crate::text::fold;

pub const PASSTHROUGH_PREFIX: &str = "x-hpsg:";
pub const RULES_FORMAT_VERSION: u32 = 1;

/// Attribute names with a structural meaning in emissions.
pub const ATTR_WRITTEN_FORM: &str = "writtenForm";
pub const ATTR_FUNCTION: &str = "function";
pub const ATTR_CONSTITUENT: &str = "syntacticConstituent";
pub const ATTR_LABEL: &str = "label";
/// MAJ on particles and non-inflecting nouns and verbs.
pub const ATTR_GRAMMATICAL_CATEGORY: &str = "grammaticalCategory";

const UNSPECIFIED_CONSTITUENT: &str = "unspecified";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TargetClass {
    #[serde(rename = "entry")]
    LexicalEntry,
    #[serde(rename = "form")]
    Form,
    #[serde(rename = "frame")]
    SubcatFrame,
    #[serde(rename = "argument")]
    SyntacticArgument,
    #[serde(rename = "semantic")]
    SemanticArgument,
}

impl fmt::Display for TargetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetClass::LexicalEntry => "LexicalEntry",
            TargetClass::Form => "Form",
            TargetClass::SubcatFrame => "SubcatFrame",
            TargetClass::SyntacticArgument => "SyntacticArgument",
            TargetClass::SemanticArgument => "SemanticArgument",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueShape {
    Atomic,
    Complex,
}

impl ValueShape {
    pub fn of(value: &FeatureValue) -> Self {
        if value.is_atomic() {
            ValueShape::Atomic
        } else {
            ValueShape::Complex
        }
    }
}

/// Conditions a feature occurrence must meet. `None` fields accept anything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleMatch {
    /// Feature names (case-insensitive); empty accepts every name.
    pub features: Vec<String>,
    pub layer: Option<FeatureLayer>,
    pub scope: Option<FeatureScope>,
    pub shape: Option<ValueShape>,
    /// Whether the entry admits inflected forms.
    pub inflecting: Option<bool>,
    /// Required registry data category.
    pub lmf: Option<String>,
    /// The feature must have a registry data category.
    pub mapped: bool,
}

impl RuleMatch {
    pub fn accepts(
        &self,
        name: &str,
        descriptor: Option<&FeatureDescriptor>,
        shape: ValueShape,
        inflecting: bool,
    ) -> bool {
        if !self.features.is_empty() && !self.features.iter().any(|f| f.eq_ignore_ascii_case(name))
        {
            return false;
        }
        if self.shape.is_some_and(|s| s != shape) || self.inflecting.is_some_and(|i| i != inflecting)
        {
            return false;
        }
        let needs_descriptor =
            self.layer.is_some() || self.scope.is_some() || self.lmf.is_some() || self.mapped;
        if !needs_descriptor {
            return true;
        }
        let Some(d) = descriptor else { return false };
        self.layer.is_none_or(|l| l == d.layer)
            && self.scope.is_none_or(|s| s == d.scope)
            && (!self.mapped || d.lmf_attribute.is_some())
            && self
                .lmf
                .as_ref()
                .is_none_or(|l| d.lmf_attribute.as_deref() == Some(l.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeName {
    /// The feature's registry data category.
    Registry,
    Fixed(String),
    /// Per-feature names, falling back to the registry.
    PerFeature(Vec<(String, String)>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValueTransform {
    /// One attribute; complex values are written in compact AVM notation.
    Attribute(AttributeName),
    /// One syntactic argument per value element.
    SyntacticArguments,
    /// One semantic predicate per NUCLEUS value.
    SemanticPredicate,
    /// One semantic argument whose role is the feature's data category.
    SemanticRole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionRule {
    pub rule_id: String,
    /// Name the rule family carries in the published rule statements.
    pub alias: Option<String>,
    pub matches: RuleMatch,
    pub target_class: TargetClass,
    pub transform: ValueTransform,
}

/// One attribute placed on an LMF object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Emission {
    pub rule_id: String,
    /// HPSG feature the emission came from.
    pub source: String,
    pub target_class: TargetClass,
    pub attribute: String,
    pub value: String,
    /// `<group>/<index>`: the frame or predicate, and the argument in it.
    pub grouping_key: Option<String>,
}

impl Emission {
    pub fn is_passthrough(&self) -> bool {
        self.attribute.starts_with(PASSTHROUGH_PREFIX)
    }

    /// Splits the grouping key into group and argument index.
    pub fn group(&self) -> Option<(&str, usize)> {
        let key = self.grouping_key.as_deref()?;
        let (group, index) = key.rsplit_once('/')?;
        Some((group, index.parse().ok()?))
    }
}

fn rule(
    id: &str,
    alias: Option<&str>,
    matches: RuleMatch,
    target_class: TargetClass,
    transform: ValueTransform,
) -> ProjectionRule {
    ProjectionRule {
        rule_id: id.to_string(),
        alias: alias.map(str::to_string),
        matches,
        target_class,
        transform,
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// The built-in rule table, in match order.
pub fn builtin_rules() -> Vec<ProjectionRule> {
    use FeatureLayer::*;
    use FeatureScope::*;
    use TargetClass as T;
    use ValueTransform as V;
    let morph = |scope, inflecting| RuleMatch {
        layer: Some(Morphological),
        scope: Some(scope),
        inflecting: Some(inflecting),
        mapped: true,
        ..RuleMatch::default()
    };
    vec![
        rule(
            "morph.fixed.category",
            Some("R9m"),
            RuleMatch {
                features: names(&["MAJ", "PHON"]),
                inflecting: Some(false),
                ..RuleMatch::default()
            },
            T::LexicalEntry,
            V::Attribute(AttributeName::PerFeature(vec![
                ("MAJ".into(), ATTR_GRAMMATICAL_CATEGORY.into()),
                ("PHON".into(), ATTR_WRITTEN_FORM.into()),
            ])),
        ),
        rule(
            "morph.entry",
            Some("R5m"),
            morph(EntryLevel, true),
            T::LexicalEntry,
            V::Attribute(AttributeName::Registry),
        ),
        rule(
            "morph.form",
            Some("R5m"),
            morph(FormLevel, true),
            T::Form,
            V::Attribute(AttributeName::Registry),
        ),
        rule(
            "morph.fixed.entry",
            None,
            morph(EntryLevel, false),
            T::LexicalEntry,
            V::Attribute(AttributeName::Registry),
        ),
        rule(
            "morph.fixed.form",
            None,
            morph(FormLevel, false),
            T::Form,
            V::Attribute(AttributeName::Registry),
        ),
        rule(
            "syn.arguments",
            Some("R1syn"),
            RuleMatch {
                layer: Some(Syntactic),
                lmf: Some(ATTR_FUNCTION.into()),
                ..RuleMatch::default()
            },
            T::SyntacticArgument,
            V::SyntacticArguments,
        ),
        rule(
            "syn.attribute.entry",
            Some("R2syn"),
            RuleMatch {
                layer: Some(Syntactic),
                scope: Some(EntryLevel),
                shape: Some(ValueShape::Atomic),
                mapped: true,
                ..RuleMatch::default()
            },
            T::LexicalEntry,
            V::Attribute(AttributeName::Registry),
        ),
        rule(
            "syn.attribute.form",
            Some("R2syn"),
            RuleMatch {
                layer: Some(Syntactic),
                scope: Some(FormLevel),
                shape: Some(ValueShape::Atomic),
                mapped: true,
                ..RuleMatch::default()
            },
            T::Form,
            V::Attribute(AttributeName::Registry),
        ),
        rule(
            "sem.nucleus",
            Some("R1sem"),
            RuleMatch {
                features: names(&["NUCLEUS"]),
                ..RuleMatch::default()
            },
            T::SemanticArgument,
            V::SemanticPredicate,
        ),
        rule(
            "sem.role",
            None,
            RuleMatch {
                layer: Some(Semantic),
                mapped: true,
                ..RuleMatch::default()
            },
            T::SemanticArgument,
            V::SemanticRole,
        ),
    ]
}

/// Feature name to LMF data category for every mapped registry feature.
/// MAJ maps to partOfSpeech; on non-inflecting entries it lands in
/// [`ATTR_GRAMMATICAL_CATEGORY`] instead.
pub fn mapping_table(registry: &Registry) -> BTreeMap<String, String> {
    registry
        .descriptors()
        .filter_map(|d| Some((d.name.clone(), d.lmf_attribute.clone()?)))
        .collect()
}

/// Every attribute name the built-in rules can emit without the
/// passthrough prefix.
pub fn data_categories(registry: &Registry) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = mapping_table(registry).into_values().collect();
    out.insert(ATTR_GRAMMATICAL_CATEGORY.into());
    out.insert(ATTR_CONSTITUENT.into());
    out.insert(ATTR_LABEL.into());
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Translation {
    pub feature: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rule configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    version: u32,
    #[serde(default)]
    rule: Vec<RuleOverride>,
    #[serde(default)]
    translate: Vec<Translation>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleOverride {
    id: String,
    feature: String,
    target: TargetClass,
    attribute: String,
}

fn parse_rule_file(text: &str) -> Result<RuleFile, RuleError> {
    let file: RuleFile = toml::from_str(text).map_err(|e| RuleError::Config(e.to_string()))?;
    if file.version != RULES_FORMAT_VERSION {
        return Err(RuleError::Config(format!(
            "unsupported version {} (expected {RULES_FORMAT_VERSION})",
            file.version
        )));
    }
    Ok(file)
}

/// The rule table plus value translations.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub rules: Vec<ProjectionRule>,
    pub translations: Vec<Translation>,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet {
            rules: builtin_rules(),
            translations: Vec::new(),
        }
    }
}

impl RuleSet {
    /// Adds the `[[rule]]` and `[[translate]]` records of a TOML file.
    /// Rules from the file take precedence over the built-in table.
    pub fn apply_overrides(&mut self, text: &str) -> Result<(), RuleError> {
        let file = parse_rule_file(text)?;
        let mut added = Vec::new();
        for o in file.rule {
            if !matches!(o.target, TargetClass::LexicalEntry | TargetClass::Form) {
                return Err(RuleError::Config(format!(
                    "rule {}: only entry and form targets can be overridden",
                    o.id
                )));
            }
            if o.attribute.is_empty() {
                return Err(RuleError::Config(format!("rule {}: empty attribute", o.id)));
            }
            added.push(rule(
                &o.id,
                None,
                RuleMatch {
                    features: vec![o.feature],
                    ..RuleMatch::default()
                },
                o.target,
                ValueTransform::Attribute(AttributeName::Fixed(o.attribute)),
            ));
        }
        let mut ids: BTreeSet<&str> = BTreeSet::new();
        for r in added.iter().chain(&self.rules) {
            if !ids.insert(&r.rule_id) {
                return Err(RuleError::Config(format!("duplicate rule id {}", r.rule_id)));
            }
        }
        added.append(&mut self.rules);
        self.rules = added;
        self.translations.extend(file.translate);
        Ok(())
    }

    pub fn load_overrides(&mut self, path: &Path) -> Result<(), RuleError> {
        self.apply_overrides(&std::fs::read_to_string(path)?)
    }

    fn select(
        &self,
        name: &str,
        descriptor: Option<&FeatureDescriptor>,
        shape: ValueShape,
        inflecting: bool,
    ) -> Option<&ProjectionRule> {
        self.rules
            .iter()
            .find(|r| r.matches.accepts(name, descriptor, shape, inflecting))
    }

    fn translate(&self, feature: &str, value: &str) -> String {
        let key = fold(value);
        self.translations
            .iter()
            .find(|t| t.feature.eq_ignore_ascii_case(feature) && fold(&t.from) == key)
            .map_or_else(|| value.to_string(), |t| t.to.clone())
    }
}

/// Emissions and diagnostics for one entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub category: LexicalCategory,
    pub inflecting: bool,
    pub emissions: Vec<Emission>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Projection {
    /// First emission from `feature` onto `target`.
    pub fn value_of(&self, feature: &str, target: TargetClass) -> Option<&str> {
        self.emissions
            .iter()
            .find(|e| e.target_class == target && e.source.eq_ignore_ascii_case(feature))
            .map(|e| e.value.as_str())
    }
}

/// Applies the rules to every feature of a classified entry.
pub fn project_entry(
    entry: &HpsgEntry,
    category: LexicalCategory,
    registry: &Registry,
    rules: &RuleSet,
) -> Projection {
    let admission = registry.admits_inflected_forms(entry, category);
    let mut engine = Engine {
        entry,
        category,
        inflecting: admission.admits,
        registry,
        rules,
        emissions: Vec::new(),
        diagnostics: admission.diagnostic.into_iter().collect(),
        frame_sizes: BTreeMap::new(),
        predicates: 0,
        role_args: 0,
    };
    engine.walk(&entry.body);
    Projection {
        category,
        inflecting: engine.inflecting,
        emissions: engine.emissions,
        diagnostics: engine.diagnostics,
    }
}

struct Engine<'a> {
    entry: &'a HpsgEntry,
    category: LexicalCategory,
    inflecting: bool,
    registry: &'a Registry,
    rules: &'a RuleSet,
    emissions: Vec<Emission>,
    diagnostics: Vec<Diagnostic>,
    /// Arguments emitted so far per frame group.
    frame_sizes: BTreeMap<String, usize>,
    predicates: usize,
    /// Arguments of the predicate collecting standalone semantic roles.
    role_args: usize,
}

fn function_label(feature: &str, position: usize) -> &'static str {
    const POSITIONAL: [&str; 4] = ["subject", "object", "secondObject", "complement"];
    match feature.to_ascii_uppercase().as_str() {
        "SUJ" => "subject",
        "COMPS" => POSITIONAL[(position + 1).min(3)],
        "SPR" => "specifier",
        "TOPIC" => "topic",
        "ATTRIBUT" => "attribute",
        "SPEC" => "specified",
        "MOD" => "modified",
        _ => POSITIONAL[position.min(3)],
    }
}

/// A syntactic argument under construction.
#[derive(Default)]
struct ArgumentParts {
    function: Option<String>,
    constituent: Option<String>,
    attributes: Vec<(String, String)>,
}

impl<'a> Engine<'a> {
    fn diag(&mut self, kind: DiagnosticKind, feature: &str, message: String) {
        self.diagnostics.push(
            Diagnostic::new(kind, message)
                .at(&self.entry.source)
                .on(feature),
        );
    }

    fn emit(
        &mut self,
        rule_id: &str,
        source: &str,
        target_class: TargetClass,
        attribute: String,
        value: String,
        grouping_key: Option<String>,
    ) {
        self.emissions.push(Emission {
            rule_id: rule_id.to_string(),
            source: source.to_string(),
            target_class,
            attribute,
            value,
            grouping_key,
        });
    }

    fn passthrough(&mut self, name: &str, value: &FeatureValue, why: &str) {
        let target = match self.registry.lookup(name).map(|d| d.scope) {
            Some(FeatureScope::FormLevel) => TargetClass::Form,
            _ => TargetClass::LexicalEntry,
        };
        self.emit(
            "passthrough",
            name,
            target,
            format!("{PASSTHROUGH_PREFIX}{name}"),
            value.to_string(),
            None,
        );
        self.diag(
            DiagnosticKind::Loss,
            name,
            format!("{name} {why}; kept as {PASSTHROUGH_PREFIX}{name}"),
        );
    }

    fn walk(&mut self, fs: &FeatureStructure) {
        for (name, value) in &fs.features {
            self.feature(name, value);
        }
    }

    fn atom_value(&mut self, name: &str, raw: &str) -> String {
        let value = self.rules.translate(name, raw);
        if let Some(false) = self.registry.lookup(name).and_then(|d| d.in_domain(&value)) {
            self.diag(
                DiagnosticKind::ValueDomain,
                name,
                format!("value {value:?} of {name} is outside its value domain"),
            );
        }
        value
    }

    fn feature(&mut self, name: &str, value: &FeatureValue) {
        let descriptor = self.registry.lookup(name);
        if let Some(d) = descriptor {
            if d.container {
                match value {
                    FeatureValue::Avm(inner) => return self.walk(inner),
                    _ if value.is_empty() => return,
                    _ => return self.passthrough(name, value, "is a grouping feature with a non-AVM value"),
                }
            }
            if !d.applies_to(self.category) {
                self.diag(
                    DiagnosticKind::CategoryApplicability,
                    name,
                    format!("{name} does not apply to a {}", self.category),
                );
                return self.passthrough(name, value, "is not defined for this category");
            }
        }
        let shape = ValueShape::of(value);
        let Some(rule) = self.rules.select(name, descriptor, shape, self.inflecting) else {
            let why = if descriptor.is_some() {
                "has no LMF equivalent"
            } else {
                "is not registered"
            };
            return self.passthrough(name, value, why);
        };
        let rule_id = rule.rule_id.clone();
        let target = rule.target_class;
        match &rule.transform {
            ValueTransform::Attribute(attr) => {
                let attribute = match attr {
                    AttributeName::Fixed(a) => Some(a.clone()),
                    AttributeName::Registry => descriptor.and_then(|d| d.lmf_attribute.clone()),
                    AttributeName::PerFeature(list) => list
                        .iter()
                        .find(|(f, _)| f.eq_ignore_ascii_case(name))
                        .map(|(_, a)| a.clone())
                        .or_else(|| descriptor.and_then(|d| d.lmf_attribute.clone())),
                };
                let Some(attribute) = attribute else {
                    return self.passthrough(name, value, "has no LMF equivalent");
                };
                let text = match value.as_str() {
                    Some(s) => self.atom_value(name, s),
                    None => value.to_string(),
                };
                self.emit(&rule_id, name, target, attribute, text, None);
            }
            ValueTransform::SyntacticArguments => self.arguments(&rule_id, name, value),
            ValueTransform::SemanticPredicate => self.nucleus(&rule_id, name, value),
            ValueTransform::SemanticRole => {
                if value.is_empty() {
                    return;
                }
                let role = descriptor
                    .and_then(|d| d.lmf_attribute.clone())
                    .unwrap_or_else(|| "other".into());
                let elements: Vec<&FeatureValue> = match value {
                    FeatureValue::List(items) => items.iter().collect(),
                    other => vec![other],
                };
                for element in elements {
                    let group = format!("roles/{}", self.role_args);
                    self.role_args += 1;
                    self.semantic_argument(&rule_id, name, &role, element, group);
                }
            }
        }
    }

    // syntactic arguments

    fn arguments(&mut self, rule_id: &str, name: &str, value: &FeatureValue) {
        let upper = name.to_ascii_uppercase();
        let items: Vec<&FeatureValue> = match value {
            FeatureValue::List(items) => items.iter().collect(),
            other if other.is_empty() => Vec::new(),
            other => vec![other],
        };
        if upper == "S-ARG" {
            // a list of lists holds alternative frames
            let alternatives = !items.is_empty()
                && items.iter().all(|i| matches!(i, FeatureValue::List(_)));
            if alternatives {
                let mut frame = 0;
                for alt in items {
                    if let FeatureValue::List(elements) = alt {
                        if !elements.is_empty() {
                            let group = format!("sarg.{frame}");
                            frame += 1;
                            for (pos, el) in elements.iter().enumerate() {
                                self.argument(rule_id, name, el, pos, &group);
                            }
                        }
                    }
                }
            } else {
                for (pos, el) in items.into_iter().enumerate() {
                    self.argument(rule_id, name, el, pos, "sarg.0");
                }
            }
            return;
        }
        let group = if upper == "SPR" { "spr" } else { "main" };
        for (pos, el) in items.into_iter().enumerate() {
            self.argument(rule_id, name, el, pos, group);
        }
    }

    fn argument(
        &mut self,
        rule_id: &str,
        feature: &str,
        element: &FeatureValue,
        position: usize,
        group: &str,
    ) {
        let mut parts = ArgumentParts::default();
        match element {
            FeatureValue::Atom(s) | FeatureValue::Text(s) => {
                parts.constituent = Some(self.atom_value(feature, s))
            }
            FeatureValue::Avm(fs) => self.argument_parts(fs, &mut parts),
            FeatureValue::List(_) => parts
                .attributes
                .push((format!("{PASSTHROUGH_PREFIX}{feature}"), element.to_string())),
        }
        let index = self.frame_sizes.entry(group.to_string()).or_insert(0);
        let key = format!("{group}/{index}");
        *index += 1;
        let function = parts
            .function
            .unwrap_or_else(|| function_label(feature, position).to_string());
        let constituent = match parts.constituent {
            Some(c) => c,
            None => {
                self.diag(
                    DiagnosticKind::MissingFeature,
                    feature,
                    format!("argument {position} of {feature} names no constituent"),
                );
                UNSPECIFIED_CONSTITUENT.to_string()
            }
        };
        self.emit(
            rule_id,
            feature,
            TargetClass::SyntacticArgument,
            ATTR_FUNCTION.into(),
            function,
            Some(key.clone()),
        );
        self.emit(
            rule_id,
            feature,
            TargetClass::SyntacticArgument,
            ATTR_CONSTITUENT.into(),
            constituent,
            Some(key.clone()),
        );
        for (attribute, value) in parts.attributes {
            self.emit(
                rule_id,
                feature,
                TargetClass::SyntacticArgument,
                attribute,
                value,
                Some(key.clone()),
            );
        }
    }

    fn argument_parts(&mut self, fs: &FeatureStructure, parts: &mut ArgumentParts) {
        for (name, value) in &fs.features {
            let upper = name.to_ascii_uppercase();
            if let FeatureValue::Avm(inner) = value {
                self.argument_parts(inner, parts);
                continue;
            }
            let Some(raw) = value.as_str() else {
                if !value.is_empty() {
                    self.argument_attribute(name, value.to_string(), parts);
                }
                continue;
            };
            let text = self.atom_value(name, raw);
            match upper.as_str() {
                "FUNCTION" if parts.function.is_none() => parts.function = Some(text),
                "CAT" | "MAJ" | "CONSTITUENT" if parts.constituent.is_none() => {
                    parts.constituent = Some(text)
                }
                _ => self.argument_attribute(name, text, parts),
            }
        }
    }

    fn argument_attribute(&mut self, name: &str, value: String, parts: &mut ArgumentParts) {
        let mapped = self
            .registry
            .lookup(name)
            .filter(|d| !d.container)
            .and_then(|d| d.lmf_attribute.clone())
            .filter(|a| a != ATTR_FUNCTION && a != ATTR_CONSTITUENT);
        let taken = |a: &str| parts.attributes.iter().any(|(n, _)| n == a);
        let attribute = match mapped {
            Some(a) if !taken(&a) => a,
            _ => {
                let a = format!("{PASSTHROUGH_PREFIX}{name}");
                if self.registry.lookup(name).is_none() {
                    self.diag(
                        DiagnosticKind::Loss,
                        name,
                        format!("{name} is not registered; kept as {a} on a syntactic argument"),
                    );
                }
                if taken(&a) {
                    return;
                }
                a
            }
        };
        parts.attributes.push((attribute, value));
    }

    // semantics

    fn nucleus(&mut self, rule_id: &str, name: &str, value: &FeatureValue) {
        if value.is_empty() {
            return;
        }
        let items: Vec<&FeatureValue> = match value {
            FeatureValue::List(items) => items.iter().filter(|i| !i.is_empty()).collect(),
            other => vec![other],
        };
        for item in items {
            let group = format!("nucleus.{}", self.predicates);
            self.predicates += 1;
            let mut index = 0;
            match item {
                FeatureValue::Avm(fs) => {
                    for (feature, v) in &fs.features {
                        let role = self
                            .registry
                            .lookup(feature)
                            .and_then(|d| d.lmf_attribute.clone())
                            .filter(|r| SEMANTIC_ROLES.contains(&r.as_str()));
                        let elements: Vec<&FeatureValue> = match v {
                            FeatureValue::List(items) => items.iter().collect(),
                            other => vec![other],
                        };
                        for el in elements {
                            let key = format!("{group}/{index}");
                            index += 1;
                            match &role {
                                Some(role) => self.semantic_argument(rule_id, feature, role, el, key),
                                None => {
                                    self.diag(
                                        DiagnosticKind::UnknownRole,
                                        feature,
                                        format!("{feature} is not a semantic role; recorded with role other"),
                                    );
                                    let kept = FeatureValue::Avm(
                                        FeatureStructure::new().with(feature.as_str(), el.clone()),
                                    );
                                    self.emit(
                                        rule_id,
                                        feature,
                                        TargetClass::SemanticArgument,
                                        "other".into(),
                                        kept.to_string(),
                                        Some(key),
                                    );
                                }
                            }
                        }
                    }
                }
                other => {
                    let text = match other.as_str() {
                        Some(s) => self.rules.translate(name, s),
                        None => other.to_string(),
                    };
                    self.emit(
                        rule_id,
                        name,
                        TargetClass::SemanticArgument,
                        "other".into(),
                        text,
                        Some(format!("{group}/0")),
                    );
                }
            }
        }
    }

    /// Emits the role with its value, and the co-label when the value
    /// carries a LABEL.
    fn semantic_argument(
        &mut self,
        rule_id: &str,
        feature: &str,
        role: &str,
        value: &FeatureValue,
        key: String,
    ) {
        let (text, label) = match value {
            FeatureValue::Avm(fs) => {
                let label = fs
                    .features
                    .iter()
                    .find(|(n, _)| n.eq_ignore_ascii_case("LABEL"))
                    .and_then(|(_, v)| v.as_str())
                    .map(str::to_string);
                let rest: Vec<_> = fs
                    .features
                    .iter()
                    .filter(|(n, _)| !n.eq_ignore_ascii_case("LABEL"))
                    .cloned()
                    .collect();
                let text = match rest.as_slice() {
                    [] => String::new(),
                    [(_, v)] if v.is_atomic() => v.as_str().unwrap_or_default().to_string(),
                    _ => FeatureStructure {
                        type_label: fs.type_label.clone(),
                        features: rest,
                    }
                    .to_string(),
                };
                (text, label)
            }
            other => (
                match other.as_str() {
                    Some(s) => self.rules.translate(feature, s),
                    None => other.to_string(),
                },
                None,
            ),
        };
        self.emit(
            rule_id,
            feature,
            TargetClass::SemanticArgument,
            role.to_string(),
            text,
            Some(key.clone()),
        );
        if let Some(label) = label {
            self.emit(
                rule_id,
                feature,
                TargetClass::SemanticArgument,
                ATTR_LABEL.into(),
                label,
                Some(key),
            );
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::diag::SourceRef;
    use crate::fs::FeatureValue as V;

    pub(crate) fn avm(features: Vec<(&str, V)>) -> V {
        let mut fs = FeatureStructure::new();
        for (n, v) in features {
            fs.push(n, v);
        }
        V::Avm(fs)
    }

    fn entry(body: V) -> HpsgEntry {
        let body = match body {
            V::Avm(fs) => fs,
            _ => unreachable!(),
        };
        HpsgEntry {
            phon: body.find("PHON").and_then(V::as_str).unwrap_or("x").into(),
            body,
            source: SourceRef::new("t.xml", 0),
        }
    }

    /// Verb kataba: perfect, active, root ktb, with a masculine nominative
    /// subject and an object, and an agent/patient nucleus.
    pub(crate) fn kataba() -> HpsgEntry {
        entry(avm(vec![
            ("PHON", V::text("كَتَبَ")),
            (
                "SYNSEM",
                avm(vec![(
                    "LOC",
                    avm(vec![
                        (
                            "CAT",
                            avm(vec![
                                (
                                    "HEAD",
                                    avm(vec![
                                        ("MAJ", V::atom("verbe")),
                                        ("VFORM", V::atom("mutaṣṣarf")),
                                        ("RADICAL", V::text("ktb")),
                                        ("TENSE", V::atom("perfect")),
                                        ("VOICE", V::atom("active")),
                                    ]),
                                ),
                                (
                                    "S-ARG",
                                    V::List(vec![
                                        avm(vec![
                                            ("CAT", V::atom("NP")),
                                            ("LABEL", V::atom("X")),
                                            (
                                                "INDEX",
                                                avm(vec![
                                                    ("GENDER", V::atom("masculine")),
                                                    ("CASE", V::atom("nominative")),
                                                ]),
                                            ),
                                        ]),
                                        avm(vec![("CAT", V::atom("NP")), ("LABEL", V::atom("Y"))]),
                                    ]),
                                ),
                            ]),
                        ),
                        (
                            "CONT",
                            avm(vec![(
                                "NUCLEUS",
                                avm(vec![
                                    ("AGENT-NOUN", avm(vec![("LABEL", V::atom("X"))])),
                                    ("PATIENT-NOUN", avm(vec![("LABEL", V::atom("Y"))])),
                                ]),
                            )]),
                        ),
                    ]),
                )]),
            ),
        ]))
    }

    fn project(e: &HpsgEntry) -> Projection {
        let reg = Registry::builtin();
        let cat = crate::schema::classify(e).unwrap();
        project_entry(e, cat, &reg, &RuleSet::default())
    }

    fn find<'a>(p: &'a Projection, target: TargetClass, attribute: &str) -> Vec<&'a Emission> {
        p.emissions
            .iter()
            .filter(|e| e.target_class == target && e.attribute == attribute)
            .collect()
    }

    #[test]
    fn rule_ids_are_unique_and_cover_the_families() {
        let rules = builtin_rules();
        assert!(rules.len() >= 5);
        let ids: BTreeSet<_> = rules.iter().map(|r| &r.rule_id).collect();
        assert_eq!(ids.len(), rules.len());
        for alias in ["R5m", "R9m", "R1syn", "R2syn", "R1sem"] {
            assert!(rules.iter().any(|r| r.alias.as_deref() == Some(alias)), "{alias}");
        }
    }

    #[test]
    fn maj_on_inflecting_verb_uses_r5m_and_on_particle_r9m() {
        let reg = Registry::builtin();
        let rs = RuleSet::default();
        let maj = reg.lookup("MAJ");
        let atomic = ValueShape::Atomic;
        let verb = rs.select("MAJ", maj, atomic, true).unwrap();
        assert_eq!(verb.alias.as_deref(), Some("R5m"));
        let particle = rs.select("MAJ", maj, atomic, false).unwrap();
        assert_eq!(particle.alias.as_deref(), Some("R9m"));
    }

    #[test]
    fn kataba_projection() {
        let p = project(&kataba());
        assert!(p.inflecting);
        assert_eq!(p.value_of("RADICAL", TargetClass::LexicalEntry), Some("ktb"));
        assert_eq!(find(&p, TargetClass::Form, "tense")[0].value, "perfect");
        assert_eq!(find(&p, TargetClass::Form, "voice")[0].value, "active");
        assert_eq!(find(&p, TargetClass::LexicalEntry, "partOfSpeech")[0].value, "verbe");

        let functions = find(&p, TargetClass::SyntacticArgument, ATTR_FUNCTION);
        assert_eq!(functions.len(), 2);
        assert_eq!(functions[0].value, "subject");
        assert_eq!(functions[1].value, "object");
        let subject: BTreeMap<_, _> = p
            .emissions
            .iter()
            .filter(|e| e.grouping_key.as_deref() == Some("sarg.0/0"))
            .map(|e| (e.attribute.as_str(), e.value.as_str()))
            .collect();
        assert_eq!(subject[ATTR_CONSTITUENT], "NP");
        assert_eq!(subject["gender"], "masculine");
        assert_eq!(subject["grammaticalCase"], "nominative");

        let roles: Vec<_> = p
            .emissions
            .iter()
            .filter(|e| e.target_class == TargetClass::SemanticArgument && e.attribute != ATTR_LABEL)
            .map(|e| e.attribute.as_str())
            .collect();
        assert_eq!(roles, ["agent-noun", "patient-noun"]);
        assert!(p.diagnostics.is_empty(), "{:?}", p.diagnostics);
    }

    #[test]
    fn preposition_fi_object_is_genitive_np() {
        let e = entry(avm(vec![
            ("PHON", V::text("في")),
            ("MAJ", V::atom("preposition")),
            ("COMPS", V::List(vec![avm(vec![("CAT", V::atom("NP")), ("CASE", V::atom("genitive"))])])),
        ]));
        let p = project(&e);
        assert!(!p.inflecting);
        let arg: BTreeMap<_, _> = p
            .emissions
            .iter()
            .filter(|e| e.target_class == TargetClass::SyntacticArgument)
            .map(|e| (e.attribute.as_str(), e.value.as_str()))
            .collect();
        assert_eq!(arg[ATTR_FUNCTION], "object");
        assert_eq!(arg[ATTR_CONSTITUENT], "NP");
        assert_eq!(arg["grammaticalCase"], "genitive");
        assert_eq!(p.value_of("MAJ", TargetClass::LexicalEntry), Some("preposition"));
        assert_eq!(find(&p, TargetClass::LexicalEntry, ATTR_GRAMMATICAL_CATEGORY).len(), 1);
    }

    #[test]
    fn unregistered_feature_passes_through_with_one_loss() {
        let e = entry(avm(vec![("FOO", V::atom("bar"))]));
        let p = project_entry(&e, LexicalCategory::Particle, &Registry::builtin(), &RuleSet::default());
        assert_eq!(p.emissions.len(), 1);
        assert_eq!(p.emissions[0].attribute, "x-hpsg:FOO");
        assert_eq!(p.emissions[0].value, "bar");
        assert_eq!(p.diagnostics.len(), 1);
        assert_eq!(p.diagnostics[0].kind, DiagnosticKind::Loss);
    }

    #[test]
    fn empty_nucleus_emits_no_semantic_arguments() {
        for empty in [V::List(vec![]), V::Avm(FeatureStructure::new())] {
            let e = entry(avm(vec![
                ("PHON", V::text("جمع")),
                ("MAJ", V::atom("nom")),
                ("NUCLEUS", empty),
            ]));
            let p = project(&e);
            assert!(p.emissions.iter().all(|e| e.target_class != TargetClass::SemanticArgument));
        }
    }

    #[test]
    fn complex_feature_yields_one_argument_per_element() {
        for k in 0..5 {
            let items = (0..k).map(|i| avm(vec![("CAT", V::atom(format!("C{i}")))])).collect();
            let e = entry(avm(vec![
                ("PHON", V::text("x")),
                ("MAJ", V::atom("verbe")),
                ("VFORM", V::atom("mutaṣṣarf")),
                ("COMPS", V::List(items)),
            ]));
            let p = project(&e);
            let groups: BTreeSet<_> = p
                .emissions
                .iter()
                .filter(|e| e.target_class == TargetClass::SyntacticArgument)
                .filter_map(|e| e.grouping_key.clone())
                .collect();
            assert_eq!(groups.len(), k);
        }
    }

    #[test]
    fn sarg_alternatives_make_separate_frames() {
        let e = entry(avm(vec![
            ("PHON", V::text("x")),
            ("MAJ", V::atom("verbe")),
            ("VFORM", V::atom("mutaṣṣarf")),
            (
                "S-ARG",
                V::List(vec![
                    V::List(vec![V::atom("NP")]),
                    V::List(vec![V::atom("NP"), V::atom("PP")]),
                ]),
            ),
        ]));
        let p = project(&e);
        let groups: BTreeSet<_> = p.emissions.iter().filter_map(|e| e.group()).map(|g| g.0).collect();
        assert_eq!(groups, BTreeSet::from(["sarg.0", "sarg.1"]));
    }

    #[test]
    fn emissions_follow_layer_and_scope() {
        let reg = Registry::builtin();
        let p = project(&kataba());
        for e in &p.emissions {
            let d = reg.lookup(&e.source).unwrap();
            let expected = match (d.layer, d.scope) {
                (FeatureLayer::Morphological, FeatureScope::EntryLevel) => TargetClass::LexicalEntry,
                (FeatureLayer::Morphological, FeatureScope::FormLevel) => TargetClass::Form,
                (FeatureLayer::Syntactic, FeatureScope::FormLevel) => TargetClass::Form,
                (FeatureLayer::Syntactic, _) => TargetClass::SyntacticArgument,
                (FeatureLayer::Semantic, _) => TargetClass::SemanticArgument,
            };
            assert_eq!(e.target_class, expected, "{e:?}");
        }
    }

    #[test]
    fn applicability_violation_is_kept() {
        let e = entry(avm(vec![
            ("PHON", V::text("كتاب")),
            ("MAJ", V::atom("nom")),
            ("NFORM", V::atom("mutaṣṣarf jāmed")),
            ("SCHEME", V::atom("فعال")),
        ]));
        let p = project(&e);
        assert!(p.emissions.iter().any(|e| e.attribute == "x-hpsg:SCHEME"));
        let kinds: Vec<_> = p.diagnostics.iter().map(|d| d.kind).collect();
        assert!(kinds.contains(&DiagnosticKind::CategoryApplicability));
    }

    #[test]
    fn value_domain_and_translation() {
        let mut rs = RuleSet::default();
        rs.apply_overrides(
            "version = 1\n[[translate]]\nfeature = \"VOICE\"\nfrom = \"مبني للمعلوم\"\nto = \"active\"\n\
             [[rule]]\nid = \"U1\"\nfeature = \"ASPECT\"\ntarget = \"form\"\nattribute = \"aspect\"\n",
        )
        .unwrap();
        let e = entry(avm(vec![
            ("PHON", V::text("كتب")),
            ("MAJ", V::atom("verbe")),
            ("VFORM", V::atom("mutaṣṣarf")),
            ("VOICE", V::atom("مبني للمعلوم")),
            ("ASPECT", V::atom("perfective")),
            ("DENUDE", V::atom("zzz")),
        ]));
        let p = project_entry(&e, LexicalCategory::Verb, &Registry::builtin(), &rs);
        assert_eq!(find(&p, TargetClass::Form, "voice")[0].value, "active");
        assert_eq!(find(&p, TargetClass::Form, "aspect")[0].rule_id, "U1");
        assert_eq!(p.diagnostics.len(), 1);
        assert_eq!(p.diagnostics[0].kind, DiagnosticKind::ValueDomain);
    }

    #[test]
    fn bad_override_files_are_rejected() {
        let mut rs = RuleSet::default();
        assert!(rs.apply_overrides("version = 2").is_err());
        assert!(rs
            .apply_overrides("version = 1\n[[rule]]\nid = \"R\"\nfeature = \"A\"\ntarget = \"argument\"\nattribute = \"a\"")
            .is_err());
        assert!(rs
            .apply_overrides("version = 1\n[[rule]]\nid = \"morph.form\"\nfeature = \"A\"\ntarget = \"form\"\nattribute = \"a\"")
            .is_err());
    }

    #[test]
    fn mapping_table_rows() {
        let t = mapping_table(&Registry::builtin());
        assert_eq!(t["MAJ"], "partOfSpeech");
        assert_eq!(t["RADICAL"], "root");
        assert_eq!(t["SCHEME"], "scheme");
        assert_eq!(t["DEFN"], "definiteness");
        assert_eq!(t["VOICE"], "voice");
        assert_eq!(t["GENR"], "gender");
        assert_eq!(t["NUMBER"], "grammaticalNumber");
        assert_eq!(t["CASE"], "grammaticalCase");
        for custom in ["CFORM", "DENUDE", "DIMINUTIVE", "RELATIVE", "NATURE"] {
            assert!(t[custom].starts_with("ar:"), "{custom}");
        }
        assert!(!t.contains_key("UNMAPPED"));
    }

    #[test]
    fn every_mapped_feature_has_a_rule_per_category() {
        let reg = Registry::builtin();
        let rs = RuleSet::default();
        for d in reg.descriptors().filter(|d| d.lmf_attribute.is_some()) {
            for cat in LexicalCategory::ALL.into_iter().filter(|c| d.applies_to(*c)) {
                for inflecting in [true, false] {
                    if cat == LexicalCategory::Particle && inflecting {
                        continue;
                    }
                    let shapes: &[ValueShape] = match d.layer {
                        FeatureLayer::Syntactic if d.lmf_attribute.as_deref() != Some(ATTR_FUNCTION) => {
                            &[ValueShape::Atomic]
                        }
                        _ => &[ValueShape::Atomic, ValueShape::Complex],
                    };
                    for shape in shapes {
                        assert!(rs.select(&d.name, Some(d), *shape, inflecting).is_some(), "{} {cat}", d.name);
                    }
                }
            }
        }
    }
}
