//! Diagnostics shared by every stage of the conversion.
//!
//! Problems that do not stop a run (a malformed entry, an unregistered
//! feature, a merge conflict) are collected as [`Diagnostic`] values and
//! routed into the loss and merge reports by the pipeline.

use std::fmt;

use serde::Serialize;

/// Where an input entry came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SourceRef {
    pub file: String,
    /// Position of the entry among the top-level `fs` elements of its file.
    pub ordinal: usize,
}

impl SourceRef {
    pub fn new(file: impl Into<String>, ordinal: usize) -> Self {
        SourceRef {
            file: file.into(),
            ordinal,
        }
    }
}

impl fmt::Display for SourceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.file, self.ordinal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    /// Structural defect in one entry fragment; the entry is rejected.
    MalformedEntry,
    /// A construct the reader does not model (re-entrancy, alternations).
    UnsupportedConstruct,
    /// A feature the registry needs for a decision is absent.
    MissingFeature,
    /// MAJ value that maps to no lexical category; the entry is rejected.
    Classification,
    /// Value outside a registered value domain.
    ValueDomain,
    /// Feature used on a category the registry does not list for it.
    CategoryApplicability,
    /// Feature projected through the passthrough path.
    Loss,
    /// Semantic argument role outside the registered role set.
    UnknownRole,
    /// A merge key could not be computed for an inflecting entry.
    MergeKey,
    /// Two canonical entries share one merge key.
    DuplicateCanonical,
    /// An identical form or stand-alone entry was seen twice.
    DuplicateForm,
    /// Two values for one entry-level attribute.
    AttributeConflict,
    /// An entry whose canonical form never arrived.
    UnresolvedLemma,
    /// An unbound inflected form matched more than one family.
    AmbiguousFamily,
    /// Element skipped while reading an LMF document.
    UnknownElement,
}

impl DiagnosticKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiagnosticKind::MalformedEntry => "malformed-entry",
            DiagnosticKind::UnsupportedConstruct => "unsupported-construct",
            DiagnosticKind::MissingFeature => "missing-feature",
            DiagnosticKind::Classification => "classification",
            DiagnosticKind::ValueDomain => "value-domain",
            DiagnosticKind::CategoryApplicability => "category-applicability",
            DiagnosticKind::Loss => "loss",
            DiagnosticKind::UnknownRole => "unknown-role",
            DiagnosticKind::MergeKey => "merge-key",
            DiagnosticKind::DuplicateCanonical => "duplicate-canonical",
            DiagnosticKind::DuplicateForm => "duplicate-form",
            DiagnosticKind::AttributeConflict => "attribute-conflict",
            DiagnosticKind::UnresolvedLemma => "unresolved-lemma",
            DiagnosticKind::AmbiguousFamily => "ambiguous-family",
            DiagnosticKind::UnknownElement => "unknown-element",
        }
    }

    /// Kinds that mean some input information did not reach the output
    /// in a standard location.
    pub fn is_loss(&self) -> bool {
        matches!(
            self,
            DiagnosticKind::Loss
                | DiagnosticKind::MalformedEntry
                | DiagnosticKind::UnsupportedConstruct
                | DiagnosticKind::Classification
        )
    }

    /// Kinds reported in the merge report.
    pub fn is_merge(&self) -> bool {
        matches!(
            self,
            DiagnosticKind::MergeKey
                | DiagnosticKind::DuplicateCanonical
                | DiagnosticKind::DuplicateForm
                | DiagnosticKind::AttributeConflict
                | DiagnosticKind::UnresolvedLemma
                | DiagnosticKind::AmbiguousFamily
        )
    }
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub source: Option<SourceRef>,
    /// Feature (or attribute) the diagnostic is about, when there is one.
    pub feature: Option<String>,
    /// Output entry the diagnostic concerns (merge diagnostics).
    pub entry: Option<String>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Diagnostic {
            kind,
            source: None,
            feature: None,
            entry: None,
            message: message.into(),
        }
    }

    pub fn at(mut self, source: &SourceRef) -> Self {
        self.source = Some(source.clone());
        self
    }

    pub fn on(mut self, feature: impl Into<String>) -> Self {
        self.feature = Some(feature.into());
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(src) = &self.source {
            write!(f, " [{}]", src)?;
        }
        if let Some(entry) = &self.entry {
            write!(f, " <{}>", entry)?;
        }
        if let Some(feat) = &self.feature {
            write!(f, " {}", feat)?;
        }
        write!(f, ": {}", self.message)
    }
}
