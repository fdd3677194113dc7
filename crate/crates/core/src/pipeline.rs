//! End-to-end conversion: read lexica, project, place, validate, write.
//!
//! Entries are read one fragment at a time and projected in batches on a
//! worker pool; placement runs on a single consumer in input order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::diag::{Diagnostic, DiagnosticKind};
use crate::fs::{FsError, HpsgEntry, LexiconReader, ReadItem};
use crate::lmf::{serialize_tei, validate, LmfError, LmfLexicalResource, TeiOptions};
use crate::merger::Merger;
use crate::rules::{project_entry, Projection, RuleError, RuleSet};
use crate::schema::{classify, LexicalCategory, Registry, SchemaError};

const BATCH: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub values: Option<PathBuf>,
    pub strict: bool,
    pub loss_report: Option<PathBuf>,
    pub merge_report: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    /// Worker threads for projection; `None` uses every core.
    pub jobs: Option<usize>,
    pub compat: bool,
    pub language: String,
}

impl RunConfig {
    pub fn new(inputs: Vec<PathBuf>) -> Self {
        RunConfig {
            inputs,
            output: None,
            registry: None,
            rules: None,
            values: None,
            strict: false,
            loss_report: None,
            merge_report: None,
            stats: None,
            jobs: None,
            compat: false,
            language: "ar".into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("at least one input lexicon is required")]
    NoInputs,
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{source}", .path.display())]
    Parse { path: PathBuf, source: FsError },
    #[error("registry: {0}")]
    Registry(#[from] SchemaError),
    #[error("rules: {0}")]
    Rules(#[from] RuleError),
    #[error("no entry could be projected; nothing to write")]
    Empty,
    #[error("output resource is invalid: {0}")]
    Invalid(#[from] LmfError),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl PipelineError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CategoryStats {
    pub input_entries: usize,
    pub new_entries: usize,
    pub attached_forms: usize,
    pub promoted_lemmas: usize,
    pub output_entries: usize,
    pub inflected_forms: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub input_entries: usize,
    pub rejected_entries: usize,
    pub categories: BTreeMap<LexicalCategory, CategoryStats>,
    pub diagnostics: BTreeMap<DiagnosticKind, usize>,
    pub loss_diagnostics: usize,
    pub conflict_diagnostics: usize,
    pub wall_time_ms: u128,
}

impl RunStats {
    /// Every input entry is new, attached, promoted, or rejected.
    pub fn is_conserved(&self) -> bool {
        let placed: usize = self
            .categories
            .values()
            .map(|c| c.new_entries + c.attached_forms + c.promoted_lemmas)
            .sum();
        let per_category = self.categories.values().all(|c| {
            c.input_entries == c.new_entries + c.attached_forms + c.promoted_lemmas
        });
        per_category && self.input_entries == placed + self.rejected_entries
    }

    pub fn output_entries(&self) -> usize {
        self.categories.values().map(|c| c.output_entries).sum()
    }
}

fn is_conflict(kind: DiagnosticKind) -> bool {
    matches!(
        kind,
        DiagnosticKind::AttributeConflict | DiagnosticKind::AmbiguousFamily
    )
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub resource: LmfLexicalResource,
    pub tei: Vec<u8>,
    pub diagnostics: Vec<Diagnostic>,
    pub stats: RunStats,
}

impl RunOutcome {
    /// 1 when strict mode saw a loss or conflict, else 0.
    pub fn exit_code(&self, strict: bool) -> i32 {
        let failing = self.stats.loss_diagnostics + self.stats.conflict_diagnostics;
        if strict && failing > 0 {
            1
        } else {
            0
        }
    }

    pub fn loss_report(&self) -> String {
        report(self.diagnostics.iter().filter(|d| d.kind.is_loss()))
    }

    pub fn merge_report(&self) -> String {
        report(self.diagnostics.iter().filter(|d| d.kind.is_merge()))
    }
}

/// Tab-separated: kind, source, entry, feature, message.
pub fn report<'a>(diagnostics: impl Iterator<Item = &'a Diagnostic>) -> String {
    let mut out = String::new();
    for d in diagnostics {
        let source = d.source.as_ref().map_or_else(|| "-".to_string(), ToString::to_string);
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            d.kind,
            source,
            d.entry.as_deref().unwrap_or("-"),
            d.feature.as_deref().unwrap_or("-"),
            d.message.replace(['\t', '\n'], " ")
        ));
    }
    out
}

pub fn load_registry(path: Option<&Path>) -> Result<Registry, PipelineError> {
    Ok(match path {
        Some(p) => Registry::load(p)?,
        None => Registry::builtin(),
    })
}

pub fn load_rules(rules: Option<&Path>, values: Option<&Path>) -> Result<RuleSet, PipelineError> {
    let mut set = RuleSet::default();
    for path in [rules, values].into_iter().flatten() {
        set.load_overrides(path)?;
    }
    Ok(set)
}

struct Projected {
    entry: HpsgEntry,
    result: Result<Projection, Diagnostic>,
}

fn project_one(entry: HpsgEntry, registry: &Registry, rules: &RuleSet) -> Projected {
    let result = match classify(&entry) {
        Ok(category) => Ok(project_entry(&entry, category, registry, rules)),
        Err(e) => Err(Diagnostic::new(DiagnosticKind::Classification, e.to_string())
            .at(&entry.source)
            .on("MAJ")),
    };
    Projected { entry, result }
}

/// Converts the configured inputs. Writes the output and reports named in
/// the configuration; exit status is left to the caller.
pub fn run(config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    if config.inputs.is_empty() {
        return Err(PipelineError::NoInputs);
    }
    let started = Instant::now();
    let registry = load_registry(config.registry.as_deref())?;
    let rules = load_rules(config.rules.as_deref(), config.values.as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.unwrap_or(0))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;

    let mut stats = RunStats::default();
    let mut diagnostics = Vec::new();
    let mut merger = Merger::new(&registry);
    let mut batch: Vec<HpsgEntry> = Vec::with_capacity(BATCH);

    let flush = |batch: &mut Vec<HpsgEntry>,
                     merger: &mut Merger,
                     stats: &mut RunStats,
                     diagnostics: &mut Vec<Diagnostic>| {
        let projected: Vec<Projected> = pool.install(|| {
            batch
                .par_drain(..)
                .map(|e| project_one(e, &registry, &rules))
                .collect()
        });
        for p in projected {
            match p.result {
                Ok(projection) => {
                    stats.categories.entry(projection.category).or_default().input_entries += 1;
                    diagnostics.extend(projection.diagnostics.iter().cloned());
                    merger.place(&p.entry, &projection);
                }
                Err(d) => {
                    stats.rejected_entries += 1;
                    diagnostics.push(d);
                }
            }
        }
    };

    for path in &config.inputs {
        let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
        let name = path
            .file_name()
            .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        for item in LexiconReader::new(BufReader::new(file), name) {
            let item = item.map_err(|source| PipelineError::Parse {
                path: path.clone(),
                source,
            })?;
            stats.input_entries += 1;
            match item {
                ReadItem::Entry(e) => {
                    batch.push(e);
                    if batch.len() == BATCH {
                        flush(&mut batch, &mut merger, &mut stats, &mut diagnostics);
                    }
                }
                ReadItem::Rejected(d) => {
                    stats.rejected_entries += 1;
                    diagnostics.push(d);
                }
            }
        }
    }
    flush(&mut batch, &mut merger, &mut stats, &mut diagnostics);

    let outcome = merger.finish(&config.language);
    diagnostics.extend(outcome.diagnostics);
    for (category, counts) in &outcome.counts {
        let c = stats.categories.entry(*category).or_default();
        c.new_entries = counts.new_entries;
        c.attached_forms = counts.attached;
        c.promoted_lemmas = counts.promoted;
    }
    for entry in &outcome.lexicon.entries {
        if let Some(category) = LexicalCategory::parse(entry.category_segment()) {
            let c = stats.categories.entry(category).or_default();
            c.output_entries += 1;
            c.inflected_forms += entry.inflected_forms.len();
        }
    }
    if outcome.lexicon.entries.is_empty() {
        return Err(PipelineError::Empty);
    }

    let mut sources: Vec<String> = config
        .inputs
        .iter()
        .map(|p| p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()))
        .collect();
    sources.sort();
    let mut resource = LmfLexicalResource::default();
    resource.global_info.insert("language".into(), config.language.clone());
    resource.global_info.insert("sourceLexica".into(), sources.join(" "));
    resource.lexicons.push(outcome.lexicon);

    let violations = validate(&resource);
    if !violations.is_empty() {
        return Err(LmfError::Invalid { violations }.into());
    }
    let tei = serialize_tei(&resource, TeiOptions { compat: config.compat })?;

    for d in &diagnostics {
        *stats.diagnostics.entry(d.kind).or_default() += 1;
        if d.kind.is_loss() {
            stats.loss_diagnostics += 1;
        }
        if is_conflict(d.kind) {
            stats.conflict_diagnostics += 1;
        }
    }
    stats.wall_time_ms = started.elapsed().as_millis();

    let out = RunOutcome {
        resource,
        tei,
        diagnostics,
        stats,
    };
    if let Some(path) = &config.output {
        write_file(path, &out.tei)?;
    }
    if let Some(path) = &config.loss_report {
        write_file(path, out.loss_report().as_bytes())?;
    }
    if let Some(path) = &config.merge_report {
        write_file(path, out.merge_report().as_bytes())?;
    }
    if let Some(path) = &config.stats {
        let json = serde_json::to_string_pretty(&out.stats).expect("stats serialize");
        write_file(path, json.as_bytes())?;
    }
    Ok(out)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| PipelineError::io(path, e))
}

/// Human-readable emissions of one entry, for debugging rule behaviour.
pub fn inspect(entry: &HpsgEntry, registry: &Registry, rules: &RuleSet) -> String {
    let mut out = format!("{} [{}]\n", entry.phon, entry.source);
    let category = match classify(entry) {
        Ok(c) => c,
        Err(e) => return out + &format!("  rejected: {e}\n"),
    };
    let p = project_entry(entry, category, registry, rules);
    out.push_str(&format!(
        "  category {category}, {}\n",
        if p.inflecting { "inflecting" } else { "non-inflecting" }
    ));
    for e in &p.emissions {
        out.push_str(&format!(
            "  {:<20} {:<18} {:<12} {} = {}{}\n",
            e.rule_id,
            e.target_class,
            e.source,
            e.attribute,
            e.value,
            e.grouping_key.as_ref().map_or_else(String::new, |g| format!("  ({g})"))
        ));
    }
    for d in &p.diagnostics {
        out.push_str(&format!("  ! {d}\n"));
    }
    out
}
