//! TEI serialization of LMF resources.
//!
//! Element inventory:
//!
//! | LMF                    | TEI                                                      |
//! |------------------------|----------------------------------------------------------|
//! | LexicalResource        | `TEI` (global information as `notesStmt/note[@type]`)    |
//! | Lexicon                | `text/body/div[@type="lexicon"][@xml:lang]`              |
//! | LexicalEntry           | `entry[@n]`, entry-level data categories in `gramGrp`    |
//! | Lemma / InflectedForm  | `form[@type="lemma"]`, `form[@type="inflected"]`, `orth` |
//! | SubcategorisationFrame | `lmf:syntacticBehaviour/lmf:subcatFrame[@n]`             |
//! | SyntacticArgument      | `lmf:syntacticArgument[@n][@function][@constituent]`     |
//! | SemanticPredicate      | `lmf:semanticPredicate[@n]`                              |
//! | SemanticArgument       | `lmf:semanticArgument[@role][@label]`, value as content  |
//! | syntax-semantics link  | `lmf:link[@role][@target]`                               |
//!
//! Data categories with a TEI counterpart use it (`pos`, `number`, `case`,
//! `gen`, `per`, `tns`, `mood`); every other one is written as
//! `gram[@type]`. The `lmf:` blocks live in [`LMF_EXT_NS`] and are left out
//! in compat mode.

use quick_xml::escape::{escape, partial_escape};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use super::{
    validate, ArgumentLink, Attributes, FormKind, LmfForm, LmfLexicalEntry, LmfLexicalResource,
    LmfLexicon, SemanticArgument, SemanticPredicate, SubcatFrame, SyntacticArgument, Violation,
};
use crate::diag::{Diagnostic, DiagnosticKind};
use crate::fs::TEI_NS;

pub const LMF_EXT_NS: &str = "urn:x-hpsg-lmf:lmf-extension:1";

const TITLE: &str = "LMF lexical resource";

/// Data category name and the TEI element that carries it.
const TEI_GRAM: &[(&str, &str)] = &[
    ("partOfSpeech", "pos"),
    ("grammaticalNumber", "number"),
    ("grammaticalCase", "case"),
    ("gender", "gen"),
    ("person", "per"),
    ("tense", "tns"),
    ("mood", "mood"),
];

#[derive(Debug, Error)]
pub enum LmfError {
    #[error("{line}:{column}: {message}")]
    Xml {
        line: u64,
        column: u64,
        message: String,
    },
    #[error("invalid resource ({}): {}", .violations.len(), .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid { violations: Vec<Violation> },
    #[error("{0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TeiOptions {
    /// Leave out the subcategorisation and semantic extension blocks.
    pub compat: bool,
}

struct Writer {
    out: String,
    depth: usize,
}

impl Writer {
    fn line(&mut self, s: &str) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn open(&mut self, s: &str) {
        self.line(s);
        self.depth += 1;
    }

    fn close(&mut self, s: &str) {
        self.depth -= 1;
        self.line(s);
    }

    fn leaf(&mut self, tag: &str, attrs: &str, text: &str) {
        self.line(&format!("<{tag}{attrs}>{}</{tag}>", partial_escape(text)));
    }

    fn gram_grp(&mut self, attributes: &Attributes) {
        if attributes.is_empty() {
            return;
        }
        self.open("<gramGrp>");
        for (name, value) in attributes {
            match TEI_GRAM.iter().find(|(dc, _)| dc == name) {
                Some((_, tag)) => self.leaf(tag, "", value),
                None => self.leaf("gram", &format!(" type=\"{}\"", escape(name)), value),
            }
        }
        self.close("</gramGrp>");
    }
}

/// Writes the resource as TEI. Invalid resources are refused.
pub fn serialize_tei(
    resource: &LmfLexicalResource,
    options: TeiOptions,
) -> Result<Vec<u8>, LmfError> {
    let violations = validate(resource);
    if !violations.is_empty() {
        return Err(LmfError::Invalid { violations });
    }
    let mut w = Writer {
        out: String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"),
        depth: 0,
    };
    if options.compat {
        w.open(&format!("<TEI xmlns=\"{TEI_NS}\">"));
    } else {
        w.open(&format!("<TEI xmlns=\"{TEI_NS}\" xmlns:lmf=\"{LMF_EXT_NS}\">"));
    }
    w.open("<teiHeader>");
    w.open("<fileDesc>");
    w.open("<titleStmt>");
    w.leaf("title", "", TITLE);
    w.close("</titleStmt>");
    w.open("<publicationStmt>");
    w.leaf("p", "", "Generated by hpsg2lmf.");
    w.close("</publicationStmt>");
    if !resource.global_info.is_empty() {
        w.open("<notesStmt>");
        for (k, v) in &resource.global_info {
            w.leaf("note", &format!(" type=\"{}\"", escape(k)), v);
        }
        w.close("</notesStmt>");
    }
    w.open("<sourceDesc>");
    w.leaf("p", "", "HPSG lexica encoded as TEI feature structures.");
    w.close("</sourceDesc>");
    w.close("</fileDesc>");
    w.close("</teiHeader>");
    w.open("<text>");
    w.open("<body>");
    for lexicon in &resource.lexicons {
        w.open(&format!(
            "<div type=\"lexicon\" xml:lang=\"{}\">",
            escape(&lexicon.language)
        ));
        for entry in &lexicon.entries {
            write_entry(&mut w, entry, options);
        }
        w.close("</div>");
    }
    w.close("</body>");
    w.close("</text>");
    w.close("</TEI>");
    Ok(w.out.into_bytes())
}

fn write_entry(w: &mut Writer, entry: &LmfLexicalEntry, options: TeiOptions) {
    w.open(&format!("<entry n=\"{}\">", escape(&entry.id)));
    w.gram_grp(&entry.attributes);
    for form in entry.forms() {
        w.open(&format!("<form type=\"{}\">", form.kind.as_str()));
        w.leaf("orth", "", &form.orthography);
        w.gram_grp(&form.attributes);
        w.close("</form>");
    }
    if !options.compat {
        if !entry.syntactic_behaviours.is_empty() {
            w.open("<lmf:syntacticBehaviour>");
            for frame in &entry.syntactic_behaviours {
                w.open(&format!("<lmf:subcatFrame n=\"{}\">", escape(&frame.id)));
                for arg in &frame.arguments {
                    let head = format!(
                        "<lmf:syntacticArgument n=\"{}\" function=\"{}\" constituent=\"{}\"",
                        escape(&arg.id),
                        escape(&arg.function),
                        escape(&arg.constituent)
                    );
                    if arg.attributes.is_empty() {
                        w.line(&format!("{head}/>"));
                    } else {
                        w.open(&format!("{head}>"));
                        w.gram_grp(&arg.attributes);
                        w.close("</lmf:syntacticArgument>");
                    }
                }
                w.close("</lmf:subcatFrame>");
            }
            w.close("</lmf:syntacticBehaviour>");
        }
        for pred in &entry.senses {
            w.open(&format!("<lmf:semanticPredicate n=\"{}\">", escape(&pred.id)));
            for arg in &pred.arguments {
                let mut attrs = format!(" role=\"{}\"", escape(&arg.role));
                if let Some(label) = &arg.label {
                    attrs.push_str(&format!(" label=\"{}\"", escape(label)));
                }
                w.leaf("lmf:semanticArgument", &attrs, &arg.value);
            }
            for link in &pred.links {
                w.line(&format!(
                    "<lmf:link role=\"{}\" target=\"{}\"/>",
                    escape(&link.role),
                    escape(&link.target)
                ));
            }
            w.close("</lmf:semanticPredicate>");
        }
    }
    w.close("</entry>");
}

#[derive(Debug, Default)]
struct Element {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Element>,
    text: String,
}

impl Element {
    fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    fn child(&self, name: &str) -> Option<&Element> {
        self.children.iter().find(|c| c.name == name)
    }

    fn children_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Element> + 'a {
        self.children.iter().filter(move |c| c.name == name)
    }
}

fn xml_error(input: &[u8], pos: u64, message: String) -> LmfError {
    let pos = (pos as usize).min(input.len());
    let before = &input[..pos];
    let line = before.iter().filter(|b| **b == b'\n').count() as u64 + 1;
    let line_start = before.iter().rposition(|b| *b == b'\n').map_or(0, |p| p + 1);
    LmfError::Xml {
        line,
        column: (pos - line_start) as u64 + 1,
        message,
    }
}

fn element_from(start: &BytesStart, input: &[u8], pos: u64) -> Result<Element, LmfError> {
    let mut el = Element {
        name: String::from_utf8_lossy(start.local_name().as_ref()).into_owned(),
        ..Element::default()
    };
    for attr in start.attributes() {
        let attr = attr.map_err(|e| xml_error(input, pos, e.to_string()))?;
        let value = attr
            .unescape_value()
            .map_err(|e| xml_error(input, pos, e.to_string()))?;
        let key = String::from_utf8_lossy(attr.key.local_name().as_ref()).into_owned();
        el.attrs.push((key, value.into_owned()));
    }
    Ok(el)
}

fn read_tree(input: &[u8]) -> Result<Element, LmfError> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().trim_text(false);
    let mut stack: Vec<Element> = Vec::new();
    let mut root = None;
    loop {
        let event = reader
            .read_event()
            .map_err(|e| xml_error(input, reader.error_position(), e.to_string()))?;
        let pos = reader.buffer_position();
        match event {
            Event::Start(start) => {
                if root.is_some() {
                    return Err(xml_error(input, pos, "content after the root element".into()));
                }
                stack.push(element_from(&start, input, pos)?);
            }
            Event::Empty(start) => {
                let el = element_from(&start, input, pos)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None if root.is_none() => root = Some(el),
                    None => {
                        return Err(xml_error(input, pos, "content after the root element".into()))
                    }
                }
            }
            Event::Text(t) => {
                let s = t
                    .unescape()
                    .map_err(|e| xml_error(input, pos, e.to_string()))?;
                if let Some(top) = stack.last_mut() {
                    top.text.push_str(&s);
                }
            }
            Event::CData(d) => {
                if let Some(top) = stack.last_mut() {
                    top.text.push_str(&String::from_utf8_lossy(&d));
                }
            }
            Event::End(_) => {
                let el = stack.pop().expect("end tags are matched by the reader");
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None => root = Some(el),
                }
            }
            Event::Eof => {
                if !stack.is_empty() {
                    return Err(xml_error(input, pos, "unexpected end of document".into()));
                }
                return root.ok_or_else(|| LmfError::Invariant("document has no root element".into()));
            }
            _ => {}
        }
    }
}

/// Resource read back from TEI, with diagnostics for skipped elements.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResource {
    pub resource: LmfLexicalResource,
    pub diagnostics: Vec<Diagnostic>,
}

/// Reads a resource written by [`serialize_tei`] (or structurally equal TEI).
pub fn parse_tei(input: &[u8]) -> Result<ParsedResource, LmfError> {
    let root = read_tree(input)?;
    let mut diags = Vec::new();
    let mut resource = LmfLexicalResource::default();

    if let Some(notes) = root
        .child("teiHeader")
        .and_then(|h| h.child("fileDesc"))
        .and_then(|f| f.child("notesStmt"))
    {
        for note in notes.children_named("note") {
            if let Some(k) = note.attr("type") {
                resource.global_info.insert(k.to_string(), note.text.clone());
            }
        }
    }

    let mut divs = Vec::new();
    collect_lexicons(&root, &mut divs);
    if divs.is_empty() {
        return Err(LmfError::Invariant(
            "resource must contain at least one lexicon".into(),
        ));
    }
    for div in divs {
        let language = div.attr("lang").unwrap_or_default().to_string();
        let mut lexicon = LmfLexicon {
            language: language.clone(),
            entries: Vec::new(),
        };
        for child in &div.children {
            if child.name != "entry" {
                diags.push(unknown(&child.name, "lexicon"));
                continue;
            }
            let ordinal = lexicon.entries.len();
            lexicon
                .entries
                .push(read_entry(child, &language, ordinal, &mut diags)?);
        }
        if lexicon.entries.is_empty() {
            return Err(LmfError::Invariant(format!(
                "lexicon {language:?} must contain at least one lexical entry"
            )));
        }
        resource.lexicons.push(lexicon);
    }
    Ok(ParsedResource {
        resource,
        diagnostics: diags,
    })
}

fn collect_lexicons<'a>(el: &'a Element, out: &mut Vec<&'a Element>) {
    if el.name == "div" && el.attr("type") == Some("lexicon") {
        out.push(el);
        return;
    }
    for c in &el.children {
        collect_lexicons(c, out);
    }
}

fn unknown(name: &str, context: &str) -> Diagnostic {
    Diagnostic::new(
        DiagnosticKind::UnknownElement,
        format!("skipped unknown element <{name}> in {context}"),
    )
    .on(name)
}

fn read_gram_grp(el: &Element, context: &str, diags: &mut Vec<Diagnostic>) -> Attributes {
    let mut attrs = Attributes::new();
    for g in &el.children {
        let name = if g.name == "gram" {
            match g.attr("type") {
                Some(t) => t.to_string(),
                None => {
                    diags.push(unknown("gram without type", context));
                    continue;
                }
            }
        } else {
            match TEI_GRAM.iter().find(|(_, tag)| *tag == g.name) {
                Some((dc, _)) => dc.to_string(),
                None => {
                    diags.push(unknown(&g.name, context));
                    continue;
                }
            }
        };
        attrs.insert(name, g.text.clone());
    }
    attrs
}

fn read_form(el: &Element, context: &str, diags: &mut Vec<Diagnostic>) -> LmfForm {
    let kind = match el.attr("type") {
        Some("lemma") => FormKind::Lemma,
        _ => FormKind::Inflected,
    };
    let mut form = LmfForm {
        orthography: String::new(),
        attributes: Attributes::new(),
        kind,
    };
    for c in &el.children {
        match c.name.as_str() {
            "orth" => form.orthography = c.text.clone(),
            "gramGrp" => form.attributes = read_gram_grp(c, context, diags),
            other => diags.push(unknown(other, context)),
        }
    }
    form
}

fn read_entry(
    el: &Element,
    language: &str,
    ordinal: usize,
    diags: &mut Vec<Diagnostic>,
) -> Result<LmfLexicalEntry, LmfError> {
    let id = match el.attr("n") {
        Some(n) => n.to_string(),
        None => {
            let id = format!("{language}:entry:{ordinal}");
            diags.push(Diagnostic::new(
                DiagnosticKind::UnknownElement,
                format!("entry without an id; assigned {id}"),
            ));
            id
        }
    };
    let context = format!("entry {id}");
    let mut attributes = Attributes::new();
    let mut lemma = None;
    let mut inflected = Vec::new();
    let mut frames = Vec::new();
    let mut senses = Vec::new();
    for c in &el.children {
        match c.name.as_str() {
            "gramGrp" => attributes = read_gram_grp(c, &context, diags),
            "form" => {
                let form = read_form(c, &context, diags);
                if form.kind == FormKind::Lemma && lemma.is_none() {
                    lemma = Some(form);
                } else {
                    inflected.push(form);
                }
            }
            "syntacticBehaviour" => {
                for f in &c.children {
                    if f.name != "subcatFrame" {
                        diags.push(unknown(&f.name, &context));
                        continue;
                    }
                    frames.push(read_frame(f, &context, diags));
                }
            }
            "semanticPredicate" => senses.push(read_predicate(c, &context, diags)),
            other => diags.push(unknown(other, &context)),
        }
    }
    let lemma = lemma.ok_or_else(|| LmfError::Invariant(format!("{context} has no lemma form")))?;
    Ok(LmfLexicalEntry {
        id,
        attributes,
        lemma,
        inflected_forms: inflected,
        syntactic_behaviours: frames,
        senses,
    })
}

fn read_frame(el: &Element, context: &str, diags: &mut Vec<Diagnostic>) -> SubcatFrame {
    let mut frame = SubcatFrame {
        id: el.attr("n").unwrap_or_default().to_string(),
        arguments: Vec::new(),
    };
    for a in &el.children {
        if a.name != "syntacticArgument" {
            diags.push(unknown(&a.name, context));
            continue;
        }
        let mut arg = SyntacticArgument {
            id: a.attr("n").unwrap_or_default().to_string(),
            function: a.attr("function").unwrap_or_default().to_string(),
            constituent: a.attr("constituent").unwrap_or_default().to_string(),
            attributes: Attributes::new(),
        };
        for g in &a.children {
            if g.name == "gramGrp" {
                arg.attributes = read_gram_grp(g, context, diags);
            } else {
                diags.push(unknown(&g.name, context));
            }
        }
        frame.arguments.push(arg);
    }
    frame
}

fn read_predicate(el: &Element, context: &str, diags: &mut Vec<Diagnostic>) -> SemanticPredicate {
    let mut pred = SemanticPredicate {
        id: el.attr("n").unwrap_or_default().to_string(),
        arguments: Vec::new(),
        links: Vec::new(),
    };
    for c in &el.children {
        match c.name.as_str() {
            "semanticArgument" => pred.arguments.push(SemanticArgument {
                role: c.attr("role").unwrap_or_default().to_string(),
                value: c.text.clone(),
                label: c.attr("label").map(str::to_string),
            }),
            "link" => pred.links.push(ArgumentLink {
                role: c.attr("role").unwrap_or_default().to_string(),
                target: c.attr("target").unwrap_or_default().to_string(),
            }),
            other => diags.push(unknown(other, context)),
        }
    }
    pred
}
