use std::io::{self, BufRead, Read};

use quick_xml::escape::{escape, partial_escape};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use super::{FeatureStructure, FeatureValue, HpsgEntry};
use crate::diag::{Diagnostic, DiagnosticKind, SourceRef};

pub const TEI_NS: &str = "http://www.tei-c.org/ns/1.0";

#[derive(Debug, Error)]
pub enum FsError {
    #[error("{line}:{column}: {message}")]
    Xml {
        line: u64,
        column: u64,
        message: String,
    },
    #[error("document has no root element")]
    NoRoot,
    #[error("expected a feature structure: {0}")]
    NotFs(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Tracks newline offsets of consumed bytes so reader positions can be
/// reported as line and column.
struct LineTracked<R> {
    inner: R,
    consumed: u64,
    newlines: Vec<u64>,
}

impl<R: BufRead> LineTracked<R> {
    fn new(inner: R) -> Self {
        LineTracked {
            inner,
            consumed: 0,
            newlines: Vec::new(),
        }
    }

    fn line_col(&self, offset: u64) -> (u64, u64) {
        let idx = self.newlines.partition_point(|&nl| nl < offset);
        let line_start = if idx == 0 { 0 } else { self.newlines[idx - 1] + 1 };
        (idx as u64 + 1, offset - line_start + 1)
    }
}

impl<R: BufRead> Read for LineTracked<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = {
            let avail = self.fill_buf()?;
            let n = avail.len().min(buf.len());
            buf[..n].copy_from_slice(&avail[..n]);
            n
        };
        self.consume(n);
        Ok(n)
    }
}

impl<R: BufRead> BufRead for LineTracked<R> {
    fn fill_buf(&mut self) -> io::Result<&[u8]> {
        self.inner.fill_buf()
    }

    fn consume(&mut self, amt: usize) {
        if let Ok(buf) = self.inner.fill_buf() {
            let base = self.consumed;
            for (i, b) in buf[..amt.min(buf.len())].iter().enumerate() {
                if *b == b'\n' {
                    self.newlines.push(base + i as u64);
                }
            }
        }
        self.consumed += amt as u64;
        self.inner.consume(amt);
    }
}

/// Minimal element tree for one entry fragment.
#[derive(Debug, Default)]
struct Node {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Node>,
    text: String,
}

impl Node {
    fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    fn has_stray_text(&self) -> bool {
        !self.text.trim().is_empty()
    }
}

enum NodeError {
    Malformed(String),
    Unsupported(String),
}

type NodeResult<T> = Result<T, NodeError>;

fn malformed<T>(msg: impl Into<String>) -> NodeResult<T> {
    Err(NodeError::Malformed(msg.into()))
}

fn node_to_fs(node: &Node) -> NodeResult<FeatureStructure> {
    if node.name != "fs" {
        return malformed(format!("expected <fs>, found <{}>", node.name));
    }
    if node.has_stray_text() {
        return malformed("unexpected text inside <fs>");
    }
    let mut fs = FeatureStructure {
        type_label: node.attr("type").map(str::to_string),
        features: Vec::with_capacity(node.children.len()),
    };
    for child in &node.children {
        if child.name != "f" {
            return malformed(format!("unexpected <{}> inside <fs>", child.name));
        }
        let name = match child.attr("name") {
            Some(n) if !n.is_empty() => n.to_string(),
            _ => return malformed("<f> without a name"),
        };
        if child.attr("fVal").is_some() {
            return Err(NodeError::Unsupported(format!(
                "feature {name} refers to a shared value (fVal)"
            )));
        }
        if child.has_stray_text() {
            return malformed(format!("unexpected text in feature {name}"));
        }
        let value = match child.children.as_slice() {
            [only] => node_to_value(only)?,
            [] => return malformed(format!("feature {name} has no value")),
            _ => return malformed(format!("feature {name} has several values")),
        };
        if fs.get(&name).is_some() {
            return malformed(format!("duplicate feature {name}"));
        }
        fs.features.push((name, value));
    }
    Ok(fs)
}

fn node_to_value(node: &Node) -> NodeResult<FeatureValue> {
    match node.name.as_str() {
        "symbol" | "binary" | "numeric" => match node.attr("value") {
            Some(v) => Ok(FeatureValue::Atom(v.to_string())),
            None => malformed(format!("<{}> without a value", node.name)),
        },
        "string" => {
            if !node.children.is_empty() {
                return malformed("markup inside <string>");
            }
            Ok(FeatureValue::Text(node.text.clone()))
        }
        "fs" => node_to_fs(node).map(FeatureValue::Avm),
        "vColl" => {
            if node.has_stray_text() {
                return malformed("unexpected text inside <vColl>");
            }
            node.children
                .iter()
                .map(node_to_value)
                .collect::<NodeResult<Vec<_>>>()
                .map(FeatureValue::List)
        }
        "vLabel" => Err(NodeError::Unsupported(
            "re-entrancy label (vLabel)".to_string(),
        )),
        "vAlt" | "vNot" | "vMerge" | "default" => Err(NodeError::Unsupported(format!(
            "value construct <{}>",
            node.name
        ))),
        other => malformed(format!("unknown value element <{other}>")),
    }
}

fn local_name(start: &BytesStart) -> String {
    String::from_utf8_lossy(start.local_name().as_ref()).into_owned()
}

/// What one top-level `fs` of a lexicon turned into.
#[derive(Debug, Clone, PartialEq)]
pub enum ReadItem {
    Entry(HpsgEntry),
    Rejected(Diagnostic),
}

enum State {
    BeforeRoot,
    /// Inside the root, nested this many wrapper elements deep.
    InRoot(usize),
    Done,
}

/// Streaming reader yielding one item per outermost `fs` element. Other
/// elements around entries (`text`, `body`, ...) are descended into.
///
/// Only one entry fragment is held in memory at a time. A malformed
/// document ends the iteration with an error; a defective entry yields
/// [`ReadItem::Rejected`] and reading continues.
pub struct LexiconReader<R: BufRead> {
    reader: Reader<LineTracked<R>>,
    buf: Vec<u8>,
    file: String,
    ordinal: usize,
    state: State,
}

impl<R: BufRead> LexiconReader<R> {
    pub fn new(input: R, file: impl Into<String>) -> Self {
        let mut reader = Reader::from_reader(LineTracked::new(input));
        reader.config_mut().trim_text(false);
        LexiconReader {
            reader,
            buf: Vec::new(),
            file: file.into(),
            ordinal: 0,
            state: State::BeforeRoot,
        }
    }

    fn error_at(&self, offset: u64, message: impl Into<String>) -> FsError {
        let (line, column) = self.reader.get_ref().line_col(offset);
        FsError::Xml {
            line,
            column,
            message: message.into(),
        }
    }

    fn xml_error(&self, err: quick_xml::Error) -> FsError {
        match err {
            quick_xml::Error::Io(e) => FsError::Io(io::Error::new(e.kind(), e.to_string())),
            other => self.error_at(self.reader.error_position(), other.to_string()),
        }
    }

    fn next_event(&mut self) -> Result<Event<'static>, FsError> {
        self.buf.clear();
        match self.reader.read_event_into(&mut self.buf) {
            Ok(ev) => Ok(ev.into_owned()),
            Err(e) => Err(self.xml_error(e)),
        }
    }

    fn start_node(&self, start: &BytesStart) -> Result<Node, FsError> {
        let mut node = Node {
            name: local_name(start),
            ..Node::default()
        };
        for attr in start.attributes() {
            let attr = attr.map_err(|e| {
                self.error_at(self.reader.buffer_position(), e.to_string())
            })?;
            let value = attr
                .unescape_value()
                .map_err(|e| self.xml_error(e))?
                .into_owned();
            let key = String::from_utf8_lossy(attr.key.local_name().as_ref()).into_owned();
            node.attrs.push((key, value));
        }
        Ok(node)
    }

    /// Reads the content of an element whose start tag was just consumed.
    fn read_element(&mut self, mut node: Node) -> Result<Node, FsError> {
        loop {
            match self.next_event()? {
                Event::Start(start) => {
                    let child = self.start_node(&start)?;
                    let child = self.read_element(child)?;
                    node.children.push(child);
                }
                Event::Empty(start) => {
                    let child = self.start_node(&start)?;
                    node.children.push(child);
                }
                Event::Text(text) => {
                    let s = text.unescape().map_err(|e| self.xml_error(e))?;
                    node.text.push_str(&s);
                }
                Event::CData(data) => {
                    node.text.push_str(&String::from_utf8_lossy(&data));
                }
                Event::End(_) => return Ok(node),
                Event::Eof => {
                    return Err(self.error_at(
                        self.reader.buffer_position(),
                        format!("unexpected end of document inside <{}>", node.name),
                    ))
                }
                _ => {}
            }
        }
    }

    fn finish_entry(&mut self, node: &Node) -> ReadItem {
        let source = SourceRef::new(self.file.clone(), self.ordinal);
        self.ordinal += 1;
        match build_entry(node, &source) {
            Ok(entry) => ReadItem::Entry(entry),
            Err(NodeError::Malformed(msg)) => {
                ReadItem::Rejected(Diagnostic::new(DiagnosticKind::MalformedEntry, msg).at(&source))
            }
            Err(NodeError::Unsupported(msg)) => ReadItem::Rejected(
                Diagnostic::new(DiagnosticKind::UnsupportedConstruct, msg).at(&source),
            ),
        }
    }

    fn advance(&mut self) -> Result<Option<ReadItem>, FsError> {
        loop {
            match self.state {
                State::Done => return Ok(None),
                State::BeforeRoot => match self.next_event()? {
                    Event::Start(_) => self.state = State::InRoot(0),
                    Event::Empty(_) => self.state = State::Done,
                    Event::Eof => return Err(FsError::NoRoot),
                    Event::Text(t) if !t.iter().all(u8::is_ascii_whitespace) => {
                        return Err(self.error_at(
                            self.reader.buffer_position(),
                            "text before the root element",
                        ))
                    }
                    _ => {}
                },
                State::InRoot(depth) => match self.next_event()? {
                    Event::Start(start) => {
                        let node = self.start_node(&start)?;
                        if node.name == "fs" {
                            let node = self.read_element(node)?;
                            return Ok(Some(self.finish_entry(&node)));
                        }
                        self.state = State::InRoot(depth + 1);
                    }
                    Event::Empty(start) => {
                        let node = self.start_node(&start)?;
                        if node.name == "fs" {
                            return Ok(Some(self.finish_entry(&node)));
                        }
                    }
                    Event::End(_) if depth > 0 => self.state = State::InRoot(depth - 1),
                    Event::End(_) => {
                        self.expect_eof()?;
                        self.state = State::Done;
                    }
                    Event::Eof => {
                        return Err(self.error_at(
                            self.reader.buffer_position(),
                            "unexpected end of document inside the root element",
                        ))
                    }
                    _ => {}
                },
            }
        }
    }

    fn expect_eof(&mut self) -> Result<(), FsError> {
        loop {
            match self.next_event()? {
                Event::Eof => return Ok(()),
                Event::Start(_) | Event::Empty(_) => {
                    return Err(self.error_at(
                        self.reader.buffer_position(),
                        "content after the root element",
                    ))
                }
                Event::Text(t) if !t.iter().all(u8::is_ascii_whitespace) => {
                    return Err(self.error_at(
                        self.reader.buffer_position(),
                        "text after the root element",
                    ))
                }
                _ => {}
            }
        }
    }
}

impl<R: BufRead> Iterator for LexiconReader<R> {
    type Item = Result<ReadItem, FsError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.advance() {
            Ok(item) => item.map(Ok),
            Err(e) => {
                self.state = State::Done;
                Some(Err(e))
            }
        }
    }
}

fn build_entry(node: &Node, source: &SourceRef) -> NodeResult<HpsgEntry> {
    let mut body = node_to_fs(node)?;
    body.rename_features("TETE", "HEAD");
    if let Some(dup) = body.duplicate_name() {
        return malformed(format!("duplicate feature {dup} after TETE/HEAD normalization"));
    }
    let phon = match body.find("PHON").and_then(FeatureValue::as_str) {
        Some(p) if !p.is_empty() => p.to_string(),
        _ => return malformed("entry has no PHON value"),
    };
    if body.find("MAJ").and_then(FeatureValue::as_str).is_none() {
        return malformed(format!("entry {phon} has no MAJ value"));
    }
    Ok(HpsgEntry {
        phon,
        body,
        source: source.clone(),
    })
}

/// Entries and entry-level diagnostics of one lexicon document.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct ParsedLexicon {
    pub entries: Vec<HpsgEntry>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Reads a whole lexicon. `file` names the source in diagnostics.
pub fn parse_lexicon<R: BufRead>(input: R, file: &str) -> Result<ParsedLexicon, FsError> {
    let mut out = ParsedLexicon::default();
    for item in LexiconReader::new(input, file) {
        match item? {
            ReadItem::Entry(e) => out.entries.push(e),
            ReadItem::Rejected(d) => out.diagnostics.push(d),
        }
    }
    Ok(out)
}

/// Parses a standalone `<fs>` document. Feature names are kept as written.
pub fn parse_fs(input: &[u8]) -> Result<FeatureStructure, FsError> {
    let mut reader = LexiconReader::new(input, "<fs>");
    loop {
        match reader.next_event()? {
            Event::Start(start) => {
                let node = reader.start_node(&start)?;
                let node = reader.read_element(node)?;
                return finish_standalone(&mut reader, &node);
            }
            Event::Empty(start) => {
                let node = reader.start_node(&start)?;
                return finish_standalone(&mut reader, &node);
            }
            Event::Eof => return Err(FsError::NoRoot),
            _ => {}
        }
    }
}

fn finish_standalone(
    reader: &mut LexiconReader<&[u8]>,
    node: &Node,
) -> Result<FeatureStructure, FsError> {
    reader.expect_eof()?;
    node_to_fs(node).map_err(|e| match e {
        NodeError::Malformed(m) | NodeError::Unsupported(m) => FsError::NotFs(m),
    })
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

/// Appends the TEI encoding of `fs` at the given indentation depth.
pub fn write_fs(fs: &FeatureStructure, out: &mut String, depth: usize) {
    write_fs_tag(fs, out, depth, None);
}

fn write_fs_tag(fs: &FeatureStructure, out: &mut String, depth: usize, xmlns: Option<&str>) {
    indent(out, depth);
    out.push_str("<fs");
    if let Some(ns) = xmlns {
        out.push_str(" xmlns=\"");
        out.push_str(ns);
        out.push('"');
    }
    if let Some(label) = &fs.type_label {
        out.push_str(" type=\"");
        out.push_str(&escape(label));
        out.push('"');
    }
    if fs.features.is_empty() {
        out.push_str("/>\n");
        return;
    }
    out.push_str(">\n");
    for (name, value) in &fs.features {
        indent(out, depth + 1);
        out.push_str("<f name=\"");
        out.push_str(&escape(name));
        out.push_str("\">\n");
        write_value(value, out, depth + 2);
        indent(out, depth + 1);
        out.push_str("</f>\n");
    }
    indent(out, depth);
    out.push_str("</fs>\n");
}

fn write_value(value: &FeatureValue, out: &mut String, depth: usize) {
    match value {
        FeatureValue::Atom(s) => {
            indent(out, depth);
            out.push_str("<symbol value=\"");
            out.push_str(&escape(s));
            out.push_str("\"/>\n");
        }
        FeatureValue::Text(s) => {
            indent(out, depth);
            out.push_str("<string>");
            out.push_str(&partial_escape(s));
            out.push_str("</string>\n");
        }
        FeatureValue::List(items) => {
            indent(out, depth);
            if items.is_empty() {
                out.push_str("<vColl org=\"list\"/>\n");
                return;
            }
            out.push_str("<vColl org=\"list\">\n");
            for item in items {
                write_value(item, out, depth + 1);
            }
            indent(out, depth);
            out.push_str("</vColl>\n");
        }
        FeatureValue::Avm(fs) => write_fs(fs, out, depth),
    }
}

/// Encodes one feature structure as a standalone TEI document.
pub fn serialize_fs(fs: &FeatureStructure) -> Vec<u8> {
    let mut out = String::new();
    write_fs_tag(fs, &mut out, 0, Some(TEI_NS));
    out.into_bytes()
}

/// Encodes a lexicon: a `lexicon` root holding one `fs` per entry.
pub fn serialize_lexicon<'a, I>(entries: I) -> Vec<u8>
where
    I: IntoIterator<Item = &'a FeatureStructure>,
{
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<lexicon xmlns=\"");
    out.push_str(TEI_NS);
    out.push_str("\">\n");
    for fs in entries {
        write_fs(fs, &mut out, 1);
    }
    out.push_str("</lexicon>\n");
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    const AKHRAJA: &str = r#"<?xml version="1.0" encoding="UTF-8" ?>
<Lexique>
<fs>
<f name="PHON">
  <string>أخرج</string>
</f>
<f name="SYNSEM">
<fs>
<f name="LOC">
<fs>
<f name="CAT">
<fs>
<f name="TETE">
<fs>
<f name="MAJ">
  <symbol value="verbe" />
</f>
<f name="VFORM">
  <symbol value="تأنيد التصريف" />
</f>
<f name="RADICAL">
  <symbol value="أ خ ر ج" />
</f>
<f name="SCHEME">
  <symbol value="أفعل" />
</f>
</fs>
</f>
</fs>
</f>
</fs>
</f>
</fs>
</f>
</fs>
</Lexique>
"#;

    #[test]
    fn reads_akhraja_fragment() {
        let lex = parse_lexicon(AKHRAJA.as_bytes(), "verbes.xml").unwrap();
        assert!(lex.diagnostics.is_empty());
        assert_eq!(lex.entries.len(), 1);
        let e = &lex.entries[0];
        assert_eq!(e.phon, "أخرج");
        assert_eq!(e.major(), Some("verbe"));
        assert_eq!(
            e.body
                .get_path(&["SYNSEM", "LOC", "CAT", "HEAD", "MAJ"])
                .and_then(FeatureValue::as_str),
            Some("verbe")
        );
        assert_eq!(e.atom("RADICAL"), Some("أ خ ر ج"));
        assert_eq!(e.source, SourceRef::new("verbes.xml", 0));
    }

    #[test]
    fn entries_inside_wrappers() {
        let doc = r#"<TEI><teiHeader><title>t</title></teiHeader><text><body>
            <fs><f name="PHON"><string>a</string></f><f name="MAJ"><symbol value="nom"/></f></fs>
            <div><fs><f name="PHON"><string>b</string></f><f name="MAJ"><symbol value="nom"/></f></fs></div>
            </body></text></TEI>"#;
        let lex = parse_lexicon(doc.as_bytes(), "x").unwrap();
        let phons: Vec<_> = lex.entries.iter().map(|e| e.phon.as_str()).collect();
        assert_eq!(phons, ["a", "b"]);
    }

    #[test]
    fn empty_lexicon() {
        let lex = parse_lexicon(&b"<lexicon/>"[..], "x").unwrap();
        assert!(lex.entries.is_empty() && lex.diagnostics.is_empty());
        let lex = parse_lexicon(&b"<lexicon>\n</lexicon>"[..], "x").unwrap();
        assert!(lex.entries.is_empty() && lex.diagnostics.is_empty());
    }

    #[test]
    fn namespaced_documents_are_accepted() {
        let doc = format!(
            r#"<tei:lexicon xmlns:tei="{TEI_NS}"><tei:fs><tei:f name="PHON"><tei:string>في</tei:string></tei:f><tei:f name="MAJ"><tei:symbol value="particle"/></tei:f></tei:fs></tei:lexicon>"#
        );
        let lex = parse_lexicon(doc.as_bytes(), "x").unwrap();
        assert_eq!(lex.entries.len(), 1);
        assert_eq!(lex.entries[0].major(), Some("particle"));
    }

    #[test]
    fn malformed_xml_reports_position() {
        let doc = "<lexicon>\n<fs>\n<f name=\"PHON\"><string>x</strin></f>\n</fs>\n</lexicon>";
        match parse_lexicon(doc.as_bytes(), "x") {
            Err(FsError::Xml { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected xml error, got {other:?}"),
        }
        match parse_lexicon(&b"<lexicon><fs>"[..], "x") {
            Err(FsError::Xml { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected xml error, got {other:?}"),
        }
        assert!(matches!(parse_lexicon(&b""[..], "x"), Err(FsError::NoRoot)));
    }

    #[test]
    fn duplicate_features_reject_only_that_entry() {
        let doc = r#"<lexicon>
<fs><f name="PHON"><string>a</string></f><f name="MAJ"><symbol value="noun"/></f></fs>
<fs><f name="PHON"><string>b</string></f><f name="MAJ"><symbol value="noun"/></f><f name="MAJ"><symbol value="verb"/></f></fs>
</lexicon>"#;
        let lex = parse_lexicon(doc.as_bytes(), "x").unwrap();
        assert_eq!(lex.entries.len(), 1);
        assert_eq!(lex.diagnostics.len(), 1);
        assert_eq!(lex.diagnostics[0].kind, DiagnosticKind::MalformedEntry);
        assert_eq!(lex.diagnostics[0].source.as_ref().unwrap().ordinal, 1);
    }

    #[test]
    fn tete_and_head_together_is_a_duplicate() {
        let doc = r#"<lexicon><fs><f name="PHON"><string>a</string></f>
<f name="TETE"><fs><f name="MAJ"><symbol value="noun"/></f></fs></f>
<f name="HEAD"><fs/></f></fs></lexicon>"#;
        let lex = parse_lexicon(doc.as_bytes(), "x").unwrap();
        assert!(lex.entries.is_empty());
        assert!(lex.diagnostics[0].message.contains("HEAD"));
    }

    #[test]
    fn reentrancy_is_unsupported() {
        let doc = r#"<lexicon><fs><f name="PHON"><string>a</string></f><f name="MAJ"><symbol value="verb"/></f>
<f name="SUJ"><vLabel name="1"><symbol value="NP"/></vLabel></f></fs></lexicon>"#;
        let lex = parse_lexicon(doc.as_bytes(), "x").unwrap();
        assert_eq!(lex.diagnostics[0].kind, DiagnosticKind::UnsupportedConstruct);
    }

    #[test]
    fn single_atom_serialization() {
        let fs = FeatureStructure::new().with("MAJ", FeatureValue::atom("verbe"));
        let xml = String::from_utf8(serialize_fs(&fs)).unwrap();
        let compact: String = xml.lines().map(str::trim).collect();
        assert_eq!(
            compact,
            format!(r#"<fs xmlns="{TEI_NS}"><f name="MAJ"><symbol value="verbe"/></f></fs>"#)
        );
        let empty = String::from_utf8(serialize_fs(&FeatureStructure::new())).unwrap();
        assert_eq!(empty.trim(), format!(r#"<fs xmlns="{TEI_NS}"/>"#));
    }

    #[test]
    fn nested_round_trip() {
        let inner = FeatureStructure::typed("index")
            .with("GENR", FeatureValue::atom("masculin"))
            .with("case", FeatureValue::atom("nominative"));
        let fs = FeatureStructure::new()
            .with("PHON", FeatureValue::text("كَتَبَ & <x>"))
            .with(
                "S-ARG",
                FeatureValue::List(vec![
                    FeatureValue::Avm(
                        FeatureStructure::new().with("INDEX", FeatureValue::Avm(inner)),
                    ),
                    FeatureValue::List(vec![]),
                ]),
            )
            .with("NUCLEUS", FeatureValue::Avm(FeatureStructure::new()));
        let bytes = serialize_fs(&fs);
        assert_eq!(parse_fs(&bytes).unwrap(), fs);
    }
}
