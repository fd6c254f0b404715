//! Text formats for causal templates (`.cg`) and d-separation queries (`.cq`).
//!
//! ```text
//! # comments run to end of line
//! diagram example {
//!     node X setting(0);
//!     node A outcome(0);
//!     node B outcome(1);
//!     edge X -> A;
//!     corr A <-> B;
//!     nosignal X !-> B;
//! }
//! ```
//!
//! ```text
//! dsep { A } _||_ { B } | { X }
//! ```
//!
//! Each statement is validated as soon as it is read, so the reported error
//! is always the first one in document order.

mod lexer;

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::causal::{CausalTemplate, DSepQuery, NodeId, NodeKind, TemplateError};
pub use lexer::SourceSpan;
use lexer::{Lexer, Tok, Token};

/// File extension for diagram documents.
pub const DIAGRAM_EXTENSION: &str = "cg";
/// File extension for query documents.
pub const QUERY_EXTENSION: &str = "cq";

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{span}: {message}{}", expected_suffix(.expected))]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    /// Token descriptions that would have been accepted at `span`.
    pub expected: Vec<String>,
}

fn expected_suffix(expected: &[String]) -> String {
    match expected {
        [] => String::new(),
        [one] => format!(" (expected {one})"),
        many => format!(" (expected one of {})", many.join(", ")),
    }
}

impl ParseError {
    fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        Self {
            span,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    /// Multi-line diagnostic quoting the offending source line with a caret
    /// marker under the span.
    pub fn render(&self, source: &str, path: &str) -> String {
        let mut out = format!("{path}:{self}\n");
        if let Some(line) = source.lines().nth(self.span.line - 1) {
            let _ = writeln!(out, "  | {line}");
            let pad: String = line
                .chars()
                .take(self.span.column - 1)
                .map(|c| if c == '\t' { '\t' } else { ' ' })
                .collect();
            let _ = writeln!(out, "  | {pad}{}", "^".repeat(self.span.length.max(1)));
        }
        out
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<Token>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            lexer: Lexer::new(src),
            peeked: None,
        }
    }

    fn peek(&mut self) -> Result<&Token, ParseError> {
        if self.peeked.is_none() {
            let t = self
                .lexer
                .next_token()
                .map_err(|e| ParseError::new(e.span, e.message))?;
            self.peeked = Some(t);
        }
        Ok(self.peeked.as_ref().expect("filled above"))
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        self.peek()?;
        Ok(self.peeked.take().expect("filled above"))
    }

    fn unexpected(tok: &Token, expected: &[&str]) -> ParseError {
        ParseError {
            span: tok.span,
            message: format!("unexpected {}", tok.tok.describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<Token, ParseError> {
        let t = self.next()?;
        if std::mem::discriminant(&t.tok) == std::mem::discriminant(&want) {
            Ok(t)
        } else {
            Err(Self::unexpected(&t, &[&format!("`{}`", want.symbol())]))
        }
    }

    fn ident(&mut self) -> Result<(String, SourceSpan), ParseError> {
        let t = self.next()?;
        match t.tok {
            Tok::Ident(s) => Ok((s, t.span)),
            _ => Err(Self::unexpected(&t, &["identifier"])),
        }
    }

    fn keyword(&mut self, choices: &[&str]) -> Result<(String, SourceSpan), ParseError> {
        let t = self.next()?;
        match &t.tok {
            Tok::Ident(s) if choices.contains(&s.as_str()) => Ok((s.clone(), t.span)),
            _ => {
                let expected: Vec<String> = choices.iter().map(|c| format!("`{c}`")).collect();
                let refs: Vec<&str> = expected.iter().map(String::as_str).collect();
                Err(Self::unexpected(&t, &refs))
            }
        }
    }

    fn end(&mut self, what: &str) -> Result<(), ParseError> {
        let t = self.next()?;
        if t.tok == Tok::Eof {
            Ok(())
        } else {
            Err(ParseError {
                span: t.span,
                message: format!("trailing {} after {what}", t.tok.describe()),
                expected: vec!["end of input".into()],
            })
        }
    }
}

/// Span from the start of `a` to the end of `b` when both sit on one line,
/// otherwise just `a`.
fn join(a: SourceSpan, b: SourceSpan) -> SourceSpan {
    if a.line == b.line && b.column >= a.column {
        SourceSpan {
            length: b.column + b.length - a.column,
            ..a
        }
    } else {
        a
    }
}

fn node_id(label: &str, span: SourceSpan) -> Result<NodeId, ParseError> {
    NodeId::new(label).map_err(|e| ParseError::new(span, e.to_string()))
}

fn party(p: &mut Parser<'_>) -> Result<usize, ParseError> {
    p.expect(Tok::LParen)?;
    let t = p.next()?;
    let Tok::Int(text) = &t.tok else {
        return Err(Parser::unexpected(&t, &["party index"]));
    };
    let idx = text
        .parse::<usize>()
        .map_err(|_| ParseError::new(t.span, "party index out of range"))?;
    p.expect(Tok::RParen)?;
    Ok(idx)
}

/// Parses one `diagram` document.
pub fn parse_template(text: &str) -> Result<CausalTemplate, ParseError> {
    let mut p = Parser::new(text);
    p.keyword(&["diagram"])?;
    let (name, name_span) = p.ident()?;
    let mut t = CausalTemplate::new(name).map_err(|e| ParseError::new(name_span, e.to_string()))?;
    p.expect(Tok::LBrace)?;
    loop {
        let head = p.peek()?.clone();
        match &head.tok {
            Tok::RBrace => {
                p.next()?;
                break;
            }
            Tok::Ident(_) => {}
            _ => {
                return Err(Parser::unexpected(
                    &head,
                    &["`node`", "`edge`", "`corr`", "`nosignal`", "`}`"],
                ))
            }
        }
        let (kw, _) = p.keyword(&["node", "edge", "corr", "nosignal"])?;
        match kw.as_str() {
            "node" => {
                let (label, span) = p.ident()?;
                let id = node_id(&label, span)?;
                let (kind_kw, _) = p.keyword(&["setting", "outcome", "hidden", "selection"])?;
                let kind = match kind_kw.as_str() {
                    "setting" => NodeKind::Setting(party(&mut p)?),
                    "outcome" => NodeKind::Outcome(party(&mut p)?),
                    "hidden" => NodeKind::Hidden,
                    _ => NodeKind::Selection,
                };
                p.expect(Tok::Semi)?;
                t.add_node(id, kind)
                    .map_err(|e| ParseError::new(span, e.to_string()))?;
            }
            _ => {
                let (a, a_span) = p.ident()?;
                let op = match kw.as_str() {
                    "edge" => Tok::Arrow,
                    "corr" => Tok::BiArrow,
                    _ => Tok::NoSignal,
                };
                p.expect(op)?;
                let (b, b_span) = p.ident()?;
                p.expect(Tok::Semi)?;
                let res = match kw.as_str() {
                    "edge" => t.add_edge(&a, &b),
                    "corr" => t.add_corr(&a, &b),
                    _ => t.add_nosignal(&a, &b),
                };
                res.map_err(|e| {
                    let span = match &e {
                        TemplateError::UnknownNode(l)
                        | TemplateError::SelectionHasChildren(l)
                        | TemplateError::SelectionInCorrelation(l)
                        | TemplateError::CorrelationNotOutcome(l)
                        | TemplateError::InvalidLabel(l) => {
                            if *l == a {
                                a_span
                            } else {
                                b_span
                            }
                        }
                        _ => join(a_span, b_span),
                    };
                    ParseError::new(span, e.to_string())
                })?;
            }
        }
    }
    p.end("the diagram (one diagram per file)")?;
    Ok(t)
}

fn id_set(
    p: &mut Parser<'_>,
    taken: &BTreeSet<String>,
) -> Result<Vec<(NodeId, SourceSpan)>, ParseError> {
    p.expect(Tok::LBrace)?;
    let mut out = Vec::new();
    if p.peek()?.tok == Tok::RBrace {
        p.next()?;
        return Ok(out);
    }
    loop {
        let (label, span) = p.ident()?;
        if taken.contains(&label) {
            return Err(ParseError::new(span, "query sets must be disjoint"));
        }
        out.push((node_id(&label, span)?, span));
        let t = p.next()?;
        match t.tok {
            Tok::Comma => {}
            Tok::RBrace => return Ok(out),
            _ => return Err(Parser::unexpected(&t, &["`,`", "`}`"])),
        }
    }
}

/// Parses one `dsep` query.
pub fn parse_query(text: &str) -> Result<DSepQuery, ParseError> {
    let mut p = Parser::new(text);
    p.keyword(&["dsep"])?;
    let mut taken = BTreeSet::new();
    let mut sets = Vec::with_capacity(3);
    for sep in [None, Some(Tok::Indep), Some(Tok::Bar)] {
        if let Some(sep) = sep {
            p.expect(sep)?;
        }
        let set = id_set(&mut p, &taken)?;
        taken.extend(set.iter().map(|(id, _)| id.to_string()));
        sets.push(set.into_iter().map(|(id, _)| id).collect::<Vec<_>>());
    }
    p.end("the query")?;
    let given = sets.pop().expect("three sets");
    let to = sets.pop().expect("three sets");
    let from = sets.pop().expect("three sets");
    Ok(DSepQuery::new(from, to, given).expect("disjointness checked while parsing"))
}

struct Canonical<'a>(&'a CausalTemplate);

impl fmt::Display for Canonical<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.0;
        writeln!(f, "diagram {} {{", t.name())?;
        for (id, kind) in t.nodes() {
            writeln!(f, "    node {id} {kind};")?;
        }
        for (a, b) in t.directed_edges() {
            writeln!(f, "    edge {a} -> {b};")?;
        }
        for (a, b) in t.bidirected_edges() {
            writeln!(f, "    corr {a} <-> {b};")?;
        }
        for (s, o) in t.ns_forbidden() {
            writeln!(f, "    nosignal {s} !-> {o};")?;
        }
        writeln!(f, "}}")
    }
}

/// Canonical document: nodes by label, then edges, correlations and
/// no-signalling pairs, each sorted.
pub fn serialize_template(t: &CausalTemplate) -> String {
    Canonical(t).to_string()
}

pub fn serialize_query(q: &DSepQuery) -> String {
    format!("{q}\n")
}
