//! Line-oriented N-Triples reader.
//!
//! Besides plain N-Triples it accepts CURIEs for the built-in prefixes, the
//! `a` shorthand for `rdf:type`, and `@prefix p: <ns> .` lines so fixtures
//! stay readable.

use serde::Serialize;

use super::OntologyError;
use crate::vocab::{PrefixMap, RDF_TYPE};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Literal {
    pub lexical: String,
    pub lang: Option<String>,
    pub datatype: Option<String>,
}

impl Literal {
    pub fn plain(s: impl Into<String>) -> Self {
        Literal { lexical: s.into(), lang: None, datatype: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Object {
    Iri(String),
    Literal(Literal),
}

impl Object {
    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Object::Iri(i) => Some(i),
            Object::Literal(_) => None,
        }
    }
}

/// Subjects are IRIs or `_:` blank labels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Statement {
    pub subject: String,
    pub predicate: String,
    pub object: Object,
}

impl Statement {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: Object) -> Self {
        Statement { subject: subject.into(), predicate: predicate.into(), object }
    }

    pub fn iri(subject: &str, predicate: &str, object: &str) -> Self {
        Statement::new(subject, predicate, Object::Iri(object.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Iri(String),
    Literal(Literal),
    Dot,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    prefixes: &'a PrefixMap,
    /// Set when a CURIE carried the statement terminator glued to it.
    pending_dot: bool,
}

impl<'a> Lexer<'a> {
    fn err(&self, message: impl Into<String>) -> OntologyError {
        OntologyError::Syntax { line: self.line, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.chars.next_if(|(_, c)| c.is_whitespace()).is_some() {}
    }

    fn next_token(&mut self) -> Result<Option<Token>, OntologyError> {
        self.skip_ws();
        let Some(&(start, c)) = self.chars.peek() else { return Ok(None) };
        match c {
            '#' => {
                for _ in self.chars.by_ref() {}
                Ok(None)
            }
            '.' => {
                self.chars.next();
                Ok(Some(Token::Dot))
            }
            '<' => {
                self.chars.next();
                let mut iri = String::new();
                loop {
                    match self.chars.next() {
                        Some((_, '>')) => break,
                        Some((_, ch)) if ch.is_whitespace() => return Err(self.err("whitespace inside IRI")),
                        Some((_, ch)) => iri.push(ch),
                        None => return Err(self.err("unterminated IRI")),
                    }
                }
                Ok(Some(Token::Iri(iri)))
            }
            '"' => {
                self.chars.next();
                let lexical = self.string_body()?;
                let mut lit = Literal::plain(lexical);
                if self.chars.next_if(|(_, c)| *c == '@').is_some() {
                    let mut lang = String::new();
                    while let Some((_, ch)) = self.chars.next_if(|(_, c)| c.is_alphanumeric() || *c == '-') {
                        lang.push(ch);
                    }
                    if lang.is_empty() {
                        return Err(self.err("empty language tag"));
                    }
                    lit.lang = Some(lang.to_lowercase());
                } else if self.chars.next_if(|(_, c)| *c == '^').is_some() {
                    if self.chars.next_if(|(_, c)| *c == '^').is_none() {
                        return Err(self.err("expected `^^`"));
                    }
                    match self.next_token()? {
                        Some(Token::Iri(dt)) => lit.datatype = Some(dt),
                        _ => return Err(self.err("expected datatype IRI after `^^`")),
                    }
                }
                Ok(Some(Token::Literal(lit)))
            }
            _ => {
                let mut end = self.src.len();
                while let Some(&(i, ch)) = self.chars.peek() {
                    if ch.is_whitespace() {
                        end = i;
                        break;
                    }
                    self.chars.next();
                }
                let mut word = &self.src[start..end];
                // `ex:thing.` at end of line: the dot terminates the statement.
                let trailing_dot = word.len() > 1 && word.ends_with('.');
                if trailing_dot {
                    word = &word[..word.len() - 1];
                }
                let iri = if word == "a" {
                    RDF_TYPE.to_string()
                } else if let Some(label) = word.strip_prefix("_:") {
                    format!("_:{label}")
                } else {
                    self.prefixes.expand(word).ok_or_else(|| self.err(format!("unknown term or prefix `{word}`")))?
                };
                self.pending_dot = trailing_dot;
                Ok(Some(Token::Iri(iri)))
            }
        }
    }

    fn string_body(&mut self) -> Result<String, OntologyError> {
        let mut out = String::new();
        loop {
            match self.chars.next() {
                Some((_, '"')) => return Ok(out),
                Some((_, '\\')) => {
                    let esc = self.chars.next().map(|(_, c)| c);
                    match esc {
                        Some('n') => out.push('\n'),
                        Some('t') => out.push('\t'),
                        Some('r') => out.push('\r'),
                        Some('"') => out.push('"'),
                        Some('\\') => out.push('\\'),
                        Some('\'') => out.push('\''),
                        Some(u @ ('u' | 'U')) => {
                            let n = if u == 'u' { 4 } else { 8 };
                            let hex: String = (0..n).filter_map(|_| self.chars.next().map(|(_, c)| c)).collect();
                            let ch = u32::from_str_radix(&hex, 16)
                                .ok()
                                .and_then(char::from_u32)
                                .ok_or_else(|| self.err(format!("bad escape \\{u}{hex}")))?;
                            out.push(ch);
                        }
                        other => return Err(self.err(format!("bad escape {other:?}"))),
                    }
                }
                Some((_, c)) => out.push(c),
                None => return Err(self.err("unterminated string")),
            }
        }
    }
}

/// What one non-empty line contributed.
pub(crate) enum Line {
    Statement(Statement),
    Prefix(String, String),
}

pub(crate) fn parse_line(text: &str, line: usize, prefixes: &PrefixMap) -> Result<Option<Line>, OntologyError> {
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    if let Some(rest) = trimmed.strip_prefix("@prefix") {
        let rest = rest
            .trim()
            .strip_suffix('.')
            .map(str::trim)
            .ok_or(OntologyError::Syntax { line, message: "prefix declaration must end with `.`".into() })?;
        let (name, ns) = rest
            .split_once(char::is_whitespace)
            .ok_or(OntologyError::Syntax { line, message: "expected `@prefix name: <namespace> .`".into() })?;
        let name = name
            .strip_suffix(':')
            .ok_or(OntologyError::Syntax { line, message: format!("prefix name `{name}` must end with `:`") })?;
        let ns = ns.trim();
        let ns = ns.strip_prefix('<').and_then(|n| n.strip_suffix('>')).ok_or(OntologyError::Syntax {
            line,
            message: format!("namespace `{ns}` must be an IRI in angle brackets"),
        })?;
        return Ok(Some(Line::Prefix(name.to_string(), ns.to_string())));
    }

    let mut lx = Lexer { chars: text.char_indices().peekable(), src: text, line, prefixes, pending_dot: false };
    let mut terms = Vec::new();
    let mut terminated = false;
    while let Some(tok) = lx.next_token()? {
        if terminated {
            return Err(lx.err("content after terminating `.`"));
        }
        match tok {
            Token::Dot => terminated = true,
            other => terms.push(other),
        }
        if lx.pending_dot {
            lx.pending_dot = false;
            terminated = true;
        }
    }
    if !terminated {
        return Err(lx.err("statement must end with `.`"));
    }
    let [s, p, o]: [Token; 3] =
        terms.try_into().map_err(|t: Vec<Token>| lx.err(format!("expected 3 terms, found {}", t.len())))?;
    let (Token::Iri(subject), Token::Iri(predicate)) = (s, p) else {
        return Err(lx.err("subject and predicate must be IRIs"));
    };
    let object = match o {
        Token::Iri(i) => Object::Iri(i),
        Token::Literal(l) => Object::Literal(l),
        Token::Dot => unreachable!("dots are never collected"),
    };
    Ok(Some(Line::Statement(Statement { subject, predicate, object })))
}
