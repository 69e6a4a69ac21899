//! Query assembly: the SELECT target, modifier words, the WHERE clause built
//! from resolved triples, and the text form of the emitted SPARQL subset.
//!
//! [`canonicalize`] parses that same subset back and produces a normal form
//! in which variable names, conjunct order and UNION branch order no longer
//! matter. Two queries are considered equivalent when their normal forms are
//! equal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::artext::{config_lines, normalize};
use crate::mapper::{CandidateRdfTriple, MatchedTerm, TriplePart};
use crate::npx::{Conjunction, NounPhrase};
use crate::ontostore::TermKind;
use crate::ptree::{NodeId, ParseTree};
use crate::vocab::{PrefixMap, RDF_TYPE};

pub const TARGET_VAR: &str = "target";

/// Comparative and superlative forms, normalized. Their meaning (ordering,
/// limits) has no rule in the generator, so they are reported instead.
const DEGREE_WORDS: &[&str] =
    &["اكبر", "اصغر", "اكثر", "اقل", "اهم", "ابرز", "اخطر", "اشهر", "اعلي", "ادني", "اطول", "اقصر", "اشد"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SparqlError {
    #[error("no question or order word is followed by a noun phrase")]
    NoTargetFound,
    #[error("the target `{phrase}` has no usable ontology term")]
    TargetUnmatched { phrase: String },
    #[error("a UNION branch is empty")]
    EmptyBranch,
    #[error("the triple is not under the negation at leaf {position}")]
    NotNegated { position: usize },
    #[error("unsupported SPARQL at byte {position}: {message}")]
    OutOfSubset { position: usize, message: String },
}

/// A normalized word set read from a one-word-per-line file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordList {
    words: BTreeSet<String>,
}

impl WordList {
    pub fn parse(text: &str) -> Self {
        WordList { words: config_lines(text).map(|(_, w)| normalize(w)).filter(|w| !w.is_empty()).collect() }
    }

    pub fn question_words() -> Self {
        Self::parse(include_str!("../data/question_words.txt"))
    }

    pub fn order_words() -> Self {
        Self::parse(include_str!("../data/order_words.txt"))
    }

    /// Membership after normalization.
    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&normalize(word))
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryTarget {
    pub np: NounPhrase,
    /// Leaf index of the question or order word.
    pub trigger: usize,
    pub term: Option<MatchedTerm>,
    pub variable_name: String,
}

/// The first noun phrase after the first question word (a `WP` leaf from
/// the question list, or any leaf at the start of the sentence) or order
/// word. `nps` are expected in surface order.
pub fn extract_target(
    tree: &ParseTree,
    nps: &[NounPhrase],
    question_words: &WordList,
    order_words: &WordList,
) -> Result<QueryTarget, SparqlError> {
    let is_trigger = |i: usize, tag: &str, token: &str| {
        order_words.contains(token) || (question_words.contains(token) && (tag.starts_with('W') || i == 0))
    };
    let trigger = tree
        .leaves()
        .enumerate()
        .find(|(i, l)| is_trigger(*i, &l.tag, l.token.as_deref().unwrap_or("")))
        .map(|(i, _)| i)
        .ok_or(SparqlError::NoTargetFound)?;
    let np = nps.iter().find(|np| np.span.start > trigger).ok_or(SparqlError::NoTargetFound)?;
    Ok(QueryTarget { np: np.clone(), trigger, term: None, variable_name: format!("?{TARGET_VAR}") })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModifierKind {
    Negation,
    Conjunction,
    Disjunction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModifierDescriptor {
    pub kind: ModifierKind,
    pub trigger_token: String,
    /// Leaf index.
    pub position: usize,
}

/// A comparative or superlative word the generator cannot express.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnsupportedModifier {
    pub token: String,
    pub tag: String,
    pub position: usize,
}

impl fmt::Display for UnsupportedModifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "comparative/superlative `{}` at leaf {} is not supported", self.token, self.position)
    }
}

/// Negation and coordination words in surface order, plus any comparative
/// or superlative words found along the way.
pub fn extract_modifiers(tree: &ParseTree) -> (Vec<ModifierDescriptor>, Vec<UnsupportedModifier>) {
    let mut mods = Vec::new();
    let mut unsupported = Vec::new();
    for (position, leaf) in tree.leaves().enumerate() {
        let Some(token) = leaf.token.as_deref() else { continue };
        let n = normalize(token);
        let kind = match n.as_str() {
            "لا" | "غير" => Some(ModifierKind::Negation),
            "و" => Some(ModifierKind::Conjunction),
            "او" => Some(ModifierKind::Disjunction),
            _ => None,
        };
        if let Some(kind) = kind {
            mods.push(ModifierDescriptor { kind, trigger_token: token.to_string(), position });
        } else if leaf.tag.ends_with("JJR") || leaf.tag.ends_with("JJS") || DEGREE_WORDS.contains(&n.as_str()) {
            unsupported.push(UnsupportedModifier { token: token.to_string(), tag: leaf.tag.clone(), position });
        }
    }
    (mods, unsupported)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum QueryTerm {
    /// Name without the leading `?`.
    Var(String),
    Iri(String),
    Literal(String),
}

impl QueryTerm {
    fn var(name: &str) -> Self {
        QueryTerm::Var(name.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TriplePattern {
    pub subject: QueryTerm,
    pub predicate: QueryTerm,
    pub object: QueryTerm,
}

impl TriplePattern {
    pub fn new(subject: QueryTerm, predicate: QueryTerm, object: QueryTerm) -> Self {
        TriplePattern { subject, predicate, object }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Expression {
    Equals(QueryTerm, QueryTerm),
    NotBound(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Pattern {
    Triple(TriplePattern),
    Optional(Vec<Pattern>),
    Union(Vec<Pattern>, Vec<Pattern>),
    Filter(Expression),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SparqlQuery {
    pub select: Vec<String>,
    pub patterns: Vec<Pattern>,
}

impl SparqlQuery {
    /// Applies `f` to every variable name, in SELECT and WHERE alike.
    pub fn rename_variables(&self, f: &dyn Fn(&str) -> String) -> SparqlQuery {
        fn term(t: &QueryTerm, f: &dyn Fn(&str) -> String) -> QueryTerm {
            match t {
                QueryTerm::Var(v) => QueryTerm::Var(f(v)),
                other => other.clone(),
            }
        }
        fn pats(ps: &[Pattern], f: &dyn Fn(&str) -> String) -> Vec<Pattern> {
            ps.iter()
                .map(|p| match p {
                    Pattern::Triple(t) => Pattern::Triple(TriplePattern::new(
                        term(&t.subject, f),
                        term(&t.predicate, f),
                        term(&t.object, f),
                    )),
                    Pattern::Optional(inner) => Pattern::Optional(pats(inner, f)),
                    Pattern::Union(l, r) => Pattern::Union(pats(l, f), pats(r, f)),
                    Pattern::Filter(Expression::Equals(a, b)) => {
                        Pattern::Filter(Expression::Equals(term(a, f), term(b, f)))
                    }
                    Pattern::Filter(Expression::NotBound(v)) => Pattern::Filter(Expression::NotBound(f(v))),
                })
                .collect()
        }
        SparqlQuery { select: self.select.iter().map(|v| f(v)).collect(), patterns: pats(&self.patterns, f) }
    }

    /// Every triple pattern, nested ones included, in order.
    pub fn triples(&self) -> Vec<&TriplePattern> {
        fn walk<'a>(ps: &'a [Pattern], out: &mut Vec<&'a TriplePattern>) {
            for p in ps {
                match p {
                    Pattern::Triple(t) => out.push(t),
                    Pattern::Optional(inner) => walk(inner, out),
                    Pattern::Union(l, r) => {
                        walk(l, out);
                        walk(r, out);
                    }
                    Pattern::Filter(_) => {}
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.patterns, &mut out);
        out
    }

    pub fn not_bound_count(&self) -> usize {
        fn count(ps: &[Pattern]) -> usize {
            ps.iter()
                .map(|p| match p {
                    Pattern::Filter(Expression::NotBound(_)) => 1,
                    Pattern::Optional(inner) => count(inner),
                    Pattern::Union(l, r) => count(l) + count(r),
                    _ => 0,
                })
                .sum()
        }
        count(&self.patterns)
    }
}

/// Rewrites a negated triple as an OPTIONAL block that would bind the
/// object, followed by a filter requiring that it stayed unbound.
///
/// With a concrete object the object is replaced by `fresh` and an equality
/// filter goes inside the block. A variable object keeps its `guards` (its
/// type pattern) inside the block instead.
pub fn apply_negation(
    triple: &TriplePattern,
    guards: &[Pattern],
    descriptor: &ModifierDescriptor,
    fresh: &str,
) -> Result<(Pattern, Pattern), SparqlError> {
    if descriptor.kind != ModifierKind::Negation {
        return Err(SparqlError::NotNegated { position: descriptor.position });
    }
    match &triple.object {
        QueryTerm::Var(v) => {
            let mut inner = vec![Pattern::Triple(triple.clone())];
            inner.extend(guards.iter().cloned());
            Ok((Pattern::Optional(inner), Pattern::Filter(Expression::NotBound(v.clone()))))
        }
        concrete => {
            let bound = TriplePattern::new(triple.subject.clone(), triple.predicate.clone(), QueryTerm::var(fresh));
            let inner = vec![
                Pattern::Triple(bound),
                Pattern::Filter(Expression::Equals(QueryTerm::var(fresh), concrete.clone())),
            ];
            Ok((Pattern::Optional(inner), Pattern::Filter(Expression::NotBound(fresh.to_string()))))
        }
    }
}

pub fn apply_disjunction(left: Vec<Pattern>, right: Vec<Pattern>) -> Result<Pattern, SparqlError> {
    if left.is_empty() || right.is_empty() {
        return Err(SparqlError::EmptyBranch);
    }
    Ok(Pattern::Union(left, right))
}

/// Hands out `var`, `var2`, `var3`, ... and remembers which class got which.
#[derive(Default)]
struct Variables {
    by_class: BTreeMap<String, String>,
    issued: usize,
}

impl Variables {
    fn fresh(&mut self) -> String {
        self.issued += 1;
        if self.issued == 1 {
            "var".to_string()
        } else {
            format!("var{}", self.issued)
        }
    }
}

struct Builder<'a> {
    target: &'a MatchedTerm,
    vars: Variables,
    mods: &'a [ModifierDescriptor],
}

impl Builder<'_> {
    /// The term for a triple part plus, for a class seen for the first time,
    /// its `rdf:type` pattern.
    fn term(&mut self, part: &TriplePart) -> (QueryTerm, Option<Pattern>) {
        match part {
            TriplePart::Matched(t) if t.iri == self.target.iri => (QueryTerm::var(TARGET_VAR), None),
            TriplePart::Matched(t) if t.kind == TermKind::Class => {
                if let Some(v) = self.vars.by_class.get(&t.iri) {
                    return (QueryTerm::Var(v.clone()), None);
                }
                let v = self.vars.fresh();
                self.vars.by_class.insert(t.iri.clone(), v.clone());
                let ty = TriplePattern::new(
                    QueryTerm::Var(v.clone()),
                    QueryTerm::Iri(RDF_TYPE.into()),
                    QueryTerm::Iri(t.iri.clone()),
                );
                (QueryTerm::Var(v), Some(Pattern::Triple(ty)))
            }
            TriplePart::Matched(t) => (QueryTerm::Iri(t.iri.clone()), None),
            TriplePart::Literal(l) => (QueryTerm::Literal(l.clone()), None),
            TriplePart::Missing => (QueryTerm::Literal(String::new()), None),
        }
    }

    fn unit(&mut self, c: &CandidateRdfTriple) -> Result<Vec<Pattern>, SparqlError> {
        let (s, s_ty) = self.term(&c.subject);
        let (p, _) = self.term(&c.predicate);
        let (o, o_ty) = self.term(&c.object);
        let triple = TriplePattern::new(s, p, o);
        let negation = self
            .mods
            .iter()
            .find(|m| m.kind == ModifierKind::Negation && c.provenance.predicate_leaves.contains(&m.position));
        let mut out: Vec<Pattern> = s_ty.into_iter().collect();
        match negation {
            Some(m) => {
                let guards: Vec<Pattern> = o_ty.into_iter().collect();
                let fresh = if matches!(triple.object, QueryTerm::Var(_)) { String::new() } else { self.vars.fresh() };
                let (opt, filter) = apply_negation(&triple, &guards, m, &fresh)?;
                out.push(opt);
                out.push(filter);
            }
            None => {
                out.push(Pattern::Triple(triple));
                out.extend(o_ty);
            }
        }
        Ok(out)
    }
}

/// Assembles the WHERE clause. The target becomes `?target` (typed by its
/// class when it is one), every other class becomes a fresh typed variable,
/// negated triples turn into OPTIONAL/!bound pairs, and triples that came
/// from the branches of one `أو` are joined with UNION.
pub fn build_query(
    triples: &[CandidateRdfTriple],
    target: &QueryTarget,
    mods: &[ModifierDescriptor],
) -> Result<SparqlQuery, SparqlError> {
    let unmatched = || SparqlError::TargetUnmatched { phrase: target.np.text() };
    let term = target.term.as_ref().filter(|t| t.kind.is_entity()).ok_or_else(unmatched)?;
    let mentioned =
        triples.iter().any(|c| c.subject.iri() == Some(term.iri.as_str()) || c.object.iri() == Some(term.iri.as_str()));
    let mut patterns = Vec::new();
    match term.kind {
        TermKind::Class => patterns.push(Pattern::Triple(TriplePattern::new(
            QueryTerm::var(TARGET_VAR),
            QueryTerm::Iri(RDF_TYPE.into()),
            QueryTerm::Iri(term.iri.clone()),
        ))),
        _ if !mentioned => return Err(unmatched()),
        _ => {}
    }

    let mut b = Builder { target: term, vars: Variables::default(), mods };
    let mut done_heads: Vec<NodeId> = Vec::new();
    for (i, c) in triples.iter().enumerate() {
        let or_head = match (c.provenance.conjunction, c.provenance.conjunctive_head) {
            (Some(Conjunction::Or), Some(h)) => Some(h),
            _ => None,
        };
        let Some(h) = or_head else {
            patterns.extend(b.unit(c)?);
            continue;
        };
        if done_heads.contains(&h) {
            continue;
        }
        done_heads.push(h);
        let mut branches = Vec::new();
        for c in triples[i..].iter().filter(|c| c.provenance.conjunctive_head == Some(h)) {
            branches.push(b.unit(c)?);
        }
        let mut iter = branches.into_iter().rev();
        let mut acc = iter.next().unwrap_or_default();
        for left in iter {
            acc = vec![apply_disjunction(left, acc)?];
        }
        patterns.extend(acc);
    }
    Ok(SparqlQuery { select: vec![TARGET_VAR.to_string()], patterns })
}

fn escape_literal(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

struct Printer<'a> {
    prefixes: &'a PrefixMap,
    used: BTreeSet<String>,
}

impl Printer<'_> {
    fn term(&mut self, t: &QueryTerm) -> String {
        match t {
            QueryTerm::Var(v) => format!("?{v}"),
            QueryTerm::Literal(l) => format!("\"{}\"", escape_literal(l)),
            QueryTerm::Iri(i) => match self.prefixes.compact(i) {
                Some((p, local)) => {
                    self.used.insert(p.clone());
                    format!("{p}:{local}")
                }
                None => format!("<{i}>"),
            },
        }
    }

    fn expr(&mut self, e: &Expression) -> String {
        match e {
            Expression::Equals(a, b) => format!("FILTER({} = {})", self.term(a), self.term(b)),
            Expression::NotBound(v) => format!("FILTER(!bound(?{v}))"),
        }
    }

    fn block(&mut self, patterns: &[Pattern], depth: usize, out: &mut Vec<String>) {
        let pad = "  ".repeat(depth);
        for p in patterns {
            match p {
                Pattern::Triple(t) => {
                    let line =
                        format!("{} {} {} .", self.term(&t.subject), self.term(&t.predicate), self.term(&t.object));
                    out.push(format!("{pad}{line}"));
                }
                Pattern::Filter(e) => {
                    let line = self.expr(e);
                    out.push(format!("{pad}{line}"));
                }
                Pattern::Optional(inner) => {
                    out.push(format!("{pad}OPTIONAL {{"));
                    self.block(inner, depth + 1, out);
                    out.push(format!("{pad}}}"));
                }
                Pattern::Union(l, r) => {
                    for (i, side) in [l, r].into_iter().enumerate() {
                        if i == 1 {
                            out.push(format!("{pad}UNION"));
                        }
                        // A right side that is itself a union continues the chain.
                        if let [Pattern::Union(..)] = side.as_slice() {
                            let mut nested = Vec::new();
                            self.block(side, depth, &mut nested);
                            out.extend(nested);
                        } else {
                            out.push(format!("{pad}{{"));
                            self.block(side, depth + 1, out);
                            out.push(format!("{pad}}}"));
                        }
                    }
                }
            }
        }
    }
}

/// Deterministic text: sorted PREFIX lines for the prefixes actually used,
/// then one pattern per line with two-space indentation.
pub fn serialize(q: &SparqlQuery, prefixes: &PrefixMap) -> String {
    let mut printer = Printer { prefixes, used: BTreeSet::new() };
    let mut body = Vec::new();
    printer.block(&q.patterns, 1, &mut body);
    let mut out = String::new();
    for p in &printer.used {
        if let Some(ns) = prefixes.get(p) {
            out.push_str(&format!("PREFIX {p}: <{ns}>\n"));
        }
    }
    let vars: Vec<String> = q.select.iter().map(|v| format!("?{v}")).collect();
    out.push_str(&format!("SELECT {} WHERE {{\n", vars.join(" ")));
    for line in body {
        out.push_str(&line);
        out.push('\n');
    }
    out.push('}');
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Var(String),
    Iri(String),
    Str(String),
    Punct(char),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, SparqlError> {
    let oos = |position: usize, message: &str| SparqlError::OutOfSubset { position, message: message.into() };
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '#' {
            while chars.next_if(|(_, c)| *c != '\n').is_some() {}
        } else if "{}().=!".contains(c) {
            chars.next();
            out.push((i, Tok::Punct(c)));
        } else if c == '<' {
            chars.next();
            let mut iri = String::new();
            loop {
                match chars.next() {
                    Some((_, '>')) => break,
                    Some((_, ch)) if !ch.is_whitespace() => iri.push(ch),
                    _ => return Err(oos(i, "unterminated IRI")),
                }
            }
            out.push((i, Tok::Iri(iri)));
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some((_, '"')) => break,
                    Some((_, '\\')) => match chars.next() {
                        Some((_, ch)) => s.push(ch),
                        None => return Err(oos(i, "unterminated string")),
                    },
                    Some((_, ch)) => s.push(ch),
                    None => return Err(oos(i, "unterminated string")),
                }
            }
            if chars.peek().is_some_and(|(_, c)| *c == '@' || *c == '^') {
                return Err(oos(i, "tagged or typed literals are not used"));
            }
            out.push((i, Tok::Str(s)));
        } else if c == '?' || c == '$' {
            chars.next();
            let mut v = String::new();
            while let Some((_, ch)) = chars.next_if(|(_, c)| c.is_alphanumeric() || *c == '_') {
                v.push(ch);
            }
            if v.is_empty() {
                return Err(oos(i, "empty variable name"));
            }
            out.push((i, Tok::Var(v)));
        } else {
            let mut w = String::new();
            while let Some((_, ch)) = chars.next_if(|(_, c)| !c.is_whitespace() && !"{}()=!<\"".contains(*c)) {
                w.push(ch);
            }
            if w.is_empty() {
                return Err(oos(i, &format!("unexpected `{c}`")));
            }
            // A statement dot glued to a prefixed name.
            if w.len() > 1 && w.ends_with('.') {
                w.pop();
                out.push((i, Tok::Word(w)));
                out.push((i, Tok::Punct('.')));
            } else {
                out.push((i, Tok::Word(w)));
            }
        }
    }
    Ok(out)
}

struct QueryParser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    prefixes: PrefixMap,
    fallback: &'a PrefixMap,
}

impl QueryParser<'_> {
    fn at(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn err(&self, message: impl Into<String>) -> SparqlError {
        SparqlError::OutOfSubset { position: self.at(), message: message.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(k))
    }

    fn punct(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Punct(c))
    }

    fn expect_punct(&mut self, c: char) -> Result<(), SparqlError> {
        if self.punct(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn query(&mut self) -> Result<SparqlQuery, SparqlError> {
        while self.keyword("PREFIX") {
            self.pos += 1;
            let Some(Tok::Word(name)) = self.peek().cloned() else { return Err(self.err("expected prefix name")) };
            let Some(name) = name.strip_suffix(':') else { return Err(self.err("prefix name must end with `:`")) };
            self.pos += 1;
            let Some(Tok::Iri(ns)) = self.peek().cloned() else { return Err(self.err("expected namespace IRI")) };
            self.pos += 1;
            self.prefixes.insert(name, ns);
        }
        if !self.keyword("SELECT") {
            return Err(self.err("only SELECT queries are supported"));
        }
        self.pos += 1;
        let mut select = Vec::new();
        while let Some(Tok::Var(v)) = self.peek().cloned() {
            select.push(v);
            self.pos += 1;
        }
        if select.is_empty() {
            return Err(self.err("expected projected variables"));
        }
        if self.keyword("WHERE") {
            self.pos += 1;
        }
        let patterns = self.group()?;
        if self.pos < self.toks.len() {
            return Err(self.err("solution modifiers are not supported"));
        }
        Ok(SparqlQuery { select, patterns })
    }

    fn group(&mut self) -> Result<Vec<Pattern>, SparqlError> {
        self.expect_punct('{')?;
        let mut out = Vec::new();
        loop {
            if self.punct('}') {
                self.pos += 1;
                return Ok(out);
            }
            if self.peek().is_none() {
                return Err(self.err("unclosed group"));
            }
            if self.punct('.') {
                self.pos += 1;
            } else if self.keyword("OPTIONAL") {
                self.pos += 1;
                out.push(Pattern::Optional(self.group()?));
            } else if self.keyword("FILTER") {
                self.pos += 1;
                out.push(Pattern::Filter(self.filter()?));
            } else if self.punct('{') {
                let mut branches = vec![self.group()?];
                while self.keyword("UNION") {
                    self.pos += 1;
                    branches.push(self.group()?);
                }
                if branches.len() == 1 {
                    out.extend(branches.pop().unwrap_or_default());
                } else {
                    let mut iter = branches.into_iter().rev();
                    let mut acc = iter.next().unwrap_or_default();
                    for left in iter {
                        acc = vec![Pattern::Union(left, acc)];
                    }
                    out.extend(acc);
                }
            } else {
                let s = self.term(false)?;
                let p = self.term(true)?;
                let o = self.term(false)?;
                out.push(Pattern::Triple(TriplePattern::new(s, p, o)));
                if !self.punct('}') {
                    self.expect_punct('.')?;
                }
            }
        }
    }

    fn filter(&mut self) -> Result<Expression, SparqlError> {
        self.expect_punct('(')?;
        let e = if self.punct('!') {
            self.pos += 1;
            if !self.keyword("bound") {
                return Err(self.err("only !bound(...) negation is supported"));
            }
            self.pos += 1;
            self.expect_punct('(')?;
            let Some(Tok::Var(v)) = self.peek().cloned() else { return Err(self.err("expected variable")) };
            self.pos += 1;
            self.expect_punct(')')?;
            Expression::NotBound(v)
        } else {
            let a = self.term(false)?;
            self.expect_punct('=')?;
            let b = self.term(false)?;
            Expression::Equals(a, b)
        };
        self.expect_punct(')')?;
        Ok(e)
    }

    fn term(&mut self, predicate: bool) -> Result<QueryTerm, SparqlError> {
        let tok = self.peek().cloned().ok_or_else(|| self.err("unexpected end of query"))?;
        let t = match tok {
            Tok::Var(v) => QueryTerm::Var(v),
            Tok::Iri(i) => QueryTerm::Iri(i),
            Tok::Str(s) if !predicate => QueryTerm::Literal(s),
            Tok::Word(w) if predicate && w == "a" => QueryTerm::Iri(RDF_TYPE.into()),
            Tok::Word(w) if w.contains(':') => {
                let iri = self.prefixes.expand(&w).or_else(|| self.fallback.expand(&w)).unwrap_or(w);
                QueryTerm::Iri(iri)
            }
            other => return Err(self.err(format!("unexpected {other:?}"))),
        };
        self.pos += 1;
        Ok(t)
    }
}

/// Parses the emitted subset. Prefixes not declared in the text are
/// resolved through `fallback`; unknown ones stay as written.
pub fn parse_query(text: &str, fallback: &PrefixMap) -> Result<SparqlQuery, SparqlError> {
    let toks = lex(text)?;
    let mut p = QueryParser { toks, pos: 0, end: text.len(), prefixes: PrefixMap::empty(), fallback };
    p.query()
}

/// A comparable normal form of a query.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CanonicalQuery(pub String);

impl fmt::Display for CanonicalQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn canonicalize(text: &str) -> Result<CanonicalQuery, SparqlError> {
    canonicalize_with(text, &PrefixMap::default())
}

pub fn canonicalize_with(text: &str, prefixes: &PrefixMap) -> Result<CanonicalQuery, SparqlError> {
    Ok(canonical_form(&parse_query(text, prefixes)?))
}

/// Search over all orderings of the non-projected variables is used up to
/// this many variables; beyond it a first-occurrence heuristic names them.
const EXHAUSTIVE_VARS: usize = 6;

pub fn canonical_form(q: &SparqlQuery) -> CanonicalQuery {
    let mut others: Vec<String> = Vec::new();
    for name in variables(&q.patterns) {
        if !q.select.contains(&name) && !others.contains(&name) {
            others.push(name);
        }
    }
    let select: BTreeMap<&str, String> =
        q.select.iter().enumerate().map(|(i, v)| (v.as_str(), format!("s{i}"))).collect();
    let render = |order: &[&String]| -> String {
        let mut names = select.clone();
        for (i, v) in order.iter().enumerate() {
            names.insert(v.as_str(), format!("v{i}"));
        }
        let head: Vec<String> = (0..q.select.len()).map(|i| format!("?s{i}")).collect();
        format!(
            "SELECT {} WHERE {}",
            head.join(" "),
            canon_group(&q.patterns, &|v| names.get(v).cloned().unwrap_or_else(|| "_".into()))
        )
    };
    let refs: Vec<&String> = others.iter().collect();
    let text = if others.len() <= EXHAUSTIVE_VARS {
        let mut best: Option<String> = None;
        permutations(&refs, &mut |order| {
            let r = render(order);
            if best.as_ref().is_none_or(|b| r < *b) {
                best = Some(r);
            }
        });
        best.unwrap_or_else(|| render(&[]))
    } else {
        // Name each variable by where it first shows up once the others are masked.
        let mut order: Vec<&String> = refs.clone();
        order.sort_by_key(|v| {
            let single = canon_group(&q.patterns, &|x| {
                if x == v.as_str() {
                    "*".into()
                } else {
                    select.get(x).cloned().unwrap_or_else(|| "_".into())
                }
            });
            (single.find("?*").unwrap_or(usize::MAX), v.to_string())
        });
        render(&order)
    };
    CanonicalQuery(text)
}

fn permutations<'a>(items: &[&'a String], f: &mut dyn FnMut(&[&'a String])) {
    fn go<'a>(items: &mut Vec<&'a String>, k: usize, f: &mut dyn FnMut(&[&'a String])) {
        if k == items.len() {
            f(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            go(items, k + 1, f);
            items.swap(k, i);
        }
    }
    let mut v = items.to_vec();
    go(&mut v, 0, f);
}

fn variables(ps: &[Pattern]) -> Vec<String> {
    let mut out = Vec::new();
    let push = |t: &QueryTerm, out: &mut Vec<String>| {
        if let QueryTerm::Var(v) = t {
            out.push(v.clone());
        }
    };
    for p in ps {
        match p {
            Pattern::Triple(t) => {
                push(&t.subject, &mut out);
                push(&t.predicate, &mut out);
                push(&t.object, &mut out);
            }
            Pattern::Optional(inner) => out.extend(variables(inner)),
            Pattern::Union(l, r) => {
                out.extend(variables(l));
                out.extend(variables(r));
            }
            Pattern::Filter(Expression::Equals(a, b)) => {
                push(a, &mut out);
                push(b, &mut out);
            }
            Pattern::Filter(Expression::NotBound(v)) => out.push(v.clone()),
        }
    }
    out
}

fn canon_term(t: &QueryTerm, names: &dyn Fn(&str) -> String) -> String {
    match t {
        QueryTerm::Var(v) => format!("?{}", names(v)),
        QueryTerm::Iri(i) => format!("<{i}>"),
        QueryTerm::Literal(l) => format!("\"{}\"", escape_literal(l)),
    }
}

fn union_branches(p: &Pattern) -> Vec<&[Pattern]> {
    match p {
        Pattern::Union(l, r) => {
            let mut out = Vec::new();
            for side in [l, r] {
                match side.as_slice() {
                    [u @ Pattern::Union(..)] => out.extend(union_branches(u)),
                    s => out.push(s),
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

fn canon_group(ps: &[Pattern], names: &dyn Fn(&str) -> String) -> String {
    let mut elems: Vec<String> = ps
        .iter()
        .map(|p| match p {
            Pattern::Triple(t) => format!(
                "{} {} {}",
                canon_term(&t.subject, names),
                canon_term(&t.predicate, names),
                canon_term(&t.object, names)
            ),
            Pattern::Optional(inner) => format!("OPTIONAL {}", canon_group(inner, names)),
            Pattern::Union(..) => {
                let mut branches: Vec<String> = union_branches(p).into_iter().map(|b| canon_group(b, names)).collect();
                branches.sort();
                branches.dedup();
                branches.join(" UNION ")
            }
            Pattern::Filter(Expression::Equals(a, b)) => {
                let (mut x, mut y) = (canon_term(a, names), canon_term(b, names));
                if y < x {
                    std::mem::swap(&mut x, &mut y);
                }
                format!("FILTER({x} = {y})")
            }
            Pattern::Filter(Expression::NotBound(v)) => format!("FILTER(!bound(?{}))", names(v)),
        })
        .collect();
    elems.sort();
    elems.dedup();
    format!("{{ {} }}", elems.join(" . "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontostore::Tier;

    const D: &str = "http://example.org/diseases#";

    fn prefixes() -> PrefixMap {
        let mut p = PrefixMap::default();
        p.insert("", D);
        p
    }

    fn iri(local: &str) -> QueryTerm {
        QueryTerm::Iri(format!("{D}{local}"))
    }

    fn triple(s: QueryTerm, p: QueryTerm, o: QueryTerm) -> Pattern {
        Pattern::Triple(TriplePattern::new(s, p, o))
    }

    fn rdf_type() -> QueryTerm {
        QueryTerm::Iri(RDF_TYPE.into())
    }

    fn cure_query() -> SparqlQuery {
        SparqlQuery {
            select: vec!["target".into()],
            patterns: vec![
                triple(QueryTerm::var("target"), rdf_type(), iri("Cure")),
                triple(QueryTerm::var("target"), iri("cures"), QueryTerm::var("var")),
                triple(QueryTerm::var("var"), rdf_type(), iri("Disease")),
                triple(QueryTerm::var("var"), iri("hasName"), QueryTerm::Literal("داء الملوك".into())),
            ],
        }
    }

    #[test]
    fn serializes_cure() {
        let text = serialize(&cure_query(), &prefixes());
        let expected = "PREFIX : <http://example.org/diseases#>\n\
                        PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>\n\
                        SELECT ?target WHERE {\n  \
                        ?target rdf:type :Cure .\n  \
                        ?target :cures ?var .\n  \
                        ?var rdf:type :Disease .\n  \
                        ?var :hasName \"داء الملوك\" .\n}";
        assert_eq!(text, expected);
    }

    #[test]
    fn empty_query() {
        let q = SparqlQuery { select: vec!["target".into()], patterns: vec![] };
        assert_eq!(serialize(&q, &prefixes()), "SELECT ?target WHERE {\n}");
    }

    #[test]
    fn round_trip_is_a_fixpoint() {
        let text = serialize(&cure_query(), &prefixes());
        let again = serialize(&parse_query(&text, &PrefixMap::empty()).unwrap(), &prefixes());
        assert_eq!(text, again);
    }

    #[test]
    fn hand_written_form_matches_generated() {
        let written = "SELECT ?target WHERE {?target rdf:type :Cure . ?target :cures ?var . ?var rdf:type :Disease . \
                     ?var :hasName \"داء الملوك\"}";
        let gold = "SELECT ?x WHERE { ?y :hasName \"داء الملوك\" . ?x a :Cure . ?y a :Disease . ?x :cures ?y . }";
        let generated = serialize(&cure_query(), &prefixes());
        let a = canonicalize_with(written, &prefixes()).unwrap();
        assert_eq!(a, canonicalize_with(gold, &prefixes()).unwrap());
        assert_eq!(a, canonicalize(&generated).unwrap());
    }

    #[test]
    fn one_iri_apart_differs() {
        let a = "SELECT ?x WHERE { ?x a :Cure }";
        let b = "SELECT ?x WHERE { ?x a :Disease }";
        assert_ne!(canonicalize_with(a, &prefixes()).unwrap(), canonicalize_with(b, &prefixes()).unwrap());
    }

    #[test]
    fn union_branches_commute() {
        let a = "SELECT ?d WHERE {{ ?d :infects :Heart} UNION {?d :infects :Lung}}";
        let b = "SELECT ?d WHERE {{ ?d :infects :Lung} UNION {?d :infects :Heart}}";
        let c = "SELECT ?d WHERE {{ ?d :infects :Lung} UNION {?d :infects :Liver}}";
        let p = prefixes();
        assert_eq!(canonicalize_with(a, &p).unwrap(), canonicalize_with(b, &p).unwrap());
        assert_ne!(canonicalize_with(a, &p).unwrap(), canonicalize_with(c, &p).unwrap());
    }

    #[test]
    fn three_way_unions_flatten() {
        let p = prefixes();
        let a = "SELECT ?d WHERE { {?d :infects :Heart} UNION {?d :infects :Lung} UNION {?d :infects :Liver} }";
        let b = "SELECT ?d WHERE { {?d :infects :Liver} UNION { {?d :infects :Lung} UNION {?d :infects :Heart} } }";
        assert_eq!(canonicalize_with(a, &p).unwrap(), canonicalize_with(b, &p).unwrap());
    }

    #[test]
    fn out_of_subset() {
        let p = prefixes();
        for q in [
            "ASK { ?x a :Cure }",
            "SELECT * WHERE { ?x a :Cure }",
            "SELECT ?x WHERE { ?x a :Cure } LIMIT 5",
            "SELECT ?x WHERE { ?x a :Cure . FILTER(?x > 3) }",
            "SELECT ?x WHERE { ?x :hasName \"a\"@ar }",
            "SELECT ?x WHERE { ?x a :Cure ; :cures ?y }",
        ] {
            assert!(matches!(canonicalize_with(q, &p), Err(SparqlError::OutOfSubset { .. })), "{q}");
        }
    }

    #[test]
    fn negation_shapes() {
        let neg = ModifierDescriptor { kind: ModifierKind::Negation, trigger_token: "لا".into(), position: 2 };
        let t = TriplePattern::new(QueryTerm::var("target"), iri("cured_by"), iri("Antibiotics"));
        let (opt, filter) = apply_negation(&t, &[], &neg, "var").unwrap();
        assert_eq!(
            opt,
            Pattern::Optional(vec![
                triple(QueryTerm::var("target"), iri("cured_by"), QueryTerm::var("var")),
                Pattern::Filter(Expression::Equals(QueryTerm::var("var"), iri("Antibiotics"))),
            ])
        );
        assert_eq!(filter, Pattern::Filter(Expression::NotBound("var".into())));
        // غير behaves the same way.
        let ghair = ModifierDescriptor { trigger_token: "غير".into(), ..neg.clone() };
        assert_eq!(apply_negation(&t, &[], &ghair, "var").unwrap(), (opt, filter));
        let conj = ModifierDescriptor { kind: ModifierKind::Conjunction, trigger_token: "و".into(), position: 2 };
        assert_eq!(apply_negation(&t, &[], &conj, "var"), Err(SparqlError::NotNegated { position: 2 }));
    }

    #[test]
    fn disjunction_needs_two_sides() {
        let t = triple(QueryTerm::var("d"), iri("infects"), iri("Heart"));
        assert_eq!(apply_disjunction(vec![t.clone()], vec![]), Err(SparqlError::EmptyBranch));
        assert!(apply_disjunction(vec![t.clone()], vec![t]).is_ok());
    }

    #[test]
    fn list_all_query() {
        let np = NounPhrase::from_tagged(&[("الأمراض", "DTNN")]);
        let target = QueryTarget {
            np,
            trigger: 0,
            term: Some(MatchedTerm {
                iri: format!("{D}Disease"),
                kind: TermKind::Class,
                tier: Some(Tier::Stem),
                label: "مرض".into(),
            }),
            variable_name: "?target".into(),
        };
        let q = build_query(&[], &target, &[]).unwrap();
        assert_eq!(q.patterns, vec![triple(QueryTerm::var("target"), rdf_type(), iri("Disease"))]);
        let no_term = QueryTarget { term: None, ..target };
        assert!(matches!(build_query(&[], &no_term, &[]), Err(SparqlError::TargetUnmatched { .. })));
    }

    #[test]
    fn modifiers_in_surface_order() {
        let t = crate::ptree::parse_bracketed(
            "(S (WP ما) (NP (DTNN الأمراض)) (WP التي) (RP لا) (VBP تعالج) (NP (NP (NN ا)) (CC أو) (NP (NN ب))) (JJS أخطر))",
        )
        .unwrap();
        let (mods, unsupported) = extract_modifiers(&t);
        let kinds: Vec<_> = mods.iter().map(|m| (m.kind, m.position)).collect();
        assert_eq!(kinds, vec![(ModifierKind::Negation, 3), (ModifierKind::Disjunction, 6)]);
        assert_eq!(unsupported.len(), 1);
        let plain = crate::ptree::parse_bracketed("(NP (NN علاج))").unwrap();
        assert_eq!(extract_modifiers(&plain), (vec![], vec![]));
    }
}
