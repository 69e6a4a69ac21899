//! From Intermediate Triples to ontology triples.
//!
//! Each triple part is looked up in the dictionary, a single missing part is
//! filled from the schema, candidates that break a property's domain or
//! range are dropped, and any remaining ambiguity goes to a [`Chooser`].

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::npx::{Conjunction, IntermediateTriple, NounPhrase};
use crate::ontostore::{
    schema_statements, DictMatch, OntologicalDictionary, OntologyStore, SchemaNode, SchemaStatement, TermKind, Tier,
};
use crate::ptree::NodeId;

/// Negation particles, normalized. They never take part in matching.
pub const NEGATION_WORDS: [&str; 2] = ["لا", "غير"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("{missing} of the three triple parts could not be matched")]
    TooManyMissing { missing: usize },
    #[error("no valid ontology triple for `{phrase}`")]
    NoValidTriple { phrase: String },
    #[error("selection abandoned for `{phrase}`")]
    ChoiceAborted { phrase: String },
    #[error("chooser returned index {index} for {count} candidates")]
    ChoiceOutOfRange { index: usize, count: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MatchedTerm {
    pub iri: String,
    pub kind: TermKind,
    /// `None` when the term was supplied by completion rather than matched.
    pub tier: Option<Tier>,
    pub label: String,
}

impl From<DictMatch> for MatchedTerm {
    fn from(m: DictMatch) -> Self {
        MatchedTerm { iri: m.iri, kind: m.kind, tier: Some(m.tier), label: m.label }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "part", content = "value", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TriplePart {
    Matched(MatchedTerm),
    Literal(String),
    Missing,
}

impl TriplePart {
    pub fn is_missing(&self) -> bool {
        matches!(self, TriplePart::Missing)
    }

    pub fn term(&self) -> Option<&MatchedTerm> {
        match self {
            TriplePart::Matched(t) => Some(t),
            _ => None,
        }
    }

    pub fn iri(&self) -> Option<&str> {
        self.term().map(|t| t.iri.as_str())
    }
}

impl fmt::Display for TriplePart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TriplePart::Matched(t) => write!(f, "<{}>", t.iri),
            TriplePart::Literal(l) => write!(f, "\"{l}\""),
            TriplePart::Missing => f.write_str("MISSING"),
        }
    }
}

/// Lower is better. Compared field by field.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Score {
    /// Weakest match tier among the dictionary-matched parts.
    pub worst_tier: Tier,
    /// 1 when a part was filled in by completion.
    pub completion_penalty: u8,
    /// Subclass steps between the parts and the property's domain and range.
    pub distance: u32,
    /// Final tie-break so that the order is total.
    pub key: String,
}

impl Score {
    /// The part of the score that expresses preference; the key only breaks
    /// ties for display order.
    pub fn rank(&self) -> (Tier, u8, u32) {
        (self.worst_tier, self.completion_penalty, self.distance)
    }
}

/// Where a candidate came from, kept for query assembly and traces.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub subject_np: String,
    pub predicate_words: Vec<String>,
    pub object_np: String,
    pub predicate_leaves: Vec<usize>,
    pub conjunction: Option<Conjunction>,
    pub conjunctive_head: Option<NodeId>,
}

impl Provenance {
    pub fn phrase(&self) -> String {
        let mut words = vec![self.subject_np.clone()];
        words.extend(self.predicate_words.iter().cloned());
        words.push(self.object_np.clone());
        words.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateRdfTriple {
    pub subject: TriplePart,
    pub predicate: TriplePart,
    pub object: TriplePart,
    pub score: Score,
    pub valid: bool,
    pub provenance: Provenance,
}

impl CandidateRdfTriple {
    pub fn new(subject: TriplePart, predicate: TriplePart, object: TriplePart, provenance: Provenance) -> Self {
        let mut c = CandidateRdfTriple {
            subject,
            predicate,
            object,
            score: Score { worst_tier: Tier::Exact, completion_penalty: 0, distance: 0, key: String::new() },
            valid: false,
            provenance,
        };
        c.rescore();
        c
    }

    fn rescore(&mut self) {
        let parts = [&self.subject, &self.predicate, &self.object];
        self.score.worst_tier = parts.iter().filter_map(|p| p.term().and_then(|t| t.tier)).max().unwrap_or(Tier::Exact);
        self.score.key = parts.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ");
    }

    pub fn missing_count(&self) -> usize {
        [&self.subject, &self.predicate, &self.object].iter().filter(|p| p.is_missing()).count()
    }

    /// `label (prefixed iri)` for each part, for prompts and traces.
    pub fn describe(&self, store: &OntologyStore) -> String {
        let part = |p: &TriplePart| match p {
            TriplePart::Matched(t) => {
                format!("{} ({})", store.display_label(&t.iri), store.prefixes().render(&t.iri))
            }
            other => other.to_string(),
        };
        format!("{} | {} | {}", part(&self.subject), part(&self.predicate), part(&self.object))
    }
}

impl fmt::Display for CandidateRdfTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}, {}>", self.subject, self.predicate, self.object)
    }
}

/// Entity terms for a noun phrase: the whole phrase when it matches closely,
/// otherwise its head.
pub fn entity_matches(np: &NounPhrase, dict: &OntologicalDictionary) -> Vec<MatchedTerm> {
    let entities = |words: &[String]| -> Vec<DictMatch> {
        dict.lookup(words).into_iter().filter(|m| m.kind.is_entity()).collect()
    };
    let full = entities(&np.tokens);
    // A close match on the whole phrase beats its head alone.
    if full.first().is_some_and(|m| m.tier <= Tier::Synonym) {
        return full.into_iter().map(Into::into).collect();
    }
    let head = if np.head.is_empty() || np.head == np.tokens { Vec::new() } else { entities(&np.head) };
    let chosen = if head.is_empty() { full } else { head };
    chosen.into_iter().map(Into::into).collect()
}

/// Normalized predicate words with negation particles and stop-words removed.
pub fn predicate_content(words: &[String], dict: &OntologicalDictionary) -> Vec<String> {
    let text = dict.text();
    words
        .iter()
        .flat_map(|w| w.split(|c: char| c.is_whitespace() || c == '_'))
        .map(|w| text.normalize(w))
        .filter(|w| !w.is_empty() && !NEGATION_WORDS.contains(&w.as_str()) && !text.stopwords.contains(w))
        .collect()
}

fn predicate_matches(words: &[String], dict: &OntologicalDictionary) -> Vec<MatchedTerm> {
    let content = predicate_content(words, dict);
    if content.is_empty() {
        return Vec::new();
    }
    dict.lookup(&content).into_iter().filter(|m| m.kind.is_property()).map(Into::into).collect()
}

/// Every reading of the triple: the product of the matches for its three
/// parts, with unmatched parts left `Missing`. An unmatched object under a
/// datatype property is taken as a literal.
pub fn match_intermediate(it: &IntermediateTriple, dict: &OntologicalDictionary) -> Vec<CandidateRdfTriple> {
    let provenance = Provenance {
        subject_np: it.subject.text(),
        predicate_words: it.predicate_tokens.clone(),
        object_np: it.object.text(),
        predicate_leaves: it.predicate_leaves.clone(),
        conjunction: it.conjunction_origin,
        conjunctive_head: it.conjunctive_head,
    };
    let or_missing = |v: Vec<MatchedTerm>| -> Vec<TriplePart> {
        if v.is_empty() {
            vec![TriplePart::Missing]
        } else {
            v.into_iter().map(TriplePart::Matched).collect()
        }
    };
    let subjects = or_missing(entity_matches(&it.subject, dict));
    let predicates = or_missing(predicate_matches(&it.predicate_tokens, dict));
    let objects = entity_matches(&it.object, dict);

    let mut out = Vec::new();
    for s in &subjects {
        for p in &predicates {
            let datatype = p.term().is_some_and(|t| t.kind == TermKind::DatatypeProperty);
            let object_parts = match (objects.is_empty(), datatype) {
                (true, true) => vec![TriplePart::Literal(it.object.text())],
                (true, false) => vec![TriplePart::Missing],
                (false, _) => objects.iter().cloned().map(TriplePart::Matched).collect(),
            };
            for o in object_parts {
                out.push(CandidateRdfTriple::new(s.clone(), p.clone(), o, provenance.clone()));
            }
        }
    }
    out
}

/// Classes a part stands for: itself for a class, its types for an instance.
fn classes_of<'a>(part: &'a TriplePart, store: &'a OntologyStore) -> BTreeSet<&'a str> {
    match part.term() {
        Some(t) if t.kind == TermKind::Class => BTreeSet::from([t.iri.as_str()]),
        Some(t) if t.kind == TermKind::Instance => store.types_of(&t.iri),
        _ => BTreeSet::new(),
    }
}

/// Distance from a part to a schema slot, or `None` when it does not fit.
fn fit(part: &TriplePart, node: &SchemaNode, store: &OntologyStore) -> Option<u32> {
    match (part, node) {
        (TriplePart::Literal(_), SchemaNode::Literal) => Some(0),
        (TriplePart::Literal(_), _) | (_, SchemaNode::Literal) | (TriplePart::Missing, _) => None,
        (TriplePart::Matched(t), _) if !t.kind.is_entity() => None,
        (TriplePart::Matched(t), SchemaNode::Top) => {
            let classes = classes_of(part, store);
            if t.kind == TermKind::Instance && classes.is_empty() {
                return Some(1);
            }
            classes.iter().map(|c| store.class_height(c) + 1).min()
        }
        (TriplePart::Matched(_), SchemaNode::Class(d)) => {
            classes_of(part, store).iter().filter_map(|c| store.class_distance(c, d)).min()
        }
    }
}

fn schema_part(node: &SchemaNode, store: &OntologyStore) -> Option<TriplePart> {
    match node {
        SchemaNode::Class(c) => Some(TriplePart::Matched(MatchedTerm {
            iri: c.clone(),
            kind: TermKind::Class,
            tier: None,
            label: store.display_label(c),
        })),
        SchemaNode::Top | SchemaNode::Literal => None,
    }
}

fn property_part(iri: &str, store: &OntologyStore) -> TriplePart {
    TriplePart::Matched(MatchedTerm {
        iri: iri.to_string(),
        kind: store.kind(iri).unwrap_or(TermKind::ObjectProperty),
        tier: None,
        label: store.display_label(iri),
    })
}

/// Completions of a candidate with one missing part, one per agreeing schema
/// statement. A candidate with nothing missing is returned unchanged.
pub fn complete_triple(c: &CandidateRdfTriple, store: &OntologyStore) -> Result<Vec<CandidateRdfTriple>, MapError> {
    complete_with_schema(c, store, &schema_statements(store))
}

pub fn complete_with_schema(
    c: &CandidateRdfTriple,
    store: &OntologyStore,
    schema: &[SchemaStatement],
) -> Result<Vec<CandidateRdfTriple>, MapError> {
    match c.missing_count() {
        0 => return Ok(vec![c.clone()]),
        1 => {}
        missing => return Err(MapError::TooManyMissing { missing }),
    }
    let mut out: Vec<CandidateRdfTriple> = Vec::new();
    for st in schema {
        let same_property = c.predicate.iri() == Some(st.property.as_str());
        let filled = if c.predicate.is_missing() {
            (fit(&c.subject, &st.domain, store).is_some() && fit(&c.object, &st.range, store).is_some())
                .then(|| (c.subject.clone(), property_part(&st.property, store), c.object.clone()))
        } else if c.subject.is_missing() {
            (same_property && fit(&c.object, &st.range, store).is_some())
                .then(|| schema_part(&st.domain, store))
                .flatten()
                .map(|s| (s, c.predicate.clone(), c.object.clone()))
        } else {
            (same_property && fit(&c.subject, &st.domain, store).is_some())
                .then(|| schema_part(&st.range, store))
                .flatten()
                .map(|o| (c.subject.clone(), c.predicate.clone(), o))
        };
        if let Some((s, p, o)) = filled {
            let mut done = CandidateRdfTriple::new(s, p, o, c.provenance.clone());
            done.score.completion_penalty = 1;
            if !out
                .iter()
                .any(|x| (&x.subject, &x.predicate, &x.object) == (&done.subject, &done.predicate, &done.object))
            {
                out.push(done);
            }
        }
    }
    out.sort_by(|a, b| a.score.cmp(&b.score));
    Ok(out)
}

/// Smallest distance over the property's schema statements the candidate
/// fits, or `None` when it fits none.
fn schema_distance(c: &CandidateRdfTriple, store: &OntologyStore, schema: &[SchemaStatement]) -> Option<u32> {
    let p = c.predicate.term().filter(|t| t.kind.is_property())?;
    schema
        .iter()
        .filter(|st| st.property == p.iri)
        .filter_map(|st| Some(fit(&c.subject, &st.domain, store)? + fit(&c.object, &st.range, store)?))
        .min()
}

/// True when the subject fits the property's domain and the object its
/// range, up to subclassing. Literal objects need a datatype property.
pub fn validate_triple(c: &CandidateRdfTriple, store: &OntologyStore) -> bool {
    schema_distance(c, store, &schema_statements(store)).is_some()
}

/// Marks each candidate valid or not and records its schema distance.
pub fn validate_all(candidates: &mut [CandidateRdfTriple], store: &OntologyStore, schema: &[SchemaStatement]) {
    for c in candidates {
        match schema_distance(c, store, schema) {
            Some(d) => {
                c.valid = true;
                c.score.distance = d;
            }
            None => c.valid = false,
        }
    }
}

/// What a chooser is told about the decision it is asked to make.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChoiceContext {
    pub question: String,
    /// The words the candidates were built from.
    pub phrase: String,
    /// One human-readable line per candidate, in candidate order.
    pub options: Vec<String>,
}

pub trait Chooser {
    /// Picks one of at least two valid candidates, which arrive sorted by
    /// score.
    fn choose(&mut self, ctx: &ChoiceContext, candidates: &[CandidateRdfTriple]) -> Result<usize, MapError>;
}

/// Non-interactive policy: the strictly best-ranked candidate wins; a tie at
/// the top is reported as no valid triple.
#[derive(Debug, Clone, Copy, Default)]
pub struct BatchChooser;

impl Chooser for BatchChooser {
    fn choose(&mut self, ctx: &ChoiceContext, candidates: &[CandidateRdfTriple]) -> Result<usize, MapError> {
        let best = candidates.iter().map(|c| c.score.rank()).min();
        let winners: Vec<usize> = (0..candidates.len()).filter(|&i| Some(candidates[i].score.rank()) == best).collect();
        match winners.as_slice() {
            [only] => Ok(*only),
            _ => Err(MapError::NoValidTriple { phrase: ctx.phrase.clone() }),
        }
    }
}

/// Keeps the valid candidates and settles on one, asking the chooser only
/// when more than one remains.
pub fn resolve(
    candidates: &[CandidateRdfTriple],
    chooser: &mut dyn Chooser,
    question: &str,
    store: &OntologyStore,
) -> Result<CandidateRdfTriple, MapError> {
    let mut valid: Vec<CandidateRdfTriple> = candidates.iter().filter(|c| c.valid).cloned().collect();
    valid.sort_by(|a, b| a.score.cmp(&b.score));
    let phrase = candidates.first().map(|c| c.provenance.phrase()).unwrap_or_default();
    match valid.len() {
        0 => Err(MapError::NoValidTriple { phrase }),
        1 => Ok(valid.remove(0)),
        count => {
            let ctx = ChoiceContext {
                question: question.to_string(),
                phrase,
                options: valid.iter().map(|c| c.describe(store)).collect(),
            };
            let index = chooser.choose(&ctx, &valid)?;
            if index >= count {
                return Err(MapError::ChoiceOutOfRange { index, count });
            }
            Ok(valid.swap_remove(index))
        }
    }
}
