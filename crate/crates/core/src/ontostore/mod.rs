//! Ontology loading, RDFS-level closure and the schema view used for triple
//! completion and validation.

mod dictionary;
mod ntriples;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use dictionary::{build_dictionary, lookup, DictMatch, LangFilter, OntologicalDictionary, SynonymLexicon, Tier};
pub use ntriples::{Literal, Object, Statement};

use crate::vocab::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum LoadWarning {
    /// A labelled term without any type; it is treated as an instance.
    UnknownKind { iri: String },
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadWarning::UnknownKind { iri } => write!(f, "<{iri}> has labels but no type; assuming an instance"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TermKind {
    Class,
    ObjectProperty,
    DatatypeProperty,
    Instance,
}

impl TermKind {
    pub fn is_property(self) -> bool {
        matches!(self, TermKind::ObjectProperty | TermKind::DatatypeProperty)
    }

    pub fn is_entity(self) -> bool {
        matches!(self, TermKind::Class | TermKind::Instance)
    }
}

impl fmt::Display for TermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TermKind::Class => "CLASS",
            TermKind::ObjectProperty => "OBJECT_PROPERTY",
            TermKind::DatatypeProperty => "DATATYPE_PROPERTY",
            TermKind::Instance => "INSTANCE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Term {
    pub iri: String,
    pub kind: TermKind,
    /// `(text, language tag)`.
    pub labels: Vec<(String, Option<String>)>,
}

/// A class slot in a schema statement: a named class, the universal marker
/// used when a property declares no domain or range, or a literal range.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SchemaNode {
    Top,
    Class(String),
    Literal,
}

impl fmt::Display for SchemaNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemaNode::Top => f.write_str("⊤"),
            SchemaNode::Class(c) => write!(f, "<{c}>"),
            SchemaNode::Literal => f.write_str("LITERAL"),
        }
    }
}

/// `(domain, property, range)` for one property.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SchemaStatement {
    pub domain: SchemaNode,
    pub property: String,
    pub range: SchemaNode,
}

#[derive(Debug, Clone, Default)]
pub struct OntologyStore {
    asserted: BTreeSet<Statement>,
    statements: BTreeSet<Statement>,
    terms: BTreeMap<String, Term>,
    prefixes: PrefixMap,
    warnings: Vec<LoadWarning>,
}

impl PartialEq for OntologyStore {
    fn eq(&self, other: &Self) -> bool {
        self.statements == other.statements && self.terms == other.terms
    }
}

/// Parses N-Triples (with CURIEs and `@prefix` lines) into a store.
pub fn load_ntriples(text: &str) -> Result<OntologyStore, OntologyError> {
    let mut prefixes = PrefixMap::default();
    let mut statements = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        match ntriples::parse_line(line, i + 1, &prefixes)? {
            Some(ntriples::Line::Statement(s)) => {
                statements.insert(s);
            }
            Some(ntriples::Line::Prefix(p, ns)) => prefixes.insert(p, ns),
            None => {}
        }
    }
    Ok(OntologyStore::from_statements(statements, prefixes))
}

/// Saturates the store under subclass transitivity, type propagation,
/// symmetric and transitive properties, and sub-property inheritance of
/// statements, domains and ranges.
pub fn infer_closure(store: &OntologyStore) -> OntologyStore {
    let mut closed = store.statements.clone();
    loop {
        let derived = derive_once(&closed);
        let before = closed.len();
        closed.extend(derived);
        if closed.len() == before {
            break;
        }
    }
    let mut out = OntologyStore::from_statements(closed, store.prefixes.clone());
    out.asserted = store.asserted.clone();
    out
}

fn with_predicate<'a>(s: &'a BTreeSet<Statement>, p: &'a str) -> impl Iterator<Item = &'a Statement> + 'a {
    s.iter().filter(move |st| st.predicate == p)
}

fn iri_pairs(s: &BTreeSet<Statement>, p: &str) -> Vec<(String, String)> {
    with_predicate(s, p).filter_map(|st| Some((st.subject.clone(), st.object.as_iri()?.to_string()))).collect()
}

fn typed_as(s: &BTreeSet<Statement>, class: &str) -> Vec<String> {
    with_predicate(s, RDF_TYPE).filter(|st| st.object.as_iri() == Some(class)).map(|st| st.subject.clone()).collect()
}

/// `(a r b), (b r c)` for every matching pair of edges.
fn compose(edges: &[(String, String)]) -> impl Iterator<Item = (&String, &String)> {
    edges.iter().flat_map(move |(a, b)| edges.iter().filter(move |(b2, _)| b == b2).map(move |(_, c)| (a, c)))
}

fn derive_once(s: &BTreeSet<Statement>) -> Vec<Statement> {
    let sub_class = iri_pairs(s, RDFS_SUBCLASS_OF);
    let sub_prop = iri_pairs(s, RDFS_SUBPROPERTY_OF);
    let mut out = Vec::new();

    out.extend(compose(&sub_class).map(|(a, c)| Statement::iri(a, RDFS_SUBCLASS_OF, c)));
    for (x, c) in iri_pairs(s, RDF_TYPE) {
        for (_, d) in sub_class.iter().filter(|(c2, _)| *c2 == c) {
            out.push(Statement::iri(&x, RDF_TYPE, d));
        }
    }
    for p in typed_as(s, OWL_SYMMETRIC_PROPERTY) {
        for (x, y) in iri_pairs(s, &p) {
            out.push(Statement::iri(&y, &p, &x));
        }
    }
    for p in typed_as(s, OWL_TRANSITIVE_PROPERTY) {
        let edges = iri_pairs(s, &p);
        out.extend(compose(&edges).map(|(x, z)| Statement::iri(x, &p, z)));
    }
    out.extend(compose(&sub_prop).map(|(p, r)| Statement::iri(p, RDFS_SUBPROPERTY_OF, r)));
    for (p, q) in &sub_prop {
        // (x p y) with p below q entails (x q y).
        for st in with_predicate(s, p) {
            out.push(Statement::new(st.subject.clone(), q.clone(), st.object.clone()));
        }
        for st in with_predicate(s, RDFS_DOMAIN).chain(with_predicate(s, RDFS_RANGE)) {
            if &st.subject == q {
                out.push(Statement::new(p.clone(), st.predicate.clone(), st.object.clone()));
            }
        }
    }
    out.retain(|st| !s.contains(st));
    out
}

impl OntologyStore {
    fn from_statements(statements: BTreeSet<Statement>, prefixes: PrefixMap) -> Self {
        let mut store = OntologyStore {
            asserted: statements.clone(),
            statements,
            terms: BTreeMap::new(),
            prefixes,
            warnings: Vec::new(),
        };
        store.classify();
        store
    }

    fn classify(&mut self) {
        let mut classes = BTreeSet::new();
        let mut object_props = BTreeSet::new();
        let mut datatype_props = BTreeSet::new();
        for st in &self.statements {
            let o = st.object.as_iri();
            match (st.predicate.as_str(), o) {
                (RDF_TYPE, Some(OWL_CLASS | RDFS_CLASS)) => {
                    classes.insert(st.subject.clone());
                }
                (RDF_TYPE, Some(OWL_OBJECT_PROPERTY | OWL_SYMMETRIC_PROPERTY | OWL_TRANSITIVE_PROPERTY)) => {
                    object_props.insert(st.subject.clone());
                }
                (RDF_TYPE, Some(OWL_DATATYPE_PROPERTY)) => {
                    datatype_props.insert(st.subject.clone());
                }
                (RDFS_SUBCLASS_OF, Some(o)) => {
                    classes.insert(st.subject.clone());
                    classes.insert(o.to_string());
                }
                _ => {}
            }
        }
        let instances: BTreeSet<String> = self
            .statements
            .iter()
            .filter(|st| st.predicate == RDF_TYPE)
            .filter(|st| st.object.as_iri().is_some_and(|o| classes.contains(o) || o == OWL_NAMED_INDIVIDUAL))
            .map(|st| st.subject.clone())
            .collect();
        let labelled: BTreeSet<String> =
            self.statements.iter().filter(|st| st.predicate == RDFS_LABEL).map(|st| st.subject.clone()).collect();

        self.terms.clear();
        self.warnings.clear();
        let all: BTreeSet<&String> =
            classes.iter().chain(&object_props).chain(&datatype_props).chain(&instances).chain(&labelled).collect();
        for iri in all {
            if is_builtin(iri) {
                continue;
            }
            let kind = if classes.contains(iri) {
                TermKind::Class
            } else if datatype_props.contains(iri) {
                TermKind::DatatypeProperty
            } else if object_props.contains(iri) {
                TermKind::ObjectProperty
            } else {
                if !instances.contains(iri) {
                    self.warnings.push(LoadWarning::UnknownKind { iri: iri.clone() });
                }
                TermKind::Instance
            };
            let labels = self
                .statements
                .iter()
                .filter(|st| &st.subject == iri && st.predicate == RDFS_LABEL)
                .filter_map(|st| match &st.object {
                    Object::Literal(l) => Some((l.lexical.clone(), l.lang.clone())),
                    Object::Iri(_) => None,
                })
                .collect();
            self.terms.insert(iri.clone(), Term { iri: iri.clone(), kind, labels });
        }
    }

    pub fn statements(&self) -> impl Iterator<Item = &Statement> {
        self.statements.iter()
    }

    pub fn contains(&self, st: &Statement) -> bool {
        self.statements.contains(st)
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.terms.values()
    }

    pub fn term(&self, iri: &str) -> Option<&Term> {
        self.terms.get(iri)
    }

    pub fn kind(&self, iri: &str) -> Option<TermKind> {
        self.terms.get(iri).map(|t| t.kind)
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn warnings(&self) -> &[LoadWarning] {
        &self.warnings
    }

    fn objects<'a>(&'a self, subject: &'a str, predicate: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.statements
            .iter()
            .filter(move |st| st.subject == subject && st.predicate == predicate)
            .filter_map(|st| st.object.as_iri())
    }

    pub fn is_subclass_of(&self, sub: &str, sup: &str) -> bool {
        sub == sup || self.contains(&Statement::iri(sub, RDFS_SUBCLASS_OF, sup))
    }

    /// Classes an instance belongs to, inferred ones included.
    pub fn types_of<'a>(&'a self, instance: &'a str) -> BTreeSet<&'a str> {
        self.objects(instance, RDF_TYPE).filter(|c| self.kind(c) == Some(TermKind::Class)).collect()
    }

    pub fn domains<'a>(&'a self, property: &'a str) -> BTreeSet<&'a str> {
        self.objects(property, RDFS_DOMAIN).collect()
    }

    pub fn ranges<'a>(&'a self, property: &'a str) -> BTreeSet<&'a str> {
        self.objects(property, RDFS_RANGE).collect()
    }

    /// Preferred display label: first Arabic label, else any label, else the
    /// compacted IRI.
    pub fn display_label(&self, iri: &str) -> String {
        let labels = self.terms.get(iri).map(|t| t.labels.as_slice()).unwrap_or(&[]);
        labels
            .iter()
            .find(|(_, lang)| lang.as_deref() == Some("ar"))
            .or_else(|| labels.first())
            .map(|(l, _)| l.clone())
            .unwrap_or_else(|| self.prefixes.render(iri))
    }

    /// Subclass steps from `class` up to `ancestor` over asserted edges;
    /// inferred edges count when no asserted chain exists.
    pub fn class_distance(&self, class: &str, ancestor: &str) -> Option<u32> {
        if class == ancestor {
            return Some(0);
        }
        let mut seen = BTreeSet::from([class]);
        let mut queue = VecDeque::from([(class, 0u32)]);
        while let Some((c, d)) = queue.pop_front() {
            for st in self.asserted.iter().filter(|st| st.subject == c && st.predicate == RDFS_SUBCLASS_OF) {
                let Some(up) = st.object.as_iri() else { continue };
                if up == ancestor {
                    return Some(d + 1);
                }
                if seen.insert(up) {
                    queue.push_back((up, d + 1));
                }
            }
        }
        self.is_subclass_of(class, ancestor).then_some(1)
    }

    /// Number of classes above `class`, used to rank the universal marker
    /// below any named ancestor.
    pub fn class_height(&self, class: &str) -> u32 {
        self.objects(class, RDFS_SUBCLASS_OF).filter(|c| *c != class).count() as u32
    }
}

/// One abstract statement per (domain, property, range) combination.
/// Datatype properties always range over literals.
pub fn schema_statements(store: &OntologyStore) -> Vec<SchemaStatement> {
    let mut out = Vec::new();
    for term in store.terms().filter(|t| t.kind.is_property()) {
        let domains: Vec<SchemaNode> = match store.domains(&term.iri) {
            d if d.is_empty() => vec![SchemaNode::Top],
            d => d.into_iter().map(|c| SchemaNode::Class(c.to_string())).collect(),
        };
        let ranges: Vec<SchemaNode> = if term.kind == TermKind::DatatypeProperty {
            vec![SchemaNode::Literal]
        } else {
            match store.ranges(&term.iri) {
                r if r.is_empty() => vec![SchemaNode::Top],
                r => r.into_iter().map(|c| SchemaNode::Class(c.to_string())).collect(),
            }
        };
        for d in &domains {
            for r in &ranges {
                out.push(SchemaStatement { domain: d.clone(), property: term.iri.clone(), range: r.clone() });
            }
        }
    }
    out.sort();
    out
}
