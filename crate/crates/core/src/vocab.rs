//! RDF vocabulary IRIs and prefix handling shared by the store and the
//! SPARQL emitter.

use std::collections::BTreeMap;

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const RDFS_CLASS: &str = "http://www.w3.org/2000/01/rdf-schema#Class";
pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
pub const RDFS_SUBPROPERTY_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subPropertyOf";
pub const RDFS_DOMAIN: &str = "http://www.w3.org/2000/01/rdf-schema#domain";
pub const RDFS_RANGE: &str = "http://www.w3.org/2000/01/rdf-schema#range";
pub const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
pub const OWL_OBJECT_PROPERTY: &str = "http://www.w3.org/2002/07/owl#ObjectProperty";
pub const OWL_DATATYPE_PROPERTY: &str = "http://www.w3.org/2002/07/owl#DatatypeProperty";
pub const OWL_SYMMETRIC_PROPERTY: &str = "http://www.w3.org/2002/07/owl#SymmetricProperty";
pub const OWL_TRANSITIVE_PROPERTY: &str = "http://www.w3.org/2002/07/owl#TransitiveProperty";
pub const OWL_NAMED_INDIVIDUAL: &str = "http://www.w3.org/2002/07/owl#NamedIndividual";

/// True for IRIs in the rdf, rdfs, owl or xsd namespaces.
pub fn is_builtin(iri: &str) -> bool {
    [RDF, RDFS, OWL, XSD].iter().any(|ns| iri.starts_with(ns))
}

/// Prefix name to namespace IRI. The empty prefix is the `:` default.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixMap {
    map: BTreeMap<String, String>,
}

impl Default for PrefixMap {
    fn default() -> Self {
        let map = [("rdf", RDF), ("rdfs", RDFS), ("owl", OWL), ("xsd", XSD)]
            .into_iter()
            .map(|(p, n)| (p.to_string(), n.to_string()))
            .collect();
        PrefixMap { map }
    }
}

impl PrefixMap {
    pub fn empty() -> Self {
        PrefixMap { map: BTreeMap::new() }
    }

    pub fn insert(&mut self, prefix: impl Into<String>, namespace: impl Into<String>) {
        self.map.insert(prefix.into(), namespace.into());
    }

    pub fn get(&self, prefix: &str) -> Option<&str> {
        self.map.get(prefix).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(p, n)| (p.as_str(), n.as_str()))
    }

    /// Adds every entry of `other`. Entries of `self` with the same prefix
    /// or the same namespace are replaced.
    pub fn extend(&mut self, other: &PrefixMap) {
        for (p, n) in other.iter() {
            self.map.retain(|_, ns| ns != n);
            self.insert(p, n);
        }
    }

    /// Expands `prefix:local`. `None` when the prefix is unknown or the
    /// input has no colon.
    pub fn expand(&self, curie: &str) -> Option<String> {
        let (prefix, local) = curie.split_once(':')?;
        self.get(prefix).map(|ns| format!("{ns}{local}"))
    }

    /// Compacts with the longest matching namespace whose remainder is a
    /// plain local name.
    pub fn compact(&self, iri: &str) -> Option<(String, String)> {
        self.map
            .iter()
            .filter(|(_, ns)| iri.starts_with(ns.as_str()))
            .map(|(p, ns)| (p, &iri[ns.len()..]))
            .filter(|(_, local)| is_local_name(local))
            .max_by_key(|(p, local)| (std::cmp::Reverse(local.len()), std::cmp::Reverse(p.len())))
            .map(|(p, local)| (p.clone(), local.to_string()))
    }

    /// `prefix:local` when compactable, `<iri>` otherwise.
    pub fn render(&self, iri: &str) -> String {
        match self.compact(iri) {
            Some((p, local)) => format!("{p}:{local}"),
            None => format!("<{iri}>"),
        }
    }
}

fn is_local_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-') && !s.starts_with('-')
}
