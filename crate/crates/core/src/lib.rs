//! Translation of Arabic questions into SPARQL over an RDF ontology.
//!
//! The input is a question together with its constituency parse. Noun
//! phrases are extracted from the tree and linked into intermediate triples,
//! matched against an index of the ontology's Arabic labels, completed and
//! validated against the schema, and finally assembled into a query.

pub mod artext;
pub mod eval;
pub mod mapper;
pub mod npx;
pub mod ontostore;
pub mod pipeline;
pub mod ptree;
pub mod sparqlgen;
pub mod vocab;
