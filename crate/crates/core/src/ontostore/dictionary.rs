//! The Ontological Dictionary: an index from processed Arabic label forms
//! (and their synonym variants) to ontology terms.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use super::{OntologyStore, TermKind};
use crate::artext::{config_lines, ConfigError, TextProcessor};

/// Match confidence, best first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tier {
    Exact,
    Synonym,
    Stem,
    Skeleton,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Exact => "EXACT",
            Tier::Synonym => "SYNONYM",
            Tier::Stem => "STEM",
            Tier::Skeleton => "SKELETON",
        })
    }
}

/// Symmetric word-to-synonyms map. Each TSV line `word<TAB>syn1,syn2` makes
/// every word on it a synonym of every other.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    map: BTreeMap<String, BTreeSet<String>>,
}

impl SynonymLexicon {
    pub fn parse(text: &str, tp: &TextProcessor) -> Result<Self, ConfigError> {
        let mut lex = SynonymLexicon::default();
        for (line, l) in config_lines(text) {
            let Some((word, syns)) = l.split_once('\t') else {
                return Err(ConfigError::Line { line, message: "expected `word<TAB>syn1,syn2`".into() });
            };
            let group: Vec<String> = std::iter::once(word)
                .chain(syns.split(','))
                .map(|w| tp.normalize(w.trim()))
                .filter(|w| !w.is_empty())
                .collect();
            lex.add_group(&group);
        }
        Ok(lex)
    }

    pub fn add_group(&mut self, words: &[String]) {
        for a in words {
            for b in words.iter().filter(|b| *b != a) {
                self.map.entry(a.clone()).or_default().insert(b.clone());
            }
        }
    }

    pub fn synonyms(&self, word: &str) -> impl Iterator<Item = &str> {
        self.map.get(word).into_iter().flatten().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Which `rdfs:label` language tags are indexed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LangFilter {
    pub tags: BTreeSet<String>,
    pub untagged: bool,
}

impl Default for LangFilter {
    fn default() -> Self {
        LangFilter { tags: BTreeSet::from(["ar".to_string()]), untagged: true }
    }
}

impl LangFilter {
    /// Comma-separated tags; the word `untagged` admits labels without one.
    pub fn parse(spec: &str) -> Self {
        let mut f = LangFilter { tags: BTreeSet::new(), untagged: false };
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "untagged" {
                f.untagged = true;
            } else {
                f.tags.insert(part.to_lowercase());
            }
        }
        f
    }

    pub fn accepts(&self, lang: Option<&str>) -> bool {
        match lang {
            None => self.untagged,
            Some(l) => self.tags.contains(&l.to_lowercase()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Form {
    Surface,
    Stem,
    Skeleton,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Entry {
    iri: String,
    label: String,
    via_synonym: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DictMatch {
    pub iri: String,
    pub kind: TermKind,
    pub tier: Tier,
    /// The ontology label that produced the hit.
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OntologicalDictionary {
    entries: HashMap<(Form, String), Vec<Entry>>,
    kinds: BTreeMap<String, TermKind>,
    text: TextProcessor,
}

/// Builds with the bundled text processing and the default language filter.
pub fn build_dictionary(store: &OntologyStore, syn: &SynonymLexicon) -> OntologicalDictionary {
    OntologicalDictionary::build(store, syn, &TextProcessor::bundled(), &LangFilter::default())
}

pub fn lookup<S: AsRef<str>>(dict: &OntologicalDictionary, phrase: &[S]) -> Vec<DictMatch> {
    dict.lookup(phrase)
}

impl OntologicalDictionary {
    pub fn build(store: &OntologyStore, syn: &SynonymLexicon, text: &TextProcessor, filter: &LangFilter) -> Self {
        let mut dict = OntologicalDictionary { text: text.clone(), ..Default::default() };
        for term in store.terms() {
            dict.kinds.insert(term.iri.clone(), term.kind);
            for (label, lang) in &term.labels {
                if !filter.accepts(lang.as_deref()) {
                    continue;
                }
                let words = text.content_words(&[label]);
                if words.is_empty() {
                    continue;
                }
                dict.insert_words(&words, &term.iri, label, false);
                for (i, w) in words.iter().enumerate() {
                    for s in syn.synonyms(w) {
                        let mut variant = words.clone();
                        variant[i] = s.to_string();
                        dict.insert_words(&variant, &term.iri, label, true);
                    }
                }
            }
        }
        for list in dict.entries.values_mut() {
            list.sort();
            list.dedup();
        }
        dict
    }

    fn keys(&self, words: &[String]) -> [(Form, String); 3] {
        let stems: Vec<String> = words.iter().map(|w| self.text.stem(w)).collect();
        let skeletons: Vec<String> = words.iter().map(|w| self.text.skeleton(w)).collect();
        [(Form::Surface, words.join(" ")), (Form::Stem, stems.join(" ")), (Form::Skeleton, skeletons.join(" "))]
    }

    fn insert_words(&mut self, words: &[String], iri: &str, label: &str, via_synonym: bool) {
        for key in self.keys(words) {
            let entry = Entry { iri: iri.to_string(), label: label.to_string(), via_synonym };
            self.entries.entry(key).or_default().push(entry);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn text(&self) -> &TextProcessor {
        &self.text
    }

    /// Looks the phrase up at every tier. Each term appears once, at its best
    /// tier; results are ordered by tier, longer labels first, then IRI.
    pub fn lookup<S: AsRef<str>>(&self, phrase: &[S]) -> Vec<DictMatch> {
        let words = self.text.content_words(phrase);
        if words.is_empty() {
            return Vec::new();
        }
        let mut best: BTreeMap<&str, (Tier, &Entry)> = BTreeMap::new();
        for key in self.keys(&words) {
            let form = key.0;
            for e in self.entries.get(&key).into_iter().flatten() {
                let tier = match (form, e.via_synonym) {
                    (Form::Surface, false) => Tier::Exact,
                    (Form::Surface | Form::Stem, true) => Tier::Synonym,
                    (Form::Stem, false) => Tier::Stem,
                    (Form::Skeleton, _) => Tier::Skeleton,
                };
                let slot = best.entry(e.iri.as_str()).or_insert((tier, e));
                if (tier, e.label.as_str()) < (slot.0, slot.1.label.as_str()) {
                    *slot = (tier, e);
                }
            }
        }
        let mut out: Vec<DictMatch> = best
            .into_iter()
            .filter_map(|(iri, (tier, e))| {
                Some(DictMatch { iri: iri.to_string(), kind: *self.kinds.get(iri)?, tier, label: e.label.clone() })
            })
            .collect();
        out.sort_by(|a, b| {
            (a.tier, std::cmp::Reverse(a.label.chars().count()), &a.iri).cmp(&(
                b.tier,
                std::cmp::Reverse(b.label.chars().count()),
                &b.iri,
            ))
        });
        out
    }
}
