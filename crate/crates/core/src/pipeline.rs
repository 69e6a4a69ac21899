//! The whole translation, stage by stage, with a trace of every step.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::artext::TextProcessor;
use crate::mapper::{
    complete_with_schema, entity_matches, match_intermediate, resolve, validate_all, CandidateRdfTriple, Chooser,
    MapError, NEGATION_WORDS,
};
use crate::npx::{
    attach_modifiers, build_intermediate_triples, extract_nps, split_head_modifiers, IntermediateTriple, NounPhrase,
    NpError,
};
use crate::ontostore::{
    infer_closure, load_ntriples, schema_statements, LangFilter, OntologicalDictionary, OntologyError, OntologyStore,
    SchemaStatement, SynonymLexicon,
};
use crate::ptree::{parse_bracketed, ParseTree, TreeError};
use crate::sparqlgen::{
    build_query, extract_modifiers, extract_target, serialize, ModifierDescriptor, QueryTarget, SparqlError,
    SparqlQuery, UnsupportedModifier, WordList,
};
use crate::vocab::PrefixMap;

/// Where a translation stopped, following the usual error taxonomy for
/// question-answering front ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailureStage {
    Parsing,
    EntityIdentification,
    SemanticAnalysis,
}

impl fmt::Display for FailureStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureStage::Parsing => "parsing",
            FailureStage::EntityIdentification => "entity identification",
            FailureStage::SemanticAnalysis => "semantic analysis",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslationError {
    #[error("empty question")]
    EmptyQuestion,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    NounPhrase(#[from] NpError),
    #[error(transparent)]
    Mapping(#[from] MapError),
    #[error(transparent)]
    Sparql(#[from] SparqlError),
    #[error("{}", .0.iter().map(|u| u.to_string()).collect::<Vec<_>>().join("; "))]
    Unsupported(Vec<UnsupportedModifier>),
}

impl TranslationError {
    pub fn stage(&self) -> FailureStage {
        use FailureStage::*;
        match self {
            TranslationError::EmptyQuestion | TranslationError::Tree(_) | TranslationError::NounPhrase(_) => Parsing,
            TranslationError::Sparql(SparqlError::NoTargetFound) => Parsing,
            TranslationError::Mapping(MapError::TooManyMissing { .. }) => EntityIdentification,
            TranslationError::Sparql(SparqlError::TargetUnmatched { .. }) => EntityIdentification,
            TranslationError::Mapping(_) | TranslationError::Sparql(_) | TranslationError::Unsupported(_) => {
                SemanticAnalysis
            }
        }
    }

    /// Short machine-friendly name of the error variant.
    pub fn code(&self) -> &'static str {
        match self {
            TranslationError::EmptyQuestion => "EmptyQuestion",
            TranslationError::Tree(_) => "TreeError",
            TranslationError::NounPhrase(NpError::NoNounPhrases) => "NoNounPhrases",
            TranslationError::NounPhrase(NpError::NoHeadFound { .. }) => "NoHeadFound",
            TranslationError::NounPhrase(NpError::Tree(_)) => "TreeError",
            TranslationError::Mapping(MapError::TooManyMissing { .. }) => "TooManyMissing",
            TranslationError::Mapping(MapError::NoValidTriple { .. }) => "NoValidTriple",
            TranslationError::Mapping(MapError::ChoiceAborted { .. }) => "ChoiceAborted",
            TranslationError::Mapping(MapError::ChoiceOutOfRange { .. }) => "ChoiceOutOfRange",
            TranslationError::Sparql(SparqlError::NoTargetFound) => "NoTargetFound",
            TranslationError::Sparql(SparqlError::TargetUnmatched { .. }) => "TargetUnmatched",
            TranslationError::Sparql(SparqlError::EmptyBranch) => "EmptyBranch",
            TranslationError::Sparql(SparqlError::NotNegated { .. }) => "NotNegated",
            TranslationError::Sparql(SparqlError::OutOfSubset { .. }) => "OutOfSubset",
            TranslationError::Unsupported(_) => "UnsupportedModifier",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub stage: FailureStage,
    pub code: String,
    pub reason: String,
}

impl From<&TranslationError> for Failure {
    fn from(e: &TranslationError) -> Self {
        Failure { stage: e.stage(), code: e.code().to_string(), reason: e.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failure ({}): {}", self.stage, self.code, self.reason)
    }
}

/// Candidates for one intermediate triple, as they leave each step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TripleCandidates {
    pub matched: Vec<CandidateRdfTriple>,
    pub completed: Vec<CandidateRdfTriple>,
}

/// Everything the pipeline produced, filled in step by step. On failure the
/// fields up to the failing step are populated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranslationTrace {
    pub question: String,
    pub tree: Option<String>,
    pub noun_phrases: Vec<NounPhrase>,
    pub intermediate_triples: Vec<IntermediateTriple>,
    pub candidates: Vec<TripleCandidates>,
    pub chosen: Vec<CandidateRdfTriple>,
    pub target: Option<QueryTarget>,
    pub modifiers: Vec<ModifierDescriptor>,
    pub unsupported: Vec<UnsupportedModifier>,
    pub query: Option<SparqlQuery>,
    pub sparql: Option<String>,
    pub failure: Option<Failure>,
    pub warnings: Vec<String>,
}

impl TranslationTrace {
    fn new(question: &str) -> Self {
        TranslationTrace {
            question: question.to_string(),
            tree: None,
            noun_phrases: Vec::new(),
            intermediate_triples: Vec::new(),
            candidates: Vec::new(),
            chosen: Vec::new(),
            target: None,
            modifiers: Vec::new(),
            unsupported: Vec::new(),
            query: None,
            sparql: None,
            failure: None,
            warnings: Vec::new(),
        }
    }

    pub fn is_success(&self) -> bool {
        self.sparql.is_some()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    /// A plain-text rendering for terminals.
    pub fn render(&self, store: &OntologyStore) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line(format!("question: {}", self.question));
        for w in &self.warnings {
            line(format!("warning: {w}"));
        }
        line("noun phrases:".into());
        for np in &self.noun_phrases {
            line(format!("  [{}] head: {}", np.text(), np.head_text()));
        }
        line("intermediate triples:".into());
        for it in &self.intermediate_triples {
            line(format!("  <{}, {}, {}>", it.subject.text(), it.predicate_tokens.join(" "), it.object.text()));
        }
        for (i, c) in self.candidates.iter().enumerate() {
            line(format!("candidates for triple {}:", i + 1));
            for t in &c.completed {
                let mark = if t.valid { "+" } else { "-" };
                line(format!("  {mark} {}", t.describe(store)));
            }
        }
        line("chosen:".into());
        for t in &self.chosen {
            line(format!("  {}", t.describe(store)));
        }
        if let Some(t) = &self.target {
            let term = t.term.as_ref().map_or("unmatched".to_string(), |m| store.prefixes().render(&m.iri));
            line(format!("target: {} -> {term}", t.np.text()));
        }
        for m in &self.modifiers {
            line(format!("modifier: {:?} `{}` at leaf {}", m.kind, m.trigger_token, m.position));
        }
        for u in &self.unsupported {
            line(format!("unsupported: {u}"));
        }
        if let Some(f) = &self.failure {
            line(f.to_string());
        }
        if let Some(q) = &self.sparql {
            line(q.clone());
        }
        out
    }
}

/// Language resources for a pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    pub text: TextProcessor,
    pub question_words: WordList,
    pub order_words: WordList,
    pub lang_filter: LangFilter,
    pub synonyms: SynonymLexicon,
    /// Extra prefixes for rendering queries, on top of the ontology's own.
    pub prefixes: PrefixMap,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            text: TextProcessor::bundled(),
            question_words: WordList::question_words(),
            order_words: WordList::order_words(),
            lang_filter: LangFilter::default(),
            synonyms: SynonymLexicon::default(),
            prefixes: PrefixMap::empty(),
        }
    }
}

/// A closed ontology with its dictionary and schema, ready to translate.
#[derive(Debug, Clone)]
pub struct Pipeline {
    store: OntologyStore,
    dict: OntologicalDictionary,
    schema: Vec<SchemaStatement>,
    prefixes: PrefixMap,
    config: PipelineConfig,
}

impl Pipeline {
    pub fn new(store: &OntologyStore, config: PipelineConfig) -> Self {
        let store = infer_closure(store);
        let dict = OntologicalDictionary::build(&store, &config.synonyms, &config.text, &config.lang_filter);
        let schema = schema_statements(&store);
        let mut prefixes = store.prefixes().clone();
        prefixes.extend(&config.prefixes);
        Pipeline { store, dict, schema, prefixes, config }
    }

    pub fn from_ntriples(text: &str, config: PipelineConfig) -> Result<Self, OntologyError> {
        Ok(Self::new(&load_ntriples(text)?, config))
    }

    pub fn store(&self) -> &OntologyStore {
        &self.store
    }

    pub fn dictionary(&self) -> &OntologicalDictionary {
        &self.dict
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Translates one question given its bracketed parse. Never panics on
    /// bad input; failures are recorded in the trace.
    pub fn translate(&self, question: &str, tree: &str, chooser: &mut dyn Chooser) -> TranslationTrace {
        let mut trace = TranslationTrace::new(question);
        if let Err(e) = self.run(question, tree, chooser, &mut trace) {
            trace.failure = Some(Failure::from(&e));
        }
        trace
    }

    /// [`Pipeline::translate`] reduced to the query text or the error.
    pub fn translate_to_sparql(
        &self,
        question: &str,
        tree: &str,
        chooser: &mut dyn Chooser,
    ) -> Result<String, Failure> {
        let trace = self.translate(question, tree, chooser);
        match (trace.sparql, trace.failure) {
            (Some(q), _) => Ok(q),
            (None, Some(f)) => Err(f),
            (None, None) => unreachable!("a trace has either a query or a failure"),
        }
    }

    fn run(
        &self,
        question: &str,
        tree_text: &str,
        chooser: &mut dyn Chooser,
        trace: &mut TranslationTrace,
    ) -> Result<(), TranslationError> {
        if question.trim().is_empty() {
            return Err(TranslationError::EmptyQuestion);
        }
        let tree = parse_bracketed(tree_text)?;
        trace.tree = Some(tree.to_bracketed());
        if let Some(w) = self.token_mismatch(question, &tree) {
            trace.warnings.push(w);
        }

        let mut nps = extract_nps(&tree)?;
        nps.retain(|np| !self.is_function_phrase(np));
        if nps.is_empty() {
            return Err(NpError::NoNounPhrases.into());
        }
        attach_modifiers(&tree, &mut nps);
        let nps = nps.iter().map(split_head_modifiers).collect::<Result<Vec<_>, _>>()?;
        trace.noun_phrases = nps.clone();

        let intermediate = build_intermediate_triples(&tree, &nps)?;
        trace.intermediate_triples = intermediate.clone();

        // Degree words change the meaning of the whole question, so there is
        // no point matching anything once one is found.
        let (mods, unsupported) = extract_modifiers(&tree);
        trace.modifiers = mods.clone();
        trace.unsupported = unsupported.clone();
        if !unsupported.is_empty() {
            return Err(TranslationError::Unsupported(unsupported));
        }

        for it in &intermediate {
            let matched = match_intermediate(it, &self.dict);
            let mut completed = Vec::new();
            let mut error = None;
            for c in &matched {
                match complete_with_schema(c, &self.store, &self.schema) {
                    Ok(cs) => completed.extend(cs),
                    Err(e) => error = Some(e),
                }
            }
            validate_all(&mut completed, &self.store, &self.schema);
            trace.candidates.push(TripleCandidates { matched, completed: completed.clone() });
            if let Some(e) = error {
                return Err(e.into());
            }
            let chosen = resolve(&completed, chooser, question, &self.store)?;
            trace.chosen.push(chosen);
        }

        let mut target = extract_target(&tree, &nps, &self.config.question_words, &self.config.order_words)?;
        target.term = self.target_term(&target.np, &trace.chosen);
        trace.target = Some(target.clone());

        let query = build_query(&trace.chosen, &target, &mods)?;
        trace.sparql = Some(serialize(&query, &self.prefixes));
        trace.query = Some(query);
        Ok(())
    }

    /// Phrases made only of question, order or negation words carry no
    /// content to match.
    fn is_function_phrase(&self, np: &NounPhrase) -> bool {
        let cfg = &self.config;
        np.tokens.iter().all(|t| {
            let n = cfg.text.normalize(t);
            cfg.question_words.contains(&n) || cfg.order_words.contains(&n) || NEGATION_WORDS.contains(&n.as_str())
        })
    }

    /// The term already chosen for the target phrase in some triple, or else
    /// its best dictionary entry.
    fn target_term(&self, np: &NounPhrase, chosen: &[CandidateRdfTriple]) -> Option<crate::mapper::MatchedTerm> {
        let text = np.text();
        chosen
            .iter()
            .find_map(|c| {
                if c.provenance.subject_np == text {
                    c.subject.term().cloned()
                } else if c.provenance.object_np == text {
                    c.object.term().cloned()
                } else {
                    None
                }
            })
            .or_else(|| entity_matches(np, &self.dict).into_iter().next())
    }

    /// Tokenizers split clitics differently, so the check compares letters
    /// only.
    fn token_mismatch(&self, question: &str, tree: &ParseTree) -> Option<String> {
        let letters = |s: &str| -> String {
            s.split_whitespace()
                .map(|w| self.config.text.normalize(w))
                .collect::<String>()
                .chars()
                .filter(|c| c.is_alphabetic())
                .collect()
        };
        let q = letters(question);
        let t = letters(&tree.leaf_tokens().join(" "));
        (q != t).then(|| format!("tree tokens `{}` do not spell the question", tree.leaf_tokens().join(" ")))
    }
}
