//! Browser bindings. Every export takes and returns plain strings; results
//! are JSON documents so the page needs no generated glue types.

use std::cell::OnceCell;

use arsparql::artext::TextProcessor;
use arsparql::eval::load_dataset;
use arsparql::mapper::{CandidateRdfTriple, ChoiceContext, Chooser, MapError};
use arsparql::ontostore::SynonymLexicon;
use arsparql::pipeline::{Pipeline, PipelineConfig};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

const DISEASES: &str = include_str!("../../core/fixtures/diseases.nt");
const GEOGRAPHY: &str = include_str!("../../core/fixtures/geography.nt");
const SYNONYMS: &str = include_str!("../../core/fixtures/synonyms.tsv");
const DISEASES_GOLD: &str = include_str!("../../core/fixtures/diseases_gold.json");
const GEOGRAPHY_GOLD: &str = include_str!("../../core/fixtures/geography_gold.json");

thread_local! {
    static DISEASES_PIPELINE: OnceCell<Pipeline> = const { OnceCell::new() };
    static GEOGRAPHY_PIPELINE: OnceCell<Pipeline> = const { OnceCell::new() };
}

fn build(name: &str) -> Pipeline {
    let mut config = PipelineConfig::default();
    let nt = match name {
        "diseases" => {
            config.synonyms = SynonymLexicon::parse(SYNONYMS, &config.text).expect("bundled synonyms parse");
            DISEASES
        }
        _ => GEOGRAPHY,
    };
    Pipeline::from_ntriples(nt, config).expect("bundled ontology loads")
}

fn with_pipeline<T>(name: &str, f: impl FnOnce(&Pipeline) -> T) -> Option<T> {
    let cell = match name {
        "diseases" => &DISEASES_PIPELINE,
        "geography" => &GEOGRAPHY_PIPELINE,
        _ => return None,
    };
    Some(cell.with(|c| f(c.get_or_init(|| build(name)))))
}

fn unknown(name: &str) -> String {
    json!({ "error": format!("unknown ontology `{name}`") }).to_string()
}

/// Answers choices from a fixed list. When the list runs out the pending
/// decision is kept so the page can ask and retry with one more pick.
#[derive(Default)]
struct Scripted {
    picks: Vec<usize>,
    used: usize,
    pending: Option<ChoiceContext>,
}

impl Chooser for Scripted {
    fn choose(&mut self, ctx: &ChoiceContext, _: &[CandidateRdfTriple]) -> Result<usize, MapError> {
        let pick = self.picks.get(self.used).copied();
        self.used += 1;
        match pick {
            Some(i) if i < ctx.options.len() => Ok(i),
            _ => {
                self.pending = Some(ctx.clone());
                Err(MapError::ChoiceAborted { phrase: ctx.phrase.clone() })
            }
        }
    }
}

#[derive(Serialize)]
struct Example {
    ontology: &'static str,
    id: String,
    question: String,
    tree: String,
}

/// The bundled example questions with their parse trees.
#[wasm_bindgen]
pub fn examples() -> String {
    let mut out = Vec::new();
    for (ontology, text) in [("diseases", DISEASES_GOLD), ("geography", GEOGRAPHY_GOLD)] {
        for case in load_dataset(text).expect("bundled dataset loads") {
            out.push(Example { ontology, id: case.id, question: case.question, tree: case.tree });
        }
    }
    serde_json::to_string(&out).expect("examples serialize")
}

/// Translates a question. `picks` holds 0-based answers to the ambiguity
/// prompts met so far; a `pending` field in the result asks for the next one.
#[wasm_bindgen]
pub fn translate(ontology: &str, question: &str, tree: &str, picks: &[u32]) -> String {
    with_pipeline(ontology, |p| {
        let mut chooser = Scripted { picks: picks.iter().map(|&i| i as usize).collect(), ..Default::default() };
        let trace = p.translate(question, tree, &mut chooser);
        let pending = if trace.is_success() { None } else { chooser.pending };
        json!({
            "sparql": trace.sparql,
            "failure": if pending.is_some() { None } else { trace.failure.as_ref().map(|f| json!({
                "stage": f.stage.to_string(),
                "code": f.code,
                "reason": f.reason,
            })) },
            "pending": pending,
            "warnings": trace.warnings,
            "explain": trace.render(p.store()),
        })
        .to_string()
    })
    .unwrap_or_else(|| unknown(ontology))
}

/// Dictionary hits for a phrase, best tier first.
#[wasm_bindgen]
pub fn lookup(ontology: &str, phrase: &str) -> String {
    with_pipeline(ontology, |p| {
        let words: Vec<&str> = phrase.split_whitespace().collect();
        let rows: Vec<_> = p
            .dictionary()
            .lookup(&words)
            .into_iter()
            .map(|m| {
                json!({
                    "term": p.prefixes().render(&m.iri),
                    "kind": m.kind.to_string(),
                    "tier": m.tier.to_string(),
                    "label": m.label,
                })
            })
            .collect();
        serde_json::Value::from(rows).to_string()
    })
    .unwrap_or_else(|| unknown(ontology))
}

/// How each word of the input is reduced before dictionary matching.
#[wasm_bindgen]
pub fn analyze(text: &str) -> String {
    let tp = TextProcessor::bundled();
    let rows: Vec<_> = text
        .split_whitespace()
        .map(|w| {
            let n = tp.normalize(w);
            json!({
                "word": w,
                "stopword": tp.is_stopword(w),
                "stem": tp.stem(&n),
                "skeleton": tp.skeleton(&n),
                "normalized": n,
            })
        })
        .collect();
    serde_json::Value::from(rows).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    fn example(id: &str) -> (String, String, String) {
        let all = parse(examples());
        let e = all.as_array().unwrap().iter().find(|e| e["id"] == id).unwrap();
        let s = |k: &str| e[k].as_str().unwrap().to_string();
        (s("ontology"), s("question"), s("tree"))
    }

    #[test]
    fn examples_cover_both_ontologies() {
        let all = parse(examples());
        let n = all.as_array().unwrap().len();
        assert_eq!(n, 24);
    }

    #[test]
    fn translates_an_example() {
        let (o, q, t) = example("d01");
        let r = parse(translate(&o, &q, &t, &[]));
        assert!(r["sparql"].as_str().unwrap().contains(":cures"), "{r}");
        assert!(r["failure"].is_null());
    }

    #[test]
    fn ambiguity_round_trip() {
        let (o, q, t) = example("g01");
        let first = parse(translate(&o, &q, &t, &[]));
        assert!(first["sparql"].is_null());
        assert_eq!(first["pending"]["options"].as_array().unwrap().len(), 2);
        let second = parse(translate(&o, &q, &t, &[1]));
        assert!(second["sparql"].as_str().unwrap().contains(":borders"), "{second}");
    }

    #[test]
    fn failure_is_reported() {
        let (o, q, t) = example("d19");
        let r = parse(translate(&o, &q, &t, &[]));
        assert_eq!(r["failure"]["code"], "UnsupportedModifier");
        assert!(r["pending"].is_null());
    }

    #[test]
    fn lookup_and_analyze() {
        let rows = parse(lookup("diseases", "علاج"));
        assert_eq!(rows[0]["term"], ":Cure");
        assert_eq!(rows[0]["tier"], "EXACT");
        assert!(parse(lookup("nowhere", "x"))["error"].is_string());
        let a = parse(analyze("الأمراض في"));
        assert_eq!(a[0]["normalized"], "الامراض");
        assert_eq!(a[0]["stem"], "امراض");
        assert_eq!(a[0]["skeleton"], "مرض");
        assert_eq!(a[1]["stopword"], true);
    }
}
