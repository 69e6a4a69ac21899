//! Precision and recall against gold queries.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mapper::BatchChooser;
use crate::pipeline::{FailureStage, Pipeline};
use crate::ptree::parse_bracketed;
use crate::sparqlgen::{canonicalize_with, parse_query};
use crate::vocab::PrefixMap;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("case {index}: {message}")]
    Schema { index: usize, message: String },
    #[error("counts must satisfy correct <= generated <= total, got {correct}/{generated}/{total}")]
    CountOrderViolation { correct: u64, generated: u64, total: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetCase {
    pub id: String,
    pub question: String,
    pub tree: String,
    /// `None` when the question is expected to stay untranslated.
    pub gold_sparql: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

/// Parses a JSON array of cases, checking every tree and gold query.
pub fn load_dataset(text: &str) -> Result<Vec<DatasetCase>, EvalError> {
    let values: Vec<serde_json::Value> =
        serde_json::from_str(text).map_err(|e| EvalError::Schema { index: 0, message: e.to_string() })?;
    let mut seen = BTreeSet::new();
    let mut cases = Vec::with_capacity(values.len());
    for (index, v) in values.into_iter().enumerate() {
        let schema = |message: String| EvalError::Schema { index, message };
        let case: DatasetCase = serde_json::from_value(v).map_err(|e| schema(e.to_string()))?;
        if !seen.insert(case.id.clone()) {
            return Err(schema(format!("duplicate id `{}`", case.id)));
        }
        parse_bracketed(&case.tree).map_err(|e| schema(format!("tree: {e}")))?;
        if let Some(gold) = &case.gold_sparql {
            parse_query(gold, &PrefixMap::default()).map_err(|e| schema(format!("gold query: {e}")))?;
        }
        cases.push(case);
    }
    Ok(cases)
}

/// An exact non-negative fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ratio {
    pub numerator: u64,
    pub denominator: u64,
}

impl Ratio {
    pub fn value(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// Percentage in hundredths of a point, rounded half up.
    pub fn basis_points(self) -> u64 {
        (self.numerator * 20_000 / self.denominator).div_ceil(2)
    }

    pub fn percent(self) -> f64 {
        self.value() * 100.0
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bp = self.basis_points();
        write!(f, "{}.{:02}%", bp / 100, bp % 100)
    }
}

/// Precision (undefined without generated queries) and recall.
pub fn metrics(correct: u64, generated: u64, total: u64) -> Result<(Option<Ratio>, Ratio), EvalError> {
    if correct > generated || generated > total || total == 0 {
        return Err(EvalError::CountOrderViolation { correct, generated, total });
    }
    let precision = (generated > 0).then_some(Ratio { numerator: correct, denominator: generated });
    Ok((precision, Ratio { numerator: correct, denominator: total }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Correct,
    Incorrect,
    NotGenerated,
    /// No gold query and nothing generated.
    CorrectRejection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseResult {
    pub id: String,
    pub category: Option<String>,
    pub outcome: Outcome,
    pub has_gold: bool,
    pub generated: Option<String>,
    pub stage: Option<FailureStage>,
    pub code: Option<String>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseFailure {
    pub id: String,
    pub stage: FailureStage,
    pub code: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalReport {
    pub total: u64,
    pub generated: u64,
    pub correct: u64,
    pub correct_rejections: u64,
    pub precision: Option<Ratio>,
    pub recall: Option<Ratio>,
    /// Cases with no generated query, by id.
    pub failures: Vec<CaseFailure>,
    /// Every case, by id.
    pub cases: Vec<CaseResult>,
}

impl EvalReport {
    pub fn incorrect(&self) -> u64 {
        self.generated - self.correct
    }

    /// Cases that have a gold query.
    pub fn supported_total(&self) -> u64 {
        self.cases.iter().filter(|c| c.has_gold).count() as u64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_table(&self) -> String {
        let pct = |r: Option<Ratio>| r.map_or("n/a".to_string(), |r| r.to_string());
        let mut out = String::new();
        out.push_str(&format!("{:<24}{:>10}\n", "total", self.total));
        out.push_str(&format!("{:<24}{:>10}\n", "generated", self.generated));
        out.push_str(&format!("{:<24}{:>10}\n", "correct", self.correct));
        out.push_str(&format!("{:<24}{:>10}\n", "incorrect", self.incorrect()));
        out.push_str(&format!("{:<24}{:>10}\n", "not generated", self.total - self.generated));
        out.push_str(&format!("{:<24}{:>10}\n", "correct rejections", self.correct_rejections));
        out.push_str(&format!("{:<24}{:>10}\n", "precision", pct(self.precision)));
        out.push_str(&format!("{:<24}{:>10}\n", "recall", pct(self.recall)));
        for c in &self.cases {
            let detail = match (&c.stage, &c.reason) {
                (Some(s), Some(r)) => format!("{s}: {r}"),
                (None, Some(r)) => r.clone(),
                _ => String::new(),
            };
            out.push_str(&format!("{:<12} {:<18} {}\n", c.id, format!("{:?}", c.outcome), detail));
        }
        out
    }
}

/// Translates every case with the batch chooser and scores the output by
/// canonical equality with the gold query.
pub fn run_eval(cases: &[DatasetCase], pipeline: &Pipeline) -> EvalReport {
    let prefixes = pipeline.prefixes();
    let mut results = Vec::with_capacity(cases.len());
    for case in cases {
        let trace = pipeline.translate(&case.question, &case.tree, &mut BatchChooser);
        let mut result = CaseResult {
            id: case.id.clone(),
            category: case.category.clone(),
            outcome: Outcome::NotGenerated,
            has_gold: case.gold_sparql.is_some(),
            generated: trace.sparql.clone(),
            stage: None,
            code: None,
            reason: None,
        };
        match (&trace.sparql, &case.gold_sparql) {
            (None, gold) => {
                let failure = trace.failure.expect("failed trace has a failure");
                result.outcome = if gold.is_none() { Outcome::CorrectRejection } else { Outcome::NotGenerated };
                result.stage = Some(failure.stage);
                result.code = Some(failure.code);
                result.reason = Some(failure.reason);
            }
            (Some(_), None) => {
                result.outcome = Outcome::Incorrect;
                result.reason = Some("a query was generated but none was expected".into());
            }
            (Some(q), Some(gold)) => {
                let a = canonicalize_with(q, prefixes);
                let b = canonicalize_with(gold, prefixes);
                match (a, b) {
                    (Ok(a), Ok(b)) if a == b => result.outcome = Outcome::Correct,
                    (Ok(_), Ok(_)) => {
                        result.outcome = Outcome::Incorrect;
                        result.reason = Some("not equivalent to the gold query".into());
                    }
                    (Err(e), _) | (_, Err(e)) => {
                        result.outcome = Outcome::Incorrect;
                        result.reason = Some(e.to_string());
                    }
                }
            }
        }
        results.push(result);
    }
    results.sort_by(|a, b| a.id.cmp(&b.id));

    let count = |o: Outcome| results.iter().filter(|r| r.outcome == o).count() as u64;
    let total = results.len() as u64;
    let correct = count(Outcome::Correct);
    let generated = correct + count(Outcome::Incorrect);
    let (precision, recall) = match metrics(correct, generated, total) {
        Ok((p, r)) => (p, Some(r)),
        Err(_) => (None, None),
    };
    let failures = results
        .iter()
        .filter(|r| matches!(r.outcome, Outcome::NotGenerated | Outcome::CorrectRejection))
        .map(|r| CaseFailure {
            id: r.id.clone(),
            stage: r.stage.expect("not generated implies a stage"),
            code: r.code.clone().unwrap_or_default(),
            reason: r.reason.clone().unwrap_or_default(),
        })
        .collect();
    EvalReport {
        total,
        generated,
        correct,
        correct_rejections: count(Outcome::CorrectRejection),
        precision,
        recall,
        failures,
        cases: results,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reported_rates() {
        let (p, r) = metrics(514, 638, 877).unwrap();
        assert_eq!((p.unwrap().to_string(), r.to_string()), ("80.56%".into(), "58.61%".into()));
        let (p, r) = metrics(31, 39, 45).unwrap();
        assert_eq!((p.unwrap().to_string(), r.to_string()), ("79.49%".into(), "68.89%".into()));
    }

    #[test]
    fn edge_counts() {
        let (p, r) = metrics(0, 0, 10).unwrap();
        assert_eq!(p, None);
        assert_eq!(r.to_string(), "0.00%");
        let (p, r) = metrics(5, 10, 10).unwrap();
        assert_eq!((p.unwrap().to_string(), r.to_string()), ("50.00%".into(), "50.00%".into()));
        assert!(matches!(metrics(3, 2, 10), Err(EvalError::CountOrderViolation { .. })));
        assert!(matches!(metrics(1, 2, 1), Err(EvalError::CountOrderViolation { .. })));
    }

    #[test]
    fn dataset_validation() {
        assert_eq!(load_dataset("[]").unwrap(), vec![]);
        let case = r#"{"id":"a","question":"q","tree":"(NP (NN x))","gold_sparql":null}"#;
        assert_eq!(load_dataset(&format!("[{case}]")).unwrap().len(), 1);
        let dup = format!("[{case},{case}]");
        assert!(matches!(load_dataset(&dup), Err(EvalError::Schema { index: 1, .. })));
        let bad_tree = r#"[{"id":"a","question":"q","tree":"(NP (NN x)","gold_sparql":null}]"#;
        assert!(matches!(load_dataset(bad_tree), Err(EvalError::Schema { index: 0, .. })));
        let bad_gold = r#"[{"id":"a","question":"q","tree":"(NP (NN x))","gold_sparql":"ASK {}"}]"#;
        assert!(matches!(load_dataset(bad_gold), Err(EvalError::Schema { index: 0, .. })));
        let extra = r#"[{"id":"a","question":"q","tree":"(NP (NN x))","gold_sparql":null,"x":1}]"#;
        assert!(load_dataset(extra).is_err());
    }

    proptest! {
        #[test]
        fn precision_bounds_recall(total in 1u64..5000, g in 0u64..5000, c in 0u64..5000) {
            let generated = g % (total + 1);
            let correct = c % (generated + 1);
            let (p, r) = metrics(correct, generated, total).unwrap();
            if let Some(p) = p {
                // Same numerator, smaller denominator.
                prop_assert!(p.numerator * r.denominator >= r.numerator * p.denominator);
                prop_assert!(p.basis_points() >= r.basis_points());
            }
            prop_assert!(r.basis_points() <= 10_000);
        }

        #[test]
        fn rounding_matches_float(num in 0u64..10_000, den in 1u64..10_000) {
            prop_assume!(num <= den);
            let r = Ratio { numerator: num, denominator: den };
            let float = r.percent();
            prop_assert!((r.basis_points() as f64 / 100.0 - float).abs() <= 0.005 + 1e-9);
        }
    }
}
