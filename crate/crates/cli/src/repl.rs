//! Line-oriented session: a question, then its tree, then the result.

use std::io::{BufRead, Write};

use anyhow::Result;
use arsparql::mapper::{BatchChooser, Chooser};

use crate::prompt::Prompter;
use crate::settings::{run_parser, ChooserMode, Settings};

fn read_line<R: BufRead>(input: &mut R) -> Result<Option<String>> {
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim().to_string()))
}

/// The tree answer may be a bracketed tree, a file path, or empty when a
/// parser command is configured.
fn resolve_tree(answer: &str, question: &str, settings: &Settings) -> Result<String> {
    if answer.starts_with('(') {
        return Ok(answer.to_string());
    }
    if answer.is_empty() {
        return match &settings.parser_cmd {
            Some(cmd) => run_parser(cmd, question),
            None => anyhow::bail!("no tree given and no parser command configured"),
        };
    }
    std::fs::read_to_string(answer).map_err(|e| anyhow::anyhow!("cannot read tree file {answer}: {e}"))
}

pub fn run<R: BufRead, W: Write>(settings: &Settings, input: &mut R, output: &mut W) -> Result<()> {
    writeln!(output, "type a question, then a tree file (or a bracketed tree); `exit` quits")?;
    loop {
        write!(output, "question> ")?;
        output.flush()?;
        let Some(question) = read_line(input)? else { break };
        if question == "exit" {
            break;
        }
        if question.is_empty() {
            continue;
        }
        write!(output, "tree> ")?;
        output.flush()?;
        let Some(answer) = read_line(input)? else { break };
        let tree = match resolve_tree(&answer, &question, settings) {
            Ok(t) => t,
            Err(e) => {
                writeln!(output, "error: {e:#}")?;
                continue;
            }
        };
        let trace = match settings.chooser {
            ChooserMode::Batch => settings.pipeline.translate(&question, &tree, &mut BatchChooser),
            ChooserMode::Interactive => {
                let mut prompter = Prompter::new(input, output);
                let chooser: &mut dyn Chooser = &mut prompter;
                settings.pipeline.translate(&question, &tree, chooser)
            }
        };
        for w in &trace.warnings {
            writeln!(output, "warning: {w}")?;
        }
        match (&trace.sparql, &trace.failure) {
            (Some(q), _) => writeln!(output, "{q}")?,
            (None, Some(f)) => writeln!(output, "{f}")?,
            (None, None) => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use arsparql::pipeline::{Pipeline, PipelineConfig};
    use std::io::Cursor;

    const GEO: &str = include_str!("../../core/fixtures/geography.nt");
    const DISEASES: &str = include_str!("../../core/fixtures/diseases.nt");
    const CITIES: &str = include_str!("../../core/fixtures/trees/cities.tree");
    const PANCREAS: &str = include_str!("../../core/fixtures/trees/pancreas.tree");

    fn settings(ontology: &str) -> Settings {
        Settings {
            pipeline: Pipeline::from_ntriples(ontology, PipelineConfig::default()).unwrap(),
            chooser: ChooserMode::Interactive,
            parser_cmd: None,
        }
    }

    fn session(s: &Settings, script: &str) -> String {
        let mut input = Cursor::new(script.as_bytes().to_vec());
        let mut output = Vec::new();
        run(s, &mut input, &mut output).unwrap();
        String::from_utf8(output).unwrap()
    }

    #[test]
    fn ambiguous_preposition_prompts() {
        let s = settings(GEO);
        let out = session(&s, &format!("أذكر أسماء المدن في ولاية تكساس\n{}\n1\nexit\n", CITIES.trim()));
        assert!(out.contains(":isCityOf") && out.contains(":borders"), "{out}");
        assert!(out.contains("?target :isCityOf :Texas ."), "{out}");
        let out = session(&s, &format!("أذكر أسماء المدن في ولاية تكساس\n{}\n2\nexit\n", CITIES.trim()));
        assert!(out.contains("?target :borders :Texas ."), "{out}");
    }

    #[test]
    fn unambiguous_question_has_no_prompt() {
        let s = settings(DISEASES);
        let out = session(&s, &format!("ما المرض الذي يصيب البنكرياس؟\n{}\n", PANCREAS.trim()));
        assert!(!out.contains("choose"), "{out}");
        assert!(out.contains(":infects :Pancreas"), "{out}");
    }

    #[test]
    fn three_bad_answers_abort() {
        let s = settings(GEO);
        let out = session(&s, &format!("أذكر أسماء المدن في ولاية تكساس\n{}\n0\n0\n0\nexit\n", CITIES.trim()));
        assert!(out.contains("ChoiceAborted"), "{out}");
    }

    #[test]
    fn bad_tree_path_is_reported() {
        let s = settings(DISEASES);
        let out = session(&s, "ما علاج السل\n/nonexistent/tree\nexit\n");
        assert!(out.contains("error: cannot read tree file"), "{out}");
    }
}
