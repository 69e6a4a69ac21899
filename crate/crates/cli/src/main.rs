use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use arsparql::eval::{load_dataset, run_eval};
use arsparql::mapper::BatchChooser;
use clap::{Parser, Subcommand};

mod prompt;
mod repl;
mod settings;

use prompt::Prompter;
use settings::{run_parser, ChooserMode, PipelineArgs};

/// Translate Arabic questions into SPARQL over an ontology.
#[derive(Debug, Parser)]
#[command(name = "arsparql", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Translate one question.
    Translate {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Bracketed parse tree of the question.
        #[arg(long, value_name = "FILE")]
        tree: Option<PathBuf>,
        /// Write the JSON trace here (`-` for stdout).
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        /// Print a readable trace on stderr.
        #[arg(long)]
        explain: bool,
        query: String,
    },
    /// Translate questions one after another, asking when a phrase is ambiguous.
    Repl {
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Score translations against a gold dataset.
    Eval {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// JSON array of cases.
        #[arg(long, value_name = "FILE")]
        dataset: PathBuf,
        /// Write the JSON report here (`-` for stdout).
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Show the dictionary entries a word or phrase matches.
    Dict {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(required = true)]
        words: Vec<String>,
    },
}

const TRANSLATION_FAILED: u8 = 2;

fn write_out(path: &PathBuf, text: &str) -> Result<()> {
    if path.as_os_str() == "-" {
        println!("{text}");
        return Ok(());
    }
    fs::write(path, format!("{text}\n")).with_context(|| format!("cannot write {}", path.display()))
}

fn translate(
    args: PipelineArgs,
    tree: Option<PathBuf>,
    trace_path: Option<PathBuf>,
    explain: bool,
    query: String,
) -> Result<ExitCode> {
    if query.trim().is_empty() {
        bail!("empty query");
    }
    let settings = args.load()?;
    let tree = match (&tree, &settings.parser_cmd) {
        (Some(path), _) => fs::read_to_string(path).with_context(|| format!("cannot read tree {}", path.display()))?,
        (None, Some(cmd)) => run_parser(cmd, &query)?,
        (None, None) => bail!("no tree given (use --tree or --parser-cmd)"),
    };
    let trace = match settings.chooser {
        ChooserMode::Batch => settings.pipeline.translate(&query, &tree, &mut BatchChooser),
        ChooserMode::Interactive => {
            let stdin = io::stdin();
            let mut input = stdin.lock();
            let mut output = io::stderr();
            settings.pipeline.translate(&query, &tree, &mut Prompter::new(&mut input, &mut output))
        }
    };
    if explain {
        eprint!("{}", trace.render(settings.pipeline.store()));
    } else {
        for w in &trace.warnings {
            eprintln!("warning: {w}");
        }
    }
    if let Some(path) = &trace_path {
        write_out(path, &trace.to_json())?;
    }
    match (&trace.sparql, &trace.failure) {
        (Some(q), _) => {
            if trace_path.as_deref() != Some("-".as_ref()) {
                println!("{q}");
            }
            Ok(ExitCode::SUCCESS)
        }
        (None, failure) => {
            if let Some(f) = failure {
                eprintln!("{f}");
            }
            Ok(ExitCode::from(TRANSLATION_FAILED))
        }
    }
}

fn eval(args: PipelineArgs, dataset: PathBuf, report_path: Option<PathBuf>) -> Result<ExitCode> {
    let settings = args.load()?;
    let text = fs::read_to_string(&dataset).with_context(|| format!("cannot read dataset {}", dataset.display()))?;
    let cases = load_dataset(&text)?;
    let report = run_eval(&cases, &settings.pipeline);
    if let Some(path) = &report_path {
        write_out(path, &report.to_json())?;
    }
    if report_path.as_deref() != Some("-".as_ref()) {
        print!("{}", report.render_table());
    }
    Ok(ExitCode::SUCCESS)
}

fn dict(args: PipelineArgs, words: Vec<String>) -> Result<ExitCode> {
    let settings = args.load()?;
    let pipeline = &settings.pipeline;
    let words: Vec<&str> = words.iter().flat_map(|w| w.split_whitespace()).collect();
    let matches = pipeline.dictionary().lookup(&words);
    let mut out = BufWriter::new(io::stdout().lock());
    if matches.is_empty() {
        writeln!(out, "no matches")?;
    }
    for m in matches {
        writeln!(out, "{} {} {} {}", pipeline.prefixes().render(&m.iri), m.kind, m.tier, m.label)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Cmd::Translate { pipeline, tree, trace, explain, query } => translate(pipeline, tree, trace, explain, query),
        Cmd::Repl { pipeline } => {
            let settings = pipeline.load()?;
            let stdin = io::stdin();
            repl::run(&settings, &mut stdin.lock(), &mut io::stdout())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Eval { pipeline, dataset, report } => eval(pipeline, dataset, report),
        Cmd::Dict { pipeline, words } => dict(pipeline, words),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
