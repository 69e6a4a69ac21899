//! Configuration: command-line flags over an optional TOML file.

use std::fs;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use anyhow::{bail, Context, Result};
use arsparql::artext::{StemRules, StopWordList, TextProcessor};
use arsparql::ontostore::{LangFilter, SynonymLexicon};
use arsparql::pipeline::{Pipeline, PipelineConfig};
use arsparql::sparqlgen::WordList;
use arsparql::vocab::PrefixMap;
use clap::{Args, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChooserMode {
    Batch,
    Interactive,
}

/// Flags shared by every subcommand. Each may also come from the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Ontology in N-Triples (with optional `@prefix` lines).
    #[arg(long, value_name = "FILE")]
    pub ontology: Option<PathBuf>,
    /// Synonyms, one `word<TAB>syn1,syn2` group per line.
    #[arg(long, value_name = "FILE")]
    pub synonyms: Option<PathBuf>,
    /// Stop-word list replacing the bundled one.
    #[arg(long, value_name = "FILE")]
    pub stopwords: Option<PathBuf>,
    /// Question-word list replacing the bundled one.
    #[arg(long, value_name = "FILE")]
    pub qwords: Option<PathBuf>,
    /// Order-word list replacing the bundled one.
    #[arg(long, value_name = "FILE")]
    pub owords: Option<PathBuf>,
    /// Label languages to index, e.g. `ar,untagged`.
    #[arg(long, value_name = "TAGS")]
    pub lang: Option<String>,
    /// TOML table of extra prefixes (`name = "namespace"`) for output.
    #[arg(long, value_name = "FILE")]
    pub prefixes: Option<PathBuf>,
    /// Defaults to interactive on a terminal and batch otherwise.
    #[arg(long, value_enum)]
    pub chooser: Option<ChooserMode>,
    /// Command that reads a question on stdin and prints its bracketed parse.
    #[arg(long, value_name = "CMD")]
    pub parser_cmd: Option<String>,
    /// Config file; NLQ_CONFIG is used when absent.
    #[arg(long, env = "NLQ_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    ontology: Option<PathBuf>,
    synonyms: Option<PathBuf>,
    stopwords: Option<PathBuf>,
    qwords: Option<PathBuf>,
    owords: Option<PathBuf>,
    lang: Option<String>,
    prefixes: Option<PathBuf>,
    chooser: Option<ChooserMode>,
    parser_cmd: Option<String>,
}

/// Everything resolved and loaded.
pub struct Settings {
    pub pipeline: Pipeline,
    pub chooser: ChooserMode,
    pub parser_cmd: Option<String>,
}

fn read(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {what} file {}", path.display()))
}

impl PipelineArgs {
    /// Fills unset flags from the config file. Relative paths in the file
    /// are taken from the file's directory.
    fn merged(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let file: FileConfig =
            toml::from_str(&read(&path, "config")?).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let rel = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });
        self.ontology = self.ontology.or(rel(file.ontology));
        self.synonyms = self.synonyms.or(rel(file.synonyms));
        self.stopwords = self.stopwords.or(rel(file.stopwords));
        self.qwords = self.qwords.or(rel(file.qwords));
        self.owords = self.owords.or(rel(file.owords));
        self.prefixes = self.prefixes.or(rel(file.prefixes));
        self.lang = self.lang.or(file.lang);
        self.chooser = self.chooser.or(file.chooser);
        self.parser_cmd = self.parser_cmd.or(file.parser_cmd);
        Ok(self)
    }

    pub fn load(self) -> Result<Settings> {
        let args = self.merged()?;
        let Some(ontology) = &args.ontology else { bail!("no ontology given (use --ontology or a config file)") };

        let stopwords = match &args.stopwords {
            Some(p) => StopWordList::parse(&read(p, "stop-word")?),
            None => StopWordList::bundled(),
        };
        let text = TextProcessor::new(stopwords, StemRules::default());
        let mut config = PipelineConfig { text, ..PipelineConfig::default() };
        if let Some(p) = &args.qwords {
            config.question_words = WordList::parse(&read(p, "question-word")?);
        }
        if let Some(p) = &args.owords {
            config.order_words = WordList::parse(&read(p, "order-word")?);
        }
        if let Some(spec) = &args.lang {
            config.lang_filter = LangFilter::parse(spec);
        }
        if let Some(p) = &args.synonyms {
            config.synonyms = SynonymLexicon::parse(&read(p, "synonym")?, &config.text)
                .with_context(|| format!("invalid synonym file {}", p.display()))?;
        }
        if let Some(p) = &args.prefixes {
            let table: std::collections::BTreeMap<String, String> =
                toml::from_str(&read(p, "prefix")?).with_context(|| format!("invalid prefix file {}", p.display()))?;
            let mut prefixes = PrefixMap::empty();
            for (name, ns) in table {
                prefixes.insert(name, ns);
            }
            config.prefixes = prefixes;
        }
        let pipeline = Pipeline::from_ntriples(&read(ontology, "ontology")?, config)
            .with_context(|| format!("invalid ontology {}", ontology.display()))?;
        let chooser = args.chooser.unwrap_or(if std::io::stdin().is_terminal() {
            ChooserMode::Interactive
        } else {
            ChooserMode::Batch
        });
        Ok(Settings { pipeline, chooser, parser_cmd: args.parser_cmd })
    }
}

/// Runs the external parser hook: the question goes to its stdin, the
/// bracketed tree comes back on stdout.
pub fn run_parser(cmd: &str, question: &str) -> Result<String> {
    use std::io::Write;
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .with_context(|| format!("cannot start parser `{cmd}`"))?;
    child.stdin.take().expect("piped stdin").write_all(question.as_bytes())?;
    let out = child.wait_with_output()?;
    if !out.status.success() {
        bail!("parser `{cmd}` exited with {}", out.status);
    }
    let tree = String::from_utf8(out.stdout).context("parser output is not UTF-8")?;
    if tree.trim().is_empty() {
        bail!("parser `{cmd}` printed nothing");
    }
    Ok(tree)
}
