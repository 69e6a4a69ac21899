use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

const CURE_QUESTION: &str = "ما علاج المرض الذي يسمى داء الملوك؟";

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn fixture(name: &str) -> String {
    fixtures().join(name).display().to_string()
}

fn arsparql(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arsparql"))
        .args(args)
        .env_remove("NLQ_CONFIG")
        .stdin(Stdio::null())
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn translate_cure() {
    let o = arsparql(&[
        "translate",
        "--ontology",
        &fixture("diseases.nt"),
        "--tree",
        &fixture("trees/cure.tree"),
        CURE_QUESTION,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("SELECT ?target WHERE {"));
    assert!(out.contains("?target :cures ?var ."));
    assert!(out.contains("?var :hasName \"داء الملوك\" ."));
}

#[test]
fn exit_codes() {
    let unmatched = arsparql(&[
        "translate",
        "--ontology",
        &fixture("diseases.nt"),
        "--tree",
        &fixture("trees/unmatched.tree"),
        "ما الأمراض التي تنتقل عبر الهواء؟",
    ]);
    assert_eq!(unmatched.status.code(), Some(2));
    assert!(stderr(&unmatched).contains("entity identification"));

    let empty =
        arsparql(&["translate", "--ontology", &fixture("diseases.nt"), "--tree", &fixture("trees/cure.tree"), ""]);
    assert_eq!(empty.status.code(), Some(1));
    assert_eq!(arsparql(&["translate", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(arsparql(&["translate", "--tree", &fixture("trees/cure.tree"), "x"]).status.code(), Some(1));
    assert_eq!(arsparql(&["--help"]).status.code(), Some(0));
    let missing = arsparql(&["dict", "--ontology", "/no/such/file.nt", "x"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("cannot read ontology file"));
}

#[test]
fn trace_json_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = arsparql(&[
            "translate",
            "--ontology",
            &fixture("diseases.nt"),
            "--tree",
            &fixture("trees/conjunction.tree"),
            "--trace",
            path.to_str().unwrap(),
            "ما الأمراض التي تصيب القلب و تسبب ارتفاع ضغط الدم؟",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (stdout(&o), fs::read_to_string(path).unwrap())
    };
    let (q1, t1) = run("a.json");
    let (q2, t2) = run("b.json");
    assert_eq!((q1, &t1), (q2, &t2));
    let v: serde_json::Value = serde_json::from_str(&t1).unwrap();
    assert_eq!(v["intermediate_triples"].as_array().unwrap().len(), 2);
    assert_eq!(v["chosen"].as_array().unwrap().len(), 2);
    assert!(v["failure"].is_null());
}

#[test]
fn failed_translation_still_writes_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let o = arsparql(&[
        "translate",
        "--ontology",
        &fixture("diseases.nt"),
        "--tree",
        &fixture("trees/superlative.tree"),
        "--trace",
        path.to_str().unwrap(),
        "ما أخطر الأمراض؟",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["failure"]["stage"], "SEMANTIC_ANALYSIS");
    assert_eq!(v["failure"]["code"], "UnsupportedModifier");
    assert_eq!(v["noun_phrases"].as_array().unwrap().len(), 1);
}

#[test]
fn config_file_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixtures().join("diseases.nt"), dir.path().join("onto.nt")).unwrap();
    fs::copy(fixtures().join("synonyms.tsv"), dir.path().join("syn.tsv")).unwrap();
    fs::write(dir.path().join("prefixes.toml"), "med = \"http://example.org/diseases#\"\n").unwrap();
    let config = dir.path().join("nlq.toml");
    fs::write(
        &config,
        "ontology = \"onto.nt\"\nsynonyms = \"syn.tsv\"\nprefixes = \"prefixes.toml\"\nchooser = \"batch\"\n",
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_arsparql"))
        .args(["dict", "الدواء"])
        .env("NLQ_CONFIG", &config)
        .stdin(Stdio::null())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("med:Cure CLASS SYNONYM"), "{}", stdout(&o));

    fs::write(&config, "ontology = \"onto.nt\"\nshoe_size = 9\n").unwrap();
    let bad =
        Command::new(env!("CARGO_BIN_EXE_arsparql")).args(["dict", "x"]).env("NLQ_CONFIG", &config).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn dict_rows() {
    let o = arsparql(&["dict", "--ontology", &fixture("diseases.nt"), "علاج"]);
    assert!(stdout(&o).lines().next().unwrap().starts_with(":Cure CLASS EXACT"));
    let o = arsparql(&["dict", "--ontology", &fixture("diseases.nt"), "يصيب"]);
    let rows: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.contains("OBJECT_PROPERTY")));
    let o = arsparql(&["dict", "--ontology", &fixture("diseases.nt"), "قطار"]);
    assert_eq!(stdout(&o).trim(), "no matches");
}

#[test]
fn parser_hook_supplies_tree() {
    let cmd = format!("cat > /dev/null; cat '{}'", fixture("trees/pancreas.tree"));
    let o = arsparql(&[
        "translate",
        "--ontology",
        &fixture("diseases.nt"),
        "--parser-cmd",
        &cmd,
        "ما المرض الذي يصيب البنكرياس؟",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("?target :infects :Pancreas ."));
    let failing = arsparql(&["translate", "--ontology", &fixture("diseases.nt"), "--parser-cmd", "exit 3", "ما المرض"]);
    assert_eq!(failing.status.code(), Some(1));
}

#[test]
fn eval_runs_with_stdin_closed() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = arsparql(&[
        "eval",
        "--ontology",
        &fixture("diseases.nt"),
        "--synonyms",
        &fixture("synonyms.tsv"),
        "--dataset",
        &fixture("diseases_gold.json"),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("precision"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["total"], 22);
    assert_eq!(v["correct"], v["generated"]);
}

#[test]
fn repl_over_pipes() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_arsparql"))
        .args(["repl", "--ontology", &fixture("geography.nt"), "--chooser", "interactive"])
        .env_remove("NLQ_CONFIG")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let script = format!("أذكر أسماء المدن في ولاية تكساس\n{}\n1\nexit\n", fixture("trees/cities.tree"));
    use std::io::Write;
    child.stdin.take().unwrap().write_all(script.as_bytes()).unwrap();
    let o = child.wait_with_output().unwrap();
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.contains("1. ") && out.contains("2. "), "{out}");
    assert!(out.contains("?target :isCityOf :Texas ."), "{out}");
}
