use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::io::Write;

const CHAIN: &str = r#"{"agents":["a","b"],"worlds":3,"edges":{"a":[[0,1]],"b":[[1,2]]},"props":{"p0":[0,2]}}"#;
const ONE2: &str = r#"{"agents":["a"],"worlds":2,"edges":{"a":[[0,1]]},"props":{"p0":[0]}}"#;
const TWIN: &str = r#"{"agents":["a","b"],"worlds":2,"edges":{"a":[[0,1]],"b":[[0,1]]},"props":{"p0":[0]}}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_epistemia"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "failed: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("JSON output")
}

fn put(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn validate_accepts_and_rejects() {
    let d = tempfile::tempdir().unwrap();
    let good = put(d.path(), "good.json", CHAIN);
    assert_eq!(json(&run(&["validate", "--in", &good]))["worlds"], 3);
    let bad = put(d.path(), "bad.json", r#"{"agents":["a"],"worlds":3,"edges":{"a":[[0,1],[1,2]]},"props":{}}"#);
    let o = run(&["validate", "--in", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("missing (0,2)"));
    assert!(run(&["validate", "--in", &bad, "--close"]).status.success());
}

#[test]
fn missing_file_is_an_error() {
    let o = run(&["expand", "--in", "/nonexistent/x.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
}

#[test]
fn expand_grand_coalition() {
    let d = tempfile::tempdir().unwrap();
    let f = put(d.path(), "m.json", CHAIN);
    let v = json(&run(&["expand", "--in", &f, "--coalition", "a,b"]));
    assert_eq!(v["relations"][0]["classes"], serde_json::json!([[0, 1, 2]]));
}

#[test]
fn model_check_formula_and_file() {
    let d = tempfile::tempdir().unwrap();
    let f = put(d.path(), "m.json", CHAIN);
    let v = json(&run(&["mc", "--in", &f, "--formula", "[a]p0"]));
    assert_eq!(v["extension"], serde_json::json!([2]));
    let ff = put(d.path(), "phi.txt", "<a,b>~p0\n");
    let v = json(&run(&["mc", "--in", &f, "--formula-file", &ff, "--world", "0"]));
    assert_eq!(v["holds"], true);
    assert!(!run(&["mc", "--in", &f, "--formula", "[c]p0"]).status.success());
}

#[test]
fn bisim_prints_verdict_and_table() {
    let d = tempfile::tempdir().unwrap();
    let f = put(d.path(), "m.json", CHAIN);
    let o = run(&["bisim", "--left", &f, "--right", &f, "--worlds", "0,2"]);
    let text = stdout(&o);
    assert!(text.starts_with("VERDICT not-bisimilar (0,2)"));
    assert!(text.contains("block\tleft\tright"));
    // At depth 0 only atoms count.
    let o = run(&["bisim", "--left", &f, "--right", &f, "--worlds", "0,2", "--l", "0", "--mode", "s5"]);
    assert!(stdout(&o).starts_with("VERDICT bisimilar"));
}

#[test]
fn cover_writes_a_checked_covering() {
    let d = tempfile::tempdir().unwrap();
    let f = put(d.path(), "m.json", CHAIN);
    let out = d.path().join("c.json");
    let o = run(&["cover", "--in", &f, "--base", "0", "--edges", "spanning", "--copies", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let file = epistemia::io::StructureFile::parse(&text).unwrap();
    let block = file.covering.clone().expect("covering block");
    assert_eq!(block.map.len(), file.worlds);
    let cm = epistemia::bisim::CoveringMap {
        source: file.to_ck().unwrap(),
        target: epistemia::io::StructureFile::parse(CHAIN).unwrap().to_ck().unwrap(),
        map: block.map,
    };
    assert!(epistemia::bisim::check_covering(&cm).is_ok());
    // A covering file is itself a valid structure.
    assert!(run(&["validate", "--in", out.to_str().unwrap()]).status.success());
}

#[test]
fn unfold_has_no_short_cycles() {
    let d = tempfile::tempdir().unwrap();
    let f = put(d.path(), "m.json", CHAIN);
    let out = d.path().join("u.json");
    assert!(run(&["unfold", "--in", &f, "--depth", "3", "--out", out.to_str().unwrap()]).status.success());
    let v = json(&run(&["analyze", "acyclicity", "--in", out.to_str().unwrap(), "--n", "3"]));
    assert_eq!(v["acyclic"], true);
}

#[test]
fn acyclicity_reports_witness() {
    let d = tempfile::tempdir().unwrap();
    let f = put(d.path(), "twin.json", TWIN);
    let v = json(&run(&["analyze", "acyclicity", "--in", &f, "--n", "2"]));
    assert_eq!(v["acyclic"], false);
    assert_eq!(v["witness"].as_array().unwrap().len(), 2);
}

#[test]
fn richness_and_freeness() {
    let d = tempfile::tempdir().unwrap();
    let f = put(d.path(), "one2.json", ONE2);
    let c = d.path().join("c.json");
    assert!(run(&["cover", "--in", &f, "--copies", "2", "--out", c.to_str().unwrap()]).status.success());
    let c = c.to_str().unwrap();
    let v = json(&run(&["analyze", "richness", "--in", c, "--k", "4"]));
    assert_eq!(v["least_multiplicity"], 4);
    assert_eq!(v["k_rich"], true);
    let v = json(&run(&["analyze", "freeness", "--in", c, "--m", "2", "--k", "2"]));
    assert_eq!(v["holds"], true);
    assert!(v["counterexample"].is_null());
}

#[test]
fn dual_lists_hyperedges() {
    let d = tempfile::tempdir().unwrap();
    let f = put(d.path(), "m.json", CHAIN);
    let v = json(&run(&["dual", "--in", &f]));
    assert_eq!(v["hyperedges"].as_array().unwrap().len(), 3);
    assert_eq!(v["vertices"][7]["coalition"], "a,b");
}

#[test]
fn witness_is_bisimilar_and_free() {
    let d = tempfile::tempdir().unwrap();
    let f = put(d.path(), "one2.json", ONE2);
    let c = d.path().join("c.json");
    assert!(run(&["cover", "--in", &f, "--copies", "2", "--out", c.to_str().unwrap()]).status.success());
    let v = json(&run(&["witness", "--in", c.to_str().unwrap(), "--v", "0", "--zs", "0", "--z0", "0", "--gamma", "a", "--m", "2"]));
    let w = v["witness"].as_u64().expect("a witness exists");
    assert_ne!(w, 0);
}

#[test]
fn ef_oracle_and_upgrade() {
    let d = tempfile::tempdir().unwrap();
    let f = put(d.path(), "one2.json", ONE2);
    let c = d.path().join("c.json");
    assert!(run(&["cover", "--in", &f, "--copies", "2", "--out", c.to_str().unwrap()]).status.success());
    let c = c.to_str().unwrap();
    let v = json(&run(&["ef-oracle", "--left", c, "--right", &f, "--q", "2", "--worlds", "0,0"]));
    assert_eq!(v["duplicator_wins"], false);
    let report = d.path().join("r.json");
    let v = json(&run(&["upgrade", "--left", c, "--right", c, "--q", "1", "--worlds", "0,4", "--report", report.to_str().unwrap()]));
    assert_eq!(v["confirmed"], true);
    assert_eq!(v["fo_equivalent"], true);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r["report"]["schedules"]["ell"].is_array());
    assert!(r["report"]["replay"]["sample_transcript"].is_array());
    // The base is only 1-rich.
    assert_eq!(run(&["upgrade", "--left", c, "--right", &f, "--q", "1"]).status.code(), Some(2));
}

#[test]
fn gen_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let spec = put(d.path(), "spec.json", r#"{"seed":3,"count":4,"worlds":[2,3],"agents":[1,2],"density":0.5,"pipeline":[{"step":"cover","edges":"spanning","copies":0}]}"#);
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert!(run(&["gen", "--spec", &spec, "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["gen", "--spec", &spec, "--out", b.to_str().unwrap()]).status.success());
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 8);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap());
    }
}

#[test]
fn gen_singletons() {
    let d = tempfile::tempdir().unwrap();
    let spec = put(d.path(), "spec.json", r#"{"count":3,"worlds":[1,1],"agents":[1,1],"density":0.5}"#);
    let out = d.path().join("o");
    assert!(run(&["gen", "--spec", &spec, "--out", out.to_str().unwrap()]).status.success());
    for e in std::fs::read_dir(&out).unwrap() {
        let f = epistemia::io::read_structure(e.unwrap().path().to_str().unwrap()).unwrap();
        assert_eq!(f.worlds, 1);
    }
}

#[test]
fn suite_on_empty_corpus_passes_vacuously() {
    let d = tempfile::tempdir().unwrap();
    let spec = put(d.path(), "s.json", r#"{"seed":1,"corpus":{"count":0,"worlds":[2,3],"agents":[1,2],"density":0.5,"named":false},"criteria":[3,5,6,7,8,9,10,11]}"#);
    let junit = d.path().join("j.xml");
    let o = run(&["suite", "--spec", &spec, "--junit", junit.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning: corpus is empty"));
    let xml = std::fs::read_to_string(&junit).unwrap();
    assert!(xml.contains("<testsuite"));
    assert_eq!(xml.matches("<testcase").count(), 8);
}

#[test]
fn suite_rejects_malformed_spec() {
    let d = tempfile::tempdir().unwrap();
    let spec = put(d.path(), "s.json", r#"{"seed":"zero"}"#);
    let o = run(&["suite", "--spec", &spec]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot parse suite spec"));
}

#[test]
fn suite_single_criterion_report() {
    let d = tempfile::tempdir().unwrap();
    let report = d.path().join("r.json");
    let o = run(&["suite", "--criteria", "1", "--report", report.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("[PASS] C1"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["criteria"][0]["id"], 1);
}

fn repl(left: &str, right: &str, worlds: &str, input: &str, transcript: &Path) -> String {
    let mut child = bin()
        .args(["repl", "--left", left, "--right", right, "--worlds", worlds, "--rounds", "2", "--transcript", transcript.to_str().unwrap()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    std::fs::read_to_string(transcript).unwrap()
}

#[test]
fn repl_quit_gives_empty_transcript() {
    let d = tempfile::tempdir().unwrap();
    let f = put(d.path(), "m.json", CHAIN);
    assert_eq!(repl(&f, &f, "0,0", "quit\n", &d.path().join("t.txt")), "");
}

#[test]
fn repl_engine_survives_on_covering() {
    let d = tempfile::tempdir().unwrap();
    let f = put(d.path(), "m.json", CHAIN);
    let c = d.path().join("c.json");
    assert!(run(&["cover", "--in", &f, "--out", c.to_str().unwrap()]).status.success());
    let t = repl(&f, c.to_str().unwrap(), "0,0", "left a 1\nleft b 2\n", &d.path().join("t.txt"));
    assert!(t.ends_with("engine survives all 2 round(s)\n"), "{t}");
    assert_eq!(t.lines().count(), 3);
}

#[test]
fn repl_announces_atomic_mismatch() {
    let d = tempfile::tempdir().unwrap();
    let f = put(d.path(), "m.json", CHAIN);
    let t = repl(&f, &f, "0,1", "", &d.path().join("t.txt"));
    assert!(t.contains("engine loses"));
}

#[test]
fn threads_variable_is_checked() {
    let o = bin().env("EPISTEMIA_THREADS", "0").args(["suite", "--criteria", "1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().env("EPISTEMIA_THREADS", "1").args(["suite", "--criteria", "1"]).output().unwrap();
    assert!(o.status.success());
}
