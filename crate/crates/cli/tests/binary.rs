use std::path::PathBuf;
use std::process::{Command, Output};

use ilrepair::demo;
use ilrepair::engine::SessionService;
use ilrepair::hypgen::RepairConfig;

fn repair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repair")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn run_with_gold_prints_the_dialogue() {
    let text = stdout(&repair(&["run", &data("figure.rec"), "--max-questions", "4"]));
    let expected = "\
Q1: Is your sentence mainly about someone being free? yes
Q2: Is your sentence a statement? yes
Q3: Is Tuesday afternoon the ninth the time of being free in your sentence? yes
Q4: Is it \"I\" who is being free in your sentence? yes
Result: ((sentence-type *state) (frame *free) (when ((frame *simple-time) (time-of-day afternoon) (day-of-week tuesday) (day 9))) (who ((frame *i))))
Paraphrase: I am free Tuesday afternoon the ninth.
Accuracy: 0.6667 -> 1.0000
";
    assert_eq!(text, expected);
}

#[test]
fn scripted_run_matches_the_service() {
    let text = stdout(&repair(&["run", &data("figure.rec"), "--answers", "y,y,n,y"]));
    let cli: Vec<String> = text
        .lines()
        .filter(|l| l.starts_with('Q'))
        .map(|l| l.split_once(": ").unwrap().1.to_string())
        .collect();

    let spec = demo::spec();
    let nets = demo::trained_networks(&spec);
    let service = SessionService::new(spec, nets, demo::glosses(), RepairConfig::default());
    let mut view = service.create(demo::FIGURE).unwrap();
    let script = [true, true, false, true];
    while let Some(q) = view.question.clone() {
        let yes = script.get(q.seq - 1).copied().unwrap_or(false);
        view = service.answer(view.id, yes, Some(q.seq)).unwrap();
    }
    let served: Vec<String> = view
        .transcript
        .iter()
        .map(|t| format!("{} {}", t.question, if t.answer { "yes" } else { "no" }))
        .collect();
    assert_eq!(cli, served);
    assert!(text.contains(&format!("Result: {}\n", view.ilt)));
}

#[test]
fn train_then_run_with_the_saved_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("nets.model");
    let out = repair(&["train", &data("synthetic.rec"), "--model-out", model.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("from 60 records"));
    let text = stdout(&repair(&["run", &data("figure.rec"), "--model", model.to_str().unwrap(), "--answers", "n"]));
    assert!(text.starts_with("Q1: "));
    assert!(text.contains("\nResult: "));
}

#[test]
fn synth_reproduces_the_bundled_corpus() {
    let text = stdout(&repair(&["synth"]));
    assert_eq!(text, demo::SYNTHETIC);
}

#[test]
fn eval_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("eval.tsv");
    let out = repair(&[
        "eval",
        &data("synthetic.rec"),
        "--budgets",
        "0,10",
        "--policies",
        "meta,td-td-td",
        "--out",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let tsv = std::fs::read_to_string(table).unwrap();
    let rows: Vec<&str> = tsv.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[1].starts_with("meta\t0\t"));
    assert!(rows[4].starts_with("td-td-td\t10\t"));
}

#[test]
fn bad_arguments_fail() {
    assert!(!repair(&["run", &data("figure.rec"), "--answers", "perhaps"]).status.success());
    assert!(!repair(&["run", "/nonexistent.rec"]).status.success());
    assert!(!repair(&["eval", &data("synthetic.rec"), "--policies", "td"]).status.success());
}
