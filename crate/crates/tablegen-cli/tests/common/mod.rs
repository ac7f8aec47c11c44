//! Shared fixture and process helpers for the CLI tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const KB: &str = concat!(
    r#"{"id":"cork","description":"cork is a town in ireland","properties":{"population":["119230"],"county":["cork county"]}}"#,
    "\n",
    r#"{"id":"galway","description":"galway is a town in ireland","properties":{"population":["72414"],"province":["connacht"]}}"#,
    "\n",
    r#"{"id":"dublin","description":"dublin is the largest town in ireland","properties":{"population":["506211"]}}"#,
    "\n",
    r#"{"id":"tolstoy","description":"russian novelist","properties":{"born":["1828"]}}"#,
    "\n",
);

pub const TABLES: &str = concat!(
    r#"{"id":"t1","caption":"towns in ireland by population","pageTitle":"Ireland","headings":["Town","Population","County"],"rows":[[{"e":"cork"},{"t":"119230"},{"t":"Cork"}],[{"e":"dublin"},{"t":"506211"},{"t":"Dublin"}]]}"#,
    "\n",
    r#"{"id":"t2","caption":"irish towns by province","pageTitle":"Ireland","headings":["Town","Province"],"rows":[[{"e":"galway"},{"t":"Connacht"}],[{"e":"cork"},{"t":"Munster"}]]}"#,
    "\n",
    r#"{"id":"t3","caption":"irish towns by area","pageTitle":"Ireland","headings":["Town","Area"],"rows":[[{"e":"dublin"},{"t":"115"}],[{"e":"galway"},{"t":"54"}]]}"#,
    "\n",
);

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tablegen")
}

pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn assert_code(out: &Output, want: i32) {
    let got = out.status.code().expect("no signal");
    assert_eq!(
        got,
        want,
        "expected exit {want}, got {got}\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
}

pub fn write_fixture(dir: &Path) {
    std::fs::write(dir.join("kb.jsonl"), KB).unwrap();
    std::fs::write(dir.join("tables.jsonl"), TABLES).unwrap();
}

/// Builds the bundle and trains all four matcher models with short runs.
pub fn prepare_workspace(dir: &Path) -> (PathBuf, PathBuf) {
    write_fixture(dir);
    let bundle = dir.join("bundle");
    let models = dir.join("models");
    std::fs::create_dir_all(&models).unwrap();
    let out = run_in(
        dir,
        &["build", "--tables", "tables.jsonl", "--kb", "kb.jsonl", "--out", "bundle"],
    );
    assert_code(&out, 0);
    let jobs: [(&str, Option<&str>, &str); 4] = [
        ("schema-matcher", None, "schema-label.model.json"),
        ("entity-matcher", Some("description"), "entity-desc.model.json"),
        ("entity-matcher", Some("properties"), "entity-props.model.json"),
        ("entity-matcher", Some("all"), "entity-combined.model.json"),
    ];
    for (task, repr, file) in jobs {
        let target = format!("models/{file}");
        let mut args = vec![
            "train",
            "--tables",
            "tables.jsonl",
            "--kb",
            "kb.jsonl",
            "--task",
            task,
            "--out",
            &target,
            "--set",
            "epochs=3",
        ];
        if let Some(r) = repr {
            args.extend(["--repr", r]);
        }
        let out = run_in(dir, &args);
        assert_code(&out, 0);
    }
    (bundle, models)
}

pub fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

pub fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}
