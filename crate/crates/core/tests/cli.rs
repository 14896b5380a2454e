use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn rooms(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rooms")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn manifest(dir: &Path, name: &str, agent: &str, capacity: usize, out: &str) -> PathBuf {
    let path = dir.join(name);
    let text = format!(
        "env_config = {:?}\ntrain_config = {:?}\nagent = {agent:?}\ncapacity = {capacity}\nseeds = [0]\noutput_dir = {out:?}\n",
        configs().join("two_room_env.toml"),
        configs().join("smoke_train.toml"),
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = rooms(&["train", "--config", s(&dir.path().join("missing.toml"))]);
    assert_eq!(code, 2, "{err}");

    let bad_ref = dir.path().join("bad_ref.toml");
    std::fs::write(
        &bad_ref,
        "env_config = \"nope.toml\"\ntrain_config = \"nope.toml\"\nagent = \"humemai\"\ncapacity = 4\noutput_dir = \"out\"\n",
    )
    .unwrap();
    let (code, err) = rooms(&["train", "--config", s(&bad_ref)]);
    assert_eq!(code, 2);
    assert!(err.contains("does not exist"), "{err}");

    let m = manifest(dir.path(), "m.toml", "humemai", 4, "out");
    assert_eq!(rooms(&["train", "--config", s(&m), "--agent", "humemai-x"]).0, 2);
    assert_eq!(rooms(&["train", "--config", s(&m), "--capacity", "0"]).0, 2);
    assert_eq!(rooms(&["frobnicate"]).0, 2);
    assert_eq!(rooms(&["--help"]).0, 0);
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn smoke_train_is_fast_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path(), "smoke.toml", "humemai", 6, "run");
    let start = Instant::now();
    let (code, err) = rooms(&["train", "--config", s(&m)]);
    assert_eq!(code, 0, "{err}");
    assert!(start.elapsed() < Duration::from_secs(60));

    let seed_dir = dir.path().join("run/seed-0");
    for f in [
        "metrics.jsonl",
        "policy.json",
        "mm.ckpt.json",
        "explore.ckpt.json",
        "eval.json",
        "eval_attention.csv",
        "eval_memory.dot",
        "phase1_eval.json",
    ] {
        assert!(seed_dir.join(f).is_file(), "missing {f}");
    }
    let metrics = std::fs::read_to_string(seed_dir.join("metrics.jsonl")).unwrap();
    let rows: Vec<Value> = metrics.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 10);
    for (i, r) in rows.iter().enumerate() {
        let obj = r.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(keys, ["episode", "epsilon", "eval_reward", "loss", "phase", "train_reward"]);
        assert_eq!(r["phase"], if i < 5 { "mm" } else { "explore" });
        assert!(r["train_reward"].as_f64().unwrap() >= 0.0);
        assert!(r["loss"].is_null() || r["loss"].as_f64().unwrap() >= 0.0);
    }
    let report = read_json(&seed_dir.join("eval.json"));
    let rewards: Vec<f64> = report["episode_rewards"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (ep, steps) in report["step_rewards"].as_array().unwrap().iter().enumerate() {
        let sum: f64 = steps.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
        assert_eq!(sum, rewards[ep]);
    }
    let summary = read_json(&dir.path().join("run/summary.json"));
    assert_eq!(summary["per_seed"][0], report["mean"]);

    // same manifest and seed, fresh output directory
    let (code, _) = rooms(&["train", "--config", s(&m), "--out", s(&dir.path().join("again"))]);
    assert_eq!(code, 0);
    let again = std::fs::read_to_string(dir.path().join("again/seed-0/metrics.jsonl")).unwrap();
    assert_eq!(again, metrics);
    assert_eq!(
        std::fs::read(dir.path().join("again/seed-0/mm.ckpt.json")).unwrap(),
        std::fs::read(seed_dir.join("mm.ckpt.json")).unwrap()
    );
}

#[test]
fn eval_writes_labeled_reports() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path(), "smoke.toml", "humemai", 6, "run");
    assert_eq!(rooms(&["train", "--config", s(&m)]).0, 0);
    let policy = dir.path().join("run/seed-0/policy.json");
    let env = configs().join("two_room_env.toml");
    let out = dir.path().join("eval");
    for (label, seed) in [("train-seed", "0"), ("fresh", "12345")] {
        let (code, err) = rooms(&["eval", "--checkpoint", s(&policy), "--config", s(&env), "--seed", seed, "--label", label, "--out", s(&out)]);
        assert_eq!(code, 0, "{err}");
    }
    let a = read_json(&out.join("train-seed.json"));
    let b = read_json(&out.join("fresh.json"));
    assert_eq!(a["label"], "train-seed");
    assert_eq!(b["label"], "fresh");
    assert_eq!(a["seeds"][0], 0);
    assert_eq!(b["seeds"][0], 12345);

    let csv = std::fs::read_to_string(out.join("fresh_attention.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("episode,step,policy,row,short,episodic,semantic"));
    let mut n = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 7);
        assert!(["mm", "explore"].contains(&cols[2]));
        assert!(["short", "episodic", "semantic"].contains(&cols[3]));
        let sum: f64 = cols[4..].iter().map(|c| c.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() <= 1e-9, "{line}");
        n += 1;
    }
    assert!(n > 0);

    let dot = std::fs::read_to_string(out.join("fresh_memory.dot")).unwrap();
    dot::parse(&dot).unwrap_or_else(|e| panic!("{e}\n{dot}"));

    // A checkpoint trained on two rooms does not fit the eight-room vocabulary.
    let (code, err) = rooms(&[
        "eval",
        "--checkpoint",
        s(&policy),
        "--config",
        s(&configs().join("default_env.toml")),
        "--seed",
        "0",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn table1_two_cells() {
    let dir = tempfile::tempdir().unwrap();
    let h = manifest(dir.path(), "h.toml", "humemai", 6, "cells/h");
    let b = manifest(dir.path(), "b.toml", "baseline", 6, "cells/b");
    let out = dir.path().join("table");
    let (code, err) = rooms(&["table1", "--config", s(&h), s(&b), "--seed", "3", "--out", s(&out)]);
    assert_eq!(code, 0, "{err}");
    let md = std::fs::read_to_string(out.join("table1.md")).unwrap();
    let rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| 6 ")).collect();
    assert_eq!(rows.len(), 2, "{md}");
    assert!(md.lines().next().unwrap().contains("Phase 1"));
    assert!(rows[1].contains("N/A"));

    let csv = std::fs::read_to_string(out.join("table1.csv")).unwrap();
    let data: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(data.len(), 2);
    for (row, cell) in data.iter().zip(["humemai-6", "baseline-6"]) {
        let summary = read_json(&out.join(cell).join("summary.json"));
        let per_seed: Vec<f64> = summary["per_seed"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        let mean = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
        let std = (per_seed.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / per_seed.len() as f64).sqrt();
        assert!((row[4].parse::<f64>().unwrap() - mean).abs() < 1e-9);
        assert!((row[5].parse::<f64>().unwrap() - std).abs() < 1e-9);
        assert_eq!(row[7], "ok");
    }
}

#[test]
fn table1_flags_failed_cells() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "not a directory").unwrap();
    let ok = manifest(dir.path(), "ok.toml", "baseline", 4, "cells/ok");
    let bad = manifest(dir.path(), "bad.toml", "humemai", 4, s(&blocker.join("cell")));
    let (code, _) = rooms(&["table1", "--config", s(&ok), s(&bad)]);
    assert_eq!(code, 3);
    let md = std::fs::read_to_string(dir.path().join("cells/table1.md")).unwrap();
    assert!(md.contains("FAILED"), "{md}");
    let csv = std::fs::read_to_string(dir.path().join("cells/table1.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",ok"), "{csv}");
    assert!(csv.lines().nth(2).unwrap().contains("failed"), "{csv}");
}

/// Recursive-descent parser for the DOT language (graph, node, edge and
/// attribute statements; IDs as identifiers, numerals or quoted strings).
mod dot {
    #[derive(Debug, PartialEq, Clone)]
    enum Tok {
        Id(String),
        Sym(char),
        Arrow,
    }

    fn lex(src: &str) -> Result<Vec<Tok>, String> {
        let c: Vec<char> = src.chars().collect();
        let mut i = 0;
        let mut out = Vec::new();
        while i < c.len() {
            let ch = c[i];
            if ch.is_whitespace() {
                i += 1;
            } else if ch == '-' && c.get(i + 1) == Some(&'>') {
                out.push(Tok::Arrow);
                i += 2;
            } else if "{}[];,=".contains(ch) {
                out.push(Tok::Sym(ch));
                i += 1;
            } else if ch == '"' {
                let mut s = String::new();
                i += 1;
                loop {
                    match c.get(i) {
                        None => return Err("unterminated string".into()),
                        Some('"') => break,
                        Some('\\') => {
                            s.push(*c.get(i + 1).ok_or("dangling escape")?);
                            i += 2;
                        }
                        Some(&x) => {
                            s.push(x);
                            i += 1;
                        }
                    }
                }
                i += 1;
                out.push(Tok::Id(s));
            } else if ch.is_alphanumeric() || ch == '_' || ch == '.' || ch == '-' {
                let start = i;
                while i < c.len() && (c[i].is_alphanumeric() || c[i] == '_' || c[i] == '.') {
                    i += 1;
                }
                if i == start {
                    i += 1;
                }
                out.push(Tok::Id(c[start..i].iter().collect()));
            } else {
                return Err(format!("unexpected character {ch:?}"));
            }
        }
        Ok(out)
    }

    struct P {
        t: Vec<Tok>,
        i: usize,
    }

    impl P {
        fn peek(&self) -> Option<&Tok> {
            self.t.get(self.i)
        }
        fn eat(&mut self, tok: &Tok) -> bool {
            if self.peek() == Some(tok) {
                self.i += 1;
                true
            } else {
                false
            }
        }
        fn id(&mut self) -> Result<String, String> {
            match self.t.get(self.i).cloned() {
                Some(Tok::Id(s)) => {
                    self.i += 1;
                    Ok(s)
                }
                other => Err(format!("expected ID, found {other:?}")),
            }
        }
        fn attr_list(&mut self) -> Result<(), String> {
            while self.eat(&Tok::Sym('[')) {
                while !self.eat(&Tok::Sym(']')) {
                    self.id()?;
                    if !self.eat(&Tok::Sym('=')) {
                        return Err("expected = in attribute".into());
                    }
                    self.id()?;
                    let _ = self.eat(&Tok::Sym(',')) || self.eat(&Tok::Sym(';'));
                }
            }
            Ok(())
        }
        fn stmt(&mut self) -> Result<(), String> {
            let first = self.id()?;
            if ["graph", "node", "edge"].contains(&first.as_str()) && self.peek() == Some(&Tok::Sym('[')) {
                return self.attr_list();
            }
            if self.eat(&Tok::Sym('=')) {
                self.id()?;
                return Ok(());
            }
            while self.eat(&Tok::Arrow) {
                self.id()?;
            }
            self.attr_list()
        }
    }

    pub fn parse(src: &str) -> Result<(), String> {
        let mut p = P { t: lex(src)?, i: 0 };
        if let Some(Tok::Id(s)) = p.peek() {
            if s == "strict" {
                p.i += 1;
            }
        }
        if p.id()? != "digraph" {
            return Err("expected digraph".into());
        }
        if let Some(Tok::Id(_)) = p.peek() {
            p.i += 1;
        }
        if !p.eat(&Tok::Sym('{')) {
            return Err("expected {".into());
        }
        while !p.eat(&Tok::Sym('}')) {
            if p.peek().is_none() {
                return Err("unexpected end of input".into());
            }
            p.stmt()?;
            p.eat(&Tok::Sym(';'));
        }
        if p.i != p.t.len() {
            return Err("trailing tokens".into());
        }
        Ok(())
    }

    #[test]
    fn parser_rejects_malformed_graphs() {
        assert!(parse("digraph { a -> b [label=\"x\"]; }").is_ok());
        assert!(parse("digraph { a -> ; }").is_err());
        assert!(parse("digraph { a [label=] }").is_err());
        assert!(parse("digraph { \"a }").is_err());
        assert!(parse("graph { a }").is_err());
    }
}
