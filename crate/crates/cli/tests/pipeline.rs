use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn abd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abd")).args(args).output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn generate_verify_score_report() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("full.jsonl");
    let ds_s = ds.to_str().unwrap();
    ok(&abd(&["generate", "--scenario", "full", "--theory", "T1", "--seed", "5", "--count", "2", "--out", ds_s]));
    assert!(dir.path().join("full.jsonl.log.jsonl").exists());

    ok(&abd(&["verify", "--dataset", ds_s, "--oracle"]));

    let prompts = dir.path().join("prompts.jsonl");
    ok(&abd(&["prompt", "--dataset", ds_s, "--out", prompts.to_str().unwrap()]));
    let p = lines(&prompts);
    assert_eq!(p.len(), 2);
    assert!(p[0]["user_prompt"].as_str().unwrap().contains("Closed World Assumption"));
    assert!(p[0]["system_prompt"].as_str().unwrap().contains("first-order logic"));

    // one gold answer, one unparseable, one trivially true
    let records = lines(&ds);
    let inst = &records[1];
    let id = inst["id"].as_str().unwrap();
    let gold = inst["gold"]["formula"].as_str().unwrap();
    let answer = |formula: &str| serde_json::json!({"formula": formula, "description": "d"}).to_string();
    let preds = [
        serde_json::json!({"instance_id": id, "model_id": "m1", "output": answer(gold)}),
        serde_json::json!({"instance_id": id, "model_id": "m2", "output": "I think (P x)"}),
        serde_json::json!({"instance_id": id, "model_id": "m3", "output": answer("(or (P x) (not (P x)))")}),
    ];
    let pred_path = dir.path().join("preds.jsonl");
    std::fs::write(&pred_path, preds.iter().map(|v| v.to_string() + "\n").collect::<String>()).unwrap();
    let scores = dir.path().join("scores.jsonl");
    ok(&abd(&[
        "score",
        "--dataset",
        ds_s,
        "--predictions",
        pred_path.to_str().unwrap(),
        "--out",
        scores.to_str().unwrap(),
        "--oracle",
    ]));
    let s = lines(&scores);
    assert_eq!(s.len(), 3);
    assert_eq!(s[0]["train_valid"], true);
    assert_eq!(s[0]["gold_margin"], 0);
    assert_eq!(s[1]["failure"]["class"], "parse_error");
    assert_eq!(s[2]["train_valid"], true);

    let report = dir.path().join("report.json");
    let out = abd(&["report", "--scores", scores.to_str().unwrap(), "--dataset", ds_s, "--out", report.to_str().unwrap()]);
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Failure classes"));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let breakdown = r["failure_breakdown"].as_array().unwrap();
    let m1 = breakdown.iter().find(|row| row["model"] == "m1").unwrap();
    // two instances, one prediction each: half missing
    assert_eq!(m1["expected"], 2);
    assert_eq!(m1["missing_pct"], 50.0);
}

#[test]
fn verify_flags_tampered_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("d.jsonl");
    let ds_s = ds.to_str().unwrap();
    ok(&abd(&["generate", "--scenario", "full", "--theory", "T4", "--seed", "9", "--count", "1", "--holdouts", "0", "--out", ds_s]));
    let text = std::fs::read_to_string(&ds).unwrap();
    let mut out_lines: Vec<String> = text.lines().map(String::from).collect();
    let mut rec: Value = serde_json::from_str(&out_lines[1]).unwrap();
    let c = rec["train_gold_cost"][0].as_u64().unwrap();
    rec["train_gold_cost"][0] = (c + 1).into();
    out_lines[1] = rec.to_string();
    std::fs::write(&ds, out_lines.join("\n") + "\n").unwrap();
    let out = abd(&["verify", "--dataset", ds_s]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("gold_cache"));
}

#[test]
fn generation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    // holdout seeds mix in the output path, so generate both under the same name
    for target in [&a, &b] {
        let tmp = dir.path().join("same.jsonl");
        ok(&abd(&["generate", "--scenario", "partial", "--theory", "T5", "--seed", "3", "--count", "1", "--out", tmp.to_str().unwrap()]));
        std::fs::rename(&tmp, target).unwrap();
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn bad_arguments_fail() {
    assert!(!abd(&["generate", "--scenario", "full", "--theory", "T6", "--out", "/dev/null"]).status.success());
    assert!(!abd(&["verify", "--dataset", "/nonexistent/file.jsonl"]).status.success());
}
