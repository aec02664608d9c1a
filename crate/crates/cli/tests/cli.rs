mod support;

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::OnceLock;

use serde_json::Value;
use support::{bin, run_every_command, teamtype_in, try_teamtype_in};

/// One full run of every command, shared by the tests below.
fn workspace() -> &'static (PathBuf, BTreeMap<String, Vec<u8>>) {
    static RUN: OnceLock<(PathBuf, BTreeMap<String, Vec<u8>>)> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap().keep();
        let artifacts = run_every_command(&dir);
        (dir, artifacts)
    })
}

fn json(name: &str) -> Value {
    let bytes = &workspace().1[name];
    serde_json::from_slice(bytes).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn dir() -> &'static Path {
    &workspace().0
}

#[test]
fn cluster_reports_k_and_the_bic_table() {
    let model = json("generated-model.json");
    assert_eq!(model["k"], 2);
    let table = model["bic_table"].as_array().unwrap();
    let ks: Vec<u64> = table.iter().map(|r| r["k"].as_u64().unwrap()).collect();
    assert_eq!(ks, [2, 3, 4, 5]);
    assert_eq!(model["priors"].as_array().unwrap().len(), 2);
    assert_eq!(model["assignments"].as_array().unwrap().len(), 60);
}

#[test]
fn irl_writes_weights_features_and_convergence() {
    let rewards = json("rewards.json");
    assert_eq!(rewards["converged"], true);
    assert!(rewards["best_margin"].as_f64().unwrap() <= 0.01);
    let rows = rewards["features"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 27);
    assert_eq!(rewards["weights"].as_array().unwrap().len(), rows[0].as_array().unwrap().len());
    assert_eq!(rewards["state_rewards"].as_array().unwrap().len(), 27);
}

#[test]
fn train_writes_a_loadable_bundle() {
    let (dir, artifacts) = workspace();
    for name in ["manifest.json", "domain.json", "model.json", "rewards.json", "momdp.json", "policy.json"] {
        assert!(artifacts.contains_key(&format!("bundle/{name}")), "missing {name}");
    }
    let manifest = json("bundle/manifest.json");
    assert!(manifest.get("created").is_none());
    let bundle = teamtype::pipeline::TrainedBundle::load(dir.join("bundle")).unwrap();
    assert_eq!(bundle.model.k, 2);
}

#[test]
fn infer_type_names_the_subject_style() {
    let posterior = json("posterior.json");
    // s01 is a safe subject
    assert_eq!(posterior["most_likely"], "safe");
    let p: f64 = posterior["posterior"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((p - 1.0).abs() < 1e-12);
}

#[test]
fn run_transcripts_cover_every_human_source() {
    for (name, human) in [("scripted.json", "scripted"), ("simulated.json", "simulated"), ("interactive.json", "interactive")] {
        let t = json(name);
        assert_eq!(t["human"], human);
        assert_eq!(t["terminal"], true, "{name}");
        let turns = t["turns"].as_array().unwrap();
        assert!(!turns.is_empty());
        for pair in turns.windows(2) {
            assert_eq!(pair[0]["belief_after"], pair[1]["belief"]);
            assert_eq!(pair[0]["next"], pair[1]["step"]);
        }
        assert_eq!(turns.last().unwrap()["belief_after"], t["final_belief"]);
    }
    let scripted = json("scripted.json");
    let humans: Vec<&str> = scripted["turns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["human_action"].as_str().unwrap())
        .filter(|h| h.starts_with("place"))
        .collect();
    assert_eq!(humans, ["place-B", "place-C", "place-A"]);
}

#[test]
fn interactive_run_refuses_illegal_moves_and_asks_again() {
    let out = teamtype_in(
        dir(),
        &["run", "--bundle", "bundle", "--human", "interactive"],
        Some("drill-A\nwait\nplace-A\nplace-B\nplace-C\nwait\nwait\nwait\nwait\n"),
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.matches("not allowed").count(), 2, "{stderr}");
    let t: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(t["terminal"], true);
}

#[test]
fn export_policy_lists_corner_actions() {
    let policy = json("policy.json");
    let types: Vec<&str> = policy["types"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let corners = policy["corner_actions"].as_array().unwrap();
    let safe = &corners[types.iter().position(|t| *t == "safe").unwrap()];
    // PUU: the safe type waits for the other screws
    let steps: Vec<&str> = policy["steps"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let puu = steps.iter().position(|s| *s == "PUU").unwrap();
    assert_eq!(safe[puu], "no-op");
    let efficient = &corners[types.iter().position(|t| *t == "efficient").unwrap()];
    assert_eq!(efficient[puu], "drill-A");
}

#[test]
fn evaluate_writes_report_and_plot_data() {
    let report = json("report/report.json");
    assert_eq!(report["folds"].as_array().unwrap().len(), 12);
    assert!(report["classification_accuracy"].as_f64().unwrap() >= 0.95);
    let csv = String::from_utf8(workspace().1["report/plot.csv"].clone()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "epsilon,policy,mean,stderr,n");
    // 3 epsilons × 2 policies
    assert_eq!(lines.count(), 6);
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::copy(dir().join("demos.json"), tmp.path().join("demos.json")).unwrap();
    let args = ["train", "--demos", "demos.json", "--seed", "5", "--kmax", "4", "--restarts", "5", "--points", "200"];
    teamtype_in(tmp.path(), &[&args[..], &["--out", "par"]].concat(), None);
    teamtype_in(tmp.path(), &[&["--sequential"][..], &args[..], &["--out", "seq"]].concat(), None);
    for name in ["model.json", "rewards.json", "policy.json"] {
        let a = std::fs::read(tmp.path().join("par").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("seq").join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn bad_input_fails_with_a_message() {
    let out = try_teamtype_in(dir(), &["run", "--bundle", "bundle", "--human", "scripted", "--script", "fly"], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown action 'fly'"));

    let out = try_teamtype_in(dir(), &["cluster", "--demos", "missing.json", "--out", "x.json"], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    let out = try_teamtype_in(dir(), &["irl", "--model", "model.json", "--cluster", "9", "--out", "x.json"], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("out of range"));
}

#[test]
fn serve_answers_protocol_requests() {
    let mut child = Command::new(bin())
        .args(["serve", "--bundle", "bundle", "--bind", "127.0.0.1:0"])
        .current_dir(dir())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let mut line = String::new();
    stderr.read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("{line}")).to_string();

    let stream = TcpStream::connect(&addr).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    let mut call = |req: &str| -> Value {
        writeln!(writer, "{req}").unwrap();
        let mut reply = String::new();
        reader.read_line(&mut reply).unwrap();
        serde_json::from_str(&reply).unwrap()
    };
    let created = call(r#"{"op":"create","bundle":"bundle","prior":{"kind":"uniform"}}"#);
    assert_eq!(created["ok"], true, "{created}");
    let session = created["result"]["session"].as_str().unwrap().to_string();
    assert_eq!(created["result"]["belief"], serde_json::json!([0.5, 0.5]));
    let acted = call(&format!(r#"{{"op":"act","session":"{session}","action":"place-A"}}"#));
    assert_eq!(acted["ok"], true, "{acted}");
    assert_eq!(acted["result"]["turns"].as_array().unwrap().len(), 1);
    let bad = call(&format!(r#"{{"op":"act","session":"{session}","action":"drill-A"}}"#));
    assert_eq!(bad["error"]["kind"], "illegal-action");
    let transcript = call(&format!(r#"{{"op":"transcript","session":"{session}"}}"#));
    assert_eq!(transcript["result"]["turns"].as_array().unwrap().len(), 1);
    child.kill().unwrap();
    child.wait().unwrap();
}
