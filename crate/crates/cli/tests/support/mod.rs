//! Runs the built `teamtype` binary.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_teamtype"))
}

/// Runs the CLI in `dir` with an optional stdin, panicking with its stderr on failure.
pub fn teamtype_in(dir: &Path, args: &[&str], stdin: Option<&str>) -> Output {
    let out = try_teamtype_in(dir, args, stdin);
    assert!(
        out.status.success(),
        "teamtype {} failed:\n{}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn try_teamtype_in(dir: &Path, args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(bin())
        .args(args)
        .current_dir(dir)
        .env_remove("SOURCE_DATE_EPOCH")
        .env_remove("RUST_LOG")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn teamtype");
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

/// Every artifact-producing command with fixed seeds, on a small configuration. Returns
/// each output file (and captured stdout) by name.
pub fn run_every_command(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let small = ["--kmax", "4", "--restarts", "5", "--points", "200"];
    let steps: Vec<(Vec<&str>, Option<&str>)> = vec![
        (vec!["synth", "place-drill", "--seed", "7", "--out", "demos.json"], None),
        (vec!["synth", "generators", "--seed", "3", "--out", "generated.json"], None),
        (vec!["domain", "--out", "domain.json"], None),
        (vec!["cluster", "--demos", "generated.json", "--kmax", "5", "--restarts", "5", "--seed", "1", "--out", "generated-model.json"], None),
        (vec!["cluster", "--demos", "demos.json", "--kmax", "5", "--restarts", "5", "--seed", "1", "--out", "model.json"], None),
        (vec!["irl", "--domain", "domain.json", "--model", "model.json", "--cluster", "0", "--seed", "2", "--out", "rewards.json"], None),
        ([&["train", "--demos", "demos.json", "--domain", "domain.json", "--seed", "5"][..], &small[..], &["--out", "bundle"][..]].concat(), None),
        (vec!["infer-type", "--bundle", "bundle", "--demos", "demos.json", "--subject", "s01", "--out", "posterior.json"], None),
        (vec!["run", "--bundle", "bundle", "--human", "scripted", "--script", "place-B,place-C,place-A", "--out", "scripted.json"], None),
        (vec!["run", "--bundle", "bundle", "--human", "simulated", "--order", "C,A,B", "--epsilon", "0.4", "--seed", "9",
              "--prior-demos", "demos.json", "--subject", "s02", "--out", "simulated.json"], None),
        (vec!["run", "--bundle", "bundle", "--human", "interactive", "--out", "interactive.json"],
         Some("place-A\nplace-C\nplace-B\nwait\nwait\nwait\nwait\nwait\n")),
        (vec!["export-policy", "--bundle", "bundle", "--out", "policy.json"], None),
        ([&["evaluate", "--demos", "demos.json", "--epsilons", "0,0.5,1", "--reps", "3", "--seed", "11"][..], &small[..], &["--out", "report"][..]].concat(), None),
    ];
    let mut artifacts = BTreeMap::new();
    for (i, (args, stdin)) in steps.iter().enumerate() {
        let out = teamtype_in(dir, args, *stdin);
        artifacts.insert(format!("stdout-{i:02}-{}", args[0]), out.stdout);
    }
    collect(dir, dir, &mut artifacts);
    artifacts
}

fn collect(root: &Path, dir: &Path, into: &mut BTreeMap<String, Vec<u8>>) {
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect(root, &path, into);
        } else {
            let name = path.strip_prefix(root).unwrap().display().to_string();
            into.insert(name, std::fs::read(&path).unwrap());
        }
    }
}
