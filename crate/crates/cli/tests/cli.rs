use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_gvp");

fn gvp(out: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = gvp(out, args);
    assert!(
        o.status.success(),
        "gvp {args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn ledger(out: &Path) -> Vec<serde_json::Value> {
    fs::read_to_string(out.join("ledger.jsonl"))
        .unwrap_or_default()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "ledger.jsonl" {
                files.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    files
}

#[test]
fn help_exits_zero_everywhere() {
    let subcommands = ["sample", "prep", "detect", "coverage", "eval", "profile", "events", "simulate", "report"];
    let top = Command::new(BIN).arg("--help").output().unwrap();
    assert!(top.status.success());
    let text = String::from_utf8(top.stdout).unwrap();
    for flag in ["--config", "--out", "--seed", "--tz-offset", "--quiet"] {
        assert!(text.contains(flag), "top-level help lacks {flag}");
    }
    for sub in subcommands {
        assert!(text.contains(sub));
        let o = Command::new(BIN).args([sub, "--help"]).output().unwrap();
        assert!(o.status.success(), "{sub} --help");
        let help = String::from_utf8(o.stdout).unwrap();
        // Every long flag carries a description, on its own line or wrapped below it.
        let lines: Vec<&str> = help.lines().collect();
        for (i, line) in lines.iter().enumerate() {
            let t = line.trim_start();
            if !t.starts_with("--") && !t.starts_with("-h") && !t.starts_with("-V") {
                continue;
            }
            let inline = t.split("  ").filter(|s| !s.trim().is_empty()).count() >= 2;
            let below = lines.get(i + 1).is_some_and(|n| {
                let n = n.trim_start();
                !n.is_empty() && !n.starts_with('-')
            });
            assert!(inline || below, "{sub}: undocumented flag {t}");
        }
    }
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();

    assert_eq!(gvp(&out, &["sample", "--frames-dir", empty.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(gvp(&out, &["sample", "--frames-dir", "/no/such/dir"]).status.code(), Some(4));
    assert_eq!(gvp(&out, &["simulate", "--days", "0"]).status.code(), Some(2));
    assert_eq!(gvp(&out, &["coverage"]).status.code(), Some(4));

    let frames = dir.path().join("frames");
    fs::create_dir(&frames).unwrap();
    fs::write(frames.join("20240101_000000.jpg"), b"").unwrap();
    let crash = gvp(&out, &["detect", "--frames-dir", frames.to_str().unwrap(), "--adapter", "false"]);
    assert_eq!(crash.status.code(), Some(3));

    let bad_cfg = dir.path().join("bad.toml");
    fs::write(&bad_cfg, "frame_w = -1\n").unwrap();
    let o = Command::new(BIN)
        .args(["--config", bad_cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "report"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));

    let records = ledger(&out);
    assert_eq!(records.len(), 6);
    assert!(records.iter().all(|r| r["exit_code"] != 0 && r["error"].is_string()));
}

#[test]
fn pipeline_is_idempotent_and_ledgered() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = out.to_str().unwrap().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["simulate".into(), "--days".into(), "2".into(), "--precision".into(), "0.9".into(), "--recall".into(), "0.8".into()],
        vec!["sample".into(), "--frames-dir".into(), format!("{o}/frames")],
        vec!["prep".into(), "--labels-dir".into(), format!("{o}/labels"), "--flip-count".into(), "100".into()],
        vec!["detect".into(), "--detections".into(), format!("{o}/detections.jsonl")],
        vec!["coverage".into(), "--roi".into(), format!("{o}/roi.json")],
        vec!["eval".into(), "--labels-dir".into(), format!("{o}/labels")],
        vec!["profile".into()],
        vec!["events".into()],
        vec!["report".into()],
    ];
    let run_all = || {
        for s in &steps {
            let args: Vec<&str> = s.iter().map(String::as_str).collect();
            ok(&out, &args);
        }
        snapshot(&out)
    };
    let first = run_all();
    let second = run_all();
    assert_eq!(first.keys().collect::<Vec<_>>(), second.keys().collect::<Vec<_>>());
    for (path, bytes) in &first {
        assert!(bytes == &second[path], "{} changed between runs", path.display());
    }
    for name in ["frames.txt", "manifest.jsonl", "coverage.csv", "eval.json", "eval_table.txt", "events.jsonl", "report.txt"] {
        assert!(first.contains_key(Path::new(name)), "missing {name}");
    }

    let records = ledger(&out);
    assert_eq!(records.len(), 2 * steps.len());
    let ids: BTreeSet<&str> = records.iter().map(|r| r["run_id"].as_str().unwrap()).collect();
    assert_eq!(ids.len(), records.len());
    // Same command and inputs hash the same.
    for i in 0..steps.len() {
        assert_eq!(records[i]["config_hash"], records[i + steps.len()]["config_hash"]);
        assert_eq!(records[i]["exit_code"], 0);
    }
}

#[test]
fn noiseless_eval_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(out, &["simulate", "--days", "1", "--no-frames"]);
    let labels = out.join("labels");
    let summary = ok(out, &["eval", "--labels-dir", labels.to_str().unwrap()]);
    assert!(summary.starts_with("P 1.0000  R 1.0000  F1 1.0000  mAP@50 1.0000"), "{summary}");
    let table = fs::read_to_string(out.join("eval_table.txt")).unwrap();
    let precision_row = table.lines().find(|l| l.starts_with("Precision")).unwrap();
    assert!(precision_row.trim_end().ends_with("1.00"));
}

#[test]
fn constant_series_gives_flat_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let mut csv = String::from("ts,iso_time,coverage,count\n");
    for i in 0..288 {
        csv.push_str(&format!("{},x,0.390000,3\n", 1_704_047_400 + 300 * i));
    }
    let path = out.join("cov.csv");
    fs::write(&path, csv).unwrap();
    ok(out, &["profile", "--kind", "hourly", "--coverage", path.to_str().unwrap()]);
    let p: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("profile_hourly.json")).unwrap()).unwrap();
    let bins = p["bins"].as_array().unwrap();
    assert_eq!(bins.len(), 24);
    for b in bins {
        assert!((b["mean"].as_f64().unwrap() - 0.39).abs() < 1e-12);
    }
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let cfg = out.join("gvp.toml");
    fs::write(&cfg, "tz_offset_minutes = 0\n[events]\nclean_level = 0.1\n").unwrap();
    let mut csv = String::from("ts,iso_time,coverage,count\n");
    for i in 0..12 {
        csv.push_str(&format!("{},x,0.5,1\n", 1_704_067_200 + 300 * i));
    }
    fs::write(out.join("coverage.csv"), csv).unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = Command::new(BIN).args(&args).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let p: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("profile_hourly.json")).unwrap()).unwrap();
        p["tz_offset_minutes"].as_i64().unwrap()
    };
    assert_eq!(run(&["profile", "--kind", "hourly"]), 0);
    assert_eq!(run(&["--tz-offset", "330", "profile", "--kind", "hourly"]), 330);
    assert_eq!(run(&["--tz-offset=-300", "profile", "--kind", "hourly"]), -300);
}

#[cfg(unix)]
#[test]
fn detect_runs_an_adapter() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let frames = dir.path().join("frames");
    fs::create_dir(&frames).unwrap();
    for id in ["20240101_000000", "20240101_000500", "20240101_001000"] {
        fs::write(frames.join(format!("{id}.jpg")), b"").unwrap();
    }
    let script = dir.path().join("adapter.sh");
    fs::write(
        &script,
        "while IFS= read -r p; do id=$(basename \"$p\" .jpg); \
         ts=$(date -u -d \"$(echo $id | sed 's/\\(....\\)\\(..\\)\\(..\\)_\\(..\\)\\(..\\)\\(..\\)/\\1-\\2-\\3 \\4:\\5:\\6/')\" +%s); \
         printf '{\"frame_id\":\"%s\",\"ts\":%s,\"boxes\":[{\"x\":1,\"y\":2,\"w\":3,\"h\":4,\"conf\":0.9,\"cls\":0}]}\\n' \"$id\" \"$ts\"; done\n",
    )
    .unwrap();
    let cmd = format!("sh {}", script.display());
    let summary = ok(&out, &["detect", "--frames-dir", frames.to_str().unwrap(), "--adapter", &cmd]);
    assert!(summary.contains("3 records with 3 boxes"), "{summary}");
    let lines = fs::read_to_string(out.join("detections.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 3);
    assert!(!out.join("detections.jsonl.partial").exists());
}

#[test]
fn quiet_suppresses_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["--quiet", "--out", dir.path().to_str().unwrap(), "simulate", "--days", "1", "--no-frames"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
}
