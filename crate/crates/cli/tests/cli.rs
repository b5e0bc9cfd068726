use std::io::{BufRead, BufReader};
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use hearthguard::locator::{AnchorSet, Position};
use hearthguard::meshbus::Frame;
use hearthguard_net::TcpClient;
use serde_json::json;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hearthguard"));
    c.env_remove("HEARTHGUARD_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn table6_rows_carry_message_ids() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let o = run(&["run", "table6", "--mode", "adaptive", "--seed", "7", "--metrics", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(&csv).unwrap();
    let h = r.headers().unwrap().clone();
    let col = |name: &str| h.iter().position(|c| c == name).unwrap();
    let rows: Vec<_> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    let voice: Vec<&str> = rows.iter().map(|r| &r[col("voiceIds")]).collect();
    let image: Vec<&str> = rows.iter().map(|r| &r[col("imageIds")]).collect();
    assert_eq!(voice, ["13", "", "", "13"]);
    assert_eq!(image, ["16", "17", "18", "19"]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    for k in ["a", "b"] {
        let o = run(&["run", "fig9", "--seed", "7", "--metrics", &p(&format!("{k}.csv"))]);
        assert!(o.status.success());
        let o = run(&[
            "run",
            "modeswitch",
            "--seed",
            "11",
            "--metrics",
            &p(&format!("{k}m.csv")),
            "--frames",
            &p(&format!("{k}.jsonl")),
        ]);
        assert!(o.status.success());
    }
    for (a, b) in [("a.csv", "b.csv"), ("am.csv", "bm.csv"), ("a.jsonl", "b.jsonl")] {
        assert_eq!(std::fs::read(p(a)).unwrap(), std::fs::read(p(b)).unwrap(), "{a} vs {b}");
    }
}

#[test]
fn replay_reproduces_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("f.jsonl");
    let o = run(&[
        "run",
        "modeswitch",
        "--metrics",
        dir.path().join("m.csv").to_str().unwrap(),
        "--frames",
        log.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let o = run(&["replay", log.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("divergences=0"));

    let text = std::fs::read_to_string(&log).unwrap();
    let tampered = text.replacen(r#""voice":3"#, r#""voice":4"#, 1);
    assert_ne!(text, tampered);
    std::fs::write(&log, tampered).unwrap();
    let o = run(&["replay", log.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("first at"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["run", "missing.json"]).status.code(), Some(1));
    assert_eq!(run(&["run", "table6", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["run", "table6", "--mode", "sometimes"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let o =
        bin().args(["run", "modeswitch"]).env("HEARTHGUARD_CONFIG", "/nonexistent/membership.json").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/membership.json"));
}

#[test]
fn bad_scenario_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.json");
    std::fs::write(&f, r#"{"name": "x", "durationSeconds": 10, "tickSeconds": -1}"#).unwrap();
    let o = run(&["run", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tickSeconds"));
}

#[test]
fn solve_recovers_forward_ranges() {
    let anchors = AnchorSet::default_room();
    let truth = Position::new(2.75, 3.1, anchors.tag_height);
    let ranges: Vec<String> = anchors.anchors.iter().map(|a| format!("{:.15}", a.position.distance(&truth))).collect();
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("anchors.json");
    std::fs::write(&f, serde_json::to_string(&anchors).unwrap()).unwrap();
    let o = run(&["solve", "--anchors", f.to_str().unwrap(), "--ranges", &ranges.join(",")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let field = |k: &str| -> f64 {
        out.split_whitespace().find_map(|w| w.strip_prefix(&format!("{k}="))).unwrap().parse().unwrap()
    };
    assert!((field("x") - truth.x).abs() < 1e-6 && (field("y") - truth.y).abs() < 1e-6, "{out}");
    assert_eq!(run(&["solve", "--ranges", "1,2"]).status.code(), Some(1));
}

#[test]
fn stats_pearson_and_summary_t() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("d.csv");
    std::fs::write(&f, "a,b\n1,2\n2,4\n3,6\n").unwrap();
    let o = run(&["stats", "--csv", f.to_str().unwrap(), "--pearson", "a", "b"]);
    assert_eq!(stdout(&o).trim(), "pearson r=1.000000000000 n=3");
    let o = run(&["stats", "--summary", "26,3.35,1.9", "11,5.13,2.03"]);
    let t: f64 = stdout(&o).split_whitespace().next().unwrap().strip_prefix("t=").unwrap().parse().unwrap();
    assert!((-3.0..=-1.8).contains(&t), "{t}");
    assert_eq!(run(&["stats", "--pearson", "a", "b"]).status.code(), Some(2));
}

#[test]
fn broker_round_trip() {
    let mut child =
        bin().args(["broker", "--tcp", "127.0.0.1:0", "--ws", "127.0.0.1:0"]).stdout(Stdio::piped()).spawn().unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    let tcp = lines.next().unwrap().unwrap();
    let addr = tcp.strip_prefix("tcp ").unwrap().to_string();
    let wait = Duration::from_secs(5);
    let mut a = TcpClient::connect(&addr, "a", wait).unwrap();
    let mut b = TcpClient::connect(&addr, "b", wait).unwrap();
    a.subscribe("alert/#").unwrap();
    b.publish(Frame::publish("alert/gas", json!({"voice": 2}))).unwrap();
    let got = a.recv(wait);
    child.kill().unwrap();
    let _ = child.wait();
    assert_eq!(got.unwrap().payload["voice"], json!(2));
}
