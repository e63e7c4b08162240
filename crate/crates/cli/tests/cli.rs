use std::path::Path;
use std::process::{Command, Output};

use num_rational::Ratio;
use sqss_core::analysis::{read_detection_report, read_efficiency_report, ProtocolId, ReportFormat, DETECTION_HEADER};

fn sqss(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqss")).args(args).current_dir(dir).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    let dir = tempfile::tempdir().unwrap();
    sqss(args, dir.path()).status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn honest_run_reconstructs() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqss(&["run", "--n", "3", "--L", "8", "--seed", "7", "--random-secret"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("matches the dealer's secret"));
}

#[test]
fn explicit_secret_is_range_checked() {
    assert_eq!(code(&["run", "--n", "2", "--L", "2", "--secret", "3,0x2"]), 0);
    assert_eq!(code(&["run", "--n", "2", "--L", "2", "--secret", "4,0"]), 2);
    assert_eq!(code(&["run", "--n", "2", "--L", "2", "--secret", "1"]), 2);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["run", "--n", "0"]), 2);
    assert_eq!(code(&["run", "--attack", "nonsense"]), 2);
    assert_eq!(code(&["run", "--no-such-flag"]), 2);
    assert_eq!(code(&["sweep", "--attacks", "nonsense"]), 2);
    assert_eq!(code(&["verify", "--n-max", "1"]), 0);
    assert_eq!(code(&["verify", "--n-max", "2", "--L-max", "1", "--inject-fault", "2,1"]), 1);
    // measure-resend at L = 16 has 32 decoys; surviving all of them is rare
    assert_eq!(code(&["run", "--n", "2", "--L", "16", "--attack", "measure-resend", "--seed", "1"]), 3);
}

#[test]
fn injected_fault_names_location() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqss(&["verify", "--n-max", "2", "--L-max", "1", "--inject-fault", "2,1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("party i=2 tuple j=1"), "{}", stdout(&out));
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqss(&["sweep", "--attacks", "", "--output", "empty.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("empty.csv")).unwrap();
    assert_eq!(text.trim_end(), DETECTION_HEADER.join(","));
    assert!(read_detection_report(ReportFormat::Csv, text.as_bytes()).unwrap().is_empty());
}

#[test]
fn sweep_rows_per_attack() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqss(&["sweep", "--trials", "50", "--jobs", "2", "--output", "s.json", "--format", "json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = read_detection_report(ReportFormat::Json, std::fs::File::open(dir.path().join("s.json")).unwrap()).unwrap();
    let attacks: Vec<_> = rows.iter().map(|r| r.attack.as_str()).collect();
    assert_eq!(attacks, ["intercept-resend", "measure-resend", "double-cnot", "em"]);
}

#[test]
fn efficiency_formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    for (fmt, file) in [("csv", "e.csv"), ("json", "e.json")] {
        let out = sqss(&["efficiency", "--n", "1..5", "--format", fmt, "--output", file], dir.path());
        assert_eq!(out.status.code(), Some(0));
    }
    let csv = read_efficiency_report(ReportFormat::Csv, std::fs::File::open(dir.path().join("e.csv")).unwrap()).unwrap();
    let json = read_efficiency_report(ReportFormat::Json, std::fs::File::open(dir.path().join("e.json")).unwrap()).unwrap();
    assert_eq!(csv, json);
    assert_eq!(csv.len(), 20);
    let this: Vec<_> = csv
        .iter()
        .filter(|r| r.protocol == ProtocolId::ThisWork)
        .map(|r| Ratio::new(r.eta_num, r.eta_den))
        .collect();
    assert_eq!(this, [4, 7, 10, 13, 16].map(|d| Ratio::new(1, d)));
    let ref34_n3 = csv.iter().find(|r| r.protocol == ProtocolId::Ref34 && r.n == 3).unwrap();
    assert_eq!((ref34_n3.eta_num, ref34_n3.eta_den), (1, 64));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.conf"), "# session\nn = 3\nL = 2\nseed = 9\n").unwrap();
    let from_file = stdout(&sqss(&["--config", "c.conf", "run"], dir.path()));
    assert!(from_file.contains("n = 3, L = 2"), "{from_file}");
    let overridden = stdout(&sqss(&["--config", "c.conf", "run", "--L", "5"], dir.path()));
    assert!(overridden.contains("n = 3, L = 5"), "{overridden}");

    std::fs::write(dir.path().join("bad.conf"), "n = 3\nn = 4\n").unwrap();
    assert_eq!(sqss(&["--config", "bad.conf", "run"], dir.path()).status.code(), Some(2));
    std::fs::write(dir.path().join("unknown.conf"), "colour = red\n").unwrap();
    assert_eq!(sqss(&["--config", "unknown.conf", "run"], dir.path()).status.code(), Some(2));
}

#[test]
fn transcript_is_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqss(&["run", "--n", "2", "--L", "2", "--transcript", "t.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("t.jsonl")).unwrap();
    for (k, line) in text.lines().enumerate() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["index"], k);
        for field in ["sender", "receiver", "kind", "payload", "decoy"] {
            assert!(v.get(field).is_some(), "missing {field}");
        }
    }
}
