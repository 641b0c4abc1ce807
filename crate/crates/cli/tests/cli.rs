use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sshfp_audit::analysis::ChangeEvent;
use sshfp_audit::pipeline::{read_log, DomainScanResult, ParsedRecord};
use sshfp_audit::{generate_records, parse_record, HashType, SshfpRecord};
use sshfp_testbed::ssh::{HostKeyPair, MockSshd};
use sshfp_testbed::{Testbed, FIXTURE_PSL};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sshfp-audit"));
    c.env_remove("SSHFP_AUDIT_RESOLVER")
        .env_remove("SSHFP_AUDIT_VALIDATING_RESOLVER")
        .env("RUST_LOG", "warn");
    c
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn resolver_args(tb: &Testbed) -> Vec<String> {
    vec![
        "--resolver".into(),
        tb.plain.addr().to_string(),
        "--validating-resolver".into(),
        tb.validating.addr().to_string(),
        "--timeout".into(),
        "1".into(),
    ]
}

fn verify(tb: &Testbed, domain: &str, extra: &[String]) -> Output {
    bin()
        .arg("verify")
        .arg(domain)
        .args(extra)
        .args(["--ssh-port", &tb.ssh_port.to_string(), "--ssh-timeout", "3"])
        .output()
        .unwrap()
}

#[test]
fn scan_writes_one_line_per_fixture_name() {
    let tb = Testbed::start().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("names.txt");
    fs::write(&input, tb.names().join("\n")).unwrap();
    let out = dir.path().join("scan.jsonl");
    let o = bin()
        .arg("scan")
        .arg("--input")
        .arg(&input)
        .arg("--output")
        .arg(&out)
        .args(resolver_args(&tb))
        .args([
            "--ssh-port",
            &tb.ssh_port.to_string(),
            "--workers",
            "4",
            "--ssh-workers",
            "4",
        ])
        .output()
        .unwrap();
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 10);
    assert!(stdout(&o).contains("10 names written"));
}

#[test]
fn scan_reads_resolvers_from_config_and_environment() {
    let tb = Testbed::start().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.jsonl");
    let config = dir.path().join("scan.toml");
    fs::write(
        &config,
        format!(
            "output = {:?}\nssh_port = {}\ntimeout = 1.0\nvalidating_resolver = \"{}\"\n",
            out.to_str().unwrap(),
            tb.ssh_port,
            tb.validating.addr()
        ),
    )
    .unwrap();
    let o = bin()
        .args(["scan", "--input", "-", "--config"])
        .arg(&config)
        .env("SSHFP_AUDIT_RESOLVER", tb.plain.addr().to_string())
        .stdin(
            fs::File::open(write_names(
                dir.path(),
                &["full1.example.test", "missing.example.test"],
            ))
            .unwrap(),
        )
        .output()
        .unwrap();
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 2);
}

fn write_names(dir: &Path, names: &[&str]) -> std::path::PathBuf {
    let p = dir.join("stdin.txt");
    fs::write(&p, names.join("\n")).unwrap();
    p
}

#[test]
fn scan_missing_input_is_a_usage_error() {
    let tb = Testbed::start().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["scan", "--input"])
        .arg(dir.path().join("absent.txt"))
        .arg("--output")
        .arg(dir.path().join("o.jsonl"))
        .args(resolver_args(&tb))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scan_fails_startup_probe_on_dead_resolvers() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_names(dir.path(), &["a.test"]);
    let silent = sshfp_testbed::dns::MockDns::silent("127.0.0.1".parse().unwrap()).unwrap();
    let silent2 = sshfp_testbed::dns::MockDns::silent("127.0.0.1".parse().unwrap()).unwrap();
    let o = bin()
        .args(["scan", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(dir.path().join("o.jsonl"))
        .args(["--resolver", &silent.addr().to_string()])
        .args(["--validating-resolver", &silent2.addr().to_string()])
        .args(["--timeout", "0.2", "--retries", "1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unusable"));
}

#[test]
fn verify_exit_codes_follow_the_three_conditions() {
    let tb = Testbed::start().unwrap();
    let args = resolver_args(&tb);

    let full = verify(&tb, "full1.example.test", &args);
    assert_eq!(full.status.code(), Some(0), "{}", stdout(&full));
    assert!(stdout(&full).contains("verdict: secure"));
    assert!(stdout(&full).contains("dnssec: SECURE"));

    // Full match, but the AD flag never arrives.
    let plain_only = vec![
        "--resolver".into(),
        tb.plain.addr().to_string(),
        "--validating-resolver".into(),
        tb.plain.addr().to_string(),
        "--allow-same-resolver".into(),
    ];
    let insecure = verify(&tb, "full1.example.test", &plain_only);
    assert_eq!(insecure.status.code(), Some(1));
    assert!(stdout(&insecure).contains("verdict: insecure"));

    let nossh = verify(&tb, "nossh1.example.test", &args);
    assert_eq!(nossh.status.code(), Some(1));
    assert!(stdout(&nossh).contains("verdict: mismatch"));

    let nx = verify(&tb, "missing.example.test", &args);
    assert_eq!(nx.status.code(), Some(3));
}

#[test]
fn gen_prints_sorted_records_for_each_key() {
    let keys = vec![HostKeyPair::ed25519(40), HostKeyPair::p256(41)];
    let d = MockSshd::bind("127.0.0.1:0".parse().unwrap(), keys.clone()).unwrap();
    let o = bin()
        .args([
            "gen",
            "127.0.0.1",
            "--name",
            "host.test",
            "--port",
            &d.addr().port().to_string(),
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    let parsed: Vec<SshfpRecord> = lines
        .iter()
        .map(|l| parse_record(l.strip_prefix("host.test IN SSHFP ").unwrap()).unwrap())
        .collect();
    let host_keys: Vec<_> = keys.iter().map(HostKeyPair::host_key).collect();
    let mut want = generate_records(&host_keys, &HashType::ALL).unwrap();
    want.sort();
    assert_eq!(parsed, want);
}

#[test]
fn gen_without_keys_is_a_runtime_error() {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let o = bin()
        .args([
            "gen",
            "127.0.0.1",
            "--port",
            &port.to_string(),
            "--timeout",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn analyze_empty_and_unreadable_logs() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let report = dir.path().join("rep");
    let o = bin()
        .arg("analyze")
        .arg(&empty)
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["lines"], 0);
    assert_eq!(json["population"]["records"], 0);
    assert!(report.join("report.txt").exists());

    let o = bin()
        .arg("analyze")
        .arg(dir.path().join("nope.jsonl"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn analyze_two_snapshots_reports_a_rotation() {
    let tb = Testbed::start().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let psl = dir.path().join("psl.dat");
    fs::write(&psl, FIXTURE_PSL).unwrap();
    let first = dir.path().join("first.jsonl");
    let mut cfg = tb.scan_config(&first);
    cfg.psl = Some(psl);
    sshfp_audit::pipeline::run_scan(&cfg, tb.names().into_iter().map(Ok)).unwrap();

    // Second snapshot: full1 rotated every key, everything else unchanged.
    let rotated = generate_records(&[HostKeyPair::ed25519(99).host_key()], &HashType::ALL).unwrap();
    let log: Vec<DomainScanResult> =
        read_log(std::io::BufReader::new(fs::File::open(&first).unwrap()))
            .map(Result::unwrap)
            .collect();
    let mut second = String::new();
    for mut r in log {
        if r.domain == "full1.example.test" {
            r.records = rotated
                .iter()
                .map(|rec| ParsedRecord {
                    validity: rec.validate(),
                    record: rec.clone(),
                })
                .collect();
        }
        second.push_str(&serde_json::to_string(&r).unwrap());
        second.push('\n');
    }
    let second_path = dir.path().join("second.jsonl");
    fs::write(&second_path, second).unwrap();

    let report = dir.path().join("rep");
    let o = bin()
        .arg("analyze")
        .arg(&first)
        .arg(&second_path)
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report.join("report.json")).unwrap()).unwrap();
    let events = rep["changes"]["events"].as_array().unwrap();
    let kinds: BTreeSet<String> = events
        .iter()
        .map(|e| e["event"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(events.len(), 1, "{events:?}");
    assert_eq!(events[0]["domain"], "full1.example.test");
    assert_eq!(
        kinds.into_iter().next().unwrap(),
        serde_json::to_value(ChangeEvent::FullReplacement)
            .unwrap()
            .as_str()
            .unwrap()
    );
}
