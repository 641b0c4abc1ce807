use std::collections::BTreeSet;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::Path;
use std::process::Command;
use std::time::Duration;

use sshfp_audit::keyscan::wire;
use sshfp_audit::keyscan::{
    collect_host_keys, AlgoStatus, HostLimiter, KeyType, KeyscanTarget, Keyscanner,
};
use sshfp_audit::{generate_records, HashType, SshfpRecord};
use sshfp_testbed::ssh::{HostKeyPair, MockSshd, SERVER_VERSION};

fn daemon(keys: Vec<HostKeyPair>) -> MockSshd {
    MockSshd::bind(SocketAddr::from((Ipv4Addr::LOCALHOST, 0)), keys).unwrap()
}

fn target(d: &MockSshd, algos: Vec<KeyType>) -> KeyscanTarget {
    let mut t = KeyscanTarget::ipv4(Ipv4Addr::LOCALHOST);
    t.port = d.addr().port();
    t.algos = algos;
    t.timeout = Duration::from_secs(3);
    t
}

#[test]
fn collects_exact_blobs_with_verified_signatures() {
    let keys = vec![HostKeyPair::ed25519(1), HostKeyPair::p256(2)];
    let d = daemon(keys.clone());
    let r = collect_host_keys(&target(&d, KeyType::DEFAULT.to_vec()));

    assert_eq!(r.server_version.as_deref(), Some(SERVER_VERSION));
    let got: BTreeSet<Vec<u8>> = r.host_keys().map(|k| k.blob().to_vec()).collect();
    let want: BTreeSet<Vec<u8>> = keys.iter().map(HostKeyPair::public_blob).collect();
    assert_eq!(got, want);
    assert!(r.keys.iter().all(|k| k.signature_verified == Some(true)));

    assert_eq!(r.status(&KeyType::Ed25519), Some(AlgoStatus::Ok));
    assert_eq!(r.status(&KeyType::Ecdsa), Some(AlgoStatus::Ok));
    assert_eq!(
        r.status(&KeyType::Dsa),
        Some(AlgoStatus::UnsupportedByServer)
    );
    assert_eq!(
        r.status(&KeyType::Rsa),
        Some(AlgoStatus::UnsupportedByServer)
    );
}

#[test]
fn never_goes_past_the_kex_reply() {
    let d = daemon(vec![HostKeyPair::ed25519(3), HostKeyPair::p256(4)]);
    collect_host_keys(&target(&d, KeyType::DEFAULT.to_vec()));
    let sessions = d.wait_sessions(4, Duration::from_secs(5));
    assert_eq!(sessions.len(), 4);
    for s in &sessions {
        assert!(s
            .client_version
            .as_deref()
            .unwrap()
            .starts_with("SSH-2.0-sshfp_audit_"));
        for &m in &s.received {
            assert!(
                matches!(
                    m,
                    wire::MSG_KEXINIT | wire::MSG_KEX_ECDH_INIT | wire::MSG_DISCONNECT
                ),
                "client sent message {m}"
            );
        }
        assert!(!s.received.contains(&wire::MSG_NEWKEYS));
    }
    assert_eq!(sessions.iter().filter(|s| s.sent_host_key).count(), 2);
}

#[test]
fn finite_field_exchange_is_supported() {
    let d = MockSshd::bind_with_kex(
        SocketAddr::from((Ipv4Addr::LOCALHOST, 0)),
        vec![HostKeyPair::ed25519(5)],
        &["diffie-hellman-group14-sha256"],
    )
    .unwrap();
    let r = collect_host_keys(&target(&d, vec![KeyType::Ed25519]));
    assert_eq!(r.keys.len(), 1);
    assert_eq!(r.keys[0].kex_algorithm, "diffie-hellman-group14-sha256");
    assert_eq!(r.keys[0].signature_verified, Some(true));
}

#[test]
fn no_common_kex_is_a_protocol_error() {
    let d = MockSshd::bind_with_kex(
        SocketAddr::from((Ipv4Addr::LOCALHOST, 0)),
        vec![HostKeyPair::ed25519(6)],
        &["ecdh-sha2-nistp521"],
    )
    .unwrap();
    let r = collect_host_keys(&target(&d, vec![KeyType::Ed25519]));
    assert!(r.keys.is_empty());
    assert_eq!(r.status(&KeyType::Ed25519), Some(AlgoStatus::ProtocolError));
}

#[test]
fn closed_port_is_refused() {
    let port = std::net::TcpListener::bind((Ipv4Addr::LOCALHOST, 0))
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let mut t = KeyscanTarget::ipv4(Ipv4Addr::LOCALHOST);
    t.port = port;
    t.algos = vec![KeyType::Ed25519];
    let r = collect_host_keys(&t);
    assert_eq!(r.status(&KeyType::Ed25519), Some(AlgoStatus::Refused));
}

#[test]
fn per_host_cap_bounds_concurrency() {
    let d = daemon(vec![HostKeyPair::ed25519(7)]);
    let scanner = Keyscanner::new(HostLimiter::new(1), None);
    let r = scanner.collect(&target(&d, KeyType::DEFAULT.to_vec()));
    assert_eq!(r.keys.len(), 1);
    assert_eq!(scanner.limiter().in_use(Ipv4Addr::LOCALHOST.into()), 0);
}

/// Parses `ssh-keyscan -D` output into records, skipping comments.
fn parse_keyscan_d(out: &str) -> BTreeSet<SshfpRecord> {
    out.lines()
        .filter(|l| !l.starts_with(';') && !l.trim().is_empty())
        .map(|l| {
            let rdata = l.split_once(" IN SSHFP ").expect("SSHFP line").1;
            rdata.parse().expect("record text")
        })
        .collect()
}

#[test]
fn matches_openssh_keyscan() {
    let bin = Path::new("/usr/bin/ssh-keyscan");
    if !bin.exists() {
        eprintln!("ssh-keyscan not installed; skipping");
        return;
    }
    let keys = vec![HostKeyPair::ed25519(8), HostKeyPair::p256(9)];
    let d = daemon(keys);
    let out = Command::new(bin)
        .args(["-D", "-T", "5", "-t", "ecdsa,ed25519", "-p"])
        .arg(d.addr().port().to_string())
        .arg("127.0.0.1")
        .output()
        .unwrap();
    let theirs = parse_keyscan_d(&String::from_utf8_lossy(&out.stdout));

    let r = collect_host_keys(&target(&d, KeyType::DEFAULT.to_vec()));
    let host_keys: Vec<_> = r.host_keys().cloned().collect();
    let ours: BTreeSet<SshfpRecord> = generate_records(&host_keys, &HashType::ALL)
        .unwrap()
        .into_iter()
        .collect();
    assert_eq!(theirs.len(), 4, "ssh-keyscan output: {:?}", out);
    assert_eq!(ours, theirs);
}
