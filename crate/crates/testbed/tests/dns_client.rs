use std::net::{IpAddr, Ipv4Addr};
use std::time::{Duration, Instant};

use sshfp_audit::dns::{DnsClient, Outcome, Rdata, ResolverConfig};
use sshfp_audit::{HashType, KeyAlgo, SshfpRecord};
use sshfp_testbed::dns::{Behavior, MockDns, Mode, Security, Zone, ZoneEntry};

const LO: IpAddr = IpAddr::V4(Ipv4Addr::LOCALHOST);

fn records(n: u8) -> Vec<SshfpRecord> {
    (0..n)
        .map(|i| SshfpRecord::new(KeyAlgo::ED25519, HashType::SHA256, vec![i; 32]))
        .collect()
}

fn zone() -> Zone {
    let mut z = Zone::new();
    let e = z.insert("four.test", ZoneEntry::with_records(&records(4)));
    e.a = vec![
        Ipv4Addr::new(192, 0, 2, 1),
        Ipv4Addr::new(192, 0, 2, 2),
        Ipv4Addr::new(192, 0, 2, 1),
    ];
    e.security = Security::Secure;
    z.insert("bogus.test", ZoneEntry::with_records(&records(1)))
        .security = Security::Bogus;
    z.insert("hole.test", ZoneEntry::default()).behavior = Behavior::Blackhole;
    z.insert("garbage.test", ZoneEntry::default()).behavior = Behavior::Garbage;
    z.insert("refused.test", ZoneEntry::default()).behavior = Behavior::Rcode(5);
    let big = z.insert("big.test", ZoneEntry::with_records(&records(3)));
    big.behavior = Behavior::TruncateUdp;
    z.insert("alias.test", ZoneEntry::default()).cname = Some("four.test".into());
    z.insert(
        "junk.test",
        ZoneEntry {
            sshfp: vec![vec![4]],
            ..Default::default()
        },
    );
    z
}

struct Pair {
    plain: MockDns,
    validating: MockDns,
    client: DnsClient,
}

fn pair(timeout: Duration, retries: u32) -> Pair {
    let plain = MockDns::start(LO, zone(), Mode::Plain).unwrap();
    let validating = MockDns::start(LO, zone(), Mode::Validating).unwrap();
    let mut cfg = ResolverConfig::new(plain.addr(), validating.addr());
    cfg.timeout = timeout;
    cfg.retries = retries;
    Pair {
        plain,
        validating,
        client: DnsClient::new(cfg),
    }
}

#[test]
fn four_records_from_mock_zone() {
    let p = pair(Duration::from_secs(1), 2);
    let r = p
        .client
        .query_sshfp("four.test", p.plain.addr(), false)
        .unwrap();
    assert_eq!(r.outcome, Outcome::NoError);
    assert_eq!(r.sshfp_records().count(), 4);
    assert_eq!(r.sshfp_records().cloned().collect::<Vec<_>>(), records(4));
    assert!(!r.ad_flag);
}

#[test]
fn nxdomain_has_no_records() {
    let p = pair(Duration::from_secs(1), 2);
    let r = p
        .client
        .query_sshfp("nope.test", p.plain.addr(), false)
        .unwrap();
    assert_eq!(r.outcome, Outcome::NxDomain);
    assert!(r.records.is_empty());
}

#[test]
fn ad_flag_only_from_validating_path() {
    let p = pair(Duration::from_secs(1), 2);
    let v = p
        .client
        .query_sshfp("four.test", p.validating.addr(), true)
        .unwrap();
    assert_eq!(v.outcome, Outcome::NoError);
    assert!(v.ad_flag);
    assert!(
        p.validating
            .stats()
            .do_bit_queries
            .load(std::sync::atomic::Ordering::Relaxed)
            >= 1
    );
    // Same resolver without DO: the flag is not reported.
    let v = p
        .client
        .query_sshfp("four.test", p.validating.addr(), false)
        .unwrap();
    assert!(!v.ad_flag);
    let b = p
        .client
        .query_sshfp("bogus.test", p.validating.addr(), true)
        .unwrap();
    assert_eq!(b.outcome, Outcome::ServFail);
}

#[test]
fn blackhole_times_out_after_all_attempts() {
    let p = pair(Duration::from_millis(300), 2);
    let start = Instant::now();
    let r = p
        .client
        .query_sshfp("hole.test", p.plain.addr(), false)
        .unwrap();
    let took = start.elapsed();
    assert_eq!(r.outcome, Outcome::Timeout);
    assert!(took >= Duration::from_millis(600), "{took:?}");
    assert!(took < Duration::from_millis(1500), "{took:?}");
}

#[test]
fn undecodable_replies_are_broken() {
    let p = pair(Duration::from_millis(200), 1);
    let r = p
        .client
        .query_sshfp("garbage.test", p.plain.addr(), false)
        .unwrap();
    assert_eq!(r.outcome, Outcome::Broken);
    let r = p
        .client
        .query_sshfp("refused.test", p.plain.addr(), false)
        .unwrap();
    assert_eq!(r.outcome, Outcome::Broken);
}

#[test]
fn truncated_udp_falls_back_to_tcp() {
    let p = pair(Duration::from_secs(1), 1);
    let r = p
        .client
        .query_sshfp("big.test", p.plain.addr(), false)
        .unwrap();
    assert_eq!(r.outcome, Outcome::NoError);
    assert_eq!(r.sshfp_records().count(), 3);
    assert_eq!(
        p.plain
            .stats()
            .tcp_queries
            .load(std::sync::atomic::Ordering::Relaxed),
        1
    );
}

#[test]
fn follows_cname_and_dedups_addresses() {
    let p = pair(Duration::from_secs(1), 1);
    let a = p.client.query_a("alias.test", p.plain.addr()).unwrap();
    assert_eq!(a.outcome, Outcome::NoError);
    assert_eq!(a.canonical_name.as_deref(), Some("four.test"));
    assert_eq!(
        a.ipv4_addresses().collect::<Vec<_>>(),
        [Ipv4Addr::new(192, 0, 2, 1), Ipv4Addr::new(192, 0, 2, 2)]
    );
}

#[test]
fn malformed_rdata_is_kept_apart() {
    let p = pair(Duration::from_secs(1), 1);
    let r = p
        .client
        .query_sshfp("junk.test", p.plain.addr(), false)
        .unwrap();
    assert_eq!(r.outcome, Outcome::NoError);
    assert_eq!(r.sshfp_records().count(), 0);
    assert_eq!(r.malformed_count(), 1);
    assert!(matches!(r.records[0], Rdata::Malformed { rtype: 44, .. }));
}

#[test]
fn probe_distinguishes_live_and_silent_resolvers() {
    let p = pair(Duration::from_millis(200), 1);
    assert_eq!(p.client.probe(p.plain.addr()).unwrap(), Outcome::NoError);
    let silent = MockDns::silent(LO).unwrap();
    assert_eq!(p.client.probe(silent.addr()).unwrap(), Outcome::Timeout);
}
