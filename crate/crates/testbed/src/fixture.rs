//! The ten-domain testbed: two mock resolvers and six mock daemons on
//! loopback addresses sharing one port.

use std::io;
use std::net::{IpAddr, Ipv4Addr, SocketAddr, TcpListener};
use std::path::Path;
use std::time::Duration;

use sshfp_audit::dns::ResolverConfig;
use sshfp_audit::pipeline::ScanConfig;
use sshfp_audit::{generate_records, HashType, HostKey, KeyAlgo, SshfpRecord};

use crate::dns::{MockDns, Mode, Security, Zone, ZoneEntry};
use crate::ssh::{HostKeyPair, MockSshd};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    /// Every record matches a presented key; record set signed.
    FullSecure,
    /// Half of the records are stale; record set unsigned.
    PartialInsecure,
    /// Valid records, but nothing listens on the address.
    NoSsh,
    /// Only an undecodable-as-valid record (unassigned key algorithm).
    InvalidRecord,
    NxDomain,
}

#[derive(Clone, Debug)]
pub struct FixtureDomain {
    pub name: String,
    pub category: Category,
    pub records: Vec<SshfpRecord>,
    pub addresses: Vec<Ipv4Addr>,
    pub security: Security,
    /// Keys the daemon at `addresses` presents.
    pub keys: Vec<HostKey>,
}

/// A small public suffix list snapshot for tests.
pub const FIXTURE_PSL: &str = "\
// ===BEGIN ICANN DOMAINS===
test
tld
uk
co.uk
// ===END ICANN DOMAINS===
";

pub struct Testbed {
    pub plain: MockDns,
    pub validating: MockDns,
    pub daemons: Vec<MockSshd>,
    pub ssh_port: u16,
    pub domains: Vec<FixtureDomain>,
}

fn loopback(last: u8) -> IpAddr {
    IpAddr::V4(Ipv4Addr::new(127, 0, 0, last))
}

/// Binds one daemon per address, all on the same port.
fn start_daemons(addrs: &[IpAddr], keys: &[Vec<HostKeyPair>]) -> io::Result<(u16, Vec<MockSshd>)> {
    let mut last_err = None;
    for _ in 0..32 {
        let port = TcpListener::bind((addrs[0], 0))?.local_addr()?.port();
        let started: io::Result<Vec<MockSshd>> = addrs
            .iter()
            .zip(keys)
            .map(|(ip, k)| MockSshd::bind(SocketAddr::new(*ip, port), k.clone()))
            .collect();
        match started {
            Ok(d) => return Ok((port, d)),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| io::Error::other("no common free port")))
}

impl Testbed {
    pub fn start() -> io::Result<Self> {
        let mut domains = Vec::new();
        let mut daemon_addrs = Vec::new();
        let mut daemon_keys = Vec::new();
        let both = [HashType::SHA1, HashType::SHA256];

        for i in 0..3u8 {
            let keys = vec![HostKeyPair::ed25519(10 + i), HostKeyPair::p256(10 + i)];
            let public: Vec<HostKey> = keys.iter().map(HostKeyPair::host_key).collect();
            let addr = Ipv4Addr::new(127, 0, 0, 2 + i);
            domains.push(FixtureDomain {
                name: format!("full{}.example.test", i + 1),
                category: Category::FullSecure,
                records: generate_records(&public, &both).expect("known algorithms"),
                addresses: vec![addr],
                security: Security::Secure,
                keys: public,
            });
            daemon_addrs.push(IpAddr::V4(addr));
            daemon_keys.push(keys);
        }
        for i in 0..3u8 {
            let keys = vec![HostKeyPair::ed25519(20 + i), HostKeyPair::p256(20 + i)];
            let public: Vec<HostKey> = keys.iter().map(HostKeyPair::host_key).collect();
            // The ECDSA key was rotated; DNS still lists the old one.
            let stale = HostKeyPair::p256(120 + i).host_key();
            let mut records = generate_records(&public[..1], &both).expect("known algorithms");
            records.extend(generate_records(&[stale], &both).expect("known algorithms"));
            let addr = Ipv4Addr::new(127, 0, 0, 5 + i);
            domains.push(FixtureDomain {
                name: format!("partial{}.example.test", i + 1),
                category: Category::PartialInsecure,
                records,
                addresses: vec![addr],
                security: Security::Insecure,
                keys: public,
            });
            daemon_addrs.push(IpAddr::V4(addr));
            daemon_keys.push(keys);
        }
        // Both unreachable domains publish the same key.
        let shared = HostKeyPair::ed25519(30).host_key();
        for i in 0..2u8 {
            domains.push(FixtureDomain {
                name: format!("nossh{}.example.test", i + 1),
                category: Category::NoSsh,
                records: generate_records(std::slice::from_ref(&shared), &both)
                    .expect("known algorithms"),
                addresses: vec![Ipv4Addr::new(127, 0, 0, 20 + i)],
                security: Security::Insecure,
                keys: Vec::new(),
            });
        }
        domains.push(FixtureDomain {
            name: "invalid.example.test".into(),
            category: Category::InvalidRecord,
            records: vec![SshfpRecord::new(
                KeyAlgo::from_code(5),
                HashType::SHA1,
                vec![0xab; 20],
            )],
            addresses: vec![Ipv4Addr::new(127, 0, 0, 30)],
            security: Security::Insecure,
            keys: Vec::new(),
        });
        domains.push(FixtureDomain {
            name: "missing.example.test".into(),
            category: Category::NxDomain,
            records: Vec::new(),
            addresses: Vec::new(),
            security: Security::Insecure,
            keys: Vec::new(),
        });

        let mut zone = Zone::new();
        for d in domains.iter().filter(|d| d.category != Category::NxDomain) {
            let e = zone.insert(&d.name, ZoneEntry::with_records(&d.records));
            e.a = d.addresses.clone();
            e.security = d.security;
        }

        let (ssh_port, daemons) = start_daemons(&daemon_addrs, &daemon_keys)?;
        let plain = MockDns::start(loopback(1), zone.clone(), Mode::Plain)?;
        let validating = MockDns::start(loopback(1), zone, Mode::Validating)?;
        Ok(Testbed {
            plain,
            validating,
            daemons,
            ssh_port,
            domains,
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.domains.iter().map(|d| d.name.clone()).collect()
    }

    pub fn count(&self, category: Category) -> usize {
        self.domains
            .iter()
            .filter(|d| d.category == category)
            .count()
    }

    pub fn resolver_config(&self) -> ResolverConfig {
        let mut rc = ResolverConfig::new(self.plain.addr(), self.validating.addr());
        rc.timeout = Duration::from_secs(1);
        rc.retries = 2;
        rc
    }

    pub fn scan_config(&self, output: &Path) -> ScanConfig {
        let mut cfg = ScanConfig::new(self.resolver_config(), output);
        cfg.ssh_port = self.ssh_port;
        cfg.ssh_timeout = Duration::from_secs(3);
        cfg.query_workers = 4;
        cfg.ssh_workers = 4;
        cfg
    }

    /// Message numbers received by all daemons, over all sessions.
    pub fn received_messages(&self) -> Vec<u8> {
        self.daemons
            .iter()
            .flat_map(|d| d.sessions())
            .flat_map(|s| s.received)
            .collect()
    }
}
