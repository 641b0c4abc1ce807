//! Stub DNS client for SSHFP and address lookups.
//!
//! Two recursive resolvers are used: a plain one for the bulk of the scan and
//! a DNSSEC-validating one whose AD flag decides whether a record set is
//! authenticated. Every lookup produces a [`DnsLookupResult`] whose
//! [`Outcome`] folds the transport and response code into one category.

pub mod wire;

use std::io::{self, Read, Write};
use std::net::{Ipv4Addr, Ipv6Addr, SocketAddr, TcpStream, UdpSocket};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sshfp::{parse_rdata, SshfpRecord};
use wire::{Message, TYPE_A, TYPE_AAAA, TYPE_SSHFP};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);
pub const DEFAULT_RETRIES: u32 = 2;

const MAX_CNAME_HOPS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Qtype {
    Sshfp,
    A,
    Aaaa,
}

impl Qtype {
    pub fn code(self) -> u16 {
        match self {
            Qtype::Sshfp => TYPE_SSHFP,
            Qtype::A => TYPE_A,
            Qtype::Aaaa => TYPE_AAAA,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    NoError,
    NxDomain,
    ServFail,
    Timeout,
    Broken,
}

impl Outcome {
    pub const ALL: [Outcome; 5] = [
        Outcome::NoError,
        Outcome::NxDomain,
        Outcome::ServFail,
        Outcome::Timeout,
        Outcome::Broken,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::NoError => "NOERROR",
            Outcome::NxDomain => "NXDOMAIN",
            Outcome::ServFail => "SERVFAIL",
            Outcome::Timeout => "TIMEOUT",
            Outcome::Broken => "BROKEN",
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What came back from one exchange with a resolver.
#[derive(Debug, Clone, Copy)]
pub enum RawResponse<'a> {
    Reply(&'a Message),
    Undecodable,
    NoReply,
}

/// Total mapping of a raw response onto the outcome taxonomy. Response codes
/// other than NOERROR, SERVFAIL and NXDOMAIN count as broken replies.
pub fn classify_response(raw: RawResponse<'_>) -> Outcome {
    match raw {
        RawResponse::NoReply => Outcome::Timeout,
        RawResponse::Undecodable => Outcome::Broken,
        RawResponse::Reply(msg) if !msg.header.qr => Outcome::Broken,
        RawResponse::Reply(msg) => match msg.rcode() {
            wire::RCODE_NOERROR => Outcome::NoError,
            wire::RCODE_NXDOMAIN => Outcome::NxDomain,
            wire::RCODE_SERVFAIL => Outcome::ServFail,
            _ => Outcome::Broken,
        },
    }
}

/// One decoded answer record.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "UPPERCASE")]
pub enum Rdata {
    Sshfp(SshfpRecord),
    A(Ipv4Addr),
    Aaaa(Ipv6Addr),
    /// RDATA of the queried type that could not be decoded.
    Malformed {
        rtype: u16,
        rdata: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DnsLookupResult {
    pub domain: String,
    pub qtype: Qtype,
    pub outcome: Outcome,
    pub records: Vec<Rdata>,
    pub ad_flag: bool,
    /// Whether the query went out with the DO bit to the validating path.
    pub validating: bool,
    pub resolver: SocketAddr,
    /// Owner of the answer records when a CNAME chain was followed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical_name: Option<String>,
    pub elapsed_ms: u64,
}

impl DnsLookupResult {
    pub fn sshfp_records(&self) -> impl Iterator<Item = &SshfpRecord> {
        self.records.iter().filter_map(|r| match r {
            Rdata::Sshfp(rec) => Some(rec),
            _ => None,
        })
    }

    pub fn ipv4_addresses(&self) -> impl Iterator<Item = Ipv4Addr> + '_ {
        self.records.iter().filter_map(|r| match r {
            Rdata::A(a) => Some(*a),
            _ => None,
        })
    }

    pub fn ipv6_addresses(&self) -> impl Iterator<Item = Ipv6Addr> + '_ {
        self.records.iter().filter_map(|r| match r {
            Rdata::Aaaa(a) => Some(*a),
            _ => None,
        })
    }

    pub fn malformed_count(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r, Rdata::Malformed { .. }))
            .count()
    }
}

#[derive(Debug, Error)]
pub enum DnsError {
    #[error("invalid domain name {0:?}")]
    InvalidName(String),
    #[error("socket error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("resolver timeout must be positive")]
    ZeroTimeout,
    #[error("plain and validating resolver are both {0}; set allow_same_resolver to permit this")]
    SameResolver(SocketAddr),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolverConfig {
    pub plain_resolver: SocketAddr,
    pub validating_resolver: SocketAddr,
    #[serde(with = "crate::serde_secs", default = "default_timeout")]
    pub timeout: Duration,
    /// Total number of attempts per lookup.
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default)]
    pub allow_same_resolver: bool,
}

fn default_timeout() -> Duration {
    DEFAULT_TIMEOUT
}

fn default_retries() -> u32 {
    DEFAULT_RETRIES
}

impl ResolverConfig {
    pub fn new(plain_resolver: SocketAddr, validating_resolver: SocketAddr) -> Self {
        ResolverConfig {
            plain_resolver,
            validating_resolver,
            timeout: DEFAULT_TIMEOUT,
            retries: DEFAULT_RETRIES,
            allow_same_resolver: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.timeout.is_zero() {
            return Err(ConfigError::ZeroTimeout);
        }
        if self.plain_resolver == self.validating_resolver && !self.allow_same_resolver {
            return Err(ConfigError::SameResolver(self.plain_resolver));
        }
        Ok(())
    }

    /// Upper bound on the wall time of one lookup, excluding scheduling.
    pub fn max_lookup_time(&self) -> Duration {
        self.timeout * self.retries.max(1)
    }
}

/// Checks length limits and label structure of a presentation-form name.
pub fn check_domain_name(domain: &str) -> Result<(), DnsError> {
    let name = domain.strip_suffix('.').unwrap_or(domain);
    let ok = !name.is_empty()
        && name.len() <= 253
        && name
            .split('.')
            .all(|label| !label.is_empty() && label.len() <= 63 && label.is_ascii());
    if ok {
        Ok(())
    } else {
        Err(DnsError::InvalidName(domain.to_owned()))
    }
}

enum Exchange {
    Reply(Message),
    Broken,
    NoReply,
}

/// A stub resolver client. Not meant to be shared between threads; each
/// worker builds its own.
#[derive(Debug, Clone)]
pub struct DnsClient {
    config: ResolverConfig,
}

impl DnsClient {
    pub fn new(config: ResolverConfig) -> Self {
        DnsClient { config }
    }

    pub fn config(&self) -> &ResolverConfig {
        &self.config
    }

    /// SSHFP lookup. With `want_dnssec` the query carries the DO bit and
    /// the response's AD flag is reported.
    pub fn query_sshfp(
        &self,
        domain: &str,
        resolver: SocketAddr,
        want_dnssec: bool,
    ) -> Result<DnsLookupResult, DnsError> {
        self.lookup(domain, Qtype::Sshfp, resolver, want_dnssec)
    }

    /// IPv4 addresses of `domain`, deduplicated in answer order.
    pub fn query_a(&self, domain: &str, resolver: SocketAddr) -> Result<DnsLookupResult, DnsError> {
        self.lookup(domain, Qtype::A, resolver, false)
    }

    pub fn query_aaaa(
        &self,
        domain: &str,
        resolver: SocketAddr,
    ) -> Result<DnsLookupResult, DnsError> {
        self.lookup(domain, Qtype::Aaaa, resolver, false)
    }

    /// Checks that a resolver answers at all (any response code counts).
    pub fn probe(&self, resolver: SocketAddr) -> Result<Outcome, DnsError> {
        let msg = Message::query(rand::random(), "", wire::TYPE_SOA, false);
        Ok(match self.exchange(resolver, &msg)? {
            Exchange::Reply(reply) => classify_response(RawResponse::Reply(&reply)),
            Exchange::Broken => Outcome::Broken,
            Exchange::NoReply => Outcome::Timeout,
        })
    }

    pub fn lookup(
        &self,
        domain: &str,
        qtype: Qtype,
        resolver: SocketAddr,
        want_dnssec: bool,
    ) -> Result<DnsLookupResult, DnsError> {
        check_domain_name(domain)?;
        let qname = domain.trim_end_matches('.').to_ascii_lowercase();
        let start = Instant::now();
        let query = Message::query(rand::random(), &qname, qtype.code(), want_dnssec);
        let mut result = DnsLookupResult {
            domain: qname.clone(),
            qtype,
            outcome: Outcome::Timeout,
            records: Vec::new(),
            ad_flag: false,
            validating: want_dnssec,
            resolver,
            canonical_name: None,
            elapsed_ms: 0,
        };
        match self.exchange(resolver, &query)? {
            Exchange::NoReply => result.outcome = Outcome::Timeout,
            Exchange::Broken => result.outcome = Outcome::Broken,
            Exchange::Reply(reply) => {
                result.outcome = classify_response(RawResponse::Reply(&reply));
                if result.outcome == Outcome::NoError {
                    result.ad_flag = want_dnssec && reply.header.ad;
                    let (owner, records) = extract_answers(&reply, &qname, qtype);
                    if owner != qname {
                        result.canonical_name = Some(owner);
                    }
                    result.records = records;
                }
            }
        }
        result.elapsed_ms = start.elapsed().as_millis() as u64;
        Ok(result)
    }

    /// Runs up to `retries` attempts. Broken replies are remembered so that a
    /// lookup where every reply was garbage reports BROKEN, not TIMEOUT.
    fn exchange(&self, resolver: SocketAddr, query: &Message) -> Result<Exchange, DnsError> {
        let mut saw_broken = false;
        for _ in 0..self.config.retries.max(1) {
            let deadline = Instant::now() + self.config.timeout;
            match self.attempt(resolver, query, deadline)? {
                Exchange::Reply(msg) => return Ok(Exchange::Reply(msg)),
                Exchange::Broken => saw_broken = true,
                Exchange::NoReply => {}
            }
        }
        Ok(if saw_broken {
            Exchange::Broken
        } else {
            Exchange::NoReply
        })
    }

    fn attempt(
        &self,
        resolver: SocketAddr,
        query: &Message,
        deadline: Instant,
    ) -> Result<Exchange, DnsError> {
        let bytes = query
            .encode()
            .map_err(|_| DnsError::InvalidName(query.questions[0].name.clone()))?;
        let bind: SocketAddr = if resolver.is_ipv4() {
            (Ipv4Addr::UNSPECIFIED, 0).into()
        } else {
            (Ipv6Addr::UNSPECIFIED, 0).into()
        };
        let sock = UdpSocket::bind(bind)?;
        sock.connect(resolver)?;
        if sock.send(&bytes).is_err() {
            return Ok(Exchange::NoReply);
        }
        let mut buf = vec![0u8; 65535];
        let mut saw_broken = false;
        while let Some(left) = remaining(deadline) {
            sock.set_read_timeout(Some(left))?;
            let n = match sock.recv(&mut buf) {
                Ok(n) => n,
                Err(e) if is_timeout(&e) => break,
                // ICMP port unreachable and friends surface here.
                Err(_) => break,
            };
            let Ok(reply) = Message::decode(&buf[..n]) else {
                // Could be a stray datagram; keep listening but remember it.
                saw_broken = true;
                continue;
            };
            if !answers_query(&reply, query) {
                continue;
            }
            if reply.header.tc {
                return self.attempt_tcp(resolver, &bytes, query, deadline);
            }
            return Ok(Exchange::Reply(reply));
        }
        Ok(if saw_broken {
            Exchange::Broken
        } else {
            Exchange::NoReply
        })
    }

    fn attempt_tcp(
        &self,
        resolver: SocketAddr,
        bytes: &[u8],
        query: &Message,
        deadline: Instant,
    ) -> Result<Exchange, DnsError> {
        let Some(left) = remaining(deadline) else {
            return Ok(Exchange::NoReply);
        };
        let mut stream = match TcpStream::connect_timeout(&resolver, left) {
            Ok(s) => s,
            Err(_) => return Ok(Exchange::NoReply),
        };
        let io = |stream: &mut TcpStream| -> io::Result<Vec<u8>> {
            stream.set_write_timeout(remaining(deadline).or(Some(Duration::from_millis(1))))?;
            let mut framed = (bytes.len() as u16).to_be_bytes().to_vec();
            framed.extend_from_slice(bytes);
            stream.write_all(&framed)?;
            let mut len = [0u8; 2];
            stream.set_read_timeout(remaining(deadline).or(Some(Duration::from_millis(1))))?;
            stream.read_exact(&mut len)?;
            let mut body = vec![0u8; u16::from_be_bytes(len) as usize];
            stream.read_exact(&mut body)?;
            Ok(body)
        };
        match io(&mut stream) {
            Ok(body) => match Message::decode(&body) {
                Ok(reply) if answers_query(&reply, query) => Ok(Exchange::Reply(reply)),
                _ => Ok(Exchange::Broken),
            },
            Err(e) if is_timeout(&e) => Ok(Exchange::NoReply),
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Ok(Exchange::Broken),
            Err(_) => Ok(Exchange::NoReply),
        }
    }
}

fn remaining(deadline: Instant) -> Option<Duration> {
    deadline
        .checked_duration_since(Instant::now())
        .filter(|d| !d.is_zero())
}

fn is_timeout(e: &io::Error) -> bool {
    matches!(
        e.kind(),
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
    )
}

fn answers_query(reply: &Message, query: &Message) -> bool {
    reply.header.id == query.header.id
        && (reply.questions.is_empty() || reply.questions == query.questions)
}

/// Follows the CNAME chain from `qname` through the answer section and
/// collects records of `qtype` owned by the final name.
fn extract_answers(reply: &Message, qname: &str, qtype: Qtype) -> (String, Vec<Rdata>) {
    let mut owner = qname.to_owned();
    for _ in 0..MAX_CNAME_HOPS {
        let next = reply
            .answers
            .iter()
            .find(|r| r.name == owner && r.rtype == wire::TYPE_CNAME)
            .and_then(|r| r.cname_target());
        match next {
            Some(target) if target != owner => owner = target,
            _ => break,
        }
    }
    let mut out: Vec<Rdata> = Vec::new();
    for rec in reply
        .answers
        .iter()
        .filter(|r| r.name == owner && r.rtype == qtype.code() && r.class == wire::CLASS_IN)
    {
        let item = match qtype {
            Qtype::Sshfp => parse_rdata(&rec.rdata).map(Rdata::Sshfp).ok(),
            Qtype::A => <[u8; 4]>::try_from(rec.rdata.as_slice())
                .ok()
                .map(|b| Rdata::A(Ipv4Addr::from(b))),
            Qtype::Aaaa => <[u8; 16]>::try_from(rec.rdata.as_slice())
                .ok()
                .map(|b| Rdata::Aaaa(Ipv6Addr::from(b))),
        };
        let item = item.unwrap_or_else(|| Rdata::Malformed {
            rtype: rec.rtype,
            rdata: hex::encode(&rec.rdata),
        });
        let is_address = matches!(item, Rdata::A(_) | Rdata::Aaaa(_));
        if !(is_address && out.contains(&item)) {
            out.push(item);
        }
    }
    (owner, out)
}
