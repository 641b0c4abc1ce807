//! Concurrent scan driver.
//!
//! A scan moves every input name through
//! `ingest → wildcard filter → dedup → SSHFP query → parse/validate →
//! address lookup → keyscan → validating re-query` and writes exactly one
//! JSON line per surviving name. Stages are connected by bounded queues;
//! a single writer owns the output file.

mod ingest;
mod names;
mod ratelimit;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use crossbeam_channel::bounded;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dns::{DnsClient, DnsLookupResult, Outcome, Rdata, ResolverConfig};
use crate::keyscan::{HostLimiter, KeyType, KeyscanResult, KeyscanTarget, Keyscanner};
use crate::sshfp::{match_record, HostKey, MatchOutcome, SshfpRecord, Validity};

pub use ingest::{ingest, InputFormat, InputSource, Names};
pub use names::{is_wildcard, normalize_domain, registrable_domain, NameError, SuffixList};
pub use ratelimit::{rate_limited_acquire, Clock, ManualClock, Permit, RateLimiter, SystemClock};

/// Version of the result line schema. Field names are stable; new fields
/// may be added.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dedup {
    None,
    #[default]
    ExactName,
    Registrable,
}

impl FromStr for Dedup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Dedup::None),
            "exact" | "exact_name" | "exact-name" => Ok(Dedup::ExactName),
            "registrable" => Ok(Dedup::Registrable),
            _ => Err(format!("unknown dedup mode {s:?}")),
        }
    }
}

fn default_query_workers() -> usize {
    50
}
fn default_ssh_workers() -> usize {
    16
}
fn default_qps() -> f64 {
    200.0
}
fn default_port() -> u16 {
    crate::keyscan::DEFAULT_PORT
}
fn default_key_types() -> Vec<KeyType> {
    KeyType::DEFAULT.to_vec()
}
fn default_ssh_timeout() -> Duration {
    crate::keyscan::DEFAULT_TIMEOUT
}
fn default_per_host() -> usize {
    crate::keyscan::DEFAULT_PER_HOST_CONNECTIONS
}
fn default_queue() -> usize {
    1024
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    #[serde(default)]
    pub input: InputSource,
    pub resolver: ResolverConfig,
    #[serde(default = "default_query_workers")]
    pub query_workers: usize,
    #[serde(default = "default_ssh_workers")]
    pub ssh_workers: usize,
    #[serde(default = "default_qps")]
    pub qps_limit: f64,
    #[serde(default)]
    pub dedup: Dedup,
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psl: Option<PathBuf>,
    #[serde(default = "default_port")]
    pub ssh_port: u16,
    #[serde(default = "default_key_types")]
    pub key_types: Vec<KeyType>,
    #[serde(default = "default_ssh_timeout", with = "crate::serde_secs")]
    pub ssh_timeout: Duration,
    #[serde(default = "default_per_host")]
    pub per_host_connections: usize,
    /// Also look up AAAA records and scan IPv6 addresses.
    #[serde(default)]
    pub ipv6: bool,
    #[serde(default)]
    pub resume: bool,
    #[serde(default = "default_queue")]
    pub queue_capacity: usize,
    /// Appended to the SSH identification string so operators can find out
    /// who is scanning them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_url: Option<String>,
}

impl ScanConfig {
    pub fn new(resolver: ResolverConfig, output: impl Into<PathBuf>) -> Self {
        ScanConfig {
            input: InputSource::default(),
            resolver,
            query_workers: default_query_workers(),
            ssh_workers: default_ssh_workers(),
            qps_limit: default_qps(),
            dedup: Dedup::default(),
            output: output.into(),
            psl: None,
            ssh_port: default_port(),
            key_types: default_key_types(),
            ssh_timeout: default_ssh_timeout(),
            per_host_connections: default_per_host(),
            ipv6: false,
            resume: false,
            queue_capacity: default_queue(),
            policy_url: None,
        }
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        self.resolver
            .validate()
            .map_err(|e| ScanError::Config(e.to_string()))?;
        if self.query_workers == 0 || self.ssh_workers == 0 {
            return Err(ScanError::Config("worker counts must be at least 1".into()));
        }
        if !(self.qps_limit.is_finite() && self.qps_limit > 0.0) {
            return Err(ScanError::Config("qps limit must be positive".into()));
        }
        if self.key_types.is_empty() {
            return Err(ScanError::Config("no key types requested".into()));
        }
        if self.ssh_timeout.is_zero() {
            return Err(ScanError::Config("ssh timeout must be positive".into()));
        }
        Ok(())
    }

    pub fn suffix_list(&self) -> Result<SuffixList, ScanError> {
        match &self.psl {
            Some(p) => SuffixList::from_file(p)
                .map_err(|e| ScanError::Config(format!("public suffix list {}: {e}", p.display()))),
            None => Ok(SuffixList::implicit_only()),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("output {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
    #[error("reading input: {0}")]
    Input(io::Error),
}

/// Where a domain left the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanStatus {
    InvalidName,
    Wildcard,
    SshfpLookupFailed,
    NoSshfpRecords,
    NoValidRecords,
    ALookupFailed,
    NoIpv4Address,
    Scanned,
}

impl ScanStatus {
    pub const ALL: [ScanStatus; 8] = [
        ScanStatus::InvalidName,
        ScanStatus::Wildcard,
        ScanStatus::SshfpLookupFailed,
        ScanStatus::NoSshfpRecords,
        ScanStatus::NoValidRecords,
        ScanStatus::ALookupFailed,
        ScanStatus::NoIpv4Address,
        ScanStatus::Scanned,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScanStatus::InvalidName => "invalid_name",
            ScanStatus::Wildcard => "wildcard",
            ScanStatus::SshfpLookupFailed => "sshfp_lookup_failed",
            ScanStatus::NoSshfpRecords => "no_sshfp_records",
            ScanStatus::NoValidRecords => "no_valid_records",
            ScanStatus::ALookupFailed => "a_lookup_failed",
            ScanStatus::NoIpv4Address => "no_ipv4_address",
            ScanStatus::Scanned => "scanned",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedRecord {
    pub record: SshfpRecord,
    pub validity: Validity,
}

/// Outcome of one (record, key) comparison. `record` indexes
/// `DomainScanResult::records`; `key` indexes the keys of the keyscan for
/// `address`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub record: usize,
    pub address: IpAddr,
    pub key: usize,
    pub outcome: MatchOutcome,
}

/// One line of the scan log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainScanResult {
    pub schema_version: u32,
    /// The name exactly as read from the input.
    pub input: String,
    /// Normalized name, or the trimmed input if normalization failed.
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registrable_domain: Option<String>,
    pub status: ScanStatus,
    pub started_at_ms: u64,
    pub finished_at_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sshfp_lookup: Option<DnsLookupResult>,
    #[serde(default)]
    pub records: Vec<ParsedRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_lookup: Option<DnsLookupResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aaaa_lookup: Option<DnsLookupResult>,
    #[serde(default)]
    pub keyscans: Vec<KeyscanResult>,
    #[serde(default)]
    pub matches: Vec<MatchEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validating_lookup: Option<DnsLookupResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl DomainScanResult {
    fn new(input: &str, domain: String, status: ScanStatus) -> Self {
        let now = unix_ms();
        DomainScanResult {
            schema_version: SCHEMA_VERSION,
            input: input.to_owned(),
            domain,
            registrable_domain: None,
            status,
            started_at_ms: now,
            finished_at_ms: now,
            sshfp_lookup: None,
            records: Vec::new(),
            a_lookup: None,
            aaaa_lookup: None,
            keyscans: Vec::new(),
            matches: Vec::new(),
            validating_lookup: None,
            error: None,
        }
    }

    pub fn valid_records(&self) -> impl Iterator<Item = &SshfpRecord> {
        self.records
            .iter()
            .filter(|p| p.validity == Validity::Valid)
            .map(|p| &p.record)
    }

    /// Distinct host keys over all scanned addresses.
    pub fn host_keys(&self) -> Vec<&HostKey> {
        let mut out: Vec<&HostKey> = Vec::new();
        for k in self.keyscans.iter().flat_map(|s| s.host_keys()) {
            if !out.contains(&k) {
                out.push(k);
            }
        }
        out
    }

    pub fn keyscan_attempted(&self) -> bool {
        !self.keyscans.is_empty()
    }

    /// Any (record, key) pair matched.
    pub fn any_match(&self) -> bool {
        self.matches.iter().any(|m| m.outcome.matched())
    }
}

fn unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// A name that passed the name filters and awaits DNS.
#[derive(Clone, Debug)]
pub struct Job {
    pub input: String,
    pub domain: String,
    pub registrable_domain: Option<String>,
}

/// What the ingest stage decided about one name.
#[derive(Debug)]
pub enum Prefiltered {
    Job(Job),
    /// Filtered out, but still logged.
    Logged(Box<DomainScanResult>),
    Duplicate,
}

/// Dedup state shared by the ingest stage and resume.
#[derive(Debug, Default)]
pub struct NameFilter {
    mode: Dedup,
    seen: HashSet<String>,
}

impl NameFilter {
    pub fn new(mode: Dedup) -> Self {
        NameFilter {
            mode,
            seen: HashSet::new(),
        }
    }

    fn key<'a>(&self, domain: &'a str, registrable: Option<&'a str>) -> Option<&'a str> {
        match self.mode {
            Dedup::None => None,
            Dedup::ExactName => Some(domain),
            Dedup::Registrable => Some(registrable.unwrap_or(domain)),
        }
    }

    fn mark(&mut self, domain: &str, registrable: Option<&str>) -> bool {
        match self.key(domain, registrable) {
            None => true,
            Some(k) => self.seen.insert(k.to_owned()),
        }
    }

    /// normalize → wildcard filter → dedup.
    pub fn prefilter(&mut self, input: &str, psl: &SuffixList) -> Prefiltered {
        let domain = match normalize_domain(input.trim()) {
            Ok(d) => d,
            Err(e) => {
                let mut r =
                    DomainScanResult::new(input, input.trim().to_owned(), ScanStatus::InvalidName);
                r.error = Some(e.to_string());
                return Prefiltered::Logged(Box::new(r));
            }
        };
        let registrable = registrable_domain(domain.trim_start_matches("*."), psl).ok();
        if is_wildcard(&domain) {
            let mut r = DomainScanResult::new(input, domain, ScanStatus::Wildcard);
            r.registrable_domain = registrable;
            return Prefiltered::Logged(Box::new(r));
        }
        if !self.mark(&domain, registrable.as_deref()) {
            return Prefiltered::Duplicate;
        }
        Prefiltered::Job(Job {
            input: input.to_owned(),
            domain,
            registrable_domain: registrable,
        })
    }
}

/// Result of the DNS stages for one name.
#[derive(Debug)]
pub enum Staged {
    Done(Box<DomainScanResult>),
    Keyscan(Box<DomainScanResult>, Vec<IpAddr>),
}

/// Per-domain scan logic shared by the pipeline workers and single-domain
/// verification.
#[derive(Debug)]
pub struct DomainScanner {
    dns: DnsClient,
    keyscanner: Keyscanner,
    limiter: Arc<RateLimiter>,
    ssh_port: u16,
    key_types: Vec<KeyType>,
    ssh_timeout: Duration,
    ipv6: bool,
}

impl DomainScanner {
    pub fn new(config: &ScanConfig) -> Self {
        DomainScanner::with_limiter(config, Arc::new(RateLimiter::new(config.qps_limit)))
    }

    pub fn with_limiter(config: &ScanConfig, limiter: Arc<RateLimiter>) -> Self {
        DomainScanner {
            dns: DnsClient::new(config.resolver.clone()),
            keyscanner: Keyscanner::new(
                HostLimiter::new(config.per_host_connections),
                config.policy_url.clone(),
            ),
            limiter,
            ssh_port: config.ssh_port,
            key_types: config.key_types.clone(),
            ssh_timeout: config.ssh_timeout,
            ipv6: config.ipv6,
        }
    }

    pub fn dns(&self) -> &DnsClient {
        &self.dns
    }

    /// SSHFP query, record parsing and address lookup.
    pub fn dns_stage(&self, job: Job) -> Staged {
        let mut r = DomainScanResult::new(&job.input, job.domain, ScanStatus::SshfpLookupFailed);
        r.registrable_domain = job.registrable_domain;
        let resolvers = self.dns.config().clone();
        let done = |mut r: DomainScanResult, status| {
            r.status = status;
            r.finished_at_ms = unix_ms();
            Staged::Done(Box::new(r))
        };

        self.limiter.acquire(1);
        let sshfp = match self
            .dns
            .query_sshfp(&r.domain, resolvers.plain_resolver, false)
        {
            Ok(l) => l,
            Err(e) => {
                r.error = Some(e.to_string());
                return done(r, ScanStatus::SshfpLookupFailed);
            }
        };
        let outcome = sshfp.outcome;
        let any_sshfp = sshfp
            .records
            .iter()
            .any(|rd| matches!(rd, Rdata::Sshfp(_) | Rdata::Malformed { .. }));
        r.records = sshfp
            .sshfp_records()
            .map(|rec| ParsedRecord {
                validity: rec.validate(),
                record: rec.clone(),
            })
            .collect();
        r.sshfp_lookup = Some(sshfp);
        if outcome != Outcome::NoError {
            return done(r, ScanStatus::SshfpLookupFailed);
        }
        if !any_sshfp {
            return done(r, ScanStatus::NoSshfpRecords);
        }
        if r.valid_records().next().is_none() {
            return done(r, ScanStatus::NoValidRecords);
        }

        self.limiter.acquire(1);
        let mut addrs: Vec<IpAddr> = Vec::new();
        let a_failed;
        match self.dns.query_a(&r.domain, resolvers.plain_resolver) {
            Ok(a) => {
                a_failed = a.outcome != Outcome::NoError;
                addrs.extend(a.ipv4_addresses().map(IpAddr::from));
                r.a_lookup = Some(a);
            }
            Err(e) => {
                a_failed = true;
                r.error = Some(e.to_string());
            }
        }
        if self.ipv6 {
            self.limiter.acquire(1);
            if let Ok(aaaa) = self.dns.query_aaaa(&r.domain, resolvers.plain_resolver) {
                addrs.extend(aaaa.ipv6_addresses().map(IpAddr::from));
                r.aaaa_lookup = Some(aaaa);
            }
        }
        if addrs.is_empty() {
            let status = if a_failed {
                ScanStatus::ALookupFailed
            } else {
                ScanStatus::NoIpv4Address
            };
            return done(r, status);
        }
        Staged::Keyscan(Box::new(r), addrs)
    }

    /// Keyscan of every address, matching, and the validating re-query.
    pub fn ssh_stage(&self, mut r: DomainScanResult, addrs: Vec<IpAddr>) -> DomainScanResult {
        for addr in addrs {
            self.limiter.acquire(1);
            let target = KeyscanTarget {
                address: addr,
                port: self.ssh_port,
                algos: self.key_types.clone(),
                timeout: self.ssh_timeout,
            };
            let scan = self.keyscanner.collect(&target);
            for (ri, parsed) in r.records.iter().enumerate() {
                for (ki, key) in scan.keys.iter().enumerate() {
                    r.matches.push(MatchEntry {
                        record: ri,
                        address: addr,
                        key: ki,
                        outcome: match_record(&parsed.record, &key.key),
                    });
                }
            }
            r.keyscans.push(scan);
        }

        self.limiter.acquire(1);
        let validating = self.dns.config().validating_resolver;
        match self.dns.query_sshfp(&r.domain, validating, true) {
            Ok(v) => r.validating_lookup = Some(v),
            Err(e) => r.error = Some(e.to_string()),
        }
        r.status = ScanStatus::Scanned;
        r.finished_at_ms = unix_ms();
        r
    }

    /// Full per-domain path for a single name, without dedup.
    pub fn scan(&self, input: &str, psl: &SuffixList) -> DomainScanResult {
        match NameFilter::new(Dedup::None).prefilter(input, psl) {
            Prefiltered::Logged(r) => *r,
            Prefiltered::Duplicate => unreachable!("dedup disabled"),
            Prefiltered::Job(job) => match self.dns_stage(job) {
                Staged::Done(r) => *r,
                Staged::Keyscan(r, addrs) => self.ssh_stage(*r, addrs),
            },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ScanSummary {
    pub written: u64,
    pub by_status: BTreeMap<ScanStatus, u64>,
    pub duplicates_dropped: u64,
    /// Input names skipped because the output already held their result.
    pub resumed: u64,
}

/// Names already present in an output log.
#[derive(Debug, Default)]
struct Checkpoint {
    done: HashMap<String, u64>,
    lines: u64,
}

#[derive(Deserialize)]
struct CheckpointLine {
    input: String,
    domain: String,
    #[serde(default)]
    registrable_domain: Option<String>,
    status: ScanStatus,
}

/// Truncates a partial trailing line, then indexes the complete ones.
fn load_checkpoint(path: &Path, filter: &mut NameFilter) -> io::Result<Checkpoint> {
    let mut cp = Checkpoint::default();
    let mut file = match OpenOptions::new().read(true).write(true).open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(cp),
        Err(e) => return Err(e),
    };
    let mut good_len = 0u64;
    let mut reader = BufReader::new(&mut file);
    let mut line = Vec::new();
    loop {
        line.clear();
        let n = reader.read_until(b'\n', &mut line)?;
        if n == 0 || line.last() != Some(&b'\n') {
            break;
        }
        good_len += n as u64;
        match serde_json::from_slice::<CheckpointLine>(&line) {
            Ok(l) => {
                if !matches!(l.status, ScanStatus::InvalidName | ScanStatus::Wildcard) {
                    filter.mark(&l.domain, l.registrable_domain.as_deref());
                }
                *cp.done.entry(l.input).or_insert(0) += 1;
                cp.lines += 1;
            }
            Err(e) => log::warn!("{}: skipping unreadable line: {e}", path.display()),
        }
    }
    drop(reader);
    if file.seek(SeekFrom::End(0))? != good_len {
        log::warn!("{}: dropping partial trailing line", path.display());
        file.set_len(good_len)?;
    }
    Ok(cp)
}

/// Runs a scan over `input`, writing one line per name to
/// `config.output`. Per-domain failures are logged in the output; only an
/// unusable configuration or output file aborts the run.
pub fn run_scan<I>(config: &ScanConfig, input: I) -> Result<ScanSummary, ScanError>
where
    I: IntoIterator<Item = io::Result<String>>,
{
    config.validate()?;
    let psl = config.suffix_list()?;
    let out_err = |source| ScanError::Output {
        path: config.output.clone(),
        source,
    };

    let mut filter = NameFilter::new(config.dedup);
    let mut checkpoint = if config.resume {
        load_checkpoint(&config.output, &mut filter).map_err(out_err)?
    } else {
        Checkpoint::default()
    };
    let file = OpenOptions::new()
        .create(true)
        .append(config.resume)
        .write(true)
        .truncate(!config.resume)
        .open(&config.output)
        .map_err(out_err)?;
    if checkpoint.lines > 0 {
        log::info!("resuming after {} completed names", checkpoint.lines);
    }

    let scanner = DomainScanner::new(config);
    let cap = config.queue_capacity.max(1);
    let (job_tx, job_rx) = bounded::<Job>(cap);
    let (ssh_tx, ssh_rx) = bounded::<(Box<DomainScanResult>, Vec<IpAddr>)>(cap);
    let (out_tx, out_rx) = bounded::<Box<DomainScanResult>>(cap);

    let mut summary = ScanSummary::default();
    let mut input_error = None;

    let written = std::thread::scope(|s| {
        let writer = s.spawn(move || write_results(file, out_rx));

        for _ in 0..config.query_workers {
            let (job_rx, ssh_tx, out_tx, scanner) =
                (job_rx.clone(), ssh_tx.clone(), out_tx.clone(), &scanner);
            s.spawn(move || {
                for job in job_rx {
                    let sent = match scanner.dns_stage(job) {
                        Staged::Done(r) => out_tx.send(r).is_ok(),
                        Staged::Keyscan(r, addrs) => ssh_tx.send((r, addrs)).is_ok(),
                    };
                    if !sent {
                        break;
                    }
                }
            });
        }
        for _ in 0..config.ssh_workers {
            let (ssh_rx, out_tx, scanner) = (ssh_rx.clone(), out_tx.clone(), &scanner);
            s.spawn(move || {
                for (r, addrs) in ssh_rx {
                    if out_tx.send(Box::new(scanner.ssh_stage(*r, addrs))).is_err() {
                        break;
                    }
                }
            });
        }
        drop((job_rx, ssh_tx, ssh_rx));

        for name in input {
            let name = match name {
                Ok(n) => n,
                Err(e) => {
                    input_error = Some(e);
                    break;
                }
            };
            if let Some(n) = checkpoint.done.get_mut(&name).filter(|n| **n > 0) {
                *n -= 1;
                summary.resumed += 1;
                continue;
            }
            let sent = match filter.prefilter(&name, &psl) {
                Prefiltered::Job(job) => job_tx.send(job).is_ok(),
                Prefiltered::Logged(r) => out_tx.send(r).is_ok(),
                Prefiltered::Duplicate => {
                    summary.duplicates_dropped += 1;
                    true
                }
            };
            if !sent {
                break;
            }
        }
        drop(job_tx);
        drop(out_tx);
        writer.join().expect("writer thread panicked")
    });

    let (written, by_status) = written.map_err(out_err)?;
    summary.written = written;
    summary.by_status = by_status;
    if let Some(e) = input_error {
        return Err(ScanError::Input(e));
    }
    Ok(summary)
}

type WriterTotals = (u64, BTreeMap<ScanStatus, u64>);

fn write_results(
    mut file: File,
    rx: crossbeam_channel::Receiver<Box<DomainScanResult>>,
) -> io::Result<WriterTotals> {
    let mut written = 0u64;
    let mut by_status = BTreeMap::new();
    let mut line = Vec::with_capacity(4096);
    for r in rx {
        line.clear();
        serde_json::to_writer(&mut line, &r).map_err(io::Error::from)?;
        line.push(b'\n');
        // One write per line so an interrupted run leaves whole lines.
        file.write_all(&line)?;
        written += 1;
        *by_status.entry(r.status).or_insert(0) += 1;
        if written.is_multiple_of(1000) {
            log::info!("{written} names written");
        }
    }
    file.flush()?;
    Ok((written, by_status))
}

/// Reads a scan log. Lines that do not decode are returned as errors with
/// their 1-based line number.
pub fn read_log(
    reader: impl BufRead,
) -> impl Iterator<Item = Result<DomainScanResult, (usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(serde_json::from_str(&l).map_err(|e| (i + 1, e.to_string()))),
            Err(e) => Some(Err((i + 1, e.to_string()))),
        })
}
