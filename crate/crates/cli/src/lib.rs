//! The `sshfp-audit` command line: scan, verify, gen and analyze.

pub mod config;

use std::fs::File;
use std::io::BufReader;
use std::net::{IpAddr, SocketAddr, ToSocketAddrs};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use sshfp_audit::analysis::{
    classify_domain_match, render_text, result_dnssec_status, Aggregator, DnssecStatus,
};
use sshfp_audit::dns::{DnsClient, Outcome};
use sshfp_audit::keyscan::{collect_host_keys, parse_key_types, KeyscanTarget};
use sshfp_audit::pipeline::{
    ingest, read_log, run_scan, DomainScanner, ScanConfig, ScanStatus, SuffixList,
};
use sshfp_audit::{generate_records, HashType, HostKey, SshfpRecord};

use crate::config::{seconds, FileConfig, RESOLVER_ENV, VALIDATING_RESOLVER_ENV};

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    /// `verify` found no match or no DNSSEC authentication.
    Negative = 1,
    Usage = 2,
    Runtime = 3,
}

/// An error with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            exit: Exit::Usage,
            error: error.into(),
        }
    }

    fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            exit: Exit::Runtime,
            error: error.into(),
        }
    }
}

type CmdResult = std::result::Result<Exit, Failure>;

#[derive(Debug, Parser)]
#[command(
    name = "sshfp-audit",
    version,
    about = "Audit SSHFP records against live SSH host keys"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan a list of domain names and write one JSON line per name.
    Scan(Box<ScanArgs>),
    /// Check one domain: records match a live key and are DNSSEC-authenticated.
    Verify(VerifyArgs),
    /// Print SSHFP records for the host keys a server presents.
    Gen(GenArgs),
    /// Aggregate scan logs into a report.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ResolverArgs {
    /// Non-validating resolver, HOST[:PORT].
    #[arg(long, env = RESOLVER_ENV)]
    pub resolver: Option<String>,
    /// Validating resolver whose AD flag is trusted, HOST[:PORT].
    #[arg(long, env = VALIDATING_RESOLVER_ENV)]
    pub validating_resolver: Option<String>,
    /// Permit the same endpoint for both roles.
    #[arg(long)]
    pub allow_same_resolver: bool,
    /// DNS timeout per attempt, in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Total attempts per DNS lookup.
    #[arg(long)]
    pub retries: Option<u32>,
}

impl ResolverArgs {
    fn file_config(&self) -> FileConfig {
        FileConfig {
            resolver: self.resolver.clone(),
            validating_resolver: self.validating_resolver.clone(),
            allow_same_resolver: self.allow_same_resolver.then_some(true),
            timeout: self.timeout,
            retries: self.retries,
            ..FileConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Name list; `-` for standard input.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// `plain` (one name per line) or `ranked` (`rank,name`).
    #[arg(long)]
    pub input_format: Option<String>,
    #[command(flatten)]
    pub resolvers: ResolverArgs,
    /// DNS stage workers.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Keyscan stage workers.
    #[arg(long)]
    pub ssh_workers: Option<usize>,
    /// Global rate limit, operations per second.
    #[arg(long)]
    pub qps: Option<f64>,
    /// Output log (JSON lines).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Public suffix list file.
    #[arg(long)]
    pub psl: Option<PathBuf>,
    /// `none`, `exact` or `registrable`.
    #[arg(long)]
    pub dedup: Option<String>,
    #[arg(long)]
    pub ssh_port: Option<u16>,
    /// Comma-separated key types, e.g. `rsa,ecdsa,ed25519`.
    #[arg(long)]
    pub key_types: Option<String>,
    /// Keyscan timeout per connection, in seconds.
    #[arg(long)]
    pub ssh_timeout: Option<f64>,
    #[arg(long)]
    pub per_host_connections: Option<usize>,
    /// Also resolve and scan IPv6 addresses.
    #[arg(long)]
    pub ipv6: bool,
    /// Continue an interrupted run, skipping names already in the output.
    #[arg(long)]
    pub resume: bool,
    #[arg(long)]
    pub queue_capacity: Option<usize>,
    /// URL appended to the SSH identification string.
    #[arg(long)]
    pub policy_url: Option<String>,
}

impl ScanArgs {
    fn file_config(&self) -> FileConfig {
        FileConfig {
            input: self.input.clone(),
            input_format: self.input_format.clone(),
            workers: self.workers,
            ssh_workers: self.ssh_workers,
            qps: self.qps,
            output: self.output.clone(),
            psl: self.psl.clone(),
            dedup: self.dedup.clone(),
            ssh_port: self.ssh_port,
            key_types: self.key_types.clone(),
            ssh_timeout: self.ssh_timeout,
            per_host_connections: self.per_host_connections,
            ipv6: self.ipv6.then_some(true),
            resume: self.resume.then_some(true),
            queue_capacity: self.queue_capacity,
            policy_url: self.policy_url.clone(),
            ..self.resolvers.file_config()
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub domain: String,
    #[command(flatten)]
    pub resolvers: ResolverArgs,
    #[arg(long, default_value_t = 22)]
    pub ssh_port: u16,
    #[arg(long)]
    pub key_types: Option<String>,
    #[arg(long, default_value_t = 5.0)]
    pub ssh_timeout: f64,
    /// Also resolve and scan IPv6 addresses.
    #[arg(long)]
    pub ipv6: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Host name or address to scan.
    pub host: String,
    #[arg(long, default_value_t = 22)]
    pub port: u16,
    /// Comma-separated key types.
    #[arg(long)]
    pub types: Option<String>,
    /// Comma-separated hash types (`1`, `2`, `sha1`, `sha256`).
    #[arg(long, default_value = "1,2")]
    pub hash: String,
    /// Owner name for the printed records; defaults to HOST.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value_t = 5.0)]
    pub timeout: f64,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Scan logs, oldest first.
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
    /// Directory for report.json and report.txt.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Exit {
    let result = match cli.command {
        Command::Scan(a) => cmd_scan(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Gen(a) => cmd_gen(&a),
        Command::Analyze(a) => cmd_analyze(&a),
    };
    match result {
        Ok(exit) => exit,
        Err(f) => {
            eprintln!("sshfp-audit: {:#}", f.error);
            f.exit
        }
    }
}

/// Checks that a resolver answers at all before starting work.
fn probe(client: &DnsClient, addr: SocketAddr, role: &str) -> std::result::Result<(), Failure> {
    match client.probe(addr) {
        Ok(Outcome::NoError | Outcome::NxDomain) => Ok(()),
        Ok(o) => Err(Failure::runtime(anyhow!(
            "{role} resolver {addr} is unusable: {o}"
        ))),
        Err(e) => Err(Failure::runtime(anyhow!(
            "{role} resolver {addr} is unusable: {e}"
        ))),
    }
}

fn probe_both(cfg: &ScanConfig) -> std::result::Result<(), Failure> {
    let client = DnsClient::new(cfg.resolver.clone());
    probe(&client, cfg.resolver.plain_resolver, "plain")?;
    probe(&client, cfg.resolver.validating_resolver, "validating")
}

pub fn cmd_scan(args: &ScanArgs) -> CmdResult {
    let mut fc = args.file_config();
    if let Some(path) = &args.config {
        fc = fc.or(FileConfig::load(path).map_err(Failure::runtime)?);
    }
    let cfg = fc.scan_config().map_err(Failure::runtime)?;
    if let Some(p) = &cfg.input.path {
        if !p.is_file() {
            return Err(Failure::usage(anyhow!(
                "input {} does not exist",
                p.display()
            )));
        }
    }
    probe_both(&cfg)?;
    let names = ingest(&cfg.input).map_err(|e| Failure::usage(anyhow!("opening input: {e}")))?;
    let summary = run_scan(&cfg, names).map_err(Failure::runtime)?;

    println!(
        "{} names written to {}",
        summary.written,
        cfg.output.display()
    );
    if summary.resumed > 0 {
        println!("{} names skipped as already done", summary.resumed);
    }
    if summary.duplicates_dropped > 0 {
        println!("{} duplicate names dropped", summary.duplicates_dropped);
    }
    for (status, n) in &summary.by_status {
        println!("  {:<22} {n}", status.as_str());
    }
    Ok(Exit::Ok)
}

pub fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    let rc = args
        .resolvers
        .file_config()
        .resolver_config()
        .map_err(Failure::runtime)?;
    let mut cfg = ScanConfig::new(rc, PathBuf::new());
    cfg.ssh_port = args.ssh_port;
    cfg.ssh_timeout = seconds(args.ssh_timeout, "ssh timeout").map_err(Failure::usage)?;
    cfg.ipv6 = args.ipv6;
    if let Some(k) = &args.key_types {
        cfg.key_types = parse_key_types(k).map_err(|e| Failure::usage(anyhow!(e)))?;
    }
    let scanner = DomainScanner::new(&cfg);
    let r = scanner.scan(&args.domain, &SuffixList::implicit_only());

    let lookup = |l: &Option<sshfp_audit::dns::DnsLookupResult>| {
        l.as_ref()
            .map_or_else(|| "no answer".to_owned(), |l| l.outcome.to_string())
    };
    match r.status {
        ScanStatus::InvalidName | ScanStatus::Wildcard => {
            return Err(Failure::usage(anyhow!(
                "{:?} is not a scannable name",
                args.domain
            )));
        }
        ScanStatus::SshfpLookupFailed => {
            let why = r.error.clone().unwrap_or_else(|| lookup(&r.sshfp_lookup));
            return Err(Failure::runtime(anyhow!(
                "SSHFP lookup for {} failed: {why}",
                r.domain
            )));
        }
        ScanStatus::ALookupFailed => {
            let why = r.error.clone().unwrap_or_else(|| lookup(&r.a_lookup));
            return Err(Failure::runtime(anyhow!(
                "address lookup for {} failed: {why}",
                r.domain
            )));
        }
        _ => {}
    }

    println!("domain: {}", r.domain);
    for p in &r.records {
        println!("record: {} ({:?})", p.record, p.validity);
    }
    for m in &r.matches {
        let rec = &r.records[m.record].record;
        let scan = r.keyscans.iter().find(|s| s.target.address == m.address);
        let key = scan.map_or("?", |s| s.keys[m.key].key.algo_name());
        println!("  {rec}  vs {} {key}: {:?}", m.address, m.outcome.reason());
    }
    let valid: Vec<SshfpRecord> = r.valid_records().cloned().collect();
    let keys: Vec<HostKey> = r.host_keys().into_iter().cloned().collect();
    let class = classify_domain_match(&valid, &keys);
    let dnssec = result_dnssec_status(&r);
    println!("status: {}", r.status.as_str());
    println!("host keys: {}", keys.len());
    println!("match: {}/{} {:?}", class.matched, class.total, class.class);
    println!("dnssec: {dnssec}");

    let verdict = if class.matched == 0 {
        "mismatch"
    } else if dnssec != DnssecStatus::Secure {
        "insecure"
    } else {
        "secure"
    };
    println!("verdict: {verdict}");
    Ok(if verdict == "secure" {
        Exit::Ok
    } else {
        Exit::Negative
    })
}

fn parse_hash_types(list: &str) -> Result<Vec<HashType>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim) {
        let h = match item.to_ascii_lowercase().as_str() {
            "1" | "sha1" => HashType::SHA1,
            "2" | "sha256" => HashType::SHA256,
            other => return Err(anyhow!("unknown hash type {other:?}")),
        };
        if !out.contains(&h) {
            out.push(h);
        }
    }
    Ok(out)
}

/// Zone-file lines for the host keys `host` presents, sorted.
pub fn gen_lines(name: &str, keys: &[HostKey], hashes: &[HashType]) -> Result<Vec<String>> {
    let mut records = generate_records(keys, hashes)?;
    records.sort();
    Ok(records
        .iter()
        .map(|r| format!("{name} IN SSHFP {r}"))
        .collect())
}

pub fn cmd_gen(args: &GenArgs) -> CmdResult {
    let hashes = parse_hash_types(&args.hash).map_err(Failure::usage)?;
    let timeout = seconds(args.timeout, "timeout").map_err(Failure::usage)?;
    let address: IpAddr = match args.host.parse() {
        Ok(ip) => ip,
        Err(_) => {
            let addrs: Vec<SocketAddr> = (args.host.as_str(), args.port)
                .to_socket_addrs()
                .with_context(|| format!("resolving {}", args.host))
                .map_err(Failure::runtime)?
                .collect();
            addrs
                .iter()
                .find(|a| a.is_ipv4())
                .or(addrs.first())
                .map(SocketAddr::ip)
                .ok_or_else(|| Failure::runtime(anyhow!("{} has no address", args.host)))?
        }
    };
    let mut target = KeyscanTarget::new(address);
    target.port = args.port;
    target.timeout = timeout;
    if let Some(t) = &args.types {
        target.algos = parse_key_types(t).map_err(|e| Failure::usage(anyhow!(e)))?;
    }
    let scan = collect_host_keys(&target);
    for (algo, status) in &scan.per_algo_status {
        log::info!("{}: {algo} {status:?}", target.socket_addr());
    }
    let keys: Vec<HostKey> = scan.host_keys().cloned().collect();
    if keys.is_empty() {
        return Err(Failure::runtime(anyhow!(
            "no host keys retrieved from {}",
            target.socket_addr()
        )));
    }
    let name = args.name.as_deref().unwrap_or(&args.host);
    for line in gen_lines(name, &keys, &hashes).map_err(Failure::runtime)? {
        println!("{line}");
    }
    Ok(Exit::Ok)
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> CmdResult {
    let mut agg = Aggregator::new();
    for path in &args.logs {
        let file = File::open(path)
            .with_context(|| format!("opening {}", path.display()))
            .map_err(Failure::runtime)?;
        for line in read_log(BufReader::new(file)) {
            match line {
                Ok(r) => agg.add(r),
                Err((n, e)) => {
                    log::warn!("{}:{n}: {e}", path.display());
                    agg.add_schema_error();
                }
            }
        }
    }
    let report = agg.finish();
    let text = render_text(&report);
    if let Some(dir) = &args.report {
        write_report(dir, &report.to_json(), &text).map_err(Failure::runtime)?;
    }
    print!("{text}");
    Ok(Exit::Ok)
}

fn write_report(dir: &Path, json: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, body) in [("report.json", json), ("report.txt", text)] {
        let path = dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
