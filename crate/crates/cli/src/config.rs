//! Scan settings from a TOML file, overridden by flags. Keys are the long
//! flag names with `-` replaced by `_`.

use std::net::{IpAddr, SocketAddr, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use sshfp_audit::dns::ResolverConfig;
use sshfp_audit::keyscan::{parse_key_types, KeyType};
use sshfp_audit::pipeline::{Dedup, InputFormat, InputSource, ScanConfig};

pub const RESOLVER_ENV: &str = "SSHFP_AUDIT_RESOLVER";
pub const VALIDATING_RESOLVER_ENV: &str = "SSHFP_AUDIT_VALIDATING_RESOLVER";

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub input_format: Option<String>,
    pub resolver: Option<String>,
    pub validating_resolver: Option<String>,
    pub allow_same_resolver: Option<bool>,
    pub workers: Option<usize>,
    pub ssh_workers: Option<usize>,
    pub qps: Option<f64>,
    pub timeout: Option<f64>,
    pub retries: Option<u32>,
    pub output: Option<PathBuf>,
    pub psl: Option<PathBuf>,
    pub dedup: Option<String>,
    pub ssh_port: Option<u16>,
    pub key_types: Option<String>,
    pub ssh_timeout: Option<f64>,
    pub per_host_connections: Option<usize>,
    pub ipv6: Option<bool>,
    pub resume: Option<bool>,
    pub queue_capacity: Option<usize>,
    pub policy_url: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fills every unset field of `self` from `other`.
    pub fn or(self, other: FileConfig) -> FileConfig {
        macro_rules! pick {
            ($($f:ident),*) => { FileConfig { $($f: self.$f.or(other.$f)),* } };
        }
        pick!(
            input,
            input_format,
            resolver,
            validating_resolver,
            allow_same_resolver,
            workers,
            ssh_workers,
            qps,
            timeout,
            retries,
            output,
            psl,
            dedup,
            ssh_port,
            key_types,
            ssh_timeout,
            per_host_connections,
            ipv6,
            resume,
            queue_capacity,
            policy_url
        )
    }

    pub fn resolver_config(&self) -> Result<ResolverConfig> {
        let plain = self
            .resolver
            .as_deref()
            .ok_or_else(|| anyhow!("no resolver given (--resolver or {RESOLVER_ENV})"))?;
        let validating = self.validating_resolver.as_deref().ok_or_else(|| {
            anyhow!(
                "no validating resolver given (--validating-resolver or {VALIDATING_RESOLVER_ENV})"
            )
        })?;
        let mut rc =
            ResolverConfig::new(parse_endpoint(plain, 53)?, parse_endpoint(validating, 53)?);
        if let Some(t) = self.timeout {
            rc.timeout = seconds(t, "timeout")?;
        }
        if let Some(r) = self.retries {
            rc.retries = r;
        }
        rc.allow_same_resolver = self.allow_same_resolver.unwrap_or(false);
        rc.validate()?;
        Ok(rc)
    }

    pub fn key_types(&self) -> Result<Option<Vec<KeyType>>> {
        self.key_types
            .as_deref()
            .map(|s| parse_key_types(s).map_err(|e| anyhow!(e)))
            .transpose()
    }

    pub fn scan_config(&self) -> Result<ScanConfig> {
        let output = self
            .output
            .clone()
            .ok_or_else(|| anyhow!("no output file given"))?;
        let mut cfg = ScanConfig::new(self.resolver_config()?, output);
        let format: InputFormat = match &self.input_format {
            Some(f) => f.parse().map_err(|e: String| anyhow!(e))?,
            None => InputFormat::Plain,
        };
        cfg.input = match &self.input {
            Some(p) if p.as_os_str() != "-" => InputSource::file(p, format),
            _ => InputSource::stdin(format),
        };
        if let Some(n) = self.workers {
            cfg.query_workers = n;
        }
        if let Some(n) = self.ssh_workers {
            cfg.ssh_workers = n;
        }
        if let Some(q) = self.qps {
            cfg.qps_limit = q;
        }
        cfg.psl = self.psl.clone();
        if let Some(d) = &self.dedup {
            cfg.dedup = d.parse::<Dedup>().map_err(|e| anyhow!(e))?;
        }
        if let Some(p) = self.ssh_port {
            cfg.ssh_port = p;
        }
        if let Some(k) = self.key_types()? {
            cfg.key_types = k;
        }
        if let Some(t) = self.ssh_timeout {
            cfg.ssh_timeout = seconds(t, "ssh timeout")?;
        }
        if let Some(n) = self.per_host_connections {
            cfg.per_host_connections = n;
        }
        cfg.ipv6 = self.ipv6.unwrap_or(false);
        cfg.resume = self.resume.unwrap_or(false);
        if let Some(n) = self.queue_capacity {
            cfg.queue_capacity = n;
        }
        cfg.policy_url = self.policy_url.clone();
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn seconds(s: f64, what: &str) -> Result<Duration> {
    Duration::try_from_secs_f64(s)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| anyhow!("{what} must be a positive number of seconds"))
}

/// Parses `HOST:PORT`, `[V6]:PORT`, a bare address or a bare host name.
pub fn parse_endpoint(s: &str, default_port: u16) -> Result<SocketAddr> {
    if let Ok(a) = s.parse::<SocketAddr>() {
        return Ok(a);
    }
    if let Ok(ip) = s.parse::<IpAddr>() {
        return Ok(SocketAddr::new(ip, default_port));
    }
    let with_port = if s.contains(':') {
        s.to_owned()
    } else {
        format!("{s}:{default_port}")
    };
    let addrs: Vec<SocketAddr> = with_port
        .to_socket_addrs()
        .with_context(|| format!("resolving endpoint {s:?}"))?
        .collect();
    match addrs.iter().find(|a| a.is_ipv4()).or(addrs.first()) {
        Some(a) => Ok(*a),
        None => bail!("endpoint {s:?} has no address"),
    }
}
