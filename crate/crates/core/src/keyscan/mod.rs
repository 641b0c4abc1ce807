//! Host key collection over a minimal SSH transport handshake.
//!
//! For every requested key type a fresh TCP connection is opened, identification
//! strings and KEXINIT are exchanged offering only that key type, and the key
//! exchange runs until the server's reply carrying its host key arrives. The
//! client then sends DISCONNECT. It never sends NEWKEYS, so no
//! authentication-phase message can ever leave this module.

pub mod kex;
pub mod wire;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, BufReader, Write};
use std::net::{IpAddr, Ipv4Addr, Shutdown, SocketAddr, TcpStream};
use std::str::FromStr;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::sshfp::HostKey;
use kex::{KexMethod, Transcript};
use wire::{KexInit, Reader, WireError};

pub const DEFAULT_PORT: u16 = 22;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);
pub const DEFAULT_PER_HOST_CONNECTIONS: usize = 4;
pub const CLIENT_SOFTWARE: &str = concat!("sshfp_audit_", env!("CARGO_PKG_VERSION"));

/// Ciphers and MACs offered only so that negotiation with real servers
/// succeeds; none of them is ever used.
const CIPHERS: [&str; 5] = [
    "chacha20-poly1305@openssh.com",
    "aes128-ctr",
    "aes256-ctr",
    "aes128-gcm@openssh.com",
    "aes256-gcm@openssh.com",
];
const MACS: [&str; 4] = [
    "hmac-sha2-256-etm@openssh.com",
    "hmac-sha2-512-etm@openssh.com",
    "hmac-sha2-256",
    "hmac-sha2-512",
];

/// A host key type to request, one connection each.
///
/// The four families mirror what `ssh-keyscan -t dsa,rsa,ecdsa,ed25519`
/// asks for. RSA offers all its signature schemes and ECDSA all three NIST
/// curves, since they share one key family each.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KeyType {
    Dsa,
    Rsa,
    Ecdsa,
    Ed25519,
    /// A single SSH host key algorithm name.
    Algorithm(String),
}

impl KeyType {
    pub const DEFAULT: [KeyType; 4] =
        [KeyType::Dsa, KeyType::Rsa, KeyType::Ecdsa, KeyType::Ed25519];

    pub fn label(&self) -> &str {
        match self {
            KeyType::Dsa => "dsa",
            KeyType::Rsa => "rsa",
            KeyType::Ecdsa => "ecdsa",
            KeyType::Ed25519 => "ed25519",
            KeyType::Algorithm(name) => name,
        }
    }

    /// `server_host_key_algorithms` offered in KEXINIT.
    pub fn offered_algorithms(&self) -> Vec<&str> {
        match self {
            KeyType::Dsa => vec!["ssh-dss"],
            KeyType::Rsa => vec!["rsa-sha2-512", "rsa-sha2-256", "ssh-rsa"],
            KeyType::Ecdsa => vec![
                "ecdsa-sha2-nistp256",
                "ecdsa-sha2-nistp384",
                "ecdsa-sha2-nistp521",
            ],
            KeyType::Ed25519 => vec!["ssh-ed25519"],
            KeyType::Algorithm(name) => vec![name.as_str()],
        }
    }

    /// Whether a key blob identifier belongs to this key type.
    pub fn accepts_blob_id(&self, id: &str) -> bool {
        match self {
            KeyType::Rsa => id == "ssh-rsa",
            KeyType::Algorithm(name) if name.starts_with("rsa-sha2-") => id == "ssh-rsa",
            _ => self.offered_algorithms().contains(&id),
        }
    }
}

impl FromStr for KeyType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "" => return Err("empty key type".into()),
            "dsa" | "ssh-dss" => KeyType::Dsa,
            "rsa" | "ssh-rsa" => KeyType::Rsa,
            "ecdsa" => KeyType::Ecdsa,
            "ed25519" | "ssh-ed25519" => KeyType::Ed25519,
            other => KeyType::Algorithm(other.to_owned()),
        })
    }
}

impl fmt::Display for KeyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for KeyType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for KeyType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Parses a comma-separated key type list such as `dsa,rsa,ecdsa,ed25519`.
pub fn parse_key_types(list: &str) -> Result<Vec<KeyType>, String> {
    let mut out: Vec<KeyType> = Vec::new();
    for item in list.split(',') {
        let kt: KeyType = item.parse()?;
        if !out.contains(&kt) {
            out.push(kt);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyscanTarget {
    pub address: IpAddr,
    pub port: u16,
    pub algos: Vec<KeyType>,
    #[serde(with = "crate::serde_secs")]
    pub timeout: Duration,
}

impl KeyscanTarget {
    pub fn new(address: impl Into<IpAddr>) -> Self {
        KeyscanTarget {
            address: address.into(),
            port: DEFAULT_PORT,
            algos: KeyType::DEFAULT.to_vec(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn ipv4(address: Ipv4Addr) -> Self {
        KeyscanTarget::new(address)
    }

    pub fn socket_addr(&self) -> SocketAddr {
        SocketAddr::new(self.address, self.port)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AlgoStatus {
    Ok,
    UnsupportedByServer,
    Timeout,
    Refused,
    ProtocolError,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectedKey {
    pub key_type: KeyType,
    pub key: HostKey,
    /// Host key algorithm negotiated for this connection.
    pub host_key_algorithm: String,
    pub kex_algorithm: String,
    /// Result of checking the KEX signature; `None` if the algorithm is not
    /// one this tool verifies.
    pub signature_verified: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyscanResult {
    pub target: KeyscanTarget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub server_version: Option<String>,
    pub keys: Vec<CollectedKey>,
    pub per_algo_status: BTreeMap<String, AlgoStatus>,
}

impl KeyscanResult {
    pub fn host_keys(&self) -> impl Iterator<Item = &HostKey> {
        self.keys.iter().map(|k| &k.key)
    }

    pub fn status(&self, kt: &KeyType) -> Option<AlgoStatus> {
        self.per_algo_status.get(kt.label()).copied()
    }
}

#[derive(Debug, Error)]
pub enum HandshakeError {
    #[error("timed out")]
    Timeout,
    #[error("server offers no host key algorithm of the requested type")]
    UnsupportedByServer,
    #[error("connection refused")]
    Refused,
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl HandshakeError {
    pub fn status(&self) -> AlgoStatus {
        match self {
            HandshakeError::Timeout => AlgoStatus::Timeout,
            HandshakeError::UnsupportedByServer => AlgoStatus::UnsupportedByServer,
            HandshakeError::Refused => AlgoStatus::Refused,
            HandshakeError::Protocol(_) => AlgoStatus::ProtocolError,
        }
    }
}

impl From<WireError> for HandshakeError {
    fn from(e: WireError) -> Self {
        match e {
            WireError::Io(io) => io.into(),
            WireError::Eof => HandshakeError::Protocol("connection closed by peer".into()),
            WireError::Invalid(msg) => HandshakeError::Protocol(msg),
        }
    }
}

impl From<io::Error> for HandshakeError {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => HandshakeError::Timeout,
            io::ErrorKind::ConnectionRefused => HandshakeError::Refused,
            io::ErrorKind::UnexpectedEof => {
                HandshakeError::Protocol("connection closed by peer".into())
            }
            _ => HandshakeError::Protocol(e.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Handshake {
    pub key: HostKey,
    pub server_version: String,
    pub kex_algorithm: String,
    pub host_key_algorithm: String,
    pub signature_verified: Option<bool>,
}

/// Protocol phase reached by the client. Ends at `Disconnected`; there is no
/// state beyond the KEX reply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Phase {
    Version,
    KexInit,
    KexReply,
    Disconnected,
}

/// Identification string sent to servers.
pub fn client_version(policy_url: Option<&str>) -> String {
    match policy_url {
        Some(url) => format!("SSH-2.0-{CLIENT_SOFTWARE} +{url}"),
        None => format!("SSH-2.0-{CLIENT_SOFTWARE}"),
    }
}

/// Drives one connection up to the server's KEX reply and returns its host
/// key.
pub fn perform_handshake(
    stream: TcpStream,
    key_type: &KeyType,
    timeout: Duration,
) -> Result<Handshake, HandshakeError> {
    handshake_with_version(
        stream,
        key_type,
        Instant::now() + timeout,
        &client_version(None),
    )
}

pub fn handshake_with_version(
    stream: TcpStream,
    key_type: &KeyType,
    deadline: Instant,
    version: &str,
) -> Result<Handshake, HandshakeError> {
    let mut conn = Conn {
        reader: BufReader::new(stream),
        deadline,
        phase: Phase::Version,
    };
    let result = conn.run(key_type, version);
    let reason = match &result {
        Err(HandshakeError::UnsupportedByServer) => wire::DISCONNECT_KEY_EXCHANGE_FAILED,
        _ => wire::DISCONNECT_BY_APPLICATION,
    };
    conn.disconnect(reason);
    result
}

struct Conn {
    reader: BufReader<TcpStream>,
    deadline: Instant,
    phase: Phase,
}

impl Conn {
    fn arm(&mut self) -> Result<(), HandshakeError> {
        let left = self
            .deadline
            .checked_duration_since(Instant::now())
            .filter(|d| !d.is_zero())
            .ok_or(HandshakeError::Timeout)?;
        let s = self.reader.get_ref();
        s.set_read_timeout(Some(left))?;
        s.set_write_timeout(Some(left))?;
        Ok(())
    }

    fn send(&mut self, payload: &[u8]) -> Result<(), HandshakeError> {
        debug_assert!(
            payload[0] < wire::MSG_NEWKEYS || payload[0] == wire::MSG_KEX_ECDH_INIT,
            "message {} is past the key exchange",
            payload[0]
        );
        self.arm()?;
        wire::write_packet(self.reader.get_mut(), payload)?;
        Ok(())
    }

    /// Next packet that is not IGNORE/DEBUG/UNIMPLEMENTED.
    fn recv(&mut self) -> Result<Vec<u8>, HandshakeError> {
        loop {
            self.arm()?;
            let payload = wire::read_packet(&mut self.reader)?;
            match payload.first() {
                None => return Err(HandshakeError::Protocol("empty packet".into())),
                Some(&wire::MSG_IGNORE | &wire::MSG_DEBUG | &wire::MSG_UNIMPLEMENTED) => continue,
                Some(&wire::MSG_DISCONNECT) => {
                    let mut r = Reader::new(&payload[1..]);
                    let code = r.u32().unwrap_or(0);
                    let text = r.utf8().unwrap_or("").to_owned();
                    self.phase = Phase::Disconnected;
                    return Err(if code == wire::DISCONNECT_KEY_EXCHANGE_FAILED {
                        HandshakeError::UnsupportedByServer
                    } else {
                        HandshakeError::Protocol(format!("server disconnected ({code}): {text}"))
                    });
                }
                Some(_) => return Ok(payload),
            }
        }
    }

    fn run(&mut self, key_type: &KeyType, version: &str) -> Result<Handshake, HandshakeError> {
        self.arm()?;
        wire::write_version(self.reader.get_mut(), version)?;
        let server_version = wire::read_version(&mut self.reader)?;
        if !wire::is_v2(&server_version) {
            return Err(HandshakeError::Protocol(format!(
                "unsupported protocol version {server_version:?}"
            )));
        }

        self.phase = Phase::KexInit;
        let offered = key_type.offered_algorithms();
        let ours = KexInit::new(&KexMethod::CLIENT_NAMES, &offered, &CIPHERS, &MACS);
        let client_kexinit = ours.encode();
        self.send(&client_kexinit)?;
        let server_kexinit = self.recv()?;
        if server_kexinit[0] != wire::MSG_KEXINIT {
            return Err(HandshakeError::Protocol(format!(
                "expected KEXINIT, got message {}",
                server_kexinit[0]
            )));
        }
        let theirs = KexInit::decode(&server_kexinit)?;
        let kex_name = wire::negotiate(&ours.kex_algorithms, &theirs.kex_algorithms)
            .ok_or_else(|| HandshakeError::Protocol("no common key exchange method".into()))?
            .to_owned();
        let host_key_algorithm = wire::negotiate(
            &ours.server_host_key_algorithms,
            &theirs.server_host_key_algorithms,
        )
        .ok_or(HandshakeError::UnsupportedByServer)?
        .to_owned();
        let method = KexMethod::from_name(&kex_name).expect("negotiated from our own list");
        if theirs.first_kex_packet_follows && theirs.kex_algorithms.first() != Some(&kex_name) {
            // Server guessed wrong; its guessed packet must be ignored.
            self.recv()?;
        }

        self.phase = Phase::KexReply;
        let eph = method.ephemeral();
        let mut init = wire::Writer::new();
        init.byte(wire::MSG_KEX_ECDH_INIT);
        match method {
            KexMethod::Curve25519Sha256 => init.string(&eph.public),
            KexMethod::DhGroup14Sha256 => init.mpint(&eph.public),
        };
        self.send(&init.finish())?;

        let reply = self.recv()?;
        if reply[0] != wire::MSG_KEX_ECDH_REPLY {
            return Err(HandshakeError::Protocol(format!(
                "expected KEX reply, got message {}",
                reply[0]
            )));
        }
        let mut r = Reader::new(&reply[1..]);
        let host_key_blob = r.string()?;
        let server_public = match method {
            KexMethod::Curve25519Sha256 => r.string()?,
            KexMethod::DhGroup14Sha256 => r.mpint()?,
        };
        let signature = r.string()?;

        let key = HostKey::from_blob(host_key_blob.to_vec())
            .map_err(|e| HandshakeError::Protocol(format!("host key: {e}")))?;
        if !key_type.accepts_blob_id(key.algo_name()) {
            return Err(HandshakeError::Protocol(format!(
                "server sent a {} key for {}",
                key.algo_name(),
                host_key_algorithm
            )));
        }
        let signature_verified = eph.agree(server_public).map(|shared| {
            let h = method.exchange_hash(&Transcript {
                client_version: version,
                server_version: &server_version,
                client_kexinit: &client_kexinit,
                server_kexinit: &server_kexinit,
                host_key: host_key_blob,
                client_public: &eph.public,
                server_public,
                shared_secret: &shared,
            });
            kex::verify_signature(&key, signature, &h)
        });
        Ok(Handshake {
            key,
            server_version,
            kex_algorithm: kex_name,
            host_key_algorithm,
            // An unacceptable server ephemeral can never verify.
            signature_verified: signature_verified.unwrap_or(Some(false)),
        })
    }

    fn disconnect(&mut self, reason: u32) {
        if self.phase > Phase::Version && self.phase < Phase::Disconnected && self.arm().is_ok() {
            let payload = wire::disconnect_payload(reason, "host key collected");
            let _ = wire::write_packet(self.reader.get_mut(), &payload);
        }
        self.phase = Phase::Disconnected;
        let s = self.reader.get_mut();
        let _ = s.flush();
        let _ = s.shutdown(Shutdown::Both);
    }
}

/// Caps concurrent connections per remote address across all workers.
#[derive(Clone, Debug)]
pub struct HostLimiter {
    inner: Arc<(Mutex<HashMap<IpAddr, usize>>, Condvar)>,
    cap: usize,
}

impl HostLimiter {
    pub fn new(cap: usize) -> Self {
        HostLimiter {
            inner: Arc::new((Mutex::new(HashMap::new()), Condvar::new())),
            cap: cap.max(1),
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Blocks until a connection slot to `addr` is free.
    pub fn acquire(&self, addr: IpAddr) -> HostPermit {
        let (lock, cvar) = &*self.inner;
        let mut open = lock.lock().expect("host limiter poisoned");
        while open.get(&addr).copied().unwrap_or(0) >= self.cap {
            open = cvar.wait(open).expect("host limiter poisoned");
        }
        *open.entry(addr).or_insert(0) += 1;
        HostPermit {
            limiter: self.clone(),
            addr,
        }
    }

    pub fn in_use(&self, addr: IpAddr) -> usize {
        let open = self.inner.0.lock().expect("host limiter poisoned");
        open.get(&addr).copied().unwrap_or(0)
    }
}

impl Default for HostLimiter {
    fn default() -> Self {
        HostLimiter::new(DEFAULT_PER_HOST_CONNECTIONS)
    }
}

pub struct HostPermit {
    limiter: HostLimiter,
    addr: IpAddr,
}

impl Drop for HostPermit {
    fn drop(&mut self) {
        let (lock, cvar) = &*self.limiter.inner;
        let mut open = lock.lock().expect("host limiter poisoned");
        if let Some(n) = open.get_mut(&self.addr) {
            *n -= 1;
            if *n == 0 {
                open.remove(&self.addr);
            }
        }
        cvar.notify_all();
    }
}

/// Collects host keys, sharing a per-host connection cap between callers.
#[derive(Clone, Debug, Default)]
pub struct Keyscanner {
    limiter: HostLimiter,
    policy_url: Option<String>,
}

impl Keyscanner {
    pub fn new(limiter: HostLimiter, policy_url: Option<String>) -> Self {
        Keyscanner {
            limiter,
            policy_url,
        }
    }

    pub fn limiter(&self) -> &HostLimiter {
        &self.limiter
    }

    /// One connection per requested key type, run concurrently up to the
    /// per-host cap.
    pub fn collect(&self, target: &KeyscanTarget) -> KeyscanResult {
        let version = client_version(self.policy_url.as_deref());
        let outcomes: Vec<(KeyType, Result<Handshake, HandshakeError>)> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = target
                    .algos
                    .iter()
                    .map(|kt| {
                        let version = &version;
                        scope.spawn(move || {
                            let _permit = self.limiter.acquire(target.address);
                            (kt.clone(), scan_one(target, kt, version))
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("keyscan thread panicked"))
                    .collect()
            });

        let mut result = KeyscanResult {
            target: target.clone(),
            server_version: None,
            keys: Vec::new(),
            per_algo_status: BTreeMap::new(),
        };
        for (kt, outcome) in outcomes {
            let status = match outcome {
                Ok(hs) => {
                    result.server_version.get_or_insert(hs.server_version);
                    if !result.keys.iter().any(|k| k.key == hs.key) {
                        result.keys.push(CollectedKey {
                            key_type: kt.clone(),
                            key: hs.key,
                            host_key_algorithm: hs.host_key_algorithm,
                            kex_algorithm: hs.kex_algorithm,
                            signature_verified: hs.signature_verified,
                        });
                    }
                    AlgoStatus::Ok
                }
                Err(e) => {
                    log::debug!("keyscan {} {}: {e}", target.socket_addr(), kt);
                    e.status()
                }
            };
            result.per_algo_status.insert(kt.label().to_owned(), status);
        }
        result
    }
}

fn scan_one(
    target: &KeyscanTarget,
    kt: &KeyType,
    version: &str,
) -> Result<Handshake, HandshakeError> {
    let deadline = Instant::now() + target.timeout;
    let stream =
        TcpStream::connect_timeout(&target.socket_addr(), target.timeout).map_err(|e| {
            match e.kind() {
                io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock => HandshakeError::Timeout,
                _ => HandshakeError::Refused,
            }
        })?;
    let _ = stream.set_nodelay(true);
    handshake_with_version(stream, kt, deadline, version)
}

/// Collects host keys with a private default per-host cap.
pub fn collect_host_keys(target: &KeyscanTarget) -> KeyscanResult {
    Keyscanner::default().collect(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::TcpListener;

    #[test]
    fn key_type_parsing() {
        assert_eq!(
            parse_key_types("dsa,rsa,ecdsa,ed25519").unwrap(),
            KeyType::DEFAULT.to_vec()
        );
        assert_eq!("ssh-ed25519".parse::<KeyType>().unwrap(), KeyType::Ed25519);
        assert_eq!(
            "ecdsa-sha2-nistp384".parse::<KeyType>().unwrap(),
            KeyType::Algorithm("ecdsa-sha2-nistp384".into())
        );
        assert!(parse_key_types("rsa,,dsa").is_err());
        assert_eq!(parse_key_types("rsa,rsa").unwrap(), vec![KeyType::Rsa]);
    }

    #[test]
    fn blob_ids() {
        assert!(KeyType::Rsa.accepts_blob_id("ssh-rsa"));
        assert!(!KeyType::Rsa.accepts_blob_id("rsa-sha2-256"));
        assert!(KeyType::Ecdsa.accepts_blob_id("ecdsa-sha2-nistp521"));
        assert!(KeyType::Algorithm("rsa-sha2-512".into()).accepts_blob_id("ssh-rsa"));
        assert!(!KeyType::Ed25519.accepts_blob_id("ssh-rsa"));
    }

    #[test]
    fn closed_port_is_refused_for_every_type() {
        let port = {
            let l = TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap().port()
        };
        let mut target = KeyscanTarget::new(Ipv4Addr::LOCALHOST);
        target.port = port;
        let res = collect_host_keys(&target);
        assert!(res.keys.is_empty());
        assert_eq!(res.per_algo_status.len(), 4);
        assert!(res
            .per_algo_status
            .values()
            .all(|s| *s == AlgoStatus::Refused));
    }

    #[test]
    fn silent_server_times_out() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let mut target = KeyscanTarget::new(Ipv4Addr::LOCALHOST);
        target.port = listener.local_addr().unwrap().port();
        target.algos = vec![KeyType::Ed25519];
        target.timeout = Duration::from_millis(300);
        let start = Instant::now();
        let res = collect_host_keys(&target);
        let took = start.elapsed();
        assert_eq!(res.status(&KeyType::Ed25519), Some(AlgoStatus::Timeout));
        assert!(
            took >= Duration::from_millis(300) && took < Duration::from_secs(2),
            "{took:?}"
        );
        drop(listener);
    }

    #[test]
    fn non_ssh_server_is_protocol_error() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        let server = std::thread::spawn(move || {
            let (mut s, _) = listener.accept().unwrap();
            let _ = s.write_all(b"HTTP/1.1 400 Bad Request\r\n\r\n");
        });
        let mut target = KeyscanTarget::new(Ipv4Addr::LOCALHOST);
        target.port = port;
        target.algos = vec![KeyType::Rsa];
        target.timeout = Duration::from_secs(2);
        let res = collect_host_keys(&target);
        assert_eq!(res.status(&KeyType::Rsa), Some(AlgoStatus::ProtocolError));
        server.join().unwrap();
    }

    #[test]
    fn host_limiter_caps_concurrency() {
        let limiter = HostLimiter::new(2);
        let addr: IpAddr = Ipv4Addr::new(192, 0, 2, 1).into();
        let peak = Arc::new(Mutex::new(0usize));
        std::thread::scope(|s| {
            for _ in 0..8 {
                let limiter = limiter.clone();
                let peak = peak.clone();
                s.spawn(move || {
                    let _p = limiter.acquire(addr);
                    let now = limiter.in_use(addr);
                    let mut m = peak.lock().unwrap();
                    *m = (*m).max(now);
                    drop(m);
                    std::thread::sleep(Duration::from_millis(20));
                });
            }
        });
        assert_eq!(*peak.lock().unwrap(), 2);
        assert_eq!(limiter.in_use(addr), 0);
    }

    #[test]
    fn version_string() {
        assert!(client_version(None).starts_with("SSH-2.0-sshfp_audit_"));
        assert!(client_version(Some("https://scan.example/")).ends_with(" +https://scan.example/"));
    }
}
