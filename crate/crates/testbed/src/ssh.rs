//! A mock SSH daemon that completes key exchange up to the server's reply
//! and records every message it receives.

use std::io::{self, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use p256::ecdsa::signature::Signer as _;
use sshfp_audit::keyscan::kex::{KexMethod, Transcript};
use sshfp_audit::keyscan::wire::{self, KexInit, Reader, Writer};
use sshfp_audit::HostKey;

pub const SERVER_VERSION: &str = "SSH-2.0-MockSSH_0.1";

const CIPHERS: [&str; 3] = [
    "chacha20-poly1305@openssh.com",
    "aes128-ctr",
    "aes256-gcm@openssh.com",
];
const MACS: [&str; 2] = ["hmac-sha2-256-etm@openssh.com", "hmac-sha2-256"];

#[derive(Clone)]
pub enum HostKeyPair {
    Ed25519(ed25519_dalek::SigningKey),
    EcdsaP256(p256::ecdsa::SigningKey),
}

impl HostKeyPair {
    pub fn ed25519(seed: u8) -> Self {
        HostKeyPair::Ed25519(ed25519_dalek::SigningKey::from_bytes(&[seed; 32]))
    }

    /// # Panics
    /// If `seed` is zero.
    pub fn p256(seed: u8) -> Self {
        let sk = p256::ecdsa::SigningKey::from_slice(&[seed; 32]).expect("nonzero scalar");
        HostKeyPair::EcdsaP256(sk)
    }

    pub fn algo_name(&self) -> &'static str {
        match self {
            HostKeyPair::Ed25519(_) => "ssh-ed25519",
            HostKeyPair::EcdsaP256(_) => "ecdsa-sha2-nistp256",
        }
    }

    pub fn public_blob(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.string(self.algo_name().as_bytes());
        match self {
            HostKeyPair::Ed25519(sk) => w.string(sk.verifying_key().as_bytes()),
            HostKeyPair::EcdsaP256(sk) => w
                .string(b"nistp256")
                .string(sk.verifying_key().to_encoded_point(false).as_bytes()),
        };
        w.finish()
    }

    pub fn host_key(&self) -> HostKey {
        HostKey::from_blob(self.public_blob()).expect("well-formed blob")
    }

    /// SSH signature blob over `data`.
    pub fn sign(&self, data: &[u8]) -> Vec<u8> {
        let mut w = Writer::new();
        w.string(self.algo_name().as_bytes());
        match self {
            HostKeyPair::Ed25519(sk) => {
                use ed25519_dalek::Signer as _;
                w.string(&sk.sign(data).to_bytes());
            }
            HostKeyPair::EcdsaP256(sk) => {
                let sig: p256::ecdsa::Signature = sk.sign(data);
                let (r, s) = sig.split_bytes();
                w.string(&Writer::new().mpint(&r).mpint(&s).finish());
            }
        }
        w.finish()
    }
}

/// What one client connection did.
#[derive(Clone, Debug, Default)]
pub struct Session {
    pub peer: Option<SocketAddr>,
    pub client_version: Option<String>,
    /// Message numbers received, in order.
    pub received: Vec<u8>,
    pub host_key_algorithm: Option<String>,
    pub kex_algorithm: Option<String>,
    pub sent_host_key: bool,
}

pub struct MockSshd {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    sessions: Arc<Mutex<Vec<Session>>>,
    handle: Option<JoinHandle<()>>,
}

impl MockSshd {
    pub fn bind(addr: SocketAddr, keys: Vec<HostKeyPair>) -> io::Result<Self> {
        MockSshd::bind_with_kex(addr, keys, &KexMethod::CLIENT_NAMES)
    }

    /// Like `bind`, offering only the given key exchange methods.
    pub fn bind_with_kex(
        addr: SocketAddr,
        keys: Vec<HostKeyPair>,
        kex: &[&str],
    ) -> io::Result<Self> {
        let kex: Arc<Vec<String>> = Arc::new(kex.iter().map(|s| s.to_string()).collect());
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        listener.set_nonblocking(true)?;
        let stop = Arc::new(AtomicBool::new(false));
        let sessions = Arc::new(Mutex::new(Vec::new()));
        let keys = Arc::new(keys);
        let handle = {
            let (stop, sessions) = (stop.clone(), sessions.clone());
            std::thread::spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    match listener.accept() {
                        Ok((stream, peer)) => {
                            let (keys, sessions, kex) =
                                (keys.clone(), sessions.clone(), kex.clone());
                            std::thread::spawn(move || {
                                let mut session = Session {
                                    peer: Some(peer),
                                    ..Session::default()
                                };
                                let _ = serve(stream, &keys, &kex, &mut session);
                                sessions.lock().unwrap().push(session);
                            });
                        }
                        Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                            std::thread::sleep(Duration::from_millis(5));
                        }
                        Err(_) => break,
                    }
                }
            })
        };
        Ok(MockSshd {
            addr,
            stop,
            sessions,
            handle: Some(handle),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Finished sessions so far.
    pub fn sessions(&self) -> Vec<Session> {
        self.sessions.lock().unwrap().clone()
    }

    /// Waits up to `timeout` for at least `n` finished sessions.
    pub fn wait_sessions(&self, n: usize, timeout: Duration) -> Vec<Session> {
        let deadline = std::time::Instant::now() + timeout;
        loop {
            let s = self.sessions();
            if s.len() >= n || std::time::Instant::now() >= deadline {
                return s;
            }
            std::thread::sleep(Duration::from_millis(5));
        }
    }
}

impl Drop for MockSshd {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(
    stream: TcpStream,
    keys: &[HostKeyPair],
    kex: &[String],
    session: &mut Session,
) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut out = stream;
    let invalid = |e: wire::WireError| io::Error::new(io::ErrorKind::InvalidData, e.to_string());

    wire::write_version(&mut out, SERVER_VERSION)?;
    let client_version = wire::read_version(&mut reader).map_err(invalid)?;
    session.client_version = Some(client_version.clone());

    let key_names: Vec<&str> = keys.iter().map(HostKeyPair::algo_name).collect();
    let kex_names: Vec<&str> = kex.iter().map(String::as_str).collect();
    let ours = KexInit::new(&kex_names, &key_names, &CIPHERS, &MACS);
    let server_kexinit = ours.encode();
    wire::write_packet(&mut out, &server_kexinit)?;

    let mut client_kexinit: Option<Vec<u8>> = None;
    let mut chosen: Option<(KexMethod, &HostKeyPair)> = None;
    loop {
        let payload = match wire::read_packet(&mut reader) {
            Ok(p) => p,
            Err(_) => return Ok(()),
        };
        let Some(&msg) = payload.first() else {
            return Ok(());
        };
        session.received.push(msg);
        match msg {
            wire::MSG_KEXINIT => {
                let theirs = KexInit::decode(&payload).map_err(invalid)?;
                let kex = wire::negotiate(&theirs.kex_algorithms, &ours.kex_algorithms);
                let hk = wire::negotiate(
                    &theirs.server_host_key_algorithms,
                    &ours.server_host_key_algorithms,
                );
                let (Some(kex), Some(hk)) = (kex, hk) else {
                    let bye = wire::disconnect_payload(
                        wire::DISCONNECT_KEY_EXCHANGE_FAILED,
                        "no matching host key type found",
                    );
                    wire::write_packet(&mut out, &bye)?;
                    return Ok(());
                };
                session.kex_algorithm = Some(kex.to_owned());
                session.host_key_algorithm = Some(hk.to_owned());
                let key = keys.iter().find(|k| k.algo_name() == hk).expect("offered");
                chosen = Some((KexMethod::from_name(kex).expect("offered"), key));
                client_kexinit = Some(payload);
            }
            wire::MSG_KEX_ECDH_INIT => {
                let (Some((method, key)), Some(ckex)) = (chosen, client_kexinit.as_ref()) else {
                    return Ok(());
                };
                let mut r = Reader::new(&payload[1..]);
                let client_public = match method {
                    KexMethod::Curve25519Sha256 => r.string(),
                    KexMethod::DhGroup14Sha256 => r.mpint(),
                }
                .map_err(invalid)?;
                let eph = method.ephemeral();
                let Some(shared) = eph.agree(client_public) else {
                    return Ok(());
                };
                let blob = key.public_blob();
                let h = method.exchange_hash(&Transcript {
                    client_version: &client_version,
                    server_version: SERVER_VERSION,
                    client_kexinit: ckex,
                    server_kexinit: &server_kexinit,
                    host_key: &blob,
                    client_public,
                    server_public: &eph.public,
                    shared_secret: &shared,
                });
                let mut w = Writer::new();
                w.byte(wire::MSG_KEX_ECDH_REPLY).string(&blob);
                match method {
                    KexMethod::Curve25519Sha256 => w.string(&eph.public),
                    KexMethod::DhGroup14Sha256 => w.mpint(&eph.public),
                };
                w.string(&key.sign(&h));
                wire::write_packet(&mut out, &w.finish())?;
                out.flush()?;
                session.sent_host_key = true;
            }
            wire::MSG_DISCONNECT | wire::MSG_NEWKEYS => return Ok(()),
            _ => {}
        }
    }
}
