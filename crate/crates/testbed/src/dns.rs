//! A mock recursive resolver serving a fixed zone over UDP and TCP.

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr, SocketAddr, TcpListener, TcpStream, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use sshfp_audit::dns::wire::{self, Message, Record};
use sshfp_audit::SshfpRecord;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Security {
    #[default]
    Insecure,
    Secure,
    /// Signatures do not validate: a validating resolver answers SERVFAIL.
    Bogus,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Behavior {
    #[default]
    Normal,
    /// Never answer.
    Blackhole,
    /// Answer with bytes that do not decode.
    Garbage,
    /// UDP answers carry TC and no records; TCP answers are complete.
    TruncateUdp,
    /// Answer with this response code and nothing else.
    Rcode(u16),
}

#[derive(Clone, Debug, Default)]
pub struct ZoneEntry {
    /// SSHFP RDATA, not necessarily well-formed.
    pub sshfp: Vec<Vec<u8>>,
    pub a: Vec<Ipv4Addr>,
    pub aaaa: Vec<Ipv6Addr>,
    pub cname: Option<String>,
    pub security: Security,
    pub behavior: Behavior,
}

impl ZoneEntry {
    pub fn with_records(records: &[SshfpRecord]) -> Self {
        ZoneEntry {
            sshfp: records.iter().map(SshfpRecord::to_rdata).collect(),
            ..ZoneEntry::default()
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Zone {
    entries: HashMap<String, ZoneEntry>,
}

impl Zone {
    pub fn new() -> Self {
        Zone::default()
    }

    pub fn insert(&mut self, name: &str, entry: ZoneEntry) -> &mut ZoneEntry {
        let key = name.trim_end_matches('.').to_ascii_lowercase();
        self.entries.insert(key.clone(), entry);
        self.entries.get_mut(&key).expect("just inserted")
    }

    pub fn get(&self, name: &str) -> Option<&ZoneEntry> {
        self.entries.get(name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Non-validating: never sets AD.
    Plain,
    /// Sets AD for secure names and fails bogus ones.
    Validating,
    /// Receives queries but never answers.
    Silent,
}

#[derive(Debug, Default)]
pub struct Stats {
    pub udp_queries: AtomicUsize,
    pub tcp_queries: AtomicUsize,
    pub do_bit_queries: AtomicUsize,
}

pub struct MockDns {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    stats: Arc<Stats>,
    threads: Vec<JoinHandle<()>>,
}

enum Reply {
    Message(Message),
    Raw(Vec<u8>),
    None,
}

impl MockDns {
    /// Serves `zone` on one port of `ip`, UDP and TCP.
    pub fn start(ip: IpAddr, zone: Zone, mode: Mode) -> io::Result<Self> {
        let (udp, tcp) = bind_pair(ip)?;
        let addr = udp.local_addr()?;
        udp.set_read_timeout(Some(Duration::from_millis(20)))?;
        tcp.set_nonblocking(true)?;
        let stop = Arc::new(AtomicBool::new(false));
        let stats = Arc::new(Stats::default());
        let zone = Arc::new(zone);

        let udp_thread = {
            let (stop, stats, zone) = (stop.clone(), stats.clone(), zone.clone());
            std::thread::spawn(move || {
                let mut buf = [0u8; 4096];
                while !stop.load(Ordering::Relaxed) {
                    let Ok((n, peer)) = udp.recv_from(&mut buf) else {
                        continue;
                    };
                    stats.udp_queries.fetch_add(1, Ordering::Relaxed);
                    if let Some(bytes) = answer(&zone, mode, &stats, &buf[..n], true) {
                        let _ = udp.send_to(&bytes, peer);
                    }
                }
            })
        };
        let tcp_thread = {
            let (stop, stats, zone) = (stop.clone(), stats.clone(), zone.clone());
            std::thread::spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    match tcp.accept() {
                        Ok((stream, _)) => {
                            let (stats, zone) = (stats.clone(), zone.clone());
                            std::thread::spawn(move || serve_tcp(stream, &zone, mode, &stats));
                        }
                        Err(_) => std::thread::sleep(Duration::from_millis(5)),
                    }
                }
            })
        };
        Ok(MockDns {
            addr,
            stop,
            stats,
            threads: vec![udp_thread, tcp_thread],
        })
    }

    /// An endpoint that accepts queries and never replies.
    pub fn silent(ip: IpAddr) -> io::Result<Self> {
        MockDns::start(ip, Zone::new(), Mode::Silent)
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }
}

impl Drop for MockDns {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

fn bind_pair(ip: IpAddr) -> io::Result<(UdpSocket, TcpListener)> {
    let mut last = None;
    for _ in 0..32 {
        let udp = UdpSocket::bind((ip, 0))?;
        match TcpListener::bind(udp.local_addr()?) {
            Ok(tcp) => return Ok((udp, tcp)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| io::Error::other("no free port")))
}

fn serve_tcp(mut stream: TcpStream, zone: &Zone, mode: Mode, stats: &Stats) {
    let _ = stream.set_nonblocking(false);
    let _ = stream.set_read_timeout(Some(Duration::from_secs(5)));
    loop {
        let mut len = [0u8; 2];
        if stream.read_exact(&mut len).is_err() {
            return;
        }
        let mut q = vec![0u8; u16::from_be_bytes(len) as usize];
        if stream.read_exact(&mut q).is_err() {
            return;
        }
        stats.tcp_queries.fetch_add(1, Ordering::Relaxed);
        let Some(bytes) = answer(zone, mode, stats, &q, false) else {
            continue;
        };
        let mut framed = (bytes.len() as u16).to_be_bytes().to_vec();
        framed.extend_from_slice(&bytes);
        if stream.write_all(&framed).is_err() {
            return;
        }
    }
}

fn answer(zone: &Zone, mode: Mode, stats: &Stats, query: &[u8], udp: bool) -> Option<Vec<u8>> {
    let query = Message::decode(query).ok()?;
    if query.edns.is_some_and(|e| e.dnssec_ok) {
        stats.do_bit_queries.fetch_add(1, Ordering::Relaxed);
    }
    match respond(zone, mode, &query, udp) {
        Reply::Message(m) => m.encode().ok(),
        Reply::Raw(b) => Some(b),
        Reply::None => None,
    }
}

fn respond(zone: &Zone, mode: Mode, query: &Message, udp: bool) -> Reply {
    if mode == Mode::Silent {
        return Reply::None;
    }
    let Some(q) = query.questions.first() else {
        return Reply::Message(Message::response_to(query, wire::RCODE_FORMERR));
    };
    let mut resp = Message::response_to(query, wire::RCODE_NOERROR);
    if q.name.is_empty() {
        return Reply::Message(resp);
    }

    let mut name = q.name.clone();
    let mut secure = true;
    for _ in 0..8 {
        let Some(entry) = zone.get(&name) else {
            resp.set_rcode(wire::RCODE_NXDOMAIN);
            return Reply::Message(resp);
        };
        match entry.behavior {
            Behavior::Normal => {}
            Behavior::Blackhole => return Reply::None,
            Behavior::Garbage => return Reply::Raw(vec![0xde, 0xad, 0xbe]),
            Behavior::Rcode(rc) => {
                resp.set_rcode(rc);
                return Reply::Message(resp);
            }
            Behavior::TruncateUdp if udp => {
                resp.header.tc = true;
                return Reply::Message(resp);
            }
            Behavior::TruncateUdp => {}
        }
        if mode == Mode::Validating && entry.security == Security::Bogus {
            resp.set_rcode(wire::RCODE_SERVFAIL);
            resp.answers.clear();
            return Reply::Message(resp);
        }
        secure &= entry.security == Security::Secure;
        if let Some(target) = &entry.cname {
            let mut rdata = Vec::new();
            wire::write_name(&mut rdata, target).expect("valid fixture name");
            resp.answers
                .push(Record::new(&name, wire::TYPE_CNAME, 300, rdata));
            name = target.clone();
            continue;
        }
        let rdatas: Vec<Vec<u8>> = match q.qtype {
            wire::TYPE_SSHFP => entry.sshfp.clone(),
            wire::TYPE_A => entry.a.iter().map(|a| a.octets().to_vec()).collect(),
            wire::TYPE_AAAA => entry.aaaa.iter().map(|a| a.octets().to_vec()).collect(),
            _ => Vec::new(),
        };
        for rdata in rdatas {
            resp.answers.push(Record::new(&name, q.qtype, 300, rdata));
        }
        // AD only for clients that signal they understand it.
        let wants_ad = query.edns.is_some_and(|e| e.dnssec_ok) || query.header.ad;
        resp.header.ad = mode == Mode::Validating && secure && wants_ad;
        return Reply::Message(resp);
    }
    resp.set_rcode(wire::RCODE_SERVFAIL);
    Reply::Message(resp)
}
