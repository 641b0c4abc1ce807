//! SSH transport encoding: data types, unencrypted binary packets, version
//! lines and KEXINIT.

use std::io::{self, BufRead, Read, Write};

use rand::RngCore;

pub const MSG_DISCONNECT: u8 = 1;
pub const MSG_IGNORE: u8 = 2;
pub const MSG_UNIMPLEMENTED: u8 = 3;
pub const MSG_DEBUG: u8 = 4;
pub const MSG_SERVICE_REQUEST: u8 = 5;
pub const MSG_KEXINIT: u8 = 20;
pub const MSG_NEWKEYS: u8 = 21;
pub const MSG_KEX_ECDH_INIT: u8 = 30;
pub const MSG_KEX_ECDH_REPLY: u8 = 31;
/// First message number of the user authentication protocol.
pub const MSG_USERAUTH_FIRST: u8 = 50;

pub const DISCONNECT_KEY_EXCHANGE_FAILED: u32 = 3;
pub const DISCONNECT_BY_APPLICATION: u32 = 11;

/// Upper bound accepted for `packet_length`.
pub const MAX_PACKET_LEN: usize = 256 * 1024;
const MAX_VERSION_LINE: usize = 255;
const MAX_BANNER_BYTES: usize = 16 * 1024;

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("unexpected end of data")]
    Eof,
    #[error("invalid packet: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Builder for SSH-encoded payloads.
#[derive(Debug, Default, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Writer::default()
    }

    pub fn byte(&mut self, b: u8) -> &mut Self {
        self.buf.push(b);
        self
    }

    pub fn boolean(&mut self, b: bool) -> &mut Self {
        self.byte(u8::from(b))
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn raw(&mut self, data: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(data);
        self
    }

    pub fn string(&mut self, data: &[u8]) -> &mut Self {
        self.u32(data.len() as u32);
        self.raw(data)
    }

    pub fn name_list(&mut self, names: &[impl AsRef<str>]) -> &mut Self {
        let joined = names
            .iter()
            .map(AsRef::as_ref)
            .collect::<Vec<_>>()
            .join(",");
        self.string(joined.as_bytes())
    }

    /// Non-negative integer given as big-endian magnitude bytes.
    pub fn mpint(&mut self, magnitude: &[u8]) -> &mut Self {
        let trimmed = strip_leading_zeros(magnitude);
        if trimmed.first().is_some_and(|b| b & 0x80 != 0) {
            self.u32(trimmed.len() as u32 + 1);
            self.byte(0);
            self.raw(trimmed)
        } else {
            self.string(trimmed)
        }
    }

    pub fn finish(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.buf)
    }
}

pub fn strip_leading_zeros(bytes: &[u8]) -> &[u8] {
    let start = bytes.iter().position(|&b| b != 0).unwrap_or(bytes.len());
    &bytes[start..]
}

/// Cursor over an SSH-encoded payload.
#[derive(Debug, Clone)]
pub struct Reader<'a> {
    data: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Reader { data }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.data.len() < n {
            return Err(WireError::Eof);
        }
        let (head, tail) = self.data.split_at(n);
        self.data = tail;
        Ok(head)
    }

    pub fn byte(&mut self) -> Result<u8, WireError> {
        Ok(self.bytes(1)?[0])
    }

    pub fn boolean(&mut self) -> Result<bool, WireError> {
        Ok(self.byte()? != 0)
    }

    pub fn u32(&mut self) -> Result<u32, WireError> {
        let b = self.bytes(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn string(&mut self) -> Result<&'a [u8], WireError> {
        let len = self.u32()? as usize;
        self.bytes(len)
    }

    pub fn utf8(&mut self) -> Result<&'a str, WireError> {
        std::str::from_utf8(self.string()?)
            .map_err(|_| WireError::Invalid("non-UTF-8 string".into()))
    }

    pub fn name_list(&mut self) -> Result<Vec<String>, WireError> {
        let s = self.utf8()?;
        Ok(if s.is_empty() {
            Vec::new()
        } else {
            s.split(',').map(str::to_owned).collect()
        })
    }

    /// Magnitude bytes of a non-negative mpint.
    pub fn mpint(&mut self) -> Result<&'a [u8], WireError> {
        let raw = self.string()?;
        if raw.first().is_some_and(|b| b & 0x80 != 0) {
            return Err(WireError::Invalid("negative mpint".into()));
        }
        Ok(strip_leading_zeros(raw))
    }
}

/// Writes one unencrypted binary packet.
pub fn write_packet(w: &mut impl Write, payload: &[u8]) -> io::Result<()> {
    let unpadded = 4 + 1 + payload.len();
    let mut padding = 8 - unpadded % 8;
    if padding < 4 {
        padding += 8;
    }
    let mut pad = vec![0u8; padding];
    rand::thread_rng().fill_bytes(&mut pad);
    let mut out = Vec::with_capacity(unpadded + padding);
    out.extend_from_slice(&((1 + payload.len() + padding) as u32).to_be_bytes());
    out.push(padding as u8);
    out.extend_from_slice(payload);
    out.extend_from_slice(&pad);
    w.write_all(&out)?;
    w.flush()
}

/// Reads one unencrypted binary packet and returns its payload.
pub fn read_packet(r: &mut impl Read) -> Result<Vec<u8>, WireError> {
    let mut len = [0u8; 4];
    read_exact(r, &mut len)?;
    let len = u32::from_be_bytes(len) as usize;
    if !(5..=MAX_PACKET_LEN).contains(&len) {
        return Err(WireError::Invalid(format!("packet length {len}")));
    }
    let mut body = vec![0u8; len];
    read_exact(r, &mut body)?;
    let padding = body[0] as usize;
    if padding + 1 > len {
        return Err(WireError::Invalid(format!("padding length {padding}")));
    }
    body.truncate(len - padding);
    body.remove(0);
    Ok(body)
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<(), WireError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            WireError::Eof
        } else {
            WireError::Io(e)
        }
    })
}

pub fn write_version(w: &mut impl Write, version: &str) -> io::Result<()> {
    w.write_all(version.as_bytes())?;
    w.write_all(b"\r\n")?;
    w.flush()
}

/// Reads lines until the peer's `SSH-` identification line, skipping any
/// banner text before it. Returns the line without CR LF.
pub fn read_version(r: &mut impl BufRead) -> Result<String, WireError> {
    let mut consumed = 0;
    loop {
        let mut line = Vec::new();
        let n = r
            .by_ref()
            .take((MAX_VERSION_LINE + 1) as u64)
            .read_until(b'\n', &mut line)?;
        if n == 0 {
            return Err(WireError::Eof);
        }
        consumed += n;
        if line.last() != Some(&b'\n') && n > MAX_VERSION_LINE {
            return Err(WireError::Invalid("identification line too long".into()));
        }
        while matches!(line.last(), Some(b'\n' | b'\r')) {
            line.pop();
        }
        if line.starts_with(b"SSH-") {
            return String::from_utf8(line)
                .map_err(|_| WireError::Invalid("non-UTF-8 identification".into()));
        }
        if consumed > MAX_BANNER_BYTES {
            return Err(WireError::Invalid("no identification line".into()));
        }
    }
}

/// Whether a peer identification line speaks protocol 2.
pub fn is_v2(version: &str) -> bool {
    version.starts_with("SSH-2.0-") || version.starts_with("SSH-1.99-")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KexInit {
    pub cookie: [u8; 16],
    pub kex_algorithms: Vec<String>,
    pub server_host_key_algorithms: Vec<String>,
    pub encryption_c2s: Vec<String>,
    pub encryption_s2c: Vec<String>,
    pub mac_c2s: Vec<String>,
    pub mac_s2c: Vec<String>,
    pub compression_c2s: Vec<String>,
    pub compression_s2c: Vec<String>,
    pub languages_c2s: Vec<String>,
    pub languages_s2c: Vec<String>,
    pub first_kex_packet_follows: bool,
}

impl KexInit {
    /// A KEXINIT with a random cookie and symmetric algorithm lists.
    pub fn new(kex: &[&str], host_key: &[&str], ciphers: &[&str], macs: &[&str]) -> Self {
        let mut cookie = [0u8; 16];
        rand::thread_rng().fill_bytes(&mut cookie);
        let owned = |l: &[&str]| l.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        KexInit {
            cookie,
            kex_algorithms: owned(kex),
            server_host_key_algorithms: owned(host_key),
            encryption_c2s: owned(ciphers),
            encryption_s2c: owned(ciphers),
            mac_c2s: owned(macs),
            mac_s2c: owned(macs),
            compression_c2s: vec!["none".into()],
            compression_s2c: vec!["none".into()],
            languages_c2s: Vec::new(),
            languages_s2c: Vec::new(),
            first_kex_packet_follows: false,
        }
    }

    /// Payload including the leading message number.
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.byte(MSG_KEXINIT).raw(&self.cookie);
        for list in [
            &self.kex_algorithms,
            &self.server_host_key_algorithms,
            &self.encryption_c2s,
            &self.encryption_s2c,
            &self.mac_c2s,
            &self.mac_s2c,
            &self.compression_c2s,
            &self.compression_s2c,
            &self.languages_c2s,
            &self.languages_s2c,
        ] {
            w.name_list(list);
        }
        w.boolean(self.first_kex_packet_follows).u32(0);
        w.finish()
    }

    pub fn decode(payload: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(payload);
        if r.byte()? != MSG_KEXINIT {
            return Err(WireError::Invalid("not a KEXINIT".into()));
        }
        let cookie: [u8; 16] = r.bytes(16)?.try_into().expect("16 bytes");
        Ok(KexInit {
            cookie,
            kex_algorithms: r.name_list()?,
            server_host_key_algorithms: r.name_list()?,
            encryption_c2s: r.name_list()?,
            encryption_s2c: r.name_list()?,
            mac_c2s: r.name_list()?,
            mac_s2c: r.name_list()?,
            compression_c2s: r.name_list()?,
            compression_s2c: r.name_list()?,
            languages_c2s: r.name_list()?,
            languages_s2c: r.name_list()?,
            first_kex_packet_follows: r.boolean()?,
        })
    }
}

/// Algorithm negotiation: the first client entry the server also lists.
pub fn negotiate<'a>(client: &'a [String], server: &[String]) -> Option<&'a str> {
    client
        .iter()
        .find(|c| server.iter().any(|s| s == *c))
        .map(String::as_str)
}

pub fn disconnect_payload(reason: u32, description: &str) -> Vec<u8> {
    Writer::new()
        .byte(MSG_DISCONNECT)
        .u32(reason)
        .string(description.as_bytes())
        .string(b"")
        .finish()
}
