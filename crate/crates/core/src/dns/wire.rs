//! DNS message encoding and decoding.
//!
//! Covers what a stub client and a test responder need: header flags,
//! questions, resource records with name compression on decode, and the
//! EDNS0 OPT pseudo-record. Names are always written uncompressed.

use thiserror::Error;

pub const TYPE_A: u16 = 1;
pub const TYPE_NS: u16 = 2;
pub const TYPE_CNAME: u16 = 5;
pub const TYPE_SOA: u16 = 6;
pub const TYPE_PTR: u16 = 12;
pub const TYPE_AAAA: u16 = 28;
pub const TYPE_OPT: u16 = 41;
pub const TYPE_SSHFP: u16 = 44;
pub const CLASS_IN: u16 = 1;

pub const RCODE_NOERROR: u16 = 0;
pub const RCODE_FORMERR: u16 = 1;
pub const RCODE_SERVFAIL: u16 = 2;
pub const RCODE_NXDOMAIN: u16 = 3;
pub const RCODE_REFUSED: u16 = 5;

/// Advertised EDNS0 UDP payload size.
pub const EDNS_UDP_SIZE: u16 = 1232;
const EDNS_DO: u32 = 0x8000;

const MAX_POINTER_HOPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("message truncated at offset {0}")]
    Truncated(usize),
    #[error("bad label at offset {0}")]
    BadLabel(usize),
    #[error("compression pointer loop")]
    PointerLoop,
    #[error("name too long")]
    NameTooLong,
    #[error("invalid domain name {0:?}")]
    InvalidName(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Header {
    pub id: u16,
    pub qr: bool,
    pub opcode: u8,
    pub aa: bool,
    pub tc: bool,
    pub rd: bool,
    pub ra: bool,
    pub ad: bool,
    pub cd: bool,
    /// Low four bits of the response code; see [`Message::rcode`].
    pub rcode: u8,
}

impl Header {
    fn flags(&self) -> u16 {
        (u16::from(self.qr) << 15)
            | (u16::from(self.opcode & 0x0f) << 11)
            | (u16::from(self.aa) << 10)
            | (u16::from(self.tc) << 9)
            | (u16::from(self.rd) << 8)
            | (u16::from(self.ra) << 7)
            | (u16::from(self.ad) << 5)
            | (u16::from(self.cd) << 4)
            | u16::from(self.rcode & 0x0f)
    }

    fn from_flags(id: u16, flags: u16) -> Self {
        Header {
            id,
            qr: flags & 0x8000 != 0,
            opcode: ((flags >> 11) & 0x0f) as u8,
            aa: flags & 0x0400 != 0,
            tc: flags & 0x0200 != 0,
            rd: flags & 0x0100 != 0,
            ra: flags & 0x0080 != 0,
            ad: flags & 0x0020 != 0,
            cd: flags & 0x0010 != 0,
            rcode: (flags & 0x000f) as u8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    /// Lowercase, no trailing dot; the root is the empty string.
    pub name: String,
    pub qtype: u16,
    pub qclass: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub name: String,
    pub rtype: u16,
    pub class: u16,
    pub ttl: u32,
    /// Raw RDATA. Names inside CNAME/NS/PTR RDATA are stored expanded.
    pub rdata: Vec<u8>,
}

impl Record {
    pub fn new(name: &str, rtype: u16, ttl: u32, rdata: Vec<u8>) -> Self {
        Record {
            name: name.to_ascii_lowercase(),
            rtype,
            class: CLASS_IN,
            ttl,
            rdata,
        }
    }

    /// Target of a CNAME record.
    pub fn cname_target(&self) -> Option<String> {
        if self.rtype != TYPE_CNAME {
            return None;
        }
        read_name(&self.rdata, 0).ok().map(|(name, _)| name)
    }
}

/// EDNS0 parameters carried in an OPT pseudo-record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edns {
    pub udp_size: u16,
    pub extended_rcode: u8,
    pub version: u8,
    pub dnssec_ok: bool,
}

impl Edns {
    fn to_record(self) -> Record {
        let ttl = (u32::from(self.extended_rcode) << 24)
            | (u32::from(self.version) << 16)
            | if self.dnssec_ok { EDNS_DO } else { 0 };
        Record {
            name: String::new(),
            rtype: TYPE_OPT,
            class: self.udp_size,
            ttl,
            rdata: Vec::new(),
        }
    }

    fn from_record(rec: &Record) -> Self {
        Edns {
            udp_size: rec.class,
            extended_rcode: (rec.ttl >> 24) as u8,
            version: (rec.ttl >> 16) as u8,
            dnssec_ok: rec.ttl & EDNS_DO != 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Message {
    pub header: Header,
    pub questions: Vec<Question>,
    pub answers: Vec<Record>,
    pub authorities: Vec<Record>,
    /// Additional records other than OPT.
    pub additionals: Vec<Record>,
    pub edns: Option<Edns>,
}

impl Message {
    /// A recursive query for `name`. With `dnssec`, an OPT record with the DO
    /// bit is attached.
    pub fn query(id: u16, name: &str, qtype: u16, dnssec: bool) -> Self {
        Message {
            header: Header {
                id,
                rd: true,
                ..Header::default()
            },
            questions: vec![Question {
                name: name.trim_end_matches('.').to_ascii_lowercase(),
                qtype,
                qclass: CLASS_IN,
            }],
            edns: dnssec.then_some(Edns {
                udp_size: EDNS_UDP_SIZE,
                extended_rcode: 0,
                version: 0,
                dnssec_ok: true,
            }),
            ..Message::default()
        }
    }

    /// Starts a response echoing the query's id, question and RD flag.
    pub fn response_to(query: &Message, rcode: u16) -> Self {
        let mut msg = Message {
            header: Header {
                id: query.header.id,
                qr: true,
                opcode: query.header.opcode,
                rd: query.header.rd,
                ra: true,
                ..Header::default()
            },
            questions: query.questions.clone(),
            edns: query.edns.map(|e| Edns {
                udp_size: EDNS_UDP_SIZE,
                extended_rcode: 0,
                version: 0,
                dnssec_ok: e.dnssec_ok,
            }),
            ..Message::default()
        };
        msg.set_rcode(rcode);
        msg
    }

    /// Full 12-bit response code, including the EDNS extension.
    pub fn rcode(&self) -> u16 {
        let ext = self.edns.map_or(0, |e| u16::from(e.extended_rcode));
        (ext << 4) | u16::from(self.header.rcode)
    }

    pub fn set_rcode(&mut self, rcode: u16) {
        self.header.rcode = (rcode & 0x0f) as u8;
        let ext = (rcode >> 4) as u8;
        if let Some(edns) = self.edns.as_mut() {
            edns.extended_rcode = ext;
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        let mut out = Vec::with_capacity(512);
        let additional = self.additionals.len() + usize::from(self.edns.is_some());
        out.extend_from_slice(&self.header.id.to_be_bytes());
        out.extend_from_slice(&self.header.flags().to_be_bytes());
        for count in [
            self.questions.len(),
            self.answers.len(),
            self.authorities.len(),
            additional,
        ] {
            out.extend_from_slice(&(count as u16).to_be_bytes());
        }
        for q in &self.questions {
            write_name(&mut out, &q.name)?;
            out.extend_from_slice(&q.qtype.to_be_bytes());
            out.extend_from_slice(&q.qclass.to_be_bytes());
        }
        let opt = self.edns.map(Edns::to_record);
        for rec in self
            .answers
            .iter()
            .chain(&self.authorities)
            .chain(&self.additionals)
            .chain(opt.as_ref())
        {
            write_record(&mut out, rec)?;
        }
        Ok(out)
    }

    pub fn decode(buf: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader { buf, pos: 0 };
        let id = r.u16()?;
        let flags = r.u16()?;
        let qd = r.u16()?;
        let an = r.u16()?;
        let ns = r.u16()?;
        let ar = r.u16()?;
        let mut msg = Message {
            header: Header::from_flags(id, flags),
            ..Message::default()
        };
        for _ in 0..qd {
            let name = r.name()?;
            let qtype = r.u16()?;
            let qclass = r.u16()?;
            msg.questions.push(Question {
                name,
                qtype,
                qclass,
            });
        }
        for _ in 0..an {
            msg.answers.push(r.record()?);
        }
        for _ in 0..ns {
            msg.authorities.push(r.record()?);
        }
        for _ in 0..ar {
            let rec = r.record()?;
            if rec.rtype == TYPE_OPT && msg.edns.is_none() {
                msg.edns = Some(Edns::from_record(&rec));
            } else {
                msg.additionals.push(rec);
            }
        }
        Ok(msg)
    }
}

fn write_record(out: &mut Vec<u8>, rec: &Record) -> Result<(), WireError> {
    write_name(out, &rec.name)?;
    out.extend_from_slice(&rec.rtype.to_be_bytes());
    out.extend_from_slice(&rec.class.to_be_bytes());
    out.extend_from_slice(&rec.ttl.to_be_bytes());
    let len = u16::try_from(rec.rdata.len()).map_err(|_| WireError::NameTooLong)?;
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(&rec.rdata);
    Ok(())
}

/// Appends `name` in uncompressed wire form.
pub fn write_name(out: &mut Vec<u8>, name: &str) -> Result<(), WireError> {
    let name = name.trim_end_matches('.');
    let mut total = 1;
    if !name.is_empty() {
        for label in name.split('.') {
            if label.is_empty() || label.len() > 63 {
                return Err(WireError::InvalidName(name.to_owned()));
            }
            total += label.len() + 1;
            out.push(label.len() as u8);
            out.extend_from_slice(label.as_bytes());
        }
    }
    if total > 255 {
        return Err(WireError::NameTooLong);
    }
    out.push(0);
    Ok(())
}

/// Reads a possibly compressed name starting at `pos`; returns the name and
/// the offset just past it.
fn read_name(buf: &[u8], mut pos: usize) -> Result<(String, usize), WireError> {
    let mut labels: Vec<String> = Vec::new();
    let mut end = None;
    let mut hops = 0;
    let mut total = 1;
    loop {
        let len = *buf.get(pos).ok_or(WireError::Truncated(pos))? as usize;
        match len & 0xc0 {
            0x00 if len == 0 => {
                let end = end.unwrap_or(pos + 1);
                return Ok((labels.join("."), end));
            }
            0x00 => {
                let label = buf
                    .get(pos + 1..pos + 1 + len)
                    .ok_or(WireError::Truncated(pos))?;
                total += len + 1;
                if total > 255 {
                    return Err(WireError::NameTooLong);
                }
                labels.push(String::from_utf8_lossy(label).to_ascii_lowercase());
                pos += 1 + len;
            }
            0xc0 => {
                let lo = *buf.get(pos + 1).ok_or(WireError::Truncated(pos))? as usize;
                hops += 1;
                if hops > MAX_POINTER_HOPS {
                    return Err(WireError::PointerLoop);
                }
                end.get_or_insert(pos + 2);
                pos = ((len & 0x3f) << 8) | lo;
            }
            _ => return Err(WireError::BadLabel(pos)),
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], WireError> {
        let s = self
            .buf
            .get(self.pos..self.pos + n)
            .ok_or(WireError::Truncated(self.pos))?;
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn name(&mut self) -> Result<String, WireError> {
        let (name, end) = read_name(self.buf, self.pos)?;
        self.pos = end;
        Ok(name)
    }

    fn record(&mut self) -> Result<Record, WireError> {
        let name = self.name()?;
        let rtype = self.u16()?;
        let class = self.u16()?;
        let ttl = self.u32()?;
        let len = self.u16()? as usize;
        let start = self.pos;
        let raw = self.take(len)?;
        let rdata = match rtype {
            TYPE_CNAME | TYPE_NS | TYPE_PTR => {
                let (target, end) = read_name(self.buf, start)?;
                if end > start + len {
                    return Err(WireError::Truncated(start));
                }
                let mut expanded = Vec::new();
                write_name(&mut expanded, &target)?;
                expanded
            }
            _ => raw.to_vec(),
        };
        Ok(Record {
            name,
            rtype,
            class,
            ttl,
            rdata,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_roundtrip_with_do_bit() {
        let q = Message::query(0x1234, "Example.COM.", TYPE_SSHFP, true);
        let bytes = q.encode().unwrap();
        // header: id, RD set, one question, one additional (OPT)
        assert_eq!(
            &bytes[..12],
            &[0x12, 0x34, 0x01, 0x00, 0, 1, 0, 0, 0, 0, 0, 1]
        );
        let back = Message::decode(&bytes).unwrap();
        assert_eq!(back.questions[0].name, "example.com");
        assert_eq!(back.questions[0].qtype, TYPE_SSHFP);
        let edns = back.edns.unwrap();
        assert!(edns.dnssec_ok);
        assert_eq!(edns.udp_size, EDNS_UDP_SIZE);
        assert_eq!(back, q);
    }

    #[test]
    fn plain_query_has_no_opt() {
        let bytes = Message::query(1, "a.example", TYPE_A, false)
            .encode()
            .unwrap();
        assert_eq!(&bytes[10..12], &[0, 0]);
    }

    #[test]
    fn flags_roundtrip() {
        let h = Header {
            id: 7,
            qr: true,
            opcode: 0,
            aa: true,
            tc: true,
            rd: true,
            ra: true,
            ad: true,
            cd: false,
            rcode: 3,
        };
        assert_eq!(Header::from_flags(7, h.flags()), h);
        assert_eq!(h.flags(), 0b1000_0111_1010_0011);
    }

    #[test]
    fn decodes_compressed_names() {
        // Response with the answer owner pointing back at the question name,
        // and a CNAME whose target is partly compressed.
        let mut msg = vec![0, 1, 0x81, 0x80, 0, 1, 0, 2, 0, 0, 0, 0];
        write_name(&mut msg, "www.example.com").unwrap();
        msg.extend_from_slice(&[0, 5, 0, 1]);
        // CNAME www.example.com -> host.example.com (host + ptr to offset 16)
        msg.extend_from_slice(&[0xc0, 12, 0, 5, 0, 1, 0, 0, 0, 60, 0, 7]);
        msg.extend_from_slice(&[4, b'h', b'o', b's', b't', 0xc0, 16]);
        // A host.example.com
        let host_at = msg.len() - 7;
        msg.extend_from_slice(&[
            0xc0,
            host_at as u8,
            0,
            1,
            0,
            1,
            0,
            0,
            0,
            60,
            0,
            4,
            192,
            0,
            2,
            1,
        ]);
        let m = Message::decode(&msg).unwrap();
        assert_eq!(m.answers[0].name, "www.example.com");
        assert_eq!(
            m.answers[0].cname_target().as_deref(),
            Some("host.example.com")
        );
        assert_eq!(m.answers[1].name, "host.example.com");
        assert_eq!(m.answers[1].rdata, vec![192, 0, 2, 1]);
    }

    #[test]
    fn rejects_pointer_loops_and_truncation() {
        let mut msg = vec![0, 1, 0x81, 0x80, 0, 1, 0, 0, 0, 0, 0, 0];
        msg.extend_from_slice(&[0xc0, 12, 0, 1, 0, 1]);
        assert_eq!(Message::decode(&msg), Err(WireError::PointerLoop));
        assert!(matches!(
            Message::decode(&[0, 1, 2]),
            Err(WireError::Truncated(_))
        ));
        let mut msg = vec![0, 1, 0x81, 0x80, 0, 0, 0, 1, 0, 0, 0, 0];
        msg.extend_from_slice(&[0, 0, 44, 0, 1, 0, 0, 0, 1, 0, 30, 1]);
        assert!(matches!(
            Message::decode(&msg),
            Err(WireError::Truncated(_))
        ));
    }

    #[test]
    fn extended_rcode() {
        let q = Message::query(9, "x", TYPE_A, true);
        let mut r = Message::response_to(&q, 16);
        assert_eq!(r.rcode(), 16);
        r = Message::decode(&r.encode().unwrap()).unwrap();
        assert_eq!(r.rcode(), 16);
        assert_eq!(r.header.rcode, 0);
    }

    #[test]
    fn name_limits() {
        let long = "a".repeat(64);
        assert!(write_name(&mut Vec::new(), &long).is_err());
        assert!(write_name(&mut Vec::new(), "a..b").is_err());
        let many = vec!["abcdefghi"; 26].join(".");
        assert_eq!(
            write_name(&mut Vec::new(), &many),
            Err(WireError::NameTooLong)
        );
        let mut root = Vec::new();
        write_name(&mut root, "").unwrap();
        assert_eq!(root, vec![0]);
    }
}
