//! SSHFP records and SSH host key fingerprints.
//!
//! Covers both record encodings (zone presentation format and DNS wire RDATA),
//! semantic validation against the IANA registries, fingerprint computation
//! over raw SSH public key blobs, and record/key matching.

use std::fmt;
use std::str::FromStr;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha1::Sha1;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// The SSHFP `KEY-ALGO` field.
///
/// Every octet value is representable; only some are assigned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeyAlgo(u8);

impl KeyAlgo {
    pub const RESERVED: KeyAlgo = KeyAlgo(0);
    pub const RSA: KeyAlgo = KeyAlgo(1);
    pub const DSA: KeyAlgo = KeyAlgo(2);
    pub const ECDSA: KeyAlgo = KeyAlgo(3);
    pub const ED25519: KeyAlgo = KeyAlgo(4);
    pub const ED448: KeyAlgo = KeyAlgo(6);

    pub const fn from_code(code: u8) -> Self {
        KeyAlgo(code)
    }

    pub const fn code(self) -> u8 {
        self.0
    }

    /// Registry name, or `None` for unassigned codes.
    pub fn name(self) -> Option<&'static str> {
        match self.0 {
            0 => Some("RESERVED"),
            1 => Some("RSA"),
            2 => Some("DSA"),
            3 => Some("ECDSA"),
            4 => Some("ED25519"),
            6 => Some("ED448"),
            _ => None,
        }
    }

    pub fn is_reserved(self) -> bool {
        self.0 == 0
    }

    /// Assigned and usable, i.e. neither reserved nor unassigned.
    pub fn is_assigned(self) -> bool {
        matches!(self.0, 1 | 2 | 3 | 4 | 6)
    }
}

impl From<u8> for KeyAlgo {
    fn from(code: u8) -> Self {
        KeyAlgo(code)
    }
}

impl fmt::Display for KeyAlgo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name() {
            Some(name) => f.write_str(name),
            None => write!(f, "UNASSIGNED({})", self.0),
        }
    }
}

/// The SSHFP `HASH-TYPE` field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HashType(u8);

impl HashType {
    pub const RESERVED: HashType = HashType(0);
    pub const SHA1: HashType = HashType(1);
    pub const SHA256: HashType = HashType(2);

    /// Both assigned hash types, in code order.
    pub const ALL: [HashType; 2] = [HashType::SHA1, HashType::SHA256];

    pub const fn from_code(code: u8) -> Self {
        HashType(code)
    }

    pub const fn code(self) -> u8 {
        self.0
    }

    pub fn name(self) -> Option<&'static str> {
        match self.0 {
            0 => Some("RESERVED"),
            1 => Some("SHA1"),
            2 => Some("SHA256"),
            _ => None,
        }
    }

    pub fn is_reserved(self) -> bool {
        self.0 == 0
    }

    pub fn is_assigned(self) -> bool {
        matches!(self.0, 1 | 2)
    }

    /// Output length of the hash function in bytes.
    pub fn digest_len(self) -> Option<usize> {
        match self.0 {
            1 => Some(20),
            2 => Some(32),
            _ => None,
        }
    }
}

impl From<u8> for HashType {
    fn from(code: u8) -> Self {
        HashType(code)
    }
}

impl fmt::Display for HashType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name() {
            Some(name) => f.write_str(name),
            None => write!(f, "UNASSIGNED({})", self.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed SSHFP record: {0}")]
    Malformed(String),
}

fn malformed(msg: impl Into<String>) -> ParseError {
    ParseError::Malformed(msg.into())
}

/// One SSHFP resource record.
///
/// Ordering is by `(key_algo, hash_type, fingerprint)`, which is the order
/// generated record lists are emitted in.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SshfpRecord {
    pub key_algo: KeyAlgo,
    pub hash_type: HashType,
    pub fingerprint: Vec<u8>,
}

impl SshfpRecord {
    pub fn new(key_algo: KeyAlgo, hash_type: HashType, fingerprint: Vec<u8>) -> Self {
        SshfpRecord {
            key_algo,
            hash_type,
            fingerprint,
        }
    }

    /// Wire RDATA: algorithm octet, fingerprint type octet, digest.
    pub fn to_rdata(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 + self.fingerprint.len());
        out.push(self.key_algo.code());
        out.push(self.hash_type.code());
        out.extend_from_slice(&self.fingerprint);
        out
    }

    pub fn validate(&self) -> Validity {
        validate_record(self)
    }

    pub fn is_valid(&self) -> bool {
        self.validate() == Validity::Valid
    }
}

/// Parses a presentation-format record such as `SSHFP 4 2 <hex>`.
///
/// Structural decoding only; unassigned codes decode fine and are rejected
/// later by [`validate_record`].
pub fn parse_record(text: &str) -> Result<SshfpRecord, ParseError> {
    let mut fields = text.split_whitespace().peekable();
    if fields
        .peek()
        .is_some_and(|t| t.eq_ignore_ascii_case("SSHFP"))
    {
        fields.next();
    }
    let algo = fields.next().ok_or_else(|| malformed("missing KEY-ALGO"))?;
    let hash = fields
        .next()
        .ok_or_else(|| malformed("missing HASH-TYPE"))?;
    let hex_digits: String = fields.collect();
    if hex_digits.is_empty() {
        return Err(malformed("missing FINGERPRINT"));
    }
    let key_algo = parse_octet(algo, "KEY-ALGO")?;
    let hash_type = parse_octet(hash, "HASH-TYPE")?;
    let fingerprint = hex::decode(hex_digits.to_ascii_lowercase())
        .map_err(|e| malformed(format!("FINGERPRINT: {e}")))?;
    Ok(SshfpRecord::new(
        KeyAlgo(key_algo),
        HashType(hash_type),
        fingerprint,
    ))
}

fn parse_octet(field: &str, what: &str) -> Result<u8, ParseError> {
    if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed(format!(
            "{what} is not a decimal integer: {field:?}"
        )));
    }
    field
        .parse::<u8>()
        .map_err(|_| malformed(format!("{what} out of range 0-255: {field}")))
}

/// Decodes SSHFP wire RDATA.
pub fn parse_rdata(wire: &[u8]) -> Result<SshfpRecord, ParseError> {
    if wire.len() < 3 {
        return Err(malformed(format!("RDATA too short ({} bytes)", wire.len())));
    }
    Ok(SshfpRecord::new(
        KeyAlgo(wire[0]),
        HashType(wire[1]),
        wire[2..].to_vec(),
    ))
}

/// Presentation format without the type mnemonic: `<algo> <hash> <hex>`.
pub fn serialize_record(record: &SshfpRecord) -> String {
    record.to_string()
}

impl fmt::Display for SshfpRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}",
            self.key_algo.code(),
            self.hash_type.code(),
            hex::encode(&self.fingerprint)
        )
    }
}

impl FromStr for SshfpRecord {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_record(s)
    }
}

// Records travel through logs in presentation format.
impl Serialize for SshfpRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SshfpRecord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_record(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InvalidReason {
    UnassignedKeyAlgo,
    ReservedKeyAlgo,
    UnassignedHashType,
    ReservedHashType,
    LengthMismatch,
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InvalidReason::UnassignedKeyAlgo => "UNASSIGNED_KEY_ALGO",
            InvalidReason::ReservedKeyAlgo => "RESERVED_KEY_ALGO",
            InvalidReason::UnassignedHashType => "UNASSIGNED_HASH_TYPE",
            InvalidReason::ReservedHashType => "RESERVED_HASH_TYPE",
            InvalidReason::LengthMismatch => "LENGTH_MISMATCH",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Validity {
    Valid,
    Invalid(InvalidReason),
}

/// Semantic check: both codes assigned and non-reserved, and the digest
/// length equal to the hash output length. Key algorithm is checked first.
pub fn validate_record(record: &SshfpRecord) -> Validity {
    let reason = if record.key_algo.is_reserved() {
        InvalidReason::ReservedKeyAlgo
    } else if !record.key_algo.is_assigned() {
        InvalidReason::UnassignedKeyAlgo
    } else if record.hash_type.is_reserved() {
        InvalidReason::ReservedHashType
    } else if !record.hash_type.is_assigned() {
        InvalidReason::UnassignedHashType
    } else if record.hash_type.digest_len() != Some(record.fingerprint.len()) {
        InvalidReason::LengthMismatch
    } else {
        return Validity::Valid;
    };
    Validity::Invalid(reason)
}

/// Maps an SSH public key identifier (the name embedded in a key blob) to
/// its SSHFP code. `None` for keys without one.
pub fn key_algo_from_ssh_name(algo_name: &str) -> Option<KeyAlgo> {
    match algo_name {
        "ssh-rsa" => Some(KeyAlgo::RSA),
        "ssh-dss" => Some(KeyAlgo::DSA),
        "ecdsa-sha2-nistp256" | "ecdsa-sha2-nistp384" | "ecdsa-sha2-nistp521" => {
            Some(KeyAlgo::ECDSA)
        }
        "ssh-ed25519" => Some(KeyAlgo::ED25519),
        "ssh-ed448" => Some(KeyAlgo::ED448),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FingerprintError {
    #[error("unsupported hash type {0}")]
    UnsupportedHash(HashType),
}

/// Digest of a raw SSH public key blob.
pub fn compute_fingerprint(blob: &[u8], hash_type: HashType) -> Result<Vec<u8>, FingerprintError> {
    match hash_type {
        HashType::SHA1 => Ok(Sha1::digest(blob).to_vec()),
        HashType::SHA256 => Ok(Sha256::digest(blob).to_vec()),
        other => Err(FingerprintError::UnsupportedHash(other)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HostKeyError {
    #[error("empty host key blob")]
    Empty,
    #[error("host key blob does not start with a length-prefixed algorithm name")]
    BadEncoding,
    #[error("host key blob names {embedded:?}, expected {declared:?}")]
    NameMismatch { declared: String, embedded: String },
    #[error("invalid base64 in host key: {0}")]
    Base64(String),
}

/// An SSH server public key as sent on the wire (`K_S`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HostKey {
    algo_name: String,
    blob: Vec<u8>,
}

impl HostKey {
    /// Builds a key from its blob, taking the algorithm name from the blob's
    /// leading string.
    pub fn from_blob(blob: Vec<u8>) -> Result<Self, HostKeyError> {
        let algo_name = embedded_name(&blob)?.to_owned();
        Ok(HostKey { algo_name, blob })
    }

    pub fn new(algo_name: impl Into<String>, blob: Vec<u8>) -> Result<Self, HostKeyError> {
        let algo_name = algo_name.into();
        let embedded = embedded_name(&blob)?;
        if embedded != algo_name {
            return Err(HostKeyError::NameMismatch {
                declared: algo_name,
                embedded: embedded.to_owned(),
            });
        }
        Ok(HostKey { algo_name, blob })
    }

    /// Parses an OpenSSH public key line (`<algo> <base64> [comment]`), as
    /// found in `*.pub` files and `known_hosts`-style output.
    pub fn from_openssh(line: &str) -> Result<Self, HostKeyError> {
        let mut parts = line.split_whitespace();
        let algo = parts.next().ok_or(HostKeyError::BadEncoding)?;
        let b64 = parts.next().ok_or(HostKeyError::BadEncoding)?;
        let blob = BASE64
            .decode(b64)
            .map_err(|e| HostKeyError::Base64(e.to_string()))?;
        HostKey::new(algo, blob)
    }

    pub fn algo_name(&self) -> &str {
        &self.algo_name
    }

    pub fn blob(&self) -> &[u8] {
        &self.blob
    }

    pub fn key_algo(&self) -> Option<KeyAlgo> {
        key_algo_from_ssh_name(&self.algo_name)
    }

    pub fn fingerprint(&self, hash_type: HashType) -> Result<Vec<u8>, FingerprintError> {
        compute_fingerprint(&self.blob, hash_type)
    }

    /// `<algo> <base64>` without comment.
    pub fn to_openssh(&self) -> String {
        format!("{} {}", self.algo_name, BASE64.encode(&self.blob))
    }
}

fn embedded_name(blob: &[u8]) -> Result<&str, HostKeyError> {
    if blob.is_empty() {
        return Err(HostKeyError::Empty);
    }
    if blob.len() < 4 {
        return Err(HostKeyError::BadEncoding);
    }
    let len = u32::from_be_bytes([blob[0], blob[1], blob[2], blob[3]]) as usize;
    let name = blob.get(4..4 + len).ok_or(HostKeyError::BadEncoding)?;
    if name.is_empty() {
        return Err(HostKeyError::BadEncoding);
    }
    std::str::from_utf8(name).map_err(|_| HostKeyError::BadEncoding)
}

#[derive(Serialize, Deserialize)]
struct HostKeyRepr {
    algo_name: String,
    blob: String,
}

impl Serialize for HostKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        HostKeyRepr {
            algo_name: self.algo_name.clone(),
            blob: BASE64.encode(&self.blob),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HostKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = HostKeyRepr::deserialize(deserializer)?;
        let blob = BASE64
            .decode(&repr.blob)
            .map_err(serde::de::Error::custom)?;
        HostKey::new(repr.algo_name, blob).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatchReason {
    Ok,
    UnassignedField,
    AlgoMismatch,
    DigestMismatch,
}

/// Diagnostic attached to a failed match when the digest would have matched
/// under a different reading of the record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NearMiss {
    /// The digest equals the key's digest under another hash type.
    DigestUnderHashType(HashType),
    /// The digest matches the key but the record names another key algorithm.
    WrongKeyAlgo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatchOutcome {
    matched: bool,
    reason: MatchReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    near_miss: Option<NearMiss>,
}

impl MatchOutcome {
    fn new(reason: MatchReason, near_miss: Option<NearMiss>) -> Self {
        MatchOutcome {
            matched: reason == MatchReason::Ok,
            reason,
            near_miss,
        }
    }

    pub fn matched(&self) -> bool {
        self.matched
    }

    pub fn reason(&self) -> MatchReason {
        self.reason
    }

    pub fn near_miss(&self) -> Option<NearMiss> {
        self.near_miss
    }
}

/// Checks a record against a presented host key: the key algorithms must
/// agree and the digest of the key blob under the record's hash type must
/// equal the published fingerprint. DNSSEC trust is not considered here.
pub fn match_record(record: &SshfpRecord, key: &HostKey) -> MatchOutcome {
    if !record.key_algo.is_assigned() || !record.hash_type.is_assigned() {
        return MatchOutcome::new(MatchReason::UnassignedField, None);
    }
    let digest_ok =
        |h: HashType| compute_fingerprint(key.blob(), h).is_ok_and(|d| d == record.fingerprint);
    if key.key_algo() != Some(record.key_algo) {
        let near = digest_ok(record.hash_type).then_some(NearMiss::WrongKeyAlgo);
        return MatchOutcome::new(MatchReason::AlgoMismatch, near);
    }
    if digest_ok(record.hash_type) {
        return MatchOutcome::new(MatchReason::Ok, None);
    }
    let near = HashType::ALL
        .into_iter()
        .find(|&h| h != record.hash_type && digest_ok(h))
        .map(NearMiss::DigestUnderHashType);
    MatchOutcome::new(MatchReason::DigestMismatch, near)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("host key algorithm {0:?} has no SSHFP code")]
    UnknownAlgo(String),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
}

/// Builds the SSHFP records publishing `keys`, one per key and hash type,
/// sorted and free of duplicates.
pub fn generate_records(
    keys: &[HostKey],
    hash_types: &[HashType],
) -> Result<Vec<SshfpRecord>, GenerateError> {
    let mut out = Vec::with_capacity(keys.len() * hash_types.len());
    for key in keys {
        let algo = key
            .key_algo()
            .ok_or_else(|| GenerateError::UnknownAlgo(key.algo_name().to_owned()))?;
        for &hash_type in hash_types {
            out.push(SshfpRecord::new(
                algo,
                hash_type,
                key.fingerprint(hash_type)?,
            ));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ssh_string(out: &mut Vec<u8>, data: &[u8]) {
        out.extend_from_slice(&(data.len() as u32).to_be_bytes());
        out.extend_from_slice(data);
    }

    fn blob(name: &str, body: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        ssh_string(&mut out, name.as_bytes());
        ssh_string(&mut out, body);
        out
    }

    #[test]
    fn parses_presentation_format() {
        let r = parse_record("1 1 dd465c09cfa51fb45b2b0774584fea852350d32f").unwrap();
        assert_eq!(r.key_algo, KeyAlgo::RSA);
        assert_eq!(r.hash_type, HashType::SHA1);
        assert_eq!(r.fingerprint.len(), 20);
        assert_eq!(r.fingerprint[0], 0xdd);

        let line = format!("SSHFP 4 2 {}", "Ab".repeat(32));
        let r = parse_record(&line).unwrap();
        assert_eq!(
            (r.key_algo, r.hash_type),
            (KeyAlgo::ED25519, HashType::SHA256)
        );
        assert_eq!(r.fingerprint, vec![0xab; 32]);
    }

    #[test]
    fn hex_field_may_contain_whitespace() {
        let r = parse_record("sshfp 3 1 dd465c09cfa51fb4 5b2b0774584fea85\t2350d32f").unwrap();
        assert_eq!(r.fingerprint.len(), 20);
    }

    #[test]
    fn rejects_malformed_text() {
        for bad in [
            "1 1 zz465c09",
            "1 1 abc",
            "1 1",
            "",
            "SSHFP",
            "256 1 00",
            "-1 1 00",
            "x 1 00",
            "1 +1 00",
        ] {
            assert!(
                matches!(parse_record(bad), Err(ParseError::Malformed(_))),
                "{bad:?} should be malformed"
            );
        }
    }

    #[test]
    fn unassigned_codes_decode() {
        let r = parse_record("5 9 0011").unwrap();
        assert_eq!(r.key_algo.code(), 5);
        assert_eq!(r.hash_type.code(), 9);
        assert!(r.key_algo.name().is_none());
    }

    #[test]
    fn rdata_layout() {
        let mut wire = vec![1, 1];
        wire.extend([7u8; 20]);
        let r = parse_rdata(&wire).unwrap();
        assert_eq!((r.key_algo, r.hash_type), (KeyAlgo::RSA, HashType::SHA1));
        assert_eq!(r.fingerprint, vec![7u8; 20]);
        assert_eq!(r.to_rdata(), wire);

        let mut wire = vec![4, 2];
        wire.extend(0u8..32);
        let r = parse_rdata(&wire).unwrap();
        assert_eq!(
            (r.key_algo, r.hash_type),
            (KeyAlgo::ED25519, HashType::SHA256)
        );
        assert_eq!(r.fingerprint, (0u8..32).collect::<Vec<_>>());

        assert!(parse_rdata(&[1, 1]).is_err());
        assert!(parse_rdata(&[]).is_err());
    }

    #[test]
    fn serializes_lowercase() {
        let r = SshfpRecord::new(KeyAlgo::RSA, HashType::SHA1, vec![0; 20]);
        assert_eq!(serialize_record(&r), format!("1 1 {}", "0".repeat(40)));
        let d: Vec<u8> = (0xe0u8..0xff).chain([0xff]).collect();
        let r = SshfpRecord::new(KeyAlgo::ED448, HashType::SHA256, d.clone());
        assert_eq!(serialize_record(&r), format!("6 2 {}", hex::encode(&d)));
        assert_eq!(parse_record(&serialize_record(&r)).unwrap(), r);
    }

    #[test]
    fn validation_reasons() {
        let v = |a: u8, h: u8, n: usize| {
            validate_record(&SshfpRecord::new(KeyAlgo(a), HashType(h), vec![0; n]))
        };
        assert_eq!(
            v(5, 1, 20),
            Validity::Invalid(InvalidReason::UnassignedKeyAlgo)
        );
        assert_eq!(
            v(1, 2, 20),
            Validity::Invalid(InvalidReason::LengthMismatch)
        );
        assert_eq!(v(3, 2, 32), Validity::Valid);
        assert_eq!(
            v(0, 1, 20),
            Validity::Invalid(InvalidReason::ReservedKeyAlgo)
        );
        assert_eq!(
            v(1, 0, 20),
            Validity::Invalid(InvalidReason::ReservedHashType)
        );
        assert_eq!(
            v(1, 3, 20),
            Validity::Invalid(InvalidReason::UnassignedHashType)
        );
        assert_eq!(v(6, 1, 20), Validity::Valid);
    }

    #[test]
    fn ssh_names() {
        assert_eq!(
            key_algo_from_ssh_name("ssh-ed25519"),
            Some(KeyAlgo::ED25519)
        );
        assert_eq!(
            key_algo_from_ssh_name("ecdsa-sha2-nistp384"),
            Some(KeyAlgo::ECDSA)
        );
        assert_eq!(key_algo_from_ssh_name("ssh-rsa"), Some(KeyAlgo::RSA));
        assert_eq!(key_algo_from_ssh_name("ssh-dss"), Some(KeyAlgo::DSA));
        assert_eq!(key_algo_from_ssh_name("ssh-ed448"), Some(KeyAlgo::ED448));
        assert_eq!(key_algo_from_ssh_name("ssh-kyber-hybrid"), None);
    }

    #[test]
    fn empty_blob_digests() {
        let sha256 = compute_fingerprint(&[], HashType::SHA256).unwrap();
        assert_eq!(hex::encode(&sha256[..4]), "e3b0c442");
        let sha1 = compute_fingerprint(&[], HashType::SHA1).unwrap();
        assert_eq!(hex::encode(&sha1[..4]), "da39a3ee");
        assert_eq!(
            compute_fingerprint(&[], HashType::RESERVED),
            Err(FingerprintError::UnsupportedHash(HashType::RESERVED))
        );
    }

    #[test]
    fn host_key_encoding() {
        let b = blob("ssh-ed25519", &[9; 32]);
        let key = HostKey::from_blob(b.clone()).unwrap();
        assert_eq!(key.algo_name(), "ssh-ed25519");
        assert!(HostKey::new("ssh-rsa", b.clone()).is_err());
        assert_eq!(HostKey::from_blob(vec![]), Err(HostKeyError::Empty));
        assert_eq!(
            HostKey::from_blob(vec![0, 0, 0, 9, b'x']),
            Err(HostKeyError::BadEncoding)
        );
        let round = HostKey::from_openssh(&format!("{} comment", key.to_openssh())).unwrap();
        assert_eq!(round, key);
        let json = serde_json::to_string(&key).unwrap();
        assert_eq!(serde_json::from_str::<HostKey>(&json).unwrap(), key);
    }

    #[test]
    fn matching_conditions() {
        let b = blob("ssh-ed25519", &[3; 32]);
        let key = HostKey::from_blob(b.clone()).unwrap();
        let digest = compute_fingerprint(&b, HashType::SHA256).unwrap();

        let ok = SshfpRecord::new(KeyAlgo::ED25519, HashType::SHA256, digest.clone());
        assert_eq!(match_record(&ok, &key).reason(), MatchReason::Ok);
        assert!(match_record(&ok, &key).matched());

        let wrong_algo = SshfpRecord::new(KeyAlgo::RSA, HashType::SHA256, digest.clone());
        let out = match_record(&wrong_algo, &key);
        assert_eq!(out.reason(), MatchReason::AlgoMismatch);
        assert_eq!(out.near_miss(), Some(NearMiss::WrongKeyAlgo));
        assert!(!out.matched());

        let mut flipped = digest.clone();
        flipped[7] ^= 0x01;
        let bad = SshfpRecord::new(KeyAlgo::ED25519, HashType::SHA256, flipped);
        assert_eq!(
            match_record(&bad, &key).reason(),
            MatchReason::DigestMismatch
        );
        assert_eq!(match_record(&bad, &key).near_miss(), None);

        let unassigned = SshfpRecord::new(KeyAlgo(5), HashType::SHA256, digest.clone());
        assert_eq!(
            match_record(&unassigned, &key).reason(),
            MatchReason::UnassignedField
        );
    }

    #[test]
    fn near_miss_hash_swap() {
        let b = blob("ssh-ed25519", &[4; 32]);
        let key = HostKey::from_blob(b.clone()).unwrap();
        // SHA-256 digest published under the SHA-1 code.
        let rec = SshfpRecord::new(
            KeyAlgo::ED25519,
            HashType::SHA1,
            compute_fingerprint(&b, HashType::SHA256).unwrap(),
        );
        let out = match_record(&rec, &key);
        assert_eq!(out.reason(), MatchReason::DigestMismatch);
        assert_eq!(
            out.near_miss(),
            Some(NearMiss::DigestUnderHashType(HashType::SHA256))
        );
    }

    #[test]
    fn generation() {
        let ed = HostKey::from_blob(blob("ssh-ed25519", &[1; 32])).unwrap();
        let recs = generate_records(std::slice::from_ref(&ed), &HashType::ALL).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(
            recs.iter()
                .map(|r| (r.key_algo.code(), r.hash_type.code()))
                .collect::<Vec<_>>(),
            vec![(4, 1), (4, 2)]
        );
        assert!(recs.iter().all(SshfpRecord::is_valid));
        assert!(recs.iter().all(|r| match_record(r, &ed).matched()));

        let keys = [
            HostKey::from_blob(blob("ssh-rsa", &[2; 64])).unwrap(),
            HostKey::from_blob(blob("ssh-dss", &[3; 64])).unwrap(),
            HostKey::from_blob(blob("ecdsa-sha2-nistp256", &[4; 65])).unwrap(),
            ed.clone(),
        ];
        let recs = generate_records(&keys, &HashType::ALL).unwrap();
        assert_eq!(recs.len(), 8);
        assert!(recs.windows(2).all(|w| w[0] < w[1]));

        let odd = HostKey::from_blob(blob("ssh-kyber-hybrid", &[1])).unwrap();
        assert!(matches!(
            generate_records(&[odd], &HashType::ALL),
            Err(GenerateError::UnknownAlgo(_))
        ));
    }

    #[test]
    fn record_json_is_presentation_text() {
        let r = SshfpRecord::new(KeyAlgo::ECDSA, HashType::SHA1, vec![0xAB; 20]);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, format!("\"3 1 {}\"", "ab".repeat(20)));
        assert_eq!(serde_json::from_str::<SshfpRecord>(&json).unwrap(), r);
    }
}
